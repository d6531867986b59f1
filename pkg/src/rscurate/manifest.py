"""Line-delimited JSON stage manifests and ledger serialization.

A stage manifest has one JSON object per line: the SourceRecord fields plus
`disposition`. Downstream stages consume only the lines whose disposition is
`kept`. All JSON is emitted with sorted keys and no timestamps so reruns are
byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import ValidationError
from .records import Disposition, PipelineLedger, SourceRecord


def dumps_canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


@dataclass
class ManifestLineError:
    line_number: int
    error: str


def write_manifest(path: str | Path, rows: Iterable[tuple[SourceRecord, Disposition]]) -> int:
    """Write (record, disposition) rows; returns the number of lines written."""
    n = 0
    with open(path, "w", encoding="utf-8") as f:
        for record, disposition in rows:
            d = record.to_json_dict()
            d["disposition"] = disposition.value
            f.write(dumps_canonical(d))
            f.write("\n")
            n += 1
    return n


def read_manifest(
    path: str | Path,
    errors: list[ManifestLineError] | None = None,
) -> Iterator[tuple[SourceRecord, Disposition]]:
    """Yield (record, disposition) rows from a stage manifest.

    Malformed lines are skipped and appended to `errors` when a list is given;
    without one, the first malformed line raises ValidationError.
    """
    with open(path, "r", encoding="utf-8") as f:
        for i, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                d = json.loads(line)
                disposition = Disposition(d.pop("disposition", "kept"))
                record = SourceRecord.from_json_dict(d)
            except Exception as exc:
                if errors is None:
                    raise ValidationError(f"{path}:{i}: malformed manifest line: {exc}") from exc
                errors.append(ManifestLineError(i, str(exc)))
                continue
            yield record, disposition


def read_kept(path: str | Path, errors: list[ManifestLineError] | None = None) -> Iterator[SourceRecord]:
    for record, disposition in read_manifest(path, errors):
        if disposition is Disposition.KEPT:
            yield record


def write_ledger(path: str | Path, ledger: PipelineLedger) -> None:
    Path(path).write_text(json.dumps(ledger.to_json_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8")


def read_ledger(path: str | Path) -> PipelineLedger:
    return PipelineLedger.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))
