"""Keyword filtering of captions against the two bundled keyword groups.

Group 1 holds lowercase stems ("aerial imag" is a prefix that also hits
"aerial imagery"); group 2 holds proper-noun phrases ("Google Earth"). Both
match case-insensitively starting at a word boundary. Matching runs over the
UTF-8 bytes of the caption with ASCII case folding, which keeps the hot path
at several hundred thousand captions per second per core and makes reported
offsets true byte offsets.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ValidationError
from .records import Disposition, PipelineLedger, SourceRecord


@dataclass(frozen=True)
class KeywordSet:
    group1: tuple[str, ...]
    group2: tuple[str, ...]

    def __post_init__(self) -> None:
        problems = []
        for name, terms in (("group1", self.group1), ("group2", self.group2)):
            if any(not t or not t.strip() for t in terms):
                problems.append(f"{name} contains an empty keyword")
            if len(set(t.lower() for t in terms)) != len(terms):
                problems.append(f"{name} contains duplicates")
        if not self.group1 and not self.group2:
            problems.append("keyword set is empty")
        if problems:
            raise ValidationError(problems)


@dataclass(frozen=True)
class KeywordMatch:
    keyword: str
    group: int  # 1 or 2
    byte_offset: int


def load_keyword_set(path: str | Path | None = None) -> KeywordSet:
    """Load a keyword config: a JSON object with `group1` and `group2` arrays.

    Without a path, the bundled default set is used.
    """
    if path is None:
        text = resources.files("rscurate.data").joinpath("keywords.json").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    d = json.loads(text)
    return KeywordSet(group1=tuple(d.get("group1", ())), group2=tuple(d.get("group2", ())))


def _term_pattern(term: str) -> bytes:
    # Literal bytes, except whitespace inside a term matches any whitespace run.
    return re.escape(term.lower().encode("utf-8")).replace(rb"\ ", rb"\s+")


class KeywordMatcher:
    """Compiled matcher over both keyword groups.

    Longer terms win at the same position; matches are leftmost and
    non-overlapping. Word boundaries and case folding are ASCII-only, which is
    exact for the bundled English keyword lists.
    """

    def __init__(self, keyword_set: KeywordSet):
        self.keyword_set = keyword_set
        terms: list[tuple[str, int]] = [(t, 1) for t in keyword_set.group1]
        terms += [(t, 2) for t in keyword_set.group2]
        # Longest first so the alternation prefers the longest term at a position.
        terms.sort(key=lambda kg: (-len(kg[0]), kg[0]))
        self._terms = terms
        alternation = b"|".join(_term_pattern(t) for t, _ in terms)
        self._search = re.compile(rb"\b(?:" + alternation + rb")").search
        grouped = b"|".join(b"(" + _term_pattern(t) + b")" for t, _ in terms)
        self._finditer = re.compile(rb"\b(?:" + grouped + rb")").finditer

    def has_match(self, text: str) -> bool:
        return self._search(text.encode("utf-8").lower()) is not None

    def match_caption(self, text: str) -> list[KeywordMatch]:
        """All non-overlapping leftmost matches, tagged with keyword and group."""
        out = []
        for m in self._finditer(text.encode("utf-8").lower()):
            keyword, group = self._terms[m.lastindex - 1]
            out.append(KeywordMatch(keyword=keyword, group=group, byte_offset=m.start()))
        return out


def compile_keywords(keyword_set: KeywordSet) -> KeywordMatcher:
    return KeywordMatcher(keyword_set)


def filter_records(
    matcher: KeywordMatcher,
    records: Iterable[SourceRecord],
    stage: str = "keywords",
    passthrough_sources: Sequence[str] = (),
) -> tuple[list[tuple[SourceRecord, Disposition]], PipelineLedger]:
    """Keep records whose caption matches at least one keyword.

    Records from `passthrough_sources` are kept unexamined (their captions are
    produced later in the pipeline). Returns all rows with dispositions plus
    the stage ledger.
    """
    passthrough = frozenset(passthrough_sources)
    ledger = PipelineLedger()
    rows = []
    for record in records:
        if record.source in passthrough or matcher.has_match(record.caption):
            disposition = Disposition.KEPT
        else:
            disposition = Disposition.REMOVED_NO_KEYWORD_MATCH
        ledger.record(record.source, stage, disposition)
        rows.append((record, disposition))
    return rows, ledger


def keyword_histogram(matcher: KeywordMatcher, captions: Iterable[str]) -> dict[str, int]:
    """Total match count per keyword across a caption stream."""
    counts: Counter = Counter()
    for caption in captions:
        for m in matcher.match_caption(caption):
            counts[m.keyword] += 1
    return dict(counts)


def write_histogram_csv(path: str | Path, counts: dict[str, int]) -> None:
    lines = ["keyword,count"]
    for keyword, count in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])):
        quoted = '"%s"' % keyword.replace('"', '""') if "," in keyword else keyword
        lines.append(f"{quoted},{count}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
