"""Concurrent image fetching with validation and exact disposition accounting.

A bounded thread pool downloads record URLs; per-host admission semaphores cap
the in-flight requests against any one host. 4xx responses are terminal,
timeouts and 5xx retry with doubling backoff. Payloads are stored
content-addressed (sha256, two-level fan-out) so duplicate content is written
once and reruns skip digests already present. Results are emitted in input
order, which keeps the output manifest reproducible.
"""

from __future__ import annotations

import hashlib
import io
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence
from urllib.parse import urlsplit

import requests
from PIL import Image

from .errors import RscurateError, ValidationError
from .records import Disposition, PipelineLedger, SourceRecord

ALLOWED_FORMATS = {"JPEG", "PNG", "GIF", "WEBP", "TIFF"}


@dataclass
class FetchPolicy:
    global_concurrency: int = 128
    per_host_concurrency: int = 4
    retries: int = 3
    backoff_base_s: float = 0.5  # doubles per retry
    timeout_s: float = 30.0

    def __post_init__(self) -> None:
        problems = []
        if self.global_concurrency < 1:
            problems.append(f"global_concurrency must be >= 1, got {self.global_concurrency}")
        if self.per_host_concurrency < 1:
            problems.append(f"per_host_concurrency must be >= 1, got {self.per_host_concurrency}")
        if self.per_host_concurrency > self.global_concurrency:
            problems.append("per_host_concurrency must not exceed global_concurrency")
        if self.retries < 0:
            problems.append(f"retries must be >= 0, got {self.retries}")
        if problems:
            raise ValidationError(problems)


class InvalidImageError(RscurateError):
    """Payload is not a usable image; `reason` is ZeroSize or Undecodable."""

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


def validate_image(data: bytes) -> tuple[int, int]:
    """Pixel dimensions of a decodable JPEG/PNG/GIF/WebP/TIFF payload.

    Empty payloads raise InvalidImageError("ZeroSize"); anything that cannot
    be decoded as one of the allowed formats raises
    InvalidImageError("Undecodable").
    """
    if len(data) == 0:
        raise InvalidImageError("ZeroSize")
    try:
        with Image.open(io.BytesIO(data)) as img:
            fmt = img.format
            width, height = img.size
            img.verify()
    except InvalidImageError:
        raise
    except Exception:
        raise InvalidImageError("Undecodable") from None
    if fmt not in ALLOWED_FORMATS:
        raise InvalidImageError("Undecodable")
    return width, height


class ContentStore:
    """Digest-named payload files under a two-level fan-out directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def digest(data: bytes) -> str:
        return hashlib.sha256(data).hexdigest()

    def path_for(self, digest: str) -> Path:
        return self.root / digest[:2] / digest[2:4] / digest

    def put(self, data: bytes) -> str:
        digest = self.digest(data)
        path = self.path_for(digest)
        if not path.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
            # Unique tmp name per writer: concurrent stores of identical
            # payloads must not race on the same staging file.
            tmp = path.parent / f".{digest}.{threading.get_ident()}.tmp"
            tmp.write_bytes(data)
            tmp.replace(path)
        return digest

    def get(self, digest: str) -> bytes:
        return self.path_for(digest).read_bytes()

    def has(self, digest: str) -> bool:
        return self.path_for(digest).exists()


@dataclass
class FetchOutcome:
    record_id: str
    status: str  # Fetched | FetchFailed | InvalidImage
    http_code: int | None = None
    content_hash: str | None = None
    width: int | None = None
    height: int | None = None
    error: str | None = None

    def to_json_dict(self) -> dict:
        out = {"record_id": self.record_id, "status": self.status}
        for name in ("http_code", "content_hash", "width", "height", "error"):
            v = getattr(self, name)
            if v is not None:
                out[name] = v
        return out

    @property
    def disposition(self) -> Disposition:
        if self.status == "Fetched":
            return Disposition.KEPT
        if self.status == "InvalidImage":
            return Disposition.REMOVED_INVALID_IMAGE
        return Disposition.FETCH_FAILED


class _HostGates:
    """Per-host admission semaphores, created on first use."""

    def __init__(self, limit: int):
        self._limit = limit
        self._lock = threading.Lock()
        self._gates: dict[str, threading.BoundedSemaphore] = {}

    def gate(self, host: str) -> threading.BoundedSemaphore:
        with self._lock:
            gate = self._gates.get(host)
            if gate is None:
                gate = self._gates[host] = threading.BoundedSemaphore(self._limit)
            return gate


def fetch_one(
    url: str,
    policy: FetchPolicy,
    store: ContentStore,
    record_id: str = "",
    session: requests.Session | None = None,
    sleep=time.sleep,
) -> FetchOutcome:
    """Fetch one URL: retry timeouts and 5xx, treat 4xx as terminal, validate
    and store the payload on success."""
    parts = urlsplit(url)
    if parts.scheme.lower() not in ("http", "https") or not parts.netloc:
        return FetchOutcome(record_id=record_id, status="FetchFailed", error=f"InvalidUrl: {url!r}")
    http = session or requests
    attempts: list[str] = []
    delay = policy.backoff_base_s
    for attempt in range(policy.retries + 1):
        try:
            resp = http.get(url, timeout=policy.timeout_s)
        except requests.Timeout:
            attempts.append("timeout")
        except requests.RequestException as exc:
            # Connection-level failures are terminal: only timeouts and 5xx retry.
            return FetchOutcome(record_id=record_id, status="FetchFailed", error=f"ConnectionError: {exc}")
        else:
            code = resp.status_code
            if code == 200:
                data = resp.content
                try:
                    width, height = validate_image(data)
                except InvalidImageError as exc:
                    return FetchOutcome(
                        record_id=record_id, status="InvalidImage", http_code=code, error=exc.reason
                    )
                return FetchOutcome(
                    record_id=record_id,
                    status="Fetched",
                    http_code=code,
                    content_hash=store.put(data),
                    width=width,
                    height=height,
                )
            if 400 <= code < 500:
                return FetchOutcome(record_id=record_id, status="FetchFailed", http_code=code, error="NotFound")
            attempts.append(f"http {code}")
        if attempt < policy.retries:
            sleep(delay)
            delay *= 2
    last_code = None
    for a in reversed(attempts):
        if a.startswith("http "):
            last_code = int(a.split()[1])
            break
    error = "Timeout" if all(a == "timeout" for a in attempts) else "TooManyRetries"
    return FetchOutcome(
        record_id=record_id, status="FetchFailed", http_code=last_code, error=f"{error}: {', '.join(attempts)}"
    )


def run_fetch(
    records: Iterable[SourceRecord],
    policy: FetchPolicy,
    store: ContentStore,
    stage: str = "fetch",
) -> tuple[list[tuple[SourceRecord, Disposition]], list[FetchOutcome], PipelineLedger]:
    """Fetch every record once; output rows follow input order exactly.

    Records that already carry an image_ref pass through untouched; records
    with neither URL nor image_ref fail. Successful fetches get image_ref set
    to the payload digest.
    """
    records = list(records)
    sessions = threading.local()
    gates = _HostGates(policy.per_host_concurrency)

    def worker(index: int, record: SourceRecord) -> tuple[int, FetchOutcome | None]:
        if record.image_ref:
            return index, None  # pre-resolved, passes through
        if not record.url:
            return index, FetchOutcome(record_id=record.record_id, status="FetchFailed", error="NoUrl")
        if not hasattr(sessions, "s"):
            sessions.s = requests.Session()
        host = urlsplit(record.url).netloc.lower()
        with gates.gate(host):
            return index, fetch_one(record.url, policy, store, record.record_id, session=sessions.s)

    results: dict[int, FetchOutcome | None] = {}
    if records:
        with ThreadPoolExecutor(max_workers=policy.global_concurrency) as pool:
            for index, outcome in pool.map(lambda iv: worker(*iv), enumerate(records)):
                results[index] = outcome
    ledger = PipelineLedger()
    rows: list[tuple[SourceRecord, Disposition]] = []
    outcomes: list[FetchOutcome] = []
    for index, record in enumerate(records):
        outcome = results[index]
        if outcome is None:
            disposition = Disposition.KEPT
            outcomes.append(
                FetchOutcome(record_id=record.record_id, status="Fetched", content_hash=record.image_ref)
            )
        else:
            outcomes.append(outcome)
            disposition = outcome.disposition
            if outcome.status == "Fetched":
                record = SourceRecord(
                    record_id=record.record_id,
                    source=record.source,
                    caption=record.caption,
                    url=record.url,
                    meta=record.meta,
                    image_ref=outcome.content_hash,
                )
        ledger.record(record.source, stage, disposition)
        rows.append((record, disposition))
    return rows, outcomes, ledger


def write_outcomes(path: str | Path, outcomes: Sequence[FetchOutcome]) -> None:
    import json

    with open(path, "w", encoding="utf-8") as f:
        for outcome in outcomes:
            f.write(json.dumps(outcome.to_json_dict(), sort_keys=True, separators=(",", ":")))
            f.write("\n")
