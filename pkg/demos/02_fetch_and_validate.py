"""Fetch a small batch against a local stub server with planted faults.

The stub simulates dead links (404), zero-byte responses, undecodable
payloads, and a flaky endpoint that returns 503 twice before succeeding.
Every input record ends with exactly one disposition and the ledger conserves.
"""

import tempfile

from rscurate.fetch import ContentStore, FetchPolicy, run_fetch
from rscurate.records import SourceRecord
from rscurate.testing import StubImageServer

with StubImageServer() as stub:
    records = [
        SourceRecord(record_id="good-1", source="laion2b", caption="", url=stub.url("/img/a")),
        SourceRecord(record_id="good-2", source="laion2b", caption="", url=stub.url("/img/b")),
        SourceRecord(record_id="dead", source="wit", caption="", url=stub.url("/missing/x")),
        SourceRecord(record_id="empty", source="wit", caption="", url=stub.url("/zero/y")),
        SourceRecord(record_id="noise", source="cc3m", caption="", url=stub.url("/garbage/z")),
        SourceRecord(record_id="flaky", source="cc3m", caption="", url=stub.url("/flaky/2/w")),
    ]
    policy = FetchPolicy(global_concurrency=4, per_host_concurrency=4, retries=3, backoff_base_s=0.05)
    store = ContentStore(tempfile.mkdtemp(prefix="demo-store-"))
    rows, outcomes, ledger = run_fetch(records, policy, store)

print("outcomes:")
for outcome in outcomes:
    extra = outcome.error or f"{outcome.width}x{outcome.height} sha256:{outcome.content_hash[:12]}..."
    print(f"  {outcome.record_id:8s} {outcome.status:12s} {extra}")

print("\nflaky endpoint needed", len(stub.requests_for("/flaky/2/w")), "requests (2 retries)")
print("ledger conserves:", ledger.verify_conservation() == [])
print("store root:", store.root)
