import json

import pytest

from dsaf.optimizer import build_instance, solve
from dsaf.store import EVENT_KINDS, EventStore, StoreError
from dsaf.topology import (apply_placement, compute_path_table,
                           load_topology, reference_testbed)

from conftest import make_request


def _store(tmp_path):
    return EventStore(tmp_path / "store")


def _solved(topology, request):
    pt = compute_path_table(topology)
    return solve(build_instance(request, topology, pt)).placement


def test_sequences_are_dense_from_zero(tmp_path):
    store = _store(tmp_path)
    r = make_request()
    assert store.record_request(r) == 0
    assert store.append("Rejected", {"request_id": r.id, "reason": "x"}) == 1
    assert [e["seq"] for e in store.events()] == [0, 1]


def test_unknown_kind_rejected(tmp_path):
    store = _store(tmp_path)
    with pytest.raises(StoreError, match="unknown event kind"):
        store.append("Exploded", {})
    assert "Exploded" not in EVENT_KINDS


def test_events_round_trip_payloads(tmp_path):
    store = _store(tmp_path)
    r = make_request(request_id=5, cpu=(0.4, 0.8, 0.3))
    store.record_request(r)
    entry = store.events()[0]
    assert entry["kind"] == "RequestReceived"
    from dsaf.slices import SliceRequest
    assert SliceRequest.from_dict(entry["payload"]) == r


def test_persist_scheme_blocks_live_duplicates(tmp_path, reference_topology):
    store = _store(tmp_path)
    r = make_request(request_id=1)
    p = _solved(reference_topology, r)
    store.persist_scheme(p)
    with pytest.raises(StoreError, match="live scheme for request 1"):
        store.persist_scheme(p)


def test_resubmission_allowed_after_release_or_failure(tmp_path, reference_topology):
    store = _store(tmp_path)
    r = make_request(request_id=1)
    p = _solved(reference_topology, r)
    store.persist_scheme(p)
    store.append("Deallocated", {"request_id": 1})
    store.persist_scheme(p)  # released -> a new life is fine
    store.append("Failed", {"request_id": 1, "reason": "fault"})
    store.persist_scheme(p)  # failed -> same


def test_scheme_for_returns_stored_placement(tmp_path, reference_topology):
    store = _store(tmp_path)
    r = make_request(request_id=3)
    p = _solved(reference_topology, r)
    store.persist_scheme(p)
    assert store.scheme_for(3) == p
    with pytest.raises(StoreError, match="no stored scheme"):
        store.scheme_for(99)


def test_reload_continues_the_sequence(tmp_path, reference_topology):
    store = _store(tmp_path)
    r = make_request(request_id=1)
    store.record_request(r)
    store.persist_scheme(_solved(reference_topology, r))

    reopened = EventStore(store.dir)
    assert reopened.append("Placed", {"request_id": 1}) == 2
    assert [e["seq"] for e in reopened.events()] == [0, 1, 2]
    # liveness folded from disk: duplicate still refused after reopen
    with pytest.raises(StoreError, match="live scheme"):
        reopened.persist_scheme(_solved(reference_topology, r))


def test_corrupt_line_names_the_sequence(tmp_path):
    store = _store(tmp_path)
    store.record_request(make_request())
    with open(store.events_path, "a") as fh:
        fh.write("{not json\n")
    with pytest.raises(StoreError, match="corrupt event at sequence 1"):
        store.events()


def test_sequence_gap_names_the_sequence(tmp_path):
    store = _store(tmp_path)
    store.record_request(make_request())
    entry = {"seq": 5, "ts": 0.0, "kind": "Placed", "payload": {}}
    with open(store.events_path, "a") as fh:
        fh.write(json.dumps(entry) + "\n")
    with pytest.raises(StoreError, match="sequence gap at 1"):
        store.events()


def test_truncated_tail_is_detected(tmp_path):
    store = _store(tmp_path)
    store.record_request(make_request(request_id=0))
    store.record_request(make_request(request_id=1))
    text = store.events_path.read_text()
    store.events_path.write_text(text[:-20])  # chop mid-record
    with pytest.raises(StoreError, match="corrupt event at sequence 1"):
        store.events()


def test_load_state_folds_residuals(tmp_path, reference_topology):
    store = _store(tmp_path)
    base = load_topology(reference_testbed())
    r = make_request(request_id=0, cpu=(1.0, 1.0, 1.0))
    p = _solved(reference_topology, r)

    store.record_request(r)
    store.persist_scheme(p)
    store.append("Placed", {"request_id": 0})

    live = base.copy()
    apply_placement(live, p, r)
    folded, active, _ = store.load_state(base)
    assert folded.snapshot_json() == live.snapshot_json()
    assert set(active) == {0}
    assert active[0] == (p, r)

    store.append("Deallocated", {"request_id": 0})
    folded2, active2, _ = store.load_state(base)
    assert folded2.snapshot_json() == base.snapshot_json()
    assert active2 == {}


def test_rejected_and_failed_leave_no_residuals(tmp_path, reference_topology):
    store = _store(tmp_path)
    base = load_topology(reference_testbed())
    r = make_request(request_id=0)
    store.record_request(r)
    store.append("Rejected", {"request_id": 0, "reason": "no feasible placement"})
    r2 = make_request(request_id=1)
    store.record_request(r2)
    store.persist_scheme(_solved(reference_topology, r2))
    store.append("Failed", {"request_id": 1, "reason": "agent P2 unreachable"})
    folded, active, _ = store.load_state(base)
    assert folded.snapshot_json() == base.snapshot_json()
    assert active == {}


def test_write_ahead_ok_detects_violation(tmp_path, reference_topology):
    store = _store(tmp_path)
    r = make_request(request_id=0)
    store.record_request(r)
    store.persist_scheme(_solved(reference_topology, r))
    store.append("Placed", {"request_id": 0})
    assert store.write_ahead_ok()

    bad = _store(tmp_path / "bad")
    bad.record_request(r)
    bad.append("Placed", {"request_id": 0})  # no SchemeStored first
    assert not bad.write_ahead_ok()


def test_metrics_rows_gated_on_terminal_state(tmp_path):
    from dsaf.orchestrator import RequestRecord
    store = _store(tmp_path)
    record = RequestRecord(request=make_request(), allocator="dsaf")
    with pytest.raises(StoreError, match="non-terminal"):
        store.record_metrics(record)

    record.transition("Solving")
    record.transition("Rejected")
    record.processing_time_ms = 1.25
    record.computation_time_ms = 0.75
    store.record_metrics(record)
    rows = store.metrics_rows()
    assert rows == [{
        "request_id": record.request.id,
        "allocator": "dsaf",
        "outcome": "Rejected",
        "processing_time_ms": 1.25,
        "computation_time_ms": 0.75,
    }]


def test_metrics_survive_reopen(tmp_path):
    from dsaf.orchestrator import RequestRecord
    store = _store(tmp_path)
    record = RequestRecord(request=make_request(), allocator="fcfsfa")
    record.transition("Solving")
    record.transition("Rejected")
    record.processing_time_ms = 1.0
    record.computation_time_ms = 0.5
    store.record_metrics(record)
    assert EventStore(store.dir).metrics_rows() == store.metrics_rows()


def test_empty_store_reads_cleanly(tmp_path):
    store = _store(tmp_path)
    assert store.events() == []
    assert store.metrics_rows() == []
    assert store.write_ahead_ok()
