from __future__ import annotations

import time
from datetime import datetime

import pytest
from fastapi.testclient import TestClient

from everlearn.allpairs import build_table
from everlearn.corpus import Document
from everlearn.kb import QueuedCandidate, candidate_id
from everlearn.ontology import CategorySpec, build_initial_kb, build_ontology
from everlearn.profiles import LanguageProfile
from everlearn.service import create_app, render_human

TOY = LanguageProfile(name="toy", min_gram=3, max_gram=3)

T1 = "melts under intense heat"
T2 = "rusts in damp air"
T3 = "bends beneath heavy load"
P1, P2, P3 = ("melts under intense", "rusts in damp", "bends beneath heavy")

SEEDS = ("IronA", "ZincB", "CopperC")


def forge_ontology():
    return build_ontology(
        [
            CategorySpec("metal", SEEDS, "X is a metal"),
            CategorySpec("river", ("NileX",), "X is a river"),
        ],
        [],
    )


def forge_table():
    lines = [f"{ne} {t}." for ne in SEEDS for t in (T1, T2, T3)]
    lines += [f"Gold {T1}.", f"Gold {T2}."]
    return build_table([Document("forge.txt", "\n".join(lines))], TOY)


def fresh_client(table=True, **kwargs):
    kb = build_initial_kb(forge_ontology(), now=0.0)
    app = create_app(kb, forge_table() if table else None, **kwargs)
    return TestClient(app), kb


def wait_idle(client, timeout=10.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        data = client.get("/status").json()
        if not data["iteration_running"]:
            return data
        time.sleep(0.01)
    raise AssertionError("iteration did not finish in time")


def run_one_iteration(client):
    response = client.post("/iterations", json={})
    assert response.status_code == 202
    return wait_idle(client)


# --- display templates ---


def test_render_human_category():
    assert render_human("X is a metal", "metal", ("Gold",)) == "Gold is a metal"
    assert render_human("the metal X", "metal", ("Gold",)) == "the metal Gold"


def test_render_human_keeps_placeholder_bytes_in_args():
    assert render_human("X is a metal", "metal", ("XYZ",)) == "XYZ is a metal"


def test_render_human_relation_in_either_order():
    assert render_human("X runs Y", "ceoOf", ("Ada", "Acme")) == "Ada runs Acme"
    assert render_human("Y employs X", "ceoOf", ("Ada", "Acme")) == "Acme employs Ada"


def test_render_human_falls_back_without_placeholders():
    assert render_human("", "metal", ("Gold",)) == "metal(Gold)"
    assert render_human("no markers", "ceoOf", ("Ada", "Acme")) == "ceoOf(Ada, Acme)"


# --- status ---


def test_status_reports_fresh_kb():
    client, _ = fresh_client()
    data = client.get("/status").json()
    assert data["iteration"] == 0
    assert data["profile"] is None and data["corpus_fingerprint"] is None
    assert data["assertions"] == {"approved": 0, "promoted": 0, "rejected": 0, "seed": 4}
    assert data["queue_size"] == 0 and data["blacklist_size"] == 0
    assert data["trusted_patterns"] == 0
    assert data["categories"] == ["metal", "river"]
    assert data["relations"] == []
    assert data["iteration_running"] is False
    assert data["last_iteration_error"] is None
    assert data["iterations_available"] is True


# --- queue browsing ---


def queued_client():
    client, kb = fresh_client()
    kb.record_iteration(
        number=1, profile="toy", fingerprint="ff", stats={},
        queued=[
            QueuedCandidate("metal", ("Gold",), 2.0, ((P1, "R", 1), (P2, "R", 1)), 1),
            QueuedCandidate("metal", ("Tin",), 3.0, ((P1, "R", 1),), 1),
            QueuedCandidate("river", ("Aare",), 2.0, ((P1, "R", 1),), 1),
        ],
        expired=[], now=2.0,
    )
    return client, kb


def test_queue_sorted_and_shaped():
    client, _ = queued_client()
    data = client.get("/queue").json()
    assert data["total"] == 3
    assert [(i["predicate"], i["args"][0]) for i in data["items"]] == [
        ("metal", "Tin"), ("metal", "Gold"), ("river", "Aare"),
    ]
    item = data["items"][1]
    assert item["id"] == candidate_id("metal", ("Gold",))
    assert item["score"] == 2.0
    assert item["evidence"] == [[P1, "R", 1], [P2, "R", 1]]
    assert item["queued_at"] == 1
    assert item["human_readable"] == "Gold is a metal"


def test_queue_predicate_filter_and_limit():
    client, _ = queued_client()
    data = client.get("/queue", params={"predicate": "metal", "limit": 1}).json()
    assert data["total"] == 2
    assert [i["args"][0] for i in data["items"]] == ["Tin"]
    assert client.get("/queue", params={"predicate": "galaxy"}).status_code == 404
    assert client.get("/queue", params={"limit": 0}).status_code == 422
    assert client.get("/queue", params={"limit": 9999}).status_code == 422


# --- verdicts ---


def test_approve_updates_assertion():
    client, kb = queued_client()
    target = candidate_id("metal", ("Gold",))
    response = client.post(
        "/verdicts", json={"id": target, "decision": "approve", "supervisor": "ana"}
    )
    assert response.status_code == 200
    body = response.json()
    assert body["id"] == target and body["decision"] == "approve"
    assert body["assertion"]["status"] == "approved"
    assert body["assertion"]["score"] == 2.0
    assert body["assertion"]["human_readable"] == "Gold is a metal"
    datetime.fromisoformat(body["assertion"]["timestamp"])
    assert ("metal", ("Gold",)) not in kb.queue
    data = client.get("/kb/categories/metal/instances", params={"status": "approved"}).json()
    assert [i["args"][0] for i in data["items"]] == ["Gold"]


def test_reject_blacklists_and_removes_from_queue():
    client, kb = queued_client()
    target = candidate_id("metal", ("Tin",))
    response = client.post(
        "/verdicts", json={"id": target, "decision": "reject", "supervisor": "ana"}
    )
    assert response.status_code == 200
    assert response.json()["assertion"]["status"] == "rejected"
    assert ("metal", ("Tin",)) in kb.blacklist
    assert client.get("/status").json()["blacklist_size"] == 1
    # a second verdict on the same key is refused
    repeat = client.post(
        "/verdicts", json={"id": target, "decision": "approve", "supervisor": "ana"}
    )
    assert repeat.status_code == 409


def test_verdict_unknown_id_is_404():
    client, _ = queued_client()
    response = client.post(
        "/verdicts", json={"id": "f" * 16, "decision": "approve", "supervisor": "ana"}
    )
    assert response.status_code == 404


def test_verdict_bad_decision_is_422():
    client, _ = queued_client()
    target = candidate_id("metal", ("Gold",))
    response = client.post(
        "/verdicts", json={"id": target, "decision": "shrug", "supervisor": "ana"}
    )
    assert response.status_code == 422


def test_verdict_constraint_violation_is_409():
    client, kb = fresh_client()
    kb.record_iteration(
        number=1, profile="toy", fingerprint="ff", stats={},
        queued=[QueuedCandidate("river", ("IronA",), 2.0, (), 1)],
        expired=[], now=2.0,
    )
    target = candidate_id("river", ("IronA",))
    response = client.post(
        "/verdicts", json={"id": target, "decision": "approve", "supervisor": "ana"}
    )
    assert response.status_code == 409
    assert "metal" in response.json()["detail"]
    # still reviewable: the rejection path works
    assert ("river", ("IronA",)) in kb.queue
    response = client.post(
        "/verdicts", json={"id": target, "decision": "reject", "supervisor": "ana"}
    )
    assert response.status_code == 200


def test_verdict_request_id_replays_cached_response():
    client, kb = queued_client()
    target = candidate_id("metal", ("Gold",))
    body = {"id": target, "decision": "approve", "supervisor": "ana", "request_id": "req-1"}
    first = client.post("/verdicts", json=body)
    assert first.status_code == 200
    second = client.post("/verdicts", json=body)
    assert second.status_code == 200
    assert second.json() == first.json()
    verdicts = [r for r in kb.records if r.type == "verdict"]
    assert len(verdicts) == 1


# --- instance browsing ---


def test_category_instances_paginate():
    client, _ = fresh_client()
    data = client.get("/kb/categories/metal/instances", params={"limit": 2}).json()
    assert data["total"] == 3 and data["offset"] == 0
    assert [i["args"][0] for i in data["items"]] == ["CopperC", "IronA"]
    data = client.get("/kb/categories/metal/instances", params={"limit": 2, "offset": 2}).json()
    assert [i["args"][0] for i in data["items"]] == ["ZincB"]
    assert data["items"][0]["status"] == "seed"
    assert data["items"][0]["timestamp"] == "1970-01-01T00:00:00+00:00"


def test_instance_endpoints_reject_unknown_names():
    client, _ = fresh_client()
    assert client.get("/kb/categories/galaxy/instances").status_code == 404
    assert client.get("/kb/relations/metal/instances").status_code == 404
    data = client.get("/kb/categories/metal/instances", params={"status": "bogus"}).json()
    assert data["total"] == 0 and data["items"] == []


# --- provenance ---


def test_provenance_events_with_iso_timestamps():
    client, _ = queued_client()
    target = candidate_id("metal", ("Gold",))
    client.post("/verdicts", json={"id": target, "decision": "approve", "supervisor": "ana"})
    data = client.get(
        "/kb/provenance", params={"predicate": "metal", "args": ["Gold"]}
    ).json()
    assert data["status"] == "approved"
    assert data["blacklisted"] is False
    assert data["human_readable"] == "Gold is a metal"
    assert [e["event"] for e in data["events"]] == ["queued", "verdict"]
    for event in data["events"]:
        assert "ts" not in event
        datetime.fromisoformat(event["timestamp"])


def test_provenance_unknown_key_is_empty_not_error():
    client, _ = fresh_client()
    data = client.get(
        "/kb/provenance", params={"predicate": "metal", "args": ["Atlantis"]}
    ).json()
    assert data["events"] == [] and data["status"] == "unknown"
    assert (
        client.get("/kb/provenance", params={"predicate": "galaxy", "args": ["x"]}).status_code
        == 404
    )


# --- iterations ---


def test_iteration_lifecycle():
    client, kb = fresh_client()
    response = client.post("/iterations", json={})
    assert response.status_code == 202
    assert response.json() == {"state": "started", "iteration": 1}
    data = wait_idle(client)
    assert data["iteration"] == 1
    assert data["last_iteration_error"] is None
    assert data["trusted_patterns"] == 3
    assert data["queue_size"] == 1  # Gold, backed by two patterns
    assert [c.args[0] for c in kb.queue_items()] == ["Gold"]


def test_iteration_detail_endpoint():
    client, _ = fresh_client()
    run_one_iteration(client)
    detail = client.get("/iterations/1").json()
    assert detail["number"] == 1
    assert detail["profile"] == "toy"
    assert detail["stats"]["queued"] == 1
    assert [q["args"] for q in detail["queued"]] == [["Gold"]]
    assert sorted(detail["trusted_scores"]) == [
        ["metal", P3, "R", 3, 3],
        ["metal", P1, "R", 3, 3],
        ["metal", P2, "R", 3, 3],
    ]
    datetime.fromisoformat(detail["timestamp"])
    assert client.get("/iterations/7").status_code == 404


def test_approval_raises_pattern_support_in_next_iteration():
    client, _ = fresh_client()
    run_one_iteration(client)
    first = client.get("/iterations/1").json()
    support_before = {tuple(row[:3]): row[3] for row in first["trusted_scores"]}
    target = candidate_id("metal", ("Gold",))
    assert (
        client.post(
            "/verdicts", json={"id": target, "decision": "approve", "supervisor": "ana"}
        ).status_code
        == 200
    )
    run_one_iteration(client)
    second = client.get("/iterations/2").json()
    support_after = {tuple(row[:3]): row[3] for row in second["trusted_scores"]}
    assert support_after[("metal", P1, "R")] == support_before[("metal", P1, "R")] + 1
    assert support_after[("metal", P2, "R")] == support_before[("metal", P2, "R")] + 1
    assert support_after[("metal", P3, "R")] == support_before[("metal", P3, "R")]


def test_iteration_request_id_replay_does_not_rerun():
    client, kb = fresh_client()
    body = {"request_id": "iter-1"}
    first = client.post("/iterations", json=body)
    assert first.status_code == 202
    wait_idle(client)
    second = client.post("/iterations", json=body)
    assert second.status_code == 202
    assert second.json() == first.json()
    wait_idle(client)
    assert kb.iteration == 1


def test_iteration_without_table_is_409():
    client, _ = fresh_client(table=False)
    assert client.get("/status").json()["iterations_available"] is False
    response = client.post("/iterations", json={})
    assert response.status_code == 409


def test_iteration_error_lands_in_status():
    client, kb = fresh_client()
    kb.profile_name = "other"  # simulate a KB built from a different profile
    client.post("/iterations", json={})
    data = wait_idle(client)
    assert data["iteration_running"] is False
    assert "profile" in data["last_iteration_error"]


# --- optional live log and UI hosting ---


def test_verdicts_append_to_live_log(tmp_path):
    from everlearn.kb import dumps_kb, load_kb, persist_kb

    kb = build_initial_kb(forge_ontology(), now=0.0)
    path = tmp_path / "kb.log"
    persist_kb(kb, path)
    kb = load_kb(path)
    client = TestClient(create_app(kb, forge_table(), log_path=path))
    run_one_iteration(client)
    target = candidate_id("metal", ("Gold",))
    client.post("/verdicts", json={"id": target, "decision": "approve", "supervisor": "ana"})
    kb.detach_log()
    assert path.read_text(encoding="utf-8") == dumps_kb(kb)
    reloaded = load_kb(path)
    assert reloaded.assertions[("metal", ("Gold",))].status == "approved"


def test_static_ui_mount(tmp_path):
    ui = tmp_path / "ui"
    ui.mkdir()
    (ui / "index.html").write_text("<html>console</html>", encoding="utf-8")
    client, _ = fresh_client(ui_dir=ui)
    response = client.get("/ui/")
    assert response.status_code == 200 and "console" in response.text
    response = client.get("/", follow_redirects=True)
    assert "console" in response.text
