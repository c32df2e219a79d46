"""End-to-end checks on full pipelines: exact counts on a known corpus,
agreement with a naive recount, determinism, clean bootstrap of planted
categories, cardinality safety under randomized supervision, rejection
permanence, and replay plus export fidelity on a long session."""

from __future__ import annotations

import random
import time

import oracles
from conftest import (
    ceo_corpus,
    ceo_ontology,
    planted_corpus,
    planted_ontology,
    random_corpus,
)
from everlearn.allpairs import (
    SIDE_RIGHT,
    CategoryPairKey,
    RelationPairKey,
    build_table,
    write_table,
)
from everlearn.corpus import Document
from everlearn.kb import (
    DECISION_APPROVE,
    DECISION_REJECT,
    STATUS_PROMOTED,
    STATUS_REJECTED,
    TRUE_STATUSES,
    ConstraintViolation,
    KnowledgeBase,
    dumps_kb,
    export_rdf,
    loads_kb,
)
from everlearn.learner import LearnerConfig, index_table, run_iteration
from everlearn.ontology import build_initial_kb, seed_gazetteer
from everlearn.profiles import resolve_profile


def test_city_fixture_counts_are_exact():
    """Multi-word names next to 'is a city (of ...)' produce exactly one
    counted event per sentence, at the pinned multiplicities, in under 5s."""
    documents = [
        Document("etienne.txt", "\n".join(["Saint Étienne is a city of France."] * 20)),
        Document("paulo.txt", "\n".join(["São Paulo is a city of Brazil."] * 30)),
    ]
    start = time.perf_counter()
    table = build_table(documents, resolve_profile("fr"))
    elapsed = time.perf_counter() - start

    assert table.category_counts[CategoryPairKey("Saint Étienne", SIDE_RIGHT, "is a city")] == 20
    assert table.category_counts[CategoryPairKey("São Paulo", SIDE_RIGHT, "is a city")] == 30
    assert table.relation_counts[RelationPairKey("Saint Étienne", "France", "is a city of")] == 20
    assert elapsed < 5.0


def test_random_corpora_match_quadratic_recount(wide_profile):
    """One hundred random corpora recounted by a naive quadratic scan: the
    table builder must agree on every key, in under 60s total."""
    start = time.perf_counter()
    mismatched = []
    for seed in range(100):
        documents = random_corpus(seed)
        table = build_table(documents, wide_profile)
        want_cat, want_rel = oracles.recount_corpus(
            documents,
            wide_profile.min_gram,
            wide_profile.max_gram,
            wide_profile.max_relation_gap,
            connectors=wide_profile.connector_words,
        )
        got_cat = {(k.ne, k.side, k.tp): v for k, v in table.category_counts.items()}
        got_rel = {(k.ne1, k.ne2, k.tp): v for k, v in table.relation_counts.items()}
        if got_cat != dict(want_cat) or got_rel != dict(want_rel):
            mismatched.append(seed)
    elapsed = time.perf_counter() - start

    assert mismatched == []
    assert elapsed < 60.0


def test_table_build_and_iterations_are_deterministic(tmp_path, toy_profile):
    """Two builds of the same corpus write byte-identical table files, and two
    bootstrap runs from the same seeds produce identical iteration results."""
    documents, truth = planted_corpus()
    ontology = planted_ontology(truth)

    paths = []
    for name in ("one", "two"):
        out = tmp_path / name
        out.mkdir()
        paths.append(write_table(build_table(documents, toy_profile), out))
    for first, second in zip(*paths):
        assert first.read_bytes() == second.read_bytes()

    table = build_table(documents, toy_profile)
    runs = []
    for _ in range(2):
        kb = build_initial_kb(ontology, now=0.0)
        runs.append(
            [run_iteration(kb, table, now=float(n)) for n in range(1, 4)]
        )
    assert runs[0] == runs[1]


def test_planted_categories_bootstrap_cleanly(toy_profile):
    """Three mutually exclusive categories, 50 entities each, 12 seeded: within
    five default-config iterations at least 80% of the non-seed entities are
    promoted or queued, with no exclusivity violations and no promotion into
    the wrong category, in under 30s."""
    documents, truth = planted_corpus(entities_per_category=50)
    ontology = planted_ontology(truth, seeds_per_category=12)
    kb = build_initial_kb(ontology, now=0.0)

    start = time.perf_counter()
    table = build_table(documents, toy_profile, sorted(seed_gazetteer(ontology)))
    for n in range(1, 6):
        run_iteration(kb, table, now=float(n))
    elapsed = time.perf_counter() - start

    non_seed = [
        (category, entity)
        for category, entities in truth.items()
        for entity in entities[12:]
    ]
    covered = sum(
        1
        for category, entity in non_seed
        if (category, (entity,)) in kb.queue
        or (
            (category, (entity,)) in kb.assertions
            and kb.assertions[(category, (entity,))].status in TRUE_STATUSES
        )
    )
    assert covered / len(non_seed) >= 0.80

    membership: dict[str, list[str]] = {}
    for (category, args), assertion in kb.assertions.items():
        if assertion.status in TRUE_STATUSES:
            membership.setdefault(args[0], []).append(category)
    assert all(len(held) == 1 for held in membership.values())

    wrong = [
        (category, args[0])
        for (category, args), assertion in kb.assertions.items()
        if assertion.status == STATUS_PROMOTED and args[0] not in truth[category]
    ]
    assert wrong == []
    assert elapsed < 30.0


def _single_value_conflicts(kb: KnowledgeBase) -> list[str]:
    lefts: dict[str, set[str]] = {}
    rights: dict[str, set[str]] = {}
    for (predicate, args), assertion in kb.assertions.items():
        if predicate != "ceoOf" or assertion.status == STATUS_REJECTED:
            continue
        lefts.setdefault(args[0], set()).add(args[1])
        rights.setdefault(args[1], set()).add(args[0])
    return [ne for ne, held in lefts.items() if len(held) > 1] + [
        ne for ne, held in rights.items() if len(held) > 1
    ]


def test_single_valued_relation_never_holds_two_values(toy_profile):
    """A one-to-one relation fed deliberately conflicting evidence: across 1000
    randomized interleavings of verdicts and iterations (10 iterations each)
    no subject ever holds two live values and no value two subjects.

    Only four pairs are seeded so conflicting candidates reach the queue
    instead of being filtered against seeds, and promotion is switched off so
    every admission goes through a verdict."""
    documents, pairs = ceo_corpus(n_pairs=20, conflicts=6)
    ontology = ceo_ontology(pairs, seed_count=4)
    table = build_table(documents, toy_profile)
    index = index_table(table)
    config = LearnerConfig(auto_promote_min=4)
    base = dumps_kb(build_initial_kb(ontology, now=0.0))

    for trial in range(1000):
        rng = random.Random(trial)
        kb = loads_kb(base)
        step = 0
        iterations = 0
        while iterations < 10:
            step += 1
            queue = kb.queue_items()
            if queue and rng.random() < 0.6:
                item = rng.choice(queue)
                decision = DECISION_APPROVE if rng.random() < 0.7 else DECISION_REJECT
                try:
                    kb.apply_verdict(
                        item.predicate, item.args, decision, "crowd", now=float(step)
                    )
                except ConstraintViolation:
                    pass
            else:
                run_iteration(kb, table, config, now=float(step), index=index)
                iterations += 1
            conflicts = _single_value_conflicts(kb)
            assert conflicts == [], f"trial {trial} step {step}: {conflicts}"


def test_rejected_assertion_stays_rejected(toy_profile):
    """Rejecting a machine promotion blacklists it: ten further iterations
    never promote or queue the same instance again."""
    documents, truth = planted_corpus()
    ontology = planted_ontology(truth)
    kb = build_initial_kb(ontology, now=0.0)
    table = build_table(documents, toy_profile)
    run_iteration(kb, table, now=1.0)

    key = ("metal", ("Metal20",))
    assert kb.assertions[key].status == STATUS_PROMOTED
    kb.apply_verdict("metal", ("Metal20",), DECISION_REJECT, "reviewer", now=1.5)

    for n in range(2, 12):
        run_iteration(kb, table, now=float(n))
        assert kb.assertions[key].status == STATUS_REJECTED
        assert key not in kb.queue
    assert key in kb.blacklist


def test_long_session_replays_and_exports_cleanly(toy_profile):
    """A session of 200+ mixed records reloads to the same state byte for
    byte, and its export parses completely under an independent grammar."""
    documents, truth = planted_corpus()
    ontology = planted_ontology(truth)
    kb = build_initial_kb(ontology, now=0.0)
    table = build_table(documents, toy_profile)
    for n in range(1, 6):
        run_iteration(kb, table, now=float(n))

    promoted = sorted(
        key for key, a in kb.assertions.items() if a.status == STATUS_PROMOTED
    )
    for predicate, args in promoted[:31]:
        kb.apply_verdict(predicate, args, DECISION_REJECT, "reviewer", now=6.0)
    for n in range(6, 8):
        run_iteration(kb, table, now=float(n))

    text = dumps_kb(kb)
    records = [line for line in text.splitlines() if line and not line.startswith("#")]
    assert len(records) >= 200

    replayed = loads_kb(text)
    assert dumps_kb(replayed) == text
    assert replayed.queue == kb.queue
    assert replayed.blacklist == kb.blacklist
    assert replayed.trusted_patterns == kb.trusted_patterns
    assert replayed.iteration == kb.iteration
    assert {k: (a.status, a.score, a.iteration, a.evidence) for k, a in replayed.assertions.items()} == {
        k: (a.status, a.score, a.iteration, a.evidence) for k, a in kb.assertions.items()
    }

    rdf = export_rdf(kb, "http://example.org/kb/")
    lines = [line for line in rdf.splitlines() if line]
    triples = oracles.parse_ntriples(rdf)
    assert len(triples) == len(lines)
    assert len(triples) == 2 * sum(
        1 for a in kb.assertions.values() if a.status in TRUE_STATUSES
    )
