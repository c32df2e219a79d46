"""Append-only knowledge base: assertions, verdicts, patterns, and replay.

Every change is a record appended to an in-memory log (and optionally a
file).  Current state is a pure fold over the records, so loading a log and
replaying it reconstructs the exact state that produced it.  Human rejection
places a key on a permanent blacklist; no later iteration may re-propose it.
"""

from __future__ import annotations

import hashlib
import json
import time
import urllib.parse
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Sequence

from .ontology import CategorySpec, Ontology, RelationSpec, CARDINALITY_ONE

LOG_HEADER = "#kblog v1"
CATEGORY_LINE = "#category "
RELATION_LINE = "#relation "

STATUS_SEED = "seed"
STATUS_PROMOTED = "promoted"
STATUS_APPROVED = "approved"
STATUS_REJECTED = "rejected"
TRUE_STATUSES = frozenset({STATUS_SEED, STATUS_PROMOTED, STATUS_APPROVED})
ALL_STATUSES = frozenset({STATUS_SEED, STATUS_PROMOTED, STATUS_APPROVED, STATUS_REJECTED})

DECISION_APPROVE = "approve"
DECISION_REJECT = "reject"

RECORD_TYPES = frozenset({"assert", "verdict", "trusted_pattern", "iteration"})

# evidence items are (tp, side, count): the pattern, which side of the NE it
# was seen on (empty for relations), and its co-occurrence count
Evidence = tuple[tuple[str, str, int], ...]


class KBError(Exception):
    pass


class LogFormatError(KBError):
    """Raised when a knowledge base log cannot be parsed."""


class VerdictError(KBError):
    """Raised for verdicts that make no sense (unknown key, seed, repeat)."""


class ConstraintViolation(KBError):
    """Raised when accepting an assertion would break mutex or cardinality."""


@dataclass(frozen=True)
class Assertion:
    predicate: str
    args: tuple[str, ...]
    status: str
    score: float
    iteration: int  # iteration that produced it; 0 for seeds
    evidence: Evidence = ()
    ts: float = 0.0

    @property
    def key(self) -> tuple[str, tuple[str, ...]]:
        return (self.predicate, self.args)


@dataclass(frozen=True)
class QueuedCandidate:
    predicate: str
    args: tuple[str, ...]
    score: float
    evidence: Evidence
    queued_at: int  # iteration that enqueued it

    @property
    def key(self) -> tuple[str, tuple[str, ...]]:
        return (self.predicate, self.args)


@dataclass(frozen=True)
class Record:
    type: str
    fields: tuple[tuple[str, object], ...]

    def get(self, key: str):
        for name, value in self.fields:
            if name == key:
                return value
        raise KeyError(key)


def _record(type_: str, **fields) -> Record:
    # sorted field order keeps serialized logs byte-deterministic
    return Record(type_, tuple(sorted(fields.items())))


def _json(value) -> str:
    return json.dumps(value, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def dump_record(record: Record) -> str:
    cells = [record.type]
    for key, value in record.fields:
        cells.append(f"{key}={_json(value)}")
    return "\t".join(cells)


def parse_record(line: str, lineno: int = 0) -> Record:
    cells = line.split("\t")
    type_ = cells[0]
    if type_ not in RECORD_TYPES:
        raise LogFormatError(f"line {lineno}: unknown record type {type_!r}")
    fields = []
    for cell in cells[1:]:
        key, sep, raw = cell.partition("=")
        if not sep or not key:
            raise LogFormatError(f"line {lineno}: malformed field {cell!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise LogFormatError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
        fields.append((key, value))
    return Record(type_, tuple(fields))


def _evidence_out(evidence: Iterable[tuple[str, str, int]]) -> list[list]:
    return [[tp, side, count] for tp, side, count in evidence]


def _evidence_in(raw) -> Evidence:
    return tuple((tp, side, count) for tp, side, count in raw)


def candidate_id(predicate: str, args: Sequence[str]) -> str:
    """Stable short identifier for a (predicate, args) key."""
    payload = "\t".join([predicate, *args]).encode("utf-8")
    return hashlib.sha1(payload).hexdigest()[:16]


def _category_json(spec: CategorySpec) -> str:
    return _json(
        {
            "name": spec.name,
            "seeds": list(spec.seeds),
            "human_format": spec.human_format,
            "mutex_exceptions": sorted(spec.mutex_exceptions),
            "description": spec.description,
            "extras": [list(pair) for pair in spec.extras],
        }
    )


def _relation_json(spec: RelationSpec) -> str:
    return _json(
        {
            "name": spec.name,
            "domain": spec.domain_category,
            "range": spec.range_category,
            "seeds": [list(pair) for pair in spec.seeds],
            "human_format": spec.human_format,
            "mutex_exceptions": sorted(spec.mutex_exceptions),
            "nr_values": spec.nr_values,
            "nr_inverse_values": spec.nr_inverse_values,
            "extras": [list(pair) for pair in spec.extras],
        }
    )


def _category_from_json(raw: dict) -> CategorySpec:
    return CategorySpec(
        name=raw["name"],
        seeds=tuple(raw["seeds"]),
        human_format=raw["human_format"],
        mutex_exceptions=frozenset(raw["mutex_exceptions"]),
        description=raw["description"],
        extras=tuple((k, v) for k, v in raw["extras"]),
    )


def _relation_from_json(raw: dict) -> RelationSpec:
    return RelationSpec(
        name=raw["name"],
        domain_category=raw["domain"],
        range_category=raw["range"],
        seeds=tuple((a, b) for a, b in raw["seeds"]),
        human_format=raw["human_format"],
        mutex_exceptions=frozenset(raw["mutex_exceptions"]),
        nr_values=raw["nr_values"],
        nr_inverse_values=raw["nr_inverse_values"],
        extras=tuple((k, v) for k, v in raw["extras"]),
    )


class KnowledgeBase:
    """Replayable store of ontology, assertions, patterns, and the queue."""

    def __init__(self) -> None:
        self.categories: dict[str, CategorySpec] = {}
        self.relations: dict[str, RelationSpec] = {}
        self.assertions: dict[tuple[str, tuple[str, ...]], Assertion] = {}
        self.blacklist: set[tuple[str, tuple[str, ...]]] = set()
        self.trusted_patterns: dict[str, set[tuple[str, str]]] = {}
        self.queue: dict[tuple[str, tuple[str, ...]], QueuedCandidate] = {}
        self.iteration = 0
        self.profile_name: str | None = None
        self.corpus_fingerprint: str | None = None
        self.records: list[Record] = []
        self._log_sink: IO[str] | None = None

    # -- construction ----------------------------------------------------

    @classmethod
    def from_ontology(cls, ontology: Ontology) -> "KnowledgeBase":
        kb = cls()
        for name in sorted(ontology.categories):
            kb.categories[name] = ontology.categories[name]
            kb.trusted_patterns.setdefault(name, set())
        for name in sorted(ontology.relations):
            kb.relations[name] = ontology.relations[name]
            kb.trusted_patterns.setdefault(name, set())
        return kb

    def add_seed_assertions(self, now: float | None = None) -> None:
        ts = time.time() if now is None else now
        for name in sorted(self.categories):
            for surface in dict.fromkeys(self.categories[name].seeds):
                self.assert_instance(name, (surface,), STATUS_SEED, 1.0, 0, (), now=ts)
        for name in sorted(self.relations):
            for pair in dict.fromkeys(self.relations[name].seeds):
                self.assert_instance(name, pair, STATUS_SEED, 1.0, 0, (), now=ts)

    # -- record application (the fold) ------------------------------------

    def _append(self, record: Record) -> Record:
        self._apply(record)
        self.records.append(record)
        if self._log_sink is not None:
            self._log_sink.write(dump_record(record) + "\n")
            self._log_sink.flush()
        return record

    def _apply(self, record: Record) -> None:
        handler = getattr(self, f"_apply_{record.type}", None)
        if handler is None:
            raise LogFormatError(f"unknown record type {record.type!r}")
        handler(record)

    def _apply_assert(self, record: Record) -> None:
        assertion = Assertion(
            predicate=record.get("predicate"),
            args=tuple(record.get("args")),
            status=record.get("status"),
            score=record.get("score"),
            iteration=record.get("iteration"),
            evidence=_evidence_in(record.get("evidence")),
            ts=record.get("ts"),
        )
        self.assertions[assertion.key] = assertion
        self.queue.pop(assertion.key, None)

    def _apply_verdict(self, record: Record) -> None:
        key = (record.get("predicate"), tuple(record.get("args")))
        queued = self.queue.pop(key, None)
        existing = self.assertions.get(key)
        if queued is not None:
            score, evidence, origin = queued.score, queued.evidence, queued.queued_at
        elif existing is not None:
            score, evidence, origin = existing.score, existing.evidence, existing.iteration
        else:
            score, evidence, origin = 1.0, (), self.iteration
        decision = record.get("decision")
        status = STATUS_APPROVED if decision == DECISION_APPROVE else STATUS_REJECTED
        self.assertions[key] = Assertion(
            predicate=key[0],
            args=key[1],
            status=status,
            score=score,
            iteration=origin,
            evidence=evidence,
            ts=record.get("ts"),
        )
        if status == STATUS_REJECTED:
            self.blacklist.add(key)

    def _apply_trusted_pattern(self, record: Record) -> None:
        bucket = self.trusted_patterns.setdefault(record.get("predicate"), set())
        bucket.add((record.get("tp"), record.get("side")))

    def _apply_iteration(self, record: Record) -> None:
        self.iteration = record.get("number")
        self.profile_name = record.get("profile")
        self.corpus_fingerprint = record.get("fingerprint")
        for predicate, args in record.get("expired"):
            self.queue.pop((predicate, tuple(args)), None)
        for item in record.get("queued"):
            candidate = QueuedCandidate(
                predicate=item["predicate"],
                args=tuple(item["args"]),
                score=item["score"],
                evidence=_evidence_in(item["evidence"]),
                queued_at=self.iteration,
            )
            self.queue[candidate.key] = candidate

    # -- live operations ---------------------------------------------------

    def assert_instance(
        self,
        predicate: str,
        args: Sequence[str],
        status: str,
        score: float,
        iteration: int,
        evidence: Iterable[tuple[str, str, int]] = (),
        now: float | None = None,
    ) -> Record:
        if status not in ALL_STATUSES:
            raise KBError(f"unknown assertion status {status!r}")
        self._require_predicate(predicate, args)
        return self._append(
            _record(
                "assert",
                predicate=predicate,
                args=list(args),
                status=status,
                score=score,
                iteration=iteration,
                evidence=_evidence_out(evidence),
                ts=time.time() if now is None else now,
            )
        )

    def add_trusted_pattern(
        self, predicate: str, tp: str, side: str, iteration: int
    ) -> Record:
        return self._append(
            _record("trusted_pattern", predicate=predicate, tp=tp, side=side, iteration=iteration)
        )

    def record_iteration(
        self,
        number: int,
        profile: str,
        fingerprint: str,
        stats: dict,
        queued: Sequence[QueuedCandidate],
        expired: Sequence[tuple[str, tuple[str, ...]]],
        trusted_scores: Sequence[tuple[str, str, str, int, int]] = (),
        now: float | None = None,
    ) -> Record:
        return self._append(
            _record(
                "iteration",
                number=number,
                profile=profile,
                fingerprint=fingerprint,
                stats=stats,
                queued=[
                    {
                        "predicate": c.predicate,
                        "args": list(c.args),
                        "score": c.score,
                        "evidence": _evidence_out(c.evidence),
                    }
                    for c in queued
                ],
                expired=[[predicate, list(args)] for predicate, args in expired],
                trusted_scores=[list(row) for row in trusted_scores],
                ts=time.time() if now is None else now,
            )
        )

    def apply_verdict(
        self,
        predicate: str,
        args: Sequence[str],
        decision: str,
        supervisor: str,
        now: float | None = None,
    ) -> Record:
        """Record a human decision on a queued or machine-promoted assertion.

        Approval must pass the same mutex and cardinality checks the learner
        applies, measured against what is currently true; rejection is always
        allowed and permanently blacklists the key.
        """
        if decision not in (DECISION_APPROVE, DECISION_REJECT):
            raise VerdictError(f"decision must be approve or reject, got {decision!r}")
        self._require_predicate(predicate, args)
        key = (predicate, tuple(args))
        existing = self.assertions.get(key)
        if existing is None and key not in self.queue:
            raise VerdictError(f"no queued or asserted instance for {predicate}{tuple(args)!r}")
        if existing is not None and existing.status == STATUS_SEED:
            raise VerdictError("seed assertions are not subject to verdicts")
        if key in self.blacklist:
            raise VerdictError(
                f"{predicate}{tuple(args)!r} was already rejected; rejection is permanent"
            )
        if decision == DECISION_APPROVE:
            reason = admissibility_error(self, predicate, tuple(args))
            if reason is not None:
                raise ConstraintViolation(reason)
        return self._append(
            _record(
                "verdict",
                predicate=predicate,
                args=list(args),
                decision=decision,
                supervisor=supervisor,
                ts=time.time() if now is None else now,
            )
        )

    def attach_log(self, path: str | Path) -> None:
        """Append future records to the file at path (created if missing)."""
        path = Path(path)
        fresh = not path.exists() or path.stat().st_size == 0
        self._log_sink = path.open("a", encoding="utf-8", newline="\n")
        if fresh:
            self._log_sink.write(self._header_text())
            self._log_sink.flush()

    def detach_log(self) -> None:
        if self._log_sink is not None:
            self._log_sink.close()
            self._log_sink = None

    def _header_text(self) -> str:
        lines = [LOG_HEADER]
        for name in sorted(self.categories):
            lines.append(CATEGORY_LINE + _category_json(self.categories[name]))
        for name in sorted(self.relations):
            lines.append(RELATION_LINE + _relation_json(self.relations[name]))
        return "\n".join(lines) + "\n"

    # -- queries -----------------------------------------------------------

    def _require_predicate(self, predicate: str, args: Sequence[str]) -> None:
        if predicate in self.categories:
            expected = 1
        elif predicate in self.relations:
            expected = 2
        else:
            raise KBError(f"unknown predicate {predicate!r}")
        if len(tuple(args)) != expected:
            raise KBError(
                f"{predicate} takes {expected} argument(s), got {len(tuple(args))}"
            )

    def predicate_kind(self, predicate: str) -> str:
        if predicate in self.categories:
            return "category"
        if predicate in self.relations:
            return "relation"
        raise KBError(f"unknown predicate {predicate!r}")

    def ontology(self) -> Ontology:
        return Ontology(dict(self.categories), dict(self.relations))

    def is_true(self, predicate: str, args: tuple[str, ...]) -> bool:
        assertion = self.assertions.get((predicate, args))
        return assertion is not None and assertion.status in TRUE_STATUSES

    def instances_of(self, predicate: str, status: str | None = None) -> list[Assertion]:
        self.predicate_kind(predicate)
        found = [a for (p, _), a in self.assertions.items() if p == predicate]
        if status is not None:
            found = [a for a in found if a.status == status]
        return sorted(found, key=lambda a: a.args)

    def true_instances(self, predicate: str) -> list[Assertion]:
        return [a for a in self.instances_of(predicate) if a.status in TRUE_STATUSES]

    def queue_items(self, predicate: str | None = None) -> list[QueuedCandidate]:
        items = list(self.queue.values())
        if predicate is not None:
            items = [c for c in items if c.predicate == predicate]
        return sorted(items, key=lambda c: (-c.score, c.predicate, c.args))

    def status_counts(self) -> dict[str, int]:
        counts = {status: 0 for status in sorted(ALL_STATUSES)}
        for assertion in self.assertions.values():
            counts[assertion.status] += 1
        return counts

    def provenance(self, predicate: str, args: tuple[str, ...]) -> dict:
        """Full history of one key: every record that touched it, in order."""
        args = tuple(args)
        key = (predicate, args)
        events: list[dict] = []
        for record in self.records:
            if record.type == "assert":
                if (record.get("predicate"), tuple(record.get("args"))) != key:
                    continue
                events.append(
                    {
                        "event": record.get("status"),
                        "iteration": record.get("iteration"),
                        "score": record.get("score"),
                        "evidence": record.get("evidence"),
                        "ts": record.get("ts"),
                    }
                )
            elif record.type == "verdict":
                if (record.get("predicate"), tuple(record.get("args"))) != key:
                    continue
                events.append(
                    {
                        "event": "verdict",
                        "decision": record.get("decision"),
                        "supervisor": record.get("supervisor"),
                        "ts": record.get("ts"),
                    }
                )
            elif record.type == "iteration":
                for item in record.get("queued"):
                    if (item["predicate"], tuple(item["args"])) == key:
                        events.append(
                            {
                                "event": "queued",
                                "iteration": record.get("number"),
                                "score": item["score"],
                                "evidence": item["evidence"],
                                "ts": record.get("ts"),
                            }
                        )
                for expired_predicate, expired_args in record.get("expired"):
                    if (expired_predicate, tuple(expired_args)) == key:
                        events.append(
                            {
                                "event": "expired",
                                "iteration": record.get("number"),
                                "ts": record.get("ts"),
                            }
                        )
        assertion = self.assertions.get(key)
        if assertion is not None:
            current = assertion.status
        elif key in self.queue:
            current = "queued"
        else:
            current = "unknown"
        return {
            "predicate": predicate,
            "args": list(args),
            "status": current,
            "blacklisted": key in self.blacklist,
            "events": events,
        }


def admissibility_error(
    kb: KnowledgeBase,
    predicate: str,
    args: tuple[str, ...],
    assume_true: Iterable[tuple[str, tuple[str, ...]]] = (),
) -> str | None:
    """Reason accepting (predicate, args) would violate a constraint, or None.

    assume_true lists keys tentatively accepted earlier in the same batch,
    so a filtering pass can stay consistent within a single iteration.
    """
    extra = set(assume_true)

    def true(p: str, a: tuple[str, ...]) -> bool:
        return (p, a) in extra or kb.is_true(p, a)

    if predicate in kb.categories:
        exceptions = kb.categories[predicate].mutex_exceptions
        for other in sorted(kb.categories):
            if other == predicate or other in exceptions:
                continue
            if true(other, args):
                return f"{args[0]!r} is already a {other}, which excludes {predicate}"
        return None

    spec = kb.relations[predicate]
    exceptions = spec.mutex_exceptions
    for other in sorted(kb.relations):
        if other == predicate or other in exceptions:
            continue
        if true(other, args):
            return f"{args!r} already holds for {other}, which excludes {predicate}"
    if spec.nr_values == CARDINALITY_ONE:
        for held in _true_args(kb, predicate, extra):
            if held[0] == args[0] and held[1] != args[1]:
                return (
                    f"{predicate} allows one value per subject and "
                    f"{args[0]!r} already maps to {held[1]!r}"
                )
    if spec.nr_inverse_values == CARDINALITY_ONE:
        for held in _true_args(kb, predicate, extra):
            if held[1] == args[1] and held[0] != args[0]:
                return (
                    f"{predicate} allows one subject per value and "
                    f"{args[1]!r} already belongs to {held[0]!r}"
                )
    return None


def _true_args(
    kb: KnowledgeBase,
    predicate: str,
    extra: set[tuple[str, tuple[str, ...]]],
) -> Iterable[tuple[str, ...]]:
    for (p, a), assertion in kb.assertions.items():
        if p == predicate and assertion.status in TRUE_STATUSES:
            yield a
    for p, a in extra:
        if p == predicate:
            yield a


# -- persistence -----------------------------------------------------------


def dumps_kb(kb: KnowledgeBase) -> str:
    return kb._header_text() + "".join(dump_record(r) + "\n" for r in kb.records)


def loads_kb(text: str) -> KnowledgeBase:
    lines = text.splitlines()
    if not lines or lines[0] != LOG_HEADER:
        raise LogFormatError(f"missing log header {LOG_HEADER!r}")
    kb = KnowledgeBase()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        if line.startswith(CATEGORY_LINE):
            spec = _category_from_json(_ontology_payload(line, CATEGORY_LINE, lineno))
            kb.categories[spec.name] = spec
            kb.trusted_patterns.setdefault(spec.name, set())
            continue
        if line.startswith(RELATION_LINE):
            spec = _relation_from_json(_ontology_payload(line, RELATION_LINE, lineno))
            kb.relations[spec.name] = spec
            kb.trusted_patterns.setdefault(spec.name, set())
            continue
        if line.startswith("#"):
            continue  # unknown annotation lines are tolerated
        record = parse_record(line, lineno)
        kb._apply(record)
        kb.records.append(record)
    return kb


def _ontology_payload(line: str, prefix: str, lineno: int) -> dict:
    try:
        return json.loads(line[len(prefix) :])
    except (json.JSONDecodeError, KeyError) as exc:
        raise LogFormatError(f"line {lineno}: bad ontology entry: {exc}") from exc


def persist_kb(kb: KnowledgeBase, path: str | Path) -> None:
    Path(path).write_text(dumps_kb(kb), encoding="utf-8", newline="\n")


def load_kb(path: str | Path) -> KnowledgeBase:
    return loads_kb(Path(path).read_text(encoding="utf-8"))


# -- RDF export --------------------------------------------------------------

RDF_TYPE_IRI = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
RDFS_LABEL_IRI = "http://www.w3.org/2000/01/rdf-schema#label"


def _iri_segment(text: str) -> str:
    return urllib.parse.quote(text, safe="")


def _literal(text: str) -> str:
    escaped = (
        text.replace("\\", "\\\\")
        .replace('"', '\\"')
        .replace("\n", "\\n")
        .replace("\r", "\\r")
        .replace("\t", "\\t")
    )
    return f'"{escaped}"'


def export_rdf(kb: KnowledgeBase, base_iri: str) -> str:
    """Render every currently-true assertion as sorted N-Triples lines.

    Instances, categories, and relations live under the base IRI in separate
    namespaces; surfaces are percent-encoded into IRIs and carried verbatim
    as label literals so nothing is lost to encoding.
    """
    if not base_iri or any(c in base_iri for c in ' <>"{}|\\^`'):
        raise ValueError(f"invalid base IRI {base_iri!r}")
    base = base_iri if base_iri.endswith(("/", "#")) else base_iri + "/"
    triples: set[str] = set()

    def instance_iri(surface: str) -> str:
        return f"<{base}instance/{_iri_segment(surface)}>"

    def label(surface: str) -> str:
        return f"{instance_iri(surface)} <{RDFS_LABEL_IRI}> {_literal(surface)} ."

    for assertion in kb.assertions.values():
        if assertion.status not in TRUE_STATUSES:
            continue
        if assertion.predicate in kb.categories:
            surface = assertion.args[0]
            category = f"<{base}category/{_iri_segment(assertion.predicate)}>"
            triples.add(f"{instance_iri(surface)} <{RDF_TYPE_IRI}> {category} .")
            triples.add(label(surface))
        else:
            left, right = assertion.args
            relation = f"<{base}relation/{_iri_segment(assertion.predicate)}>"
            triples.add(f"{instance_iri(left)} {relation} {instance_iri(right)} .")
            triples.add(label(left))
            triples.add(label(right))
    return "\n".join(sorted(triples)) + ("\n" if triples else "")
