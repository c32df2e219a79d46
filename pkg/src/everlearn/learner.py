"""Coupled bootstrapping over an all-pairs table and a knowledge base.

Each iteration scores text patterns by how precisely they select known-true
instances, trusts the best ones, scores new instances by how many trusted
patterns they co-occur with, then filters every candidate through mutual
exclusion and cardinality checks before promoting the confident ones and
queueing the rest for a human.
"""

from __future__ import annotations

from dataclasses import dataclass, fields as dataclass_fields
from pathlib import Path
from typing import Sequence

from .allpairs import AllPairsTable
from .kb import (
    Assertion,
    Evidence,
    KBError,
    KnowledgeBase,
    QueuedCandidate,
    STATUS_PROMOTED,
    admissibility_error,
)

RELATION_SIDE = ""  # relation patterns sit between the arguments; no side needed


class LearnerError(KBError):
    pass


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LearnerConfig:
    pattern_precision_min: float = 0.8
    pattern_support_min: int = 2
    instance_pattern_min: int = 2
    auto_promote_min: int = 3
    max_new_patterns_per_iter: int = 20
    max_promotions_per_predicate: int = 50
    supervision_quota: int = 25
    queue_ttl_iterations: int = 10
    require_typed_args: bool = False

    def __post_init__(self) -> None:
        if not isinstance(self.pattern_precision_min, (int, float)) or not (
            0.0 < self.pattern_precision_min <= 1.0
        ):
            raise ConfigError("pattern_precision_min must be in (0, 1]")
        for name in (
            "pattern_support_min",
            "instance_pattern_min",
            "auto_promote_min",
            "max_new_patterns_per_iter",
            "max_promotions_per_predicate",
            "queue_ttl_iterations",
        ):
            if not isinstance(getattr(self, name), int) or getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if not isinstance(self.supervision_quota, int) or self.supervision_quota < 0:
            raise ConfigError("supervision_quota must be a non-negative integer")
        if not isinstance(self.require_typed_args, bool):
            raise ConfigError("require_typed_args must be true or false")


_CONFIG_PARSERS = {
    "pattern_precision_min": float,
    "pattern_support_min": int,
    "instance_pattern_min": int,
    "auto_promote_min": int,
    "max_new_patterns_per_iter": int,
    "max_promotions_per_predicate": int,
    "supervision_quota": int,
    "queue_ttl_iterations": int,
    "require_typed_args": lambda v: {"true": True, "false": False}[v.lower()],
}


def parse_config(text: str) -> LearnerConfig:
    """Parse key=value lines ('#' starts a comment); absent keys keep defaults."""
    values: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        if key not in _CONFIG_PARSERS:
            raise ConfigError(f"line {lineno}: unknown parameter {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate parameter {key!r}")
        try:
            values[key] = _CONFIG_PARSERS[key](raw)
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {raw!r}") from exc
    return LearnerConfig(**values)


def load_config(path: str | Path) -> LearnerConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class PatternScore:
    predicate: str
    tp: str
    side: str  # L/R for categories, empty for relations
    support: int  # distinct known-true instances it co-occurs with
    coverage: int  # distinct KB-known instances it co-occurs with, any status
    precision: float


@dataclass(frozen=True)
class CandidateInstance:
    predicate: str
    args: tuple[str, ...]
    score: int  # distinct trusted patterns that back it
    evidence: Evidence  # (tp, side, occurrence count) per backing pattern


@dataclass(frozen=True)
class IterationResult:
    iteration: int
    promoted: tuple[Assertion, ...]
    queued_for_supervision: tuple[CandidateInstance, ...]
    new_trusted_patterns: dict[str, frozenset[tuple[str, str]]]
    expired: tuple[tuple[str, tuple[str, ...]], ...]
    dropped: tuple[tuple[CandidateInstance, str], ...]
    stats: dict


@dataclass(frozen=True)
class TableIndex:
    """Occurrence maps derived once from an all-pairs table."""

    category_by_pattern: dict[tuple[str, str], frozenset[str]]
    category_by_ne: dict[str, dict[tuple[str, str], int]]
    relation_by_pattern: dict[str, frozenset[tuple[str, str]]]
    relation_by_pair: dict[tuple[str, str], dict[str, int]]


def index_table(table: AllPairsTable) -> TableIndex:
    cat_by_pattern: dict[tuple[str, str], set[str]] = {}
    cat_by_ne: dict[str, dict[tuple[str, str], int]] = {}
    for key, count in table.category_counts.items():
        pattern = (key.tp, key.side)
        cat_by_pattern.setdefault(pattern, set()).add(key.ne)
        cat_by_ne.setdefault(key.ne, {})[pattern] = count
    rel_by_pattern: dict[str, set[tuple[str, str]]] = {}
    rel_by_pair: dict[tuple[str, str], dict[str, int]] = {}
    for key, count in table.relation_counts.items():
        pair = (key.ne1, key.ne2)
        rel_by_pattern.setdefault(key.tp, set()).add(pair)
        rel_by_pair.setdefault(pair, {})[key.tp] = count
    return TableIndex(
        category_by_pattern={k: frozenset(v) for k, v in cat_by_pattern.items()},
        category_by_ne=cat_by_ne,
        relation_by_pattern={k: frozenset(v) for k, v in rel_by_pattern.items()},
        relation_by_pair=rel_by_pair,
    )


def _known_category_nes(kb: KnowledgeBase) -> set[str]:
    return {
        args[0]
        for (p, args) in kb.assertions
        if p in kb.categories
    }


def _known_relation_pairs(kb: KnowledgeBase) -> set[tuple[str, str]]:
    return {
        (args[0], args[1])
        for (p, args) in kb.assertions
        if p in kb.relations
    }


def score_patterns(
    kb: KnowledgeBase, index: TableIndex, predicate: str
) -> list[PatternScore]:
    """Score every pattern that co-occurs with a known-true instance.

    support counts distinct true instances of the predicate the pattern
    selects; coverage counts distinct instances the knowledge base knows at
    all (any predicate of the same kind, any status, rejections included)
    that the pattern selects.  precision is their ratio, so a pattern that
    also fires on instances of rival predicates scores low.
    """
    kind = kb.predicate_kind(predicate)
    scores: list[PatternScore] = []
    if kind == "category":
        true_nes = {a.args[0] for a in kb.true_instances(predicate)}
        known_nes = _known_category_nes(kb)
        for (tp, side), occurring in index.category_by_pattern.items():
            support = len(occurring & true_nes)
            if support == 0:
                continue
            coverage = len(occurring & known_nes)
            scores.append(
                PatternScore(predicate, tp, side, support, coverage, support / coverage)
            )
    else:
        true_pairs = {(a.args[0], a.args[1]) for a in kb.true_instances(predicate)}
        known_pairs = _known_relation_pairs(kb)
        for tp, occurring in index.relation_by_pattern.items():
            support = len(occurring & true_pairs)
            if support == 0:
                continue
            coverage = len(occurring & known_pairs)
            scores.append(
                PatternScore(
                    predicate, tp, RELATION_SIDE, support, coverage, support / coverage
                )
            )
    scores.sort(key=lambda s: (-s.precision, -s.support, s.tp, s.side))
    return scores


def promote_patterns(
    kb: KnowledgeBase,
    scores: Sequence[PatternScore],
    config: LearnerConfig,
    iteration: int,
) -> list[tuple[str, str, str]]:
    """Trust the qualifying patterns, best first, up to the per-iteration cap."""
    promoted: list[tuple[str, str, str]] = []
    for score in scores:
        if len(promoted) >= config.max_new_patterns_per_iter:
            break
        if score.precision < config.pattern_precision_min:
            continue
        if score.support < config.pattern_support_min:
            continue
        if (score.tp, score.side) in kb.trusted_patterns.get(score.predicate, set()):
            continue
        kb.add_trusted_pattern(score.predicate, score.tp, score.side, iteration)
        promoted.append((score.predicate, score.tp, score.side))
    return promoted


def score_instances(
    kb: KnowledgeBase, index: TableIndex, predicate: str, config: LearnerConfig
) -> list[CandidateInstance]:
    """Propose instances backed by enough trusted patterns of the predicate.

    Anything the knowledge base already asserts, has blacklisted, or is
    holding in the queue is not proposed again.
    """
    trusted = kb.trusted_patterns.get(predicate, set())
    if not trusted:
        return []
    kind = kb.predicate_kind(predicate)
    candidates: list[CandidateInstance] = []
    if kind == "category":
        for ne, patterns in index.category_by_ne.items():
            key = (predicate, (ne,))
            if key in kb.assertions or key in kb.blacklist or key in kb.queue:
                continue
            matched = sorted(set(patterns) & trusted)
            if len(matched) >= config.instance_pattern_min:
                evidence = tuple((tp, side, patterns[(tp, side)]) for tp, side in matched)
                candidates.append(CandidateInstance(predicate, (ne,), len(matched), evidence))
    else:
        trusted_tps = {tp for tp, _ in trusted}
        for pair, tps in index.relation_by_pair.items():
            key = (predicate, pair)
            if key in kb.assertions or key in kb.blacklist or key in kb.queue:
                continue
            matched = sorted(set(tps) & trusted_tps)
            if len(matched) >= config.instance_pattern_min:
                evidence = tuple((tp, RELATION_SIDE, tps[tp]) for tp in matched)
                candidates.append(CandidateInstance(predicate, pair, len(matched), evidence))
    candidates.sort(key=lambda c: (-c.score, c.args))
    return candidates


def filter_candidates(
    kb: KnowledgeBase,
    candidates: Sequence[CandidateInstance],
    config: LearnerConfig | None = None,
) -> tuple[list[CandidateInstance], list[tuple[CandidateInstance, str]]]:
    """Admit candidates best-first, keeping the admitted set conflict-free.

    A dropped candidate is not blacklisted; if the conflict that blocked it
    dissolves (for example a rival is rejected by a human) it may come back
    in a later iteration.
    """
    config = config or LearnerConfig()
    admitted: list[CandidateInstance] = []
    dropped: list[tuple[CandidateInstance, str]] = []
    accepted_keys: list[tuple[str, tuple[str, ...]]] = []
    for candidate in sorted(candidates, key=lambda c: (-c.score, c.args, c.predicate)):
        reason = _typing_error(kb, candidate, config)
        if reason is None:
            reason = admissibility_error(kb, candidate.predicate, candidate.args, accepted_keys)
        if reason is None:
            admitted.append(candidate)
            accepted_keys.append((candidate.predicate, candidate.args))
        else:
            dropped.append((candidate, reason))
    return admitted, dropped


def _typing_error(
    kb: KnowledgeBase, candidate: CandidateInstance, config: LearnerConfig
) -> str | None:
    # optional strictness: relation arguments must already hold their
    # declared domain/range categories
    if not config.require_typed_args or candidate.predicate not in kb.relations:
        return None
    spec = kb.relations[candidate.predicate]
    left, right = candidate.args
    if not kb.is_true(spec.domain_category, (left,)):
        return f"{left!r} is not a known {spec.domain_category}"
    if not kb.is_true(spec.range_category, (right,)):
        return f"{right!r} is not a known {spec.range_category}"
    return None


def run_iteration(
    kb: KnowledgeBase,
    table: AllPairsTable,
    config: LearnerConfig | None = None,
    now: float | None = None,
    allow_fingerprint_change: bool = False,
    index: TableIndex | None = None,
) -> IterationResult:
    """Run one full bootstrapping pass and record it in the knowledge base.

    Refuses to mix corpora: the table must carry the same profile as earlier
    iterations, and a changed corpus fingerprint is an error unless the
    caller explicitly accepts the new corpus.
    """
    config = config or LearnerConfig()
    if kb.profile_name is not None and kb.profile_name != table.profile_name:
        raise LearnerError(
            f"knowledge base was built with profile {kb.profile_name!r}, "
            f"table uses {table.profile_name!r}"
        )
    if (
        kb.corpus_fingerprint is not None
        and kb.corpus_fingerprint != table.fingerprint_hex
        and not allow_fingerprint_change
    ):
        raise LearnerError(
            "corpus fingerprint changed since the last iteration; "
            "rerun with the old table or explicitly accept the new corpus"
        )
    if index is None:
        index = index_table(table)
    number = kb.iteration + 1

    new_patterns: dict[str, set[tuple[str, str]]] = {}
    trusted_scores: list[tuple[str, str, str, int, int]] = []
    candidates: list[CandidateInstance] = []
    for predicate in sorted(kb.categories) + sorted(kb.relations):
        scores = score_patterns(kb, index, predicate)
        fresh = promote_patterns(kb, scores, config, number)
        if fresh:
            new_patterns[predicate] = {(tp, side) for _, tp, side in fresh}
        trusted = kb.trusted_patterns.get(predicate, set())
        trusted_scores.extend(
            (predicate, s.tp, s.side, s.support, s.coverage)
            for s in scores
            if (s.tp, s.side) in trusted
        )
        candidates.extend(score_instances(kb, index, predicate, config))

    admitted, dropped = filter_candidates(kb, candidates, config)

    to_promote: list[CandidateInstance] = []
    to_queue: list[CandidateInstance] = []
    promotions_used: dict[str, int] = {}
    for candidate in admitted:
        used = promotions_used.get(candidate.predicate, 0)
        if (
            candidate.score >= config.auto_promote_min
            and used < config.max_promotions_per_predicate
        ):
            promotions_used[candidate.predicate] = used + 1
            to_promote.append(candidate)
        else:
            to_queue.append(candidate)

    promoted: list[Assertion] = []
    for candidate in sorted(to_promote, key=lambda c: (c.predicate, -c.score, c.args)):
        kb.assert_instance(
            candidate.predicate,
            candidate.args,
            STATUS_PROMOTED,
            float(candidate.score),
            number,
            candidate.evidence,
            now=now,
        )
        promoted.append(kb.assertions[(candidate.predicate, candidate.args)])

    expired = [
        key
        for key, item in sorted(kb.queue.items())
        if number - item.queued_at >= config.queue_ttl_iterations
    ]

    queued: list[QueuedCandidate] = []
    queued_candidates: list[CandidateInstance] = []
    quota_used: dict[str, int] = {}
    for candidate in sorted(to_queue, key=lambda c: (c.predicate, -c.score, c.args)):
        used = quota_used.get(candidate.predicate, 0)
        if used >= config.supervision_quota:
            continue  # deferred, not dropped: proposable again next iteration
        quota_used[candidate.predicate] = used + 1
        queued_candidates.append(candidate)
        queued.append(
            QueuedCandidate(
                candidate.predicate,
                candidate.args,
                float(candidate.score),
                candidate.evidence,
                queued_at=number,
            )
        )

    stats = {
        "new_patterns": sum(len(v) for v in new_patterns.values()),
        "candidates": len(candidates),
        "admitted": len(admitted),
        "dropped": len(dropped),
        "promoted": len(promoted),
        "queued": len(queued),
        "expired": len(expired),
    }
    kb.record_iteration(
        number=number,
        profile=table.profile_name,
        fingerprint=table.fingerprint_hex,
        stats=stats,
        queued=queued,
        expired=expired,
        trusted_scores=sorted(trusted_scores),
        now=now,
    )
    return IterationResult(
        iteration=number,
        promoted=tuple(promoted),
        queued_for_supervision=tuple(queued_candidates),
        new_trusted_patterns={k: frozenset(v) for k, v in new_patterns.items()},
        expired=tuple(expired),
        dropped=tuple(dropped),
        stats=stats,
    )
