"""Ontology sheets: category and relation definitions, seeds, and constraints.

The sheets are tab-separated files, one predicate per row.  List cells use
'|' between items; relation seed pairs use ',' inside a '|' item.  Columns
beyond the documented schema are preserved verbatim as opaque annotations.
Categories (and relations) are pairwise mutually exclusive by default;
mutex_exceptions lists the predicates a predicate is NOT exclusive with.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, Iterable, Sequence

CARDINALITY_ONE = "1"
CARDINALITY_MANY = "N"

CATEGORY_COLUMNS = ("name", "seeds", "human_format", "mutex_exceptions", "description")
RELATION_COLUMNS = (
    "name",
    "domain",
    "range",
    "seeds",
    "human_format",
    "mutex_exceptions",
    "nr_values",
    "nr_inverse_values",
)


class SheetError(ValueError):
    """Malformed ontology sheet; message names the row and the problem."""


class OntologyError(ValueError):
    """Raised when an invalid ontology is used to build a knowledge base."""


@dataclass(frozen=True)
class CategorySpec:
    name: str
    seeds: tuple[str, ...]
    human_format: str  # display template with a single X placeholder
    mutex_exceptions: frozenset[str] = frozenset()
    description: str = ""
    extras: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class RelationSpec:
    name: str
    domain_category: str
    range_category: str
    seeds: tuple[tuple[str, str], ...]
    human_format: str  # display template with X and Y placeholders
    mutex_exceptions: frozenset[str] = frozenset()
    nr_values: str = CARDINALITY_MANY  # right values allowed per left arg: "1" or "N"
    nr_inverse_values: str = CARDINALITY_MANY  # left values allowed per right arg
    extras: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class Ontology:
    categories: dict[str, CategorySpec]
    relations: dict[str, RelationSpec]

    def predicate_names(self) -> list[str]:
        return sorted(self.categories) + sorted(self.relations)


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    notices: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def _read_text(source: str | Path | IO[str]) -> str:
    if isinstance(source, (str, Path)):
        return Path(source).read_text(encoding="utf-8")
    return source.read()


def _split_list(cell: str) -> list[str]:
    return [item.strip() for item in cell.split("|") if item.strip()]


def _parse_rows(text: str, required: Sequence[str]) -> tuple[list[str], list[tuple[int, dict[str, str]]]]:
    """Parse a TSV sheet into (extra column names, rows as dicts keyed by column)."""
    lines = text.splitlines()
    if not lines:
        raise SheetError("empty sheet: missing header row")
    header = lines[0].split("\t")
    for column in required:
        if column not in header:
            raise SheetError(f"missing required column {column!r}")
    extra_columns = [c for c in header if c not in required]
    rows: list[tuple[int, dict[str, str]]] = []
    for rowno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split("\t")
        if len(cells) > len(header):
            raise SheetError(f"row {rowno}: {len(cells)} cells but only {len(header)} columns")
        cells += [""] * (len(header) - len(cells))
        rows.append((rowno, dict(zip(header, cells))))
    return extra_columns, rows


def _check_duplicates(kind: str, named_rows: list[tuple[int, str]]) -> None:
    seen: dict[str, int] = {}
    for rowno, name in named_rows:
        if name in seen:
            raise SheetError(
                f"duplicate {kind} name {name!r} in rows {seen[name]} and {rowno}"
            )
        seen[name] = rowno


def parse_category_sheet(source: str | Path | IO[str]) -> list[CategorySpec]:
    extra_columns, rows = _parse_rows(_read_text(source), CATEGORY_COLUMNS)
    specs: list[CategorySpec] = []
    named: list[tuple[int, str]] = []
    for rowno, cells in rows:
        name = cells["name"].strip()
        if not name:
            raise SheetError(f"row {rowno}: category name is empty")
        named.append((rowno, name))
        specs.append(
            CategorySpec(
                name=name,
                seeds=tuple(_split_list(cells["seeds"])),
                human_format=cells["human_format"].strip(),
                mutex_exceptions=frozenset(_split_list(cells["mutex_exceptions"])),
                description=cells["description"].strip(),
                extras=tuple((c, cells[c]) for c in extra_columns),
            )
        )
    _check_duplicates("category", named)
    return specs


def _parse_seed_pairs(cell: str, rowno: int) -> tuple[tuple[str, str], ...]:
    pairs: list[tuple[str, str]] = []
    for item in _split_list(cell):
        parts = [p.strip() for p in item.split(",")]
        if len(parts) != 2 or not all(parts):
            raise SheetError(
                f"row {rowno}: relation seed {item!r} must be two comma-separated surfaces"
            )
        pairs.append((parts[0], parts[1]))
    return tuple(pairs)


def _parse_cardinality(cell: str, column: str, rowno: int) -> str:
    value = cell.strip().upper()
    if value not in (CARDINALITY_ONE, CARDINALITY_MANY):
        raise SheetError(f"row {rowno}: {column} must be 1 or N, got {cell.strip()!r}")
    return value


def parse_relation_sheet(source: str | Path | IO[str]) -> list[RelationSpec]:
    extra_columns, rows = _parse_rows(_read_text(source), RELATION_COLUMNS)
    specs: list[RelationSpec] = []
    named: list[tuple[int, str]] = []
    for rowno, cells in rows:
        name = cells["name"].strip()
        if not name:
            raise SheetError(f"row {rowno}: relation name is empty")
        named.append((rowno, name))
        specs.append(
            RelationSpec(
                name=name,
                domain_category=cells["domain"].strip(),
                range_category=cells["range"].strip(),
                seeds=_parse_seed_pairs(cells["seeds"], rowno),
                human_format=cells["human_format"].strip(),
                mutex_exceptions=frozenset(_split_list(cells["mutex_exceptions"])),
                nr_values=_parse_cardinality(cells["nr_values"], "nr_values", rowno),
                nr_inverse_values=_parse_cardinality(
                    cells["nr_inverse_values"], "nr_inverse_values", rowno
                ),
                extras=tuple((c, cells[c]) for c in extra_columns),
            )
        )
    _check_duplicates("relation", named)
    return specs


def write_category_sheet(specs: Sequence[CategorySpec], path: str | Path) -> None:
    extra_columns = list(dict.fromkeys(c for spec in specs for c, _ in spec.extras))
    with Path(path).open("w", encoding="utf-8", newline="\n") as handle:
        handle.write("\t".join(list(CATEGORY_COLUMNS) + extra_columns) + "\n")
        for spec in specs:
            extras = dict(spec.extras)
            row = [
                spec.name,
                "|".join(spec.seeds),
                spec.human_format,
                "|".join(sorted(spec.mutex_exceptions)),
                spec.description,
            ] + [extras.get(c, "") for c in extra_columns]
            handle.write("\t".join(row) + "\n")


def write_relation_sheet(specs: Sequence[RelationSpec], path: str | Path) -> None:
    extra_columns = list(dict.fromkeys(c for spec in specs for c, _ in spec.extras))
    with Path(path).open("w", encoding="utf-8", newline="\n") as handle:
        handle.write("\t".join(list(RELATION_COLUMNS) + extra_columns) + "\n")
        for spec in specs:
            extras = dict(spec.extras)
            row = [
                spec.name,
                spec.domain_category,
                spec.range_category,
                "|".join(f"{a},{b}" for a, b in spec.seeds),
                spec.human_format,
                "|".join(sorted(spec.mutex_exceptions)),
                spec.nr_values,
                spec.nr_inverse_values,
            ] + [extras.get(c, "") for c in extra_columns]
            handle.write("\t".join(row) + "\n")


SEED_COUNT_RANGE = (10, 15)


def validate_ontology(
    categories: Sequence[CategorySpec],
    relations: Sequence[RelationSpec],
) -> ValidationReport:
    """Check cross-references, templates, mutex symmetry, and seeding practice.

    Errors make the ontology unusable; warnings flag questionable seeding
    (counts outside the recommended 10 to 15, duplicates, seeds shared by
    mutually exclusive categories); notices report automatic fixes such as
    symmetric closure of one-sided mutex exceptions.
    """
    report = ValidationReport()
    category_names = {c.name for c in categories}
    relation_names = {r.name for r in relations}

    for spec in categories:
        if spec.human_format.count("X") != 1:
            report.errors.append(
                f"category {spec.name}: human_format must contain exactly one X, "
                f"got {spec.human_format!r}"
            )
        for other in sorted(spec.mutex_exceptions):
            if other not in category_names:
                report.errors.append(
                    f"category {spec.name}: mutex exception {other!r} names no category"
                )
        _seed_count_warnings(report, "category", spec.name, len(spec.seeds))
        _duplicate_seed_warnings(report, "category", spec.name, spec.seeds)

    for spec in relations:
        for label, target in (("domain", spec.domain_category), ("range", spec.range_category)):
            if target not in category_names:
                report.errors.append(
                    f"relation {spec.name}: {label} category {target!r} is not defined"
                )
        if spec.human_format.count("X") != 1 or spec.human_format.count("Y") != 1:
            report.errors.append(
                f"relation {spec.name}: human_format must contain exactly one X and one Y, "
                f"got {spec.human_format!r}"
            )
        for other in sorted(spec.mutex_exceptions):
            if other not in relation_names:
                report.errors.append(
                    f"relation {spec.name}: mutex exception {other!r} names no relation"
                )
        _seed_count_warnings(report, "relation", spec.name, len(spec.seeds))
        _duplicate_seed_warnings(report, "relation", spec.name, spec.seeds)

    _closure_notices(report, "category", {c.name: c.mutex_exceptions for c in categories})
    _closure_notices(report, "relation", {r.name: r.mutex_exceptions for r in relations})
    _shared_seed_warnings(report, categories)
    return report


def _seed_count_warnings(report: ValidationReport, kind: str, name: str, count: int) -> None:
    low, high = SEED_COUNT_RANGE
    if not low <= count <= high:
        report.warnings.append(
            f"{kind} {name}: {count} seeds; {low} to {high} recommended"
        )


def _duplicate_seed_warnings(
    report: ValidationReport, kind: str, name: str, seeds: Sequence
) -> None:
    seen = set()
    for seed in seeds:
        if seed in seen:
            report.warnings.append(f"{kind} {name}: duplicate seed {seed!r}")
        seen.add(seed)


def _closure_notices(
    report: ValidationReport, kind: str, exceptions: dict[str, frozenset[str]]
) -> None:
    for name, excepted in sorted(exceptions.items()):
        for other in sorted(excepted):
            if other in exceptions and name not in exceptions[other]:
                report.notices.append(
                    f"{kind} mutex exception {name} -> {other} was one-sided; "
                    f"closed symmetrically"
                )


def _shared_seed_warnings(report: ValidationReport, categories: Sequence[CategorySpec]) -> None:
    closed = _close_exceptions({c.name: c.mutex_exceptions for c in categories})
    for i, first in enumerate(categories):
        for second in categories[i + 1 :]:
            if second.name in closed[first.name]:
                continue  # not mutually exclusive, sharing is fine
            shared = sorted(set(first.seeds) & set(second.seeds))
            for seed in shared:
                report.warnings.append(
                    f"seed {seed!r} appears in mutually exclusive categories "
                    f"{first.name} and {second.name}"
                )


def _close_exceptions(exceptions: dict[str, frozenset[str]]) -> dict[str, frozenset[str]]:
    closed = {name: set(excepted) for name, excepted in exceptions.items()}
    for name, excepted in exceptions.items():
        for other in excepted:
            if other in closed:
                closed[other].add(name)
    return {name: frozenset(v) for name, v in closed.items()}


def build_ontology(
    categories: Sequence[CategorySpec],
    relations: Sequence[RelationSpec],
) -> Ontology:
    """Assemble an Ontology, closing mutex exceptions under symmetry."""
    closed_cats = _close_exceptions({c.name: c.mutex_exceptions for c in categories})
    closed_rels = _close_exceptions({r.name: r.mutex_exceptions for r in relations})
    return Ontology(
        categories={
            c.name: replace(c, mutex_exceptions=closed_cats[c.name]) for c in categories
        },
        relations={
            r.name: replace(r, mutex_exceptions=closed_rels[r.name]) for r in relations
        },
    )


def load_ontology(directory: str | Path) -> tuple[Ontology, ValidationReport]:
    """Load categories.tsv and relations.tsv from a directory.

    relations.tsv may be absent (category-only ontologies are allowed).
    """
    directory = Path(directory)
    categories = parse_category_sheet(directory / "categories.tsv")
    relations_path = directory / "relations.tsv"
    relations = parse_relation_sheet(relations_path) if relations_path.is_file() else []
    report = validate_ontology(categories, relations)
    return build_ontology(categories, relations), report


def parse_mapping(source: str | Path | IO[str]) -> list[tuple[str, str]]:
    """Parse a predicate mapping file: source_name<TAB>target_name rows."""
    pairs: list[tuple[str, str]] = []
    for lineno, line in enumerate(_read_text(source).splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        cells = line.split("\t")
        if len(cells) != 2 or not cells[0].strip() or not cells[1].strip():
            raise SheetError(f"row {lineno}: expected source_name<TAB>target_name")
        pairs.append((cells[0].strip(), cells[1].strip()))
    return pairs


def validate_mapping(
    pairs: Sequence[tuple[str, str]],
    source: Ontology,
    target: Ontology,
) -> ValidationReport:
    """Check a cross-language predicate mapping for completeness.

    Every source predicate must be mapped, and every target name must exist
    in the target ontology.  Adapting the semantics remains human work; this
    only guards the bookkeeping.
    """
    report = ValidationReport()
    source_names = set(source.categories) | set(source.relations)
    target_names = set(target.categories) | set(target.relations)
    mapped = {src for src, _ in pairs}
    for name in sorted(source_names - mapped):
        report.errors.append(f"source predicate {name!r} is not mapped")
    for src, tgt in pairs:
        if src not in source_names:
            report.errors.append(f"mapping source {src!r} names no source predicate")
        if tgt not in target_names:
            report.errors.append(f"mapping target {tgt!r} names no target predicate")
    seen: dict[str, str] = {}
    for src, tgt in pairs:
        if src in seen and seen[src] != tgt:
            report.warnings.append(f"source predicate {src!r} mapped to both {seen[src]!r} and {tgt!r}")
        seen[src] = tgt
    return report


def build_initial_kb(ontology: Ontology, now=None):
    """Turn every seed into a seed assertion in a fresh knowledge base.

    Refuses to build when validation reports errors.  Exact duplicate seed
    cells collapse to a single assertion (the validator already warned).
    """
    from .kb import KnowledgeBase  # local import to avoid a module cycle

    report = validate_ontology(
        list(ontology.categories.values()), list(ontology.relations.values())
    )
    if report.errors:
        raise OntologyError(
            "ontology has validation errors:\n" + "\n".join(report.errors)
        )
    kb = KnowledgeBase.from_ontology(ontology)
    kb.add_seed_assertions(now=now)
    return kb


def seed_gazetteer(ontology: Ontology) -> set[str]:
    """All distinct seed surfaces, for mention identification in the corpus."""
    surfaces: set[str] = set()
    for category in ontology.categories.values():
        surfaces.update(category.seeds)
    for relation in ontology.relations.values():
        for left, right in relation.seeds:
            surfaces.add(left)
            surfaces.add(right)
    return surfaces
