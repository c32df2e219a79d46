"""All-pairs occurrence tables.

The table records, with exact integer counts, every co-occurrence between a
mention and a context window next to it (category view) and between an
ordered mention pair and the token sequence strictly between them (relation
view).  It is a reusable corpus index: no smoothing, thresholding, or
filtering happens here.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import (
    Document,
    EntityMention,
    TokenizedSentence,
    identify_entities,
    sentence_stream,
)
from .profiles import LanguageProfile

SIDE_LEFT = "L"
SIDE_RIGHT = "R"

FINGERPRINT_BYTES = 32
EMPTY_FINGERPRINT = b"\x00" * FINGERPRINT_BYTES

CATEGORY_FILENAME = "category.tsv"
RELATION_FILENAME = "relation.tsv"


@dataclass(frozen=True, order=True)
class CategoryPairKey:
    ne: str
    side: str  # SIDE_LEFT or SIDE_RIGHT
    tp: str  # space-joined window tokens


@dataclass(frozen=True, order=True)
class RelationPairKey:
    ne1: str  # earlier mention in the sentence; order is never swapped
    ne2: str
    tp: str  # space-joined tokens strictly between the mentions


@dataclass
class AllPairsTable:
    profile_name: str = ""
    category_counts: dict[CategoryPairKey, int] = field(default_factory=dict)
    relation_counts: dict[RelationPairKey, int] = field(default_factory=dict)
    corpus_fingerprint: bytes = EMPTY_FINGERPRINT

    def total_category_count(self) -> int:
        return sum(self.category_counts.values())

    def total_relation_count(self) -> int:
        return sum(self.relation_counts.values())

    @property
    def fingerprint_hex(self) -> str:
        return self.corpus_fingerprint.hex()


class TableFormatError(ValueError):
    """Malformed table file; message carries the offending line number."""


def is_punctuation_token(token: str) -> bool:
    return not any(ch.isalnum() for ch in token)


def _clean_edges(window: Sequence[str]) -> bool:
    """True when neither edge of the window is a punctuation-only token."""
    return not (is_punctuation_token(window[0]) or is_punctuation_token(window[-1]))


def extract_category_pairs(
    sentence: TokenizedSentence,
    mentions: Sequence[EntityMention],
    profile: LanguageProfile,
) -> list[CategoryPairKey]:
    """Emit the left and right n-gram windows for every mention.

    For each n in [min_gram, max_gram], the n tokens immediately left of the
    mention form one left window and the n tokens immediately right form one
    right window, where enough tokens exist.  Windows never cross the
    sentence boundary, never include the mention's own tokens, and are
    dropped when their first or last token is punctuation-only.
    """
    tokens = sentence.token_texts()
    total = len(tokens)
    pairs: list[CategoryPairKey] = []
    for mention in mentions:
        for n in range(profile.min_gram, profile.max_gram + 1):
            left_start = mention.start_token - n
            if left_start >= 0:
                window = tokens[left_start : mention.start_token]
                if _clean_edges(window):
                    pairs.append(CategoryPairKey(mention.surface, SIDE_LEFT, " ".join(window)))
            right_end = mention.end_token + n
            if right_end <= total:
                window = tokens[mention.end_token : right_end]
                if _clean_edges(window):
                    pairs.append(CategoryPairKey(mention.surface, SIDE_RIGHT, " ".join(window)))
    return pairs


def extract_relation_pairs(
    sentence: TokenizedSentence,
    mentions: Sequence[EntityMention],
    profile: LanguageProfile,
) -> list[RelationPairKey]:
    """Emit one pair per ordered mention pair with 1..max_relation_gap tokens between.

    The earlier mention is always ne1.  Overlapping mention pairs, zero-gap
    pairs, and pairs whose surfaces are identical are skipped.
    """
    tokens = sentence.token_texts()
    ordered = sorted(mentions, key=lambda m: (m.start_token, m.end_token))
    pairs: list[RelationPairKey] = []
    for i in range(len(ordered)):
        for j in range(i + 1, len(ordered)):
            first, second = ordered[i], ordered[j]
            gap = second.start_token - first.end_token
            if not 1 <= gap <= profile.max_relation_gap:
                continue
            if first.surface == second.surface:
                continue
            between = tokens[first.end_token : second.start_token]
            pairs.append(RelationPairKey(first.surface, second.surface, " ".join(between)))
    return pairs


def aggregate(
    pairs: Iterable[CategoryPairKey | RelationPairKey],
    profile_name: str = "",
    corpus_fingerprint: bytes = EMPTY_FINGERPRINT,
) -> AllPairsTable:
    """Count key multiplicities in a stream of extraction events."""
    categories: Counter[CategoryPairKey] = Counter()
    relations: Counter[RelationPairKey] = Counter()
    for key in pairs:
        if isinstance(key, CategoryPairKey):
            categories[key] += 1
        elif isinstance(key, RelationPairKey):
            relations[key] += 1
        else:
            raise TypeError(f"not an all-pairs key: {key!r}")
    return AllPairsTable(profile_name, dict(categories), dict(relations), corpus_fingerprint)


def combine_fingerprints(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


def document_fingerprint(document: Document) -> bytes:
    digest = hashlib.sha256()
    digest.update(document.doc_id.encode("utf-8"))
    digest.update(b"\x00")
    digest.update(document.text.encode("utf-8"))
    return digest.digest()


def merge(a: AllPairsTable, b: AllPairsTable) -> AllPairsTable:
    """Pointwise sum of two tables built with the same profile.

    merge is commutative and associative, with the empty table as identity,
    so shards produced by parallel workers can be folded in any order.
    """
    if a.profile_name != b.profile_name:
        raise ValueError(
            f"cannot merge tables from different profiles: "
            f"{a.profile_name!r} vs {b.profile_name!r}"
        )
    categories = Counter(a.category_counts)
    categories.update(b.category_counts)
    relations = Counter(a.relation_counts)
    relations.update(b.relation_counts)
    return AllPairsTable(
        a.profile_name,
        dict(categories),
        dict(relations),
        combine_fingerprints(a.corpus_fingerprint, b.corpus_fingerprint),
    )


def extract_document_pairs(
    document: Document,
    profile: LanguageProfile,
    gazetteer: frozenset[str] = frozenset(),
) -> list[CategoryPairKey | RelationPairKey]:
    """All extraction events of one document, in sentence order."""
    keys: list[CategoryPairKey | RelationPairKey] = []
    for sentence in sentence_stream(document, profile):
        mentions = identify_entities(sentence, profile, gazetteer)
        keys.extend(extract_category_pairs(sentence, mentions, profile))
        keys.extend(extract_relation_pairs(sentence, mentions, profile))
    return keys


def _build_shard(
    documents: Sequence[Document],
    profile: LanguageProfile,
    gazetteer: frozenset[str],
) -> AllPairsTable:
    fingerprint = EMPTY_FINGERPRINT
    keys: list[CategoryPairKey | RelationPairKey] = []
    for document in documents:
        fingerprint = combine_fingerprints(fingerprint, document_fingerprint(document))
        keys.extend(extract_document_pairs(document, profile, gazetteer))
    return aggregate(keys, profile.name, fingerprint)


def build_table(
    documents: Iterable[Document],
    profile: LanguageProfile,
    gazetteer: Iterable[str] = (),
    workers: int = 1,
) -> AllPairsTable:
    """Run the full extraction pipeline over a corpus.

    Documents are independent work units; with workers > 1 they are split
    into chunks processed by a process pool and the shard tables are merged
    in chunk order, so the result is identical to the serial build.
    """
    gazetteer = frozenset(gazetteer)
    if workers <= 1:
        return _build_shard(list(documents), profile, gazetteer)
    docs = list(documents)
    if not docs:
        return AllPairsTable(profile.name)
    chunk_size = max(1, (len(docs) + workers - 1) // workers)
    chunks = [docs[i : i + chunk_size] for i in range(0, len(docs), chunk_size)]
    table = AllPairsTable(profile.name)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for shard in pool.map(_build_shard, chunks, [profile] * len(chunks), [gazetteer] * len(chunks)):
            table = merge(table, shard)
    return table


def _header_line(profile_name: str, kind: str) -> str:
    return f"#allpairs v1 profile={profile_name} kind={kind}"


def write_table(table: AllPairsTable, directory: str | Path) -> tuple[Path, Path]:
    """Write the category and relation files under the given directory.

    Rows are sorted by key, so two builds of the same corpus produce
    byte-identical files.  Tokens never contain tabs, so the tab-separated
    format needs no escaping.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    category_path = directory / CATEGORY_FILENAME
    relation_path = directory / RELATION_FILENAME
    fingerprint = table.fingerprint_hex

    with category_path.open("w", encoding="utf-8", newline="\n") as handle:
        handle.write(_header_line(table.profile_name, "category") + "\n")
        handle.write(f"#fingerprint={fingerprint}\n")
        for key in sorted(table.category_counts):
            handle.write(f"{key.ne}\t{key.side}\t{key.tp}\t{table.category_counts[key]}\n")

    with relation_path.open("w", encoding="utf-8", newline="\n") as handle:
        handle.write(_header_line(table.profile_name, "relation") + "\n")
        handle.write(f"#fingerprint={fingerprint}\n")
        for key in sorted(table.relation_counts):
            handle.write(f"{key.ne1}\t{key.ne2}\t{key.tp}\t{table.relation_counts[key]}\n")

    return category_path, relation_path


def _parse_header(line: str, kind: str, path: Path) -> str:
    prefix = "#allpairs v1 profile="
    suffix = f" kind={kind}"
    if not line.startswith(prefix) or not line.endswith(suffix):
        raise TableFormatError(f"{path}: line 1: bad header {line!r}")
    return line[len(prefix) : len(line) - len(suffix)]


def _read_rows(path: Path, kind: str) -> tuple[str, bytes, dict]:
    if not path.is_file():
        raise TableFormatError(f"{path}: missing table file")
    counts: dict = {}
    fingerprint = EMPTY_FINGERPRINT
    profile_name = ""
    with path.open("r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if lineno == 1:
                profile_name = _parse_header(line, kind, path)
                continue
            if line.startswith("#fingerprint="):
                try:
                    fingerprint = bytes.fromhex(line.split("=", 1)[1])
                except ValueError:
                    raise TableFormatError(f"{path}: line {lineno}: bad fingerprint") from None
                continue
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise TableFormatError(
                    f"{path}: line {lineno}: expected 4 tab-separated fields, got {len(fields)}"
                )
            try:
                count = int(fields[3])
            except ValueError:
                raise TableFormatError(f"{path}: line {lineno}: count is not an integer") from None
            if count <= 0:
                raise TableFormatError(f"{path}: line {lineno}: count must be positive")
            if kind == "category":
                if fields[1] not in (SIDE_LEFT, SIDE_RIGHT):
                    raise TableFormatError(f"{path}: line {lineno}: side must be L or R")
                key = CategoryPairKey(fields[0], fields[1], fields[2])
            else:
                key = RelationPairKey(fields[0], fields[1], fields[2])
            if key in counts:
                raise TableFormatError(f"{path}: line {lineno}: duplicate key")
            counts[key] = count
    return profile_name, fingerprint, counts


def read_table(directory: str | Path) -> AllPairsTable:
    directory = Path(directory)
    cat_profile, cat_fp, category_counts = _read_rows(directory / CATEGORY_FILENAME, "category")
    rel_profile, rel_fp, relation_counts = _read_rows(directory / RELATION_FILENAME, "relation")
    if cat_profile != rel_profile:
        raise TableFormatError(
            f"{directory}: category and relation files disagree on profile "
            f"({cat_profile!r} vs {rel_profile!r})"
        )
    if cat_fp != rel_fp:
        raise TableFormatError(f"{directory}: category and relation files disagree on fingerprint")
    return AllPairsTable(cat_profile, category_counts, relation_counts, cat_fp)
