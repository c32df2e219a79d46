"""Corpus ingestion: raw documents to tokenized sentences and entity mentions.

Everything in this module preserves surface strings exactly as found in the
source text.  Tokens are never lowercased, stemmed, or otherwise rewritten;
a mention's surface is always recoverable from the sentence it came from.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple

from .profiles import LanguageProfile

# Punctuation peeled off token edges into tokens of their own.  Interior
# punctuation (hyphens, apostrophes inside words) stays attached, so
# "Saint-Etienne" and "d'Artagnan" remain single tokens.
EDGE_PUNCTUATION = frozenset(",.;:!?\"'()[]{}«»‹›„“”‘’…¡¿")


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str


@dataclass(frozen=True)
class CorpusError:
    """One skipped file, with the reason it was skipped."""

    doc_id: str
    message: str


class Token(NamedTuple):
    text: str
    offset: int  # byte offset into the sentence's raw_text (UTF-8)


@dataclass(frozen=True)
class TokenizedSentence:
    doc_id: str
    sentence_index: int
    raw_text: str
    tokens: tuple[Token, ...]

    def token_texts(self) -> list[str]:
        return [t.text for t in self.tokens]


@dataclass(frozen=True)
class EntityMention:
    """A candidate named entity: a token span plus its verbatim surface."""

    sentence: TokenizedSentence
    start_token: int
    end_token: int  # exclusive
    surface: str


def load_corpus(
    root_path: str | Path,
    profile: LanguageProfile | None = None,
    errors: list[CorpusError] | None = None,
) -> Iterator[Document]:
    """Yield one Document per .txt file under root_path, recursively.

    doc_id is the path relative to the root; documents come out in
    lexicographic doc_id order.  Unreadable or non-UTF-8 files are skipped;
    if an errors list is supplied, one CorpusError per skipped file is
    appended to it so the stream can keep going.
    """
    root = Path(root_path)
    if not root.is_dir():
        raise FileNotFoundError(f"corpus root {root} is not a directory")
    entries = sorted(
        (p.relative_to(root).as_posix(), p) for p in root.rglob("*.txt") if p.is_file()
    )
    for doc_id, path in entries:
        try:
            data = path.read_bytes()
        except OSError as exc:
            if errors is not None:
                errors.append(CorpusError(doc_id, f"unreadable: {exc}"))
            continue
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            if errors is not None:
                errors.append(CorpusError(doc_id, f"not valid UTF-8: {exc}"))
            continue
        yield Document(doc_id, text)


def split_sentences(document: str, profile: LanguageProfile) -> list[str]:
    """Split a document into sentences.

    A sentence ends after any terminator character that is followed by
    whitespace (plus the final tail of the document).  Abbreviations like
    "St. Étienne" therefore oversplit; downstream counting tolerates this.
    Returned sentences are stripped and never empty.
    """
    terminators = profile.sentence_terminators
    sentences: list[str] = []
    start = 0
    n = len(document)
    for i in range(n):
        if document[i] in terminators and i + 1 < n and document[i + 1].isspace():
            piece = document[start : i + 1].strip()
            if piece:
                sentences.append(piece)
            start = i + 1
    tail = document[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def _split_chunk(text: str, start: int, end: int) -> list[tuple[int, int]]:
    """Split one whitespace-free chunk into token spans.

    Leading and trailing edge punctuation becomes one token per character;
    whatever remains in the middle is a single token.
    """
    spans: list[tuple[int, int]] = []
    while start < end and text[start] in EDGE_PUNCTUATION:
        spans.append((start, start + 1))
        start += 1
    trailing: list[tuple[int, int]] = []
    while end > start and text[end - 1] in EDGE_PUNCTUATION:
        trailing.append((end - 1, end))
        end -= 1
    if start < end:
        spans.append((start, end))
    spans.extend(reversed(trailing))
    return spans


def tokenize(
    sentence: str,
    profile: LanguageProfile,
    doc_id: str = "",
    sentence_index: int = 0,
) -> TokenizedSentence:
    """Tokenize one sentence.

    Tokens are maximal runs of non-whitespace, with leading and trailing
    punctuation split into separate tokens.  Token text is the exact
    substring of the sentence; offsets are UTF-8 byte positions.
    """
    if not sentence:
        raise ValueError("cannot tokenize an empty sentence")
    char_spans: list[tuple[int, int]] = []
    i = 0
    n = len(sentence)
    while i < n:
        if sentence[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not sentence[j].isspace():
            j += 1
        char_spans.extend(_split_chunk(sentence, i, j))
        i = j
    tokens: list[Token] = []
    char_pos = 0
    byte_pos = 0
    for start, end in char_spans:
        byte_pos += len(sentence[char_pos:start].encode("utf-8"))
        tokens.append(Token(sentence[start:end], byte_pos))
        byte_pos += len(sentence[start:end].encode("utf-8"))
        char_pos = end
    return TokenizedSentence(doc_id, sentence_index, sentence, tuple(tokens))


def _is_capitalized(token: str) -> bool:
    return bool(token) and token[0].isupper()


def identify_entities(
    sentence: TokenizedSentence,
    profile: LanguageProfile,
    gazetteer: Iterable[str] = (),
) -> list[EntityMention]:
    """Find candidate entity mentions in a tokenized sentence.

    Two sources: (a) maximal runs of capitalized tokens, where connector
    words may occur strictly inside a run, and (b) every gazetteer surface
    present as a contiguous token subsequence.  Gazetteer surfaces must be
    space-joined token sequences.  Mentions may overlap; exact duplicate
    spans are collapsed.  Sentence-initial capitalized words are kept.
    """
    tokens = sentence.token_texts()
    n = len(tokens)
    spans: set[tuple[int, int]] = set()

    connectors = profile.connector_words
    i = 0
    while i < n:
        if _is_capitalized(tokens[i]):
            last = i
            j = i + 1
            while j < n:
                if _is_capitalized(tokens[j]):
                    last = j
                    j += 1
                elif tokens[j] in connectors:
                    j += 1
                else:
                    break
            spans.add((i, last + 1))
            i = last + 1
        else:
            i += 1

    gazetteer = tuple(gazetteer)
    if gazetteer:
        fold = (lambda s: s) if profile.case_sensitive_matching else str.casefold
        folded = [fold(t) for t in tokens]
        by_first: dict[str, list[tuple[str, ...]]] = {}
        for surface in gazetteer:
            parts = tuple(fold(p) for p in surface.split())
            if parts:
                by_first.setdefault(parts[0], []).append(parts)
        for idx, first in enumerate(folded):
            for parts in by_first.get(first, ()):
                end = idx + len(parts)
                if end <= n and tuple(folded[idx:end]) == parts:
                    spans.add((idx, end))

    return [
        EntityMention(sentence, start, end, " ".join(tokens[start:end]))
        for start, end in sorted(spans)
    ]


def sentence_stream(document: Document, profile: LanguageProfile) -> list[TokenizedSentence]:
    """Split and tokenize a whole document, numbering sentences in order."""
    return [
        tokenize(text, profile, doc_id=document.doc_id, sentence_index=index)
        for index, text in enumerate(split_sentences(document.text, profile))
    ]
