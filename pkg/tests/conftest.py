from __future__ import annotations

import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make oracles importable

from everlearn.corpus import Document
from everlearn.ontology import CategorySpec, RelationSpec, build_initial_kb, build_ontology
from everlearn.profiles import LanguageProfile


@pytest.fixture
def toy_profile():
    return LanguageProfile(name="toy", min_gram=3, max_gram=3)


@pytest.fixture
def wide_profile():
    return LanguageProfile(
        name="wide", min_gram=3, max_gram=5, max_relation_gap=10, connector_words=frozenset({"of"})
    )


VOCAB_LOWER = ["alpha", "born", "cold", "dust", "end", "for", "grew", "hot", "in", "jolt"]
VOCAB_UPPER = ["Ada", "Berlin", "Corto", "Dima", "Eyre", "Fargo"]
VOCAB_PUNCT = [",", ".", "(", ")", "«", "…"]
VOCAB_CONNECT = ["of", "de"]


def random_document(rng: random.Random, doc_id: str, max_sentences: int = 8) -> Document:
    """A document of random token soup: mixed case, connectors, punctuation."""
    sentences = []
    for _ in range(rng.randint(1, max_sentences)):
        words = []
        for _ in range(rng.randint(1, 12)):
            bucket = rng.random()
            if bucket < 0.45:
                words.append(rng.choice(VOCAB_LOWER))
            elif bucket < 0.80:
                words.append(rng.choice(VOCAB_UPPER))
            elif bucket < 0.90:
                words.append(rng.choice(VOCAB_CONNECT))
            else:
                word = rng.choice(VOCAB_UPPER if rng.random() < 0.5 else VOCAB_LOWER)
                words.append(rng.choice(VOCAB_PUNCT) + word if rng.random() < 0.5 else word + rng.choice(VOCAB_PUNCT))
        sentences.append(" ".join(words) + rng.choice([".", "!", "?", ""]))
    return Document(doc_id, " ".join(sentences))


def random_corpus(seed: int, max_documents: int = 6) -> list[Document]:
    rng = random.Random(seed)
    return [
        random_document(rng, f"doc{idx:02}.txt")
        for idx in range(rng.randint(1, max_documents))
    ]


PLANT_TEMPLATES = {
    "metal": [
        "melts under intense heat",
        "rusts in damp air",
        "conducts current very well",
        "bends beneath heavy load",
        "shines when freshly cut",
    ],
    "river": [
        "flows past quiet villages",
        "floods during spring rain",
        "carves deep canyon walls",
        "feeds the lower delta",
        "freezes over in winter",
    ],
    "game": [
        "rewards patient opening play",
        "ships with wooden pieces",
        "takes about an hour",
        "supports up to four",
        "dates back many centuries",
    ],
}


def planted_corpus(entities_per_category: int = 50) -> tuple[list[Document], dict[str, list[str]]]:
    """A corpus where every entity of a category appears with all five of its
    category's templates, and nothing else.  Ground truth is returned."""
    truth: dict[str, list[str]] = {}
    documents: list[Document] = []
    doc_index = 0
    for category, templates in PLANT_TEMPLATES.items():
        entities = [f"{category.capitalize()}{i:02}" for i in range(entities_per_category)]
        truth[category] = entities
        lines = [
            f"{entity} {template}."
            for entity in entities
            for template in templates
        ]
        documents.append(Document(f"{doc_index:02}_{category}.txt", "\n".join(lines)))
        doc_index += 1
    return documents, truth


def planted_ontology(truth: dict[str, list[str]], seeds_per_category: int = 12):
    categories = [
        CategorySpec(
            name=category,
            seeds=tuple(entities[:seeds_per_category]),
            human_format=f"X is a {category}",
        )
        for category, entities in sorted(truth.items())
    ]
    return build_ontology(categories, [])


CEO_BETWEEN = [
    "runs the firm",
    "manages daily work at",
    "signs every contract at",
]


def ceo_corpus(n_pairs: int = 20, conflicts: int = 6) -> tuple[list[Document], list[tuple[str, str]]]:
    """People linked to companies by three connective templates.

    The first `conflicts` people are additionally linked to a second company
    (same evidence strength), so cardinality filtering always has work.
    """
    pairs = [(f"Person{i:02}", f"Firm{i:02}") for i in range(n_pairs)]
    lines = []
    for person, firm in pairs:
        for mid in CEO_BETWEEN:
            lines.append(f"{person} {mid} {firm} since twenty years ago.")
    for i in range(conflicts):
        person = f"Person{i:02}"
        rival = f"Firm{(i + n_pairs // 2) % n_pairs:02}"
        for mid in CEO_BETWEEN:
            lines.append(f"{person} {mid} {rival} since twenty years ago.")
    return [Document("ceo.txt", "\n".join(lines))], pairs


def ceo_ontology(pairs: list[tuple[str, str]], seed_count: int = 10):
    people = [p for p, _ in pairs]
    firms = [f for _, f in pairs]
    categories = [
        CategorySpec("person", tuple(people[:seed_count]), "X is a person"),
        CategorySpec("company", tuple(firms[:seed_count]), "X is a company"),
    ]
    relations = [
        RelationSpec(
            name="ceoOf",
            domain_category="person",
            range_category="company",
            seeds=tuple(pairs[:seed_count]),
            human_format="X is the chief executive of Y",
            nr_values="1",
            nr_inverse_values="1",
        )
    ]
    return build_ontology(categories, relations)


@pytest.fixture
def planted():
    documents, truth = planted_corpus()
    return documents, truth, planted_ontology(truth)


@pytest.fixture
def seeded_kb(planted):
    _, _, ontology = planted
    return build_initial_kb(ontology, now=0.0)
