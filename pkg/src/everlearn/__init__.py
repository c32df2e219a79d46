"""Bootstrapping toolkit for never-ending language learning in any language."""

from .profiles import LanguageProfile, ProfileError, load_profile, resolve_profile
from .corpus import (
    CorpusError,
    Document,
    EntityMention,
    Token,
    TokenizedSentence,
    identify_entities,
    load_corpus,
    split_sentences,
    tokenize,
)
from .allpairs import (
    AllPairsTable,
    CategoryPairKey,
    RelationPairKey,
    TableFormatError,
    build_table,
    merge,
    read_table,
    write_table,
)
from .ontology import (
    CategorySpec,
    Ontology,
    OntologyError,
    RelationSpec,
    SheetError,
    ValidationReport,
    build_initial_kb,
    build_ontology,
    load_ontology,
    parse_category_sheet,
    parse_relation_sheet,
    validate_ontology,
)
from .kb import (
    Assertion,
    ConstraintViolation,
    KBError,
    KnowledgeBase,
    QueuedCandidate,
    VerdictError,
    export_rdf,
    load_kb,
    persist_kb,
)
from .learner import (
    CandidateInstance,
    IterationResult,
    LearnerConfig,
    LearnerError,
    PatternScore,
    load_config,
    run_iteration,
)

__version__ = "0.1.0"

__all__ = [
    "AllPairsTable",
    "Assertion",
    "CandidateInstance",
    "CategoryPairKey",
    "CategorySpec",
    "ConstraintViolation",
    "CorpusError",
    "Document",
    "EntityMention",
    "IterationResult",
    "KBError",
    "KnowledgeBase",
    "LanguageProfile",
    "LearnerConfig",
    "LearnerError",
    "Ontology",
    "OntologyError",
    "PatternScore",
    "ProfileError",
    "QueuedCandidate",
    "RelationPairKey",
    "RelationSpec",
    "SheetError",
    "TableFormatError",
    "Token",
    "TokenizedSentence",
    "ValidationReport",
    "VerdictError",
    "build_initial_kb",
    "build_ontology",
    "build_table",
    "export_rdf",
    "identify_entities",
    "load_config",
    "load_corpus",
    "load_kb",
    "load_ontology",
    "load_profile",
    "merge",
    "parse_category_sheet",
    "parse_relation_sheet",
    "persist_kb",
    "read_table",
    "resolve_profile",
    "run_iteration",
    "split_sentences",
    "tokenize",
    "validate_ontology",
    "write_table",
]
