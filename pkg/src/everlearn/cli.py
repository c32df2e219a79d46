"""Command line entry points: build tables, seed a KB, iterate, export, serve."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import allpairs, corpus, kb as kbstore, learner, ontology as onto
from .profiles import ProfileError, resolve_profile

USAGE_ERROR = 2
DATA_ERROR = 1


def _iri_arg(value: str) -> str:
    if not value or any(c in value for c in ' <>"{}|\\^`'):
        raise argparse.ArgumentTypeError(f"invalid base IRI {value!r}")
    return value


def _profile_arg(value: str):
    try:
        return resolve_profile(value)
    except (ProfileError, OSError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="everlearn",
        description="Bootstrap a language learner: tables, seeds, iterations, export.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "build-allpairs",
        help="scan a corpus into category and relation co-occurrence tables",
    )
    p.add_argument("--corpus", required=True, help="directory of .txt documents")
    p.add_argument(
        "--profile",
        required=True,
        type=_profile_arg,
        help="builtin profile name or profile file",
    )
    p.add_argument("--ontology", help="ontology directory; seeds join the gazetteer")
    p.add_argument("--kb", help="knowledge base log; known instances join the gazetteer")
    p.add_argument("--out", required=True, help="output directory for the table files")
    p.add_argument("--workers", type=int, default=1, help="parallel scan processes")
    p.set_defaults(func=cmd_build_allpairs)

    p = sub.add_parser("init-kb", help="validate an ontology and seed a fresh knowledge base")
    p.add_argument("--ontology", required=True, help="directory with categories.tsv [relations.tsv]")
    p.add_argument("--out", required=True, help="path for the new knowledge base log")
    p.set_defaults(func=cmd_init_kb)

    p = sub.add_parser("iterate", help="run bootstrapping iterations against a table")
    p.add_argument("--kb", required=True, help="knowledge base log to grow")
    p.add_argument("--allpairs", required=True, help="directory with the table files")
    p.add_argument("-n", "--iterations", type=int, default=1, help="how many iterations")
    p.add_argument("--config", help="learner parameter file (key=value lines)")
    p.add_argument(
        "--accept-new-corpus",
        action="store_true",
        help="continue even though the corpus fingerprint changed",
    )
    p.set_defaults(func=cmd_iterate)

    p = sub.add_parser("export-rdf", help="export the current true assertions as N-Triples")
    p.add_argument("--kb", required=True, help="knowledge base log to export")
    p.add_argument("--base-iri", required=True, type=_iri_arg, help="IRI prefix for minted names")
    p.add_argument("--out", required=True, help="output .nt file")
    p.set_defaults(func=cmd_export_rdf)

    p = sub.add_parser("serve", help="serve the knowledge base over HTTP")
    p.add_argument("--kb", required=True, help="knowledge base log; verdicts append to it")
    p.add_argument("--allpairs", help="table directory; required to run iterations")
    p.add_argument("--config", help="learner parameter file (key=value lines)")
    p.add_argument("--ui", help="directory of static files to serve under /ui")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def _load_gazetteer_from_kb(kb: kbstore.KnowledgeBase) -> set[str]:
    surfaces: set[str] = set()
    for (predicate, args), assertion in kb.assertions.items():
        if assertion.status in kbstore.TRUE_STATUSES:
            surfaces.update(args)
    return surfaces


def cmd_build_allpairs(args: argparse.Namespace) -> int:
    profile = args.profile
    if not Path(args.corpus).is_dir():
        print(f"error: corpus directory not found: {args.corpus}", file=sys.stderr)
        return DATA_ERROR
    gazetteer: set[str] = set()
    if args.ontology:
        loaded, report = onto.load_ontology(args.ontology)
        for problem in report.errors:
            print(f"warning: ontology: {problem}", file=sys.stderr)
        gazetteer |= onto.seed_gazetteer(loaded)
    if args.kb:
        gazetteer |= _load_gazetteer_from_kb(kbstore.load_kb(args.kb))
    problems: list[corpus.CorpusError] = []
    documents = list(corpus.load_corpus(args.corpus, errors=problems))
    for problem in problems:
        print(f"warning: {problem.doc_id}: {problem.message}", file=sys.stderr)
    table = allpairs.build_table(
        documents, profile, sorted(gazetteer), workers=max(1, args.workers)
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    allpairs.write_table(table, out)
    print(
        f"scanned {len(documents)} documents with profile {profile.name}: "
        f"{len(table.category_counts)} category pairs, "
        f"{len(table.relation_counts)} relation pairs -> {out}"
    )
    return 0


def cmd_init_kb(args: argparse.Namespace) -> int:
    categories = onto.parse_category_sheet(Path(args.ontology) / "categories.tsv")
    relations_path = Path(args.ontology) / "relations.tsv"
    relations = (
        onto.parse_relation_sheet(relations_path) if relations_path.is_file() else []
    )
    report = onto.validate_ontology(categories, relations)
    for problem in report.errors:
        print(f"error: {problem}", file=sys.stderr)
    for problem in report.warnings:
        print(f"warning: {problem}", file=sys.stderr)
    for note in report.notices:
        print(f"note: {note}", file=sys.stderr)
    if not report.ok:
        return DATA_ERROR
    kb = onto.build_initial_kb(onto.build_ontology(categories, relations))
    kbstore.persist_kb(kb, args.out)
    seeds = sum(1 for a in kb.assertions.values() if a.status == kbstore.STATUS_SEED)
    print(
        f"initialized {args.out}: {len(kb.categories)} categories, "
        f"{len(kb.relations)} relations, {seeds} seed assertions"
    )
    return 0


def cmd_iterate(args: argparse.Namespace) -> int:
    if args.iterations < 0:
        print("error: -n must be non-negative", file=sys.stderr)
        return USAGE_ERROR
    if args.iterations == 0:
        return 0
    config = learner.load_config(args.config) if args.config else learner.LearnerConfig()
    kb = kbstore.load_kb(args.kb)
    table = allpairs.read_table(args.allpairs)
    index = learner.index_table(table)
    for _ in range(args.iterations):
        result = learner.run_iteration(
            kb,
            table,
            config,
            allow_fingerprint_change=args.accept_new_corpus,
            index=index,
        )
        print(
            f"iteration {result.iteration}: "
            f"patterns +{result.stats['new_patterns']}, "
            f"promoted {result.stats['promoted']}, "
            f"queued {result.stats['queued']}, "
            f"expired {result.stats['expired']}, "
            f"dropped {result.stats['dropped']}"
        )
    kbstore.persist_kb(kb, args.kb)
    return 0


def cmd_export_rdf(args: argparse.Namespace) -> int:
    kb = kbstore.load_kb(args.kb)
    text = kbstore.export_rdf(kb, args.base_iri)
    Path(args.out).write_text(text, encoding="utf-8", newline="\n")
    print(f"wrote {text.count(chr(10))} triples to {args.out}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    config = learner.load_config(args.config) if args.config else learner.LearnerConfig()
    kb = kbstore.load_kb(args.kb)
    table = allpairs.read_table(args.allpairs) if args.allpairs else None
    app = create_app(kb, table=table, config=config, log_path=args.kb, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


DATA_ERRORS = (
    ProfileError,
    allpairs.TableFormatError,
    onto.SheetError,
    onto.OntologyError,
    kbstore.KBError,
    learner.ConfigError,
    OSError,
    UnicodeDecodeError,
)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR


def entrypoint() -> None:
    raise SystemExit(main(sys.argv[1:]))


if __name__ == "__main__":
    entrypoint()
