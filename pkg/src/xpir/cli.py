"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data/processing error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .conceptindex import build_index
from .errors import XpirError
from .evalkit import (
    CorpusConfig,
    ExperimentConfig,
    generate_corpus,
    run_experiment,
    write_corpus,
    write_report,
)
from .ontology import load_ontology
from .profile import create_profile, profile_to_json
from .retrieval import Query, search
from .storage import ProfileStore, load_index, save_index

log = logging.getLogger("xpir")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="xpir", description="Personalized concept-based XML retrieval")
    parser.add_argument("--version", action="version", version=f"xpir {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ontology", help="ontology utilities")
    onto_sub = p.add_subparsers(dest="subcommand", required=True)
    check = onto_sub.add_parser("check", help="validate a file and print the weight table")
    check.add_argument("file", type=Path)

    p = sub.add_parser("index", help="index utilities")
    index_sub = p.add_subparsers(dest="subcommand", required=True)
    build = index_sub.add_parser("build", help="index a directory of XML files")
    build.add_argument("corpus_dir", type=Path)
    build.add_argument("out", type=Path)
    build.add_argument("--ontology", type=Path, required=True)
    build.add_argument("--on-error", choices=("abort", "skip"), default="abort")
    build.add_argument("--timestamp", type=int, default=0)
    build.add_argument("--uniform-weights", action="store_true",
                       help="replace concept weights by 1/|N| (baseline configuration)")
    build.add_argument("--attribute-text", action="store_true",
                       help="also extract concepts from attribute values")

    p = sub.add_parser("search", help="query an index")
    p.add_argument("index", type=Path)
    p.add_argument("--ontology", type=Path, required=True)
    p.add_argument("--profiles", type=Path, help="profile store directory")
    p.add_argument("--user", help="user id (enables personalization and learning)")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--query", help="free-text query")
    group.add_argument("--concept", help="concept-id seed query")
    p.add_argument("-k", type=int, default=10)
    p.add_argument("--hops", type=int, default=1, help="expansion hops for concept seeds")
    p.add_argument("--relations", default="", help="comma-separated relation names to expand")
    p.add_argument("--overlap-filter", action="store_true")
    p.add_argument("--no-profile", action="store_true", help="disable personalization")
    p.add_argument("--no-learn", action="store_true", help="answer without updating the profile")
    p.add_argument("--normalize-profile", action="store_true")
    p.add_argument("--json", action="store_true", dest="as_json")

    p = sub.add_parser("profile", help="profile utilities")
    prof_sub = p.add_subparsers(dest="subcommand", required=True)
    for name in ("show", "create"):
        q = prof_sub.add_parser(name)
        q.add_argument("user_id")
        q.add_argument("--profiles", type=Path, required=True)
        if name == "create":
            q.add_argument("--ontology", type=Path, required=True)

    p = sub.add_parser("eval", help="evaluation harness")
    eval_sub = p.add_subparsers(dest="subcommand", required=True)
    runp = eval_sub.add_parser("run", help="run the experiment described by a JSON config")
    runp.add_argument("config", type=Path, nargs="?", help="defaults to the built-in experiment")
    runp.add_argument("--out", type=Path, default=Path("eval_out"))
    runp.add_argument("--no-figures", action="store_true")

    p = sub.add_parser("gen", help="synthetic data generation")
    gen_sub = p.add_subparsers(dest="subcommand", required=True)
    corpus = gen_sub.add_parser("corpus", help="generate a corpus, query set, and qrels")
    corpus.add_argument("config", type=Path, nargs="?", help="JSON corpus config")
    corpus.add_argument("--ontology", type=Path, help="defaults to the bundled ontology")
    corpus.add_argument("--out", type=Path, default=Path("corpus_out"))

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("config", type=Path)

    return parser


def _cmd_ontology_check(args) -> int:
    ontology = load_ontology(args.file)
    print(f"ontology: {ontology.name} ({len(ontology)} concepts, fingerprint {ontology.fingerprint[:12]})")
    if ontology.margin is None:
        print("delta: undefined (uniform fallback, all coefficients equal)")
    else:
        print(f"delta: {float(ontology.margin):.6f}")
    print(f"coef_avg: {float(ontology.coef_avg):.6f}")
    print(f"w_avg: {1.0 / len(ontology):.6f}")
    print(f"{'concept':<28} {'coef':>8} {'w_r':>10}")
    for cid in sorted(ontology.concepts):
        print(f"{cid:<28} {float(ontology.coefficients[cid]):>8.4f} {ontology.weights[cid]:>10.6f}")
    print(f"{'total':<28} {'':>8} {sum(ontology.weights.values()):>10.6f}")
    return 0


def _cmd_index_build(args) -> int:
    ontology = load_ontology(args.ontology)
    files = sorted(args.corpus_dir.glob("*.xml"))
    if not files:
        raise XpirError(f"no .xml files under {args.corpus_dir}")
    documents = [(path.stem, path.read_bytes()) for path in files]
    index = build_index(
        documents, ontology,
        on_error=args.on_error, timestamp=args.timestamp,
        uniform_weights=args.uniform_weights,
        include_attribute_text=args.attribute_text,
    )
    save_index(index, args.out)
    print(
        f"indexed {len(index.doc_ids())} documents, "
        f"{len(index.text_entries)} text and {len(index.element_entries)} element entries -> {args.out}"
    )
    return 0


def _cmd_search(args) -> int:
    ontology = load_ontology(args.ontology)
    index = load_index(args.index, ontology)
    profile = None
    store = None
    if args.user:
        if not args.profiles:
            raise XpirError("--user requires --profiles")
        store = ProfileStore(args.profiles)
        profile = store.load(args.user)

    relations = tuple(r for r in args.relations.split(",") if r)
    query = Query(
        text=args.query, concept=args.concept,
        relation_names=relations, max_hops=args.hops,
    )
    results = search(
        index, ontology, query, profile,
        k=args.k, overlap_filter=args.overlap_filter,
        personalize=not args.no_profile,
        normalize_profile=args.normalize_profile,
    )
    if args.as_json:
        print(json.dumps([
            {
                "doc_id": r.doc_id, "start": r.start, "end": r.end,
                "node_type": r.node_type, "score": r.score,
                "matched_concepts": list(r.matched_concepts),
            }
            for r in results
        ], indent=2))
    else:
        for rank_pos, r in enumerate(results, start=1):
            matched = ",".join(r.matched_concepts)
            print(f"{rank_pos:>3}. {r.score:9.6f}"
                  f" {r.doc_id} [{r.start},{r.end}] {r.node_type} ({matched})")
    if store is not None and profile is not None and not args.no_learn:
        from .profile import update_profile
        from .retrieval import build_query_vector

        vector = build_query_vector(query, ontology)
        with store.lock(profile.user_id):
            fresh = store.load(profile.user_id)
            updated = update_profile(fresh, vector, timestamp=len(fresh.history))
            store.save(updated, locked=True)
    return 0


def _cmd_profile(args) -> int:
    store = ProfileStore(args.profiles)
    if args.subcommand == "create":
        ontology = load_ontology(args.ontology)
        profile = create_profile(args.user_id, ontology)
        store.create(profile)
        print(f"created profile {args.user_id!r} with {len(profile.interests)} interests")
    else:
        profile = store.load(args.user_id)
        print(json.dumps(profile_to_json(profile), indent=2))
    return 0


def _cmd_eval_run(args) -> int:
    config = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    report = run_experiment(config)
    outputs = write_report(report, args.out, figures=not args.no_figures)
    for name in ("csv", "text"):
        print(f"wrote {outputs[name]}")
    mb, mp = report.means["baseline"], report.means["proposed"]
    print(f"baseline: P={mb['precision']:.3f} R={mb['recall']:.3f}")
    print(f"proposed: P={mp['precision']:.3f} R={mp['recall']:.3f}")
    return 0


def _cmd_gen_corpus(args) -> int:
    if args.ontology:
        ontology = load_ontology(args.ontology)
    else:
        from .fixtures import computer_science_ontology_bytes

        ontology = load_ontology(computer_science_ontology_bytes())
    if args.config:
        payload = json.loads(args.config.read_text("utf-8"))
        for key in ("sections_range", "paragraphs_range", "base_paragraphs_range",
                    "topic_mentions", "domains", "extra_query_concepts", "required_topics"):
            if key in payload:
                payload[key] = tuple(payload[key])
        config = CorpusConfig(**payload)
    else:
        config = CorpusConfig()
    corpus = generate_corpus(ontology, config)
    write_corpus(corpus, args.out)
    print(f"wrote {len(corpus.documents)} documents, {len(corpus.queries)} queries -> {args.out}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    config = ServiceConfig.from_json(args.config)
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


_HANDLERS = {
    ("ontology", "check"): _cmd_ontology_check,
    ("index", "build"): _cmd_index_build,
    ("search", None): _cmd_search,
    ("profile", "show"): _cmd_profile,
    ("profile", "create"): _cmd_profile,
    ("eval", "run"): _cmd_eval_run,
    ("gen", "corpus"): _cmd_gen_corpus,
    ("serve", None): _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(name)s: %(message)s",
    )
    handler = _HANDLERS[(args.command, getattr(args, "subcommand", None))]
    try:
        return handler(args)
    except XpirError as exc:
        print(f"xpir: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"xpir: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
