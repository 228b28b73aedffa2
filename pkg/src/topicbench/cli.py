"""Command-line interface.

Subcommands: ingest, run, explain, score, serve. Exit code 0 on success;
failures print a stage-tagged message to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import corpus as corpus_mod
from . import report
from .errors import TopicbenchError
from .lime import explanation_from_record
from .service import serve as make_server
from .workbench import (
    BUNDLED_CORPUS,
    ExperimentConfig,
    RunStore,
    WorkbenchStore,
    run_experiment,
)


def cmd_ingest(args) -> int:
    docs = corpus_mod.ingest(args.corpus)
    print(f"ingested {len(docs)} documents from {args.corpus}")
    if args.adjudicate:
        kept = corpus_mod.adjudicate(docs)
        counts = corpus_mod.label_counts(kept)
        print(f"consensus: {len(kept)} documents")
        for label, n in counts.items():
            print(f"  {label.value}: {n}")
    return 0


def cmd_run(args) -> int:
    if args.config:
        config = ExperimentConfig.from_file(args.config)
        if args.backend:
            config = replace(config, backend=args.backend)
        if args.seed is not None:
            config = replace(config, seed=args.seed)
    else:
        config = ExperimentConfig(
            corpus_path=args.corpus or str(BUNDLED_CORPUS),
            backend=args.backend or "lda",
            seed=args.seed if args.seed is not None else 0,
        )
    if args.embed_before_split:
        config = replace(config, embed_before_split=True)
    run_dir = Path(args.out_dir) / f"run-{config.run_id()}"
    summary = run_experiment(config, run_dir)
    print(f"run {summary.run_id} ({summary.backend}, seed {summary.seed}) -> {run_dir}")
    print(
        f"train/test: {summary.n_train}/{summary.n_test}; "
        f"cv mean F1 {summary.cv_mean_f1:.4f}"
    )
    e = summary.evaluation
    print(
        f"test: accuracy {e.accuracy:.4f}  precision {e.precision:.4f}  "
        f"recall {e.recall:.4f}  f1 {e.f1:.4f}"
    )
    print(f"explanations: {summary.n_explanations}; fingerprint {summary.fingerprint}")
    return 0


def cmd_explain(args) -> int:
    store = RunStore(args.run_dir)
    explanations = store.explanations()
    if args.doc:
        explanations = [e for e in explanations if e.doc_id == args.doc]
        if not explanations:
            raise TopicbenchError(f"no explanation for document {args.doc!r}")
    out_dir = Path(args.figures) if args.figures else Path(args.run_dir) / "figures"
    out_dir.mkdir(parents=True, exist_ok=True)
    for e in explanations:
        path = out_dir / f"explanation_{e.doc_id}.png"
        report.render_explanation_figure(e, path)
        label = e.predicted_label().value
        top = e.contributions[e.predicted_label()]
        terms = ", ".join(f"{t} ({w:+.3f})" for t, w in top[:3])
        print(f"{e.doc_id}: predicted {label} p={max(e.class_probabilities):.2f}; {terms}")
        print(f"  figure: {path}")
    return 0


def cmd_score(args) -> int:
    store = RunStore(args.run_dir)
    agreement = store.agreement()
    print(f"run {store.run_id} ({store.backend})")
    print(f"judged {agreement.n_judged} of {agreement.n_test} test documents")
    print(f"agreement (c/n_test): {agreement.c}/{agreement.n_test} = {agreement.score}")
    if agreement.n_judged:
        print(f"agreement over judged-so-far: {agreement.score_judged}")
    for backend, score in agreement.per_backend.items():
        print(f"  {backend}: {score}")
    return 0


def cmd_serve(args) -> int:
    store = WorkbenchStore(args.run_root)
    server = make_server(args.addr, store)
    print(f"serving {len(store.runs())} run(s) on {server.url}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topicbench",
        description="Abstract topic classification workbench with explainable review",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a corpus file and report label counts")
    p.add_argument("corpus", help="path to a JSON-lines corpus file")
    p.add_argument("--adjudicate", action="store_true", help="also report consensus counts")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("run", help="execute the full pipeline for one backend")
    p.add_argument("--corpus", help=f"corpus file (default: bundled {BUNDLED_CORPUS.name})")
    p.add_argument("--backend", choices=("lda", "word2vec", "contextual"))
    p.add_argument("--seed", type=int)
    p.add_argument("--config", help="JSON experiment config file")
    p.add_argument("--out-dir", default="runs", help="directory that receives run-<id>/")
    p.add_argument(
        "--embed-before-split",
        action="store_true",
        help="fit embeddings on the whole corpus before splitting (instead of "
        "fitting on the training split and folding test documents in)",
    )
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("explain", help="render explanation reports from a finished run")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--doc", help="only this document id (default: all)")
    p.add_argument("--figures", help="output directory for figures")
    p.set_defaults(fn=cmd_explain)

    p = sub.add_parser("score", help="agreement score for a run's judgments")
    p.add_argument("--run-dir", required=True)
    p.set_defaults(fn=cmd_score)

    p = sub.add_parser("serve", help="serve the review API over a directory of runs")
    p.add_argument("--addr", default="127.0.0.1:8765")
    p.add_argument("--run-dir", dest="run_root", default="runs")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except TopicbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
