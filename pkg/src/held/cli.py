"""Command-line entry point: gen-corpus, train, infer, eval, bench-traversal, retrieve.

Every run writes a JSON echo of its resolved configuration next to its main
output (``<out>.run.json``, or ``run_config.json`` for directory outputs) so
results stay reproducible. Exit codes: 0 success, 2 input/validation error,
3 model error, 1 anything unexpected. ``HELD_LOG`` sets the log level.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .errors import HeldError, InputFormatError, ModelError, ValidationError
from .evaluation import empirical_inquiries, evaluate, inquiry_formulas, stub_document
from .headings import LogisticHeadingClassifier, RuleHeadingClassifier, train_heading_classifier
from .inference import TraversalOrder, infer_beam, infer_greedy
from .linear import FitConfig
from .objects import Document
from .patterns import DEFAULT_LIBRARY, PatternLibrary, load_pattern_file
from .retrieval import DocStats, LinearRanker, evaluate_rankings, fit_linear_ranker, passage_features, rank_passages
from .scoring import (
    LogisticScorer,
    TrainConfig,
    generate_error_tolerant_tuples,
    generate_tuples,
    train_linear_scorer,
)
from .serialization import (
    dump_tuples,
    read_documents,
    read_qrels,
    read_queries,
    read_trees,
    write_documents,
    write_json,
    write_qrels,
    write_queries,
    write_run,
    write_trees,
)
from .synth import CorpusConfig, corpus_heading_flags, generate, generate_retrieval_labels
from .tree import HierarchyTree, restrict_tree

log = logging.getLogger("held")


def _load_toml(path: str) -> dict:
    try:
        import tomllib  # Python >= 3.11
    except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise InputFormatError(f"cannot read config: {exc}", path) from exc
    except tomllib.TOMLDecodeError as exc:
        raise InputFormatError(f"bad TOML: {exc}", path) from exc


def _corpus_config_from_toml(path: str) -> tuple[CorpusConfig, int, int]:
    raw = _load_toml(path)
    n_queries = int(raw.pop("n_queries", 0))
    query_seed = int(raw.pop("query_seed", 0))
    known = set(CorpusConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise InputFormatError(f"unknown config keys {sorted(unknown)}", path)
    if "objects_per_doc" in raw:
        raw["objects_per_doc"] = tuple(raw["objects_per_doc"])
    if "level_widths" in raw:
        raw["level_widths"] = tuple(tuple(w) for w in raw["level_widths"])
    if "deepen_probs" in raw:
        raw["deepen_probs"] = tuple(raw["deepen_probs"])
    return CorpusConfig(**raw), n_queries, query_seed


def _patterns_from(path: str | None) -> PatternLibrary:
    if path is None:
        return DEFAULT_LIBRARY
    return DEFAULT_LIBRARY.with_extra_entries(load_pattern_file(path))


def _echo_config(args: argparse.Namespace, out_path: str) -> None:
    resolved = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    write_json({"command": args.command, "resolved": resolved}, out_path)


def _match_trees_to_docs(docs: list[Document], trees: dict[str, HierarchyTree]) -> None:
    missing = [d.doc_id for d in docs if d.doc_id not in trees]
    if missing:
        raise ValidationError(f"no tree for documents: {missing[:5]}")


# -- gen-corpus --------------------------------------------------------------


def _cmd_gen_corpus(args: argparse.Namespace) -> int:
    cfg, n_queries, query_seed = _corpus_config_from_toml(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus = generate(cfg)
    write_documents([doc for doc, _ in corpus], str(out_dir / "docs.jsonl"))
    write_trees({doc.doc_id: gold for doc, gold in corpus}, str(out_dir / "gold.json"))
    queries, labels = ([], [])
    if n_queries:
        queries, labels = generate_retrieval_labels(corpus, n_queries, seed=query_seed)
    write_queries(queries, str(out_dir / "queries.jsonl"))
    write_qrels(labels, str(out_dir / "qrels.jsonl"))
    args.resolved_corpus_config = {**cfg.__dict__}
    _echo_config(args, str(out_dir / "run_config.json"))
    log.info("wrote corpus of %d documents to %s", len(corpus), out_dir)
    return 0


# -- train -------------------------------------------------------------------


def _heading_restricted(doc: Document, gold: HierarchyTree):
    from .inference import heading_subdocument

    flags = corpus_heading_flags(gold)
    heads = [i for i, f in enumerate(flags) if f]
    if not heads:
        return None, None
    _, subdoc = heading_subdocument(doc, flags)
    return subdoc, restrict_tree(gold, heads)


def _cmd_train(args: argparse.Namespace) -> int:
    patterns = _patterns_from(args.patterns)
    docs = read_documents(args.docs)
    trees = read_trees(args.gold)
    _match_trees_to_docs(docs, trees)

    tuples = []
    for i, doc in enumerate(docs):
        gold = trees[doc.doc_id]
        if args.mode == "2step":
            subdoc, subgold = _heading_restricted(doc, gold)
            if subdoc is None:
                continue
        else:
            subdoc, subgold = doc, gold
        tuples.extend(generate_tuples(subdoc, subgold, args.k_siblings))
        if args.error_rate > 0:
            tuples.extend(
                generate_error_tolerant_tuples(
                    subdoc, subgold, args.error_rate, args.seed + 1000 + i, args.k_siblings
                )
            )
    config = TrainConfig(seed=args.seed, k_siblings=args.k_siblings, epochs=args.epochs)
    model = train_linear_scorer(tuples, config, patterns)
    model.save(args.out)
    log.info("scorer trained on %d tuples: %s", len(tuples), model.train_meta)

    if args.dump_tuples:
        dump_tuples(tuples, args.dump_tuples, patterns)
    if args.heading_out:
        classifier = train_heading_classifier(
            docs,
            [corpus_heading_flags(trees[d.doc_id]) for d in docs],
            FitConfig(seed=args.seed, epochs=args.epochs),
            patterns,
        )
        classifier.save(args.heading_out)
        log.info("heading classifier trained: %s", classifier.train_meta)
    _echo_config(args, args.out + ".run.json")
    return 0


# -- infer -------------------------------------------------------------------

_WORKER: dict = {}


def _infer_init(model_dict, heading_dict, patterns_path, order, beam, mode, k_siblings):
    patterns = _patterns_from(patterns_path)
    _WORKER["scorer"] = LogisticScorer.from_dict(model_dict, patterns)
    _WORKER["classifier"] = (
        LogisticHeadingClassifier(
            weights=heading_dict["weights"],
            bias=heading_dict["bias"],
            feature_names=tuple(heading_dict["feature_names"]),
            pattern_library_hash=heading_dict.get("pattern_library_hash", ""),
            patterns=patterns,
        )
        if heading_dict
        else None
    )
    _WORKER["order"] = TraversalOrder(order)
    _WORKER["beam"] = beam
    _WORKER["mode"] = mode
    _WORKER["k"] = k_siblings


def _infer_one(doc: Document):
    started = time.perf_counter()
    scorer = _WORKER["scorer"]
    classifier = _WORKER["classifier"]
    kwargs = dict(mode=_WORKER["mode"], k_siblings=_WORKER["k"])
    if _WORKER["mode"] == "2step":
        flags = doc.heading_flags()
        if flags is None:
            clf = classifier or RuleHeadingClassifier(scorer.patterns)
            flags = clf.predict(doc)
        kwargs["heading_flags"] = flags
    if _WORKER["beam"] > 1:
        result = infer_beam(doc, scorer, _WORKER["beam"], **kwargs)
    else:
        result = infer_greedy(doc, scorer, _WORKER["order"], **kwargs)
    wall_ms = (time.perf_counter() - started) * 1000.0
    return doc.doc_id, list(result.tree.parents), result.stats, wall_ms


def _cmd_infer(args: argparse.Namespace) -> int:
    patterns = _patterns_from(args.patterns)
    docs = read_documents(args.docs)
    scorer = LogisticScorer.load(args.model, patterns)
    heading_dict = None
    if args.heading_model:
        heading_dict = LogisticHeadingClassifier.load(args.heading_model, patterns).to_dict()

    init_args = (
        scorer.to_dict(), heading_dict, args.patterns, args.order, args.beam, args.mode, args.k_siblings
    )
    jobs = args.jobs or os.cpu_count() or 1
    if jobs > 1 and len(docs) > 1:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_infer_init, initargs=init_args) as pool:
            results = list(pool.map(_infer_one, docs))
    else:
        _infer_init(*init_args)
        results = [_infer_one(doc) for doc in docs]

    write_trees(((doc_id, HierarchyTree.from_parents(parents)) for doc_id, parents, _, _ in results), args.out)
    with open(args.stats, "w", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["doc_id", "n_objects", "n_headings", "inquiries", "wall_ms"])
        for doc_id, _, stats, wall_ms in results:
            writer.writerow(
                [
                    doc_id,
                    stats.n_objects,
                    "" if stats.n_headings is None else stats.n_headings,
                    stats.inquiries,
                    f"{wall_ms:.3f}",
                ]
            )
    _echo_config(args, args.out + ".run.json")
    return 0


# -- eval --------------------------------------------------------------------


def _cmd_eval(args: argparse.Namespace) -> int:
    preds = read_trees(args.pred)
    golds = read_trees(args.gold)
    report = evaluate(preds, golds)
    per_doc = []
    for doc_id in sorted(golds):
        doc_report = evaluate({doc_id: preds[doc_id]}, {doc_id: golds[doc_id]})
        per_doc.append(
            {
                "doc_id": doc_id,
                "n_nodes": doc_report.n_nodes,
                "node_accuracy": doc_report.node_accuracy,
                "legacy_depth_accuracy": doc_report.legacy_depth_accuracy,
            }
        )
    payload = report.to_dict()
    payload["per_doc"] = per_doc
    write_json(payload, args.out)
    _echo_config(args, args.out + ".run.json")
    print(f"node_accuracy={report.node_accuracy:.4f} over {report.n_nodes} nodes")
    return 0


# -- bench-traversal ----------------------------------------------------------


def _bench_one(item):
    doc_id, parents = item
    gold = HierarchyTree.from_parents(parents)
    doc = stub_document(doc_id, gold.n_nodes)
    stats = inquiry_formulas(gold)
    formulas = {
        TraversalOrder.TRAVERSAL_ALL: stats.formula_all,
        TraversalOrder.ROOT_TO_LEAF: stats.formula_r2l,
        TraversalOrder.LEAF_TO_ROOT: stats.formula_l2r,
    }
    n_headings = sum(1 for i in range(gold.n_nodes) if gold.is_internal(i))
    rows = []
    for order in TraversalOrder:
        rows.append(
            [
                doc_id,
                gold.n_nodes,
                n_headings,
                order.value,
                empirical_inquiries(doc, gold, order, "1step"),
                empirical_inquiries(doc, gold, order, "2step"),
                formulas[order],
            ]
        )
    return rows


def _cmd_bench_traversal(args: argparse.Namespace) -> int:
    golds = read_trees(args.gold)
    items = [(doc_id, list(tree.parents)) for doc_id, tree in sorted(golds.items())]
    jobs = args.jobs or os.cpu_count() or 1
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            all_rows = list(pool.map(_bench_one, items))
    else:
        all_rows = [_bench_one(item) for item in items]
    with open(args.out, "w", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["doc_id", "n_objects", "n_headings", "order", "empirical_one_step",
             "empirical_two_step", "formula"]
        )
        for rows in all_rows:
            writer.writerows(rows)
    _echo_config(args, args.out + ".run.json")
    return 0


# -- retrieve ------------------------------------------------------------------


def _cmd_retrieve(args: argparse.Namespace) -> int:
    docs = {d.doc_id: d for d in read_documents(args.docs)}
    trees = read_trees(args.trees)
    queries = read_queries(args.queries)
    for q in queries:
        if q.doc_id not in docs or q.doc_id not in trees:
            raise ValidationError(f"query {q.query_id} targets unknown document {q.doc_id}")

    stats_cache = {
        doc_id: DocStats(docs[doc_id], trees[doc_id]) for doc_id in {q.doc_id for q in queries}
    }

    qrels: dict[str, set[int]] = {}
    if args.qrels:
        for lab in read_qrels(args.qrels):
            qrels.setdefault(lab.query_id, set()).add(lab.passage_id)

    if args.model:
        ranker = LinearRanker.load(args.model)
    elif qrels:
        rows, ys = [], []
        for q in queries:
            if q.query_id not in qrels:
                continue
            st = stats_cache[q.doc_id]
            for pid in st.passage_ids:
                rows.append(passage_features(q.terms, pid, st))
                ys.append(1.0 if pid in qrels[q.query_id] else 0.0)
        ranker = fit_linear_ranker(rows, ys)
        log.info("fitted reference ranker: %s", ranker.to_dict())
    else:
        raise ModelError("retrieve needs --model, or --qrels to fit the reference ranker")
    if args.save_model:
        ranker.save(args.save_model)

    run_rows = []
    rankings: dict[str, list[int]] = {}
    for q in queries:
        ranked = rank_passages(q.terms, docs[q.doc_id], trees[q.doc_id], ranker, stats_cache[q.doc_id])
        rankings[q.query_id] = [pid for pid, _ in ranked]
        for rank, (pid, score) in enumerate(ranked, start=1):
            run_rows.append((q.query_id, pid, rank, score))
    write_run(run_rows, args.out)

    if qrels:
        metrics = evaluate_rankings(rankings, qrels)
        write_json(metrics, args.out + ".metrics.json")
        print(f"mAP={metrics['map']:.4f} recall@1={metrics['recall@1']:.4f}")
    _echo_config(args, args.out + ".run.json")
    return 0


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="held",
        description="Extract logical document hierarchies from ordered physical objects.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-corpus", help="generate a synthetic annotated corpus")
    p.add_argument("--config", required=True, help="TOML corpus configuration")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(func=_cmd_gen_corpus)

    p = sub.add_parser("train", help="train the put-or-skip scorer (and optionally the heading classifier)")
    p.add_argument("--docs", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--out", required=True, help="scorer model JSON")
    p.add_argument("--heading-out", default=None, help="also train and save a heading classifier")
    p.add_argument("--mode", choices=["1step", "2step"], default="2step")
    p.add_argument("--error-rate", type=float, default=0.1,
                   help="extra tuples from replays with this mis-insertion rate (0 disables)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=120)
    p.add_argument("--k-siblings", type=int, default=3)
    p.add_argument("--patterns", default=None, help="JSON file with extra numbering patterns")
    p.add_argument("--dump-tuples", default=None, help="write the labeled tuples as JSONL")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("infer", help="build trees for documents")
    p.add_argument("--docs", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--order", choices=[o.value for o in TraversalOrder], default="r2l")
    p.add_argument("--beam", type=int, default=1)
    p.add_argument("--mode", choices=["1step", "2step"], default="2step")
    p.add_argument("--out", required=True, help="trees JSON")
    p.add_argument("--stats", required=True, help="per-document stats CSV")
    p.add_argument("--heading-model", default=None)
    p.add_argument("--patterns", default=None)
    p.add_argument("--k-siblings", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=None, help="document-level workers (default: all cores)")
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("eval", help="score predicted trees against references")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("bench-traversal", help="empirical vs closed-form inquiry counts")
    p.add_argument("--gold", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=_cmd_bench_traversal)

    p = sub.add_parser("retrieve", help="rank passages for queries within their documents")
    p.add_argument("--docs", required=True)
    p.add_argument("--trees", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--model", default=None, help="ranker JSON (omit to fit from --qrels)")
    p.add_argument("--qrels", default=None, help="relevance labels (enables metrics and fitting)")
    p.add_argument("--save-model", default=None)
    p.add_argument("--out", required=True, help="TREC-style run TSV")
    p.set_defaults(func=_cmd_retrieve)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("HELD_LOG", "WARNING").upper())
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputFormatError, ValidationError) as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ModelError as exc:
        log.error("%s", exc)
        print(f"model error: {exc}", file=sys.stderr)
        return 3
    except HeldError as exc:  # pragma: no cover - safety net
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
