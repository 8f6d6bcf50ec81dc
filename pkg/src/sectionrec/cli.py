"""Staged command line pipeline.

Stages communicate through plain files in the configured working
directory, each stamped with the configuration fingerprint:

    sectionrec -c run.toml synth          # or bring your own data
    sectionrec -c run.toml ingest
    sectionrec -c run.toml prune-graph
    sectionrec -c run.toml train counts
    sectionrec -c run.toml train cf-article
    sectionrec -c run.toml train cf-category
    sectionrec -c run.toml train lda
    sectionrec -c run.toml train l2r
    sectionrec -c run.toml recommend --article-id 17 --method counts
    sectionrec -c run.toml evaluate --methods counts,l2r,random
    sectionrec -c run.toml coverage

Every stage is deterministic given the config, so re-running a stage
rewrites its artifact byte for byte. Exit codes: 0 success, 2 bad
configuration or arguments, 3 missing prerequisite artifact, 4 malformed
data.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .catgraph import (
    CategoryGraph,
    PrunedGraph,
    break_cycles,
    load_category_file,
    load_pruned,
    load_type_map,
    prune,
    restrict_to_root,
    save_annotations,
    save_category_file,
    save_pruned,
    save_type_map,
)
from .config import KNOWN_METHODS, RunConfig, fingerprint, load_config
from .corpus import (
    Corpus,
    corpus_stats,
    filter_corpus,
    load_blacklist,
    load_corpus,
    load_split,
    save_blacklist,
    save_corpus,
    save_split,
    split_corpus,
)
from .counts import (
    compute_scores,
    coverage_curve,
    load_score_table,
    recommend_for_article,
    recommend_for_category,
    save_score_table,
)
from .errors import ConfigError, MissingPrerequisiteError
from .evaluation import (
    evaluate_method,
    export_annotation_tasks,
    make_cf_article_recommender,
    make_cf_category_recommender,
    make_counts_recommender,
    make_l2r_recommender,
    make_topic_recommender,
    random_recommender,
    save_report,
)
from .factorize import (
    als_explicit,
    als_implicit,
    build_article_matrix,
    build_category_matrix,
    load_holdout,
    load_model,
    recommend_from_model,
    save_holdout,
    save_model,
)
from .l2r import load_merge_model, merge_rankings, save_merge_model, train_merge_model
from .synthetic import generate_synthetic
from .topics import (
    build_topic_section_table,
    load_topic_model,
    load_topic_sections,
    recommend_topic,
    save_topic_model,
    save_topic_sections,
    train_topic_model,
)

_FILES = {
    "corpus": "corpus.jsonl",
    "categories": "categories.tsv",
    "types": "types.tsv",
    "blacklist": "blacklist.txt",
    "annotations": "annotations.tsv",
    "planted": "planted.tsv",
    "filtered": "filtered.jsonl",
    "split": "split.json",
    "pruned": "pruned.tsv",
    "counts": "counts.tsv",
    "cf_article": "cf_article.model",
    "cf_article_holdout": "cf_article.holdout",
    "cf_category": "cf_category.model",
    "lda": "lda.model",
    "lda_sections": "lda_sections.tsv",
    "l2r": "l2r.model",
    "report": "report.csv",
    "coverage": "coverage.csv",
}


def _path(cfg: RunConfig, key: str) -> Path:
    return Path(cfg.data_dir) / _FILES[key]


def _require(cfg: RunConfig, key: str, producer: str) -> Path:
    path = _path(cfg, key)
    if not path.exists():
        raise MissingPrerequisiteError(
            f"{path} not found; run `sectionrec {producer}` first"
        )
    return path


def _input(cfg: RunConfig, key: str, producer: str) -> Path:
    """Resolve an ingest input: explicit config path, else the synth artifact."""
    explicit = getattr(cfg.ingest, key, "")
    if explicit:
        path = Path(explicit)
        if not path.exists():
            raise MissingPrerequisiteError(f"configured input {path} does not exist")
        return path
    return _require(cfg, key, producer)


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.data_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_filtered(cfg: RunConfig) -> Corpus:
    return load_corpus(
        _require(cfg, "filtered", "ingest"), _input(cfg, "categories", "synth")
    )


def _base_graph(cfg: RunConfig, corpus: Corpus) -> CategoryGraph:
    names, edges, _ = load_category_file(_input(cfg, "categories", "synth"))
    memberships = {a.id: set(a.categories) for a in corpus}
    root = cfg.prune.root_id if cfg.prune.root_id in names else None
    return CategoryGraph(names, edges, memberships, root)


def _load_pruned_graph(cfg: RunConfig, corpus: Corpus) -> PrunedGraph:
    base = _base_graph(cfg, corpus)
    return load_pruned(_require(cfg, "pruned", "prune-graph"), base)


def cmd_synth(cfg: RunConfig, args: argparse.Namespace) -> int:
    data = generate_synthetic(cfg.synth, seed=cfg.seed)
    out = _outdir(cfg)
    fp = fingerprint(cfg)
    header = [f"fingerprint={fp}"]
    save_corpus(data.corpus, _path(cfg, "corpus"), header_lines=header)
    save_category_file(
        data.graph.names, data.graph.edges(), _path(cfg, "categories"), header_lines=header
    )
    save_type_map(data.type_map, _path(cfg, "types"), header_lines=header)
    save_blacklist(data.corpus.blacklist, _path(cfg, "blacklist"))
    save_annotations(data.annotations, _path(cfg, "annotations"), header_lines=header)
    lines = [f"# fingerprint={fp}", "# leaf_id\trank\ttitle\tprobability"]
    for leaf in data.leaf_ids:
        for rank, (title, prob) in enumerate(data.planted[leaf]):
            lines.append(f"{leaf}\t{rank}\t{title}\t{prob!r}")
    _path(cfg, "planted").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(
        f"wrote {len(data.corpus)} articles and {len(data.graph.names)} categories to {out}"
    )
    return 0


def cmd_ingest(cfg: RunConfig, args: argparse.Namespace) -> int:
    corpus = load_corpus(
        _input(cfg, "corpus", "synth"), _input(cfg, "categories", "synth")
    )
    explicit = cfg.ingest.blacklist
    if explicit:
        bl_path = Path(explicit)
        if not bl_path.exists():
            raise MissingPrerequisiteError(f"configured input {bl_path} does not exist")
        blacklist = load_blacklist(bl_path)
    else:
        default = _path(cfg, "blacklist")
        blacklist = load_blacklist(default) if default.exists() else corpus.blacklist
    filtered = filter_corpus(corpus, blacklist)
    split = split_corpus(
        filtered,
        ratios=(cfg.split.train, cfg.split.test, cfg.split.validation),
        seed=cfg.seed,
    )
    _outdir(cfg)
    fp = fingerprint(cfg)
    save_corpus(filtered, _path(cfg, "filtered"), header_lines=[f"fingerprint={fp}"])
    save_split(split, _path(cfg, "split"), fingerprint=fp)
    stats = corpus_stats(filtered)
    print(
        f"kept {len(filtered)} of {len(corpus)} articles; "
        f"mean sections {stats.mean_sections:.2f}"
    )
    print(
        f"split: train={len(split.train)} test={len(split.test)} "
        f"validation={len(split.validation)}"
    )
    for key in sorted(filtered.warnings):
        print(f"  {key}: {filtered.warnings[key]}")
    return 0


def cmd_prune(cfg: RunConfig, args: argparse.Namespace) -> int:
    corpus = _load_filtered(cfg)
    base = _base_graph(cfg, corpus)
    if cfg.prune.root_id not in base.names:
        raise ConfigError(f"prune.root_id {cfg.prune.root_id} is not a known category")
    type_map, _ = load_type_map(_input(cfg, "types", "synth"))
    restricted = restrict_to_root(base, cfg.prune.root_id)
    dag, removed_edges = break_cycles(restricted)
    pruned = prune(dag, type_map, cfg.prune.threshold)
    fp = fingerprint(cfg)
    save_pruned(
        pruned,
        _path(cfg, "pruned"),
        header_lines=[f"fingerprint={fp}", f"removed_edges={len(removed_edges)}"],
    )
    print(
        f"{len(base.names)} categories, {len(restricted.names)} under the root; "
        f"broke {len(removed_edges)} cycle edges; "
        f"{len(pruned.graph.names)} survive pruning at threshold {cfg.prune.threshold}"
    )
    return 0


def _train_counts(cfg: RunConfig) -> int:
    corpus = _load_filtered(cfg)
    split = load_split(_require(cfg, "split", "ingest"))
    pruned = _load_pruned_graph(cfg, corpus)
    table = compute_scores(split.subset(corpus, "train"), pruned)
    save_score_table(
        table, _path(cfg, "counts"), header_lines=[f"fingerprint={fingerprint(cfg)}"]
    )
    print(f"scored {len(table)} categories from {len(split.train)} training articles")
    return 0


def _train_cf_article(cfg: RunConfig) -> int:
    corpus = _load_filtered(cfg)
    split = load_split(_require(cfg, "split", "ingest"))
    matrix, holdout = build_article_matrix(
        corpus,
        split,
        holdout_fraction=cfg.cf_article.holdout_fraction,
        min_sections=cfg.cf_article.min_sections,
        seed=cfg.seed,
    )
    model = als_explicit(
        matrix,
        k=cfg.cf_article.k,
        reg=cfg.cf_article.reg,
        iterations=cfg.cf_article.iterations,
        seed=cfg.seed,
    )
    fp = fingerprint(cfg)
    save_model(model, _path(cfg, "cf_article"), header_lines=[f"fingerprint={fp}"])
    save_holdout(
        holdout, _path(cfg, "cf_article_holdout"), header_lines=[f"fingerprint={fp}"]
    )
    rows, cols = matrix.matrix.shape
    print(
        f"factorized {rows} articles x {cols} titles at k={model.k}; "
        f"final loss {model.loss_trace[-1]:.3f}; "
        f"held out sections from {len(holdout)} test articles"
    )
    return 0


def _train_cf_category(cfg: RunConfig) -> int:
    table = load_score_table(_require(cfg, "counts", "train counts"))
    matrix = build_category_matrix(table, top_n=cfg.cf_category.top_n)
    model = als_implicit(
        matrix,
        k=cfg.cf_category.k,
        reg=cfg.cf_category.reg,
        alpha=cfg.cf_category.alpha,
        iterations=cfg.cf_category.iterations,
        seed=cfg.seed,
    )
    save_model(
        model, _path(cfg, "cf_category"), header_lines=[f"fingerprint={fingerprint(cfg)}"]
    )
    rows, cols = matrix.matrix.shape
    print(f"factorized {rows} categories x {cols} titles at k={model.k}")
    return 0


def _train_lda(cfg: RunConfig) -> int:
    corpus = _load_filtered(cfg)
    split = load_split(_require(cfg, "split", "ingest"))
    train_articles = split.subset(corpus, "train")
    documents = [(a.id, list(a.tokens)) for a in train_articles if a.tokens]
    alpha = cfg.topics.alpha if cfg.topics.alpha > 0 else None
    model = train_topic_model(
        documents,
        k=cfg.topics.k,
        alpha=alpha,
        beta=cfg.topics.beta,
        iterations=cfg.topics.iterations,
        seed=cfg.seed,
    )
    table = build_topic_section_table(model, train_articles)
    fp = fingerprint(cfg)
    save_topic_model(model, _path(cfg, "lda"), header_lines=[f"fingerprint={fp}"])
    save_topic_sections(
        table, _path(cfg, "lda_sections"), header_lines=[f"fingerprint={fp}"]
    )
    print(
        f"trained {model.k} topics over {len(documents)} documents "
        f"(vocabulary {len(model.vocabulary)})"
    )
    return 0


def _train_l2r(cfg: RunConfig) -> int:
    corpus = _load_filtered(cfg)
    split = load_split(_require(cfg, "split", "ingest"))
    pruned = _load_pruned_graph(cfg, corpus)
    table = load_score_table(_require(cfg, "counts", "train counts"))
    model = train_merge_model(
        table,
        pruned,
        split.subset(corpus, "validation"),
        k_opt=cfg.l2r.k_opt,
        reg=cfg.l2r.reg,
        max_features=cfg.l2r.max_features,
        min_articles=cfg.l2r.min_articles,
    )
    save_merge_model(model, _path(cfg, "l2r"), fingerprint=fingerprint(cfg))
    print(f"selected features: {', '.join(model.feature_names())}")
    return 0


def cmd_train(cfg: RunConfig, args: argparse.Namespace) -> int:
    handlers = {
        "counts": _train_counts,
        "cf-article": _train_cf_article,
        "cf-category": _train_cf_category,
        "lda": _train_lda,
        "l2r": _train_l2r,
    }
    return handlers[args.model](cfg)


def _print_ranking(ranking) -> None:
    if getattr(ranking, "note", None):
        print(f"# note: {ranking.note}")
    for position, (title, score) in enumerate(ranking.items, start=1):
        print(f"{position}\t{score:.6f}\t{title}")


def cmd_recommend(cfg: RunConfig, args: argparse.Namespace) -> int:
    method = args.method
    if args.category_id is not None:
        if method not in ("counts", "cf-category"):
            raise ConfigError(f"method {method!r} cannot target a category")
        if method == "counts":
            table = load_score_table(_require(cfg, "counts", "train counts"))
            ranking = recommend_for_category(table, args.category_id, args.k)
        else:
            model = load_model(_require(cfg, "cf_category", "train cf-category"))
            ranking = recommend_from_model(model, args.category_id, args.k)
        _print_ranking(ranking)
        return 0

    if method == "cf-category":
        raise ConfigError("method 'cf-category' targets a category; pass --category-id")
    corpus = _load_filtered(cfg)
    if args.article_id not in corpus.articles:
        raise ValueError(f"article {args.article_id} is not in the filtered corpus")
    article = corpus.articles[args.article_id]
    exclude = not args.keep_existing

    if method == "counts":
        table = load_score_table(_require(cfg, "counts", "train counts"))
        pruned = _load_pruned_graph(cfg, corpus)
        ranking = recommend_for_article(
            table, article, args.k,
            exclude_existing=exclude, pruned=pruned,
            include_ancestors=cfg.counts.include_ancestors,
        )
    elif method == "l2r":
        table = load_score_table(_require(cfg, "counts", "train counts"))
        pruned = _load_pruned_graph(cfg, corpus)
        model = load_merge_model(_require(cfg, "l2r", "train l2r"))
        ranking = merge_rankings(
            table, article, model, args.k, exclude_existing=exclude, pruned=pruned
        )
    elif method == "topics":
        model = load_topic_model(_require(cfg, "lda", "train lda"))
        table = load_topic_sections(_require(cfg, "lda_sections", "train lda"))
        ranking = recommend_topic(
            table, model, article, args.k,
            exclude_existing=exclude,
            inference_iterations=cfg.topics.inference_iterations,
        )
    else:  # cf-article
        model = load_model(_require(cfg, "cf_article", "train cf-article"))
        if article.id not in model.row_index:
            raise ValueError(
                f"article {article.id} was not factorized (it had no sections)"
            )
        exclusions = article.section_set() if exclude else ()
        ranking = recommend_from_model(model, article.id, args.k, exclusions)
    _print_ranking(ranking)
    return 0


def cmd_evaluate(cfg: RunConfig, args: argparse.Namespace) -> int:
    methods = tuple(args.methods.split(",")) if args.methods else cfg.evaluate.methods
    for method in methods:
        if method not in KNOWN_METHODS:
            raise ConfigError(
                f"unknown method {method!r}; known: {', '.join(KNOWN_METHODS)}"
            )
    ks = list(cfg.evaluate.k_values)
    if args.kmax:
        ks = [k for k in ks if k <= args.kmax]
        if args.kmax not in ks:
            ks.append(args.kmax)
    ks = sorted(set(ks))

    corpus = _load_filtered(cfg)
    split = load_split(_require(cfg, "split", "ingest"))
    test_articles = split.subset(corpus, "test")

    def full_truth(article):
        return article.section_set()

    reports = []
    counts_table = None
    pruned = None
    for method in methods:
        truth = full_truth
        if method == "random":
            vocabulary = sorted(
                {t for a in split.subset(corpus, "train") for t in a.section_set()}
            )
            recommend = random_recommender(vocabulary, seed=cfg.seed)
        elif method == "counts":
            counts_table = counts_table or load_score_table(
                _require(cfg, "counts", "train counts")
            )
            pruned = pruned or _load_pruned_graph(cfg, corpus)
            recommend = make_counts_recommender(
                counts_table, pruned, include_ancestors=cfg.counts.include_ancestors
            )
        elif method == "l2r":
            counts_table = counts_table or load_score_table(
                _require(cfg, "counts", "train counts")
            )
            pruned = pruned or _load_pruned_graph(cfg, corpus)
            merge_model = load_merge_model(_require(cfg, "l2r", "train l2r"))
            recommend = make_l2r_recommender(counts_table, merge_model, pruned)
        elif method == "topics":
            topic_model = load_topic_model(_require(cfg, "lda", "train lda"))
            topic_table = load_topic_sections(_require(cfg, "lda_sections", "train lda"))
            recommend = make_topic_recommender(
                topic_table, topic_model,
                inference_iterations=cfg.topics.inference_iterations,
            )
        elif method == "cf-article":
            cf_model = load_model(_require(cfg, "cf_article", "train cf-article"))
            holdout = load_holdout(
                _require(cfg, "cf_article_holdout", "train cf-article")
            )
            recommend = make_cf_article_recommender(cf_model, holdout)
            truth = lambda a, h=holdout: h.get(a.id, frozenset())
        else:  # cf-category
            cf_model = load_model(_require(cfg, "cf_category", "train cf-category"))
            recommend = make_cf_category_recommender(cf_model)
        report = evaluate_method(test_articles, recommend, truth, ks, method=method)
        reports.append(report)
        print(f"{method}: articles={report.n_articles} skipped={report.n_skipped}")
        for k in report.k_values:
            print(f"  p@{k}={report.precision[k]:.4f}  r@{k}={report.recall[k]:.4f}")

    _outdir(cfg)
    save_report(reports, _path(cfg, "report"), fingerprint=fingerprint(cfg))
    if args.export_annotations:
        counts_table = counts_table or load_score_table(
            _require(cfg, "counts", "train counts")
        )
        pruned = pruned or _load_pruned_graph(cfg, corpus)
        recommend = make_counts_recommender(
            counts_table, pruned, include_ancestors=cfg.counts.include_ancestors
        )
        tasks = {a.id: recommend(a, 10) for a in test_articles}
        rows = export_annotation_tasks(tasks, args.export_annotations)
        print(f"exported {rows} annotation rows to {args.export_annotations}")
    return 0


def cmd_coverage(cfg: RunConfig, args: argparse.Namespace) -> int:
    table = load_score_table(_require(cfg, "counts", "train counts"))
    curve = coverage_curve(table, args.x_max)
    lines = ["x,fraction"]
    for x, frac in curve:
        print(f"{x}\t{frac:.4f}")
        lines.append(f"{x},{frac!r}")
    _outdir(cfg)
    _path(cfg, "coverage").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sectionrec",
        description="Recommend section titles for reference articles.",
    )
    parser.add_argument(
        "-c", "--config", metavar="TOML", default=None,
        help="run configuration (defaults apply when omitted)",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", help="generate the synthetic corpus and category network")
    sub.add_parser("ingest", help="filter the corpus and assign the split")
    sub.add_parser("prune-graph", help="restrict, break cycles, and prune by purity")
    train = sub.add_parser("train", help="train one model stage")
    train.add_argument(
        "model", choices=["counts", "cf-article", "cf-category", "lda", "l2r"]
    )
    rec = sub.add_parser("recommend", help="rank section titles for one target")
    target = rec.add_mutually_exclusive_group(required=True)
    target.add_argument("--article-id", type=int)
    target.add_argument("--category-id", type=int)
    rec.add_argument(
        "--method", default="counts",
        choices=["counts", "l2r", "topics", "cf-article", "cf-category"],
    )
    rec.add_argument("-k", type=int, default=10, dest="k")
    rec.add_argument(
        "--keep-existing", action="store_true",
        help="keep the article's current sections in the ranking",
    )
    ev = sub.add_parser("evaluate", help="precision/recall over the test split")
    ev.add_argument("--methods", default="", help="comma-separated method list")
    ev.add_argument("--kmax", type=int, default=0, help="cap and extend the k grid")
    ev.add_argument(
        "--export-annotations", metavar="PATH", default="",
        help="also write manual-review tasks for the test articles",
    )
    cov = sub.add_parser("coverage", help="how many sections categories can offer")
    cov.add_argument("--x-max", type=int, default=50)
    return parser


_COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "prune-graph": cmd_prune,
    "train": cmd_train,
    "recommend": cmd_recommend,
    "evaluate": cmd_evaluate,
    "coverage": cmd_coverage,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MissingPrerequisiteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
