"""Offline evaluation: precision and recall at k over held-out articles.

Every method is wrapped as ``fn(article, k) -> ranking`` so one harness
compares them all. Truth extraction is a callable too, because the fair
target differs by protocol: full section sets for the category-driven
methods, held-out sections for the collaborative filter that already saw
the rest of the row. Articles whose truth set is empty are skipped and
counted, never averaged as zeros.

Precision@k always divides by k, even when fewer than k true sections
exist, so its ceiling is min(1, n/k); recall's is min(1, k/n).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .catgraph import PrunedGraph
from .corpus import Article
from .counts import ScoreTable, recommend_for_article
from .factorize import FactorModel
from .l2r import MergeModel, merge_rankings
from .ranking import Ranking, rank_items
from .topics import TopicModel, TopicSectionTable, recommend_topic

__all__ = [
    "EvalReport",
    "pr_at_k",
    "upper_bounds",
    "evaluate_method",
    "random_recommender",
    "make_counts_recommender",
    "make_l2r_recommender",
    "make_cf_article_recommender",
    "make_cf_category_recommender",
    "make_topic_recommender",
    "export_annotation_tasks",
    "save_report",
    "load_report",
]

_RANDOM_STREAM = 6

Recommender = Callable[[Article, int], "Ranking | Sequence[str]"]


def pr_at_k(recommended: Sequence[str], truth: frozenset | set, k: int) -> tuple[float, float]:
    """(precision, recall) of the top-k slice against a nonempty truth set."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if not truth:
        raise ValueError("truth set is empty; skip the article instead")
    hits = len(set(recommended[:k]) & set(truth))
    return hits / k, hits / len(truth)


def upper_bounds(n_truth: int, k: int) -> tuple[float, float]:
    """Best achievable (precision@k, recall@k) for an article with n true sections."""
    if n_truth < 1 or k < 1:
        raise ValueError("n_truth and k must be at least 1")
    return min(1.0, n_truth / k), min(1.0, k / n_truth)


@dataclass(frozen=True)
class EvalReport:
    method: str
    k_values: tuple[int, ...]
    precision: Mapping[int, float]
    recall: Mapping[int, float]
    n_articles: int
    n_skipped: int


def _titles(result: "Ranking | Sequence") -> list[str]:
    if isinstance(result, Ranking):
        return list(result.titles())
    return [item[0] if isinstance(item, tuple) else item for item in result]


def evaluate_method(
    articles: Iterable[Article],
    recommend_fn: Recommender,
    truth_fn: Callable[[Article], "frozenset | set"],
    k_values: Sequence[int],
    method: str = "",
) -> EvalReport:
    """Macro-averaged precision/recall at each k over articles with truth."""
    ks = tuple(sorted(set(int(k) for k in k_values)))
    if not ks or ks[0] < 1:
        raise ValueError("k_values must contain positive integers")
    kmax = ks[-1]
    p_sum = {k: 0.0 for k in ks}
    r_sum = {k: 0.0 for k in ks}
    n_eval = 0
    n_skipped = 0
    for article in articles:
        truth = truth_fn(article)
        if not truth:
            n_skipped += 1
            continue
        titles = _titles(recommend_fn(article, kmax))
        n_eval += 1
        for k in ks:
            p, r = pr_at_k(titles, truth, k)
            p_sum[k] += p
            r_sum[k] += r
    if n_eval == 0:
        raise ValueError("no articles with a nonempty truth set")
    return EvalReport(
        method=method,
        k_values=ks,
        precision={k: p_sum[k] / n_eval for k in ks},
        recall={k: r_sum[k] / n_eval for k in ks},
        n_articles=n_eval,
        n_skipped=n_skipped,
    )


def random_recommender(vocabulary: Iterable[str], seed: int = 0) -> Recommender:
    """Uniform draws without replacement; the floor every method must clear.

    Seeded per article so results do not depend on evaluation order.
    """
    vocab = tuple(sorted(set(vocabulary)))
    if not vocab:
        raise ValueError("vocabulary is empty")

    def recommend(article: Article, k: int) -> list[str]:
        rng = np.random.default_rng([_RANDOM_STREAM, seed, article.id])
        idx = rng.choice(len(vocab), size=min(k, len(vocab)), replace=False)
        return [vocab[i] for i in idx]

    return recommend


def make_counts_recommender(
    table: ScoreTable,
    pruned: PrunedGraph | None = None,
    include_ancestors: bool = False,
) -> Recommender:
    def recommend(article: Article, k: int) -> Ranking:
        return recommend_for_article(
            table, article, k,
            exclude_existing=False, pruned=pruned, include_ancestors=include_ancestors,
        )

    return recommend


def make_l2r_recommender(
    table: ScoreTable,
    model: MergeModel,
    pruned: PrunedGraph | None = None,
) -> Recommender:
    def recommend(article: Article, k: int) -> Ranking:
        return merge_rankings(table, article, model, k, exclude_existing=False, pruned=pruned)

    return recommend


def make_cf_article_recommender(
    model: FactorModel,
    holdout: Mapping[int, frozenset],
) -> Recommender:
    """Rank unseen columns of the article's factor row.

    Columns the model observed for this article (its row support is the
    section set minus the holdout) are excluded; the natural truth for
    this recommender is ``holdout[article.id]``.
    """

    def recommend(article: Article, k: int) -> Ranking:
        if article.id not in model.row_index:
            return Ranking(items=(), method=f"cf-{model.mode}", note="article not factorized")
        seen = article.section_set() - holdout.get(article.id, frozenset())
        scores = model.scores_for_row(article.id)
        order = np.argsort(scores)[::-1]
        items = []
        for col in order:
            title = model.col_labels[col]
            if title in seen:
                continue
            items.append((title, float(scores[col])))
            if len(items) == k:
                break
        return Ranking(items=tuple(items), method=f"cf-{model.mode}")

    return recommend


def make_cf_category_recommender(model: FactorModel) -> Recommender:
    """Sum reconstructed category rows over the article's factorized categories."""

    def recommend(article: Article, k: int) -> Ranking:
        relevant = sorted(c for c in article.categories if c in model.row_index)
        if not relevant:
            return Ranking(items=(), method=f"cf-{model.mode}", note="no factorized category")
        total = np.zeros(len(model.col_labels))
        for category in relevant:
            total += model.scores_for_row(category)
        merged = {model.col_labels[i]: float(total[i]) for i in range(len(total))}
        return rank_items(merged, k, method=f"cf-{model.mode}")

    return recommend


def make_topic_recommender(
    table: TopicSectionTable, model: TopicModel, inference_iterations: int = 100
) -> Recommender:
    def recommend(article: Article, k: int) -> Ranking:
        return recommend_topic(
            table, model, article, k,
            exclude_existing=False, inference_iterations=inference_iterations,
        )

    return recommend


def export_annotation_tasks(
    recommendations: Mapping[int, "Ranking | Sequence[str]"],
    path,
    max_per_article: int = 10,
) -> int:
    """Write review tasks as TSV rows (article_id, rank, title); returns row count."""
    rows = 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# annotation tasks\n")
        fh.write("article_id\trank\ttitle\n")
        for aid in sorted(recommendations):
            titles = _titles(recommendations[aid])[:max_per_article]
            for rank, title in enumerate(titles, start=1):
                fh.write(f"{aid}\t{rank}\t{title}\n")
                rows += 1
    return rows


def save_report(reports: Sequence[EvalReport], path, fingerprint: str = "") -> None:
    lines = ["# evaluation report"]
    if fingerprint:
        lines.append(f"# fingerprint={fingerprint}")
    for report in reports:
        lines.append(
            f"# method={report.method} articles={report.n_articles} skipped={report.n_skipped}"
        )
        for k in report.k_values:
            lines.append(
                f"{report.method},{k},{report.precision[k]!r},{report.recall[k]!r}"
            )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_report(path) -> list[EvalReport]:
    meta: dict[str, tuple[int, int]] = {}
    rows: dict[str, list[tuple[int, float, float]]] = {}
    order: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("# method="):
                body = line.removeprefix("# ")
                parts = dict(field.split("=", 1) for field in body.split())
                meta[parts["method"]] = (int(parts["articles"]), int(parts["skipped"]))
                continue
            if line.startswith("#"):
                continue
            method, k, p, r = line.split(",")
            if method not in rows:
                rows[method] = []
                order.append(method)
            rows[method].append((int(k), float(p), float(r)))
    reports = []
    for method in order:
        n_articles, n_skipped = meta.get(method, (0, 0))
        ks = tuple(k for k, _, _ in rows[method])
        reports.append(EvalReport(
            method=method,
            k_values=ks,
            precision={k: p for k, p, _ in rows[method]},
            recall={k: r for k, _, r in rows[method]},
            n_articles=n_articles,
            n_skipped=n_skipped,
        ))
    return reports
