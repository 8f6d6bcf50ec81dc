"""Learned merging of per-category rankings.

The plain recommender sums P(S | C) over an article's categories with
every category weighted equally. Here each proposal instead contributes
a learned function of its score, its rank within the proposing category,
and a few properties of that category (purity, closure size). The model
is a pointwise ridge regression over a fixed feature pool, with features
admitted one at a time while they improve precision at ``k_opt`` on a
held-out slice of the validation articles. An untrained fallback with
weight 1.0 on the raw score reproduces the unweighted sum exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .catgraph import PrunedGraph
from .corpus import Article
from .counts import ScoreTable
from .ranking import Ranking, rank_items

__all__ = [
    "FEATURE_POOL",
    "MergeModel",
    "merge_rankings",
    "train_merge_model",
    "save_merge_model",
    "load_merge_model",
]


def _monomial_names() -> list[str]:
    # all s^a * g^b with a + b <= 4, grouped by total degree, s-heavy first
    names = []
    for degree in range(5):
        for a in range(degree, -1, -1):
            names.append(f"s{a}g{degree - a}")
    return names


FEATURE_POOL: tuple[str, ...] = ("score", "rank", *_monomial_names(), "logsize", "expg")


def _feature_row(score: float, rank: int, purity: float, size_norm: float) -> np.ndarray:
    """All pool features for one proposal, in FEATURE_POOL order."""
    row = np.empty(len(FEATURE_POOL), dtype=np.float64)
    row[0] = score
    row[1] = float(rank)
    i = 2
    s_pow = [score**a for a in range(5)]
    g_pow = [purity**b for b in range(5)]
    for degree in range(5):
        for a in range(degree, -1, -1):
            row[i] = s_pow[a] * g_pow[degree - a]
            i += 1
    row[i] = math.log1p(size_norm)
    row[i + 1] = math.exp(purity)
    return row


@dataclass(frozen=True)
class MergeModel:
    """Linear proposal scorer: prediction = sum of weight * feature.

    ``weights`` keeps (feature name, coefficient) pairs in the order the
    features were admitted. There is no separate intercept; the constant
    feature ``s0g0`` plays that role when selected.
    """

    weights: tuple[tuple[str, float], ...]
    k_opt: int = 10

    @classmethod
    def identity(cls, k_opt: int = 10) -> "MergeModel":
        """Weight 1.0 on the raw score: identical to the unweighted sum."""
        return cls(weights=(("score", 1.0),), k_opt=k_opt)

    def feature_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.weights)

    def needs_graph(self) -> bool:
        return any(name not in ("score", "rank") for name, _ in self.weights)

    def predict(self, features: Mapping[str, float]) -> float:
        return sum(w * features[name] for name, w in self.weights)

    def predict_rows(self, rows: np.ndarray) -> np.ndarray:
        """Vectorized predict over rows laid out in FEATURE_POOL order."""
        idx = [FEATURE_POOL.index(name) for name, _ in self.weights]
        coef = np.array([w for _, w in self.weights])
        return rows[:, idx] @ coef


def _proposal_features(
    table: ScoreTable,
    pruned: PrunedGraph | None,
    category: int,
    max_size: int,
) -> tuple[list[str], np.ndarray]:
    titles = []
    rows = np.empty((len(table.scores[category]), len(FEATURE_POOL)))
    if pruned is not None:
        purity = pruned.purity[category]
        size_norm = pruned.closure_size[category] / max_size
    else:
        purity, size_norm = 0.0, 0.0
    for position, (title, score) in enumerate(table.scores[category]):
        titles.append(title)
        rows[position] = _feature_row(score, position + 1, purity, size_norm)
    return titles, rows


def merge_rankings(
    table: ScoreTable,
    article: Article,
    model: MergeModel,
    k: int,
    exclude_existing: bool = True,
    pruned: PrunedGraph | None = None,
) -> Ranking:
    """Rank candidate sections by summed model predictions.

    Mirrors the unweighted recommender's category selection: every
    surviving direct category of the article proposes its scored titles,
    and proposals for the same title add up. Models touching category
    features (anything beyond score and rank) need the pruned graph.
    """
    if model.needs_graph() and pruned is None:
        raise ValueError("model uses category features; pass the pruned graph")
    relevant = sorted(c for c in article.categories if c in table.scores)
    if not relevant:
        return Ranking(items=(), method="counts+l2r", note="no surviving direct category")
    max_size = max(pruned.closure_size.values()) if pruned is not None else 1
    merged: dict[str, float] = {}
    for category in relevant:
        titles, rows = _proposal_features(table, pruned, category, max_size)
        contributions = model.predict_rows(rows)
        for title, value in zip(titles, contributions):
            merged[title] = merged.get(title, 0.0) + float(value)
    exclude = article.section_set() if exclude_existing else ()
    return rank_items(merged, k, exclude=exclude, method="counts+l2r")


def _precision_at_k(
    per_article: list[tuple[list[str], np.ndarray, np.ndarray, frozenset]],
    model: MergeModel,
    k: int,
) -> float:
    """Macro precision@k of a model over prepared per-article proposals."""
    idx = [FEATURE_POOL.index(name) for name, _ in model.weights]
    coef = np.array([w for _, w in model.weights])
    total = 0.0
    for titles, rows, _, truth in per_article:
        contributions = rows[:, idx] @ coef
        merged: dict[str, float] = {}
        for title, value in zip(titles, contributions):
            merged[title] = merged.get(title, 0.0) + float(value)
        top = sorted(merged.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
        hits = sum(1 for title, _ in top if title in truth)
        total += hits / k
    return total / len(per_article)


def train_merge_model(
    table: ScoreTable,
    pruned: PrunedGraph,
    validation_articles: Sequence[Article],
    k_opt: int = 10,
    reg: float = 1e-3,
    max_features: int = 6,
    min_articles: int = 50,
) -> MergeModel:
    """Fit merge weights by greedy forward selection.

    Usable validation articles (nonempty section set, at least one scored
    category) are split in half by sorted-id parity: even positions fit
    the ridge weights, odd positions pick which features to keep. A
    feature enters only while it strictly improves precision@k_opt over
    the identity baseline, so the result never selects itself below the
    unweighted sum on the selection slice. Refuses to train on fewer than
    ``min_articles`` usable articles.
    """
    if k_opt < 1:
        raise ValueError("k_opt must be at least 1")
    usable = [
        a for a in sorted(validation_articles, key=lambda a: a.id)
        if a.section_set() and any(c in table.scores for c in a.categories)
    ]
    if len(usable) < min_articles:
        raise ValueError(
            f"need at least {min_articles} usable validation articles, got {len(usable)}"
        )
    max_size = max(pruned.closure_size.values())

    def prepare(article: Article) -> tuple[list[str], np.ndarray, np.ndarray, frozenset]:
        relevant = sorted(c for c in article.categories if c in table.scores)
        titles: list[str] = []
        blocks = []
        for category in relevant:
            t, rows = _proposal_features(table, pruned, category, max_size)
            titles.extend(t)
            blocks.append(rows)
        rows = np.vstack(blocks)
        truth = article.section_set()
        y = np.array([1.0 if title in truth else 0.0 for title in titles])
        return titles, rows, y, truth

    fit_half = [prepare(a) for a in usable[0::2]]
    sel_half = [prepare(a) for a in usable[1::2]]
    fit_X = np.vstack([rows for _, rows, _, _ in fit_half])
    fit_y = np.concatenate([y for _, _, y, _ in fit_half])

    def ridge(names: list[str]) -> np.ndarray:
        idx = [FEATURE_POOL.index(name) for name in names]
        X = fit_X[:, idx]
        gram = X.T @ X + reg * np.eye(len(idx))
        return np.linalg.solve(gram, X.T @ fit_y)

    best = MergeModel.identity(k_opt)
    best_prec = _precision_at_k(sel_half, best, k_opt)
    selected: list[str] = []
    while len(selected) < max_features:
        round_best: MergeModel | None = None
        round_prec = best_prec
        for name in FEATURE_POOL:
            if name in selected:
                continue
            trial = selected + [name]
            coef = ridge(trial)
            candidate = MergeModel(weights=tuple(zip(trial, coef.tolist())), k_opt=k_opt)
            prec = _precision_at_k(sel_half, candidate, k_opt)
            if prec > round_prec + 1e-9:
                round_best, round_prec = candidate, prec
        if round_best is None:
            break
        best, best_prec = round_best, round_prec
        selected = list(best.feature_names())
    return best


def save_merge_model(model: MergeModel, path, fingerprint: str = "") -> None:
    lines = ["# merge model"]
    if fingerprint:
        lines.append(f"# fingerprint={fingerprint}")
    lines.append(f"# k_opt={model.k_opt}")
    for name, weight in model.weights:
        lines.append(f"{name}\t{weight!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_merge_model(path) -> MergeModel:
    k_opt = 10
    weights: list[tuple[str, float]] = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                if line.startswith("# k_opt="):
                    k_opt = int(line.removeprefix("# k_opt="))
                continue
            name, _, value = line.partition("\t")
            if name not in FEATURE_POOL:
                raise ValueError(f"unknown merge feature {name!r}")
            weights.append((name, float(value)))
    if not weights:
        raise ValueError(f"no weights found in {path}")
    return MergeModel(weights=tuple(weights), k_opt=k_opt)
