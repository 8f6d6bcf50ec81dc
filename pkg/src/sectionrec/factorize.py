"""Alternating-least-squares recommenders over article and category matrices.

Two modes share the machinery. The explicit mode factorizes the binary
article x section matrix treating absent cells as unobserved, so the loss
runs over observed entries only. The implicit mode factorizes a
category x section matrix of row-normalized scores with
confidence weights c = 1 + alpha * r over every cell (preference 1 where
r > 0, else 0).
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
from scipy import sparse

from .corpus import Corpus, SplitAssignment
from .counts import ScoreTable
from .errors import FormatError
from .ranking import Ranking, rank_items

__all__ = [
    "FactorModel",
    "RatingsMatrix",
    "als_explicit",
    "als_implicit",
    "build_article_matrix",
    "build_category_matrix",
    "load_holdout",
    "load_model",
    "recommend_from_model",
    "save_holdout",
    "save_model",
    "score_table_from_model",
]

_ALS_STREAM = 2
_HOLDOUT_STREAM = 3


@dataclass
class RatingsMatrix:
    """Sparse ratings with row ids and column section titles.

    ``mode`` is "explicit" (binary, absent = unobserved) or "implicit"
    (row-normalized scores, absent = zero preference).
    """

    matrix: sparse.csr_matrix
    row_labels: tuple[int, ...]
    col_labels: tuple[str, ...]
    mode: str

    def __post_init__(self):
        if self.mode not in ("explicit", "implicit"):
            raise ValueError(f"unknown matrix mode {self.mode!r}")
        if self.matrix.shape != (len(self.row_labels), len(self.col_labels)):
            raise ValueError("matrix shape does not match label counts")
        self.row_index = {label: i for i, label in enumerate(self.row_labels)}
        self.col_index = {label: i for i, label in enumerate(self.col_labels)}


@dataclass
class FactorModel:
    """Learned factors plus the exact training configuration and loss trace."""

    row_factors: np.ndarray
    col_factors: np.ndarray
    row_labels: tuple[int, ...]
    col_labels: tuple[str, ...]
    mode: str
    k: int
    reg: float
    alpha: float | None
    iterations: int
    seed: int
    loss_trace: tuple[float, ...]

    def __post_init__(self):
        self.row_index = {label: i for i, label in enumerate(self.row_labels)}

    def scores_for_row(self, row_id: int) -> np.ndarray:
        if row_id not in self.row_index:
            raise ValueError(f"unknown row id {row_id}")
        return self.row_factors[self.row_index[row_id]] @ self.col_factors.T


def build_article_matrix(
    corpus: Corpus,
    split: SplitAssignment,
    holdout_fraction: float = 0.5,
    min_sections: int = 2,
    seed: int = 0,
) -> tuple[RatingsMatrix, dict[int, frozenset[str]]]:
    """Binary article x section matrix with held-out test cells.

    Every article with at least one section becomes a row. Rows of test
    articles with >= ``min_sections`` distinct sections keep only a
    (1 - holdout_fraction) share, rounded half up, with at least one kept
    and one held out; the held-out titles per article come back as the
    holdout map (the evaluation ground truth). Test articles below
    ``min_sections`` get full rows and are absent from the map. Columns
    cover every distinct title in the corpus, so held-out titles stay
    rankable.
    """
    if not 0.0 < holdout_fraction < 1.0:
        raise ValueError(f"holdout_fraction must be in (0, 1), got {holdout_fraction}")
    if min_sections < 2:
        raise ValueError(f"min_sections must be at least 2, got {min_sections}")

    articles = [a for a in corpus.sorted_articles() if a.sections]
    vocabulary = sorted({title for a in articles for title in a.sections})
    col_index = {title: j for j, title in enumerate(vocabulary)}

    holdout: dict[int, frozenset[str]] = {}
    rows: list[int] = []
    cols: list[int] = []
    row_labels: list[int] = []
    for i, article in enumerate(articles):
        titles = sorted(article.section_set())
        if article.id in split.test and len(titles) >= min_sections:
            n = len(titles)
            n_held = max(1, min(n - 1, int(n * holdout_fraction + 0.5)))
            rng = np.random.default_rng([_HOLDOUT_STREAM, seed, article.id])
            held_idx = set(rng.choice(n, size=n_held, replace=False).tolist())
            held = frozenset(titles[j] for j in held_idx)
            holdout[article.id] = held
            titles = [t for t in titles if t not in held]
        row_labels.append(article.id)
        for title in titles:
            rows.append(i)
            cols.append(col_index[title])
    matrix = sparse.csr_matrix(
        (np.ones(len(rows)), (rows, cols)),
        shape=(len(row_labels), len(vocabulary)),
    )
    ratings = RatingsMatrix(
        matrix=matrix,
        row_labels=tuple(row_labels),
        col_labels=tuple(vocabulary),
        mode="explicit",
    )
    return ratings, holdout


def build_category_matrix(table: ScoreTable, top_n: int = 100) -> RatingsMatrix:
    """Category x section matrix: top ``top_n`` scores per category, rows normalized to 1."""
    if top_n < 1:
        raise ValueError(f"top_n must be at least 1, got {top_n}")
    categories = table.categories()
    if not categories:
        raise ValueError("score table is empty")
    kept: dict[int, list[tuple[str, float]]] = {}
    titles: set[str] = set()
    for c in categories:
        top = table.scores[c][:top_n]
        kept[c] = list(top)
        titles.update(title for title, _ in top)
    vocabulary = sorted(titles)
    col_index = {title: j for j, title in enumerate(vocabulary)}

    rows: list[int] = []
    cols: list[int] = []
    data: list[float] = []
    for i, c in enumerate(categories):
        total = sum(score for _, score in kept[c])
        for title, score in kept[c]:
            rows.append(i)
            cols.append(col_index[title])
            data.append(score / total)
    matrix = sparse.csr_matrix(
        (np.asarray(data), (rows, cols)), shape=(len(categories), len(vocabulary))
    )
    return RatingsMatrix(
        matrix=matrix,
        row_labels=tuple(categories),
        col_labels=tuple(vocabulary),
        mode="implicit",
    )


def _validate_als_args(matrix: sparse.csr_matrix, k: int, iterations: int) -> None:
    n_rows, n_cols = matrix.shape
    if not 1 <= k <= min(n_rows, n_cols):
        raise ValueError(
            f"k must be in [1, min(rows, cols)] = [1, {min(n_rows, n_cols)}], got {k}"
        )
    if iterations < 1:
        raise ValueError(f"iterations must be at least 1, got {iterations}")


def _init_factors(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    return rng.standard_normal((n, k)) * (0.1 / np.sqrt(k))


def _solve_explicit_side(
    target: np.ndarray, other: np.ndarray, mat: sparse.csr_matrix, reg: float
) -> None:
    # exact ridge solve per row over its observed entries only
    k = target.shape[1]
    eye = reg * np.eye(k)
    indptr, indices, data = mat.indptr, mat.indices, mat.data
    for i in range(target.shape[0]):
        lo, hi = indptr[i], indptr[i + 1]
        if lo == hi:
            target[i] = 0.0
            continue
        vo = other[indices[lo:hi]]
        a = vo.T @ vo + eye
        b = vo.T @ data[lo:hi]
        target[i] = np.linalg.solve(a, b)


def _explicit_loss(coo: sparse.coo_matrix, u: np.ndarray, v: np.ndarray, reg: float) -> float:
    pred = np.einsum("ij,ij->i", u[coo.row], v[coo.col])
    sq = float(((coo.data - pred) ** 2).sum())
    return sq + reg * (float((u**2).sum()) + float((v**2).sum()))


def als_explicit(
    ratings: RatingsMatrix,
    k: int = 32,
    reg: float = 0.1,
    iterations: int = 15,
    seed: int = 0,
) -> FactorModel:
    """Alternating ridge regression over observed cells only.

    Minimizes ``sum_observed (m - u.v)^2 + reg * (||U||^2 + ||V||^2)``.
    Both half-steps solve their subproblem exactly, so the recorded
    per-iteration loss trace is non-increasing. A non-finite loss aborts
    (it signals degenerate input or a vanishing ``reg``).
    """
    if ratings.mode != "explicit":
        raise ValueError(f"als_explicit needs an explicit matrix, got {ratings.mode!r}")
    mat = ratings.matrix.tocsr()
    _validate_als_args(mat, k, iterations)
    rng = np.random.default_rng([_ALS_STREAM, seed])
    u = _init_factors(rng, mat.shape[0], k)
    v = _init_factors(rng, mat.shape[1], k)
    mat_t = mat.T.tocsr()
    coo = mat.tocoo()
    trace: list[float] = []
    for _ in range(iterations):
        _solve_explicit_side(u, v, mat, reg)
        _solve_explicit_side(v, u, mat_t, reg)
        loss = _explicit_loss(coo, u, v, reg)
        if not np.isfinite(loss):
            raise ValueError("non-finite training loss; check reg and input values")
        trace.append(loss)
    return FactorModel(
        row_factors=u,
        col_factors=v,
        row_labels=ratings.row_labels,
        col_labels=ratings.col_labels,
        mode="explicit",
        k=k,
        reg=reg,
        alpha=None,
        iterations=iterations,
        seed=seed,
        loss_trace=tuple(trace),
    )


def _solve_implicit_side(
    target: np.ndarray,
    other: np.ndarray,
    mat: sparse.csr_matrix,
    alpha: float,
    reg: float,
) -> None:
    # Dense-cell objective via the usual sparse identity:
    # A_i = YtY + Y_obs.T diag(c - 1) Y_obs + reg I, b_i = Y_obs.T c
    k = target.shape[1]
    base = other.T @ other + reg * np.eye(k)
    indptr, indices, data = mat.indptr, mat.indices, mat.data
    for i in range(target.shape[0]):
        lo, hi = indptr[i], indptr[i + 1]
        if lo == hi:
            target[i] = 0.0
            continue
        vo = other[indices[lo:hi]]
        cm1 = alpha * data[lo:hi]
        a = base + vo.T @ (cm1[:, None] * vo)
        b = vo.T @ (1.0 + cm1)
        target[i] = np.linalg.solve(a, b)


def _implicit_loss(
    coo: sparse.coo_matrix, u: np.ndarray, v: np.ndarray, alpha: float, reg: float
) -> float:
    # every cell carries confidence >= 1, so the dense term is ||UV'||^2
    # corrected on observed cells; factors stay desk-scale dense here
    full = u @ v.T
    base = float((full**2).sum())
    pred = np.einsum("ij,ij->i", u[coo.row], v[coo.col])
    conf = 1.0 + alpha * coo.data
    obs = float((conf * (1.0 - pred) ** 2).sum()) - float((pred**2).sum())
    return base + obs + reg * (float((u**2).sum()) + float((v**2).sum()))


def als_implicit(
    ratings: RatingsMatrix,
    k: int = 32,
    reg: float = 0.1,
    alpha: float = 40.0,
    iterations: int = 15,
    seed: int = 0,
) -> FactorModel:
    """Confidence-weighted ALS over all cells (preference 1 where r > 0).

    Minimizes ``sum_all c_ij (p_ij - u.v)^2 + reg * (||U||^2 + ||V||^2)``
    with ``c = 1 + alpha * r``. Rescaling all ratings by g while dividing
    alpha by g leaves every confidence, hence the model, unchanged.
    """
    if ratings.mode != "implicit":
        raise ValueError(f"als_implicit needs an implicit matrix, got {ratings.mode!r}")
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    mat = ratings.matrix.tocsr()
    if (mat.data < 0).any():
        raise ValueError("implicit ratings must be non-negative")
    _validate_als_args(mat, k, iterations)
    rng = np.random.default_rng([_ALS_STREAM, seed])
    u = _init_factors(rng, mat.shape[0], k)
    v = _init_factors(rng, mat.shape[1], k)
    mat_t = mat.T.tocsr()
    coo = mat.tocoo()
    trace: list[float] = []
    for _ in range(iterations):
        _solve_implicit_side(u, v, mat, alpha, reg)
        _solve_implicit_side(v, u, mat_t, alpha, reg)
        loss = _implicit_loss(coo, u, v, alpha, reg)
        if not np.isfinite(loss):
            raise ValueError("non-finite training loss; check reg and input values")
        trace.append(loss)
    return FactorModel(
        row_factors=u,
        col_factors=v,
        row_labels=ratings.row_labels,
        col_labels=ratings.col_labels,
        mode="implicit",
        k=k,
        reg=reg,
        alpha=alpha,
        iterations=iterations,
        seed=seed,
        loss_trace=tuple(trace),
    )


def recommend_from_model(
    model: FactorModel, row_id: int, k: int, exclusions: Iterable[str] = ()
) -> Ranking:
    """Top-k columns for one row by predicted score (ties by ascending title)."""
    scores = model.scores_for_row(row_id)
    score_map = {title: float(s) for title, s in zip(model.col_labels, scores)}
    return rank_items(score_map, k, exclude=exclusions, method=f"cf-{model.mode}")


def score_table_from_model(model: FactorModel, top_n: int = 100) -> ScoreTable:
    """Per-row top-n predicted scores shaped like a ScoreTable.

    Used to feed factor-model rankings through the same merging path as
    count scores. Member counts are not defined for a factor model and
    are recorded as 0; do not persist this table.
    """
    if top_n < 1:
        raise ValueError(f"top_n must be at least 1, got {top_n}")
    scores: dict[int, tuple[tuple[str, float], ...]] = {}
    for row_id in model.row_labels:
        row = model.scores_for_row(row_id)
        pool = sorted(
            zip(model.col_labels, (float(x) for x in row)),
            key=lambda item: (-item[1], item[0]),
        )
        scores[row_id] = tuple(pool[:top_n])
    return ScoreTable(scores=scores, members={c: 0 for c in scores})


# ---------------------------------------------------------------------------
# persistence


def save_model(model: FactorModel, path: str | Path, header_lines: Iterable[str] = ()) -> None:
    lines = [f"# {h}" for h in header_lines]
    lines.append(
        f"# mode={model.mode} k={model.k} reg={model.reg!r} alpha={model.alpha!r} "
        f"iterations={model.iterations} seed={model.seed}"
    )
    lines.append("# loss_trace=" + ",".join(repr(x) for x in model.loss_trace))
    lines.append("#rows")
    for label, factors in zip(model.row_labels, model.row_factors):
        lines.append(str(label) + "\t" + "\t".join(repr(float(x)) for x in factors))
    lines.append("#cols")
    for label, factors in zip(model.col_labels, model.col_factors):
        lines.append(label + "\t" + "\t".join(repr(float(x)) for x in factors))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> FactorModel:
    meta: dict[str, str] = {}
    trace: tuple[float, ...] = ()
    row_labels: list[int] = []
    col_labels: list[str] = []
    row_factors: list[list[float]] = []
    col_factors: list[list[float]] = []
    section = None
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line in ("#rows", "#cols"):
            section = line[1:]
            continue
        if line.startswith("# loss_trace="):
            payload = line.split("=", 1)[1]
            trace = tuple(float(x) for x in payload.split(",")) if payload else ()
            continue
        if line.startswith("# mode="):
            for pair in line[2:].split():
                key, value = pair.split("=", 1)
                meta[key] = value
            continue
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if section == "rows":
            row_labels.append(int(parts[0]))
            row_factors.append([float(x) for x in parts[1:]])
        elif section == "cols":
            col_labels.append(parts[0])
            col_factors.append([float(x) for x in parts[1:]])
        else:
            raise FormatError(f"{path}: data before a section marker: {line!r}")
    if not meta:
        raise FormatError(f"{path}: missing model metadata header")
    return FactorModel(
        row_factors=np.array(row_factors),
        col_factors=np.array(col_factors),
        row_labels=tuple(row_labels),
        col_labels=tuple(col_labels),
        mode=meta["mode"],
        k=int(meta["k"]),
        reg=float(meta["reg"]),
        alpha=None if meta["alpha"] == "None" else float(meta["alpha"]),
        iterations=int(meta["iterations"]),
        seed=int(meta["seed"]),
        loss_trace=trace,
    )


def save_holdout(
    holdout: Mapping[int, frozenset[str]], path: str | Path, header_lines: Iterable[str] = ()
) -> None:
    lines = [f"# {h}" for h in header_lines]
    for article_id in sorted(holdout):
        lines.extend(f"{article_id}\t{title}" for title in sorted(holdout[article_id]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_holdout(path: str | Path) -> dict[int, frozenset[str]]:
    held: dict[int, set[str]] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        article_id, title = line.split("\t", 1)
        held.setdefault(int(article_id), set()).add(title)
    return {a: frozenset(titles) for a, titles in held.items()}
