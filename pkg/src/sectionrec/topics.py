"""Topic-model recommender: collapsed Gibbs LDA plus topic-section tables.

Articles are bags of body tokens. A collapsed Gibbs sampler fits K topics;
each training article's topic mixture then distributes one unit of mass
per (article, section) pair across K topic-section tables. Scoring a new
article is a mixture-weighted sum over those tables.

The token-level sampling loop is JIT-compiled and drives its own xorshift
RNG, so results are bit-reproducible for a given seed and independent of
any library RNG state.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numba import njit

from .corpus import Article
from .errors import FormatError
from .ranking import Ranking, rank_items

__all__ = [
    "InferredMixture",
    "TopicModel",
    "TopicSectionTable",
    "build_topic_section_table",
    "infer_mixture",
    "load_topic_model",
    "load_topic_sections",
    "recommend_topic",
    "save_topic_model",
    "save_topic_sections",
    "train_topic_model",
]

_TOPIC_STREAM = 4


def _kernel_state(seed: int) -> np.uint64:
    # splitmix-style scramble in plain ints (uint64 wraparound by masking);
    # the xorshift state must be nonzero
    mask = 0xFFFFFFFFFFFFFFFF
    state = ((seed & mask) + 0x9E3779B97F4A7C15) * 0xBF58476D1CE4E5B9 & mask
    if state == 0:
        state = 0x9E3779B97F4A7C15
    return np.uint64(state)


@njit(cache=True)
def _gibbs_train(words, docs, z, n_dk, n_kw, n_k, alpha, beta, iters, state):
    n_topics = n_kw.shape[0]
    vbeta = n_kw.shape[1] * beta
    p = np.empty(n_topics, dtype=np.float64)
    mul = np.uint64(0x2545F4914F6CDD1D)
    for _ in range(iters):
        for t in range(words.shape[0]):
            w = words[t]
            d = docs[t]
            old = z[t]
            n_dk[d, old] -= 1
            n_kw[old, w] -= 1
            n_k[old] -= 1
            total = 0.0
            for k in range(n_topics):
                total += (n_dk[d, k] + alpha) * (n_kw[k, w] + beta) / (n_k[k] + vbeta)
                p[k] = total
            state ^= state >> np.uint64(12)
            state ^= state << np.uint64(25)
            state ^= state >> np.uint64(27)
            u = np.float64((state * mul) >> np.uint64(11)) * (1.0 / 9007199254740992.0) * total
            new = 0
            while p[new] < u and new < n_topics - 1:
                new += 1
            z[t] = new
            n_dk[d, new] += 1
            n_kw[new, w] += 1
            n_k[new] += 1
    return state


@njit(cache=True)
def _gibbs_infer(words, z, counts, phi, alpha, iters, burn_in, state, theta_acc):
    n_topics = phi.shape[0]
    p = np.empty(n_topics, dtype=np.float64)
    mul = np.uint64(0x2545F4914F6CDD1D)
    denom = words.shape[0] + n_topics * alpha
    for it in range(iters):
        for t in range(words.shape[0]):
            w = words[t]
            old = z[t]
            counts[old] -= 1
            total = 0.0
            for k in range(n_topics):
                total += (counts[k] + alpha) * phi[k, w]
                p[k] = total
            state ^= state >> np.uint64(12)
            state ^= state << np.uint64(25)
            state ^= state >> np.uint64(27)
            u = np.float64((state * mul) >> np.uint64(11)) * (1.0 / 9007199254740992.0) * total
            new = 0
            while p[new] < u and new < n_topics - 1:
                new += 1
            z[t] = new
            counts[new] += 1
        if it >= burn_in:
            for k in range(n_topics):
                theta_acc[k] += (counts[k] + alpha) / denom
    return state


@dataclass
class TopicModel:
    """Fitted topics: word counts per topic plus training-document mixtures."""

    k: int
    alpha: float
    beta: float
    iterations: int
    seed: int
    vocabulary: tuple[str, ...]
    topic_word: np.ndarray  # (k, V) assignment counts
    doc_mixtures: dict[int, np.ndarray]  # training doc id -> theta (sums to 1)

    def __post_init__(self):
        self.word_index = {w: i for i, w in enumerate(self.vocabulary)}

    def topic_totals(self) -> np.ndarray:
        return self.topic_word.sum(axis=1)

    def phi(self) -> np.ndarray:
        """Smoothed topic-word distributions, rows summing to 1."""
        v = len(self.vocabulary)
        return (self.topic_word + self.beta) / (
            self.topic_totals()[:, None] + v * self.beta
        )


@dataclass(frozen=True)
class InferredMixture:
    """Topic mixture for one document; ``oov_only`` marks the uniform fallback."""

    theta: np.ndarray
    oov_only: bool


@dataclass(frozen=True)
class TopicSectionTable:
    """K accumulated section-weight tables, stored per section title.

    ``weights[s][i]`` is the total mixture mass topic i received from
    training articles containing section s. Summing over topics recovers
    the number of training articles containing s exactly, which is the
    conservation property tests pin down.
    """

    k: int
    weights: dict[str, np.ndarray]


def train_topic_model(
    documents: Sequence[tuple[int, Sequence[str]]],
    k: int,
    alpha: float | None = None,
    beta: float = 0.01,
    iterations: int = 500,
    seed: int = 0,
) -> TopicModel:
    """Collapsed Gibbs sampling over (doc_id, tokens) pairs.

    ``alpha`` defaults to 50 / k. The vocabulary is built from the
    documents themselves; an entirely token-free corpus is an error.
    Documents with no tokens are allowed and get the uniform prior
    mixture. Same seed, same input: identical model, bit for bit.
    """
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if iterations < 1:
        raise ValueError(f"iterations must be at least 1, got {iterations}")
    if alpha is None:
        alpha = 50.0 / k
    if alpha <= 0 or beta <= 0:
        raise ValueError(f"priors must be positive, got alpha={alpha}, beta={beta}")
    ids = [doc_id for doc_id, _ in documents]
    if len(ids) != len(set(ids)):
        raise ValueError("duplicate document ids")
    vocabulary = tuple(sorted({t for _, tokens in documents for t in tokens}))
    if not vocabulary:
        raise ValueError("documents contain no tokens; cannot build a vocabulary")
    word_index = {w: i for i, w in enumerate(vocabulary)}

    words: list[int] = []
    docs: list[int] = []
    doc_lengths = np.zeros(len(documents), dtype=np.int64)
    for d, (_, tokens) in enumerate(documents):
        for token in tokens:
            words.append(word_index[token])
            docs.append(d)
        doc_lengths[d] = len(tokens)
    words_arr = np.asarray(words, dtype=np.int32)
    docs_arr = np.asarray(docs, dtype=np.int32)

    rng = np.random.default_rng([_TOPIC_STREAM, seed])
    z = rng.integers(0, k, size=len(words_arr), dtype=np.int32)
    n_dk = np.zeros((len(documents), k), dtype=np.int64)
    n_kw = np.zeros((k, len(vocabulary)), dtype=np.int64)
    n_k = np.zeros(k, dtype=np.int64)
    np.add.at(n_dk, (docs_arr, z), 1)
    np.add.at(n_kw, (z, words_arr), 1)
    np.add.at(n_k, z, 1)

    _gibbs_train(
        words_arr, docs_arr, z, n_dk, n_kw, n_k,
        float(alpha), float(beta), int(iterations), _kernel_state(seed),
    )

    doc_mixtures: dict[int, np.ndarray] = {}
    for d, (doc_id, _) in enumerate(documents):
        theta = (n_dk[d] + alpha).astype(np.float64)
        theta /= theta.sum()
        doc_mixtures[doc_id] = theta
    return TopicModel(
        k=k,
        alpha=float(alpha),
        beta=float(beta),
        iterations=int(iterations),
        seed=int(seed),
        vocabulary=vocabulary,
        topic_word=n_kw,
        doc_mixtures=doc_mixtures,
    )


def infer_mixture(
    model: TopicModel,
    tokens: Sequence[str],
    iterations: int = 100,
) -> InferredMixture:
    """Held-out mixture by Gibbs sampling against frozen topics.

    Out-of-vocabulary tokens are ignored; a document with none left gets
    the uniform mixture, flagged. The chain averages the mixture over the
    second half of the iterations and renormalizes, so the result sums
    to 1 exactly up to float rounding. Deterministic for a given model.
    """
    if iterations < 1:
        raise ValueError(f"iterations must be at least 1, got {iterations}")
    known = [model.word_index[t] for t in tokens if t in model.word_index]
    if not known:
        return InferredMixture(theta=np.full(model.k, 1.0 / model.k), oov_only=True)
    words_arr = np.asarray(known, dtype=np.int32)
    rng = np.random.default_rng([_TOPIC_STREAM, model.seed, 1])
    z = rng.integers(0, model.k, size=len(words_arr), dtype=np.int32)
    counts = np.zeros(model.k, dtype=np.int64)
    np.add.at(counts, z, 1)
    theta_acc = np.zeros(model.k, dtype=np.float64)
    burn_in = iterations // 2
    _gibbs_infer(
        words_arr, z, counts, model.phi(), float(model.alpha),
        int(iterations), int(burn_in), _kernel_state(model.seed + 1), theta_acc,
    )
    theta = theta_acc / theta_acc.sum()
    return InferredMixture(theta=theta, oov_only=False)


def build_topic_section_table(
    model: TopicModel, train_articles: Sequence[Article]
) -> TopicSectionTable:
    """Distribute each (article, section) unit across topics by the article's mixture.

    Training articles use their training-time mixtures; anything else is
    inferred. Articles without sections leave the table untouched.
    """
    weights: dict[str, np.ndarray] = {}
    for article in train_articles:
        if not article.sections:
            continue
        theta = model.doc_mixtures.get(article.id)
        if theta is None:
            theta = infer_mixture(model, article.tokens).theta
        for title in sorted(article.section_set()):
            if title not in weights:
                weights[title] = np.zeros(model.k, dtype=np.float64)
            weights[title] += theta
    return TopicSectionTable(k=model.k, weights=weights)


def recommend_topic(
    table: TopicSectionTable,
    model: TopicModel,
    article: Article,
    k: int,
    exclude_existing: bool = True,
    inference_iterations: int = 100,
) -> Ranking:
    """Score sections by the mixture-weighted sum over topic tables."""
    theta = model.doc_mixtures.get(article.id)
    if theta is None:
        theta = infer_mixture(model, article.tokens, iterations=inference_iterations).theta
    scores = {title: float(theta @ w) for title, w in table.weights.items()}
    exclude = article.section_set() if exclude_existing else ()
    return rank_items(scores, k, exclude=exclude, method="topics")


# ---------------------------------------------------------------------------
# persistence


def save_topic_model(model: TopicModel, path: str | Path, header_lines: Iterable[str] = ()) -> None:
    lines = [f"# {h}" for h in header_lines]
    lines.append(
        f"# k={model.k} alpha={model.alpha!r} beta={model.beta!r} "
        f"iterations={model.iterations} seed={model.seed}"
    )
    lines.append("#vocab")
    lines.extend(f"{i}\t{w}" for i, w in enumerate(model.vocabulary))
    lines.append("#topic_word")
    for topic in range(model.k):
        row = model.topic_word[topic]
        for w in np.nonzero(row)[0]:
            lines.append(f"{topic}\t{int(w)}\t{int(row[w])}")
    lines.append("#doc_mixtures")
    for doc_id in sorted(model.doc_mixtures):
        theta = model.doc_mixtures[doc_id]
        lines.append(f"{doc_id}\t" + ",".join(repr(float(x)) for x in theta))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_topic_model(path: str | Path) -> TopicModel:
    meta: dict[str, str] = {}
    vocab: list[str] = []
    triples: list[tuple[int, int, int]] = []
    doc_mixtures: dict[int, np.ndarray] = {}
    section = None
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line in ("#vocab", "#topic_word", "#doc_mixtures"):
            section = line[1:]
            continue
        if line.startswith("# k="):
            for pair in line[2:].split():
                key, value = pair.split("=", 1)
                meta[key] = value
            continue
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if section == "vocab":
            vocab.append(parts[1])
        elif section == "topic_word":
            triples.append((int(parts[0]), int(parts[1]), int(parts[2])))
        elif section == "doc_mixtures":
            doc_mixtures[int(parts[0])] = np.array([float(x) for x in parts[1].split(",")])
        else:
            raise FormatError(f"{path}: data before a section marker: {line!r}")
    if not meta:
        raise FormatError(f"{path}: missing topic model metadata header")
    k = int(meta["k"])
    topic_word = np.zeros((k, len(vocab)), dtype=np.int64)
    for topic, word, count in triples:
        topic_word[topic, word] = count
    return TopicModel(
        k=k,
        alpha=float(meta["alpha"]),
        beta=float(meta["beta"]),
        iterations=int(meta["iterations"]),
        seed=int(meta["seed"]),
        vocabulary=tuple(vocab),
        topic_word=topic_word,
        doc_mixtures=doc_mixtures,
    )


def save_topic_sections(
    table: TopicSectionTable, path: str | Path, header_lines: Iterable[str] = ()
) -> None:
    lines = [f"# {h}" for h in header_lines]
    lines.append(f"# k={table.k}")
    rows = []
    for title, weights in table.weights.items():
        for topic in range(table.k):
            if weights[topic] != 0.0:
                rows.append((topic, -float(weights[topic]), title))
    rows.sort()
    lines.extend(f"{topic}\t{title}\t{-negw!r}" for topic, negw, title in rows)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_topic_sections(path: str | Path) -> TopicSectionTable:
    k = None
    weights: dict[str, np.ndarray] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("# k="):
            k = int(line.split("=", 1)[1])
            continue
        if not line.strip() or line.startswith("#"):
            continue
        topic, title, weight = line.split("\t")
        if k is None:
            raise FormatError(f"{path}: missing k header")
        if title not in weights:
            weights[title] = np.zeros(k, dtype=np.float64)
        weights[title][int(topic)] = float(weight)
    if k is None:
        raise FormatError(f"{path}: missing k header")
    return TopicSectionTable(k=k, weights=weights)
