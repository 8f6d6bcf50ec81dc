"""Article corpus: loading, title normalization, filtering, splitting, statistics.

An article corpus arrives as one self-describing JSON record per line plus
a category file (see :mod:`sectionrec.catgraph` for that format). Section
titles are normalized at load time and matched exactly afterwards; all
downstream models share that convention.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .catgraph import load_category_file
from .errors import FormatError

__all__ = [
    "Article",
    "Corpus",
    "CorpusStats",
    "DEFAULT_BLACKLIST",
    "SplitAssignment",
    "corpus_stats",
    "filter_corpus",
    "load_blacklist",
    "load_corpus",
    "load_split",
    "normalize_title",
    "save_blacklist",
    "save_corpus",
    "save_split",
    "split_corpus",
]

# Boilerplate navigation/reference sections stripped before any counting.
DEFAULT_BLACKLIST = frozenset(
    [
        "References",
        "External links",
        "See also",
        "Notes",
        "Further reading",
        "Bibliography",
        "Sources",
        "Footnotes",
        "Notes and references",
        "References and notes",
        "External sources",
        "Links",
        "References and sources",
        "External Links",
    ]
)

# Distinct stream tags keep every seeded RNG in the package independent.
_SPLIT_STREAM = 1


def normalize_title(raw: str) -> str:
    """Trim and collapse internal whitespace; case is preserved.

    Matching everywhere in the package is exact string equality on
    normalized titles. Raises ``ValueError`` if nothing is left.
    """
    title = " ".join(raw.split())
    if not title:
        raise ValueError(f"section title is empty after normalization: {raw!r}")
    return title


@dataclass(frozen=True)
class Article:
    """One article: identity, token stream, section titles, memberships."""

    id: int
    title: str
    tokens: tuple[str, ...]
    sections: tuple[str, ...]
    categories: frozenset[int]
    is_stub: bool = False
    quality: str | None = None

    def section_set(self) -> frozenset[str]:
        return frozenset(self.sections)

    @property
    def has_sections(self) -> bool:
        return bool(self.sections)


@dataclass
class Corpus:
    """A set of articles plus the blacklist that applies to them."""

    articles: dict[int, Article]
    blacklist: frozenset[str] = DEFAULT_BLACKLIST
    provenance: str = ""
    warnings: dict[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.articles)

    def __iter__(self) -> Iterator[Article]:
        return iter(self.sorted_articles())

    def __contains__(self, article_id: int) -> bool:
        return article_id in self.articles

    def sorted_articles(self) -> list[Article]:
        return [self.articles[i] for i in sorted(self.articles)]


@dataclass(frozen=True)
class SplitAssignment:
    """Disjoint train/test/validation article ids covering a corpus."""

    train: frozenset[int]
    test: frozenset[int]
    validation: frozenset[int]
    seed: int
    ratios: tuple[float, float, float] = (0.80, 0.15, 0.05)

    def subset(self, corpus: Corpus, name: str) -> list[Article]:
        ids = getattr(self, name)
        return [corpus.articles[i] for i in sorted(ids) if i in corpus.articles]


@dataclass(frozen=True)
class CorpusStats:
    histogram: dict[int, int]
    mean_sections: float
    stub_fraction: float
    unique_title_count: int
    article_count: int


def _require(condition: bool) -> None:
    if not condition:
        raise ValueError("malformed record")


def _parse_record(obj: object) -> Article:
    _require(isinstance(obj, dict))
    rid = obj.get("id")
    _require(isinstance(rid, int) and not isinstance(rid, bool))
    title = obj.get("title")
    _require(isinstance(title, str) and bool(title.strip()))
    tokens = obj.get("tokens")
    _require(isinstance(tokens, list) and all(isinstance(t, str) for t in tokens))
    sections = obj.get("sections")
    _require(isinstance(sections, list) and all(isinstance(s, str) for s in sections))
    categories = obj.get("categories")
    _require(
        isinstance(categories, list)
        and all(isinstance(c, int) and not isinstance(c, bool) for c in categories)
    )
    is_stub = obj.get("is_stub", False)
    _require(isinstance(is_stub, bool))
    quality = obj.get("quality")
    _require(quality is None or isinstance(quality, str))
    return Article(
        id=rid,
        title=title.strip(),
        tokens=tuple(tokens),
        sections=tuple(sections),
        categories=frozenset(categories),
        is_stub=is_stub,
        quality=quality,
    )


def load_corpus(articles_path: str | Path, categories_path: str | Path) -> Corpus:
    """Load articles and validate their category references.

    Section titles are normalized on the way in; titles that normalize to
    nothing are dropped and counted. Lines that fail to parse are counted
    as malformed; more than 1% malformed lines raises
    :class:`FormatError`. A duplicate article id is always an error.
    """
    names, _, cat_malformed = load_category_file(categories_path)
    articles: dict[int, Article] = {}
    warnings = Counter()
    warnings["malformed_category_lines"] = cat_malformed
    considered = 0
    for line in Path(articles_path).read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        considered += 1
        try:
            record = _parse_record(json.loads(line))
        except (json.JSONDecodeError, ValueError):
            warnings["malformed_lines"] += 1
            continue
        if record.id in articles:
            raise ValueError(f"duplicate article id {record.id} in {articles_path}")
        sections = []
        for raw in record.sections:
            try:
                sections.append(normalize_title(raw))
            except ValueError:
                warnings["empty_section_titles"] += 1
        known = {c for c in record.categories if c in names}
        warnings["dropped_category_refs"] += len(record.categories) - len(known)
        articles[record.id] = replace(
            record, sections=tuple(sections), categories=frozenset(known)
        )
    if considered and warnings["malformed_lines"] > 0.01 * considered:
        raise FormatError(
            f"{articles_path}: {warnings['malformed_lines']} of {considered} "
            "lines are malformed (more than 1%)"
        )
    return Corpus(
        articles=articles,
        provenance=f"loaded from {articles_path}",
        warnings={k: v for k, v in warnings.items() if v},
    )


def save_corpus(corpus: Corpus, path: str | Path, header_lines: Iterable[str] = ()) -> None:
    """Write articles as sorted, compact JSON lines (parsers skip ``#`` lines)."""
    lines = [f"# {h}" for h in header_lines]
    for article in corpus.sorted_articles():
        record = {
            "id": article.id,
            "title": article.title,
            "tokens": list(article.tokens),
            "sections": list(article.sections),
            "categories": sorted(article.categories),
            "is_stub": article.is_stub,
            "quality": article.quality,
        }
        lines.append(json.dumps(record, ensure_ascii=False, sort_keys=True, separators=(",", ":")))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_blacklist(path: str | Path) -> frozenset[str]:
    titles = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        titles.add(normalize_title(line))
    return frozenset(titles)


def save_blacklist(titles: Iterable[str], path: str | Path) -> None:
    Path(path).write_text("\n".join(sorted(titles)) + "\n", encoding="utf-8")


def filter_corpus(
    corpus: Corpus,
    blacklist: frozenset[str] | None = None,
    drop_stubs: bool = True,
    drop_unique: bool = True,
) -> Corpus:
    """Apply the standard cleanup: stubs, blacklisted titles, unique titles.

    Stubs are dropped first, then blacklisted titles, then titles that
    occur in exactly one article of what remains (occurrences are distinct
    (article, title) pairs, so repeats inside one article count once).
    Articles may come out with zero sections; they stay in the corpus as
    topic-model documents and recommendation targets but contribute no
    section counts. The operation is idempotent.
    """
    if blacklist is None:
        blacklist = corpus.blacklist
    kept = [a for a in corpus.sorted_articles() if not (drop_stubs and a.is_stub)]
    removed_stubs = len(corpus) - len(kept)

    removed_blacklisted = 0
    trimmed: list[Article] = []
    for article in kept:
        sections = tuple(s for s in article.sections if s not in blacklist)
        removed_blacklisted += len(article.sections) - len(sections)
        trimmed.append(replace(article, sections=sections))

    removed_unique = 0
    if drop_unique:
        occurrences = Counter()
        for article in trimmed:
            occurrences.update(article.section_set())
        unique = {title for title, count in occurrences.items() if count == 1}
        result = []
        for article in trimmed:
            sections = tuple(s for s in article.sections if s not in unique)
            removed_unique += len(article.sections) - len(sections)
            result.append(replace(article, sections=sections))
        trimmed = result

    warnings = dict(corpus.warnings)
    for key, value in (
        ("filtered_stub_articles", removed_stubs),
        ("filtered_blacklisted_sections", removed_blacklisted),
        ("filtered_unique_sections", removed_unique),
    ):
        if value:
            warnings[key] = warnings.get(key, 0) + value
    return Corpus(
        articles={a.id: a for a in trimmed},
        blacklist=blacklist,
        provenance=corpus.provenance + " | filtered",
        warnings=warnings,
    )


def split_corpus(
    corpus: Corpus,
    ratios: Sequence[float] = (0.80, 0.15, 0.05),
    seed: int = 0,
) -> SplitAssignment:
    """Deterministic train/test/validation partition of article ids.

    Subset sizes follow the largest-remainder method, which keeps every
    subset within one article of its exact share. Ratios must be
    non-negative and sum to 1 within 1e-9.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3:
        raise ValueError(f"expected 3 ratios (train, test, validation), got {len(ratios)}")
    if any(r < 0 for r in ratios):
        raise ValueError(f"ratios must be non-negative, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {sum(ratios)!r}")

    ids = np.array(sorted(corpus.articles), dtype=np.int64)
    n = len(ids)
    exact = [n * r for r in ratios]
    counts = [math.floor(e) for e in exact]
    leftover = n - sum(counts)
    by_remainder = sorted(range(3), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in by_remainder[:leftover]:
        counts[i] += 1

    rng = np.random.default_rng([_SPLIT_STREAM, seed])
    shuffled = ids[rng.permutation(n)]
    train = frozenset(int(i) for i in shuffled[: counts[0]])
    test = frozenset(int(i) for i in shuffled[counts[0] : counts[0] + counts[1]])
    validation = frozenset(int(i) for i in shuffled[counts[0] + counts[1] :])
    return SplitAssignment(train=train, test=test, validation=validation, seed=seed, ratios=ratios)


def save_split(split: SplitAssignment, path: str | Path, fingerprint: str = "") -> None:
    payload = {
        "fingerprint": fingerprint,
        "seed": split.seed,
        "ratios": list(split.ratios),
        "train": sorted(split.train),
        "test": sorted(split.test),
        "validation": sorted(split.validation),
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")


def load_split(path: str | Path) -> SplitAssignment:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return SplitAssignment(
        train=frozenset(payload["train"]),
        test=frozenset(payload["test"]),
        validation=frozenset(payload["validation"]),
        seed=payload["seed"],
        ratios=tuple(payload["ratios"]),
    )


def corpus_stats(corpus: Corpus) -> CorpusStats:
    """Section-count histogram, mean, stub fraction, and unique-title count.

    ``unique_title_count`` is the number of distinct titles that occur in
    exactly one article; on a freshly filtered corpus it is zero.
    An empty corpus reports all-zero statistics.
    """
    n = len(corpus)
    if n == 0:
        return CorpusStats({}, 0.0, 0.0, 0, 0)
    histogram = Counter()
    occurrences = Counter()
    stubs = 0
    total_sections = 0
    for article in corpus.sorted_articles():
        histogram[len(article.sections)] += 1
        total_sections += len(article.sections)
        occurrences.update(article.section_set())
        if article.is_stub:
            stubs += 1
    unique = sum(1 for count in occurrences.values() if count == 1)
    return CorpusStats(
        histogram=dict(sorted(histogram.items())),
        mean_sections=total_sections / n,
        stub_fraction=stubs / n,
        unique_title_count=unique,
        article_count=n,
    )
