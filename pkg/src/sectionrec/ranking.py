"""Ranked recommendation lists shared by all recommenders."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping


@dataclass(frozen=True)
class Ranking:
    """An ordered list of (section title, score) pairs.

    Items are sorted by descending score with ties broken by ascending
    title, so equal inputs always produce byte-identical output. ``method``
    records which recommender produced the list; ``note`` carries an
    explanation when the list is empty for a structural reason (for
    example an article none of whose categories survived pruning).
    """

    items: tuple[tuple[str, float], ...]
    method: str = ""
    note: str | None = None

    def titles(self) -> list[str]:
        return [title for title, _ in self.items]

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)


def rank_items(
    scores: Mapping[str, float],
    k: int,
    exclude: Iterable[str] = (),
    method: str = "",
    note: str | None = None,
) -> Ranking:
    """Build the top-``k`` Ranking from a score map.

    ``exclude`` titles are dropped before truncation, so exclusions never
    cost ranking slots. ``k`` may exceed the number of scored titles, in
    which case the full (shorter) list is returned.
    """
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    dropped = set(exclude)
    pool = [(title, score) for title, score in scores.items() if title not in dropped]
    pool.sort(key=lambda item: (-item[1], item[0]))
    return Ranking(items=tuple(pool[:k]), method=method, note=note)
