"""Count-based section scores P(S | C) over the pruned category network.

For every surviving category C, P(S | C) is the fraction of C's closure
member articles (training split only) that contain section S, each
article counting a title at most once. Article-level recommendations sum
these scores over the article's direct categories.
"""
from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .catgraph import PrunedGraph, closure_members
from .corpus import Article
from .errors import FormatError
from .ranking import Ranking, rank_items

__all__ = [
    "ScoreTable",
    "compute_scores",
    "coverage_curve",
    "load_score_table",
    "recommend_for_article",
    "recommend_for_category",
    "save_score_table",
]


@dataclass(frozen=True)
class ScoreTable:
    """Per-category section scores, ranked, plus closure member counts.

    ``scores[c]`` is a tuple of (title, probability) pairs sorted by
    descending probability with ties broken by ascending title.
    ``members[c]`` is m(C), the number of training articles in the
    category's transitive closure. Categories with zero members are
    omitted entirely.
    """

    scores: dict[int, tuple[tuple[str, float], ...]]
    members: dict[int, int]

    def categories(self) -> list[int]:
        return sorted(self.scores)

    def __contains__(self, category: int) -> bool:
        return category in self.scores

    def __len__(self) -> int:
        return len(self.scores)


def compute_scores(train_articles: Sequence[Article], pruned: PrunedGraph) -> ScoreTable:
    """Count sections over every surviving category's closure members.

    Only training articles count. Sectionless articles still appear in
    the m(C) denominator (they are members; they just contribute no
    observations). Probabilities are exact ratios of integers.
    """
    train_sections = {a.id: a.section_set() for a in train_articles}
    scores: dict[int, tuple[tuple[str, float], ...]] = {}
    members: dict[int, int] = {}
    for category in sorted(pruned.graph.names):
        closure = closure_members(pruned.graph, category)
        member_ids = [i for i in closure if i in train_sections]
        m = len(member_ids)
        if m == 0:
            continue
        tally: Counter[str] = Counter()
        for article_id in member_ids:
            tally.update(train_sections[article_id])
        ranked = sorted(
            ((title, count / m) for title, count in tally.items()),
            key=lambda item: (-item[1], item[0]),
        )
        scores[category] = tuple(ranked)
        members[category] = m
    return ScoreTable(scores=scores, members=members)


def recommend_for_category(table: ScoreTable, category: int, k: int) -> Ranking:
    """Top-k sections of one category's ranked list."""
    if category not in table.scores:
        raise ValueError(f"unknown category {category} (no scores computed for it)")
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    return Ranking(items=table.scores[category][:k], method="counts")


def recommend_for_article(
    table: ScoreTable,
    article: Article,
    k: int,
    exclude_existing: bool = True,
    pruned: PrunedGraph | None = None,
    include_ancestors: bool = False,
) -> Ranking:
    """Sum P(S | C) over the article's surviving direct categories.

    The sum is unweighted. ``exclude_existing`` drops the article's own
    sections from the output (the interactive default); automatic
    evaluation passes False and scores reconstruction of the full set.
    ``include_ancestors`` additionally merges every surviving ancestor
    category (comparison mode; requires ``pruned``).

    An article none of whose direct categories survived pruning yields an
    empty ranking carrying an explanatory note.
    """
    categories = set(article.categories)
    if include_ancestors:
        if pruned is None:
            raise ValueError("include_ancestors requires the pruned graph")
        frontier = deque(c for c in categories if c in pruned.survivors)
        reached = set(frontier)
        while frontier:
            node = frontier.popleft()
            for parent in pruned.graph.parents[node]:
                if parent not in reached:
                    reached.add(parent)
                    frontier.append(parent)
        categories = reached
    relevant = sorted(c for c in categories if c in table.scores)
    if not relevant:
        return Ranking(items=(), method="counts", note="no surviving direct category")
    merged: dict[str, float] = {}
    for category in relevant:
        for title, score in table.scores[category]:
            merged[title] = merged.get(title, 0.0) + score
    exclude = article.section_set() if exclude_existing else ()
    return rank_items(merged, k, exclude=exclude, method="counts")


def coverage_curve(table: ScoreTable, x_max: int) -> list[tuple[int, float]]:
    """Fraction of scored categories offering at least x distinct sections.

    Non-increasing in x by construction.
    """
    if x_max < 1:
        raise ValueError(f"x_max must be at least 1, got {x_max}")
    if not table.scores:
        raise ValueError("score table is empty")
    sizes = [len(ranked) for ranked in table.scores.values()]
    n = len(sizes)
    return [(x, sum(1 for s in sizes if s >= x) / n) for x in range(1, x_max + 1)]


def save_score_table(table: ScoreTable, path: str | Path, header_lines: Iterable[str] = ()) -> None:
    lines = [f"# {h}" for h in header_lines]
    lines.append("#members")
    lines.extend(f"{c}\t{table.members[c]}" for c in table.categories())
    lines.append("#scores")
    for category in table.categories():
        lines.extend(
            f"{category}\t{title}\t{score!r}" for title, score in table.scores[category]
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_score_table(path: str | Path) -> ScoreTable:
    members: dict[int, int] = {}
    rows: dict[int, list[tuple[str, float]]] = {}
    section = None
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line in ("#members", "#scores"):
            section = line[1:]
            continue
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if section == "members" and len(parts) == 2:
            members[int(parts[0])] = int(parts[1])
        elif section == "scores" and len(parts) == 3:
            rows.setdefault(int(parts[0]), []).append((parts[1], float(parts[2])))
        else:
            raise FormatError(f"{path}: unparseable line {line!r}")
    scores = {c: tuple(items) for c, items in rows.items()}
    if set(scores) != set(members):
        raise FormatError(f"{path}: member counts and score rows disagree on categories")
    return ScoreTable(scores=scores, members=members)
