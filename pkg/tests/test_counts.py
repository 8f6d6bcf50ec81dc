"""Count-based section scores, checked against exhaustive hand counting."""
from collections import Counter

import numpy as np
import pytest

from sectionrec.catgraph import CategoryGraph, PrunedGraph, closure_members
from sectionrec.corpus import Article
from sectionrec.counts import (
    compute_scores,
    coverage_curve,
    load_score_table,
    recommend_for_article,
    recommend_for_category,
    save_score_table,
)
from sectionrec.errors import FormatError

TITLE_POOL = ["History", "Geography", "Economy", "Culture", "Climate", "Sports"]


def article(aid, sections=(), categories=()):
    return Article(
        id=aid,
        title=f"Article {aid}",
        tokens=(),
        sections=tuple(sections),
        categories=frozenset(categories),
    )


def as_pruned(graph):
    """Wrap a ready-made acyclic graph as if it had survived pruning intact."""
    return PrunedGraph(
        graph=graph,
        purity={n: 1.0 for n in graph.names},
        histograms={},
        closure_size={n: len(closure_members(graph, n)) for n in graph.names},
        removed=frozenset(),
        threshold=0.0,
        universe_size=1,
    )


def score_oracle(train_articles, graph):
    """Per-category exhaustive count: walk every closure by hand."""
    sections = {a.id: a.section_set() for a in train_articles}
    expected = {}
    for category in graph.names:
        member_ids = [i for i in closure_members(graph, category) if i in sections]
        if not member_ids:
            continue
        tally = Counter()
        for i in member_ids:
            tally.update(sections[i])
        expected[category] = {t: c / len(member_ids) for t, c in tally.items()}
    return expected


def random_world(rng):
    n_cats = int(rng.integers(2, 9))
    names = {c: f"cat{c}" for c in range(n_cats)}
    edges = {
        (int(min(a, b)), int(max(a, b)))
        for a, b in rng.integers(0, n_cats, size=(n_cats, 2))
        if a != b
    }
    articles = []
    memberships = {}
    for aid in range(100, 100 + int(rng.integers(3, 25))):
        cats = set(rng.choice(n_cats, size=rng.integers(1, min(3, n_cats) + 1), replace=False).tolist())
        titles = rng.choice(TITLE_POOL, size=rng.integers(0, 5), replace=False).tolist()
        articles.append(article(aid, titles, cats))
        memberships[aid] = cats
    graph = CategoryGraph(names, edges, memberships)
    # leave a slice of the corpus out of training
    n_train = int(rng.integers(1, len(articles) + 1))
    order = rng.permutation(len(articles))
    train = [articles[i] for i in sorted(order[:n_train])]
    return graph, articles, train


class TestComputeScores:
    def test_matches_exhaustive_oracle_on_random_fixtures(self):
        rng = np.random.default_rng(17)
        for _ in range(60):
            graph, _, train = random_world(rng)
            table = compute_scores(train, as_pruned(graph))
            expected = score_oracle(train, graph)
            assert {c: dict(rows) for c, rows in table.scores.items()} == expected

    def test_probability_is_fraction_of_closure_members(self):
        graph = CategoryGraph({1: "c"}, memberships={10: {1}, 11: {1}, 12: {1}})
        train = [article(10, ["History"]), article(11, ["History"]), article(12, [])]
        table = compute_scores(train, as_pruned(graph))
        assert dict(table.scores[1]) == {"History": 2 / 3}
        assert table.members[1] == 3

    def test_sectionless_members_still_count_in_the_denominator(self):
        graph = CategoryGraph({1: "c"}, memberships={10: {1}, 11: {1}})
        train = [article(10, ["History"]), article(11, [])]
        table = compute_scores(train, as_pruned(graph))
        assert dict(table.scores[1]) == {"History": 0.5}

    def test_non_training_members_ignored_entirely(self):
        graph = CategoryGraph({1: "c"}, memberships={10: {1}, 11: {1}})
        train = [article(10, ["History"])]
        table = compute_scores(train, as_pruned(graph))
        assert table.members[1] == 1
        assert dict(table.scores[1]) == {"History": 1.0}

    def test_closure_counts_include_subcategory_members(self):
        graph = CategoryGraph(
            {1: "parent", 2: "child"}, [(2, 1)], memberships={10: {2}, 11: {1}}
        )
        train = [article(10, ["History"]), article(11, ["Economy"])]
        table = compute_scores(train, as_pruned(graph))
        assert dict(table.scores[1]) == {"History": 0.5, "Economy": 0.5}
        assert dict(table.scores[2]) == {"History": 1.0}

    def test_repeated_title_in_one_article_counts_once(self):
        graph = CategoryGraph({1: "c"}, memberships={10: {1}})
        train = [article(10, ["History", "History"])]
        table = compute_scores(train, as_pruned(graph))
        assert dict(table.scores[1]) == {"History": 1.0}

    def test_memberless_categories_omitted(self):
        graph = CategoryGraph({1: "c", 2: "empty"}, memberships={10: {1}})
        table = compute_scores([article(10, ["History"])], as_pruned(graph))
        assert 2 not in table.scores
        assert 2 not in table.members

    def test_rows_sorted_by_score_then_title(self):
        graph = CategoryGraph({1: "c"}, memberships={10: {1}, 11: {1}})
        train = [article(10, ["B", "A", "Top"]), article(11, ["Top"])]
        table = compute_scores(train, as_pruned(graph))
        assert table.scores[1] == (("Top", 1.0), ("A", 0.5), ("B", 0.5))


class TestRecommendForCategory:
    def table(self):
        graph = CategoryGraph({1: "c"}, memberships={10: {1}, 11: {1}})
        train = [article(10, ["A", "B"]), article(11, ["A"])]
        return compute_scores(train, as_pruned(graph))

    def test_returns_top_k(self):
        ranking = recommend_for_category(self.table(), 1, k=1)
        assert ranking.items == (("A", 1.0),)
        assert ranking.method == "counts"

    def test_unknown_category_rejected(self):
        with pytest.raises(ValueError):
            recommend_for_category(self.table(), 99, k=3)

    def test_negative_k_rejected(self):
        with pytest.raises(ValueError):
            recommend_for_category(self.table(), 1, k=-2)


class TestRecommendForArticle:
    def world(self):
        graph = CategoryGraph(
            {1: "base", 2: "left", 3: "right"},
            [(2, 1), (3, 1)],
            memberships={10: {2}, 11: {2}, 20: {3}, 21: {3}},
        )
        train = [
            article(10, ["A", "B"]),
            article(11, ["A"]),
            article(20, ["A", "C"]),
            article(21, ["C"]),
        ]
        pruned = as_pruned(graph)
        return compute_scores(train, pruned), pruned

    def test_sums_scores_over_direct_categories_unweighted(self):
        table, _ = self.world()
        target = article(99, [], categories={2, 3})
        ranking = recommend_for_article(table, target, k=3)
        assert dict(ranking.items) == pytest.approx({"A": 1.5, "C": 1.0, "B": 0.5})

    def test_exclude_existing_drops_own_sections(self):
        table, _ = self.world()
        target = article(99, ["A"], categories={2, 3})
        ranking = recommend_for_article(table, target, k=5, exclude_existing=True)
        assert "A" not in ranking.titles()

    def test_evaluation_mode_keeps_own_sections(self):
        table, _ = self.world()
        target = article(99, ["A"], categories={2})
        ranking = recommend_for_article(table, target, k=5, exclude_existing=False)
        assert "A" in ranking.titles()

    def test_article_with_no_scored_category_gets_noted_empty_list(self):
        table, _ = self.world()
        target = article(99, [], categories={777})
        ranking = recommend_for_article(table, target, k=5)
        assert len(ranking) == 0
        assert ranking.note == "no surviving direct category"

    def test_include_ancestors_merges_parent_categories(self):
        table, pruned = self.world()
        target = article(99, [], categories={2})
        plain = recommend_for_article(table, target, k=5)
        merged = recommend_for_article(
            table, target, k=5, pruned=pruned, include_ancestors=True
        )
        # base's list (counted over all four articles) joins the sum
        assert dict(merged.items)["A"] > dict(plain.items)["A"]

    def test_include_ancestors_without_graph_rejected(self):
        table, _ = self.world()
        with pytest.raises(ValueError):
            recommend_for_article(
                table, article(99, [], {2}), k=5, include_ancestors=True
            )


class TestCoverageCurve:
    def test_fraction_of_categories_with_at_least_x_sections(self):
        graph = CategoryGraph(
            {1: "a", 2: "b"}, memberships={10: {1}, 11: {2}}
        )
        train = [article(10, ["A", "B"]), article(11, ["A"])]
        table = compute_scores(train, as_pruned(graph))
        assert coverage_curve(table, 3) == [(1, 1.0), (2, 0.5), (3, 0.0)]

    def test_curve_is_non_increasing(self):
        rng = np.random.default_rng(5)
        graph, _, train = random_world(rng)
        table = compute_scores(train, as_pruned(graph))
        curve = coverage_curve(table, 10)
        fractions = [f for _, f in curve]
        assert fractions == sorted(fractions, reverse=True)

    def test_empty_table_rejected(self):
        with pytest.raises(ValueError):
            coverage_curve(compute_scores([], as_pruned(CategoryGraph({1: "a"}))), 5)

    def test_bad_x_max_rejected(self):
        graph = CategoryGraph({1: "a"}, memberships={10: {1}})
        table = compute_scores([article(10, ["A"])], as_pruned(graph))
        with pytest.raises(ValueError):
            coverage_curve(table, 0)


class TestScoreTableFile:
    def test_round_trip_is_exact(self, tmp_path):
        rng = np.random.default_rng(23)
        graph, _, train = random_world(rng)
        table = compute_scores(train, as_pruned(graph))
        path = tmp_path / "counts.tsv"
        save_score_table(table, path, header_lines=["fingerprint=f00"])
        loaded = load_score_table(path)
        assert loaded == table

    def test_disagreeing_sections_rejected(self, tmp_path):
        path = tmp_path / "counts.tsv"
        path.write_text("#members\n1\t2\n#scores\n2\tA\t0.5\n", encoding="utf-8")
        with pytest.raises(FormatError):
            load_score_table(path)

    def test_unparseable_line_rejected(self, tmp_path):
        path = tmp_path / "counts.tsv"
        path.write_text("#members\n1\t2\textra\tcolumns\n", encoding="utf-8")
        with pytest.raises(FormatError):
            load_score_table(path)
