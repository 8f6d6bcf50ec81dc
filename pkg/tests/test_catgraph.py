"""Category network: purity scoring, cycle breaking, closures, pruning.

The heavy lifting here is done by independent oracles: the O(n^2)
pairwise definition of the Gini coefficient, and networkx for
reachability and acyclicity.
"""
import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

import sectionrec.catgraph as catgraph
from sectionrec.catgraph import (
    CategoryGraph,
    TypeMap,
    UndefinedPurityError,
    break_cycles,
    closure_members,
    gini,
    load_annotations,
    load_category_file,
    load_pruned,
    load_type_map,
    prune,
    restrict_to_root,
    save_annotations,
    save_category_file,
    save_pruned,
    save_type_map,
    threshold_sweep,
    type_histogram,
)
from sectionrec.errors import FormatError


def gini_pairwise(hist):
    """Direct O(n^2) evaluation of G = sum_ij |x_i - x_j| / (2 n sum x)."""
    x = np.asarray(hist, dtype=np.float64)
    return float(np.abs(x[:, None] - x[None, :]).sum() / (2 * x.size * x.sum()))


def graph_to_nx(graph):
    out = nx.DiGraph()
    out.add_nodes_from(graph.names)
    out.add_edges_from(graph.edges())
    return out


def closure_oracle(graph, category):
    """Members of the category and of everything that can reach it."""
    subcats = nx.ancestors(graph_to_nx(graph), category) | {category}
    members = graph.members_by_category()
    out = set()
    for c in subcats:
        out |= members.get(c, set())
    return frozenset(out)


class TestGini:
    def test_matches_pairwise_definition_on_random_histograms(self):
        rng = np.random.default_rng(42)
        for _ in range(300):
            hist = rng.integers(0, 50, size=rng.integers(2, 80))
            if hist.sum() == 0:
                hist[0] = 1
            assert gini(hist) == pytest.approx(gini_pairwise(hist), abs=1e-12)

    @given(st.lists(st.integers(0, 1000), min_size=2, max_size=60).filter(lambda h: sum(h) > 0))
    def test_pairwise_agreement_is_a_property(self, hist):
        assert gini(hist) == pytest.approx(gini_pairwise(hist), abs=1e-12)

    def test_uniform_histogram_scores_zero(self):
        assert gini([7] * 55) == 0.0

    def test_point_mass_scores_n_minus_one_over_n(self):
        hist = [0] * 54 + [123]
        assert gini(hist) == 54 / 55

    def test_hand_computed_value(self):
        # bins (3, 1, 0, 0): unordered pair differences 2+3+3+1+1+0 = 10,
        # doubled for ordered pairs, so G = 20 / (2 * 4 * 4)
        assert gini([3, 1, 0, 0]) == pytest.approx(20 / 32, abs=1e-15)

    def test_scale_invariant(self):
        hist = np.array([5, 2, 0, 9, 1], dtype=np.float64)
        assert gini(hist) == pytest.approx(gini(hist * 37.0), abs=1e-12)

    def test_zero_bins_count_toward_the_universe(self):
        # same mass, larger universe: more zero bins push G up
        assert gini([4, 4]) < gini([4, 4, 0, 0])

    def test_all_zero_histogram_undefined(self):
        with pytest.raises(UndefinedPurityError):
            gini([0, 0, 0])

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            gini([3, -1, 0])

    def test_two_dimensional_input_rejected(self):
        with pytest.raises(ValueError):
            gini(np.ones((2, 2)))


class TestCategoryGraph:
    def test_edges_and_nodes_are_sorted(self):
        g = CategoryGraph({3: "c", 1: "a", 2: "b"}, [(3, 1), (2, 1)])
        assert g.nodes() == [1, 2, 3]
        assert g.edges() == [(2, 1), (3, 1)]

    def test_duplicate_edges_collapse(self):
        g = CategoryGraph({1: "a", 2: "b"}, [(1, 2), (1, 2)])
        assert g.n_edges == 1

    def test_edge_to_unknown_category_rejected(self):
        with pytest.raises(ValueError):
            CategoryGraph({1: "a"}, [(1, 99)])

    def test_unknown_root_rejected(self):
        with pytest.raises(ValueError):
            CategoryGraph({1: "a"}, root=99)

    def test_membership_refs_to_unknown_categories_dropped(self):
        g = CategoryGraph({1: "a"}, memberships={10: {1, 99}, 11: {99}})
        assert g.memberships == {10: {1}}

    def test_members_by_category_inverts_memberships(self):
        g = CategoryGraph({1: "a", 2: "b"}, memberships={10: {1, 2}, 11: {2}})
        assert g.members_by_category() == {1: {10}, 2: {10, 11}}

    def test_subgraph_restricts_everything(self):
        g = CategoryGraph(
            {1: "a", 2: "b", 3: "c"},
            [(2, 1), (3, 2)],
            memberships={10: {1, 3}},
            root=1,
        )
        sub = g.subgraph({1, 2})
        assert sub.nodes() == [1, 2]
        assert sub.edges() == [(2, 1)]
        assert sub.memberships == {10: {1}}
        assert sub.root == 1


class TestRestrictToRoot:
    def test_keeps_transitive_subcategories_only(self):
        g = CategoryGraph(
            {1: "root", 2: "child", 3: "grandchild", 4: "stray"},
            [(2, 1), (3, 2)],
            memberships={10: {3}, 11: {4}},
        )
        out = restrict_to_root(g, root=1)
        assert out.nodes() == [1, 2, 3]
        assert out.memberships == {10: {3}}
        assert out.root == 1

    def test_uses_graph_root_when_omitted(self):
        g = CategoryGraph({1: "r", 2: "c"}, [(2, 1)], root=1)
        assert restrict_to_root(g).nodes() == [1, 2]

    def test_missing_root_rejected(self):
        g = CategoryGraph({1: "a"})
        with pytest.raises(ValueError):
            restrict_to_root(g)


class TestBreakCycles:
    def random_digraph(self, rng, max_nodes=40):
        n = int(rng.integers(2, max_nodes))
        names = {i: f"c{i}" for i in range(n)}
        k = int(rng.integers(0, 4 * n))
        edges = {
            (int(c), int(p))
            for c, p in rng.integers(0, n, size=(k, 2))
        }
        return CategoryGraph(names, edges)

    def test_output_is_acyclic_on_random_graphs(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            g = self.random_digraph(rng)
            dag, removed = break_cycles(g)
            assert nx.is_directed_acyclic_graph(graph_to_nx(dag))
            assert set(removed) == set(g.edges()) - set(dag.edges())

    def test_acyclic_input_unchanged(self):
        g = CategoryGraph({1: "a", 2: "b", 3: "c"}, [(1, 2), (2, 3), (1, 3)])
        dag, removed = break_cycles(g)
        assert removed == []
        assert dag.edges() == g.edges()

    def test_two_cycle_loses_exactly_one_edge(self):
        g = CategoryGraph({1: "a", 2: "b"}, [(1, 2), (2, 1)])
        dag, removed = break_cycles(g)
        assert len(removed) == 1
        assert dag.n_edges == 1

    def test_triangle_loses_exactly_one_edge(self):
        g = CategoryGraph({1: "a", 2: "b", 3: "c"}, [(1, 2), (2, 3), (3, 1)])
        _, removed = break_cycles(g)
        assert len(removed) == 1

    def test_disjoint_cycles_each_lose_one_edge(self):
        g = CategoryGraph(
            {i: str(i) for i in range(1, 7)},
            [(1, 2), (2, 1), (3, 4), (4, 3), (5, 6), (6, 5)],
        )
        _, removed = break_cycles(g)
        assert len(removed) == 3

    def test_self_loops_always_removed(self):
        g = CategoryGraph({1: "a", 2: "b"}, [(1, 1), (1, 2)])
        dag, removed = break_cycles(g)
        assert removed == [(1, 1)]
        assert dag.edges() == [(1, 2)]

    def test_cycle_with_attached_dag_keeps_the_dag_intact(self):
        g = CategoryGraph(
            {i: str(i) for i in range(1, 6)},
            [(1, 2), (2, 3), (3, 1), (4, 1), (5, 4)],
        )
        dag, removed = break_cycles(g)
        assert len(removed) == 1
        assert (4, 1) in dag.edges() and (5, 4) in dag.edges()

    def test_deterministic(self):
        rng = np.random.default_rng(13)
        g = self.random_digraph(rng)
        first = break_cycles(g)
        second = break_cycles(g)
        assert first[1] == second[1]
        assert first[0].edges() == second[0].edges()


class TestClosureMembers:
    def random_dag_with_members(self, rng, max_nodes=30):
        n = int(rng.integers(2, max_nodes))
        names = {i: f"c{i}" for i in range(n)}
        # child id < parent id keeps the graph acyclic by construction
        edges = {
            (int(min(a, b)), int(max(a, b)))
            for a, b in rng.integers(0, n, size=(2 * n, 2))
            if a != b
        }
        memberships = {
            int(100 + a): set(rng.choice(n, size=rng.integers(1, min(4, n + 1)), replace=False).tolist())
            for a in range(int(rng.integers(1, 3 * n)))
        }
        return CategoryGraph(names, edges, memberships)

    def test_matches_reachability_oracle_on_random_dags(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            g = self.random_dag_with_members(rng)
            for category in g.nodes():
                assert closure_members(g, category) == closure_oracle(g, category)

    def test_direct_members_included(self):
        g = CategoryGraph({1: "a"}, memberships={10: {1}})
        assert closure_members(g, 1) == frozenset({10})

    def test_members_reached_through_a_diamond_count_once(self):
        g = CategoryGraph(
            {1: "top", 2: "l", 3: "r", 4: "bottom"},
            [(2, 1), (3, 1), (4, 2), (4, 3)],
            memberships={10: {4}},
        )
        assert closure_members(g, 1) == frozenset({10})

    def test_unknown_category_rejected(self):
        with pytest.raises(ValueError):
            closure_members(CategoryGraph({1: "a"}), 2)


class TestTypeHistogram:
    def test_counts_types_over_articles(self):
        tm = TypeMap(types={10: 0, 11: 2, 12: 0}, universe=("a", "b", "c"))
        np.testing.assert_array_equal(type_histogram([10, 11, 12], tm), [2, 0, 1])

    def test_untyped_articles_add_nothing(self):
        tm = TypeMap(types={10: 0}, universe=("a", "b"))
        np.testing.assert_array_equal(type_histogram([10, 99], tm), [1, 0])


def pure_and_impure_world():
    """Base category with one pure child (type 0) and one catch-all child."""
    names = {1: "base", 2: "pure", 3: "catchall"}
    edges = [(2, 1), (3, 1)]
    memberships = {
        10: {2}, 11: {2}, 12: {2}, 13: {2},
        20: {3}, 21: {3}, 22: {3}, 23: {3},
    }
    types = {10: 0, 11: 0, 12: 0, 13: 0, 20: 0, 21: 1, 22: 2, 23: 3}
    graph = CategoryGraph(names, edges, memberships, root=1)
    type_map = TypeMap(types=types, universe=("t0", "t1", "t2", "t3"))
    return graph, type_map


class TestPrune:
    def test_catchall_removed_pure_survives(self):
        graph, tm = pure_and_impure_world()
        pruned = prune(graph, tm, threshold=0.5)
        assert pruned.removed == frozenset({3})
        assert pruned.survivors == {1, 2}

    def test_removed_child_mass_never_reaches_the_parent(self):
        # with the catch-all gone the base sees only type-0 mass and
        # stays; folding the catch-all in would drag it under threshold
        graph, tm = pure_and_impure_world()
        pruned = prune(graph, tm, threshold=0.5)
        np.testing.assert_array_equal(pruned.histograms[1], [4, 0, 0, 0])
        assert pruned.purity[1] == pytest.approx(3 / 4)

    def test_surviving_child_mass_aggregates_upward(self):
        names = {1: "base", 2: "child"}
        graph = CategoryGraph(names, [(2, 1)], {10: {2}, 11: {1}}, root=1)
        tm = TypeMap(types={10: 0, 11: 0}, universe=("t0", "t1"))
        pruned = prune(graph, tm, threshold=0.3)
        np.testing.assert_array_equal(pruned.histograms[1], [2, 0])

    def test_each_node_scored_exactly_once(self, monkeypatch):
        graph, tm = pure_and_impure_world()
        calls = []
        real = gini

        def counting(hist):
            calls.append(1)
            return real(hist)

        monkeypatch.setattr(catgraph, "gini", counting)
        prune(graph, tm, threshold=0.5)
        assert len(calls) == graph.n_nodes

    def test_threshold_zero_disables_the_filter(self):
        graph, tm = pure_and_impure_world()
        pruned = prune(graph, tm, threshold=0.0)
        assert pruned.survivors == {1, 2, 3}
        # the catch-all has a perfectly even histogram
        assert pruned.purity[3] == 0.0

    def test_nodes_without_typed_mass_removed_at_any_threshold(self):
        graph = CategoryGraph({1: "a", 2: "b"}, [(2, 1)], {10: {2}})
        tm = TypeMap(types={}, universe=("t0",))
        for threshold in (0.0, 0.5):
            assert prune(graph, tm, threshold).survivors == set()

    def test_closure_sizes_match_closures_of_the_pruned_graph(self):
        graph, tm = pure_and_impure_world()
        pruned = prune(graph, tm, threshold=0.5)
        for node in pruned.survivors:
            assert pruned.closure_size[node] == len(closure_members(pruned.graph, node))

    def test_purity_recorded_only_for_survivors(self):
        graph, tm = pure_and_impure_world()
        pruned = prune(graph, tm, threshold=0.5)
        assert set(pruned.purity) == pruned.survivors

    def test_threshold_out_of_range_rejected(self):
        graph, tm = pure_and_impure_world()
        with pytest.raises(ValueError):
            prune(graph, tm, threshold=1.5)

    def test_cyclic_graph_rejected(self):
        g = CategoryGraph({1: "a", 2: "b"}, [(1, 2), (2, 1)], {10: {1}})
        tm = TypeMap(types={10: 0}, universe=("t0",))
        with pytest.raises(ValueError, match="cycle"):
            prune(g, tm, threshold=0.5)


class TestThresholdSweep:
    def annotated_world(self):
        graph, tm = pure_and_impure_world()
        # articles 10-13 really belong under base; 20 (a type-0 article
        # in the catch-all) does not
        annotations = [(a, 1, 1) for a in (10, 11, 12, 13)] + [(20, 1, 0)]
        return graph, tm, annotations

    def test_precision_improves_once_catchall_removed(self):
        graph, tm, annotations = self.annotated_world()
        rows = threshold_sweep(graph, tm, annotations, thresholds=[0.0, 0.5])
        assert rows[0].precision == pytest.approx(4 / 5)
        assert rows[0].recall == 1.0
        assert rows[1].precision == 1.0
        assert rows[1].recall == 1.0
        assert rows[0].removed_fraction == 0.0
        assert rows[1].removed_fraction == pytest.approx(1 / 3)

    def test_everything_removed_flags_undefined_precision(self):
        graph, tm, annotations = self.annotated_world()
        row = threshold_sweep(graph, tm, annotations, thresholds=[0.99])[0]
        assert not row.precision_defined
        assert row.precision == 0.0
        assert row.recall == 0.0

    def test_empty_annotations_rejected(self):
        graph, tm, _ = self.annotated_world()
        with pytest.raises(ValueError):
            threshold_sweep(graph, tm, [], thresholds=[0.5])

    def test_all_negative_annotations_rejected(self):
        graph, tm, _ = self.annotated_world()
        with pytest.raises(ValueError):
            threshold_sweep(graph, tm, [(20, 1, 0)], thresholds=[0.5])


class TestCategoryFile:
    def test_round_trip(self, tmp_path):
        names = {1: "Root", 2: "Towns in", 3: "People"}
        edges = [(2, 1), (3, 1)]
        path = tmp_path / "cats.tsv"
        save_category_file(names, edges, path, header_lines=["hello"])
        loaded_names, loaded_edges, malformed = load_category_file(path)
        assert loaded_names == names
        assert loaded_edges == edges
        assert malformed == 0

    def test_malformed_lines_counted(self, tmp_path):
        path = tmp_path / "cats.tsv"
        lines = ["#categories"] + [f"{i}\tname{i}" for i in range(300)]
        lines += ["notanumber\tx", "#edges", "1\t999"]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        _, edges, malformed = load_category_file(path)
        assert malformed == 2
        assert edges == []

    def test_mostly_malformed_file_rejected(self, tmp_path):
        path = tmp_path / "cats.tsv"
        path.write_text("#categories\n1\tok\nbad line here\n", encoding="utf-8")
        with pytest.raises(FormatError):
            load_category_file(path)


class TestTypeMapFile:
    def test_round_trip(self, tmp_path):
        tm = TypeMap(types={10: 0, 11: 2}, universe=("person", "place", "thing"))
        path = tmp_path / "types.tsv"
        save_type_map(tm, path)
        loaded, malformed = load_type_map(path)
        assert loaded == tm
        assert malformed == 0

    def test_references_to_unknown_types_counted(self, tmp_path):
        path = tmp_path / "types.tsv"
        lines = ["#universe", "0\tperson", "#map"]
        lines += [f"{a}\t0" for a in range(300)] + ["999\t7"]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        loaded, malformed = load_type_map(path)
        assert malformed == 1
        assert 999 not in loaded.types

    def test_non_contiguous_universe_rejected(self, tmp_path):
        path = tmp_path / "types.tsv"
        path.write_text("#universe\n0\ta\n2\tc\n#map\n", encoding="utf-8")
        with pytest.raises(FormatError):
            load_type_map(path)


class TestPrunedFile:
    def test_round_trip_preserves_scores_and_structure(self, tmp_path):
        graph, tm = pure_and_impure_world()
        pruned = prune(graph, tm, threshold=0.5)
        path = tmp_path / "pruned.tsv"
        save_pruned(pruned, path, header_lines=["fingerprint=xyz"])
        loaded = load_pruned(path, graph)
        assert loaded.purity == pruned.purity
        assert loaded.closure_size == pruned.closure_size
        assert loaded.removed == pruned.removed
        assert loaded.threshold == pruned.threshold
        assert loaded.universe_size == pruned.universe_size
        assert loaded.graph.edges() == pruned.graph.edges()
        assert loaded.graph.memberships == pruned.graph.memberships
        assert loaded.graph.root == pruned.graph.root


class TestAnnotationsFile:
    def test_round_trip(self, tmp_path):
        annotations = [(10, 1, 1), (20, 1, 0)]
        path = tmp_path / "ann.tsv"
        save_annotations(annotations, path)
        assert load_annotations(path) == annotations

    def test_bad_label_rejected(self, tmp_path):
        path = tmp_path / "ann.tsv"
        path.write_text("10\t1\t2\n", encoding="utf-8")
        with pytest.raises(FormatError):
            load_annotations(path)
