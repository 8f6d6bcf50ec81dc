"""Structure and determinism of the generated corpus."""
import math

import pytest

from sectionrec.corpus import DEFAULT_BLACKLIST
from sectionrec.synthetic import SyntheticConfig, generate_synthetic

from conftest import SMALL_CONFIG


class TestPlantedProbabilities:
    def test_rank_zero_is_certain(self):
        assert SyntheticConfig().planted_probabilities()[0] == 1.0

    def test_non_increasing(self):
        probs = SyntheticConfig().planted_probabilities()
        assert all(a >= b for a, b in zip(probs, probs[1:]))

    def test_matches_poisson_tail(self):
        config = SyntheticConfig(section_count_mean=2.0, sections_per_category=4)
        probs = config.planted_probabilities()
        # P(Poisson(2) >= 1) = 1 - e^-2; P(>= 2) = 1 - 3 e^-2
        assert probs[1] == pytest.approx(1 - math.exp(-2), abs=1e-12)
        assert probs[2] == pytest.approx(1 - 3 * math.exp(-2), abs=1e-12)

    def test_expected_count_is_the_tail_sum(self):
        config = SyntheticConfig()
        assert config.expected_section_count() == pytest.approx(
            sum(config.planted_probabilities())
        )


class TestStructure:
    def test_category_roles_partition_the_network(self, small_world):
        ids = set(small_world.graph.names)
        roles = (
            {small_world.root_id}
            | set(small_world.branch_ids)
            | set(small_world.leaf_ids)
            | set(small_world.tag_ids)
        )
        assert ids == roles

    def test_counts_follow_config(self, small_world):
        config = small_world.config
        assert len(small_world.leaf_ids) == config.n_categories
        assert len(small_world.branch_ids) == math.ceil(
            config.n_categories / config.leaves_per_branch
        )
        assert len(small_world.tag_ids) == round(config.tag_fraction * config.n_categories)
        assert len(small_world.corpus) == config.n_categories * config.articles_per_category

    def test_every_leaf_parents_into_its_branch_and_branches_into_root(self, small_world):
        graph = small_world.graph
        for leaf in small_world.leaf_ids:
            parents = graph.parents[leaf] - {small_world.root_id}
            assert len(parents & set(small_world.branch_ids)) == 1
        for branch in small_world.branch_ids:
            assert small_world.root_id in graph.parents[branch]

    def test_requested_number_of_cycle_edges_planted(self, small_world):
        graph = small_world.graph
        downward = [e for e in graph.edges() if e[0] == small_world.root_id]
        assert len(downward) == small_world.config.cycle_edges

    def test_every_article_is_a_member_of_its_leaf(self, small_world):
        for aid, leaf in small_world.leaf_of_article.items():
            assert leaf in small_world.corpus.articles[aid].categories

    def test_tags_mix_entity_types(self, small_world):
        members = small_world.graph.members_by_category()
        for tag in small_world.tag_ids:
            types = {
                small_world.type_map.types[a]
                for a in members[tag]
                if a in small_world.type_map.types
            }
            assert len(types) >= 2

    def test_leaves_are_type_pure(self, small_world):
        members = small_world.graph.members_by_category()
        for leaf in small_world.leaf_ids:
            types = {
                small_world.type_map.types[a]
                for a in members[leaf]
                if a in small_world.type_map.types
            }
            assert len(types) == 1


class TestPlantedSections:
    def test_every_leaf_gets_the_configured_number_of_titles(self, small_world):
        for leaf in small_world.leaf_ids:
            assert len(small_world.planted[leaf]) == small_world.config.sections_per_category

    def test_probabilities_attached_in_rank_order(self, small_world):
        probs = small_world.config.planted_probabilities()
        for leaf in small_world.leaf_ids:
            assert tuple(p for _, p in small_world.planted[leaf]) == probs

    def test_even_ranks_are_leaf_specific_odd_ranks_branch_generic(self, small_world):
        for leaf in small_world.leaf_ids:
            titles = [t for t, _ in small_world.planted[leaf]]
            for j, title in enumerate(titles):
                prefix = "detail" if j % 2 == 0 else "overview"
                assert title.startswith(prefix)

    def test_leaves_of_one_branch_share_their_generics(self, small_world):
        by_branch = {}
        for i, leaf in enumerate(small_world.leaf_ids):
            branch = small_world.branch_ids[i // small_world.config.leaves_per_branch]
            generics = {t for t, _ in small_world.planted[leaf] if t.startswith("overview")}
            by_branch.setdefault(branch, []).append(generics)
        for sets in by_branch.values():
            assert all(s == sets[0] for s in sets)

    def test_specific_titles_are_unique_to_their_leaf(self, small_world):
        seen = {}
        for leaf in small_world.leaf_ids:
            for title, _ in small_world.planted[leaf]:
                if title.startswith("detail"):
                    assert seen.setdefault(title, leaf) == leaf

    def test_zero_noise_articles_carry_exact_planted_prefixes(self):
        config = SyntheticConfig(
            n_categories=10,
            articles_per_category=8,
            noise_rate=0.0,
            blacklist_rate=0.0,
            unique_section_rate=0.0,
        )
        data = generate_synthetic(config, seed=3)
        for article in data.corpus:
            planted_titles = [t for t, _ in data.planted[data.leaf_of_article[article.id]]]
            assert list(article.sections) == planted_titles[: len(article.sections)]
            assert 1 <= len(article.sections) <= config.sections_per_category

    def test_noise_swaps_stay_inside_the_planted_title_space(self, small_world):
        planted_titles = {
            t for leaf in small_world.leaf_ids for t, _ in small_world.planted[leaf]
        }
        for article in small_world.corpus:
            for title in article.sections:
                ok = (
                    title in planted_titles
                    or title in DEFAULT_BLACKLIST
                    or title == f"misc note {article.id}"
                )
                assert ok, title


class TestTextAndTypes:
    def test_tokens_come_from_branch_or_common_vocabulary(self, small_world):
        for article in small_world.corpus:
            for token in article.tokens:
                assert token.startswith("w ")

    def test_stub_articles_are_short(self, small_world):
        config = small_world.config
        for article in small_world.corpus:
            expected = config.stub_tokens if article.is_stub else config.tokens_per_article
            assert len(article.tokens) == expected

    def test_unknown_type_fraction_near_config(self, small_world):
        n = len(small_world.corpus)
        untyped = n - len(small_world.type_map.types)
        assert untyped / n == pytest.approx(small_world.config.unknown_type_rate, abs=0.05)

    def test_type_universe_has_the_configured_size(self, small_world):
        assert small_world.type_map.size == small_world.config.type_universe_size


class TestAnnotations:
    def test_positive_labels_point_at_leaf_and_branch(self, small_world):
        branches = set(small_world.branch_ids)
        leaves = set(small_world.leaf_ids)
        positives = [(a, c) for a, c, label in small_world.annotations if label == 1]
        assert positives
        for aid, cid in positives:
            assert cid in branches | leaves
            assert cid in small_world.corpus.articles[aid].categories or cid in branches

    def test_negative_labels_point_at_tags(self, small_world):
        tags = set(small_world.tag_ids)
        negatives = [(a, c) for a, c, label in small_world.annotations if label == 0]
        assert negatives
        for _, cid in negatives:
            assert cid in tags


class TestDeterminism:
    def test_same_seed_reproduces_the_world(self):
        a = generate_synthetic(SMALL_CONFIG, seed=11)
        b = generate_synthetic(SMALL_CONFIG, seed=11)
        assert a.corpus.articles == b.corpus.articles
        assert a.planted == b.planted
        assert a.graph.edges() == b.graph.edges()
        assert a.type_map == b.type_map
        assert a.annotations == b.annotations

    def test_different_seeds_give_different_corpora(self):
        a = generate_synthetic(SMALL_CONFIG, seed=11)
        b = generate_synthetic(SMALL_CONFIG, seed=12)
        assert a.corpus.articles != b.corpus.articles


class TestValidation:
    def test_rates_outside_unit_interval_rejected(self):
        with pytest.raises(ValueError):
            generate_synthetic(SyntheticConfig(noise_rate=1.5))

    def test_single_type_universe_rejected(self):
        with pytest.raises(ValueError):
            generate_synthetic(SyntheticConfig(type_universe_size=1))

    def test_tag_must_mix_at_least_two_types(self):
        with pytest.raises(ValueError):
            generate_synthetic(SyntheticConfig(tag_donors=1))

    def test_generics_cannot_exceed_the_pool(self):
        with pytest.raises(ValueError):
            generate_synthetic(SyntheticConfig(generic_pool=3, generics_per_branch=5))
