"""Synthetic corpus generator with planted ground truth.

The generated world mirrors the structures the recommenders exploit:
leaf categories with planted, rank-ordered section distributions and
per-category vocabularies; branch categories grouping several leaves of
one entity type; impure "tag" categories mixing entity types (the ones
purity pruning must remove); a root over everything; a few nonsense
edges that create cycles; plus stubs, boilerplate sections and unique
junk titles for the filtering stages to clean up.

Every draw comes from one seeded generator in a fixed order, so the same
config and seed reproduce the corpus byte for byte.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
import numpy as np

from .catgraph import CategoryGraph, TypeMap
from .corpus import Article, Corpus, DEFAULT_BLACKLIST

__all__ = ["SyntheticConfig", "SyntheticData", "generate_synthetic"]

_SYNTH_STREAM = 5


@dataclass(frozen=True)
class SyntheticConfig:
    """Knobs for the generated world; defaults give the standard desk-scale corpus."""

    n_categories: int = 200              # leaf categories with planted sections
    articles_per_category: int = 30
    sections_per_category: int = 8       # planted titles per leaf, rank ordered
    section_count_mean: float = 2.5      # count = 1 + min(Poisson(mean), planted - 1)
    noise_rate: float = 0.10             # chance a planted slot is swapped for a random title
    tag_fraction: float = 0.20           # impure tag categories per leaf category
    leaves_per_branch: int = 5           # leaves sharing one entity type under a branch
    branch_membership_rate: float = 0.5  # article is also a direct member of its branch
    generic_pool: int = 30               # corpus-wide pool of generic section titles
    generics_per_branch: int = 4         # generics shared by a branch's leaves
    tag_members: int = 20
    tag_donors: int = 4                  # distinct-type leaves feeding each tag
    type_universe_size: int = 55
    unknown_type_rate: float = 0.05
    vocabulary_per_category: int = 25
    common_vocabulary: int = 50
    tokens_per_article: int = 60
    common_token_rate: float = 0.20
    stub_fraction: float = 0.05
    stub_tokens: int = 12
    blacklist_rate: float = 0.30         # chance of one boilerplate section
    unique_section_rate: float = 0.03    # chance of one corpus-unique junk title
    cycle_edges: int = 3
    root_name: str = "Main topic classification"

    def planted_probabilities(self) -> tuple[float, ...]:
        """P(an article includes its category's rank-j section), the oracle ranking."""
        lam = self.section_count_mean
        pmf = [math.exp(-lam)]
        for i in range(1, self.sections_per_category):
            pmf.append(pmf[-1] * lam / i)
        tail = []
        acc = 1.0
        for j in range(self.sections_per_category):
            tail.append(acc)  # P(Poisson >= j)
            acc -= pmf[j]
        return tuple(tail)

    def expected_section_count(self) -> float:
        """E[#planted sections per article] = 1 + sum_{j>=1} P(include rank j)."""
        return float(sum(self.planted_probabilities()))


@dataclass(frozen=True)
class SyntheticData:
    """Generated corpus plus every piece of ground truth the tests check against."""

    corpus: Corpus
    graph: CategoryGraph
    type_map: TypeMap
    planted: dict[int, tuple[tuple[str, float], ...]]
    root_id: int
    branch_ids: tuple[int, ...]
    leaf_ids: tuple[int, ...]
    tag_ids: tuple[int, ...]
    leaf_of_article: dict[int, int]
    annotations: tuple[tuple[int, int, int], ...]
    config: SyntheticConfig = field(default_factory=SyntheticConfig)
    seed: int = 0


def _validate(config: SyntheticConfig) -> None:
    if config.n_categories < 1 or config.articles_per_category < 1:
        raise ValueError("need at least one category and one article per category")
    if not 1 <= config.sections_per_category <= 100:
        raise ValueError("sections_per_category must be in [1, 100]")
    for name in ("noise_rate", "tag_fraction", "branch_membership_rate",
                 "unknown_type_rate", "common_token_rate", "stub_fraction",
                 "blacklist_rate", "unique_section_rate"):
        value = getattr(config, name)
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name} must be in [0, 1], got {value}")
    if config.leaves_per_branch < 1:
        raise ValueError("leaves_per_branch must be at least 1")
    if config.type_universe_size < 2:
        raise ValueError("type_universe_size must be at least 2")
    if config.tag_donors < 2:
        raise ValueError("tag_donors must be at least 2 (a tag must mix types)")
    if not 1 <= config.generics_per_branch <= config.generic_pool:
        raise ValueError("generics_per_branch must be in [1, generic_pool]")


def generate_synthetic(config: SyntheticConfig, seed: int = 0) -> SyntheticData:
    """Build the corpus, category network, type map, and ground truth."""
    _validate(config)
    rng = np.random.default_rng([_SYNTH_STREAM, seed])

    root = 1
    n_leaves = config.n_categories
    n_branches = math.ceil(n_leaves / config.leaves_per_branch)
    branch_ids = tuple(100 + i for i in range(n_branches))
    leaf_ids = tuple(1000 + i for i in range(n_leaves))
    n_tags = round(config.tag_fraction * n_leaves)
    tag_ids = tuple(10000 + i for i in range(n_tags))

    names = {root: config.root_name}
    names.update({b: f"Branch {i:03d}" for i, b in enumerate(branch_ids)})
    names.update({c: f"Topic {i:04d}" for i, c in enumerate(leaf_ids)})
    names.update({t: f"Tag {i:03d}" for i, t in enumerate(tag_ids)})

    branch_of_leaf = {
        leaf: branch_ids[i // config.leaves_per_branch] for i, leaf in enumerate(leaf_ids)
    }
    branch_type = {b: i % config.type_universe_size for i, b in enumerate(branch_ids)}
    leaf_type = {leaf: branch_type[branch_of_leaf[leaf]] for leaf in leaf_ids}

    edges: list[tuple[int, int]] = [(b, root) for b in branch_ids]
    edges.extend((leaf, branch_of_leaf[leaf]) for leaf in leaf_ids)
    for tag in tag_ids:
        if rng.random() < 0.5 and branch_ids:
            edges.append((tag, branch_ids[int(rng.integers(0, n_branches))]))
        else:
            edges.append((tag, root))

    # Planted titles interleave leaf specifics (even ranks) with generics
    # the whole branch shares (odd ranks). One observed generic title is
    # therefore ambiguous across branches, while leaf specifics pin the
    # article down exactly; rank order still encodes inclusion probability.
    generic_titles = [f"overview {g:02d}" for g in range(config.generic_pool)]
    branch_generics = {}
    for b in branch_ids:
        chosen = rng.choice(config.generic_pool, size=config.generics_per_branch, replace=False)
        branch_generics[b] = [generic_titles[int(g)] for g in chosen]

    planted: dict[int, tuple[tuple[str, float], ...]] = {}
    probs = config.planted_probabilities()
    for i, leaf in enumerate(leaf_ids):
        generics = branch_generics[branch_of_leaf[leaf]]
        titles = []
        for j in range(config.sections_per_category):
            if j % 2 == 0:
                # sorts before "overview ..." so an exact score tie between a
                # specific and a generic resolves to the specific
                titles.append(f"detail {i:04d} {j // 2:02d}")
            else:
                titles.append(generics[(j // 2) % len(generics)])
        planted[leaf] = tuple(zip(titles, probs))
    all_planted_titles = sorted({title for leaf in leaf_ids for title, _ in planted[leaf]})

    # articles of one branch write with one vocabulary, so text identifies
    # the branch even when the visible sections do not
    common_vocab = [f"w common {i:03d}" for i in range(config.common_vocabulary)]
    branch_vocab = {
        b: [f"w {i:03d} {j:03d}" for j in range(config.vocabulary_per_category)]
        for i, b in enumerate(branch_ids)
    }
    leaf_vocab = {leaf: branch_vocab[branch_of_leaf[leaf]] for leaf in leaf_ids}
    boilerplate = sorted(DEFAULT_BLACKLIST)

    articles: dict[int, Article] = {}
    categories_of: dict[int, set[int]] = {}
    sections_of: dict[int, list[str]] = {}
    leaf_of_article: dict[int, int] = {}
    type_assignments: dict[int, int] = {}
    members_of_leaf: dict[int, list[int]] = {leaf: [] for leaf in leaf_ids}

    next_id = 1
    for i, leaf in enumerate(leaf_ids):
        for _ in range(config.articles_per_category):
            aid = next_id
            next_id += 1
            members_of_leaf[leaf].append(aid)
            leaf_of_article[aid] = leaf

            count = 1 + min(int(rng.poisson(config.section_count_mean)),
                            config.sections_per_category - 1)
            sections = [title for title, _ in planted[leaf][:count]]
            for slot in range(len(sections)):
                if rng.random() < config.noise_rate:
                    sections[slot] = all_planted_titles[
                        int(rng.integers(0, len(all_planted_titles)))
                    ]
            if rng.random() < config.blacklist_rate:
                sections.append(boilerplate[int(rng.integers(0, len(boilerplate)))])
            if rng.random() < config.unique_section_rate:
                sections.append(f"misc note {aid}")

            is_stub = bool(rng.random() < config.stub_fraction)
            n_tokens = config.stub_tokens if is_stub else config.tokens_per_article
            from_common = rng.random(n_tokens) < config.common_token_rate
            common_idx = rng.integers(0, config.common_vocabulary, size=n_tokens)
            leaf_idx = rng.integers(0, config.vocabulary_per_category, size=n_tokens)
            tokens = [
                common_vocab[common_idx[t]] if from_common[t] else leaf_vocab[leaf][leaf_idx[t]]
                for t in range(n_tokens)
            ]

            cats = {leaf}
            if rng.random() < config.branch_membership_rate:
                cats.add(branch_of_leaf[leaf])
            categories_of[aid] = cats
            sections_of[aid] = sections
            if rng.random() >= config.unknown_type_rate:
                type_assignments[aid] = leaf_type[leaf]
            articles[aid] = Article(
                id=aid,
                title=f"Article {aid:05d}",
                tokens=tuple(tokens),
                sections=(),  # filled in below, after tag assignment
                categories=frozenset(),
                is_stub=is_stub,
                quality="good" if rng.random() < 0.10 else None,
            )

    # tags draw members from several leaves with pairwise distinct types
    annotations: list[tuple[int, int, int]] = []
    for tag in tag_ids:
        order = rng.permutation(n_leaves)
        donors: list[int] = []
        seen_types: set[int] = set()
        for idx in order:
            leaf = leaf_ids[int(idx)]
            if leaf_type[leaf] not in seen_types:
                donors.append(leaf)
                seen_types.add(leaf_type[leaf])
            if len(donors) == config.tag_donors:
                break
        share = max(1, config.tag_members // len(donors))
        for donor in donors:
            pool = members_of_leaf[donor]
            chosen = rng.choice(len(pool), size=min(share, len(pool)), replace=False)
            for j in sorted(int(x) for x in chosen):
                categories_of[pool[j]].add(tag)

    # nonsense edges that close cycles through the root
    if config.cycle_edges and n_leaves:
        chosen = rng.choice(n_leaves, size=min(config.cycle_edges, n_leaves), replace=False)
        for idx in sorted(int(x) for x in chosen):
            edges.append((root, leaf_ids[idx]))

    for aid, article in articles.items():
        articles[aid] = Article(
            id=aid,
            title=article.title,
            tokens=article.tokens,
            sections=tuple(sections_of[aid]),
            categories=frozenset(categories_of[aid]),
            is_stub=article.is_stub,
            quality=article.quality,
        )

    # membership annotations: pure paths are yes, tag assignments are no
    sample = sorted(articles)[: min(200, len(articles))]
    for aid in sample:
        leaf = leaf_of_article[aid]
        annotations.append((aid, leaf, 1))
        annotations.append((aid, branch_of_leaf[leaf], 1))
    tag_set = set(tag_ids)
    tagged = [
        (aid, tag)
        for aid in sorted(categories_of)
        for tag in sorted(categories_of[aid])
        if tag in tag_set
    ]
    annotations.extend((aid, tag, 0) for aid, tag in tagged[:200])

    memberships = {aid: categories_of[aid] for aid in articles}
    graph = CategoryGraph(names, edges, memberships, root=root)
    universe = tuple(f"Type {i:02d}" for i in range(config.type_universe_size))
    type_map = TypeMap(types=type_assignments, universe=universe)
    corpus = Corpus(
        articles=articles,
        blacklist=DEFAULT_BLACKLIST,
        provenance=f"synthetic seed={seed}",
    )
    return SyntheticData(
        corpus=corpus,
        graph=graph,
        type_map=type_map,
        planted=planted,
        root_id=root,
        branch_ids=branch_ids,
        leaf_ids=leaf_ids,
        tag_ids=tag_ids,
        leaf_of_article=leaf_of_article,
        annotations=tuple(annotations),
        config=config,
        seed=seed,
    )
