"""
Generating a synthetic corpus with planted ground truth
=======================================================

Every experiment in this package runs against a generated world: a
category tree (root -> branches -> leaves) with articles attached to
the leaves, plus impure "tag" categories that deliberately mix entity
types. Each leaf plants a ranked list of section titles, and articles
sample their sections from that list, so we always know what a perfect
recommender should have said.
"""
from sectionrec.corpus import corpus_stats
from sectionrec.synthetic import SyntheticConfig, generate_synthetic

config = SyntheticConfig(n_categories=24, articles_per_category=12, leaves_per_branch=4)
world = generate_synthetic(config, seed=11)

stats = corpus_stats(world.corpus)
print(f"articles:          {stats.article_count}")
print(f"mean sections:     {stats.mean_sections:.2f}")
print(f"stub fraction:     {stats.stub_fraction:.3f}")
print(f"leaf categories:   {len(world.leaf_ids)}")
print(f"branch categories: {len(world.branch_ids)}")
print(f"tag categories:    {len(world.tag_ids)}")

# the planted truth for one leaf: titles with their inclusion probabilities,
# rank 0 is guaranteed to appear in every untouched article of the leaf
leaf = world.leaf_ids[0]
print(f"\nplanted sections for {world.graph.names[leaf]!r}:")
for title, probability in world.planted[leaf]:
    print(f"  {probability:.3f}  {title}")

# one article from that leaf, for comparison
aid = next(a for a, l in sorted(world.leaf_of_article.items()) if l == leaf)
article = world.corpus.articles[aid]
print(f"\narticle {article.id} ({article.title!r}) actually has:")
for title in article.sections:
    print(f"         {title}")
