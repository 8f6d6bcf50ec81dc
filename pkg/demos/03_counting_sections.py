"""
Count-based recommendations: P(section | category)
===================================================

The workhorse model is a glorified tally. For every surviving category
C and title S, score(S, C) is the fraction of training articles in C's
transitive closure that contain S. Recommending for an article sums
the score lists of its direct categories.
"""
from sectionrec.catgraph import break_cycles, prune, restrict_to_root
from sectionrec.corpus import filter_corpus, split_corpus
from sectionrec.counts import compute_scores, coverage_curve, recommend_for_article
from sectionrec.synthetic import SyntheticConfig, generate_synthetic

config = SyntheticConfig(n_categories=24, articles_per_category=12, leaves_per_branch=4)
world = generate_synthetic(config, seed=11)

# standard preparation: clean the corpus, restrict the graph to the root's
# component, break cycles, drop impure categories. Order matters: cycles
# must be broken on the restricted graph, or the breaker may cut tree
# edges that restriction relies on.
corpus = filter_corpus(world.corpus)
split = split_corpus(corpus, seed=11)
restricted = restrict_to_root(world.graph, world.root_id)
dag, removed_edges = break_cycles(restricted)
pruned = prune(dag, world.type_map, threshold=0.966)
print(f"cycle edges removed:     {len(removed_edges)}")
print(f"impure categories gone:  {len(pruned.removed)} of {dag.n_nodes}")

train = split.subset(corpus, "train")
table = compute_scores(train, pruned)
print(f"scored categories:       {len(table)}")

# a surviving leaf's score list, next to what the generator planted there
leaf = next(c for c in world.leaf_ids if c in table)
print(f"\ntop of the score list for {world.graph.names[leaf]!r}:")
for title, score in table.scores[leaf][:5]:
    print(f"  {score:.3f}  {title}")

# recommend for a test article, pretending we have not seen its sections
article = split.subset(corpus, "test")[0]
ranking = recommend_for_article(table, article, k=5, exclude_existing=False)
hits = set(ranking.titles()) & article.section_set()
print(f"\narticle {article.id}: {len(hits)}/5 of the top five are real sections")
for title, score in ranking:
    marker = "*" if title in article.section_set() else " "
    print(f"  {marker} {score:.3f}  {title}")

# how much of the category space has at least x scored titles
print("\ncoverage: fraction of categories with >= x scored sections")
for x, fraction in coverage_curve(table, x_max=8):
    print(f"  x={x}  {fraction:.2f}")
