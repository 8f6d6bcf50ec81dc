"""
Matrix factorization over articles and categories
=================================================

Two collaborative-filtering variants, both trained with alternating
least squares:

* article x section, explicit binary ratings. Test articles keep only
  half of their sections in the matrix; the factor model has to predict
  the held-out half from the pattern of the rest.
* category x section, implicit confidence weights built from the count
  model's scores, which smooths the score lists of sparse categories.
"""
import numpy as np

from sectionrec.catgraph import break_cycles, prune, restrict_to_root
from sectionrec.corpus import filter_corpus, split_corpus
from sectionrec.counts import compute_scores
from sectionrec.factorize import (
    als_explicit,
    als_implicit,
    build_article_matrix,
    build_category_matrix,
    recommend_from_model,
)
from sectionrec.synthetic import SyntheticConfig, generate_synthetic

config = SyntheticConfig(n_categories=24, articles_per_category=12, leaves_per_branch=4)
world = generate_synthetic(config, seed=11)
corpus = filter_corpus(world.corpus)
split = split_corpus(corpus, seed=11)

ratings, holdout = build_article_matrix(corpus, split, holdout_fraction=0.5, seed=11)
print(f"article matrix: {ratings.matrix.shape[0]} x {ratings.matrix.shape[1]}, "
      f"{ratings.matrix.nnz} observed cells")
print(f"test articles with held-out sections: {len(holdout)}")

model = als_explicit(ratings, k=16, reg=0.1, iterations=10, seed=11)
trace = model.loss_trace
print(f"loss trace: {trace[0]:.1f} -> {trace[-1]:.1f} "
      f"(monotone: {bool(np.all(np.diff(trace) <= 1e-9))})")

# can the factors surface a section the matrix never saw for this article?
aid = sorted(holdout)[0]
held_in = corpus.articles[aid].section_set() - holdout[aid]
ranking = recommend_from_model(model, aid, k=5, exclusions=held_in)
print(f"\narticle {aid} hides {sorted(holdout[aid])}")
print("model suggests:")
for title, score in ranking:
    marker = "*" if title in holdout[aid] else " "
    print(f"  {marker} {score:.3f}  {title}")

# the category variant: factorize the count model's score table
dag, _ = break_cycles(restrict_to_root(world.graph, world.root_id))
pruned = prune(dag, world.type_map, threshold=0.966)
table = compute_scores(split.subset(corpus, "train"), pruned)
cat_ratings = build_category_matrix(table, top_n=50)
cat_model = als_implicit(cat_ratings, k=8, reg=0.1, alpha=40.0, iterations=10, seed=11)
leaf = next(c for c in world.leaf_ids if c in table)
print(f"\nsmoothed list for {world.graph.names[leaf]!r}:")
for title, score in recommend_from_model(cat_model, leaf, k=5):
    print(f"  {score:.3f}  {title}")
