"""
Merging category lists with learned weights, then measuring everything
======================================================================

When an article sits in several categories, the naive merge adds raw
scores, which lets a huge vague category shout over a small precise
one. The merge model learns a reweighting from features of each
proposal (score, rank, category purity, closure size) on validation
articles, by greedy forward feature selection; with no features it
reduces exactly to the unweighted sum.

The evaluation harness then compares every recommender on the same
test articles with macro-averaged precision/recall at k.
"""
from sectionrec.catgraph import break_cycles, prune, restrict_to_root
from sectionrec.corpus import filter_corpus, split_corpus
from sectionrec.counts import compute_scores
from sectionrec.evaluation import (
    evaluate_method,
    make_counts_recommender,
    make_l2r_recommender,
    random_recommender,
)
from sectionrec.l2r import train_merge_model
from sectionrec.synthetic import SyntheticConfig, generate_synthetic

config = SyntheticConfig(n_categories=24, articles_per_category=12, leaves_per_branch=4)
world = generate_synthetic(config, seed=11)
corpus = filter_corpus(world.corpus)
split = split_corpus(corpus, ratios=(0.6, 0.2, 0.2), seed=11)
dag, _ = break_cycles(restrict_to_root(world.graph, world.root_id))
pruned = prune(dag, world.type_map, threshold=0.966)
table = compute_scores(split.subset(corpus, "train"), pruned)

model = train_merge_model(
    table, pruned, split.subset(corpus, "validation"), k_opt=5, min_articles=20,
)
print("selected features:", list(model.feature_names()))

test = split.subset(corpus, "test")
vocabulary = {t for a in split.subset(corpus, "train") for t in a.section_set()}
truth = lambda article: article.section_set()

contenders = {
    "random": random_recommender(sorted(vocabulary), seed=11),
    "counts": make_counts_recommender(table, pruned),
    "l2r": make_l2r_recommender(table, model, pruned),
}
print(f"\n{'method':8s}  {'p@1':>6s}  {'p@5':>6s}  {'r@5':>6s}")
for name, recommender in contenders.items():
    report = evaluate_method(test, recommender, truth, k_values=(1, 5), method=name)
    print(f"{name:8s}  {report.precision[1]:6.3f}  {report.precision[5]:6.3f}"
          f"  {report.recall[5]:6.3f}")
