"""
Recommending sections through a topic model
===========================================

Categories are not the only signal: an article's words say what it is
about. A collapsed Gibbs LDA fits topic mixtures over article tokens;
each section title then gets a per-topic weight table by splitting
every occurrence across its article's mixture. Recommendation is the
mixture-weighted sum of those tables, so it works even for an article
with no categories at all.
"""
import numpy as np

from sectionrec.corpus import filter_corpus
from sectionrec.synthetic import SyntheticConfig, generate_synthetic
from sectionrec.topics import build_topic_section_table, recommend_topic, train_topic_model

config = SyntheticConfig(n_categories=24, articles_per_category=12, leaves_per_branch=4)
world = generate_synthetic(config, seed=11)
corpus = filter_corpus(world.corpus)
articles = [corpus.articles[i] for i in sorted(corpus.articles)]

docs = [(a.id, list(a.tokens)) for a in articles]
model = train_topic_model(docs, k=8, iterations=120, seed=11)
print(f"fitted {model.k} topics over {len(docs)} documents")

# the top tokens of each topic; the generator gives each branch its own
# vocabulary, so topics should line up with branches
phi = model.phi()
for topic in range(model.k):
    top = np.argsort(phi[topic])[::-1][:4]
    words = ", ".join(model.vocabulary[i] for i in top)
    print(f"  topic {topic}: {words}")

table = build_topic_section_table(model, articles)
print(f"\nsection table covers {len(table.weights)} titles")

article = articles[0]
ranking = recommend_topic(table, model, article, k=5, exclude_existing=False)
print(f"topic recommendations for article {article.id}:")
for title, score in ranking:
    marker = "*" if title in article.section_set() else " "
    print(f"  {marker} {score:.3f}  {title}")
