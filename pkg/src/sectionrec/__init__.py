"""Section title recommendation for reference articles.

Four recommenders over one corpus model: category section counts on a
purity-pruned category network, learned merging of those per-category
rankings, a topic model over article text, and collaborative filtering
over the article/section matrix. An evaluation harness compares them
against each other and a random floor.
"""

from .catgraph import (
    CategoryGraph,
    PrunedGraph,
    SweepRow,
    TypeMap,
    UndefinedPurityError,
    break_cycles,
    closure_members,
    gini,
    prune,
    restrict_to_root,
    threshold_sweep,
    type_histogram,
)
from .corpus import (
    DEFAULT_BLACKLIST,
    Article,
    Corpus,
    CorpusStats,
    SplitAssignment,
    corpus_stats,
    filter_corpus,
    load_corpus,
    normalize_title,
    save_corpus,
    split_corpus,
)
from .counts import (
    ScoreTable,
    compute_scores,
    coverage_curve,
    recommend_for_article,
    recommend_for_category,
)
from .errors import (
    ConfigError,
    FormatError,
    MissingPrerequisiteError,
    SectionRecError,
)
from .evaluation import (
    EvalReport,
    evaluate_method,
    export_annotation_tasks,
    pr_at_k,
    random_recommender,
    upper_bounds,
)
from .factorize import (
    FactorModel,
    RatingsMatrix,
    als_explicit,
    als_implicit,
    build_article_matrix,
    build_category_matrix,
    recommend_from_model,
)
from .l2r import MergeModel, merge_rankings, train_merge_model
from .ranking import Ranking, rank_items
from .synthetic import SyntheticConfig, SyntheticData, generate_synthetic
from .topics import (
    TopicModel,
    TopicSectionTable,
    build_topic_section_table,
    infer_mixture,
    recommend_topic,
    train_topic_model,
)

__version__ = "0.1.0"

__all__ = [
    "Article",
    "CategoryGraph",
    "ConfigError",
    "Corpus",
    "CorpusStats",
    "DEFAULT_BLACKLIST",
    "EvalReport",
    "FactorModel",
    "FormatError",
    "MergeModel",
    "MissingPrerequisiteError",
    "PrunedGraph",
    "Ranking",
    "RatingsMatrix",
    "ScoreTable",
    "SectionRecError",
    "SplitAssignment",
    "SweepRow",
    "SyntheticConfig",
    "SyntheticData",
    "TopicModel",
    "TopicSectionTable",
    "TypeMap",
    "UndefinedPurityError",
    "als_explicit",
    "als_implicit",
    "break_cycles",
    "build_article_matrix",
    "build_category_matrix",
    "build_topic_section_table",
    "closure_members",
    "compute_scores",
    "corpus_stats",
    "coverage_curve",
    "evaluate_method",
    "export_annotation_tasks",
    "filter_corpus",
    "generate_synthetic",
    "gini",
    "infer_mixture",
    "load_corpus",
    "merge_rankings",
    "normalize_title",
    "pr_at_k",
    "prune",
    "random_recommender",
    "rank_items",
    "recommend_for_article",
    "recommend_for_category",
    "recommend_from_model",
    "recommend_topic",
    "restrict_to_root",
    "save_corpus",
    "split_corpus",
    "threshold_sweep",
    "train_merge_model",
    "train_topic_model",
    "type_histogram",
    "upper_bounds",
]
