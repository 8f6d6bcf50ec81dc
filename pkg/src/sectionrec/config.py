"""Run configuration: one TOML file drives every pipeline stage.

Top-level keys set the seed and working directory; each stage reads its
own table. Unknown tables or keys are errors, not warnings, so typos
fail fast. The configuration's fingerprint (sha256 of its canonical JSON
form) is stamped into every artifact header, which is what lets a stage
refuse to mix artifacts produced under different settings.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

from .errors import ConfigError
from .synthetic import SyntheticConfig

__all__ = ["RunConfig", "load_config", "fingerprint", "KNOWN_METHODS"]

KNOWN_METHODS = ("random", "counts", "l2r", "topics", "cf-article", "cf-category")


@dataclass(frozen=True)
class IngestSection:
    """Input paths; empty strings fall back to the synth outputs in data_dir."""

    corpus: str = ""
    categories: str = ""
    types: str = ""
    blacklist: str = ""


@dataclass(frozen=True)
class SplitSection:
    train: float = 0.8
    test: float = 0.15
    validation: float = 0.05


@dataclass(frozen=True)
class PruneSection:
    threshold: float = 0.966
    root_id: int = 1


@dataclass(frozen=True)
class CountsSection:
    include_ancestors: bool = False


@dataclass(frozen=True)
class CfArticleSection:
    k: int = 32
    reg: float = 0.1
    iterations: int = 15
    holdout_fraction: float = 0.5
    min_sections: int = 2


@dataclass(frozen=True)
class CfCategorySection:
    k: int = 32
    reg: float = 0.1
    alpha: float = 40.0
    iterations: int = 15
    top_n: int = 100


@dataclass(frozen=True)
class TopicsSection:
    k: int = 40
    alpha: float = 0.0  # 0 means the 50/k default
    beta: float = 0.01
    iterations: int = 500
    inference_iterations: int = 100


@dataclass(frozen=True)
class L2RSection:
    k_opt: int = 10
    reg: float = 1e-3
    max_features: int = 6
    min_articles: int = 50


@dataclass(frozen=True)
class EvaluateSection:
    k_values: tuple = (1, 3, 5, 10)
    methods: tuple = ("random", "counts", "l2r", "topics", "cf-article")


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    data_dir: str = "work"
    synth: SyntheticConfig = field(default_factory=SyntheticConfig)
    ingest: IngestSection = field(default_factory=IngestSection)
    split: SplitSection = field(default_factory=SplitSection)
    prune: PruneSection = field(default_factory=PruneSection)
    counts: CountsSection = field(default_factory=CountsSection)
    cf_article: CfArticleSection = field(default_factory=CfArticleSection)
    cf_category: CfCategorySection = field(default_factory=CfCategorySection)
    topics: TopicsSection = field(default_factory=TopicsSection)
    l2r: L2RSection = field(default_factory=L2RSection)
    evaluate: EvaluateSection = field(default_factory=EvaluateSection)


_SECTIONS = {
    "synth": SyntheticConfig,
    "ingest": IngestSection,
    "split": SplitSection,
    "prune": PruneSection,
    "counts": CountsSection,
    "cf_article": CfArticleSection,
    "cf_category": CfCategorySection,
    "topics": TopicsSection,
    "l2r": L2RSection,
    "evaluate": EvaluateSection,
}


def _build_section(cls, data: dict, where: str):
    defaults = cls()
    valid = {f.name for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in valid:
            raise ConfigError(f"unknown key {key!r} in [{where}]")
        default = getattr(defaults, key)
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise ConfigError(f"[{where}] {key} must be a boolean")
        elif isinstance(default, float):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"[{where}] {key} must be a number")
            value = float(value)
        elif isinstance(default, int):
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"[{where}] {key} must be an integer")
        elif isinstance(default, str):
            if not isinstance(value, str):
                raise ConfigError(f"[{where}] {key} must be a string")
        elif isinstance(default, tuple):
            if not isinstance(value, list):
                raise ConfigError(f"[{where}] {key} must be a list")
            value = tuple(value)
        kwargs[key] = value
    return cls(**kwargs)


def load_config(path) -> RunConfig:
    """Parse and validate a TOML run configuration."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}")

    kwargs = {}
    for key, value in data.items():
        if key == "seed":
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError("seed must be an integer")
            kwargs["seed"] = value
        elif key == "data_dir":
            if not isinstance(value, str) or not value:
                raise ConfigError("data_dir must be a nonempty string")
            kwargs["data_dir"] = value
        elif key in _SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(f"[{key}] must be a table")
            kwargs[key] = _build_section(_SECTIONS[key], value, key)
        else:
            raise ConfigError(f"unknown config key {key!r}")
    config = RunConfig(**kwargs)
    _validate(config)
    return config


def _validate(config: RunConfig) -> None:
    if not 0.0 <= config.prune.threshold <= 1.0:
        raise ConfigError("prune.threshold must be in [0, 1]")
    ratios = (config.split.train, config.split.test, config.split.validation)
    if any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError("split ratios must be nonnegative and sum to 1")
    for k in config.evaluate.k_values:
        if isinstance(k, bool) or not isinstance(k, int) or k < 1:
            raise ConfigError("evaluate.k_values must be positive integers")
    for method in config.evaluate.methods:
        if method not in KNOWN_METHODS:
            raise ConfigError(
                f"unknown method {method!r}; known: {', '.join(KNOWN_METHODS)}"
            )
    for name, value in (("cf_article.k", config.cf_article.k),
                        ("cf_category.k", config.cf_category.k),
                        ("topics.k", config.topics.k)):
        if value < 1:
            raise ConfigError(f"{name} must be at least 1")


def fingerprint(config: RunConfig) -> str:
    """sha256 over the canonical JSON form; identical configs share artifacts."""
    canonical = json.dumps(asdict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
