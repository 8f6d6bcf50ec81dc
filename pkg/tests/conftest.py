import pytest

from sectionrec import SyntheticConfig, generate_synthetic

# small enough to regenerate quickly, big enough to have every structure:
# 6 branches, 24 leaves, impure tags, stubs, noise, cycle edges
SMALL_CONFIG = SyntheticConfig(
    n_categories=24,
    articles_per_category=12,
    leaves_per_branch=4,
    tag_members=10,
    cycle_edges=2,
)


@pytest.fixture(scope="session")
def small_world():
    return generate_synthetic(SMALL_CONFIG, seed=11)
