"""Scenario generation, batch execution, metrics, and statistics."""

from .batch import (  # noqa: F401
    BatchSummary,
    build_euclid_scenario,
    build_text_scenario,
    expand_grid,
    load_batch_file,
    mock_provider_factory,
    run_batch,
    run_single,
)
from .sampling import (  # noqa: F401
    GmmSpec,
    derive_seed,
    perturb_init,
    sample_gmm_spec,
    sample_ideal_points,
    sample_status_quo,
)
from .stats import anova_oneway, pairwise_compare, welch_t  # noqa: F401
