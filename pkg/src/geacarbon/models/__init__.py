"""Panel estimators: fixed/random effects, 2SLS, moderation, threshold regression."""

from .iv import TslsResult, tsls
from .linear import HausmanResult, fixed_effects, hausman_test, random_effects, within_design
from .moderation import center, interaction_name, moderation_fit, simple_slopes
from .results import EstimationResult, ModelSpec, stars_for, two_sided_p
from .sampling import lag_name, lag_variable, load_region_map, split_sample
from .threshold import (
    LR_CRITICAL_95,
    ThresholdBootstrap,
    ThresholdFit,
    threshold_bootstrap,
    threshold_fit,
    threshold_table,
)

__all__ = [
    "EstimationResult",
    "HausmanResult",
    "LR_CRITICAL_95",
    "ModelSpec",
    "ThresholdBootstrap",
    "ThresholdFit",
    "TslsResult",
    "center",
    "fixed_effects",
    "hausman_test",
    "interaction_name",
    "lag_name",
    "lag_variable",
    "load_region_map",
    "moderation_fit",
    "random_effects",
    "simple_slopes",
    "split_sample",
    "stars_for",
    "threshold_bootstrap",
    "threshold_fit",
    "threshold_table",
    "tsls",
    "two_sided_p",
    "within_design",
]
