"""Networked restless-bandit student simulator and teacher policies."""

from ednetrmab._core import (
    RNG_FAMILY,
    StudentModel,
    __version__,
    epsilon,
    expand_action,
    generate_synthetic,
    greedy_select_k,
    intervention_benefit,
    load_model,
    run_experiment,
    step,
    threshold_whittle_index,
    validate,
    whittle_estimate,
)

__all__ = [
    "RNG_FAMILY",
    "StudentModel",
    "__version__",
    "epsilon",
    "expand_action",
    "generate_synthetic",
    "greedy_select_k",
    "intervention_benefit",
    "load_model",
    "run_experiment",
    "step",
    "threshold_whittle_index",
    "validate",
    "whittle_estimate",
]
