"""
Stochastic Sub-package
======================

Random augmented utility models on repeated cross-sections.

    - patches        : Patch layout of the normalized budgets
    - types_matrix   : Rational types and per-type indicators
    - choice         : Choice probabilities, J_N and bootstrap p-value
    - counterfactual : Welfare bounds and confidence intervals
    - simulate       : Synthetic populations
    - streams        : Seeded random streams and worker pool
"""

from revpref.stochastic.patches import PatchLayout, enumerate_patches
from revpref.stochastic.types_matrix import TypeMatrix, enumerate_types, type_indicator
from revpref.stochastic.choice import (
    ChoiceProbabilities,
    TestResult,
    bootstrap_pvalue,
    compute_jn,
    estimate_pi,
)
from revpref.stochastic.counterfactual import (
    ConfidenceInterval,
    WelfareBounds,
    confidence_interval,
    welfare_bounds,
)

__all__ = [
    "PatchLayout",
    "enumerate_patches",
    "TypeMatrix",
    "enumerate_types",
    "type_indicator",
    "ChoiceProbabilities",
    "TestResult",
    "bootstrap_pvalue",
    "compute_jn",
    "estimate_pi",
    "ConfidenceInterval",
    "WelfareBounds",
    "confidence_interval",
    "welfare_bounds",
]
