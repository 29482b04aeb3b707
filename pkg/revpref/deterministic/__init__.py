"""
Deterministic Sub-package
=========================

Single-consumer revealed preference.

    - relations : Direct/closed relations, GARP, GAPP, robustness margin
    - afriat    : Afriat numbers, augmented utility, price-preference queries
"""

from revpref.deterministic.afriat import (
    AugmentedUtility,
    PricePreference,
    build_augmented_utility,
    price_preference_query,
    solve_afriat,
    verify_rationalization,
)
from revpref.deterministic.relations import (
    AxiomCheck,
    CycleWitness,
    RelationPair,
    check_gapp,
    check_gapp_nonlinear,
    check_garp,
    normalize_expenditure,
    robustness_margin,
)

__all__ = [
    "AugmentedUtility",
    "PricePreference",
    "build_augmented_utility",
    "price_preference_query",
    "solve_afriat",
    "verify_rationalization",
    "AxiomCheck",
    "CycleWitness",
    "RelationPair",
    "check_gapp",
    "check_gapp_nonlinear",
    "check_garp",
    "normalize_expenditure",
    "robustness_margin",
]
