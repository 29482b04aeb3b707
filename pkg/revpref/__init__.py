"""
revpref
=======

Revealed price preference toolkit: deterministic GARP/GAPP tests with
Afriat-style rationalizations, and a stochastic test of random augmented
utility models with welfare bounds and confidence intervals.

Architecture:
    - ingestion/dataset.py      : Validated dataset types
    - ingestion/loader.py       : Wide / long file formats (CSV, Excel)
    - ingestion/registry.py     : JSON cache of patch layouts and type matrices
    - deterministic/relations.py: Revealed relations, GARP, GAPP, robustness margin
    - deterministic/afriat.py   : Afriat numbers, augmented utility, price queries
    - stochastic/patches.py     : Patches of the normalized budget planes
    - stochastic/types_matrix.py: Rational types (columns of A)
    - stochastic/choice.py      : Choice probabilities, J_N, bootstrap p-value
    - stochastic/counterfactual.py : Welfare bounds and test-inversion intervals
    - stochastic/simulate.py    : Synthetic mixture and quasilinear populations
    - optimize/lp.py, cls.py    : Dense simplex LP and active-set least squares
    - reporting/run_log.py      : JSON run reports with provenance
    - config.py                 : Paths, numerical defaults, logging
    - main.py                   : CLI entry point
"""

__version__ = "0.1.0"
