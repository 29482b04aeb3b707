"""
Optimization Sub-package
========================

    - lp  : Dense two-phase simplex with Bland's rule
    - cls : Active-set constrained least squares
"""

from revpref.optimize.cls import CLSResult, ConstrainedLeastSquares, cls_solve
from revpref.optimize.lp import LinearProgram, LPResult, LPStatus, lp_solve

__all__ = [
    "CLSResult",
    "ConstrainedLeastSquares",
    "cls_solve",
    "LinearProgram",
    "LPResult",
    "LPStatus",
    "lp_solve",
]
