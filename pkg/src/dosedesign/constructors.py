"""Closed-form benchmark designs and E-optimal class membership tests.

All constructors return designs with exact rational weights, so downstream
information matrices computed on the exact path are exact as well.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .core import EXTENDED, STANDARD, WEIGHT_TOL, Design, ModelSpec, make_design, replication_profile
from .errors import WrongKind

__all__ = [
    "senn_design",
    "uniformly_extended_senn",
    "highest_dose_extended_senn",
    "is_e_optimal_standard",
    "is_e_optimal_extended",
]


def _zeros(n: int, t: int) -> list[list[Fraction]]:
    return [[Fraction(0)] * t for _ in range(n + 1)]


def senn_design(n: int) -> Design:
    """Senn design: cohort k splits equally between placebo and dose k.

    Every cell used carries weight ``1/(2n)``.  This is the unique E-optimal
    standard design; its contrast information is ``I_n / (4n)``.
    """
    spec = ModelSpec(n, STANDARD)
    w = _zeros(n, n)
    half = Fraction(1, 2 * n)
    for k in range(n):
        w[0][k] = half
        w[k + 1][k] = half
    return make_design(spec, w)


def uniformly_extended_senn(n: int) -> Design:
    """Extended Senn design whose last cohort spreads equally over all doses.

    Cohorts 1..n split between placebo and the newly reached dose with
    weight ``1/(2t)`` each; the extra cohort gives ``1/(2t)`` to placebo and
    ``1/(2nt)`` to every dose.  E-optimal among extended designs.
    """
    spec = ModelSpec(n, EXTENDED)
    t = spec.t
    w = _zeros(n, t)
    half = Fraction(1, 2 * t)
    sliver = Fraction(1, 2 * n * t)
    for k in range(t):
        w[0][k] = half
    for i in range(1, n + 1):
        w[i][i - 1] = half
        w[i][t - 1] = sliver
    return make_design(spec, w)


def highest_dose_extended_senn(n: int) -> Design:
    """Extended Senn design whose extra cohort repeats the highest dose.

    Every used cell carries weight ``1/(2(n+1))``.  Not E-optimal, but it
    minimizes the variance of the latest-dose contrast at every interim
    stage among extended designs.
    """
    spec = ModelSpec(n, EXTENDED)
    t = spec.t
    w = _zeros(n, t)
    half = Fraction(1, 2 * t)
    for k in range(t):
        w[0][k] = half
    for i in range(1, n + 1):
        w[i][i - 1] = half
    w[n][t - 1] = half
    return make_design(spec, w)


def is_e_optimal_standard(design: Design) -> bool:
    """Whether a standard design is E-optimal, i.e. equals the Senn design.

    Comparison is entrywise with absolute tolerance ``1e-9``.

    Raises
    ------
    WrongKind
        If the design is extended.
    """
    if design.kind != STANDARD:
        raise WrongKind("E-optimality of extended designs is a class property; "
                        "use is_e_optimal_extended")
    reference = senn_design(design.n)
    return bool(np.max(np.abs(design.matrix - reference.matrix)) <= WEIGHT_TOL)


def is_e_optimal_extended(design: Design) -> bool:
    """Whether an extended design lies in the E-optimal class.

    The class is cut out by linear equalities: every cohort gives placebo
    weight ``1/(2t)`` and every dose has total replication ``1/(2n)``.
    Checked with absolute tolerance ``1e-9``.

    Raises
    ------
    WrongKind
        If the design is standard.
    """
    if design.kind != EXTENDED:
        raise WrongKind("standard designs have a unique E-optimal design; "
                        "use is_e_optimal_standard")
    n, t = design.n, design.t
    m = design.matrix
    if np.max(np.abs(m[0] - 1.0 / (2 * t))) > WEIGHT_TOL:
        return False
    r = replication_profile(design).r_vector
    return bool(np.max(np.abs(r[1:] - 1.0 / (2 * n))) <= WEIGHT_TOL)
