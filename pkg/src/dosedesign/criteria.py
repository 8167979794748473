"""Design criteria: E, A, D, MV, single-contrast and interim-stage variances.

All variances are per-observation units (``N * var / sigma^2``); smaller is
better, so the E criterion (an information quantity) is maximized while the
others are minimized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ESTIMABILITY_TOL,
    EXTENDED,
    Design,
    contrast_information,
    is_feasible,
    moment_matrix,
    moment_matrix_from_weights,
    pinv_sym,
)
from .errors import InestimableFunctional, InfeasibleDesign, InvalidStage, StageInestimable

__all__ = [
    "CriterionReport",
    "StageDesign",
    "e_criterion",
    "a_criterion",
    "d_criterion",
    "mv_criterion",
    "c_variance",
    "avg_contrast_variance",
    "stage_design",
    "stage_moment_matrix",
    "lv_variances",
    "criterion_report",
]


def _contrast_inverse(design: Design) -> np.ndarray:
    if not is_feasible(design):
        raise InfeasibleDesign("some dose-placebo contrast is not estimable")
    return np.linalg.inv(contrast_information(design).matrix)


def e_criterion(design: Design) -> float:
    """Smallest eigenvalue of the contrast information matrix (maximize)."""
    if not is_feasible(design):
        raise InfeasibleDesign("some dose-placebo contrast is not estimable")
    return float(np.linalg.eigvalsh(contrast_information(design).matrix)[0])


def a_criterion(design: Design) -> float:
    """Total variance of the dose-placebo contrast estimators (minimize)."""
    return float(np.trace(_contrast_inverse(design)))


def d_criterion(design: Design) -> float:
    """Log determinant of the contrast information matrix (maximize)."""
    if not is_feasible(design):
        raise InfeasibleDesign("some dose-placebo contrast is not estimable")
    sign, logdet = np.linalg.slogdet(contrast_information(design).matrix)
    return float(logdet)


def mv_criterion(design: Design) -> float:
    """Largest single dose-placebo contrast variance (minimize)."""
    return float(np.max(np.diag(_contrast_inverse(design))))


def c_variance(design: Design, c) -> float:
    """Variance of the least-squares estimator of ``c.T @ beta``.

    ``c`` has length ``n + t + 2`` in the parameter order
    ``(tau_0..tau_n, mu, theta_1..theta_t)``.

    Raises
    ------
    InestimableFunctional
        If ``c`` is not in the column space of the moment matrix
        (residual check at absolute tolerance ``1e-8``).
    """
    c = np.asarray(c, dtype=float)
    m = moment_matrix(design)
    if c.shape != (m.shape[0],):
        raise InestimableFunctional(
            f"contrast vector must have length {m.shape[0]}, got {c.shape}")
    g = pinv_sym(m)
    gc = g @ c
    if float(np.linalg.norm(c - m @ gc)) > ESTIMABILITY_TOL:
        raise InestimableFunctional("contrast is not estimable under this design")
    return float(c @ gc)


def avg_contrast_variance(design: Design) -> float:
    """Variance of the average dose effect versus placebo (minimize).

    This is the c-variance of ``mean(tau_1..tau_n) - tau_0`` and equals
    ``ones @ inv(contrast information) @ ones / n^2``.
    """
    w = _contrast_inverse(design)
    n = design.n
    return float(np.ones(n) @ w @ np.ones(n)) / (n * n)


@dataclass(frozen=True)
class StageDesign:
    """Interim truncation of a design: cohorts after ``stage`` removed.

    The weight matrix keeps its original scale, so the total mass is
    ``stage / t`` rather than 1; interim variances stay in the same
    per-observation units as the full-design criteria.
    """

    parent: Design
    stage: int
    weights: np.ndarray

    @property
    def mass(self) -> float:
        return float(self.weights.sum())


def stage_design(design: Design, stage: int) -> StageDesign:
    """Design as observed after cohort ``stage`` (1-based) has accrued."""
    if not isinstance(stage, int) or isinstance(stage, bool) or not 1 <= stage <= design.t:
        raise InvalidStage(f"stage must lie in 1..{design.t}, got {stage!r}")
    w = design.matrix.copy()
    w[:, stage:] = 0.0
    w.flags.writeable = False
    return StageDesign(design, stage, w)


def stage_moment_matrix(sd: StageDesign) -> np.ndarray:
    """Moment matrix of the truncated weights (total mass ``stage / t``)."""
    return moment_matrix_from_weights(sd.weights, sd.parent.t)


def _stage_variance(design: Design, stage: int, dose: int) -> float:
    sd = stage_design(design, stage)
    m = stage_moment_matrix(sd)
    c = np.zeros(design.spec.dim)
    c[0] = -1.0
    c[dose] = 1.0
    g = pinv_sym(m)
    gc = g @ c
    if float(np.linalg.norm(c - m @ gc)) > ESTIMABILITY_TOL:
        raise StageInestimable(stage)
    return float(c @ gc)


def lv_variances(design: Design) -> tuple[float, ...]:
    """Interim variance of the latest-dose contrast at every stage.

    Stage ``k <= n`` uses only the first ``k`` cohorts and estimates
    ``tau_k - tau_0``.  For extended designs the extra final stage uses all
    cohorts and estimates ``tau_n - tau_0``.  Returns one value per cohort.

    Raises
    ------
    StageInestimable
        If some stage cannot estimate its own contrast.
    """
    values = [_stage_variance(design, k, k) for k in range(1, design.n + 1)]
    if design.kind == EXTENDED:
        values.append(_stage_variance(design, design.t, design.n))
    return tuple(values)


@dataclass(frozen=True)
class CriterionReport:
    """All criterion values of one design.

    ``lv_values`` is None when some interim stage cannot estimate its
    contrast.
    """

    e_value: float
    a_value: float
    d_value: float
    mv_value: float
    avg_contrast_variance: float
    lv_values: tuple[float, ...] | None


def criterion_report(design: Design) -> CriterionReport:
    """Evaluate every criterion on a feasible design."""
    try:
        lv = lv_variances(design)
    except StageInestimable:
        lv = None
    return CriterionReport(
        e_value=e_criterion(design),
        a_value=a_criterion(design),
        d_value=d_criterion(design),
        mv_value=mv_criterion(design),
        avg_contrast_variance=avg_contrast_variance(design),
        lv_values=lv,
    )
