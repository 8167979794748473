"""Core model for dose-escalation cohort designs.

A study compares ``n`` increasing dose levels of a drug against placebo
(treatment 0) in ``t`` equally sized cohorts.  Cohort ``k`` may only use
placebo and the doses already reached by the escalation schedule, i.e.
treatments ``0..k`` (all treatments in the final cohort of an extended
layout).  An approximate design is a weight matrix ``xi`` of shape
``(n+1, t)`` whose entry ``xi[i, k]`` is the fraction of all observations
assigned to treatment ``i`` in cohort ``k``; every cohort carries total
weight ``1/t``.

The observation model has a general mean, fixed treatment effects
``tau_0..tau_n`` and fixed cohort effects ``theta_1..theta_t``.  All
variances reported by this package are normalized per observation: they
are ``N * var / sigma^2`` for a study of size ``N`` with error variance
``sigma^2``.

Treatment indices are 0-based everywhere (0 is placebo).  Cohorts are
0-based in code and 1-based in file formats and error messages, matching
the usual tabular presentation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import fsum

import numpy as np

from .errors import ConstraintViolation, InvalidParameter

STANDARD = "standard"
EXTENDED = "extended"

#: absolute tolerance for the design constraint checks
WEIGHT_TOL = 1e-9
#: relative eigenvalue threshold below which a matrix counts as singular
RANK_TOL = 1e-10
#: relative eigenvalue cutoff of the symmetric pseudoinverse
PINV_RCOND = 1e-12
#: absolute residual tolerance for estimability checks
ESTIMABILITY_TOL = 1e-8


@dataclass(frozen=True)
class ModelSpec:
    """Problem size: ``n`` dose levels plus placebo and the cohort layout.

    ``kind`` is ``"standard"`` (one cohort per dose, ``t = n``) or
    ``"extended"`` (one extra unrestricted cohort, ``t = n + 1``).
    """

    n: int
    kind: str = STANDARD

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or isinstance(self.n, bool) or self.n < 2:
            raise InvalidParameter(f"need an integer number of doses n >= 2, got {self.n!r}")
        if self.kind not in (STANDARD, EXTENDED):
            raise InvalidParameter(f"kind must be {STANDARD!r} or {EXTENDED!r}, got {self.kind!r}")

    @property
    def t(self) -> int:
        """Number of cohorts."""
        return self.n if self.kind == STANDARD else self.n + 1

    @property
    def dim(self) -> int:
        """Length of the full parameter vector (tau_0..tau_n, mu, theta_1..theta_t)."""
        return self.n + self.t + 2

    def allowed_treatments(self, k: int) -> range:
        """Treatments available in 0-based cohort ``k`` under escalation."""
        if not 0 <= k < self.t:
            raise InvalidParameter(f"cohort index {k} outside 0..{self.t - 1}")
        return range(0, min(k + 1, self.n) + 1)


def _coerce_weight(value):
    """Normalize one weight entry to Fraction (exact) or float."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InvalidParameter(f"weight entries must be numbers, got {value!r}")
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, (float, np.floating)):
        return float(value)
    raise InvalidParameter(f"weight entries must be numbers, got {value!r}")


@dataclass(frozen=True)
class Design:
    """Validated approximate design: a weight matrix plus its model spec.

    Weights are kept as given: :class:`~fractions.Fraction` entries from the
    closed-form constructors stay exact, float entries from optimizers stay
    float.  ``matrix`` is the read-only float view used by the numerical
    routines.
    """

    spec: ModelSpec
    weights: tuple[tuple[Fraction | float, ...], ...]

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def t(self) -> int:
        return self.spec.t

    @property
    def kind(self) -> str:
        return self.spec.kind

    @cached_property
    def matrix(self) -> np.ndarray:
        m = np.array([[float(w) for w in row] for row in self.weights])
        m.flags.writeable = False
        return m

    @property
    def exact(self) -> bool:
        """True when every stored weight is an exact rational."""
        return all(isinstance(w, Fraction) for row in self.weights for w in row)


def make_design(spec: ModelSpec, weights) -> Design:
    """Validate a weight matrix and wrap it as a :class:`Design`.

    ``weights`` may be any (n+1) x t nested sequence or array.  Integer and
    Fraction entries are kept exact; float entries are kept as floats.

    Raises
    ------
    ConstraintViolation
        If the shape is wrong, an entry is negative, a cell banned by the
        escalation schedule is nonzero, or a cohort's total weight deviates
        from ``1/t``.  All checks use absolute tolerance ``1e-9``.
    """
    rows = [tuple(_coerce_weight(w) for w in row) for row in weights]
    n, t = spec.n, spec.t
    if len(rows) != n + 1 or any(len(row) != t for row in rows):
        shape = (len(rows), len(rows[0]) if rows else 0)
        raise ConstraintViolation("shape", shape, 0.0)
    for i, row in enumerate(rows):
        for k, w in enumerate(row):
            value = float(w)
            if value < -WEIGHT_TOL:
                raise ConstraintViolation("nonnegativity", (i, k + 1), value)
            if i > min(k + 1, n) and abs(value) > WEIGHT_TOL:
                raise ConstraintViolation("escalation", (i, k + 1), value)
    for k in range(t):
        column = fsum(float(row[k]) for row in rows)
        if abs(column - 1.0 / t) > WEIGHT_TOL:
            raise ConstraintViolation("cohort-size", (k + 1,), column - 1.0 / t)
    return Design(spec, tuple(rows))


@dataclass(frozen=True)
class ReplicationProfile:
    """Treatment replications ``r`` and cohort sizes ``s`` of a design."""

    r: tuple
    s: tuple

    @property
    def r_vector(self) -> np.ndarray:
        return np.array([float(v) for v in self.r])

    @property
    def s_vector(self) -> np.ndarray:
        return np.array([float(v) for v in self.s])


def replication_profile(design: Design) -> ReplicationProfile:
    """Row sums (per-treatment replication) and column sums (cohort sizes)."""
    if design.exact:
        r = tuple(sum(row, Fraction(0)) for row in design.weights)
        s = tuple(sum(col, Fraction(0)) for col in zip(*design.weights))
    else:
        m = design.matrix
        r = tuple(fsum(row) for row in m)
        s = tuple(fsum(col) for col in m.T)
    return ReplicationProfile(r, s)


@dataclass(frozen=True)
class ContrastSystem:
    """Dose-placebo contrast coefficients for a given layout.

    ``q`` has shape (n+1, n): column ``i`` encodes ``tau_{i+1} - tau_0``.
    ``a`` pads ``q`` with zero rows for the mean and cohort effects so that
    ``a.T @ beta`` gives all dose-placebo contrasts at once.
    """

    n: int
    t: int
    q: np.ndarray
    a: np.ndarray


def contrast_system(spec: ModelSpec) -> ContrastSystem:
    n, t = spec.n, spec.t
    q = np.vstack([-np.ones((1, n)), np.eye(n)])
    a = np.vstack([q, np.zeros((t + 1, n))])
    q.flags.writeable = False
    a.flags.writeable = False
    return ContrastSystem(n, t, q, a)


def moment_matrix_from_weights(weights: np.ndarray, t: int) -> np.ndarray:
    """Moment matrix of an arbitrary (possibly sub-unit-mass) weight matrix.

    Parameter order is ``(tau_0..tau_n, mu, theta_1..theta_t)``.  Each unit
    of weight at cell ``(i, k)`` contributes the rank-one moment of the
    regressor that carries treatment ``i``, the mean, and cohort ``k``.
    """
    w = np.asarray(weights, dtype=float)
    ntreat = w.shape[0]
    r = w.sum(axis=1)
    s = w.sum(axis=0)
    mass = s.sum()
    dim = ntreat + 1 + t
    m = np.zeros((dim, dim))
    m[:ntreat, :ntreat] = np.diag(r)
    m[:ntreat, ntreat] = r
    m[ntreat, :ntreat] = r
    m[:ntreat, ntreat + 1:] = w
    m[ntreat + 1:, :ntreat] = w.T
    m[ntreat, ntreat] = mass
    m[ntreat, ntreat + 1:] = s
    m[ntreat + 1:, ntreat] = s
    m[ntreat + 1:, ntreat + 1:] += np.diag(s)
    return m


def moment_matrix(design: Design) -> np.ndarray:
    """Moment matrix of the design, order ``n + t + 2``.

    Blocks: ``M11 = diag(r)``, ``M12 = [r | xi]``,
    ``M22 = [[1, s.T], [s, diag(s)]]``.
    """
    return moment_matrix_from_weights(design.matrix, design.t)


def _exact_tau_matrix(design: Design) -> tuple[tuple[Fraction, ...], ...]:
    # diag(r) - t * xi_ xi_.T in exact rational arithmetic
    w = design.weights
    n, t = design.n, design.t
    r = [sum(row, Fraction(0)) for row in w]
    rows = []
    for i in range(n + 1):
        row = []
        for j in range(n + 1):
            cross = sum((w[i][k] * w[j][k] for k in range(t)), Fraction(0))
            value = -t * cross
            if i == j:
                value += r[i]
            row.append(value)
        rows.append(tuple(row))
    return tuple(rows)


@dataclass(frozen=True)
class TauInformation:
    """Information matrix for the full treatment-effect vector.

    This is the moment matrix with the mean and cohort effects eliminated:
    ``diag(r) - t * xi @ xi.T``, of order ``n + 1``.  It is symmetric PSD
    with zero row sums.  ``alpha``, ``b`` and ``c`` expose the partition
    that splits off the placebo row.
    """

    matrix: np.ndarray
    exact_entries: tuple | None = None

    @property
    def alpha(self) -> float:
        return float(self.matrix[0, 0])

    @property
    def b(self) -> np.ndarray:
        return self.matrix[1:, 0]

    @property
    def c(self) -> np.ndarray:
        return self.matrix[1:, 1:]


def tau_information(design: Design) -> TauInformation:
    """Treatment information after eliminating the mean and cohort effects."""
    w = design.matrix
    t = design.t
    r = w.sum(axis=1)
    m = np.diag(r) - t * (w @ w.T)
    m = 0.5 * (m + m.T)
    m.flags.writeable = False
    exact = _exact_tau_matrix(design) if design.exact else None
    return TauInformation(m, exact)


@dataclass(frozen=True)
class ContrastInformation:
    """Information matrix of the dose-placebo contrasts, order ``n``.

    Equals ``diag(r_1..r_n) - t * z @ z.T`` where ``z`` is the dose part of
    the weight matrix; identical to the lower-right block of the treatment
    information.  Its smallest eigenvalue is the E-criterion value.
    """

    matrix: np.ndarray
    exact_entries: tuple | None = None


def contrast_information(design: Design) -> ContrastInformation:
    """Information matrix for the ``n`` dose-placebo contrasts."""
    tau = tau_information(design)
    matrix = tau.matrix[1:, 1:]
    exact = None
    if tau.exact_entries is not None:
        exact = tuple(row[1:] for row in tau.exact_entries[1:])
    return ContrastInformation(matrix, exact)


def is_feasible(design: Design) -> bool:
    """True when every dose-placebo contrast is estimable.

    Checked as nonsingularity of the contrast information matrix relative
    to its own scale.
    """
    c = contrast_information(design).matrix
    scale = float(np.trace(c))
    if scale <= 0.0:
        return False
    return float(np.linalg.eigvalsh(c)[0]) > RANK_TOL * scale


def pinv_sym(matrix: np.ndarray, rcond: float = PINV_RCOND) -> np.ndarray:
    """Moore-Penrose pseudoinverse of a symmetric PSD matrix.

    Uses a symmetric eigendecomposition with relative eigenvalue cutoff
    ``rcond * max(eigenvalue)``; eigenvalues at or below the cutoff are
    treated as exact zeros.
    """
    m = np.asarray(matrix, dtype=float)
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    cutoff = rcond * max(float(np.abs(w).max()), np.finfo(float).tiny)
    inv = np.where(w > cutoff, 1.0, 0.0) / np.where(w > cutoff, w, 1.0)
    out = (v * inv) @ v.T
    return 0.5 * (out + out.T)
