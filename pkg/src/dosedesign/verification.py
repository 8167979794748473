"""Independent optimality certificates and a brute-force grid oracle.

A candidate design is certified by checking an equivalence-theorem
inequality against every competing design.  Both sides of the inequality
are linear in the competitor's weights, so it suffices to check the
vertices of the constraint polytope: designs that put the whole cohort
weight ``1/t`` on a single allowed treatment per cohort.  The certificates
are valid for any generalized inverse of the candidate's moment matrix and
any unit-trace PSD weighting of the minimal eigenspace, which keeps them
independent of how the candidate was found.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod

import numpy as np

from .core import (
    Design,
    ModelSpec,
    contrast_information,
    contrast_system,
    is_feasible,
    make_design,
    moment_matrix,
    pinv_sym,
    tau_information,
)
from .criteria import c_variance
from .errors import (
    InfeasibleDesign,
    InvalidParameter,
    InvalidWeightMatrix,
    NotAGInverse,
    TooLarge,
)
from fractions import Fraction

__all__ = [
    "GeneralizedInverse",
    "generalized_inverse",
    "block_generalized_inverse",
    "VertexSet",
    "enumerate_vertices",
    "CertificationResult",
    "certify_e_optimality",
    "certify_c_optimality",
    "brute_force_best_e",
]

#: defining-property residual tolerance for generalized inverses
GINV_TOL = 1e-8
#: default certification gap tolerance
CERT_TOL = 1e-8
#: hard cap on the number of vertices enumerated
MAX_VERTICES = 10**7


@dataclass(frozen=True)
class GeneralizedInverse:
    """A validated generalized inverse of a design's moment matrix."""

    matrix: np.ndarray
    construction: str  # "block" or "moore-penrose"


def _ginv_residual(a: np.ndarray, g: np.ndarray) -> float:
    return float(np.max(np.abs(a @ g @ a - a)))


def block_generalized_inverse(design: Design, m_tau_ginv, m22_ginv) -> GeneralizedInverse:
    """Assemble a generalized inverse of the moment matrix from two blocks.

    ``m_tau_ginv`` must be a generalized inverse of the treatment
    information matrix (order ``n + 1``) and ``m22_ginv`` one of the
    mean/cohort block ``[[1, s.T], [s, diag(s)]]`` (order ``t + 1``).  The
    assembled matrix is::

        [[ G_tau,                  -G_tau @ M12 @ G22                      ],
         [-G22 @ M12.T @ G_tau,     G22 + G22 @ M12.T @ G_tau @ M12 @ G22 ]]

    Every supplied block and the assembled result are checked against the
    defining property ``A @ G @ A == A`` at absolute tolerance ``1e-8``.

    Raises
    ------
    NotAGInverse
        Naming the offending block (``"m_tau"``, ``"m22"`` or
        ``"assembled"``).
    """
    n, t = design.n, design.t
    g_tau = np.asarray(m_tau_ginv, dtype=float)
    g22 = np.asarray(m22_ginv, dtype=float)
    if g_tau.shape != (n + 1, n + 1):
        raise InvalidParameter(f"m_tau_ginv must have order {n + 1}")
    if g22.shape != (t + 1, t + 1):
        raise InvalidParameter(f"m22_ginv must have order {t + 1}")
    m = moment_matrix(design)
    m_tau = tau_information(design).matrix
    m12 = m[:n + 1, n + 1:]
    m22 = m[n + 1:, n + 1:]
    residual = _ginv_residual(m_tau, g_tau)
    if residual > GINV_TOL:
        raise NotAGInverse("m_tau", residual)
    residual = _ginv_residual(m22, g22)
    if residual > GINV_TOL:
        raise NotAGInverse("m22", residual)
    cross = g_tau @ m12 @ g22
    g = np.block([[g_tau, -cross],
                  [-cross.T, g22 + g22 @ m12.T @ g_tau @ m12 @ g22]])
    residual = _ginv_residual(m, g)
    if residual > GINV_TOL:
        raise NotAGInverse("assembled", residual)
    g.flags.writeable = False
    return GeneralizedInverse(g, "block")


def generalized_inverse(design: Design, method: str = "block") -> GeneralizedInverse:
    """Default generalized inverse of the moment matrix.

    ``method="block"`` uses the canonical sparse blocks: zeros on the
    placebo row/column with the inverse contrast information inside for the
    treatment block, and ``t * I`` on the cohort diagonal for the
    mean/cohort block.  Requires a feasible design.  ``method="pseudo"``
    returns the Moore-Penrose pseudoinverse of the full moment matrix.
    """
    if method == "pseudo":
        g = pinv_sym(moment_matrix(design))
        g.flags.writeable = False
        return GeneralizedInverse(g, "moore-penrose")
    if method != "block":
        raise InvalidParameter(f"unknown method {method!r}")
    if not is_feasible(design):
        raise InfeasibleDesign("canonical block inverse needs a feasible design")
    n, t = design.n, design.t
    g_tau = np.zeros((n + 1, n + 1))
    g_tau[1:, 1:] = np.linalg.inv(contrast_information(design).matrix)
    g22 = np.zeros((t + 1, t + 1))
    g22[1:, 1:] = t * np.eye(t)
    return block_generalized_inverse(design, g_tau, g22)


@dataclass(frozen=True)
class VertexSet:
    """All vertices of the design constraint polytope.

    A vertex assigns each cohort's whole weight ``1/t`` to a single allowed
    treatment.  ``assignments[v, k]`` is the treatment chosen by vertex
    ``v`` in cohort ``k``; rows are in lexicographic order.
    """

    spec: ModelSpec
    assignments: np.ndarray

    def __len__(self) -> int:
        return self.assignments.shape[0]

    def design(self, index: int) -> Design:
        t = self.spec.t
        w = [[Fraction(0)] * t for _ in range(self.spec.n + 1)]
        for k, i in enumerate(self.assignments[index]):
            w[int(i)][k] = Fraction(1, t)
        return make_design(self.spec, w)

    def designs(self):
        for index in range(len(self)):
            yield self.design(index)


def enumerate_vertices(spec: ModelSpec) -> VertexSet:
    """Enumerate every vertex of the constraint polytope.

    There are ``prod_{k=1..n} (k+1)`` vertices for standard layouts, times
    ``n + 1`` for the unrestricted extra cohort of extended layouts.

    Raises
    ------
    TooLarge
        If ``n > 8`` (the count grows factorially).
    """
    if spec.n > 8:
        raise TooLarge(f"vertex enumeration supports n <= 8, got n={spec.n}")
    sizes = [len(spec.allowed_treatments(k)) for k in range(spec.t)]
    count = prod(sizes)
    if count > MAX_VERTICES:
        raise TooLarge(f"{count} vertices exceed the {MAX_VERTICES} cap")
    grids = np.meshgrid(*[np.arange(s, dtype=np.int8) for s in sizes], indexing="ij")
    assignments = np.stack([g.ravel() for g in grids], axis=1)
    assignments.flags.writeable = False
    return VertexSet(spec, assignments)


def _cell_quadratic(matrix: np.ndarray, n: int, t: int) -> np.ndarray:
    # values f(i,k).T @ matrix @ f(i,k) for the one-observation regressor
    # carrying treatment i, the mean, and cohort k
    p = n + 1
    out = np.empty((n + 1, t))
    for i in range(n + 1):
        for k in range(t):
            q = p + 1 + k
            out[i, k] = (matrix[i, i] + matrix[p, p] + matrix[q, q]
                         + 2.0 * (matrix[i, p] + matrix[i, q] + matrix[p, q]))
    return out


def _vertex_values(cell_values: np.ndarray, vertices: VertexSet) -> np.ndarray:
    # linear functional of the competitor design, evaluated at all vertices
    assignments = vertices.assignments
    t = vertices.spec.t
    total = np.zeros(assignments.shape[0])
    for k in range(t):
        total += cell_values[assignments[:, k], k]
    return total / t


@dataclass(frozen=True)
class CertificationResult:
    """Outcome of an equivalence-theorem check over all polytope vertices.

    ``worst_gap`` is the largest left-hand side over vertices minus the
    right-hand side; at most the tolerance for a certified design.
    ``min_gap`` is the smallest such difference; when both gaps vanish the
    inequality is tight at every vertex.  ``witness_index`` points at the
    first vertex attaining the worst gap (lexicographic order),
    materialized in ``witness``.
    """

    claim: str
    certified: bool
    worst_gap: float
    min_gap: float
    witness_index: int
    witness: Design

    @property
    def status(self) -> str:
        return "certified" if self.certified else "violated"


def _default_e_weight(c_matrix: np.ndarray) -> np.ndarray:
    n = c_matrix.shape[0]
    w, v = np.linalg.eigh(c_matrix)
    ones = np.ones(n) / np.sqrt(n)
    # the minimal eigenspace of every E-optimal design here contains the
    # all-ones direction; fall back to the computed eigenvector otherwise
    if float(np.linalg.norm(c_matrix @ ones - w[0] * ones)) <= 1e-8:
        h = ones
    else:
        h = v[:, 0]
    return np.outer(h, h)


def _check_e_weight(e_weight: np.ndarray, n: int) -> np.ndarray:
    e = np.asarray(e_weight, dtype=float)
    if e.shape != (n, n):
        raise InvalidWeightMatrix(f"E-weight must have order {n}")
    if float(np.max(np.abs(e - e.T))) > 1e-10:
        raise InvalidWeightMatrix("E-weight must be symmetric")
    if abs(float(np.trace(e)) - 1.0) > 1e-10:
        raise InvalidWeightMatrix("E-weight must have unit trace")
    if float(np.linalg.eigvalsh(0.5 * (e + e.T))[0]) < -1e-10:
        raise InvalidWeightMatrix("E-weight must be positive semidefinite")
    return 0.5 * (e + e.T)


def certify_e_optimality(design: Design,
                         ginv: GeneralizedInverse | None = None,
                         e_weight=None,
                         tol: float = CERT_TOL,
                         label: str = "design") -> CertificationResult:
    """Certify that no competing design has a larger smallest eigenvalue.

    Checks, at every vertex ``v`` of the constraint polytope::

        trace(M(v) @ G @ A @ N @ E @ N @ A.T @ G.T) <= lambda_min(N)

    where ``N`` is the candidate's contrast information, ``G`` a
    generalized inverse of its moment matrix (canonical block inverse by
    default) and ``E`` a unit-trace PSD weighting of the minimal eigenspace
    (defaults to ``ones/n`` when the all-ones direction is minimal, else
    the rank-one projector onto the computed eigenvector).

    Raises
    ------
    InfeasibleDesign
        If the candidate itself is infeasible.
    InvalidWeightMatrix
        If the supplied ``e_weight`` is not symmetric PSD with unit trace.
    """
    if not is_feasible(design):
        raise InfeasibleDesign("cannot certify an infeasible design")
    n, t = design.n, design.t
    n_a = contrast_information(design).matrix
    lam_min = float(np.linalg.eigvalsh(n_a)[0])
    if e_weight is None:
        e = _default_e_weight(n_a)
    else:
        e = _check_e_weight(e_weight, n)
    g = ginv if ginv is not None else generalized_inverse(design)
    ga = g.matrix @ contrast_system(design.spec).a
    kernel = ga @ n_a @ e @ n_a @ ga.T
    vertices = enumerate_vertices(design.spec)
    values = _vertex_values(_cell_quadratic(kernel, n, t), vertices)
    worst = int(np.argmax(values))
    gap = float(values[worst]) - lam_min
    return CertificationResult(
        claim=f"{label}: E-optimal over {design.kind} designs, n={n}",
        certified=gap <= tol,
        worst_gap=gap,
        min_gap=float(values.min()) - lam_min,
        witness_index=worst,
        witness=vertices.design(worst),
    )


def certify_c_optimality(design: Design,
                         c,
                         ginv: GeneralizedInverse | None = None,
                         tol: float = CERT_TOL,
                         label: str = "design") -> CertificationResult:
    """Certify that no competing design estimates ``c.T @ beta`` better.

    Checks, at every vertex ``v`` of the constraint polytope::

        c.T @ G.T @ M(v) @ G @ c <= c.T @ M(design)^- @ c

    with ``G`` a generalized inverse of the candidate's moment matrix
    (canonical block inverse by default).

    Raises
    ------
    InestimableFunctional
        If ``c`` is not estimable under the candidate.
    """
    if not is_feasible(design):
        raise InfeasibleDesign("cannot certify an infeasible design")
    n, t = design.n, design.t
    c = np.asarray(c, dtype=float)
    rhs = c_variance(design, c)
    g = ginv if ginv is not None else generalized_inverse(design)
    u = g.matrix @ c
    p = n + 1
    cell = np.empty((n + 1, t))
    for i in range(n + 1):
        for k in range(t):
            cell[i, k] = (u[i] + u[p] + u[p + 1 + k]) ** 2
    vertices = enumerate_vertices(design.spec)
    values = _vertex_values(cell, vertices)
    worst = int(np.argmax(values))
    gap = float(values[worst]) - rhs
    return CertificationResult(
        claim=f"{label}: c-optimal over {design.kind} designs, n={n}",
        certified=gap <= tol,
        worst_gap=gap,
        min_gap=float(values.min()) - rhs,
        witness_index=worst,
        witness=vertices.design(worst),
    )


def _compositions(total: int, parts: int):
    # integer vectors of the given length summing to total, lexicographic
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _min_eig_batch(weights: np.ndarray, t: int) -> np.ndarray:
    z = weights[:, 1:, :]
    r = z.sum(axis=2)
    n_a = -t * np.einsum("bik,bjk->bij", z, z)
    idx = np.arange(z.shape[1])
    n_a[:, idx, idx] += r
    return np.linalg.eigvalsh(n_a)[:, 0]


def brute_force_best_e(spec: ModelSpec,
                       grid_resolution: int,
                       refine_iters: int = 6,
                       objective=None) -> tuple[Design, float]:
    """Grid search (plus local refinement) for the best design, small n only.

    Each cohort's weight ``1/t`` is split over its allowed treatments in
    integer multiples of ``1/(grid_resolution * t)``; all combinations are
    scanned.  The best grid point is then refined by deterministic
    coordinate moves of shrinking step size that shift mass between two
    treatments inside one cohort.

    ``objective`` maps a :class:`Design` to a value to maximize; the
    default is the E-criterion (vectorized).  Returns the best design and
    its objective value.

    Raises
    ------
    TooLarge
        If ``n > 3`` or the grid has more than 3e7 points.
    """
    if spec.n > 3:
        raise TooLarge(f"brute force supports n <= 3, got n={spec.n}")
    if grid_resolution < 1:
        raise InvalidParameter("grid_resolution must be >= 1")
    n, t = spec.n, spec.t
    sizes = [len(spec.allowed_treatments(k)) for k in range(t)]
    comps = [np.array(list(_compositions(grid_resolution, s)), dtype=float)
             / (grid_resolution * t) for s in sizes]
    counts = [c.shape[0] for c in comps]
    total = prod(counts)
    if total > 3 * 10**7:
        raise TooLarge(f"{total} grid points exceed the supported budget")

    def build_weights(flat_indices: np.ndarray) -> np.ndarray:
        w = np.zeros((flat_indices.shape[0], n + 1, t))
        remaining = flat_indices
        for k in range(t - 1, -1, -1):
            choice = remaining % counts[k]
            remaining = remaining // counts[k]
            w[:, :sizes[k], k] = comps[k][choice]
        return w

    best_value = -np.inf
    best_index = -1
    if objective is None:
        chunk = 200_000
        for start in range(0, total, chunk):
            idx = np.arange(start, min(start + chunk, total))
            values = _min_eig_batch(build_weights(idx), t)
            local = int(np.argmax(values))
            if values[local] > best_value:
                best_value = float(values[local])
                best_index = start + local
        score = lambda w: float(_min_eig_batch(w[None, :, :], t)[0])
    else:
        score = lambda w: float(objective(make_design(spec, w)))
        for index in range(total):
            value = score(build_weights(np.array([index]))[0])
            if value > best_value:
                best_value = value
                best_index = index

    best = build_weights(np.array([best_index]))[0]

    # local refinement: move mass between two treatments within a cohort
    step0 = 1.0 / (grid_resolution * t)
    for sweep in range(refine_iters):
        step = step0 / 2.0**sweep
        improved = True
        guard = 0
        while improved and guard < 50:
            improved = False
            guard += 1
            for k in range(t):
                allowed = list(spec.allowed_treatments(k))
                for i_from in allowed:
                    amount = min(step, best[i_from, k])
                    if amount <= 0.0:
                        continue
                    for i_to in allowed:
                        if i_to == i_from:
                            continue
                        candidate = best.copy()
                        candidate[i_from, k] -= amount
                        candidate[i_to, k] += amount
                        value = score(candidate)
                        if value > best_value + 1e-15:
                            best, best_value = candidate, value
                            improved = True
    return make_design(spec, best), best_value
