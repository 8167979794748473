"""Concave criterion maximization over design polytopes via Frank-Wolfe.

The feasible designs of a layout form a polytope: nonnegative weights,
escalation zeros, and cohort sums ``1/t``.  Additional linear equalities
carve out sub-polytopes such as the E-optimal class.  The linear
subproblems of the conditional-gradient method are solved with the
package's own simplex routine, which keeps runs deterministic.

The step size uses exact line search (bisection on the directional
derivative), and an away-step variant is switched on when the duality gap
stalls, restoring fast convergence onto faces of the polytope.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .constructors import senn_design, uniformly_extended_senn
from .core import EXTENDED, STANDARD, Design, ModelSpec, make_design
from .criteria import e_criterion
from .errors import EmptyPolytope, InfeasibleDesign, InvalidParameter, SingularIterate
from .simplex import solve_lp

__all__ = [
    "DesignPolytope",
    "e_optimal_class",
    "SolverConfig",
    "OptimizeResult",
    "maximize",
    "random_design",
]


@dataclass(frozen=True, eq=False)
class DesignPolytope:
    """Feasible weight vectors over the free cells of a layout.

    ``cells`` lists the (treatment, cohort) pairs allowed by escalation, in
    cohort-major order; a weight vector ``x`` indexes into it.  The rows of
    ``a_eq x == b_eq`` always include the cohort sums and may add further
    equalities (e.g. the E-optimal class).
    """

    spec: ModelSpec
    cells: tuple[tuple[int, int], ...]
    a_eq: np.ndarray
    b_eq: np.ndarray
    label: str = "base"

    @classmethod
    def base(cls, spec: ModelSpec) -> "DesignPolytope":
        """The full constraint polytope of the layout."""
        cells = tuple((i, k) for k in range(spec.t)
                      for i in spec.allowed_treatments(k))
        a_eq = np.zeros((spec.t, len(cells)))
        for j, (_, k) in enumerate(cells):
            a_eq[k, j] = 1.0
        b_eq = np.full(spec.t, 1.0 / spec.t)
        return cls(spec, cells, a_eq, b_eq)

    @cached_property
    def _cell_index(self) -> dict[tuple[int, int], int]:
        return {cell: j for j, cell in enumerate(self.cells)}

    @property
    def ncells(self) -> int:
        return len(self.cells)

    def with_equalities(self, rows, label: str) -> "DesignPolytope":
        """Add equality rows given as ``(coefficients-by-cell, rhs)`` pairs.

        Raises
        ------
        EmptyPolytope
            If the enlarged system has no feasible point.
        """
        extra = np.zeros((len(rows), self.ncells))
        rhs = np.zeros(len(rows))
        for row, (coeffs, value) in enumerate(rows):
            for cell, coeff in coeffs.items():
                cell = (int(cell[0]), int(cell[1]))
                if cell not in self._cell_index:
                    raise InvalidParameter(f"cell {cell} is not free in this layout")
                extra[row, self._cell_index[cell]] = coeff
            rhs[row] = value
        polytope = DesignPolytope(self.spec, self.cells,
                                  np.vstack([self.a_eq, extra]),
                                  np.concatenate([self.b_eq, rhs]), label)
        polytope.feasible_vertex()  # raises EmptyPolytope when inconsistent
        return polytope

    def design_from_vector(self, x) -> Design:
        w = np.zeros((self.spec.n + 1, self.spec.t))
        for j, (i, k) in enumerate(self.cells):
            w[i, k] = float(x[j])
        return make_design(self.spec, w)

    def vector_from_design(self, design: Design) -> np.ndarray:
        m = design.matrix
        return np.array([m[i, k] for (i, k) in self.cells])

    def contains(self, design: Design, tol: float = 1e-9) -> bool:
        if design.spec != self.spec:
            return False
        x = self.vector_from_design(design)
        if float(x.min()) < -tol:
            return False
        if float(np.max(np.abs(self.a_eq @ x - self.b_eq))) > tol:
            return False
        free_mass = float(x.sum())
        return abs(free_mass - float(design.matrix.sum())) <= tol * self.ncells

    def lp_vertex(self, objective) -> np.ndarray:
        """Vertex maximizing a linear objective (deterministic)."""
        return solve_lp(np.asarray(objective, dtype=float),
                        self.a_eq, self.b_eq, maximize=True).x

    def feasible_vertex(self) -> np.ndarray:
        return solve_lp(np.zeros(self.ncells), self.a_eq, self.b_eq).x

    def interior_point(self) -> np.ndarray:
        """A deterministic feasible point with nonsingular information.

        Uses the matching named design when it fits (uniformly extended
        Senn for extended layouts, Senn for standard ones), the
        cohort-uniform design for the base polytope, and an average of
        sampled vertices otherwise.
        """
        spec = self.spec
        named = (uniformly_extended_senn(spec.n) if spec.kind == EXTENDED
                 else senn_design(spec.n))
        if self.contains(named):
            return self.vector_from_design(named)
        uniform = np.zeros(self.ncells)
        share = {k: 1.0 / (spec.t * len(spec.allowed_treatments(k)))
                 for k in range(spec.t)}
        for j, (_, k) in enumerate(self.cells):
            uniform[j] = share[k]
        if float(np.max(np.abs(self.a_eq @ uniform - self.b_eq))) <= 1e-12:
            return uniform
        rng = np.random.default_rng(0)
        vertices = [self.lp_vertex(rng.standard_normal(self.ncells))
                    for _ in range(2 * self.ncells)]
        return np.mean(vertices, axis=0)

    def sample(self, count: int, rng) -> list[Design]:
        """Random members: Dirichlet mixtures of random-objective vertices."""
        rng = np.random.default_rng(rng)
        out = []
        for _ in range(count):
            vertices = np.stack([self.lp_vertex(rng.standard_normal(self.ncells))
                                 for _ in range(8)])
            mix = rng.dirichlet(np.ones(len(vertices)))
            out.append(self.design_from_vector(mix @ vertices))
        return out


def e_optimal_class(spec: ModelSpec) -> DesignPolytope:
    """Polytope of all E-optimal designs of the layout.

    Cut out of the base polytope by fixing every cohort's placebo weight to
    ``1/(2t)`` and every dose's total replication to ``1/(2n)``.  For
    standard layouts these equalities pin down the Senn design alone; for
    extended layouts they describe the full E-optimal class.
    """
    n, t = spec.n, spec.t
    base = DesignPolytope.base(spec)
    rows = [({(0, k): 1.0}, 1.0 / (2 * t)) for k in range(t)]
    for i in range(1, n + 1):
        coeffs = {(i, k): 1.0 for k in range(t) if i in spec.allowed_treatments(k)}
        rows.append((coeffs, 1.0 / (2 * n)))
    return base.with_equalities(rows, label="e-optimal-class")


def random_design(spec: ModelSpec, rng, max_tries: int = 100) -> Design:
    """Random feasible design: independent Dirichlet splits per cohort."""
    from .core import is_feasible

    rng = np.random.default_rng(rng)
    for _ in range(max_tries):
        w = np.zeros((spec.n + 1, spec.t))
        for k in range(spec.t):
            allowed = list(spec.allowed_treatments(k))
            w[allowed, k] = rng.dirichlet(np.ones(len(allowed))) / spec.t
        design = make_design(spec, w)
        if is_feasible(design):
            return design
    raise InfeasibleDesign("could not sample a feasible design")


@dataclass(frozen=True)
class SolverConfig:
    """Frank-Wolfe settings.

    ``step_rule`` is ``"exact"`` (line search, default) or ``"harmonic"``.
    ``multistart_seeds`` adds extra runs from random interior points; the
    best objective wins, ties broken by run order.  The away-step variant
    switches on once the duality gap stalls for ``stall_window`` iterations.
    """

    max_iters: int = 5000
    stopping_gap: float = 1e-7
    step_rule: str = "exact"
    multistart_seeds: tuple[int, ...] = ()
    stall_window: int = 50
    max_restarts: int = 5
    callback: object = None


@dataclass(frozen=True)
class OptimizeResult:
    """Outcome of one maximization.

    ``gap`` is the final Frank-Wolfe duality gap, except for E-objective
    runs where the final iterate is certified exactly and ``gap`` is the
    worst equivalence-theorem gap over all polytope vertices.  ``log``
    holds ``(iteration, objective, gap)`` triples.
    """

    design: Design
    value: float
    gap: float
    converged: bool
    iterations: int
    objective: str
    log: tuple[tuple[int, float, float], ...]


def _information_parts(w: np.ndarray, t: int):
    z = w[1:, :]
    n_a = np.diag(z.sum(axis=1)) - t * (z @ z.T)
    return z, 0.5 * (n_a + n_a.T)


def _objective_a(w: np.ndarray, t: int):
    z, n_a = _information_parts(w, t)
    lam = np.linalg.eigvalsh(n_a)
    if lam[0] <= 1e-12 * max(float(lam[-1]), 1.0):
        return None
    inv = np.linalg.inv(n_a)
    inv2 = inv @ inv
    grad = np.zeros_like(w)
    grad[1:, :] = np.diag(inv2)[:, None] - 2.0 * t * (inv2 @ z)
    return -float(np.trace(inv)), grad


def _objective_d(w: np.ndarray, t: int):
    z, n_a = _information_parts(w, t)
    lam = np.linalg.eigvalsh(n_a)
    if lam[0] <= 1e-12 * max(float(lam[-1]), 1.0):
        return None
    inv = np.linalg.inv(n_a)
    grad = np.zeros_like(w)
    grad[1:, :] = np.diag(inv)[:, None] - 2.0 * t * (inv @ z)
    return float(np.linalg.slogdet(n_a)[1]), grad


def _objective_e_smoothed(w: np.ndarray, t: int, temperature: float):
    z, n_a = _information_parts(w, t)
    lam, vec = np.linalg.eigh(n_a)
    shifted = (lam - lam[0]) / temperature
    weights = np.exp(-shifted)
    total = float(weights.sum())
    value = float(lam[0]) - temperature * float(np.log(total))
    kernel = (vec * (weights / total)) @ vec.T
    grad = np.zeros_like(w)
    grad[1:, :] = np.diag(kernel)[:, None] - 2.0 * t * (kernel @ z)
    return value, grad


def _vector_objective(polytope: DesignPolytope, fn):
    n, t = polytope.spec.n, polytope.spec.t
    rows = np.array([c[0] for c in polytope.cells])
    cols = np.array([c[1] for c in polytope.cells])

    def fg(x):
        w = np.zeros((n + 1, t))
        w[rows, cols] = x
        result = fn(w, t)
        if result is None:
            return None
        value, grad = result
        return value, grad[rows, cols]

    return fg


def _atom_key(v: np.ndarray) -> bytes:
    return np.round(v, 12).tobytes()


def _exact_step(fg, x, d, gmax):
    trial = fg(x + gmax * d)
    if trial is not None and float(trial[1] @ d) >= 0.0:
        return gmax
    lo, hi = 0.0, gmax
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        trial = fg(x + mid * d)
        if trial is None or float(trial[1] @ d) < 0.0:
            hi = mid
        else:
            lo = mid
    return lo


def _frank_wolfe(polytope, fg, x0, config):
    interior = None
    restarts = 0
    x = np.asarray(x0, dtype=float).copy()
    state = fg(x)
    while state is None:
        if interior is None:
            interior = polytope.interior_point()
        restarts += 1
        if restarts > config.max_restarts:
            raise SingularIterate("could not find a nonsingular starting point")
        x = 0.5 * (x + interior)
        state = fg(x)

    atoms = {_atom_key(x): [x.copy(), 1.0]}
    history = deque(maxlen=config.stall_window)
    away_enabled = False
    log = []
    converged = False
    iteration = 0
    for iteration in range(config.max_iters):
        value, grad = state
        vertex = polytope.lp_vertex(grad)
        gap = float(grad @ (vertex - x))
        log.append((iteration, value, gap))
        if config.callback is not None:
            config.callback(x.copy(), value, gap)
        if gap <= config.stopping_gap:
            converged = True
            break
        history.append(gap)
        if not away_enabled and len(history) == config.stall_window:
            # sublinear zigzag: less than a factor-2 gap reduction per window
            stalled = history[-1] >= 0.5 * history[0]
            lingering = all(h < 10.0 * config.stopping_gap for h in history)
            if stalled or lingering:
                away_enabled = True

        direction, gamma_max, away_from = vertex - x, 1.0, None
        if away_enabled and len(atoms) > 1:
            away_key = min(atoms, key=lambda key: float(grad @ atoms[key][0]))
            v_away, alpha = atoms[away_key]
            if alpha < 1.0 - 1e-12:
                away_gap = float(grad @ (x - v_away))
                if away_gap > gap:
                    direction = x - v_away
                    gamma_max = alpha / (1.0 - alpha)
                    away_from = away_key

        if config.step_rule == "harmonic":
            gamma = min(gamma_max, 2.0 / (iteration + 3.0))
        else:
            gamma = _exact_step(fg, x, direction, gamma_max)
        if gamma <= 0.0:
            break

        if away_from is None:
            for entry in atoms.values():
                entry[1] *= 1.0 - gamma
            key = _atom_key(vertex)
            if key in atoms:
                atoms[key][1] += gamma
            else:
                atoms[key] = [vertex.copy(), gamma]
        else:
            for entry in atoms.values():
                entry[1] *= 1.0 + gamma
            atoms[away_from][1] -= gamma
        for key in [k for k, entry in atoms.items() if entry[1] <= 1e-14]:
            del atoms[key]
        x = x + gamma * direction

        if (iteration + 1) % 128 == 0:
            # resync against drift: rebuild the iterate from its atoms
            total = sum(entry[1] for entry in atoms.values())
            for entry in atoms.values():
                entry[1] /= total
            x = np.sum([entry[1] * entry[0] for entry in atoms.values()], axis=0)

        state = fg(x)
        if state is None:
            if interior is None:
                interior = polytope.interior_point()
            restarts += 1
            if restarts > config.max_restarts:
                raise SingularIterate("iterates keep hitting singular designs")
            x = 0.5 * (x + interior)
            atoms = {_atom_key(x): [x.copy(), 1.0]}
            history.clear()
            state = fg(x)
            if state is None:
                raise SingularIterate("restart point is singular")

    value, grad = state
    gap = float(grad @ (polytope.lp_vertex(grad) - x))
    converged = gap <= config.stopping_gap
    return x, value, gap, converged, iteration + 1, log


#: temperature ladder for the smoothed E-objective, relative to 1/(4n).
#: iterations per stage grow like 1/T while the optimum bias shrinks like
#: T; the last rung already brings the design within ~2e-4 of the optimum
E_TEMPERATURES = (1e-1, 1e-2, 1e-3)


def _run_from(polytope, objective, x0, config):
    spec = polytope.spec
    if objective == "A":
        fg = _vector_objective(polytope, _objective_a)
        return _frank_wolfe(polytope, fg, x0, config)
    if objective == "D":
        fg = _vector_objective(polytope, _objective_d)
        return _frank_wolfe(polytope, fg, x0, config)
    if objective == "E":
        scale = 1.0 / (4.0 * spec.n)
        x, log = np.asarray(x0, dtype=float), []
        for temperature in E_TEMPERATURES:
            temp = temperature * scale
            # chasing gaps far below the smoothing bias of the current
            # temperature is wasted effort; tighten along the ladder
            stage_config = SolverConfig(
                max_iters=config.max_iters,
                stopping_gap=max(config.stopping_gap, 1e-2 * temp),
                step_rule=config.step_rule,
                stall_window=config.stall_window,
                max_restarts=config.max_restarts,
                callback=config.callback,
            )
            fg = _vector_objective(
                polytope, lambda w, t, temp=temp: _objective_e_smoothed(w, t, temp))
            x, value, gap, converged, iters, stage_log = _frank_wolfe(
                polytope, fg, x, stage_config)
            offset = len(log)
            log.extend((offset + i, v, g) for i, v, g in stage_log)
        return x, value, gap, converged, len(log), log
    if callable(objective):
        fg = _vector_objective(polytope, lambda w, t: objective(w))
        return _frank_wolfe(polytope, fg, x0, config)
    raise InvalidParameter(f"objective must be 'A', 'D', 'E' or a callable, got {objective!r}")


def maximize(polytope: DesignPolytope, objective, config: SolverConfig | None = None) -> OptimizeResult:
    """Maximize a concave criterion over a design polytope.

    ``objective`` is ``"A"`` (negative total contrast variance), ``"D"``
    (log determinant), ``"E"`` (smallest eigenvalue, via a smoothed
    temperature ladder plus an exact final certificate), or a callable
    ``weights -> (value, gradient)`` on the full weight matrix.

    Deterministic for a fixed config; extra ``multistart_seeds`` runs start
    from random interior points and the best final value wins.

    Raises
    ------
    SingularIterate
        If repeated restarts cannot keep iterates nonsingular.
    """
    config = config or SolverConfig()
    starts = [polytope.interior_point()]
    for seed in config.multistart_seeds:
        rng = np.random.default_rng(seed)
        vertices = np.stack([polytope.lp_vertex(rng.standard_normal(polytope.ncells))
                             for _ in range(8)])
        starts.append(rng.dirichlet(np.ones(len(vertices))) @ vertices)

    best = None
    for x0 in starts:
        x, value, gap, converged, iters, log = _run_from(polytope, objective, x0, config)
        if best is None or value > best[1]:
            best = (x, value, gap, converged, iters, log)

    x, value, gap, converged, iters, log = best
    design = polytope.design_from_vector(x)
    if objective == "E":
        from .verification import certify_e_optimality

        value = e_criterion(design)
        gap = certify_e_optimality(design).worst_gap
    return OptimizeResult(
        design=design,
        value=float(value),
        gap=float(gap),
        converged=bool(converged),
        iterations=iters,
        objective=objective if isinstance(objective, str) else "custom",
        log=tuple(log),
    )
