"""Acceptance suite: one test per published claim, each with a runtime budget.

Every test asserts both the numerical claim (at the stated tolerance) and
that it finishes inside its time budget; ``conftest.py`` prints a PASS/FAIL
line per criterion after the run.
"""

import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest

from dosedesign import (
    EXTENDED,
    STANDARD,
    ModelSpec,
    SolverConfig,
    avg_contrast_variance,
    brute_force_best_e,
    c_variance,
    certify_c_optimality,
    certify_e_optimality,
    contrast_information,
    e_criterion,
    e_optimal_class,
    highest_dose_extended_senn,
    lv_variances,
    make_design,
    maximize,
    mv_criterion,
    random_design,
    replication_profile,
    senn_design,
    tau_information,
    uniformly_extended_senn,
)
from dosedesign.optimizer import _objective_a, _objective_d

pytestmark = pytest.mark.acceptance


@contextmanager
def budget(seconds):
    start = time.perf_counter()
    yield
    elapsed = time.perf_counter() - start
    assert elapsed < seconds, f"took {elapsed:.2f}s, budget {seconds}s"


def latest_dose_contrast(design):
    c = np.zeros(design.spec.dim)
    c[0], c[design.n] = -1.0, 1.0
    return c


def average_contrast(spec):
    c = np.zeros(spec.dim)
    c[0] = -1.0
    c[1:spec.n + 1] = 1.0 / spec.n
    return c


def test_01_senn_e_value_and_exact_contrast_information():
    with budget(1):
        for n in range(2, 9):
            design = senn_design(n)
            assert abs(e_criterion(design) - 1 / (4 * n)) <= 1e-12
            exact = contrast_information(design).exact_entries
            assert exact is not None
            for i, row in enumerate(exact):
                for j, entry in enumerate(row):
                    assert entry == (Fraction(1, 4 * n) if i == j else 0)


def test_02_e_optimal_extended_class_values():
    with budget(10):
        for n in range(2, 9):
            value = e_criterion(uniformly_extended_senn(n))
            assert abs(value - 1 / (4 * n)) <= 1e-10
        polytope = e_optimal_class(ModelSpec(4, EXTENDED))
        for design in polytope.sample(100, np.random.default_rng(2024)):
            assert abs(e_criterion(design) - 1 / 16) <= 1e-8


def test_03_a_optimal_design_within_e_class(a_optimal_reference):
    with budget(60):
        polytope = e_optimal_class(ModelSpec(4, EXTENDED))
        result = maximize(polytope, "A", SolverConfig(stopping_gap=1e-7))
        assert result.gap <= 1e-7
        assert np.max(np.abs(result.design.matrix
                             - a_optimal_reference.matrix)) <= 2e-3


def test_04_d_optimal_design_within_e_class(d_optimal_reference):
    with budget(60):
        polytope = e_optimal_class(ModelSpec(4, EXTENDED))
        result = maximize(polytope, "D", SolverConfig(stopping_gap=1e-7))
        assert result.gap <= 1e-7
        assert np.max(np.abs(result.design.matrix
                             - d_optimal_reference.matrix)) <= 2e-3


def test_05_interim_stage_variances():
    with budget(5):
        for n in range(2, 7):
            lv = lv_variances(senn_design(n))
            assert len(lv) == n
            assert np.max(np.abs(np.asarray(lv) - 4 * n)) <= 1e-9
            final = lv_variances(highest_dose_extended_senn(n))[-1]
            assert abs(final - 2 * (n + 1)) <= 1e-9


def test_06_mv_value_and_dominance():
    with budget(30):
        for n in range(2, 7):
            assert abs(mv_criterion(senn_design(n)) - 4 * n) <= 1e-10
        for n in (2, 3, 4):
            spec = ModelSpec(n, STANDARD)
            rng = np.random.default_rng(600 + n)
            for _ in range(200):
                design = random_design(spec, rng)
                assert mv_criterion(design) >= 4 * n - 1e-9
                assert min(lv_variances(design)) >= 4 * n - 1e-9


def test_07_equivalence_theorem_certificates():
    with budget(60):
        for n in range(2, 7):
            for design in (senn_design(n), uniformly_extended_senn(n)):
                result = certify_e_optimality(design)
                assert result.certified
                assert abs(result.worst_gap) <= 1e-10
                # equality at every vertex: the smallest gap vanishes too
                assert abs(result.min_gap) <= 1e-10
            for design in (senn_design(n), highest_dose_extended_senn(n)):
                result = certify_c_optimality(design, latest_dose_contrast(design))
                assert result.certified
                assert abs(result.worst_gap) <= 1e-10
                assert abs(result.min_gap) <= 1e-10


def test_08_average_contrast_optimality():
    with budget(30):
        polytope = e_optimal_class(ModelSpec(4, EXTENDED))
        certified = [senn_design(4), uniformly_extended_senn(4),
                     maximize(polytope, "A").design]
        certified += polytope.sample(3, np.random.default_rng(8))
        values = []
        for design in certified:
            assert certify_e_optimality(design).certified
            values.append(avg_contrast_variance(design))
        assert np.max(np.abs(np.asarray(values) - values[0])) <= 1e-8
        best_certified = values[0]
        corpus_min = np.inf
        for kind in (STANDARD, EXTENDED):
            spec = ModelSpec(4, kind)
            c = average_contrast(spec)
            rng = np.random.default_rng(88 if kind == STANDARD else 89)
            for _ in range(250):
                corpus_min = min(corpus_min,
                                 c_variance(random_design(spec, rng), c))
        assert corpus_min >= best_certified - 1e-8


def test_09_brute_force_oracle_agreement():
    with budget(120):
        std_design, std_value = brute_force_best_e(ModelSpec(2, STANDARD), 40)
        assert abs(std_value - 1 / 8) <= 2e-3
        assert np.max(np.abs(std_design.matrix - senn_design(2).matrix)) <= 0.02

        ext_design, ext_value = brute_force_best_e(ModelSpec(2, EXTENDED), 20)
        assert abs(ext_value - 1 / 8) <= 2e-3
        assert np.max(np.abs(ext_design.matrix
                             - uniformly_extended_senn(2).matrix)) <= 0.02

        for design in (std_design, ext_design):
            r = replication_profile(design).r_vector
            assert np.max(np.abs(r - np.array([0.5, 0.25, 0.25]))) <= 0.02


def test_10_numerical_hygiene():
    with budget(10):
        rng = np.random.default_rng(10)
        h = 1e-6
        specs = (ModelSpec(2, STANDARD), ModelSpec(3, STANDARD),
                 ModelSpec(2, EXTENDED), ModelSpec(3, EXTENDED))
        designs = [random_design(spec, rng) for spec in specs for _ in range(5)]
        assert len(designs) == 20
        for design in designs:
            spec = design.spec
            w = design.matrix.copy()
            for objective in (_objective_a, _objective_d):
                value, grad = objective(w, spec.t)
                scale = max(1.0, float(np.max(np.abs(grad))))
                for i in range(spec.n + 1):
                    for k in range(spec.t):
                        if i > 0 and i not in spec.allowed_treatments(k):
                            continue
                        bumped, dipped = w.copy(), w.copy()
                        bumped[i, k] += h
                        dipped[i, k] -= h
                        fd = (objective(bumped, spec.t)[0]
                              - objective(dipped, spec.t)[0]) / (2 * h)
                        assert abs(fd - grad[i, k]) <= 1e-5 * scale

        for n in range(2, 7):
            for design in (senn_design(n), uniformly_extended_senn(n),
                           highest_dose_extended_senn(n)):
                matrix = tau_information(design).matrix
                lam, vec = np.linalg.eigh(matrix)
                rebuilt = (vec * lam) @ vec.T
                assert np.max(np.abs(rebuilt - matrix)) <= 1e-10
