"""Shared fixtures: reference designs and the acceptance-summary hook."""

from __future__ import annotations

import numpy as np
import pytest

from dosedesign import EXTENDED, ModelSpec, make_design

# Reference A-optimal design within the E-optimal extended class for n=4,
# quoted to four decimals.  Row = treatment (0 is placebo), column = cohort.
A_OPTIMAL_IN_E_CLASS_N4 = np.array([
    [0.1000, 0.1000, 0.1000, 0.1000, 0.1000],
    [0.1000, 0.0219, 0.0031, 0.0000, 0.0000],
    [0.0000, 0.0781, 0.0287, 0.0091, 0.0091],
    [0.0000, 0.0000, 0.0682, 0.0284, 0.0284],
    [0.0000, 0.0000, 0.0000, 0.0625, 0.0625],
])

# Reference D-optimal design within the same class, also four decimals.
# The quoted rounding leaves dose rows 2 and 3 summing to 0.1249/0.1251,
# so this matrix is a valid design but misses the class equalities by 1e-4.
D_OPTIMAL_IN_E_CLASS_N4 = np.array([
    [0.1000, 0.1000, 0.1000, 0.1000, 0.1000],
    [0.1000, 0.0248, 0.0002, 0.0000, 0.0000],
    [0.0000, 0.0752, 0.0339, 0.0079, 0.0079],
    [0.0000, 0.0000, 0.0659, 0.0296, 0.0296],
    [0.0000, 0.0000, 0.0000, 0.0625, 0.0625],
])


@pytest.fixture(scope="session")
def a_optimal_reference():
    return make_design(ModelSpec(4, EXTENDED), A_OPTIMAL_IN_E_CLASS_N4)


@pytest.fixture(scope="session")
def d_optimal_reference():
    return make_design(ModelSpec(4, EXTENDED), D_OPTIMAL_IN_E_CLASS_N4)


# One line per acceptance criterion, printed after the run.
ACCEPTANCE_LINES = {
    "test_01_senn_e_value_and_exact_contrast_information":
        "1. Senn E-value 1/(4n) (1e-12) and contrast information exactly I/(4n), n=2..8",
    "test_02_e_optimal_extended_class_values":
        "2. uniformly extended Senn and 100 sampled class members all reach 1/(4n)",
    "test_03_a_optimal_design_within_e_class":
        "3. optimizer reproduces the reference A-optimal class design (2e-3, gap<=1e-7)",
    "test_04_d_optimal_design_within_e_class":
        "4. optimizer reproduces the reference D-optimal class design (2e-3, gap<=1e-7)",
    "test_05_interim_stage_variances":
        "5. Senn interim variances all 4n; highest-dose final stage 2(n+1) (1e-9)",
    "test_06_mv_value_and_dominance":
        "6. Senn MV value 4n; random designs never beat 4n in MV or any stage",
    "test_07_equivalence_theorem_certificates":
        "7. E- and c-certificates pass with equality at every vertex, n=2..6",
    "test_08_average_contrast_optimality":
        "8. certified E-optimal designs minimize the average-contrast variance",
    "test_09_brute_force_oracle_agreement":
        "9. grid oracle recovers value 1/8 and the closed-form optima at n=2",
    "test_10_numerical_hygiene":
        "10. A/D gradients match finite differences; eigendecompositions reconstruct",
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = {}
    for status, verdict in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            name = nodeid.split("::")[-1]
            if name in ACCEPTANCE_LINES:
                rows.setdefault(name, verdict)
    if rows:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name in sorted(rows):
            terminalreporter.write_line(f"{rows[name]}  {ACCEPTANCE_LINES[name]}")
