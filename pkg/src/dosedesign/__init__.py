"""Optimal approximate designs for dose-escalation cohort studies.

Builds, evaluates, certifies and optimizes approximate designs that
compare increasing dose levels against placebo under an escalation
schedule with fixed cohort effects.
"""

__version__ = "0.1.0"

from .core import (
    EXTENDED,
    STANDARD,
    ContrastInformation,
    ContrastSystem,
    Design,
    ModelSpec,
    ReplicationProfile,
    TauInformation,
    contrast_information,
    contrast_system,
    is_feasible,
    make_design,
    moment_matrix,
    pinv_sym,
    replication_profile,
    tau_information,
)
from .constructors import (
    highest_dose_extended_senn,
    is_e_optimal_extended,
    is_e_optimal_standard,
    senn_design,
    uniformly_extended_senn,
)
from .criteria import (
    CriterionReport,
    StageDesign,
    a_criterion,
    avg_contrast_variance,
    c_variance,
    criterion_report,
    d_criterion,
    e_criterion,
    lv_variances,
    mv_criterion,
    stage_design,
    stage_moment_matrix,
)
from .verification import (
    CertificationResult,
    GeneralizedInverse,
    VertexSet,
    block_generalized_inverse,
    brute_force_best_e,
    certify_c_optimality,
    certify_e_optimality,
    enumerate_vertices,
    generalized_inverse,
)
from .optimizer import (
    DesignPolytope,
    OptimizeResult,
    SolverConfig,
    e_optimal_class,
    maximize,
    random_design,
)
from .io import (
    RunManifest,
    certificate_to_dict,
    design_from_csv,
    design_from_json,
    design_to_csv,
    design_to_json,
    load_design,
    parse_weight,
    report_to_csv,
    report_to_dict,
    save_design,
    write_manifest,
)
from . import errors

__all__ = [
    "EXTENDED",
    "STANDARD",
    "ContrastInformation",
    "ContrastSystem",
    "Design",
    "ModelSpec",
    "ReplicationProfile",
    "TauInformation",
    "contrast_information",
    "contrast_system",
    "is_feasible",
    "make_design",
    "moment_matrix",
    "pinv_sym",
    "replication_profile",
    "tau_information",
    "highest_dose_extended_senn",
    "is_e_optimal_extended",
    "is_e_optimal_standard",
    "senn_design",
    "uniformly_extended_senn",
    "CriterionReport",
    "StageDesign",
    "a_criterion",
    "avg_contrast_variance",
    "c_variance",
    "criterion_report",
    "d_criterion",
    "e_criterion",
    "lv_variances",
    "mv_criterion",
    "stage_design",
    "stage_moment_matrix",
    "CertificationResult",
    "GeneralizedInverse",
    "VertexSet",
    "block_generalized_inverse",
    "brute_force_best_e",
    "certify_c_optimality",
    "certify_e_optimality",
    "enumerate_vertices",
    "generalized_inverse",
    "DesignPolytope",
    "OptimizeResult",
    "SolverConfig",
    "e_optimal_class",
    "maximize",
    "random_design",
    "RunManifest",
    "certificate_to_dict",
    "design_from_csv",
    "design_from_json",
    "design_to_csv",
    "design_to_json",
    "load_design",
    "parse_weight",
    "report_to_csv",
    "report_to_dict",
    "save_design",
    "write_manifest",
    "errors",
]
