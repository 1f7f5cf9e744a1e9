"""Periodic orbits, limit cycles and centers of planar semi-quasi-homogeneous
polynomial vector fields, with a numerical flow oracle for every verdict."""

from .qhalg import (
    EqualDegrees,
    NoPeriodicOrbit,
    NormalForm,
    NotCoprime,
    NotQuasiHomogeneous,
    ParityCase,
    QHError,
    QHPolynomial,
    SemiQHSystem,
    WeightVector,
    classify_system,
    coprime,
    existence_screen,
    parse_polynomial,
    reduce_weights,
    weighted_degree,
)
from .lyaptrig import MomentTable, TrigParams, cs_sn, moment, period
from .melnikov import (
    AbelianForm,
    CycleReport,
    PerturbationSpec,
    abelian_coefficients,
    count_positive_simple_zeros,
    design_perturbation,
    divergence_integral,
    hamiltonian_level,
    lower_bound,
)
from .classify import (
    CenterVerdict,
    InfinityVerdict,
    LocalKind,
    LocalType,
    center_at_origin,
    classify_degenerate,
    infinity_analysis,
    kappa_threshold,
    local_type_m1,
    symmetry_center_check,
)
from .phaseflow import (
    FlowConfig,
    VectorField,
    detect_center,
    export_portrait,
    find_limit_cycles,
    integrate,
    return_map,
)

__all__ = [
    "abelian_coefficients",
    "AbelianForm",
    "center_at_origin",
    "CenterVerdict",
    "classify_degenerate",
    "classify_system",
    "coprime",
    "count_positive_simple_zeros",
    "cs_sn",
    "CycleReport",
    "design_perturbation",
    "detect_center",
    "divergence_integral",
    "EqualDegrees",
    "existence_screen",
    "export_portrait",
    "find_limit_cycles",
    "FlowConfig",
    "hamiltonian_level",
    "infinity_analysis",
    "InfinityVerdict",
    "integrate",
    "kappa_threshold",
    "local_type_m1",
    "LocalKind",
    "LocalType",
    "lower_bound",
    "moment",
    "MomentTable",
    "NoPeriodicOrbit",
    "NormalForm",
    "NotCoprime",
    "NotQuasiHomogeneous",
    "ParityCase",
    "parse_polynomial",
    "period",
    "PerturbationSpec",
    "QHError",
    "QHPolynomial",
    "reduce_weights",
    "return_map",
    "SemiQHSystem",
    "symmetry_center_check",
    "TrigParams",
    "VectorField",
    "weighted_degree",
    "WeightVector",
]

__version__ = "0.1.0"
