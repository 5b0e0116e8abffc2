"""Randomization confidence sets for treatment effect ratios under
noncompliance, by exact inversion of studentized test statistics."""

from .arfunc import (
    OlsFit,
    RationalQuadratic,
    adjusted_coeffs,
    direct_delta,
    draw_functions,
    evaluate_delta_sq,
    fit_interacted_ols,
    observed_function,
    unadjusted_coeffs,
)
from .csbuild import (
    ConfidenceSetResult,
    GridResult,
    QuantileEnvelope,
    build_cs_baseline,
    build_cs_fast,
    build_cs_grid,
    build_envelope,
    confidence_set,
    envelope_from_functions,
    index_set,
    index_set_values,
    quantile_value,
)
from .data import DataDiagnostics, ExperimentData, diagnose, load_csv, write_csv
from .draws import DrawSet, draw_assignments, enumerate_assignments
from .errors import (
    DegenerateDesign,
    DegenerateVariance,
    InputError,
    InvalidStrataSplit,
    MissingColumn,
    NonBinaryColumn,
    NonFiniteValue,
    RandinfError,
    SingularDesign,
    TooManyAssignments,
    UndefinedEstimate,
    ZeroVariance,
)
from .estimators import (
    PointEstimate,
    WaldInterval,
    adjusted_wald,
    iv_coefficient,
    normal_quantile,
    tsls_interval,
    verify_iv_identity,
    wald,
)
from .polyalg import (
    IntervalUnion,
    Poly4,
    intersection_polynomial,
    is_identical,
    nonpositivity_region,
    real_roots,
)
from .simulate import (
    CoverageReport,
    PopulationSpec,
    constant_effect_population,
    exact_noncoverage,
    make_population,
    realize_experiment,
    run_coverage,
)

__version__ = "0.1.0"

__all__ = [
    "ConfidenceSetResult",
    "CoverageReport",
    "DataDiagnostics",
    "DegenerateDesign",
    "DegenerateVariance",
    "DrawSet",
    "ExperimentData",
    "GridResult",
    "InputError",
    "IntervalUnion",
    "InvalidStrataSplit",
    "MissingColumn",
    "NonBinaryColumn",
    "NonFiniteValue",
    "OlsFit",
    "PointEstimate",
    "Poly4",
    "PopulationSpec",
    "QuantileEnvelope",
    "RandinfError",
    "RationalQuadratic",
    "SingularDesign",
    "TooManyAssignments",
    "UndefinedEstimate",
    "WaldInterval",
    "ZeroVariance",
    "adjusted_coeffs",
    "adjusted_wald",
    "build_cs_baseline",
    "build_cs_fast",
    "build_cs_grid",
    "build_envelope",
    "confidence_set",
    "constant_effect_population",
    "diagnose",
    "direct_delta",
    "draw_assignments",
    "draw_functions",
    "enumerate_assignments",
    "envelope_from_functions",
    "evaluate_delta_sq",
    "exact_noncoverage",
    "fit_interacted_ols",
    "index_set",
    "index_set_values",
    "intersection_polynomial",
    "is_identical",
    "iv_coefficient",
    "load_csv",
    "make_population",
    "nonpositivity_region",
    "normal_quantile",
    "observed_function",
    "quantile_value",
    "real_roots",
    "realize_experiment",
    "run_coverage",
    "tsls_interval",
    "unadjusted_coeffs",
    "verify_iv_identity",
    "wald",
    "write_csv",
]
