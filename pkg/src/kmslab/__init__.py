"""kmslab: Fourier-symbol classification and Korn-Maxwell-Sobolev trials.

The package represents homogeneous constant-coefficient differential
operators by their symbols, classifies them (elliptic, constant rank,
cancelling, C-elliptic, optionally restricted to the kernel of a pointwise
part map), builds the associated Fourier multipliers, and tests
Korn-Maxwell-Sobolev type inequalities numerically on a discrete torus.
"""

__version__ = "0.1.0"

from .classify import (
    CEllipticVerdict,
    ClassificationReport,
    SphereSampling,
    classify,
    classify_on_kernel,
    is_c_elliptic,
)
from .multipliers import (
    ConstantRankViolation,
    MultiplierConstructionError,
    MultiplierDescriptor,
    composed_correction_symbol,
    kernel_projection_symbol,
    mihlin_korn_multiplier,
    pseudoinverse_symbol,
)
from .operators import (
    CONVENTIONS,
    MultiIndex,
    OperatorSpec,
    PartMap,
    SymbolMatrix,
    catalog_operator,
    catalog_partmap,
    eval_symbol,
    multiindex_enumerate,
    restrict_symbol,
)
from .torus import (
    SpectrumField,
    TensorField,
    TorusGrid,
    apply_multiplier,
    apply_operator,
    apply_partmap,
    bump_field,
    dual_exponent_chain,
    homog_sobolev_norm,
    inverse_transform,
    lp_norm,
    negative_sobolev_norm_l2,
    plane_wave_field,
    random_bandlimited,
    sobolev_conjugate,
    transform,
)
from .verify import (
    ConstantEstimate,
    FieldFamily,
    InequalityConfig,
    KernelConstants,
    PreconditionError,
    TrialResult,
    curl_riesz_crosscheck,
    estimate_constant,
    kms_sides,
    necessity_demo,
    p1_probe,
    refinement_study,
    run_trial,
    single_frequency_trial,
    trial_ratio,
)

__all__ = [
    "__version__",
    "CEllipticVerdict",
    "ClassificationReport",
    "SphereSampling",
    "classify",
    "classify_on_kernel",
    "is_c_elliptic",
    "ConstantRankViolation",
    "MultiplierConstructionError",
    "MultiplierDescriptor",
    "composed_correction_symbol",
    "kernel_projection_symbol",
    "mihlin_korn_multiplier",
    "pseudoinverse_symbol",
    "CONVENTIONS",
    "MultiIndex",
    "OperatorSpec",
    "PartMap",
    "SymbolMatrix",
    "catalog_operator",
    "catalog_partmap",
    "eval_symbol",
    "multiindex_enumerate",
    "restrict_symbol",
    "SpectrumField",
    "TensorField",
    "TorusGrid",
    "apply_multiplier",
    "apply_operator",
    "apply_partmap",
    "bump_field",
    "dual_exponent_chain",
    "homog_sobolev_norm",
    "inverse_transform",
    "lp_norm",
    "negative_sobolev_norm_l2",
    "plane_wave_field",
    "random_bandlimited",
    "sobolev_conjugate",
    "transform",
    "ConstantEstimate",
    "FieldFamily",
    "InequalityConfig",
    "KernelConstants",
    "PreconditionError",
    "TrialResult",
    "curl_riesz_crosscheck",
    "estimate_constant",
    "kms_sides",
    "necessity_demo",
    "p1_probe",
    "refinement_study",
    "run_trial",
    "single_frequency_trial",
    "trial_ratio",
]
