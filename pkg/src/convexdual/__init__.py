"""Convex duality through weak membership oracles.

Given nothing but an approximate membership test for a convex body, the
pipelines here evaluate the dual norm of a sandwiched norm, decide
membership in the dual of a pointed full cone, evaluate Fenchel conjugates
of growth-certified convex functions, and estimate Mahler volume products.
Every derived object is an oracle again, so constructions compose.
"""

from .core import (
    CallCounter,
    CenteredBody,
    Interval,
    NormDescriptor,
    ToleranceConfig,
    DEFAULT_CONFIG,
    WeakVerdict,
    as_vector,
    rng_stream,
    scale_into_annulus,
)
from .oracles import (
    FunctionApproxOracle,
    NormApproxOracle,
    ReferenceCone,
    ReferenceNorm,
    RelativeWeakMembershipOracle,
    WeakMembershipOracle,
    exact_to_weak,
    reference_cone_member,
    reference_dual_norm,
    reference_norm_eval,
    smat,
    svec,
)
from .cutting import (
    BracketError,
    FlatGaugeError,
    IterationCapError,
    WoptResult,
    WvalQuery,
    WvalVerdict,
    approx_separator,
    gauge_batch,
    gauge_from_wmem,
    wopt_from_wmem,
    wval_from_wmem,
)
from .normdual import (
    BisectionTrace,
    DualBallOracle,
    DualNormResult,
    ScalingBounds,
    approx_from_wmem,
    ball_scaling_bounds,
    bisection_step_count,
    dual_ball_wmem,
    dual_norm_eval,
    rescale_norm,
    wmem_ball_from_dual_wval,
    wmem_from_approx,
)
from .conedual import (
    ConeDescriptor,
    DualConeOracle,
    SectionFrame,
    build_section_frame,
    cone_wmem_to_section_wmem,
    descriptor_from_reference,
    dual_cone_wmem,
    interior_bound_check,
    normalize_cone,
    section_wmem_to_cone_wmem,
)
from .fenchel import (
    CertificateError,
    ConjugateEstimate,
    EpigraphBody,
    GrowthCertificate,
    InteriorMinCertificate,
    MinimizationResult,
    REFERENCE_FUNCTIONS,
    ReferenceFunction,
    dual_growth_constants,
    epigraph_wmem,
    fenchel_brute,
    fenchel_eval,
    make_reference_function,
    min_via_wopt,
)
from .mahler import (
    MahlerEstimate,
    VolumeEstimate,
    linear_image,
    mahler_volume,
    volume_mc,
)

__version__ = "0.1.0"

__all__ = [
    "BisectionTrace", "BracketError", "CallCounter", "CenteredBody",
    "CertificateError", "ConeDescriptor", "ConjugateEstimate",
    "DEFAULT_CONFIG", "DualBallOracle", "DualConeOracle", "DualNormResult",
    "EpigraphBody", "FlatGaugeError", "FunctionApproxOracle",
    "GrowthCertificate", "InteriorMinCertificate", "Interval",
    "IterationCapError", "MahlerEstimate", "MinimizationResult",
    "NormApproxOracle", "NormDescriptor", "REFERENCE_FUNCTIONS",
    "ReferenceCone", "ReferenceFunction", "ReferenceNorm",
    "RelativeWeakMembershipOracle", "ScalingBounds", "SectionFrame",
    "ToleranceConfig", "VolumeEstimate", "WeakMembershipOracle",
    "WeakVerdict", "WoptResult", "WvalQuery", "WvalVerdict",
    "approx_from_wmem", "approx_separator", "as_vector",
    "ball_scaling_bounds", "bisection_step_count", "build_section_frame",
    "cone_wmem_to_section_wmem", "descriptor_from_reference",
    "dual_ball_wmem", "dual_cone_wmem", "dual_growth_constants",
    "dual_norm_eval", "epigraph_wmem", "exact_to_weak", "fenchel_brute",
    "fenchel_eval", "gauge_batch", "gauge_from_wmem", "interior_bound_check",
    "linear_image", "mahler_volume", "make_reference_function",
    "min_via_wopt", "normalize_cone", "reference_cone_member",
    "reference_dual_norm", "reference_norm_eval", "rescale_norm",
    "rng_stream", "scale_into_annulus", "section_wmem_to_cone_wmem", "smat",
    "svec", "volume_mc", "wmem_ball_from_dual_wval", "wmem_from_approx",
    "wopt_from_wmem", "wval_from_wmem",
]
