"""Numerical laboratory for Hawking masses of perturbed geodesic spheres in
analytic Riemannian 3-manifolds."""

__version__ = "0.1.0"

from .errors import (
    BandLimitExceeded,
    ConditioningError,
    ConfigError,
    DegenerateSurface,
    DomainError,
    DomainExit,
    FitUnstable,
    GridTooCoarse,
    HawkingLabError,
    PerturbationTooLarge,
    RadiusOutOfRange,
    StepLimit,
)
from .manifold import (
    ConformalMetric,
    CurvaturePacket,
    EuclideanMetric,
    HyperbolicMetric,
    PolynomialMetric,
    RoundSphereMetric,
    SchwarzschildMetric,
    christoffel_at,
    curvature_packet,
    metric_at,
    metric_from_config,
    scalar_laplacian,
)
from .surface import (
    EmbeddedSurface,
    HawkingReport,
    SphereGrid,
    build_grid,
    expansion_order_check,
    extrinsic_geometry,
    hawking_mass,
)
from .geodesics import (
    GeodesicConfig,
    GeodesicFan,
    embed_sphere,
    exp_map,
    geodesic_sphere_surface,
    surface_tangents,
)
from .harmonics import (
    HarmonicField,
    analyze,
    apply_bilaplacian_shifted,
    optimal_perturbation,
    pde_residual,
    solve_constrained,
    synthesize,
    willmore_el_residual,
)
from .expansion import (
    BartnikBound,
    ExpansionFit,
    PredictedCoefficients,
    bartnik_lower_bound,
    compare_report,
    fit_coefficients,
    predicted_coefficients,
    radius_ladder,
    willmore_expansion_check,
)
from .optimizer import (
    OptimizeConfig,
    OptimizeResult,
    closed_form_reference,
    lagrange_multiplier_estimate,
    maximize_hawking,
)
