"""finslerlab: numerical Finsler geometry on Funk, Hilbert and Minkowski spaces.

Curvature by automatic differentiation, Busemann-Hausdorff measures, and
functional-inequality quotients evaluated along bubble families.
"""
from . import curvature, measure, metrics, norms, quadrature, quotients
from .curvature import (
    curvature_report,
    flag_curvature,
    ricci_curvature,
    riemann_operator,
    s_curvature,
    weighted_ricci,
)
from .errors import (
    BoundViolation,
    DivergenceError,
    DomainError,
    FinslerError,
    InputError,
    NumericError,
)
from .kernels import BACKEND
from .measure import (
    BusemannHausdorff,
    ConstantDensity,
    FunkBH,
    Lebesgue,
    MeasureSpec,
    Riemannian,
    bh_density,
    check_comparison,
    domain_volume,
    funk_profile,
    integral_of_distortion,
    local_finiteness_probe,
)
from .metrics import (
    ExplicitBallFunk,
    FinslerMetric,
    Funk,
    Hilbert,
    InterpolatedFunk,
    KleinRiemannian,
    Minkowski,
    cometric_eval,
    funk_distance,
    geodesic_integrate,
    metric_eval,
    metric_reversibility,
)
from .norms import CustomNorm, Ellipsoid, Euclidean, PowerSum, QuarticSplit, dual_norm, eval_norm
from .quadrature import DEFAULT_QUAD, QuadratureConfig
from .quotients import (
    CKNBubble,
    GaussianBubble,
    alpha_sweep,
    montecarlo_integral,
    quotient_eval,
    radial_integral,
    reversible_contrast,
    sharp_constant,
)

__version__ = "0.1.0"
