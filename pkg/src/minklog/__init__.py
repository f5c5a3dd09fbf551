"""Numerical solver for the discrete generalized Gaussian log-Minkowski problem."""

__version__ = "0.1.0"

from .density import (
    GGParams,
    density,
    normalization_constant,
    radial_cumulative,
    radial_weight,
    sphere_area,
    support_radius,
    total_mass,
)
from .errors import (
    ConstraintBracketError,
    GeometryError,
    HemisphereConcentrationError,
    InactiveFacetError,
    MinklogError,
    ParameterDomainError,
    TieError,
    ToleranceNotMetError,
    UnboundedBodyError,
    VariationalDomainError,
)
from .geometry import (
    DirectionSet,
    DiscreteMeasure,
    PolytopeGeometry,
    SupportVector,
    combine_lp,
    concentration_direction,
    hausdorff_distance,
    hemisphere_check,
    radial_function,
    radii,
    ray_normal,
    slab,
    support_function,
    wulff_shape,
)
from .measures import (
    McSpec,
    MeasureVector,
    ball_radius_for_volume,
    ball_volume,
    gg_cone_measure,
    gg_surface_measure,
    gg_volume,
    lp_surface_measure,
    mc_surface_oracle,
    mc_total_mass,
    mc_volume_oracle,
    tail_radius,
    volume_gradient,
)
from .quadrature import QuadratureSpec
from .solver import (
    C0FloorError,
    EntropyBound,
    SolveConfig,
    SolveReport,
    entropy,
    entropy_bound_check,
    euler_lagrange_residual,
    rescale_to_constraint,
    solve,
)
