"""Recursive state estimation with outer measures and possibility functions."""

from .errors import (
    DimensionMismatchError,
    IncompatibleError,
    OmstateError,
    SizeCapError,
    UnsupportedFamilyError,
    ValidationError,
)
from .possibility import (
    Box,
    GaussianPossibility,
    GridPossibility,
    IndicatorPossibility,
    MaxMixture,
    PointSet,
    ScaledFunction,
    WholeSpace,
    evaluate,
    product,
    sup_over,
    vacuous,
)
from .outer_measure import (
    BoxIndicator,
    ExplicitFinite,
    FiniteOuterMeasure,
    GridFunction,
    LinearBijective,
    LinearProjection,
    One,
    compose_backward,
    compose_conditional,
    compose_forward,
    fuse,
    outer_eval,
    pullback,
    pushforward,
)
from .gaussian import (
    GaussianObservationFactor,
    GaussianTransition,
    gaussian_product,
    kalman_predict,
    kalman_update,
)
from .model import (
    GridTransition,
    IndicatorTransition,
    LinearGaussianDynamics,
    LinearGaussianKernel,
    MarkovKernel,
    ObservedInfo,
    Scenario,
    Trajectory,
    observed_info_from_measurement,
    simulate,
)
from .filter import (
    FilterState,
    ParticleState,
    filter_single,
    particle_step,
    predict,
    prune,
    run_filter,
    run_particle_filter,
    update,
)
from .smoother import SmoothingResult, backward_smooth, joint_smooth_grid
from .grid_oracle import JointTable, brute_joint, sup_marginal

__version__ = "0.1.0"
