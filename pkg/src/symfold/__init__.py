"""Sufficient dimension reduction with response/predictor folding for symmetric dependency."""

from .errors import (
    DegenerateProjection,
    DegenerateScale,
    EmptyData,
    LeverageOne,
    NonConvergence,
    NonFinite,
    ParseError,
    SingularCovariance,
    SliceTooSmall,
    SymfoldError,
    ZeroSlope,
)
from .estimators import (
    DirectionSet,
    FitResult,
    SliceAssignment,
    cooks_distance,
    cume,
    cuve,
    huber_m_fit,
    make_slices,
    ols_fit,
    phd_directions,
    save_est,
    sir,
    trimmed_fit,
)
from .numerics import (
    DataSet,
    MomentSet,
    canonical_correlations,
    inverse_sqrt,
    normalize_direction,
    ranks,
    sample_moments,
    squared_projection_correlation,
    sym_eigen,
)
from .pipelines import IterationLog, composed_transform_estimator, iterative_refine, two_direction_ols
from .simulation import McSummary, ModelSpec, generate, run_cell, table
from .transforms import (
    TransformContext,
    local_mean_at_center,
    method1,
    method2,
    transform_predictors,
    transform_response,
)

__version__ = "0.1.0"
