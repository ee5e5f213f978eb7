"""Compensated convex transforms and average approximations on uniform grids.

The package computes lower/upper compensated convex transforms of scalar
fields via an iterative convex-envelope solver, combines them into the
average approximation of sparsely sampled data, and wraps the operator into
level-set, scattered-data, inpainting, and denoising pipelines with closed
form oracles and an exact Delaunay cross-check.
"""

__version__ = "0.1.0"

# version of the JSON config / report schema emitted and accepted by the CLI
SCHEMA_VERSION = 1

from . import errors
from .delaunay import (
    DelaunayCell,
    PiecewiseAffine,
    PointCloud,
    StructuralReport,
    cell_interpolant,
    structural_check,
    triangulate,
)
from .envelope import (
    EnvelopeReport,
    SolverConfig,
    StencilConfig,
    brute_force_envelope_1d,
    convex_envelope,
    full_reach_stencil,
)
from .grid import (
    GridSpec,
    SampledFunction,
    SampleMask,
    ScalarField,
    extend,
    lipschitz_lower_bound,
)
from .metrics import linf, psnr, relative_l2
from .prototypes import (
    PrototypeId,
    analytic_average,
    analytic_lower,
    analytic_upper,
    default_params,
    fan_jump_graph,
)
from .transforms import (
    AverageResult,
    TransformParams,
    average_approximation,
    lower_transform,
    resolve_module,
    restriction_check,
    upper_transform,
)

__all__ = [
    "__version__",
    "SCHEMA_VERSION",
    "errors",
    "GridSpec",
    "ScalarField",
    "SampleMask",
    "SampledFunction",
    "extend",
    "lipschitz_lower_bound",
    "StencilConfig",
    "SolverConfig",
    "EnvelopeReport",
    "convex_envelope",
    "full_reach_stencil",
    "brute_force_envelope_1d",
    "TransformParams",
    "AverageResult",
    "lower_transform",
    "upper_transform",
    "average_approximation",
    "resolve_module",
    "restriction_check",
    "PrototypeId",
    "analytic_average",
    "analytic_lower",
    "analytic_upper",
    "default_params",
    "fan_jump_graph",
    "PointCloud",
    "DelaunayCell",
    "PiecewiseAffine",
    "StructuralReport",
    "triangulate",
    "cell_interpolant",
    "structural_check",
    "linf",
    "psnr",
    "relative_l2",
]
