"""Numerical laboratory for confined bending-energy functionals on closed
triangle meshes: discrete curvature energies, confinement-constrained
minimization, threshold sweeps, and inequality property suites."""

__version__ = "0.1.0"

from .mesh import (
    TriMesh,
    MeshMetrics,
    MeshError,
    InvalidMeshError,
    DegenerateTriangleError,
    validate,
    metrics,
    split_components,
    rescale,
    translate,
    concatenate,
    load_obj,
    save_obj,
)
from .discrete_ops import (
    CurvatureField,
    EnergyReport,
    curvature,
    energy_report,
    wlambda_gradient,
)
from .monotonicity import MonotonicityResidual, monotonicity_residual
from .generators import (
    GeneratorSpec,
    GeneratorError,
    generate,
    icosphere,
    torus,
    ellipsoid,
    capped_cylinder,
    dante,
    dante_energy_analytic,
    invert,
    perturb,
    perturb_radial,
)
from .domains import (
    Domain,
    DomainAnalysis,
    DomainError,
    Ball,
    SphericalShell,
    Slab,
    InfiniteCylinder,
    EllipsoidShell,
    UnionOfBalls,
    Rescale,
    Translate,
    signed_distance,
    project,
    analyze,
    parse_domain,
)
