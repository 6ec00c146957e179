"""Numerical verification of generalized Hsiung-Minkowski integral identities.

The engine evaluates metrics, vector fields and immersed hypersurfaces with
exact second-order Taylor jets, assembles the identity integrands and checks
that their integrals vanish under quadrature refinement.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DegenerateScene,
    DomainViolation,
    GateViolation,
    GeometryError,
    IndexOutOfRange,
    NotAPositionField,
    NotPositiveDefinite,
    RankDeficient,
    SymmetryDefectTooLarge,
)
from .fields import (  # noqa: E402
    Field,
    FieldJet,
    conformal_factor_defect,
    field_eval,
    make_field,
    position_identity_residuals,
)
from .geometry import (  # noqa: E402
    Manifold,
    christoffel,
    curvature_model_residual,
    make_manifold,
    metric_eval,
    riemann,
)
from .hypersurface import (  # noqa: E402
    curvature_traces,
    frame_at,
    lie_term_pullback,
    make_surface,
    shape_operator,
)
from .identities import (  # noqa: E402
    ResidualReport,
    classify_constant_curvature_case,
    convergence_sweep,
    integrand,
    integrate,
    umbilicity_defect,
)
from .scene import Scene, load_scene, parse_scene, parse_scene_text  # noqa: E402

__all__ = [
    "ConfigError", "DegenerateScene", "DomainViolation", "GateViolation", "GeometryError",
    "IndexOutOfRange", "NotAPositionField", "NotPositiveDefinite", "RankDeficient",
    "SymmetryDefectTooLarge",
    "Field", "FieldJet", "conformal_factor_defect", "field_eval", "make_field",
    "position_identity_residuals",
    "Manifold", "christoffel", "curvature_model_residual", "make_manifold", "metric_eval", "riemann",
    "curvature_traces", "frame_at", "lie_term_pullback", "make_surface", "shape_operator",
    "ResidualReport", "classify_constant_curvature_case", "convergence_sweep", "integrand",
    "integrate", "umbilicity_defect",
    "Scene", "load_scene", "parse_scene", "parse_scene_text",
]
