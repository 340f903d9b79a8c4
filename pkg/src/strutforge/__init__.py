"""Compression-only strut nets around obstacles, built from polyhedral Airy stress functions."""

__version__ = "0.1.0"

from .equilibrium import (  # noqa: E402
    BAL_TOL,
    ConsistencyError,
    EquilibriumError,
    ForceSystem,
    check_balance,
    check_compressibility,
    tangent_planes,
)
from .envelope import ConcaveEnvelope, StrutNet, extract_net, min_envelope, open_envelope, total_weight  # noqa: E402
from .geometry import ConvexPolygon, GeometryError, PlaneFunc, Segment  # noqa: E402
from .kernels import BACKEND  # noqa: E402
from .lpsolve import LinProgram, LpStatus, SimplexSolver, SolverError  # noqa: E402
from .synthesis import (  # noqa: E402
    Obstacle,
    SupportSegment,
    SynthesisResult,
    approximate_shape,
    avoid_multi,
    avoid_single,
    discretize_supports,
    quick_infeasibility,
    solve_reactive,
)
from .enlarge import CleavingContext, roll_from, roll_maximal_regions  # noqa: E402
from .loopreduce import GeneralNet, complete_net, find_elementary_loops, planarize, reduce, replace_loop  # noqa: E402

__all__ = [
    "BACKEND",
    "BAL_TOL",
    "CleavingContext",
    "ConcaveEnvelope",
    "ConsistencyError",
    "ConvexPolygon",
    "EquilibriumError",
    "ForceSystem",
    "GeneralNet",
    "GeometryError",
    "LinProgram",
    "LpStatus",
    "Obstacle",
    "PlaneFunc",
    "Segment",
    "SimplexSolver",
    "SolverError",
    "StrutNet",
    "SupportSegment",
    "SynthesisResult",
    "approximate_shape",
    "avoid_multi",
    "avoid_single",
    "check_balance",
    "check_compressibility",
    "complete_net",
    "discretize_supports",
    "extract_net",
    "find_elementary_loops",
    "min_envelope",
    "open_envelope",
    "planarize",
    "quick_infeasibility",
    "reduce",
    "replace_loop",
    "roll_from",
    "roll_maximal_regions",
    "solve_reactive",
    "tangent_planes",
    "total_weight",
]
