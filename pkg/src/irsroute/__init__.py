"""Multi-IRS beam routing and max-min power allocation for wireless power transfer."""

from .errors import (InvalidArgumentError, IrsRouteError, NoLineOfSightError,
                     ResourceLimitError, ValidationError)
from .scenario import Scenario, build_los_graph, default_scenario, load_scenario
from .beamforming import BeamModel, path_gain
from .channel import ReflectionPath
from .pathfind import build_line_graph, build_path_graph, maximal_cliques, top_u_paths
from .allocator import (AllocationPlan, combine_paths, solve_dynamic, solve_equal_time,
                        solve_p22, solve_static, solve_subsurface)

__version__ = "0.1.0"

__all__ = [
    "IrsRouteError", "InvalidArgumentError", "ValidationError", "NoLineOfSightError",
    "ResourceLimitError", "Scenario", "load_scenario", "default_scenario", "build_los_graph",
    "BeamModel", "path_gain", "ReflectionPath", "build_line_graph", "top_u_paths",
    "build_path_graph", "maximal_cliques", "AllocationPlan", "combine_paths", "solve_p22",
    "solve_dynamic", "solve_static", "solve_equal_time", "solve_subsurface",
]
