"""Energy-minimizing and biharmonic extension problems on the Sierpinski gasket."""

from .core import (
    AddressError,
    LevelGraph,
    VertexId,
    bottom_row,
    boundary_point,
    build_level_graph,
    canonicalize,
    graph_distance_avoiding,
    measure_weights,
    parse_address,
)
from .energy import (
    ExtensionProblem,
    NodeFunction,
    graph_energy,
    harmonic_extend,
    integrate_piecewise_harmonic,
    minimize_energy,
    minimize_energy_lambda,
    resolvent_construct,
)
from .trace import Network, effective_form, eliminate_vertex, is_zero_coefficient, trace_to

__all__ = [
    "AddressError",
    "ExtensionProblem",
    "LevelGraph",
    "Network",
    "NodeFunction",
    "VertexId",
    "bottom_row",
    "boundary_point",
    "build_level_graph",
    "canonicalize",
    "effective_form",
    "eliminate_vertex",
    "graph_distance_avoiding",
    "graph_energy",
    "harmonic_extend",
    "integrate_piecewise_harmonic",
    "is_zero_coefficient",
    "measure_weights",
    "minimize_energy",
    "minimize_energy_lambda",
    "parse_address",
    "resolvent_construct",
    "trace_to",
]
