"""Task assignment and path finding with precedence constraints."""

from .instance import (
    AgentSpec,
    GeneratorConfig,
    Instance,
    PrecedenceDag,
    Task,
    crossing_instance,
    generate_instance,
    load_instance,
    read_instance,
    topological_order,
    transitive_successors,
    write_instance,
)
from .lns import LnsConfig, run_lns
from .seed import build_seed, greedy_assign
from .solution import Solution, sum_of_costs, validate_solution
from .world import DistanceTable, GridMap, grid_distance, load_map, parse_map

__version__ = "0.1.0"

__all__ = [
    "AgentSpec",
    "DistanceTable",
    "GeneratorConfig",
    "GridMap",
    "Instance",
    "LnsConfig",
    "PrecedenceDag",
    "Solution",
    "Task",
    "build_seed",
    "crossing_instance",
    "generate_instance",
    "greedy_assign",
    "grid_distance",
    "load_instance",
    "load_map",
    "parse_map",
    "read_instance",
    "run_lns",
    "sum_of_costs",
    "topological_order",
    "transitive_successors",
    "validate_solution",
    "write_instance",
]
