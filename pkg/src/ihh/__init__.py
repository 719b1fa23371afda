"""Single-path multicommodity flow routing with congestion pricing.

The main entry points are :func:`ihh.solver.solve` for the heuristic,
:func:`ihh.generator.generate` for test instances and
:func:`ihh.oracle.exact_solve` for exact answers on small instances.
"""

from .exceptions import (
    GeneratorError,
    IhhError,
    InstanceFormatError,
    InvalidInstanceError,
    NegativeCostError,
    OracleLimitError,
)
from .model import Arc, Commodity, FlowState, Instance, Network, Node, capacity_feasible, total_cost
from .pricing import IhhParams, default_params
from .solver import SolveConfig, SolveReport, solve

__version__ = "0.1.0"

__all__ = [
    "Arc",
    "Commodity",
    "FlowState",
    "GeneratorError",
    "IhhError",
    "IhhParams",
    "Instance",
    "InstanceFormatError",
    "InvalidInstanceError",
    "NegativeCostError",
    "Network",
    "Node",
    "OracleLimitError",
    "SolveConfig",
    "SolveReport",
    "capacity_feasible",
    "default_params",
    "solve",
    "total_cost",
]
