"""Distributed 3D placement of UAV base stations over an estimated crowd density."""

__version__ = "0.1.0"

from .channel import ChannelEnvironment, DegenerateGeometryError, LinkCondition  # noqa: E402
from .coverage import CoverageParams, coverage_gradient, coverage_probability, total_coverage  # noqa: E402
from .crowd import EstimationError, GpParams, GpPosterior, SensorNetwork, estimate_field  # noqa: E402
from .pushsum import NumericalFailure  # noqa: E402
from .simulator import Hotspot, Scenario, run_experiment  # noqa: E402
from .tessellation import GroundGrid, assign_cells, neighbor_graph  # noqa: E402

__all__ = [
    "ChannelEnvironment",
    "CoverageParams",
    "DegenerateGeometryError",
    "EstimationError",
    "GpParams",
    "GpPosterior",
    "GroundGrid",
    "Hotspot",
    "LinkCondition",
    "NumericalFailure",
    "Scenario",
    "SensorNetwork",
    "assign_cells",
    "coverage_gradient",
    "coverage_probability",
    "estimate_field",
    "neighbor_graph",
    "run_experiment",
    "total_coverage",
]
