"""Headless simulator of a UAV and a UGV joined by a variable-length hanging tether."""

from .catenary import CatenaryCurve, mean_catenary_error, solve_catenary
from .config import ScenarioConfig, build_world, load_config
from .engine import SimParams, WorldState, make_world, run_scenario, run_world, step_world
from .errors import (
    ConfigError,
    NumericalDivergence,
    ParseError,
    SchemaError,
    SimulationError,
    Timeout,
)
from .metrics import MetricsLog, MetricsSummary, summarize, write_csv
from .tether import TetherParams, TetherState, build_tether
from .vehicles import ControllerGains, VehicleState
from .winch import WinchState

__version__ = "0.1.0"
