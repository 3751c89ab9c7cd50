"""netgrip: quasi-static simulator and signal pipeline for a net-based
robotic gripper (linkage kinematics, elastic-net equilibrium, penalty
contact with friction, piezoresistive sensing, grasp-phase segmentation,
threshold-stop grip control)."""

from .contact import ContactParams, FrictionState, contact_forces, hold_check
from .control import GripController, RunResult, TelemetryFrame, command_stream, run_scenario
from .linkage import LinkageConfig, aperture, claw_tips, fit_linkage, slider_for_aperture
from .mesh import NetMesh, build_net
from .phases import (
    GraspPhase,
    PhaseReport,
    SegmenterConfig,
    StreamSegmenter,
    Trace,
    plateau_stats,
    segment,
)
from .scenario import Scenario, bundled_scenario_names, load_bundled, load_scenario
from .sensing import (
    CalibrationCurve,
    SensorSpec,
    force_to_resistance,
    read_sensor,
    resistance_to_voltage,
)
from .shapes import RigidObject, signed_distance
from .solver import EquilibriumResult, SolverParams, elastic_energy, node_stress, solve_equilibrium

__version__ = "0.1.0"

__all__ = [
    "ContactParams", "FrictionState", "contact_forces", "hold_check",
    "GripController", "RunResult", "TelemetryFrame", "command_stream", "run_scenario",
    "LinkageConfig", "aperture", "claw_tips", "fit_linkage", "slider_for_aperture",
    "NetMesh", "build_net",
    "GraspPhase", "PhaseReport", "SegmenterConfig", "StreamSegmenter", "Trace",
    "plateau_stats", "segment",
    "Scenario", "bundled_scenario_names", "load_bundled", "load_scenario",
    "CalibrationCurve", "SensorSpec", "force_to_resistance", "read_sensor",
    "resistance_to_voltage",
    "RigidObject", "signed_distance",
    "EquilibriumResult", "SolverParams", "elastic_energy", "node_stress",
    "solve_equilibrium",
    "__version__",
]
