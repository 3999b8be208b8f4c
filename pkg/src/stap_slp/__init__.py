"""stap-slp: joint DFRC waveform and STAP receive-filter design."""

from .comm import CommSetup, build_ci_constraints, build_zf_constraints, make_comm_setup
from .config import ScenarioConfig, load_config, load_preset, preset_names
from .decorators import resultify
from .designer import (
    CommMode,
    DesignResult,
    Scenario,
    SolverConfig,
    design,
    design_radar_only,
    design_zf_baseline,
    initialize_waveform,
)
from .exceptions import (
    InfeasibleScenarioError,
    ModelError,
    SolverError,
    StapSlpError,
    ValidationError,
)
from .experiments import ambiguity_map, build_scenario, run, sweep
from .geometry import ArrayConfig, TargetModel
from .operators import OperatorSet
from .result import Err, Ok, Result
from .waveforms import ConstraintVariant, VariantKind, build_reference_lfm

__all__ = [
    "ArrayConfig",
    "CommMode",
    "CommSetup",
    "ConstraintVariant",
    "DesignResult",
    "Err",
    "InfeasibleScenarioError",
    "ModelError",
    "Ok",
    "OperatorSet",
    "Result",
    "Scenario",
    "ScenarioConfig",
    "SolverConfig",
    "SolverError",
    "StapSlpError",
    "TargetModel",
    "ValidationError",
    "VariantKind",
    "ambiguity_map",
    "build_ci_constraints",
    "build_reference_lfm",
    "build_scenario",
    "build_zf_constraints",
    "design",
    "design_radar_only",
    "design_zf_baseline",
    "initialize_waveform",
    "load_config",
    "load_preset",
    "make_comm_setup",
    "preset_names",
    "resultify",
    "run",
    "sweep",
]
