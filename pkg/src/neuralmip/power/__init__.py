from .ptdf import PtdfNumericalError, compute_ptdf, dc_flows, incidence
from .scenarios import base_shape, draw_bus_weights, generate_load_scenarios
from .system import (
    GeneratorParams,
    Line,
    LoadScenario,
    PowerSystemError,
    SystemSpec,
    TopologyError,
    UcInstance,
    desk_system,
    make_instance,
)
from .ucmodel import (
    DecodeError,
    UcSchedule,
    VariableMap,
    Violation,
    ViolationReport,
    build_uc_milp,
    decode_solution,
    encode_schedule,
    schedule_cost,
    segment_slopes,
    validate_schedule,
)

__all__ = [
    "DecodeError", "GeneratorParams", "Line", "LoadScenario", "PowerSystemError",
    "PtdfNumericalError", "SystemSpec", "TopologyError", "UcInstance", "UcSchedule",
    "VariableMap", "Violation", "ViolationReport", "base_shape", "build_uc_milp",
    "compute_ptdf", "dc_flows", "decode_solution", "desk_system", "draw_bus_weights",
    "encode_schedule", "generate_load_scenarios", "incidence", "make_instance",
    "schedule_cost", "segment_slopes", "validate_schedule",
]
