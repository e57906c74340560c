from .bounds import derive_stage_bounds
from .common import StageBounds, TimedPlanResult
from .mla import plan_mla_star
from .pbs import Exterior, PbsConfig, PbsResult, SolverFailure, solve_pbs_pc
from .reservations import ReservationTable
from .sipps import plan_sipps

__all__ = [
    "Exterior",
    "PbsConfig",
    "PbsResult",
    "ReservationTable",
    "SolverFailure",
    "StageBounds",
    "TimedPlanResult",
    "derive_stage_bounds",
    "plan_mla_star",
    "plan_sipps",
    "solve_pbs_pc",
]
