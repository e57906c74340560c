from .acceptance import AcceptanceState, accept_candidate
from .neighborhood import Neighborhood, close_and_excise
from .operators import OPERATORS, Diagnostics, Portfolio, seed_tasks, select_operator, update_weights
from .proposal import ProposalFailure, RepairProposal, build_proposal, mutable_agents
from .repair import Candidate, RepairFailure, regret_value, repair_neighborhood, repair_regret
from .search import LnsConfig, LnsResult, RunTrace, post_refine, run_lns

__all__ = [
    "AcceptanceState",
    "Candidate",
    "Diagnostics",
    "LnsConfig",
    "LnsResult",
    "Neighborhood",
    "OPERATORS",
    "Portfolio",
    "ProposalFailure",
    "RepairFailure",
    "RepairProposal",
    "RunTrace",
    "accept_candidate",
    "build_proposal",
    "close_and_excise",
    "mutable_agents",
    "post_refine",
    "regret_value",
    "repair_neighborhood",
    "repair_regret",
    "run_lns",
    "seed_tasks",
    "select_operator",
    "update_weights",
]
