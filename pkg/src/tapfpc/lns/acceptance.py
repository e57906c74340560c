"""Threshold acceptance with a geometric cooling schedule."""

from __future__ import annotations

from dataclasses import dataclass

COOLING = 0.99975
INITIAL_FRACTION = 0.05


@dataclass
class AcceptanceState:
    t0: float
    cooling: float = COOLING
    relaxed: bool = False
    n: int = 0  # decays so far

    @classmethod
    def from_seed(cls, seed_soc: int, relaxed: bool = False) -> "AcceptanceState":
        return cls(INITIAL_FRACTION * seed_soc, relaxed=relaxed)

    @property
    def temperature(self) -> float:
        return self.t0 * self.cooling**self.n

    def decay(self) -> None:
        self.n += 1


def accept_candidate(
    candidate_soc: int,
    incumbent_soc: int,
    state: AcceptanceState,
    candidate_soft: int = 0,
    incumbent_soft: int = 0,
) -> bool:
    """Accept iff J_cand < J_inc + T (and, relaxed, no more soft conflicts); then cool once."""
    ok = candidate_soc < incumbent_soc + state.temperature
    if state.relaxed:
        ok = ok and candidate_soft <= incumbent_soft
    state.decay()
    return ok
