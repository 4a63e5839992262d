"""Compound-disaster demand scenarios."""
from __future__ import annotations

from dataclasses import dataclass

from ..errors import UnknownScenario
from .instance import ProblemInstance

RISK_REFERENCE = 10.0

# coupling index and risk index per co-occurring disaster set (historical Sichuan data)
REFERENCE_SCENARIOS = {
    frozenset({"flood", "mudslide"}): (0.499, 8.58),
    frozenset({"flood", "earthquake"}): (0.498, 8.31),
    frozenset({"earthquake", "mudslide"}): (0.286, 7.97),
    frozenset({"earthquake", "flood", "mudslide"}): (0.283, 7.73),
}


@dataclass(frozen=True)
class DisasterScenario:
    active: tuple[str, ...]
    coupling: float | None = None
    risk_index: float = 0.0
    risk_reference: float = RISK_REFERENCE

    def __post_init__(self):
        object.__setattr__(self, "active", tuple(self.active))
        if self.coupling is not None and not 0 <= self.coupling <= 1:
            raise ValueError("coupling degree must lie in [0, 1]")
        if self.risk_index < 0:
            raise ValueError("risk index must be >= 0")
        if self.risk_reference <= 0:
            raise ValueError("risk reference must be > 0")

    @classmethod
    def reference(cls, *disasters: str) -> "DisasterScenario":
        key = frozenset(disasters)
        if key not in REFERENCE_SCENARIOS:
            raise UnknownScenario(f"no reference coupling for {sorted(key)}")
        c, risk = REFERENCE_SCENARIOS[key]
        return cls(tuple(sorted(key)), c, risk)

    @property
    def factor(self) -> float:
        if self.coupling is None or len(self.active) < 2:
            return 1.0
        return 1.0 + self.coupling * self.risk_index / self.risk_reference


def coupled_demand(base: ProblemInstance, scenario: DisasterScenario) -> ProblemInstance:
    """Scale demand in areas hit by an active disaster by 1 + C * risk / risk_ref."""
    known = {a.disaster_type for a in base.areas}
    unknown = [d for d in scenario.active if d not in known]
    if unknown:
        raise UnknownScenario(f"scenario names disaster types absent from the instance: {unknown}")
    k = scenario.factor
    if k == 1.0:
        return base
    active = set(scenario.active)
    demands = {a.id: {m: v * k for m, v in a.demand.items()} for a in base.areas if a.disaster_type in active}
    return base.with_demands(demands)
