"""Problem instance and candidate solution types for the joint-supplier layout model."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from ..errors import DimensionError, IntegrityError, RangeError

SPECIAL = "special"
COMMON = "common"
MATERIAL_KINDS = (SPECIAL, COMMON)

GOVERNMENT = "government"
FRAMEWORK = "framework"
EXISTING = "existing"
SUPPLIER_KINDS = (GOVERNMENT, FRAMEWORK, EXISTING)

# longest acceptable rescue time per specific material type, hours
MAX_RESCUE_TIME = MappingProxyType({
    "rescue_equipment": 0.5,
    "medical_supplies": 1.0,
    "food_daily_supplies": 3.0,
    "tents_logistics": 2.0,
})


@dataclass(frozen=True)
class Material:
    id: str
    kind: str
    converted_area: float
    max_rescue_time: float
    conversion_coefficient: float | None = None
    specific_type: str = ""

    def __post_init__(self):
        if self.kind not in MATERIAL_KINDS:
            raise RangeError(f"material {self.id}: kind must be one of {MATERIAL_KINDS}")
        if not self.converted_area > 0:
            raise RangeError(f"material {self.id}: converted area must be > 0")
        if not self.max_rescue_time > 0:
            raise RangeError(f"material {self.id}: max rescue time must be > 0")
        if self.kind == COMMON:
            if self.conversion_coefficient is None or self.conversion_coefficient < 0:
                raise RangeError(f"common material {self.id} needs a conversion coefficient >= 0")
        elif self.conversion_coefficient is not None:
            raise RangeError(f"special material {self.id} must not carry a conversion coefficient")

    @property
    def demand_multiplier(self) -> float:
        return self.conversion_coefficient if self.kind == COMMON else 1.0


@dataclass(frozen=True)
class DisasterArea:
    id: str
    disaster_type: str
    demand: Mapping[str, float]
    longitude: float = 0.0
    latitude: float = 0.0
    attributes: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for m, d in self.demand.items():
            if d < 0 or not math.isfinite(d):
                raise RangeError(f"area {self.id}: demand for {m} must be finite and >= 0")
        object.__setattr__(self, "demand", MappingProxyType(dict(self.demand)))
        object.__setattr__(self, "attributes", MappingProxyType(dict(self.attributes)))


@dataclass(frozen=True)
class Supplier:
    id: str
    kind: str
    capacity_area: float
    unit_costs: Mapping[str, float]
    coverage_share: float
    fixed_cost: float = 0.0
    stock: Mapping[str, float] = field(default_factory=dict)
    location: str = ""
    longitude: float = 0.0
    latitude: float = 0.0

    def __post_init__(self):
        if self.kind not in SUPPLIER_KINDS:
            raise RangeError(f"supplier {self.id}: kind must be one of {SUPPLIER_KINDS}")
        if not self.capacity_area > 0:
            raise RangeError(f"supplier {self.id}: capacity must be > 0")
        if self.fixed_cost < 0 or any(c < 0 for c in self.unit_costs.values()):
            raise RangeError(f"supplier {self.id}: costs must be >= 0")
        if self.kind != GOVERNMENT and self.fixed_cost != 0:
            raise RangeError(f"supplier {self.id}: only government suppliers carry a fixed cost")
        if not 0 <= self.coverage_share <= 1:
            raise RangeError(f"supplier {self.id}: coverage share must be in [0, 1]")
        if any(s < 0 for s in self.stock.values()):
            raise RangeError(f"supplier {self.id}: stock must be >= 0")
        if self.kind != EXISTING and any(s != 0 for s in self.stock.values()):
            raise RangeError(f"supplier {self.id}: only existing suppliers hold stock")
        object.__setattr__(self, "unit_costs", MappingProxyType(dict(self.unit_costs)))
        object.__setattr__(self, "stock", MappingProxyType(dict(self.stock)))


@dataclass(frozen=True)
class LinkData:
    distance: float
    speed: float
    min_radius: float
    max_radius: float

    def __post_init__(self):
        if self.distance < 0:
            raise RangeError("link distance must be >= 0")
        if not self.speed > 0:
            raise RangeError("link speed must be > 0")
        if not 0 <= self.min_radius <= self.max_radius:
            raise RangeError("link radii must satisfy 0 <= r <= R")

    @property
    def time(self) -> float:
        return self.distance / self.speed


@dataclass(frozen=True)
class CountBounds:
    """Selectable supplier counts per kind, plus an optional overall range."""
    per_kind: Mapping[str, tuple[int, int]]
    total: tuple[int, int] | None = None

    def __post_init__(self):
        for kind, (lo, hi) in self.per_kind.items():
            if kind not in SUPPLIER_KINDS:
                raise RangeError(f"unknown supplier kind {kind!r} in bounds")
            if not 0 <= lo <= hi:
                raise RangeError(f"bounds for {kind}: need 0 <= min <= max, got ({lo}, {hi})")
        if self.total is not None and not 0 <= self.total[0] <= self.total[1]:
            raise RangeError("total bounds need 0 <= min <= max")
        object.__setattr__(self, "per_kind", MappingProxyType(
            {k: (int(lo), int(hi)) for k, (lo, hi) in self.per_kind.items()}))

    def for_kind(self, kind: str, available: int) -> tuple[int, int]:
        return self.per_kind.get(kind, (0, available))


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    materials: tuple[Material, ...]
    areas: tuple[DisasterArea, ...]
    suppliers: tuple[Supplier, ...]
    links: Mapping[tuple[str, str], LinkData]
    bounds: CountBounds
    big_m: float | None = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "materials", tuple(self.materials))
        object.__setattr__(self, "areas", tuple(self.areas))
        object.__setattr__(self, "suppliers", tuple(self.suppliers))
        object.__setattr__(self, "links", MappingProxyType(dict(self.links)))
        self._check_integrity()
        self._build_arrays()

    def _check_integrity(self):
        for label, items in (("material", self.materials), ("area", self.areas), ("supplier", self.suppliers)):
            ids = [x.id for x in items]
            if len(set(ids)) != len(ids):
                raise IntegrityError(f"duplicate {label} ids")
        mids = {m.id for m in self.materials}
        aids = {a.id for a in self.areas}
        sids = {s.id for s in self.suppliers}
        for a in self.areas:
            bad = set(a.demand) - mids
            if bad:
                raise IntegrityError(f"area {a.id} demands unknown materials {sorted(bad)}")
        for s in self.suppliers:
            bad = (set(s.unit_costs) | set(s.stock)) - mids
            if bad:
                raise IntegrityError(f"supplier {s.id} references unknown materials {sorted(bad)}")
        for sid, aid in self.links:
            if sid not in sids:
                raise IntegrityError(f"link references unknown supplier {sid!r}")
            if aid not in aids:
                raise IntegrityError(f"link references unknown area {aid!r}")
        missing = [(s, a) for s in sids for a in aids if (s, a) not in self.links]
        if missing:
            raise IntegrityError(f"missing link data for {len(missing)} supplier/area pairs, e.g. {missing[0]}")
        q = {m.id: m.converted_area for m in self.materials}
        for s in self.suppliers:
            used = sum(q[m] * v for m, v in s.stock.items())
            if used > s.capacity_area * (1 + 1e-9):
                raise RangeError(f"existing stock at {s.id} occupies {used} m2 > capacity {s.capacity_area}")

    def _build_arrays(self):
        J, F, I = len(self.suppliers), len(self.areas), len(self.materials)
        mid = [m.id for m in self.materials]
        arr = {}
        arr["kind"] = np.array([SUPPLIER_KINDS.index(s.kind) for s in self.suppliers], dtype=np.int8)
        arr["capacity"] = np.array([s.capacity_area for s in self.suppliers], dtype=float)
        arr["fixed_cost"] = np.array([s.fixed_cost for s in self.suppliers], dtype=float)
        arr["unit_cost"] = np.array([[s.unit_costs.get(m, 0.0) for m in mid] for s in self.suppliers],
                                    dtype=float).reshape(J, I)
        arr["stock"] = np.array([[s.stock.get(m, 0.0) for m in mid] for s in self.suppliers],
                                dtype=float).reshape(J, I)
        arr["coverage_share"] = np.array([s.coverage_share for s in self.suppliers], dtype=float)
        arr["area_per_unit"] = np.array([m.converted_area for m in self.materials], dtype=float)
        arr["special"] = np.array([m.kind == SPECIAL for m in self.materials], dtype=bool)
        arr["max_time"] = np.array([m.max_rescue_time for m in self.materials], dtype=float)
        mult = np.array([m.demand_multiplier for m in self.materials], dtype=float)
        raw = np.array([[a.demand.get(m, 0.0) for m in mid] for a in self.areas], dtype=float).reshape(F, I)
        arr["raw_demand"] = raw
        arr["demand"] = raw * mult
        links = [[self.links[(s.id, a.id)] for a in self.areas] for s in self.suppliers]
        arr["distance"] = np.array([[l.distance for l in row] for row in links], dtype=float).reshape(J, F)
        arr["speed"] = np.array([[l.speed for l in row] for row in links], dtype=float).reshape(J, F)
        arr["min_radius"] = np.array([[l.min_radius for l in row] for row in links], dtype=float).reshape(J, F)
        arr["max_radius"] = np.array([[l.max_radius for l in row] for row in links], dtype=float).reshape(J, F)
        arr["time"] = arr["distance"] / arr["speed"]
        from .objectives import coverage_satisfaction_array
        arr["satisfaction"] = coverage_satisfaction_array(arr["distance"], arr["min_radius"], arr["max_radius"])
        arr["gated"] = arr["kind"] != SUPPLIER_KINDS.index(EXISTING)
        total_demand = arr["demand"].sum(axis=0)
        arr["demand_scale"] = np.where(total_demand > 0, total_demand, 1.0)
        for a in arr.values():
            a.setflags(write=False)
        object.__setattr__(self, "_arr", MappingProxyType(arr))
        bm = self.big_m if self.big_m is not None else 10.0 * max(float(arr["demand"].sum()), 1.0)
        object.__setattr__(self, "big_m_value", float(bm))

    @property
    def arrays(self) -> Mapping[str, np.ndarray]:
        return self._arr

    @property
    def shape(self) -> tuple[int, int, int]:
        """(suppliers, areas, materials)."""
        return len(self.suppliers), len(self.areas), len(self.materials)

    @property
    def material_ids(self) -> list[str]:
        return [m.id for m in self.materials]

    @property
    def area_ids(self) -> list[str]:
        return [a.id for a in self.areas]

    @property
    def supplier_ids(self) -> list[str]:
        return [s.id for s in self.suppliers]

    def kind_indices(self, kind: str) -> np.ndarray:
        return np.flatnonzero(self._arr["kind"] == SUPPLIER_KINDS.index(kind))

    def count_bounds(self, kind: str) -> tuple[int, int]:
        return self.bounds.for_kind(kind, len(self.kind_indices(kind)))

    @property
    def n_decision_variables(self) -> int:
        J, F, I = self.shape
        return J + J * F + J * I

    @property
    def n_constraints(self) -> int:
        """Scalar constraint rows of the model (bounds counted as two rows each)."""
        J, F, I = self.shape
        n_special = int(self._arr["special"].sum())
        n_existing = len(self.kind_indices(EXISTING))
        counts = 2 * len(SUPPLIER_KINDS) + (2 if self.bounds.total is not None else 0)
        capacity = J
        demand = F * I
        big_m = J * n_special
        linkage = J * F
        stocking = J + J * I
        service = F
        rescue_time = J * F * I
        existing_stock = n_existing * I
        return counts + capacity + demand + big_m + linkage + stocking + service + rescue_time + existing_stock

    def with_demands(self, demands: Mapping[str, Mapping[str, float]]) -> "ProblemInstance":
        """Copy with area demands replaced (areas missing from ``demands`` keep theirs)."""
        unknown = set(demands) - set(self.area_ids)
        if unknown:
            raise IntegrityError(f"demands reference unknown areas {sorted(unknown)}")
        areas = tuple(replace(a, demand=dict(demands[a.id])) if a.id in demands else a for a in self.areas)
        return replace(self, areas=areas)

    def quantity_reference(self) -> np.ndarray:
        """Per-material reference amount: total effective demand over all areas."""
        return self._arr["demand"].sum(axis=0)

    def same_as(self, other: "ProblemInstance") -> bool:
        return (self.materials == other.materials and self.areas == other.areas
                and self.suppliers == other.suppliers and dict(self.links) == dict(other.links)
                and self.bounds == other.bounds and self.big_m_value == other.big_m_value)


@dataclass
class CandidateSolution:
    """Decision variables X (J,), y (J, F), Z (J, I) plus cached evaluation."""
    X: np.ndarray
    y: np.ndarray
    Z: np.ndarray
    objectives: np.ndarray | None = None
    violation_total: float | None = None
    generation: int | None = None
    seed: int | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X)
        self.y = np.asarray(self.y)
        self.Z = np.asarray(self.Z)

    @classmethod
    def empty(cls, inst: ProblemInstance) -> "CandidateSolution":
        J, F, I = inst.shape
        return cls(np.zeros(J, dtype=np.int64), np.zeros((J, F), dtype=np.int64), np.zeros((J, I), dtype=np.int64))

    @property
    def evaluated(self) -> bool:
        return self.objectives is not None and self.violation_total is not None

    @property
    def feasible(self) -> bool:
        return self.violation_total == 0

    def check_shape(self, inst: ProblemInstance) -> None:
        J, F, I = inst.shape
        if self.X.shape != (J,) or self.y.shape != (J, F) or self.Z.shape != (J, I):
            raise DimensionError(
                f"solution shapes X{self.X.shape} y{self.y.shape} Z{self.Z.shape} "
                f"do not match instance (J={J}, F={F}, I={I})")

    def copy(self) -> "CandidateSolution":
        return CandidateSolution(self.X.copy(), self.y.copy(), self.Z.copy(),
                                 None if self.objectives is None else self.objectives.copy(),
                                 self.violation_total, self.generation, self.seed)

    def key(self) -> bytes:
        return self.X.tobytes() + self.y.tobytes() + np.asarray(self.Z, dtype=float).tobytes()
