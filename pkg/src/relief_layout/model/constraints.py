"""Constraint checking with normalized violation magnitudes.

Every family reports non-negative amounts in its natural unit (supplier
counts, m2, material units, hours); amounts are divided by the family's
scale before being summed into the violation total used for
constraint-domination.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .instance import (EXISTING, FRAMEWORK, GOVERNMENT, SUPPLIER_KINDS, CandidateSolution,
                       ProblemInstance)
from .objectives import _as_batch

# (family id, core model rule or operational add-on)
FAMILIES = (
    ("total_count", True),
    ("government_count", True),
    ("framework_count", True),
    ("existing_count", True),
    ("government_capacity", True),
    ("existing_capacity", True),
    ("framework_capacity", True),
    ("common_demand", True),
    ("special_demand", True),
    ("special_service_link", True),
    ("service_activation", True),
    ("stocking_link", True),
    ("area_service", True),
    ("binary_domain", True),
    ("nonnegative_quantity", True),
    ("rescue_time", False),
    ("existing_stock", False),
)
FAMILY_IDS = tuple(f for f, _ in FAMILIES)
NUMBERED_FAMILIES = tuple(f for f, core in FAMILIES if core)

REL_TOL = 1e-9


@dataclass(frozen=True)
class Violation:
    family: str
    location: tuple
    amount: float
    normalized: float


@dataclass
class ConstraintReport:
    violations: list[Violation] = field(default_factory=list)
    total: float = 0.0

    @property
    def feasible(self) -> bool:
        return self.total == 0

    def families(self) -> set[str]:
        return {v.family for v in self.violations}

    def by_family(self, family: str) -> list[Violation]:
        return [v for v in self.violations if v.family == family]


def _clean(amount: np.ndarray, scale) -> tuple[np.ndarray, np.ndarray]:
    """Clip to >= 0, zero out rounding noise, and return (amount, amount / scale)."""
    amount = np.clip(amount, 0.0, None)
    scale = np.broadcast_to(np.where(np.asarray(scale) > 0, scale, 1.0), amount.shape)
    amount = np.where(amount > REL_TOL * np.maximum(scale, 1.0), amount, 0.0)
    return amount, amount / scale


def _terms(inst: ProblemInstance, X, y, Z, detailed: bool):
    """Yield (family, location labels, amount, scale) with a leading batch axis on amounts."""
    a = inst.arrays
    B = X.shape[0]
    J, F, I = inst.shape
    kind = a["kind"]

    counts = {}
    for k in SUPPLIER_KINDS:
        counts[k] = X[:, kind == SUPPLIER_KINDS.index(k)].sum(axis=1)
    if inst.bounds.total is not None:
        lo, hi = inst.bounds.total
        n = X.sum(axis=1)
        amt = np.maximum(lo - n, 0) + np.maximum(n - hi, 0)
    else:
        amt = np.zeros(B)
    yield "total_count", ("all",), amt[:, None], 1.0
    for fam, k in (("government_count", GOVERNMENT), ("framework_count", FRAMEWORK), ("existing_count", EXISTING)):
        lo, hi = inst.count_bounds(k)
        n = counts[k]
        yield fam, (k,), (np.maximum(lo - n, 0) + np.maximum(n - hi, 0))[:, None], 1.0

    load = Z @ a["area_per_unit"]
    over = load - a["capacity"]
    for fam, k in (("government_capacity", GOVERNMENT), ("existing_capacity", EXISTING),
                   ("framework_capacity", FRAMEWORK)):
        mask = kind == SUPPLIER_KINDS.index(k)
        yield fam, ("supplier",), np.where(mask, over, 0.0), a["capacity"]

    dem = a["demand"]
    have = np.einsum("bjf,bji->bfi", y, Z)
    short = np.where(dem > 0, dem - have, 0.0)
    special = a["special"]
    yield "common_demand", ("area", "material"), np.where(~special, short, 0.0), dem
    yield "special_demand", ("area", "material"), np.where(special, short, 0.0), dem

    M = inst.big_m_value
    served = y.sum(axis=2)
    link = Z - M * served[:, :, None]
    yield "special_service_link", ("supplier", "material"), np.where(special, link, 0.0), a["demand_scale"]

    yield "service_activation", ("supplier", "area"), y - X[:, :, None], 1.0

    empty = X - Z.sum(axis=2)
    unselected = Z - M * X[:, :, None]
    yield "stocking_link", ("supplier",), np.minimum(empty, 1.0), 1.0
    yield "stocking_link", ("supplier", "material"), unselected, a["demand_scale"]

    yield "area_service", ("area",), 1.0 - y.sum(axis=1), 1.0

    yield "binary_domain", ("supplier",), np.minimum(np.abs(X), np.abs(X - 1)), 1.0
    yield "binary_domain", ("supplier", "area"), np.minimum(np.abs(y), np.abs(y - 1)), 1.0

    yield "nonnegative_quantity", ("supplier", "material"), -Z, a["demand_scale"]

    excess = np.clip(a["time"][:, :, None] - a["max_time"][None, None, :], 0.0, None)
    excess = np.where(dem[None, :, :] > 0, excess, 0.0)
    stocked = (Z > 0).astype(float)
    if detailed:
        amt = y[:, :, :, None] * stocked[:, :, None, :] * excess[None]
        yield "rescue_time", ("supplier", "area", "material"), amt, a["max_time"]
    else:
        tot = np.einsum("bjf,bji,jfi->b", y, stocked, excess / a["max_time"])
        yield "rescue_time", ("all",), tot[:, None], 1.0

    existing = kind == SUPPLIER_KINDS.index(EXISTING)
    yield "existing_stock", ("supplier", "material"), np.where(existing[:, None], Z - a["stock"], 0.0), \
        a["demand_scale"]


def violation_totals_batch(inst: ProblemInstance, X, y, Z) -> np.ndarray:
    X, y, Z = _as_batch(X, y, Z)
    total = np.zeros(X.shape[0])
    for _, _, amount, scale in _terms(inst, X, y, Z, detailed=False):
        _, norm = _clean(amount, scale)
        total += norm.reshape(X.shape[0], -1).sum(axis=1)
    return total


def _label(inst: ProblemInstance, kinds: tuple, idx: tuple) -> tuple:
    lookup = {"supplier": inst.supplier_ids, "area": inst.area_ids, "material": inst.material_ids}
    if kinds and kinds[0] in lookup:
        return tuple(lookup[k][i] for k, i in zip(kinds, idx))
    return kinds


def check_constraints(sol: CandidateSolution, inst: ProblemInstance) -> ConstraintReport:
    """Report every violated constraint of ``sol``; feasible iff the total is 0."""
    sol.check_shape(inst)
    X, y, Z = _as_batch(sol.X, sol.y, sol.Z)
    report = ConstraintReport()
    for fam, kinds, amount, scale in _terms(inst, X, y, Z, detailed=True):
        amt, norm = _clean(amount, scale)
        amt, norm = amt[0], norm[0]
        for idx in zip(*np.nonzero(amt)):
            loc = _label(inst, kinds, idx)
            report.violations.append(Violation(fam, loc, float(amt[idx]), float(norm[idx])))
    report.total = float(sum(v.normalized for v in report.violations))
    return report
