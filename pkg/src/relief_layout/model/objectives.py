"""The four layout objectives: cost, coverage, supply gap and rescue time.

Batch functions take X (B, J), y (B, J, F), Z (B, J, I) and return one
value per candidate. Objective vectors are stored as minimization:
(cost, -coverage, gap, time).
"""
from __future__ import annotations

import numpy as np

from .instance import CandidateSolution, ProblemInstance

OBJECTIVE_NAMES = ("cost", "coverage", "gap", "time")


def coverage_satisfaction(d: float, r: float, R: float) -> float:
    """Gradual coverage: 1 inside r, 0 beyond R, linear decay between."""
    if not 0 <= r <= R:
        raise ValueError("need 0 <= r <= R")
    if d <= r:
        return 1.0
    if d >= R:
        return 0.0
    return (R - d) / (R - r)


def coverage_satisfaction_array(d, r, R) -> np.ndarray:
    d, r, R = np.broadcast_arrays(np.asarray(d, float), np.asarray(r, float), np.asarray(R, float))
    span = R - r
    with np.errstate(divide="ignore", invalid="ignore"):
        ramp = np.where(span > 0, (R - d) / np.where(span > 0, span, 1.0), 0.0)
    return np.where(d <= r, 1.0, np.where(d >= R, 0.0, ramp))


def cost_batch(inst: ProblemInstance, X, y, Z) -> np.ndarray:
    a = inst.arrays
    gate = np.where(a["gated"], X, 1)
    variable = np.einsum("bj,bji,ji->b", gate, Z, a["unit_cost"])
    return X @ a["fixed_cost"] + variable


def coverage_batch(inst: ProblemInstance, X, y, Z) -> np.ndarray:
    a = inst.arrays
    return np.einsum("bjf,j,jf->b", y, a["coverage_share"], a["satisfaction"])


def attributed_supply_batch(inst: ProblemInstance, y, Z) -> np.ndarray:
    """Supply credited to each (area, material), shape (B, F, I).

    Each supplier's stock of a material is split among the areas it serves
    in proportion to their demand for that material.
    """
    dem = inst.arrays["demand"]
    served = np.einsum("bjf,fi->bji", y, dem)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(served > 0, Z / np.where(served > 0, served, 1.0), 0.0)
    return np.einsum("bjf,bji->bfi", y, ratio) * dem


def gap_batch(inst: ProblemInstance, X, y, Z) -> np.ndarray:
    short = inst.arrays["demand"] - attributed_supply_batch(inst, y, Z)
    return np.clip(short, 0.0, None).sum(axis=(1, 2))


def area_arrival_batch(inst: ProblemInstance, y) -> tuple[np.ndarray, np.ndarray]:
    """Worst arrival time per area (B, F) and a mask of areas nobody serves."""
    t = np.where(y > 0, inst.arrays["time"], -np.inf).max(axis=1)
    unserved = ~np.isfinite(t)
    return np.where(unserved, inst.big_m_value, t), unserved


def time_batch(inst: ProblemInstance, X, y, Z) -> np.ndarray:
    per_area, _ = area_arrival_batch(inst, y)
    return per_area.sum(axis=1)


def objectives_batch(inst: ProblemInstance, X, y, Z) -> np.ndarray:
    """(B, 4) minimization vectors (cost, -coverage, gap, time)."""
    X, y, Z = _as_batch(X, y, Z)
    return np.stack([
        cost_batch(inst, X, y, Z),
        -coverage_batch(inst, X, y, Z),
        gap_batch(inst, X, y, Z),
        time_batch(inst, X, y, Z),
    ], axis=1)


def _as_batch(X, y, Z):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    Z = np.asarray(Z, dtype=float)
    if X.ndim == 1:
        X, y, Z = X[None], y[None], Z[None]
    return X, y, Z


def _single(fn, sol: CandidateSolution, inst: ProblemInstance) -> float:
    sol.check_shape(inst)
    X, y, Z = _as_batch(sol.X, sol.y, sol.Z)
    return float(fn(inst, X, y, Z)[0])


def evaluate_cost(sol: CandidateSolution, inst: ProblemInstance) -> float:
    return _single(cost_batch, sol, inst)


def evaluate_coverage(sol: CandidateSolution, inst: ProblemInstance) -> float:
    """Coverage expectation, reported positive (higher is better)."""
    return _single(coverage_batch, sol, inst)


def evaluate_supply_gap(sol: CandidateSolution, inst: ProblemInstance) -> float:
    return _single(gap_batch, sol, inst)


def evaluate_rescue_time(sol: CandidateSolution, inst: ProblemInstance) -> float:
    """Sum over areas of the slowest serving link; unserved areas cost big-M hours."""
    return _single(time_batch, sol, inst)


def unserved_areas(sol: CandidateSolution, inst: ProblemInstance) -> list[str]:
    sol.check_shape(inst)
    _, mask = area_arrival_batch(inst, np.asarray(sol.y, dtype=float)[None])
    return [inst.area_ids[f] for f in np.flatnonzero(mask[0])]
