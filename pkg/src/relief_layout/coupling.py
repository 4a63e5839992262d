"""Disaster coupling analysis.

AHP indicator weights, consistency checking, grey relational coefficients,
efficiency scoring and the multi-system coupling degree used to build
compound-disaster demand scenarios.
"""
from __future__ import annotations

import csv
import itertools
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from .errors import DegenerateRange, DimensionError, InstanceTooSmall, InvalidMatrix

logger = logging.getLogger(__name__)

# Saaty random consistency index
RANDOM_INDEX = {1: 0.0, 2: 0.0, 3: 0.58, 4: 0.90, 5: 1.12, 6: 1.24, 7: 1.32}

RECIPROCAL_TOL = 1e-6
CONSISTENT_CR = 0.1


@dataclass(frozen=True)
class PairwiseMatrix:
    entries: np.ndarray
    declared_reciprocal: bool = False
    reciprocal: bool = field(init=False)

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidMatrix(f"judgment matrix must be square, got shape {a.shape}")
        if not np.all(np.isfinite(a)) or np.any(a <= 0):
            raise InvalidMatrix("judgment matrix entries must be finite and > 0")
        if not np.allclose(np.diag(a), 1.0):
            raise InvalidMatrix("judgment matrix diagonal must be 1")
        prod = a * a.T
        reciprocal = bool(np.all(np.abs(prod - 1.0) <= RECIPROCAL_TOL))
        if self.declared_reciprocal and not reciprocal:
            raise InvalidMatrix("matrix declared reciprocal but a_ij * a_ji != 1")
        if not reciprocal:
            logger.warning("judgment matrix is not exactly reciprocal (max |a_ij*a_ji - 1| = %.3g); "
                           "loaded verbatim", float(np.max(np.abs(prod - 1.0))))
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)
        object.__setattr__(self, "reciprocal", reciprocal)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def from_csv(cls, path: str | Path, declared_reciprocal: bool = False) -> "PairwiseMatrix":
        """Read n header-less rows of n floats."""
        with open(path, newline="") as fh:
            rows = [[float(v) for v in row] for row in csv.reader(fh) if row and any(c.strip() for c in row)]
        return cls(np.array(rows), declared_reciprocal=declared_reciprocal)


@dataclass(frozen=True)
class ConsistencyReport:
    lambda_max: float
    cr: float
    ri_used: float
    consistent: bool
    ri_degenerate: bool = False


@dataclass(frozen=True)
class SubsystemEfficiency:
    composite: float
    efficiency: float
    polarity: str
    alpha: float = 1.0
    beta: float = 0.0
    clamped: bool = False


def ahp_weights(matrix: PairwiseMatrix) -> np.ndarray:
    """Row geometric means of the judgment matrix, normalized to sum 1."""
    if matrix.n < 2:
        raise InstanceTooSmall("AHP needs at least 2 indicators")
    gm = np.exp(np.log(matrix.entries).mean(axis=1))
    return gm / gm.sum()


def consistency_ratio(matrix: PairwiseMatrix, weights: Sequence[float]) -> ConsistencyReport:
    w = np.asarray(weights, dtype=float)
    n = matrix.n
    if w.shape != (n,):
        raise DimensionError(f"expected {n} weights, got {w.shape}")
    lambda_max = float(np.mean(matrix.entries @ w / w))
    ri = RANDOM_INDEX.get(n)
    if ri is None:
        raise InvalidMatrix(f"no random index tabulated for n={n} (supported: 1..7)")
    if ri == 0.0:
        return ConsistencyReport(lambda_max, 0.0, ri, True, ri_degenerate=True)
    # rounding can leave lambda_max a hair below n for consistent matrices
    cr = max(0.0, (lambda_max - n) / ((n - 1) * ri))
    return ConsistencyReport(lambda_max, cr, ri, cr < CONSISTENT_CR)


def default_reference(values: np.ndarray) -> np.ndarray:
    """Per-indicator maximum over the scenario set (rows)."""
    return np.asarray(values, dtype=float).max(axis=0)


def grey_relational(values: Sequence[float], reference: Sequence[float], rho: float = 0.5) -> np.ndarray:
    """Grey relational coefficients of one series against its optimal reference."""
    if not 0 < rho <= 1:
        raise ValueError("rho must be in (0, 1]")
    d = np.asarray(values, dtype=float)
    ref = np.asarray(reference, dtype=float)
    if d.shape != ref.shape:
        raise DimensionError(f"series length {d.shape} != reference length {ref.shape}")
    delta = np.abs(d - ref)
    dmin, dmax = delta.min(), delta.max()
    if dmax == 0:
        return np.ones_like(delta)
    return (dmin + rho * dmax) / (delta + rho * dmax)


def composite_index(weights: Sequence[float], coefficients: Sequence[float]) -> float:
    w = np.asarray(weights, dtype=float)
    p = np.asarray(coefficients, dtype=float)
    if w.shape != p.shape:
        raise DimensionError(f"{w.shape[0]} weights vs {p.shape[0]} coefficients")
    return float(w @ p)


def efficiency(x: float, polarity: Literal["positive", "negative"] = "positive",
               alpha: float = 1.0, beta: float = 0.0) -> SubsystemEfficiency:
    if alpha == beta:
        raise DegenerateRange("alpha and beta must differ")
    if alpha < beta:
        raise DegenerateRange("alpha must exceed beta")
    if polarity not in ("positive", "negative"):
        raise ValueError(f"unknown polarity {polarity!r}")
    xc = min(max(x, beta), alpha)
    if xc != x:
        logger.debug("composite %.6g clamped into [%g, %g]", x, beta, alpha)
    if polarity == "positive":
        mu = (xc - beta) / (alpha - beta)
    else:
        mu = (alpha - xc) / (alpha - beta)
    return SubsystemEfficiency(x, mu, polarity, alpha, beta, clamped=xc != x)


def efficiency_score(x: float, polarity: Literal["positive", "negative"] = "positive",
                     alpha: float = 1.0, beta: float = 0.0) -> float:
    return efficiency(x, polarity, alpha, beta).efficiency


def coupling_degree(efficiencies: Sequence[float],
                    pair_convention: Literal["unordered", "ordered"] = "ordered") -> float:
    """Multi-system coupling degree C of subsystem efficiencies U_1..U_m.

    ``ordered`` (default) takes the denominator product over every i != j,
    so each pair sum appears twice and two fully efficient subsystems give
    C = 0.5. ``unordered`` takes each pair i < j once.
    """
    u = np.asarray(efficiencies, dtype=float)
    m = u.size
    if m < 2:
        raise InstanceTooSmall("coupling needs at least 2 subsystems")
    if np.any(u < 0) or np.any(u > 1):
        raise ValueError("efficiencies must lie in [0, 1]")
    if pair_convention == "unordered":
        pairs = itertools.combinations(range(m), 2)
    elif pair_convention == "ordered":
        pairs = itertools.permutations(range(m), 2)
    else:
        raise ValueError(f"unknown pair convention {pair_convention!r}")
    # log domain keeps large m from underflowing
    sums = np.array([u[i] + u[j] for i, j in pairs])
    if np.any(u == 0):
        return 0.0
    if np.all(sums == 0):
        logger.warning("all pair sums are zero; coupling degree set to 0")
        return 0.0
    log_c = np.log(u).sum() - 0.5 * np.log(sums).sum()
    return float(math.exp(log_c))


@dataclass
class CouplingReport:
    weights: list[float]
    lambda_max: float
    cr: float
    consistent: bool
    subsystems: list[str]
    coefficients: list[list[float]]
    composites: list[float]
    efficiencies: list[float]
    coupling_degree: float
    pair_convention: str = "ordered"
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "weights": self.weights,
            "lambda_max": self.lambda_max,
            "cr": self.cr,
            "consistent": self.consistent,
            "subsystems": self.subsystems,
            "coefficients": self.coefficients,
            "composites": self.composites,
            "efficiencies": self.efficiencies,
            "coupling_degree": self.coupling_degree,
            "pair_convention": self.pair_convention,
            "warnings": self.warnings,
        }


def read_series_csv(path: str | Path) -> tuple[list[str], list[str], np.ndarray]:
    """Indicator series CSV: header ``subsystem,<indicator...>``, one row per disaster subsystem."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        names, rows = [], []
        for row in reader:
            if not row:
                continue
            names.append(row[0].strip())
            rows.append([float(v) for v in row[1:]])
    return names, [h.strip() for h in header[1:]], np.array(rows, dtype=float)


def analyze(matrix: PairwiseMatrix, names: Sequence[str], series: np.ndarray,
            reference: Sequence[float] | None = None, rho: float = 0.5,
            polarity: Literal["positive", "negative"] = "positive",
            pair_convention: Literal["unordered", "ordered"] = "ordered",
            active: Sequence[str] | None = None) -> CouplingReport:
    """Full coupling analysis for a set of disaster subsystems.

    Each row of ``series`` holds one subsystem's indicator values; the
    coupling degree is taken over the ``active`` subsystems (all by default).
    """
    series = np.asarray(series, dtype=float)
    if series.ndim != 2 or series.shape[1] != matrix.n:
        raise DimensionError(f"series must have {matrix.n} indicator columns, got shape {series.shape}")
    warnings = [] if matrix.reciprocal else ["judgment matrix is not exactly reciprocal"]
    w = ahp_weights(matrix)
    cons = consistency_ratio(matrix, w)
    if not cons.consistent:
        warnings.append(f"consistency ratio {cons.cr:.4f} >= {CONSISTENT_CR}")
    ref = default_reference(series) if reference is None else np.asarray(reference, dtype=float)
    coeffs, composites, effs = [], [], []
    for row in series:
        lam = grey_relational(row, ref, rho)
        x = composite_index(w, lam)
        eff = efficiency(x, polarity)
        if eff.clamped:
            warnings.append(f"composite {x:.6g} clamped into [0, 1]")
        coeffs.append(lam.tolist())
        composites.append(x)
        effs.append(eff.efficiency)
    names = list(names)
    chosen = names if active is None else list(active)
    missing = [a for a in chosen if a not in names]
    if missing:
        raise KeyError(f"unknown subsystems {missing}")
    c = coupling_degree([effs[names.index(a)] for a in chosen], pair_convention)
    return CouplingReport(w.tolist(), cons.lambda_max, cons.cr, cons.consistent, names,
                          coeffs, composites, effs, c, pair_convention, warnings)
