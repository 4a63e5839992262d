"""Intuitionistic fuzzy similarity and substitutability of emergency materials."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from .errors import DimensionError, EmptyInput, SchemaError

logger = logging.getLogger(__name__)

DEFAULT_HESITATION = 0.1


@dataclass(frozen=True)
class TriangularFuzzySet:
    a: float
    b: float
    c: float
    d_scale: float = 1.0
    label: str = ""

    def __post_init__(self):
        if not self.a <= self.b <= self.c:
            raise ValueError(f"fuzzy set needs a <= b <= c, got ({self.a}, {self.b}, {self.c})")
        if not 0 < self.d_scale <= 1:
            raise ValueError("d_scale must be in (0, 1]")

    @classmethod
    def from_points(cls, points: Sequence[float], label: str = "", d_scale: float = 1.0) -> "TriangularFuzzySet":
        """Accept (a, b, c) or a degenerate trapezoid (a, b, c, c)."""
        pts = [float(p) for p in points]
        if len(pts) == 4:
            if pts[3] != pts[2]:
                raise ValueError(f"only trapezoids of the form (a, b, c, c) are supported, got {pts}")
            pts = pts[:3]
        if len(pts) != 3:
            raise ValueError(f"fuzzy set needs 3 points, got {pts}")
        return cls(*pts, d_scale=d_scale, label=label)


# transport convenience levels on the normalized [0, 1] scale
CONVENIENCE_LEVELS = (
    TriangularFuzzySet(0.0, 0.0, 0.2, label="very convenient"),
    TriangularFuzzySet(0.12, 0.32, 0.52, label="convenient"),
    TriangularFuzzySet(0.44, 0.64, 0.84, label="fair"),
    TriangularFuzzySet.from_points((0.76, 0.96, 1.16, 1.16), label="inconvenient"),
)


@dataclass(frozen=True)
class FuzzyProfile:
    mu: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        nu = np.asarray(self.nu, dtype=float)
        if mu.shape != nu.shape:
            raise DimensionError("membership and non-membership lengths differ")
        if np.any(mu < 0) or np.any(mu > 1) or np.any(nu < 0) or np.any(nu > 1):
            raise ValueError("memberships must lie in [0, 1]")
        if np.any(mu + nu > 1 + 1e-12):
            raise ValueError("intuitionistic condition mu + nu <= 1 violated")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "nu", nu)

    def __len__(self) -> int:
        return self.mu.shape[0]


@dataclass(frozen=True)
class SimilarityResult:
    value: float
    pair: tuple[str, str] = ("", "")


@dataclass(frozen=True)
class MaterialProfile:
    material_id: str
    kind_hint: str = ""
    factors: tuple[float, ...] = ()
    conversion_coefficient: float | None = None
    converted_area: float | None = None
    max_rescue_time: float | None = None


def min_max_normalize(matrix) -> tuple[np.ndarray, list[int]]:
    """Column-wise min-max scaling; returns the scaled matrix and constant column indices."""
    x = np.asarray(matrix, dtype=float)
    if x.size == 0:
        raise EmptyInput("cannot normalize an empty matrix")
    x = np.atleast_2d(x)
    lo, hi = x.min(axis=0), x.max(axis=0)
    span = hi - lo
    constant = [int(j) for j in np.flatnonzero(span == 0)]
    if constant:
        logger.warning("constant attribute columns %s normalized to 0", constant)
    out = np.zeros_like(x)
    nz = span > 0
    out[:, nz] = (x[:, nz] - lo[nz]) / span[nz]
    return out, constant


def _standard_mu(x: float, s: TriangularFuzzySet) -> float:
    a, b, c, D = s.a, s.b, s.c, s.d_scale
    if x == b:
        return D
    if a < x < b:
        return D * (x - a) / (b - a)
    if b < x < c:
        return D * (c - x) / (c - b)
    return 0.0


def _inverted_mu(x: float, s: TriangularFuzzySet) -> float:
    a, b, c, D = s.a, s.b, s.c, s.d_scale
    if a <= x < b:
        return (1 - (x - a) / (b - a)) * D
    if b <= x < c:
        return (1 - (c - x) / (c - b)) * D
    return 1.0


def membership(x: float, fuzzy_set: TriangularFuzzySet,
               variant: Literal["standard", "inverted"] = "standard",
               hesitation_margin: float = DEFAULT_HESITATION) -> tuple[float, float]:
    """(mu, nu) of ``x`` in ``fuzzy_set``; nu = (1 - mu) * (1 - hesitation_margin)."""
    if not np.isfinite(x):
        raise ValueError("x must be finite")
    if not 0 <= hesitation_margin <= 1:
        raise ValueError("hesitation_margin must be in [0, 1]")
    if variant == "standard":
        mu = _standard_mu(x, fuzzy_set)
    elif variant == "inverted":
        mu = _inverted_mu(x, fuzzy_set)
    else:
        raise ValueError(f"unknown membership variant {variant!r}")
    mu = min(max(mu, 0.0), 1.0)
    return mu, (1.0 - mu) * (1.0 - hesitation_margin)


def dispersion_weights(matrix) -> tuple[np.ndarray, bool]:
    """Population standard deviation of each factor column, normalized to sum 1.

    Returns (weights, degenerate); degenerate is True when every column is
    constant and uniform weights were substituted.
    """
    x = np.atleast_2d(np.asarray(matrix, dtype=float))
    if x.shape[0] < 2:
        raise EmptyInput("dispersion weights need at least 2 rows")
    s = x.std(axis=0, ddof=0)
    total = s.sum()
    if total == 0:
        logger.warning("all factors have zero dispersion; using uniform weights")
        return np.full(x.shape[1], 1.0 / x.shape[1]), True
    return s / total, False


def _ratio(num: float, den: float) -> float:
    return 1.0 if den == 0 else num / den


def similarity(profile_a: FuzzyProfile, profile_b: FuzzyProfile, weights: Sequence[float],
               pair: tuple[str, str] = ("", "")) -> SimilarityResult:
    w = np.asarray(weights, dtype=float)
    if len(profile_a) != len(profile_b) or w.shape[0] != len(profile_a):
        raise DimensionError("profiles and weights must have the same factor count")
    mu_part = _ratio(float(w @ np.minimum(profile_a.mu, profile_b.mu)),
                     float(w @ np.maximum(profile_a.mu, profile_b.mu)))
    nu_part = _ratio(float(w @ np.minimum(profile_a.nu, profile_b.nu)),
                     float(w @ np.maximum(profile_a.nu, profile_b.nu)))
    return SimilarityResult(0.5 * (mu_part + nu_part), pair)


def comprehensive_evaluation(sims: Sequence[SimilarityResult | float], weights: Sequence[float]) -> float:
    vals = np.array([s.value if isinstance(s, SimilarityResult) else float(s) for s in sims])
    w = np.asarray(weights, dtype=float)
    if vals.shape != w.shape:
        raise DimensionError(f"{vals.shape[0]} similarities vs {w.shape[0]} weights")
    return float(w @ vals)


def factor_profile(x: float, levels: Sequence[TriangularFuzzySet], variant="standard",
                   hesitation_margin: float = DEFAULT_HESITATION) -> FuzzyProfile:
    """Memberships of one normalized factor value in every level set."""
    pairs = [membership(x, s, variant, hesitation_margin) for s in levels]
    return FuzzyProfile(np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs]))


@dataclass
class ClassificationResult:
    material_ids: list[str]
    similarity: np.ndarray
    factor_weights: np.ndarray
    groups: list[list[str]]
    group_kinds: list[str]
    warnings: list[str] = field(default_factory=list)

    def kind_of(self) -> dict[str, str]:
        return {m: kind for grp, kind in zip(self.groups, self.group_kinds) for m in grp}

    def to_dict(self) -> dict:
        return {
            "material_ids": self.material_ids,
            "factor_weights": self.factor_weights.tolist(),
            "similarity": self.similarity.tolist(),
            "groups": [{"members": g, "kind": k} for g, k in zip(self.groups, self.group_kinds)],
            "warnings": self.warnings,
        }


def similarity_matrix(catalog: Sequence[MaterialProfile],
                      levels: Sequence[TriangularFuzzySet] = CONVENIENCE_LEVELS,
                      variant: Literal["standard", "inverted"] = "standard",
                      hesitation_margin: float = DEFAULT_HESITATION) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Pairwise comprehensive evaluation values over the catalog.

    Factors are min-max normalized across materials, each factor value is
    profiled against every level set, per-factor similarities use uniform
    level weights, and the factor similarities are combined with
    dispersion weights.
    """
    if not catalog:
        raise EmptyInput("empty material catalog")
    raw = np.array([m.factors for m in catalog], dtype=float)
    if raw.ndim != 2 or raw.shape[1] == 0:
        raise DimensionError("every catalog entry needs the same non-empty factor vector")
    warnings = []
    norm, constant = min_max_normalize(raw)
    if constant:
        warnings.append(f"constant factor columns {constant}")
    n, k = norm.shape
    if n >= 2:
        fw, degenerate = dispersion_weights(raw)
        if degenerate:
            warnings.append("all factors constant; uniform factor weights")
    else:
        fw = np.full(k, 1.0 / k)
    lw = np.full(len(levels), 1.0 / len(levels))
    profiles = [[factor_profile(norm[i, f], levels, variant, hesitation_margin) for f in range(k)]
                for i in range(n)]
    sim = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            sims = [similarity(profiles[i][f], profiles[j][f], lw) for f in range(k)]
            sim[i, j] = sim[j, i] = comprehensive_evaluation(sims, fw)
    return sim, fw, warnings


def group_by_threshold(sim: np.ndarray, threshold: float) -> list[list[int]]:
    """Single-link grouping: i and j share a group when linked by a chain of sims >= threshold."""
    n = sim.shape[0]
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if sim[i, j] >= threshold:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def _group_kind(hints: list[str]) -> str:
    special = sum(h == "special" for h in hints)
    general = sum(h in ("general", "common") for h in hints)
    if special == 0 and general == 0:
        return "general"
    return "special" if special >= general else "general"


def cluster_materials(catalog: Sequence[MaterialProfile], threshold: float = 0.8,
                      levels: Sequence[TriangularFuzzySet] = CONVENIENCE_LEVELS,
                      variant: Literal["standard", "inverted"] = "standard",
                      hesitation_margin: float = DEFAULT_HESITATION) -> ClassificationResult:
    if not catalog:
        raise EmptyInput("empty material catalog")
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    sim, fw, warnings = similarity_matrix(catalog, levels, variant, hesitation_margin)
    ids = [m.material_id for m in catalog]
    idx_groups = group_by_threshold(sim, threshold)
    groups = [[ids[i] for i in g] for g in idx_groups]
    kinds = [_group_kind([catalog[i].kind_hint.strip().lower() for i in g]) for g in idx_groups]
    return ClassificationResult(ids, sim, fw, groups, kinds, warnings)


def read_catalog_csv(path: str | Path) -> list[MaterialProfile]:
    """Catalog CSV: ``material_id,kind_hint,<factor columns...>``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        for col in ("material_id", "kind_hint"):
            if col not in header:
                raise SchemaError(f"{path}: missing column {col!r}")
        i_id, i_kind = header.index("material_id"), header.index("kind_hint")
        factor_cols = [i for i in range(len(header)) if i not in (i_id, i_kind)]
        if not factor_cols:
            raise SchemaError(f"{path}: no factor columns")
        out = []
        for row in reader:
            if not row:
                continue
            out.append(MaterialProfile(row[i_id].strip(), row[i_kind].strip(),
                                       tuple(float(row[i]) for i in factor_cols)))
    if not out:
        raise EmptyInput(f"{path}: empty catalog")
    return out


def level_sets_from_config(spec: Sequence[dict]) -> list[TriangularFuzzySet]:
    """Config entries like ``{"label": "fair", "points": [0.44, 0.64, 0.84], "d": 1.0}``."""
    return [TriangularFuzzySet.from_points(s["points"], label=s.get("label", ""), d_scale=s.get("d", 1.0))
            for s in spec]
