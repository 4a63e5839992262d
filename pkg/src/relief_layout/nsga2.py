"""Constraint-dominated NSGA-II over joint-supplier layouts, plus an exhaustive oracle.

Chromosome: bits for X (J) and y (J x F), and a level index per
(supplier, material) into the quantity grid. Level l of material i means
Z = ceil(quantity_levels[l] * D) units, where D is by default the demand
of the areas the supplier serves (see QuantityGrid).
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import NotEvaluated, SpaceTooLarge
from .model import (SUPPLIER_KINDS, CandidateSolution, ProblemInstance, objectives_batch,
                    violation_totals_batch)

logger = logging.getLogger(__name__)

DEFAULT_LEVELS = (0.0, 0.25, 0.5, 0.75, 1.0)
BRUTE_FORCE_LIMIT = 10 ** 7
QUANTITY_BASES = ("served", "total")


# ---------------------------------------------------------------- dominance

def dominates(a: CandidateSolution, b: CandidateSolution) -> bool:
    """Constraint-domination: feasibility first, then violation, then Pareto order."""
    if not (a.evaluated and b.evaluated):
        raise NotEvaluated("both solutions must be evaluated before comparison")
    fa, fb = a.violation_total == 0, b.violation_total == 0
    if fa and not fb:
        return True
    if fb and not fa:
        return False
    if not fa:
        return a.violation_total < b.violation_total
    oa, ob = np.asarray(a.objectives), np.asarray(b.objectives)
    return bool(np.all(oa <= ob) and np.any(oa < ob))


def domination_matrix(objs: np.ndarray, viol: np.ndarray | None = None) -> np.ndarray:
    """D[i, j] is True when solution i constraint-dominates solution j."""
    objs = np.asarray(objs, dtype=float)
    n = objs.shape[0]
    le = np.all(objs[:, None, :] <= objs[None, :, :], axis=2)
    lt = np.any(objs[:, None, :] < objs[None, :, :], axis=2)
    pareto = le & lt
    if viol is None:
        return pareto
    viol = np.asarray(viol, dtype=float)
    feas = viol == 0
    fi, fj = feas[:, None], feas[None, :]
    by_violation = ~fi & ~fj & (viol[:, None] < viol[None, :])
    d = (fi & ~fj) | by_violation | (fi & fj & pareto)
    d[np.arange(n), np.arange(n)] = False
    return d


def nondominated_ranks(objs: np.ndarray, viol: np.ndarray | None = None) -> list[np.ndarray]:
    """Fronts as index arrays, best first."""
    n = len(objs)
    if n == 0:
        return []
    d = domination_matrix(objs, viol)
    count = d.sum(axis=0)
    remaining = np.ones(n, dtype=bool)
    fronts = []
    while remaining.any():
        front = np.flatnonzero(remaining & (count == 0))
        fronts.append(front)
        remaining[front] = False
        count = count - d[front].sum(axis=0)
    return fronts


def crowding_distance(objs: np.ndarray) -> np.ndarray:
    """Crowding distance of the members of one front.

    Objectives that are constant across the front are skipped. When every
    objective is constant the first and last members get infinity.
    """
    objs = np.atleast_2d(np.asarray(objs, dtype=float))
    n, m = objs.shape
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    varying = False
    for k in range(m):
        col = objs[:, k]
        lo, hi = col.min(), col.max()
        if hi == lo:
            continue
        varying = True
        order = np.argsort(col, kind="stable")
        dist[order[0]] = dist[order[-1]] = np.inf
        gaps = (col[order[2:]] - col[order[:-2]]) / (hi - lo)
        dist[order[1:-1]] += gaps
    if not varying:
        dist[0] = dist[-1] = np.inf
    return dist


@dataclass
class Front:
    rank: int
    members: np.ndarray
    crowding: np.ndarray


def fast_nondominated_sort(population: Sequence[CandidateSolution]) -> list[Front]:
    if not population:
        return []
    for s in population:
        if not s.evaluated:
            raise NotEvaluated("population contains unevaluated solutions")
    objs = np.array([s.objectives for s in population], dtype=float)
    viol = np.array([s.violation_total for s in population], dtype=float)
    return [Front(r, idx, crowding_distance(objs[idx])) for r, idx in enumerate(nondominated_ranks(objs, viol))]


def pareto_filter(objs: np.ndarray) -> np.ndarray:
    """Indices of the non-dominated rows (duplicates of a non-dominated row are all kept)."""
    objs = np.asarray(objs, dtype=float)
    if len(objs) == 0:
        return np.zeros(0, dtype=int)
    order = np.lexsort(objs.T[::-1])
    pts = objs[order]
    keep = np.ones(len(pts), dtype=bool)
    for i in range(len(pts)):
        if not keep[i]:
            continue
        dominated = np.all(pts[i] <= pts, axis=1) & np.any(pts[i] < pts, axis=1)
        keep &= ~dominated
    return np.sort(order[keep])


# ---------------------------------------------------------------- encoding

@dataclass(frozen=True)
class EvolutionConfig:
    population_size: int = 100
    generations: int = 100
    crossover_rate: float = 0.9
    mutation_rate: float | None = None
    seed: int = 0
    quantity_levels: tuple[float, ...] = DEFAULT_LEVELS
    init_service_prob: float | None = None
    quantity_basis: str = "served"

    def __post_init__(self):
        if self.quantity_basis not in QUANTITY_BASES:
            raise ValueError(f"quantity_basis must be one of {QUANTITY_BASES}")
        if not isinstance(self.seed, (int, np.integer)) or isinstance(self.seed, bool):
            raise TypeError("seed must be an integer")
        if self.population_size < 4 or self.population_size % 2:
            raise ValueError("population_size must be even and >= 4")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if not 0 <= self.crossover_rate <= 1:
            raise ValueError("crossover_rate must be in [0, 1]")
        if self.mutation_rate is not None and not 0 <= self.mutation_rate <= 1:
            raise ValueError("mutation_rate must be in [0, 1]")
        levels = tuple(float(v) for v in self.quantity_levels)
        if len(levels) < 2 or any(v < 0 for v in levels) or list(levels) != sorted(set(levels)):
            raise ValueError("quantity_levels must be >= 2 distinct non-negative values, ascending")
        object.__setattr__(self, "quantity_levels", levels)


@dataclass(frozen=True)
class QuantityGrid:
    """Decodes level genes into integer units.

    Level value v of material i gives ceil(v * D) units, where D is the
    supplier's served demand for i (basis "served": the effective demand of
    the areas it serves) or the material's total effective demand (basis "total").
    """
    levels: np.ndarray      # (n_levels,)
    demand: np.ndarray      # (F, I) effective demand
    stock: np.ndarray       # (J, I)
    existing: np.ndarray    # (J,) bool
    unit_cost: np.ndarray   # (J, I)
    capacity: np.ndarray    # (J,) m2
    area: np.ndarray        # (I,) m2 per unit
    basis: str = "served"

    @classmethod
    def build(cls, inst: ProblemInstance, levels: Sequence[float], basis: str = "served") -> "QuantityGrid":
        if basis not in QUANTITY_BASES:
            raise ValueError(f"quantity basis must be one of {QUANTITY_BASES}")
        a = inst.arrays
        return cls(np.asarray(levels, dtype=float), a["demand"], a["stock"],
                   a["kind"] == SUPPLIER_KINDS.index("existing"), a["unit_cost"], a["capacity"],
                   a["area_per_unit"], basis)

    def base(self, y: np.ndarray) -> np.ndarray:
        """(..., J, I) reference amount D for each supplier and material."""
        if self.basis == "served":
            return np.einsum("...jf,fi->...ji", y.astype(float), self.demand)
        total = self.demand.sum(axis=0)
        return np.broadcast_to(total, y.shape[:-1] + total.shape)

    def units(self, y: np.ndarray, L: np.ndarray) -> np.ndarray:
        return np.ceil(self.levels[L] * self.base(y) - 1e-9).clip(0)

    def phenotype(self, X: np.ndarray, y: np.ndarray, L: np.ndarray) -> np.ndarray:
        """Units held; level genes of unselected suppliers are latent and decode to 0."""
        return self.units(y, L) * X[..., :, None]

    def level_caps(self, y: np.ndarray) -> np.ndarray:
        """(..., J, I) highest level index each supplier may hold; existing ones are bound by stock."""
        every = np.ceil(self.levels * self.base(y)[..., None] - 1e-9)
        fits = np.maximum((every <= self.stock[..., None] + 1e-9).sum(axis=-1) - 1, 0)
        return np.where(self.existing[:, None], fits, len(self.levels) - 1)

    def cap_to_stock(self, y: np.ndarray, L: np.ndarray) -> np.ndarray:
        """Lower each existing supplier's levels to the highest one its stock covers."""
        return np.minimum(L, self.level_caps(y)).astype(L.dtype)


@dataclass
class Population:
    X: np.ndarray       # (N, J) int8
    y: np.ndarray       # (N, J, F) int8
    L: np.ndarray       # (N, J, I) level indices
    objs: np.ndarray | None = None
    viol: np.ndarray | None = None
    born: np.ndarray | None = None

    def __len__(self) -> int:
        return self.X.shape[0]

    def take(self, idx) -> "Population":
        return Population(self.X[idx], self.y[idx], self.L[idx],
                          None if self.objs is None else self.objs[idx],
                          None if self.viol is None else self.viol[idx],
                          None if self.born is None else self.born[idx])

    @staticmethod
    def concat(a: "Population", b: "Population") -> "Population":
        return Population(np.concatenate([a.X, b.X]), np.concatenate([a.y, b.y]), np.concatenate([a.L, b.L]),
                          np.concatenate([a.objs, b.objs]), np.concatenate([a.viol, b.viol]),
                          np.concatenate([a.born, b.born]))


def slow_links(inst: ProblemInstance) -> np.ndarray:
    """(J, F, I) True where link j -> f is too slow for material i that area f needs."""
    a = inst.arrays
    return (a["time"][:, :, None] > a["max_time"][None, None, :] + 1e-12) & (a["demand"][None] > 0)


def _settle_clashes(y, L, slow, rng):
    clash = (y[:, :, :, None] > 0) & (L[:, :, None, :] > 0) & slow[None]
    if not clash.any():
        return y, L
    drop_link = rng.random(y.shape[:2]) < 0.5
    y = np.where(drop_link[:, :, None] & clash.any(axis=3), 0, y)
    L = np.where(~drop_link[:, :, None] & clash.any(axis=2), 0, L)
    return y, L


LEAN_SHARE = 0.5   # share of the initial population that starts with empty stock
PRUNE_SHARE = 0.5  # share of repaired genomes that try to shed one unneeded stock level


def _pick_supplier(able: np.ndarray, cost: np.ndarray, cover: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Per short cell, the able supplier covering most short cells per unit cost (random tie-break)."""
    score = np.where(able, cover / (cost + 1e-9), -np.inf)
    return np.argmax(score + 1e-9 * rng.random(able.shape), axis=1)


def _repair(pop: Population, grid: QuantityGrid, slow: np.ndarray, rng: np.random.Generator) -> Population:
    """Heuristic repair applied to every new genome before evaluation.

    1. service is masked by selection (y := y and X);
    2. an area nobody serves gets one random selected supplier;
    3. a supplier that stocks a material while serving an area too slowly
       for it either drops those slow links or empties that stock (fair coin);
    4. demand shortfalls are topped up one level at a time by a serving
       supplier that can legally hold more and has floor room, preferring the one that covers
       the most short areas per unit cost;
    5. existing suppliers' levels are capped by their stock;
    6. overloaded suppliers shed random levels until they fit their floor area;
    7. with probability PRUNE_SHARE, one level no served area needs is dropped.
    """
    X = pop.X
    N, J = X.shape
    y = pop.y * X[:, :, None]
    L = pop.L.astype(np.int16)

    unserved = ~y.any(axis=1)                                   # (N, F)
    rows, areas = np.nonzero(unserved & X.any(axis=1)[:, None])
    if len(rows):
        pick = np.argmax(rng.random((len(rows), J)) * X[rows], axis=1)
        y[rows, pick, areas] = 1

    y, L = _settle_clashes(y, L, slow, rng)

    dem = grid.demand
    caps = grid.level_caps(y)
    # material i may be raised at j only if no served area is too slow for i
    blocked = np.einsum("njf,jfi->nji", y, slow.astype(np.int8)) > 0
    top = len(grid.levels) - 1
    for _ in range(top):
        Z = grid.phenotype(X, y, L)
        short = np.einsum("njf,nji->nfi", y, Z) < dem - 1e-9     # (N, F, I)
        if not short.any():
            break
        room = grid.capacity - Z @ grid.area                     # (N, J)
        extra = (grid.phenotype(X, y, np.minimum(L + 1, top)) - Z) * grid.area
        n, f, i = np.nonzero(short)
        able = (y[n, :, f] > 0) & (L[n, :, i] < caps[n, :, i]) & ~blocked[n, :, i] \
            & (extra[n, :, i] <= room[n] + 1e-9)
        has = able.any(axis=1)
        if not has.any():
            break
        cover = np.einsum("njf,nfi->nji", y, short.astype(np.int8))[n, :, i]
        j = _pick_supplier(able, grid.unit_cost[:, i].T, cover, rng)
        n, j, i = n[has], j[has], i[has]
        L[n, j, i] += 1
    L = grid.cap_to_stock(y, L)
    L = _trim_overload(X, y, L, grid, rng)
    L = _prune(X, y, L, grid, rng)
    return Population(X, y.astype(np.int8), L.astype(np.int16), born=pop.born)


def _trim_overload(X, y, L, grid: QuantityGrid, rng: np.random.Generator) -> np.ndarray:
    """Step random held materials down until every supplier fits its floor area."""
    N, J, I = L.shape
    L = L.copy()
    for _ in range(I * (len(grid.levels) - 1)):
        over = grid.phenotype(X, y, L) @ grid.area > grid.capacity * (1 + 1e-9)
        if not over.any():
            break
        n, j = np.nonzero(over)
        held = L[n, j] > 0
        i = np.argmax(rng.random(held.shape) * held, axis=1)
        L[n, j, i] -= held[np.arange(len(n)), i]
    return L


def _prune(X, y, L, grid: QuantityGrid, rng: np.random.Generator) -> np.ndarray:
    """With probability PRUNE_SHARE, lower one random level whose stock no served area needs."""
    N, J, I = L.shape
    Z = grid.phenotype(X, y, L)
    lower = grid.phenotype(X, y, np.maximum(L - 1, 0))
    have = np.einsum("njf,nji->nfi", y, Z)
    slack = have - grid.demand[None]                                 # (N, F, I)
    # removable if every area j serves keeps its demand met without the step
    loss = Z - lower                                                 # (N, J, I)
    need = np.where(y[:, :, :, None] > 0, slack[:, None, :, :], np.inf).min(axis=2)
    ok = (L > 0) & (loss > 0) & (loss <= need + 1e-9)
    pick = ok.reshape(N, -1) & (rng.random(N) < PRUNE_SHARE)[:, None]
    rows = np.flatnonzero(pick.any(axis=1))
    if len(rows):
        flat = np.argmax(rng.random((len(rows), J * I)) * pick[rows], axis=1)
        L = L.copy()
        L[rows, flat // I, flat % I] -= 1
    return L


def evaluate_population(inst: ProblemInstance, pop: Population, grid: QuantityGrid) -> None:
    Z = grid.phenotype(pop.X, pop.y, pop.L)
    X = pop.X.astype(float)
    y = pop.y.astype(float)
    pop.objs = objectives_batch(inst, X, y, Z)
    pop.viol = violation_totals_batch(inst, X, y, Z)


# ---------------------------------------------------------------- archive

@dataclass
class ParetoArchive:
    solutions: list[CandidateSolution] = field(default_factory=list)
    infeasible: bool = False
    seed: int | None = None
    metadata: dict = field(default_factory=dict)
    history: list[dict] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.solutions)

    def objective_matrix(self) -> np.ndarray:
        if not self.solutions:
            return np.zeros((0, 4))
        return np.array([s.objectives for s in self.solutions], dtype=float)

    def is_mutually_nondominated(self) -> bool:
        objs = self.objective_matrix()
        viol = np.array([s.violation_total for s in self.solutions], dtype=float)
        return not domination_matrix(objs, viol).any() if len(objs) else True


class _ArchiveBuilder:
    """External elitist archive keyed by objective vector (first finder kept)."""

    def __init__(self):
        self.objs = np.zeros((0, 4))
        self.X = self.y = self.L = None
        self.born = np.zeros(0, dtype=int)

    def add(self, pop: Population, mask: np.ndarray) -> None:
        if not mask.any():
            return
        cand = pop.take(np.flatnonzero(mask))
        if self.X is None:
            self.X, self.y, self.L = cand.X[:0], cand.y[:0], cand.L[:0]
        objs = np.concatenate([self.objs, cand.objs])
        _, first = np.unique(objs, axis=0, return_index=True)
        first = np.sort(first)
        keep = first[pareto_filter(objs[first])]
        X = np.concatenate([self.X, cand.X])
        y = np.concatenate([self.y, cand.y])
        L = np.concatenate([self.L, cand.L])
        born = np.concatenate([self.born, cand.born])
        self.objs, self.X, self.y, self.L, self.born = objs[keep], X[keep], y[keep], L[keep], born[keep]


# ---------------------------------------------------------------- operators

def _initial_population(inst: ProblemInstance, cfg: EvolutionConfig, rng: np.random.Generator) -> Population:
    J, F, I = inst.shape
    N = cfg.population_size
    n_levels = len(cfg.quantity_levels)
    X = np.zeros((N, J), dtype=np.int8)
    kinds = inst.arrays["kind"]
    for k, name in enumerate(SUPPLIER_KINDS):
        members = np.flatnonzero(kinds == k)
        if len(members) == 0:
            continue
        lo, hi = inst.count_bounds(name)
        lo, hi = min(lo, len(members)), min(hi, len(members))
        for n in range(N):
            count = rng.integers(lo, hi + 1)
            X[n, rng.choice(members, size=count, replace=False)] = 1
    p = cfg.init_service_prob
    y = np.zeros((N, J, F), dtype=np.int8)
    for n in range(N):
        chosen = np.flatnonzero(X[n])
        if len(chosen) == 0:
            continue
        prob = p if p is not None else rng.random()
        y[n, chosen] = rng.random((len(chosen), F)) < prob
        for f in range(F):
            if not y[n, :, f].any():
                y[n, rng.choice(chosen), f] = 1
    L = rng.integers(0, n_levels, size=(N, J, I)).astype(np.int16)
    # lean starts: repair then raises levels only where demand requires
    L[rng.random(N) < LEAN_SHARE] = 0
    return Population(X, y, L, born=np.zeros(N, dtype=int))


def _tournament(rank: np.ndarray, crowd: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.integers(0, len(rank), size=n)
    b = rng.integers(0, len(rank), size=n)
    coin = rng.random(n) < 0.5
    a_better = (rank[a] < rank[b]) | ((rank[a] == rank[b]) & (crowd[a] > crowd[b]))
    b_better = (rank[b] < rank[a]) | ((rank[a] == rank[b]) & (crowd[b] > crowd[a]))
    return np.where(a_better, a, np.where(b_better, b, np.where(coin, a, b)))


def _variation(parents: Population, cfg: EvolutionConfig, n_levels: int, rate: float,
               rng: np.random.Generator) -> Population:
    N, J = parents.X.shape
    F = parents.y.shape[2]
    I = parents.L.shape[2]
    bits = np.concatenate([parents.X.reshape(N, J), parents.y.reshape(N, J * F)], axis=1)
    lev = parents.L.reshape(N, J * I).copy()
    p1, p2 = np.arange(0, N, 2), np.arange(1, N, 2)
    bits1, bits2 = bits[p1].copy(), bits[p2].copy()
    lev1, lev2 = lev[p1].copy(), lev[p2].copy()

    cross = rng.random(len(p1)) < cfg.crossover_rate
    swap = (rng.random(bits1.shape) < 0.5) & cross[:, None]
    bits1, bits2 = np.where(swap, bits2, bits1), np.where(swap, bits1, bits2)
    if lev.shape[1] > 1:
        cut = rng.integers(1, lev.shape[1], size=len(p1))
        tail = (np.arange(lev.shape[1])[None, :] >= cut[:, None]) & cross[:, None]
        lev1, lev2 = np.where(tail, lev2, lev1), np.where(tail, lev1, lev2)

    child_bits = np.empty_like(bits)
    child_bits[p1], child_bits[p2] = bits1, bits2
    child_lev = np.empty_like(lev)
    child_lev[p1], child_lev[p2] = lev1, lev2

    children = Population(child_bits[:, :J], child_bits[:, J:].reshape(N, J, F), child_lev.reshape(N, J, I))
    return _mutate(children, n_levels, rate, rng)


def _mutate(pop: Population, n_levels: int, rate: float, rng: np.random.Generator) -> Population:
    """Bit-flip on X and y, +-1 grid step on levels; every genome changes at least one gene."""
    N, J = pop.X.shape
    F, I = pop.y.shape[2], pop.L.shape[2]
    bits = np.concatenate([pop.X, pop.y.reshape(N, J * F)], axis=1)
    lev = pop.L.reshape(N, J * I)
    flip = rng.random(bits.shape) < rate
    step = rng.random(lev.shape) < rate
    idle = np.flatnonzero(~flip.any(axis=1) & ~step.any(axis=1))
    pick = rng.integers(0, flip.shape[1] + step.shape[1], size=len(idle))
    on_bits = pick < flip.shape[1]
    flip[idle[on_bits], pick[on_bits]] = True
    step[idle[~on_bits], pick[~on_bits] - flip.shape[1]] = True
    bits = np.where(flip, 1 - bits, bits).astype(np.int8)
    direction = np.where(rng.random(lev.shape) < 0.5, -1, 1)
    lev = np.where(step, np.clip(lev + direction, 0, n_levels - 1), lev).astype(np.int16)
    return Population(bits[:, :J], bits[:, J:].reshape(N, J, F), lev.reshape(N, J, I))


def _fresh_offspring(children: Population, pop: Population, grid: QuantityGrid, slow: np.ndarray,
                     n_levels: int, rate: float, rng: np.random.Generator, attempts: int = 3) -> Population:
    """Re-mutate children whose phenotype already exists in the population or among siblings."""
    known = set(_phenotype_keys(pop, grid).tolist())
    for _ in range(attempts):
        keys = _phenotype_keys(children, grid).tolist()
        dup, seen = [], set(known)
        for k, key in enumerate(keys):
            if key in seen:
                dup.append(k)
            else:
                seen.add(key)
        if not dup:
            break
        dup = np.array(dup)
        redo = _repair(_mutate(children.take(dup), n_levels, rate, rng), grid, slow, rng)
        children.X[dup], children.y[dup], children.L[dup] = redo.X, redo.y, redo.L
    return children


def _rank_and_crowd(objs: np.ndarray, viol: np.ndarray) -> tuple[list[np.ndarray], np.ndarray, np.ndarray]:
    fronts = nondominated_ranks(objs, viol)
    rank = np.empty(len(objs), dtype=int)
    crowd = np.empty(len(objs))
    for r, idx in enumerate(fronts):
        rank[idx] = r
        crowd[idx] = crowding_distance(objs[idx])
    return fronts, rank, crowd


def _survivors(fronts: list[np.ndarray], crowd: np.ndarray, n: int) -> np.ndarray:
    chosen = []
    for idx in fronts:
        if len(chosen) + len(idx) <= n:
            chosen.extend(idx.tolist())
            if len(chosen) == n:
                break
            continue
        order = np.argsort(-crowd[idx], kind="stable")
        chosen.extend(idx[order[: n - len(chosen)]].tolist())
        break
    return np.array(chosen, dtype=int)


def _phenotype_keys(pop: Population, grid: QuantityGrid) -> np.ndarray:
    """Byte keys of (X, y, Z); genomes differing only in latent level genes collide."""
    n = len(pop)
    Z = grid.phenotype(pop.X, pop.y, pop.L)
    flat = np.concatenate([pop.X.reshape(n, -1), pop.y.reshape(n, -1), Z.reshape(n, -1)], axis=1)
    flat = np.ascontiguousarray(flat.astype(np.float64))
    return flat.view(np.dtype((np.void, flat.shape[1] * 8))).ravel()


def _environmental_selection(merged: Population, grid: QuantityGrid, n: int) -> np.ndarray:
    """Elitist truncation by rank then crowding, over distinct phenotypes first.

    Repeats only fill slots left over once every distinct phenotype is taken.
    """
    _, first = np.unique(_phenotype_keys(merged, grid), return_index=True)
    first = np.sort(first)
    fronts, _, crowd = _rank_and_crowd(merged.objs[first], merged.viol[first])
    chosen = first[_survivors(fronts, crowd, min(n, len(first)))]
    if len(chosen) < n:
        rest = np.setdiff1d(np.arange(len(merged)), chosen)
        chosen = np.concatenate([chosen, rest[: n - len(chosen)]])
    return chosen


def _snapshot(pop: Population, generation: int) -> dict:
    feas = pop.viol == 0
    best = pop.objs[feas].min(axis=0).tolist() if feas.any() else None
    return {"generation": generation, "feasible": int(feas.sum()), "best": best,
            "min_violation": float(pop.viol.min())}


def _to_solutions(inst, grid, X, y, L, objs, viol, born, seed) -> list[CandidateSolution]:
    out = []
    for n in range(len(X)):
        Z = grid.phenotype(X[n], y[n], L[n]).astype(np.int64)
        out.append(CandidateSolution(X[n].astype(np.int64), y[n].astype(np.int64), Z,
                                     objs[n].copy(), float(viol[n]), int(born[n]), seed))
    return out


# ---------------------------------------------------------------- main loop

def evolve(inst: ProblemInstance, config: EvolutionConfig | None = None) -> ParetoArchive:
    """Run NSGA-II and return the non-dominated feasible solutions found.

    If no feasible solution is ever found, the archive holds the
    least-violating members of the final population and ``infeasible`` is set.
    """
    cfg = config or EvolutionConfig()
    rng = np.random.default_rng(cfg.seed)
    J, F, I = inst.shape
    grid = QuantityGrid.build(inst, cfg.quantity_levels, cfg.quantity_basis)
    n_levels = len(cfg.quantity_levels)
    slow = slow_links(inst)
    rate = cfg.mutation_rate if cfg.mutation_rate is not None else 1.0 / (J + J * F + J * I)

    pop = _repair(_initial_population(inst, cfg, rng), grid, slow, rng)
    evaluate_population(inst, pop, grid)
    archive = _ArchiveBuilder()
    archive.add(pop, pop.viol == 0)
    fronts, rank, crowd = _rank_and_crowd(pop.objs, pop.viol)
    history = [_snapshot(pop, 0)]

    for gen in range(1, cfg.generations + 1):
        parents = pop.take(_tournament(rank, crowd, cfg.population_size, rng))
        children = _repair(_variation(parents, cfg, n_levels, rate, rng), grid, slow, rng)
        children = _fresh_offspring(children, pop, grid, slow, n_levels, rate, rng)
        children.born = np.full(len(children), gen)
        evaluate_population(inst, children, grid)
        archive.add(children, children.viol == 0)
        merged = Population.concat(pop, children)
        pop = merged.take(_environmental_selection(merged, grid, cfg.population_size))
        fronts, rank, crowd = _rank_and_crowd(pop.objs, pop.viol)
        history.append(_snapshot(pop, gen))
        if gen % 10 == 0:
            logger.debug("generation %d: %s", gen, history[-1])

    meta = {"population_size": cfg.population_size, "generations": cfg.generations,
            "crossover_rate": cfg.crossover_rate, "mutation_rate": rate,
            "quantity_levels": list(cfg.quantity_levels), "quantity_basis": cfg.quantity_basis,
            "instance": inst.name}
    if len(archive.objs):
        sols = _to_solutions(inst, grid, archive.X, archive.y, archive.L, archive.objs,
                             np.zeros(len(archive.objs)), archive.born, cfg.seed)
        return ParetoArchive(sols, False, cfg.seed, meta, history)
    best = np.flatnonzero(pop.viol == pop.viol.min())
    sols = _to_solutions(inst, grid, pop.X[best], pop.y[best], pop.L[best], pop.objs[best],
                         pop.viol[best], pop.born[best], cfg.seed)
    return ParetoArchive(sols, True, cfg.seed, meta, history)


# ---------------------------------------------------------------- oracle

def _supplier_states(F: int, I: int, n_levels: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closed states of one supplier: unselected and empty, or selected with some stock."""
    xs, ys, ls = [0], [np.zeros(F, dtype=np.int8)], [np.zeros(I, dtype=np.int16)]
    for yv in itertools.product((0, 1), repeat=F):
        for lv in itertools.product(range(n_levels), repeat=I):
            if any(lv):
                xs.append(1)
                ys.append(np.array(yv, dtype=np.int8))
                ls.append(np.array(lv, dtype=np.int16))
    return np.array(xs, dtype=np.int8), np.array(ys), np.array(ls)


def search_space_size(inst: ProblemInstance, quantity_levels: Sequence[float]) -> int:
    J, F, I = inst.shape
    per = 1 + 2 ** F * (len(quantity_levels) ** I - 1)
    return per ** J


def brute_force_pareto(inst: ProblemInstance, quantity_levels: Sequence[float] = DEFAULT_LEVELS,
                       limit: int = BRUTE_FORCE_LIMIT, chunk: int = 65536,
                       quantity_basis: str = "served") -> ParetoArchive:
    """Exact Pareto front over the quantity grid by full enumeration.

    Candidates that select a supplier without stocking it, stock an
    unselected supplier, or let an unselected supplier serve are skipped:
    each violates a linkage constraint and so is never feasible.
    The archive keeps one solution per distinct non-dominated objective vector.
    """
    J, F, I = inst.shape
    size = search_space_size(inst, quantity_levels)
    if size > limit:
        raise SpaceTooLarge(size, limit)
    grid = QuantityGrid.build(inst, quantity_levels, quantity_basis)
    sx, sy, sl = _supplier_states(F, I, len(quantity_levels))
    per = len(sx)
    radix = per ** np.arange(J - 1, -1, -1, dtype=np.int64)
    front = _ArchiveBuilder()
    n_feasible = 0
    for start in range(0, size, chunk):
        code = np.arange(start, min(start + chunk, size), dtype=np.int64)
        digits = (code[:, None] // radix[None, :]) % per
        pop = Population(sx[digits], sy[digits], sl[digits], born=np.zeros(len(code), dtype=int))
        evaluate_population(inst, pop, grid)
        feas = pop.viol == 0
        n_feasible += int(feas.sum())
        front.add(pop, feas)
    meta = {"enumerated": size, "feasible": n_feasible, "quantity_levels": list(quantity_levels),
            "quantity_basis": quantity_basis,
            "instance": inst.name}
    if not len(front.objs):
        logger.warning("brute force found no feasible candidate among %d", size)
        return ParetoArchive([], True, None, meta)
    sols = _to_solutions(inst, grid, front.X, front.y, front.L, front.objs, np.zeros(len(front.objs)),
                         front.born, None)
    return ParetoArchive(sols, False, None, meta)
