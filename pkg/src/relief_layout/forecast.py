"""Gradient-boosted regression trees for material demand forecasting.

Second-order boosting with squared-error loss: g = y_hat - y, h = 1,
regularizer gamma * T + lambda/2 * sum(w^2). Exact greedy split search.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .errors import DimensionError, EmptyDataset, InstanceTooSmall, SchemaError

DEFAULT_FEATURES = (
    "seismic_intensity",
    "threat_population",
    "threaten_property",
    "disaster_level",
    "destroyed_houses",
)


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    targets: np.ndarray
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.features, dtype=float))
        y = np.asarray(self.targets, dtype=float).ravel()
        if len(y) == 0:
            x = x.reshape(0, x.shape[-1] if x.size else len(self.feature_names))
        if x.shape[0] != y.shape[0]:
            raise DimensionError(f"{x.shape[0]} feature rows vs {y.shape[0]} targets")
        if np.isnan(x).any() or np.isnan(y).any():
            raise ValueError("dataset contains NaN; impute before building a Dataset")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "targets", y)
        if not self.feature_names:
            object.__setattr__(self, "feature_names", tuple(f"x{i}" for i in range(x.shape[1])))

    def __len__(self) -> int:
        return self.targets.shape[0]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.features[idx], self.targets[idx], self.feature_names)


@dataclass
class Leaf:
    weight: float


@dataclass
class Split:
    feature: int
    threshold: float
    left: "Node"
    right: "Node"


Node = Union[Leaf, Split]


def tree_predict(node: Node, x: np.ndarray) -> np.ndarray:
    """Vectorized output of a single tree for rows of ``x``."""
    out = np.empty(x.shape[0])
    stack = [(node, np.arange(x.shape[0]))]
    while stack:
        nd, idx = stack.pop()
        if isinstance(nd, Leaf):
            out[idx] = nd.weight
            continue
        go_left = x[idx, nd.feature] < nd.threshold
        stack.append((nd.left, idx[go_left]))
        stack.append((nd.right, idx[~go_left]))
    return out


def tree_leaves(node: Node) -> list[Leaf]:
    if isinstance(node, Leaf):
        return [node]
    return tree_leaves(node.left) + tree_leaves(node.right)


def node_to_dict(node: Node) -> dict:
    if isinstance(node, Leaf):
        return {"leaf": node.weight}
    return {"feature": node.feature, "threshold": node.threshold,
            "left": node_to_dict(node.left), "right": node_to_dict(node.right)}


def node_from_dict(d: dict) -> Node:
    if "leaf" in d:
        return Leaf(float(d["leaf"]))
    return Split(int(d["feature"]), float(d["threshold"]),
                 node_from_dict(d["left"]), node_from_dict(d["right"]))


@dataclass(frozen=True)
class BoostConfig:
    rounds: int = 50
    max_depth: int = 3
    eta: float = 0.3
    reg_lambda: float = 1.0
    gamma: float = 0.0
    min_samples_leaf: int = 1

    def __post_init__(self):
        if self.rounds < 0:
            raise ValueError("rounds must be >= 0")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0 < self.eta <= 1:
            raise ValueError("eta must be in (0, 1]")
        if self.reg_lambda < 0 or self.gamma < 0:
            raise ValueError("lambda and gamma must be >= 0")


@dataclass
class BoostedModel:
    base_score: float
    trees: list[Node] = field(default_factory=list)
    eta: float = 0.3
    reg_lambda: float = 1.0
    gamma: float = 0.0
    max_depth: int = 3
    feature_names: tuple[str, ...] = ()

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def raw_predict(self, features) -> np.ndarray:
        x = np.atleast_2d(np.asarray(features, dtype=float))
        if self.feature_names and x.shape[1] != self.n_features:
            raise DimensionError(f"model expects {self.n_features} features, got {x.shape[1]}")
        out = np.full(x.shape[0], self.base_score)
        for tree in self.trees:
            out += self.eta * tree_predict(tree, x)
        return out

    def to_dict(self) -> dict:
        return {
            "base_score": self.base_score,
            "eta": self.eta,
            "lambda": self.reg_lambda,
            "gamma": self.gamma,
            "max_depth": self.max_depth,
            "feature_names": list(self.feature_names),
            "trees": [node_to_dict(t) for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoostedModel":
        return cls(float(d["base_score"]), [node_from_dict(t) for t in d["trees"]],
                   float(d["eta"]), float(d["lambda"]), float(d["gamma"]), int(d["max_depth"]),
                   tuple(d.get("feature_names", ())))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path: str | Path) -> "BoostedModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class FitReport:
    train_rmse: list[float]
    objective: float


def leaf_weight(g_sum: float, h_sum: float, reg_lambda: float) -> float:
    """Minimizer of G*w + (H + lambda)/2 * w^2."""
    denom = h_sum + reg_lambda
    return 0.0 if denom == 0 else -g_sum / denom


def _score(g_sum: float, h_sum: float, reg_lambda: float) -> float:
    denom = h_sum + reg_lambda
    return 0.0 if denom == 0 else g_sum * g_sum / denom


def best_split(x: np.ndarray, g: np.ndarray, h: np.ndarray, reg_lambda: float,
               min_samples_leaf: int = 1) -> tuple[float, int, float] | None:
    """Exhaustive search over sorted unique values of every feature.

    Returns (gain, feature, threshold) with the threshold at the midpoint
    between adjacent distinct values, or None if no split is possible.
    Gain is the structural score improvement before the gamma penalty.
    """
    n, d = x.shape
    G, H = g.sum(), h.sum()
    parent = _score(G, H, reg_lambda)
    best = None
    for j in range(d):
        order = np.argsort(x[:, j], kind="mergesort")
        xs = x[order, j]
        gl = np.cumsum(g[order])[:-1]
        hl = np.cumsum(h[order])[:-1]
        nl = np.arange(1, n)
        valid = (xs[1:] > xs[:-1]) & (nl >= min_samples_leaf) & (n - nl >= min_samples_leaf)
        if not valid.any():
            continue
        gr, hr = G - gl, H - hl
        with np.errstate(divide="ignore", invalid="ignore"):
            left = np.where(hl + reg_lambda > 0, gl * gl / (hl + reg_lambda), 0.0)
            right = np.where(hr + reg_lambda > 0, gr * gr / (hr + reg_lambda), 0.0)
        gain = 0.5 * (left + right - parent)
        gain = np.where(valid, gain, -np.inf)
        k = int(np.argmax(gain))
        if best is None or gain[k] > best[0]:
            best = (float(gain[k]), j, float(0.5 * (xs[k] + xs[k + 1])))
    return best


def grow_tree(x: np.ndarray, g: np.ndarray, h: np.ndarray, cfg: BoostConfig, depth: int = 0) -> Node:
    if depth < cfg.max_depth and x.shape[0] >= 2 * cfg.min_samples_leaf:
        found = best_split(x, g, h, cfg.reg_lambda, cfg.min_samples_leaf)
        if found is not None and found[0] > cfg.gamma:
            _, j, thr = found
            mask = x[:, j] < thr
            return Split(j, thr,
                         grow_tree(x[mask], g[mask], h[mask], cfg, depth + 1),
                         grow_tree(x[~mask], g[~mask], h[~mask], cfg, depth + 1))
    return Leaf(leaf_weight(g.sum(), h.sum(), cfg.reg_lambda))


def regularized_objective(model: BoostedModel, data: Dataset) -> float:
    pred = model.raw_predict(data.features)
    loss = 0.5 * float(np.sum((data.targets - pred) ** 2))
    penalty = 0.0
    for tree in model.trees:
        leaves = tree_leaves(tree)
        penalty += model.gamma * len(leaves) + 0.5 * model.reg_lambda * sum(l.weight ** 2 for l in leaves)
    return loss + penalty


def fit_booster(train: Dataset, config: BoostConfig | None = None) -> tuple[BoostedModel, FitReport]:
    cfg = config or BoostConfig()
    if len(train) == 0:
        raise EmptyDataset("cannot fit on an empty training set")
    x, y = train.features, train.targets
    model = BoostedModel(float(y.mean()), [], cfg.eta, cfg.reg_lambda, cfg.gamma, cfg.max_depth,
                         train.feature_names)
    pred = np.full(len(y), model.base_score)
    h = np.ones_like(y)
    rmse = []
    for _ in range(cfg.rounds):
        g = pred - y
        tree = grow_tree(x, g, h, cfg)
        model.trees.append(tree)
        pred = pred + cfg.eta * tree_predict(tree, x)
        rmse.append(float(np.sqrt(np.mean((pred - y) ** 2))))
    return model, FitReport(rmse, regularized_objective(model, train))


def predict(model: BoostedModel, features: Sequence[float], clamp: bool = True) -> float:
    x = np.asarray(features, dtype=float)
    if x.ndim != 1:
        raise DimensionError("predict takes a single feature vector; use predict_many for batches")
    val = float(model.raw_predict(x[None, :])[0])
    return max(val, 0.0) if clamp else val


def predict_many(model: BoostedModel, features, clamp: bool = True) -> np.ndarray:
    out = model.raw_predict(features)
    return np.maximum(out, 0.0) if clamp else out


def evaluate(model: BoostedModel, test: Dataset) -> dict[str, float]:
    if len(test) == 0:
        raise EmptyDataset("cannot evaluate on an empty test set")
    err = predict_many(model, test.features) - test.targets
    return {"rmse": float(np.sqrt(np.mean(err ** 2))), "mae": float(np.mean(np.abs(err)))}


def split_dataset(data: Dataset, train_fraction: float = 0.8, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Seeded shuffle, then the first round(n * fraction) rows train."""
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must be in (0, 1)")
    n = len(data)
    if n < 2:
        raise InstanceTooSmall("need at least 2 rows to split")
    n_train = int(math.floor(n * train_fraction + 0.5))
    n_train = min(max(n_train, 1), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    return data.subset(np.sort(perm[:n_train])), data.subset(np.sort(perm[n_train:]))


def impute_mean(columns: np.ndarray) -> np.ndarray:
    """Replace NaN entries by their column mean."""
    x = np.array(columns, dtype=float)
    means = np.nanmean(np.where(np.isnan(x).all(axis=0), 0.0, x), axis=0)
    rows, cols = np.where(np.isnan(x))
    x[rows, cols] = means[cols]
    return x


def read_training_csv(path: str | Path, feature_names: Sequence[str] = DEFAULT_FEATURES,
                      target: str = "demand", group_by: str | None = "material_id",
                      impute: bool = False) -> dict[str, Dataset]:
    """Load a training table, one Dataset per value of ``group_by``.

    Missing cells are rejected unless ``impute`` is set, in which case they
    are replaced by column means.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        needed = list(feature_names) + [target] + ([group_by] if group_by else [])
        for col in needed:
            if col not in header:
                raise SchemaError(f"{path}: missing column {col!r}")
        groups: dict[str, list[list[float]]] = {}
        for lineno, row in enumerate(reader, start=2):
            vals = []
            for col in list(feature_names) + [target]:
                cell = (row[col] or "").strip()
                if cell == "":
                    if not impute:
                        raise SchemaError(f"{path}:{lineno}: missing value in column {col!r}")
                    vals.append(float("nan"))
                else:
                    vals.append(float(cell))
            key = row[group_by].strip() if group_by else "all"
            groups.setdefault(key, []).append(vals)
    out = {}
    for key, rows in groups.items():
        arr = np.array(rows, dtype=float)
        if impute:
            arr = impute_mean(arr)
        out[key] = Dataset(arr[:, :-1], arr[:, -1], tuple(feature_names))
    return out
