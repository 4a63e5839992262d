"""Pipeline configuration: one TOML or JSON file, with flag overrides on top.

Layout (every section and key optional)::

    seed = 0
    out = "runs/example"

    [inputs]      bundle, judgment, series, training, catalog, demand_file
    [stages]      skip_coupling, skip_forecast, skip_classify
    [coupling]    active, risk_index, rho, pair_convention, polarity
    [forecast]    rounds, max_depth, eta, reg_lambda, gamma, min_samples_leaf,
                  train_fraction, features
    [classify]    threshold, variant, hesitation_margin
    [evolution]   population_size, generations, crossover_rate, mutation_rate,
                  quantity_levels, quantity_basis, init_service_prob
    [export]      formats

Relative paths resolve against the config file's directory. The single
``seed`` feeds the forecast split and the evolutionary search.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

import tomli

from .bundle import COMPANION_FILES
from .errors import ConfigError
from .forecast import DEFAULT_FEATURES, BoostConfig
from .nsga2 import EvolutionConfig

SECTIONS = {
    "inputs": ("bundle", "judgment", "series", "training", "catalog", "demand_file"),
    "stages": ("skip_coupling", "skip_forecast", "skip_classify"),
    "coupling": ("active", "risk_index", "rho", "pair_convention", "polarity"),
    "forecast": tuple(f.name for f in fields(BoostConfig)) + ("train_fraction", "features"),
    "classify": ("threshold", "variant", "hesitation_margin"),
    "evolution": tuple(f.name for f in fields(EvolutionConfig) if f.name != "seed"),
    "export": ("formats",),
}
TOP_LEVEL = ("seed", "out")
EXPORT_FORMATS = ("json", "csv")


@dataclass(frozen=True)
class CouplingOptions:
    active: tuple[str, ...] | None = None
    risk_index: float | None = None
    rho: float = 0.5
    pair_convention: str = "ordered"
    polarity: str = "positive"

    def __post_init__(self):
        if self.pair_convention not in ("unordered", "ordered"):
            raise ValueError("pair_convention must be 'unordered' or 'ordered'")
        if self.polarity not in ("positive", "negative"):
            raise ValueError("polarity must be 'positive' or 'negative'")
        if not 0 < self.rho <= 1:
            raise ValueError("rho must be in (0, 1]")
        if self.risk_index is not None and self.risk_index < 0:
            raise ValueError("risk_index must be >= 0")


@dataclass(frozen=True)
class ClassifyOptions:
    threshold: float = 0.8
    variant: str = "standard"
    hesitation_margin: float = 0.1

    def __post_init__(self):
        if self.variant not in ("standard", "inverted"):
            raise ValueError("variant must be 'standard' or 'inverted'")
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")


@dataclass(frozen=True)
class PipelineConfig:
    bundle: Path | None = None
    out: Path = Path("relief-run")
    seed: int = 0
    judgment: Path | None = None
    series: Path | None = None
    training: Path | None = None
    catalog: Path | None = None
    demand_file: Path | None = None
    skip_coupling: bool = False
    skip_forecast: bool = False
    skip_classify: bool = False
    coupling: CouplingOptions = field(default_factory=CouplingOptions)
    forecast: BoostConfig = field(default_factory=BoostConfig)
    train_fraction: float = 0.8
    features: tuple[str, ...] = DEFAULT_FEATURES
    classify: ClassifyOptions = field(default_factory=ClassifyOptions)
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    formats: tuple[str, ...] = EXPORT_FORMATS

    def __post_init__(self):
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError(f"seed must be an integer, got {self.seed!r}")
        if self.evolution.seed != self.seed:
            object.__setattr__(self, "evolution", replace(self.evolution, seed=self.seed))
        for name in ("bundle", "judgment", "series", "training", "catalog", "demand_file"):
            p = getattr(self, name)
            if p is None:
                continue
            p = Path(p)
            object.__setattr__(self, name, p)
            ok = p.is_dir() if name == "bundle" else p.is_file()
            if not ok:
                raise ConfigError(f"{name} path does not exist: {p}")
        object.__setattr__(self, "out", Path(self.out))
        bad = [f for f in self.formats if f not in EXPORT_FORMATS]
        if bad or not self.formats:
            raise ConfigError(f"export formats must be a non-empty subset of {EXPORT_FORMATS}, got {self.formats}")
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train_fraction must be in (0, 1)")
        if self.demand_file is not None and not self.skip_forecast:
            raise ConfigError("a demand file replaces forecasting; set skip_forecast as well")

    def companion(self, name: str) -> Path | None:
        """Explicit companion path, else the bundle's file of that name when present."""
        explicit = getattr(self, name)
        if explicit is not None:
            return explicit
        if self.bundle is not None and (self.bundle / COMPANION_FILES[name]).is_file():
            return self.bundle / COMPANION_FILES[name]
        return None

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, Path):
                d[k] = str(v)
        for name in ("judgment", "series", "training", "catalog"):
            p = self.companion(name)
            d[name] = None if p is None else str(p)
        return json.loads(json.dumps(d, default=str))


def read_config_file(path: str | Path) -> dict:
    """Parse a TOML or JSON config; the suffix decides, else both are tried."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    suffix = path.suffix.lower()
    order = ("json", "toml") if suffix == ".json" else ("toml", "json") if suffix == ".toml" else ("json", "toml")
    errors = []
    for kind in order:
        try:
            raw = json.loads(text) if kind == "json" else tomli.loads(text)
        except (json.JSONDecodeError, tomli.TOMLDecodeError) as exc:
            errors.append(f"{kind}: {exc}")
            if suffix in (".json", ".toml"):
                break
            continue
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be a table/object")
        return raw
    raise ConfigError(f"{path}: not valid TOML or JSON ({'; '.join(errors)})")


def _check_keys(raw: Mapping[str, Any]) -> None:
    for key, val in raw.items():
        if key in TOP_LEVEL:
            continue
        if key not in SECTIONS:
            raise ConfigError(f"unknown config key {key!r}")
        if not isinstance(val, dict):
            raise ConfigError(f"config section [{key}] must be a table")
        for sub in val:
            if sub not in SECTIONS[key]:
                raise ConfigError(f"unknown key {sub!r} in [{key}]")


def merge_overrides(raw: Mapping[str, Any], overrides: Mapping[str, Any]) -> dict:
    """Apply dotted-key overrides (``"evolution.generations": 10``); None values are ignored."""
    out = {k: dict(v) if isinstance(v, dict) else v for k, v in raw.items()}
    for key, val in overrides.items():
        if val is None:
            continue
        if "." in key:
            section, sub = key.split(".", 1)
            out.setdefault(section, {})[sub] = val
        else:
            out[key] = val
    return out


def _path(v, base: Path) -> Path | None:
    if v is None:
        return None
    if not isinstance(v, (str, Path)):
        raise ConfigError(f"expected a path, got {v!r}")
    p = Path(v).expanduser()
    return p if p.is_absolute() else base / p


def build_config(raw: Mapping[str, Any], base_dir: str | Path = ".") -> PipelineConfig:
    """Validate a raw config mapping and resolve it into a PipelineConfig."""
    _check_keys(raw)
    base = Path(base_dir)
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError(f"seed must be an integer, got {seed!r}")
    inputs = raw.get("inputs", {})
    stages = raw.get("stages", {})
    for k, v in stages.items():
        if not isinstance(v, bool):
            raise ConfigError(f"[stages] {k} must be true or false")
    try:
        cp = dict(raw.get("coupling", {}))
        if "active" in cp and cp["active"] is not None:
            cp["active"] = tuple(cp["active"])
        coupling = CouplingOptions(**cp)
        fc = dict(raw.get("forecast", {}))
        train_fraction = fc.pop("train_fraction", 0.8)
        features = tuple(fc.pop("features", DEFAULT_FEATURES))
        boost = BoostConfig(**fc)
        classify = ClassifyOptions(**raw.get("classify", {}))
        ev = dict(raw.get("evolution", {}))
        if "quantity_levels" in ev:
            ev["quantity_levels"] = tuple(ev["quantity_levels"])
        evolution = EvolutionConfig(seed=seed, **ev)
        formats = tuple(raw.get("export", {}).get("formats", EXPORT_FORMATS))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from None
    return PipelineConfig(
        bundle=_path(inputs.get("bundle"), base),
        out=_path(raw.get("out", "relief-run"), base),
        seed=seed,
        judgment=_path(inputs.get("judgment"), base),
        series=_path(inputs.get("series"), base),
        training=_path(inputs.get("training"), base),
        catalog=_path(inputs.get("catalog"), base),
        demand_file=_path(inputs.get("demand_file"), base),
        skip_coupling=stages.get("skip_coupling", False),
        skip_forecast=stages.get("skip_forecast", False),
        skip_classify=stages.get("skip_classify", False),
        coupling=coupling, forecast=boost, train_fraction=train_fraction, features=features,
        classify=classify, evolution=evolution, formats=formats,
    )


def load_config(path: str | Path | None = None, overrides: Mapping[str, Any] | None = None) -> PipelineConfig:
    """Read ``path`` (if any), apply ``overrides`` (flags win), validate.

    Paths in the file are relative to the file; paths given as flags are
    relative to the working directory.
    """
    raw: dict = {}
    base = Path.cwd()
    if path is not None:
        raw = read_config_file(path)
        base = Path(path).resolve().parent
    flags = {}
    for key, val in (overrides or {}).items():
        if isinstance(val, (str, Path)) and (key == "out" or key.startswith("inputs.")):
            val = str(Path(val).expanduser().resolve())
        flags[key] = val
    return build_config(merge_overrides(raw, flags), base)
