"""End-to-end pipeline: load -> couple -> forecast -> classify -> optimize.

Every stage writes its outputs into the run directory. ``run_pipeline``
always returns (and writes) a RunReport, including when a stage fails; the
failing stage is named and downstream stages are marked ``not_run``.
"""
from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .bundle import file_digest, load_bundle, read_demand_csv, write_demand_csv
from .classify import cluster_materials, read_catalog_csv
from .config import PipelineConfig
from .coupling import PairwiseMatrix, analyze, read_series_csv
from .errors import ConfigError, IoError, ReliefLayoutError, SchemaError, UnknownScenario
from .export import export_report
from .forecast import evaluate, fit_booster, predict_many, read_training_csv, split_dataset
from .model import OBJECTIVE_NAMES, REFERENCE_SCENARIOS, DisasterScenario, ProblemInstance, coupled_demand
from .nsga2 import ParetoArchive, evolve

logger = logging.getLogger(__name__)

STAGES = ("load", "couple", "forecast", "classify", "optimize")
NEEDS_INSTANCE = ("load", "forecast", "optimize")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_INTERNAL = 4


@dataclass
class StageResult:
    name: str
    status: str = "not_run"      # ok | skipped | failed | not_run
    seconds: float = 0.0
    outputs: list[str] = field(default_factory=list)
    note: str = ""


@dataclass
class RunReport:
    seed: int
    config: dict
    stages: list[StageResult]
    digests: dict[str, str] = field(default_factory=dict)
    bundle_digest: str | None = None
    archive: dict | None = None
    warnings: list[str] = field(default_factory=list)
    failed_stage: str | None = None
    error: str | None = None
    error_type: str | None = None
    version: str = __version__

    @property
    def ok(self) -> bool:
        return self.failed_stage is None

    @property
    def exit_code(self) -> int:
        if self.failed_stage is not None:
            return EXIT_INPUT if self.error_type == "input" else EXIT_INTERNAL
        if self.archive is not None and self.archive["infeasible"]:
            return EXIT_INFEASIBLE
        return EXIT_OK

    def stage(self, name: str) -> StageResult:
        return next(s for s in self.stages if s.name == name)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["exit_code"] = self.exit_code
        return d

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")
        except OSError as exc:
            raise IoError(f"cannot write report {path}: {exc}") from exc
        return path


def archive_summary(archive: ParetoArchive) -> dict:
    """Size, feasibility and per-objective range (coverage reported positive)."""
    objs = archive.objective_matrix().copy()
    objs[:, 1] = -objs[:, 1]
    summary = {"size": len(archive), "infeasible": bool(archive.infeasible),
               "min": None, "max": None}
    if len(objs):
        summary["min"] = dict(zip(OBJECTIVE_NAMES, objs.min(axis=0).tolist()))
        summary["max"] = dict(zip(OBJECTIVE_NAMES, objs.max(axis=0).tolist()))
    return summary


@dataclass
class _Context:
    cfg: PipelineConfig
    report: RunReport
    instance: ProblemInstance | None = None
    scenario: DisasterScenario | None = None
    demand_path: Path | None = None
    archive: ParetoArchive | None = None

    @property
    def out(self) -> Path:
        return self.cfg.out

    def digest(self, path: Path) -> None:
        self.report.digests[str(path)] = file_digest(path)

    def write_json(self, name: str, doc: dict) -> Path:
        path = self.out / name
        try:
            path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        except OSError as exc:
            raise IoError(f"cannot write {path}: {exc}") from exc
        return path


# ---------------------------------------------------------------- stages

def _stage_load(ctx: _Context) -> list[Path]:
    loaded = load_bundle(ctx.cfg.bundle)
    ctx.instance = loaded.instance
    ctx.report.warnings.extend(loaded.warnings)
    ctx.report.bundle_digest = loaded.digest
    for name, d in loaded.digests.items():
        ctx.report.digests[str(ctx.cfg.bundle / name)] = d
    inst = ctx.instance
    J, F, I = inst.shape
    logger.info("bundle %s: %d suppliers, %d areas, %d materials (%d variables, %d constraints)",
                inst.name or ctx.cfg.bundle, J, F, I, inst.n_decision_variables, inst.n_constraints)
    return []


def _stage_couple(ctx: _Context) -> list[Path]:
    cfg, opts = ctx.cfg, ctx.cfg.coupling
    judgment, series_path = cfg.companion("judgment"), cfg.companion("series")
    ctx.digest(judgment)
    ctx.digest(series_path)
    matrix = PairwiseMatrix.from_csv(judgment)
    names, indicators, series = read_series_csv(series_path)
    active = list(opts.active) if opts.active is not None else names
    try:
        result = analyze(matrix, names, series, rho=opts.rho, polarity=opts.polarity,
                         pair_convention=opts.pair_convention, active=active)
    except KeyError as exc:
        raise UnknownScenario(str(exc)) from None
    ctx.report.warnings.extend(result.warnings)
    risk = opts.risk_index
    if risk is None:
        ref = REFERENCE_SCENARIOS.get(frozenset(active))
        if ref is None:
            risk = 0.0
            ctx.report.warnings.append(f"no risk index for {sorted(active)}; coupled demand left unscaled")
        else:
            risk = ref[1]
    scenario = DisasterScenario(tuple(active), result.coupling_degree, risk)
    if ctx.instance is not None:
        present = {a.disaster_type for a in ctx.instance.areas}
        absent = [d for d in scenario.active if d not in present]
        if absent:
            raise UnknownScenario(f"coupled disaster types absent from the bundle: {absent}")
    ctx.scenario = scenario
    doc = result.to_dict()
    doc["indicators"] = indicators
    doc["scenario"] = {"active": list(scenario.active), "coupling": scenario.coupling,
                       "risk_index": scenario.risk_index, "risk_reference": scenario.risk_reference,
                       "demand_factor": scenario.factor}
    logger.info("coupling degree over %s: %.6f (demand factor %.4f)", active, result.coupling_degree,
                scenario.factor)
    return [ctx.write_json("coupling.json", doc)]


def area_features(inst: ProblemInstance, features: Sequence[str]) -> np.ndarray:
    """(F, k) forecast features read from the areas' attributes."""
    rows = []
    for a in inst.areas:
        row = []
        for name in features:
            cell = a.attributes.get(name, "")
            if cell == "":
                raise SchemaError(f"area {a.id} has no value for forecast feature {name!r}")
            row.append(float(cell))
        rows.append(row)
    return np.array(rows, dtype=float).reshape(len(inst.areas), len(features))


def _stage_forecast(ctx: _Context) -> list[Path]:
    cfg, inst = ctx.cfg, ctx.instance
    training = cfg.companion("training")
    ctx.digest(training)
    datasets = read_training_csv(training, cfg.features)
    x = area_features(inst, cfg.features)
    demands = {a.id: dict(a.demand) for a in inst.areas}
    metrics, models = {}, {}
    for mid in inst.material_ids:
        data = datasets.get(mid)
        if data is None:
            ctx.report.warnings.append(f"no training rows for {mid}; bundle demand kept")
            continue
        train, test = split_dataset(data, cfg.train_fraction, seed=cfg.seed)
        model, fit = fit_booster(train, cfg.forecast)
        scores = evaluate(model, test)
        scores["baseline_rmse"] = float(np.sqrt(np.mean((test.targets - train.targets.mean()) ** 2)))
        scores["train_rmse"] = fit.train_rmse[-1] if fit.train_rmse else None
        metrics[mid] = scores
        models[mid] = model.to_dict()
        for a, v in zip(inst.areas, predict_many(model, x)):
            demands[a.id][mid] = float(v)
    path = ctx.out / "demands.csv"
    write_demand_csv(path, inst.with_demands(demands))
    ctx.demand_path = path
    doc = {"features": list(cfg.features), "train_fraction": cfg.train_fraction, "seed": cfg.seed,
           "metrics": metrics, "models": models}
    return [path, ctx.write_json("forecast.json", doc)]


def _stage_classify(ctx: _Context) -> list[Path]:
    cfg, opts = ctx.cfg, ctx.cfg.classify
    path = cfg.companion("catalog")
    ctx.digest(path)
    catalog = read_catalog_csv(path)
    result = cluster_materials(catalog, opts.threshold, variant=opts.variant,
                               hesitation_margin=opts.hesitation_margin)
    ctx.report.warnings.extend(result.warnings)
    if ctx.instance is not None:
        hints = {m.material_id: m.kind_hint.strip().lower() for m in catalog}
        for m in ctx.instance.materials:
            hint = hints.get(m.id)
            if hint is None:
                ctx.report.warnings.append(f"material {m.id} missing from the catalog")
            elif hint and (hint == "special") != (m.kind == "special"):
                ctx.report.warnings.append(f"catalog kind hint {hint!r} for {m.id} disagrees with bundle "
                                           f"kind {m.kind!r}")
    logger.info("classification: %d materials in %d groups", len(catalog), len(result.groups))
    return [ctx.write_json("classification.json", result.to_dict())]


def _stage_optimize(ctx: _Context) -> list[Path]:
    cfg = ctx.cfg
    inst = ctx.instance
    if ctx.demand_path is None and cfg.demand_file is not None:
        ctx.demand_path = cfg.demand_file
    if ctx.demand_path is not None:
        ctx.digest(ctx.demand_path)
        inst = inst.with_demands(read_demand_csv(ctx.demand_path))
    if ctx.scenario is not None:
        inst = coupled_demand(inst, ctx.scenario)
    ev = cfg.evolution
    logger.info("optimizing: population %d, %d generations, seed %d", ev.population_size, ev.generations, ev.seed)
    archive = evolve(inst, ev)
    ctx.archive = archive
    ctx.report.archive = archive_summary(archive)
    scenario = None
    if ctx.scenario is not None:
        scenario = {"active": list(ctx.scenario.active), "coupling": ctx.scenario.coupling,
                    "risk_index": ctx.scenario.risk_index, "demand_factor": ctx.scenario.factor}
    meta = {"coupled": scenario}
    written = []
    for fmt in cfg.formats:
        written += export_report(archive, ctx.out / f"archive.{fmt}", fmt, instance=inst, metadata=meta)
    if archive.infeasible:
        ctx.report.warnings.append("no feasible layout found; archive holds the least-violating candidates")
    logger.info("archive: %d solutions%s", len(archive), " (infeasible)" if archive.infeasible else "")
    return written


_RUNNERS: dict[str, Callable[[_Context], list[Path]]] = {
    "load": _stage_load, "couple": _stage_couple, "forecast": _stage_forecast,
    "classify": _stage_classify, "optimize": _stage_optimize,
}


def _skip_reason(ctx: _Context, name: str) -> str | None:
    cfg = ctx.cfg
    if name == "couple":
        if cfg.skip_coupling:
            return "skipped by configuration"
        if cfg.companion("judgment") is None or cfg.companion("series") is None:
            return "no judgment/series input"
    if name == "forecast":
        if cfg.skip_forecast:
            if cfg.demand_file is not None:
                ctx.demand_path = cfg.demand_file
                return f"demands taken from {cfg.demand_file}"
            return "skipped by configuration; bundle demands used"
        if cfg.companion("training") is None:
            return "no training input; bundle demands used"
    if name == "classify":
        if cfg.skip_classify:
            return "skipped by configuration"
        if cfg.companion("catalog") is None:
            return "no catalog input"
    return None


def _error_kind(exc: BaseException) -> str:
    if isinstance(exc, ReliefLayoutError) and not isinstance(exc, IoError):
        return "input"
    return "internal"


def run_pipeline(config: PipelineConfig, stages: Sequence[str] = STAGES) -> RunReport:
    """Run the selected stages in pipeline order and write ``report.json``."""
    if not isinstance(config, PipelineConfig):
        raise ConfigError("run_pipeline needs a PipelineConfig")
    unknown = [s for s in stages if s not in STAGES]
    if unknown:
        raise ConfigError(f"unknown stages {unknown}; choose from {STAGES}")
    selected = [s for s in STAGES if s in stages]
    if config.bundle is None:
        if any(s in NEEDS_INSTANCE for s in selected):
            raise ConfigError("an instance bundle is required for stages " +
                              ", ".join(s for s in selected if s in NEEDS_INSTANCE))
    elif "load" not in selected:
        selected.insert(0, "load")

    report = RunReport(config.seed, config.to_dict(), [StageResult(s) for s in selected])
    ctx = _Context(config, report)
    try:
        config.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create output directory {config.out}: {exc}") from exc

    for res in report.stages:
        reason = _skip_reason(ctx, res.name)
        if reason is not None:
            res.status, res.note = "skipped", reason
            logger.info("stage %s skipped: %s", res.name, reason)
            continue
        t0 = time.perf_counter()
        try:
            res.outputs = [str(p) for p in _RUNNERS[res.name](ctx)]
            res.status = "ok"
        except Exception as exc:        # noqa: BLE001 - every failure is reported
            res.status = "failed"
            res.note = f"{type(exc).__name__}: {exc}"
            report.failed_stage = res.name
            report.error = res.note
            report.error_type = _error_kind(exc)
            logger.error("stage %s failed: %s", res.name, res.note)
            if report.error_type == "internal":
                logger.debug("traceback", exc_info=True)
        finally:
            res.seconds = time.perf_counter() - t0
        if res.status == "failed":
            break
    report.write(config.out / "report.json")
    return report
