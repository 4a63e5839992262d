"""Machine-readable archive exports for plotting and downstream analysis.

CSV export writes three files next to each other:

* ``<stem>.csv``: one row per solution (objectives, violation, X and y bitmaps)
* ``<stem>.quantities.csv``: long-format Z table, non-zero quantities only
* ``<stem>.meta.json``: scenario and run metadata

JSON export writes everything into one file. Objectives are written as
cost, coverage (positive, higher is better), gap and time; floats use
``repr`` so a parse gives back the exact stored values.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Literal

import numpy as np

from .errors import IoError, SchemaError
from .model import OBJECTIVE_NAMES, ProblemInstance
from .nsga2 import ParetoArchive

SOLUTION_COLUMNS = ("solution", "generation", "seed", "violation") + OBJECTIVE_NAMES + ("x_bits", "y_bits")
QUANTITY_COLUMNS = ("solution", "supplier_id", "material_id", "quantity")
OBJECTIVE_SENSE = {"cost": "min", "coverage": "max", "gap": "min", "time": "min"}
FORMAT_VERSION = 1


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _reported(objs: np.ndarray) -> list[float]:
    """Stored minimization vector -> reported values (coverage flipped positive)."""
    out = [float(v) for v in objs]
    out[1] = -out[1]
    return out


def _labels(archive: ParetoArchive, inst: ProblemInstance | None) -> tuple[list[str], list[str], list[str]]:
    if inst is not None:
        return inst.supplier_ids, inst.area_ids, inst.material_ids
    if not archive.solutions:
        return [], [], []
    s = archive.solutions[0]
    J, F = s.y.shape
    I = s.Z.shape[1]
    return [f"j{j}" for j in range(J)], [f"f{f}" for f in range(F)], [f"i{i}" for i in range(I)]


def archive_metadata(archive: ParetoArchive, inst: ProblemInstance | None = None,
                     extra: dict | None = None) -> dict:
    sup, area, mat = _labels(archive, inst)
    meta = {
        "format_version": FORMAT_VERSION,
        "size": len(archive),
        "infeasible": bool(archive.infeasible),
        "seed": archive.seed,
        "objective_names": list(OBJECTIVE_NAMES),
        "objective_sense": OBJECTIVE_SENSE,
        "supplier_ids": sup,
        "area_ids": area,
        "material_ids": mat,
        "evolution": dict(archive.metadata),
    }
    if extra:
        meta["scenario"] = extra
    return meta


def _bits(a: np.ndarray) -> str:
    return "".join("1" if v else "0" for v in np.asarray(a).ravel())


def _solution_rows(archive: ParetoArchive) -> list[list]:
    rows = []
    for n, s in enumerate(archive.solutions):
        if not s.evaluated:
            raise SchemaError(f"solution {n} has no cached evaluation")
        rows.append([n, s.generation, s.seed, float(s.violation_total), *_reported(s.objectives),
                     _bits(s.X), "/".join(_bits(row) for row in s.y)])
    return rows


def export_report(archive: ParetoArchive, path: str | Path, fmt: Literal["json", "csv"] = "json",
                  instance: ProblemInstance | None = None, metadata: dict | None = None) -> list[Path]:
    """Write ``archive`` to ``path`` and return every file written."""
    if fmt not in ("json", "csv"):
        raise ValueError(f"unknown export format {fmt!r}")
    path = Path(path)
    meta = archive_metadata(archive, instance, metadata)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if fmt == "json":
            return [_write_json(archive, path, meta)]
        return _write_csv(archive, path, meta)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _write_json(archive: ParetoArchive, path: Path, meta: dict) -> Path:
    sup, _, mat = meta["supplier_ids"], meta["area_ids"], meta["material_ids"]
    sols = []
    for row, s in zip(_solution_rows(archive), archive.solutions):
        Z = np.asarray(s.Z)
        sols.append({
            "solution": row[0], "generation": row[1], "seed": row[2], "violation": row[3],
            "objectives": dict(zip(OBJECTIVE_NAMES, row[4:8])),
            "x_bits": row[8], "y_bits": row[9],
            "quantities": {sup[j]: {mat[i]: float(Z[j, i]) for i in np.flatnonzero(Z[j])}
                           for j in range(Z.shape[0]) if Z[j].any()},
        })
    doc = {"metadata": meta, "history": archive.history, "solutions": sols}
    path.write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    return path


def _write_csv(archive: ParetoArchive, path: Path, meta: dict) -> list[Path]:
    sup, mat = meta["supplier_ids"], meta["material_ids"]
    qpath = path.with_name(path.stem + ".quantities.csv")
    mpath = path.with_name(path.stem + ".meta.json")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SOLUTION_COLUMNS)
        for row in _solution_rows(archive):
            w.writerow([_fmt(v) for v in row])
    with open(qpath, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(QUANTITY_COLUMNS)
        for n, s in enumerate(archive.solutions):
            Z = np.asarray(s.Z)
            for j, i in zip(*np.nonzero(Z)):
                w.writerow([n, sup[j], mat[i], _fmt(float(Z[j, i]))])
    mpath.write_text(json.dumps(meta, indent=1) + "\n", encoding="utf-8")
    return [path, qpath, mpath]


def read_objectives(path: str | Path) -> np.ndarray:
    """Parse an export back into the (n, 4) minimization matrix the archive stores."""
    path = Path(path)
    if path.suffix == ".json":
        doc = json.loads(path.read_text(encoding="utf-8"))
        vals = [[s["objectives"][k] for k in OBJECTIVE_NAMES] for s in doc["solutions"]]
    else:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != SOLUTION_COLUMNS:
                raise SchemaError(f"{path}: header does not match {SOLUTION_COLUMNS}")
            vals = [[float(r[k]) for k in OBJECTIVE_NAMES] for r in reader]
    objs = np.array(vals, dtype=float).reshape(-1, len(OBJECTIVE_NAMES))
    objs[:, 1] = -objs[:, 1]
    return objs
