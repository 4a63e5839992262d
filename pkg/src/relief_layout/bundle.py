"""Instance bundles: a directory of CSV tables plus ``bounds.json``.

Files and their exact headers::

    areas.csv      area_id, disaster_type, location, longitude, latitude, seismic_intensity,
                   threat_population, threaten_property, disaster_level, danger_level,
                   prevention_suggestions, monitoring_recommendations, destroyed_houses
    materials.csv  material_id, material_type, specific_type, converted_area,
                   conversion_coefficient, max_rescue_time
    suppliers.csv  one row per (supplier, material): supplier_id, supplier_type, location,
                   longitude, latitude, supplier_volume, fixed_cost, coverage_share,
                   material_type, specific_material, material_quantity, unit_cost,
                   longest_rescue_time
    links.csv      disaster_point, rescue_point, distance, min_radius, max_radius,
                   coverage_expectation, rescue_time, speed
    demands.csv    area_id, material_id, demand

``coverage_expectation``, ``rescue_time``, the supplier rows' ``material_type`` and
``longest_rescue_time`` are derived values; they are checked against the
inputs they derive from and a mismatch produces a warning, not an error.
Pipeline companions (judgment, series, training and catalog CSVs) may sit in
the same directory.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import BundleWarning, IntegrityError, IoError, RangeError, SchemaError
from .model import (EXISTING, SUPPLIER_KINDS, CountBounds, DisasterArea, LinkData, Material, ProblemInstance,
                    Supplier)
from .model.objectives import coverage_satisfaction

logger = logging.getLogger(__name__)

AREA_ATTRIBUTES = ("location", "seismic_intensity", "threat_population", "threaten_property", "disaster_level",
                   "danger_level", "prevention_suggestions", "monitoring_recommendations", "destroyed_houses")
NUMERIC_ATTRIBUTES = ("seismic_intensity", "threat_population", "threaten_property", "disaster_level",
                      "destroyed_houses")

SCHEMAS = {
    "areas.csv": ("area_id", "disaster_type", "location", "longitude", "latitude", "seismic_intensity",
                  "threat_population", "threaten_property", "disaster_level", "danger_level",
                  "prevention_suggestions", "monitoring_recommendations", "destroyed_houses"),
    "materials.csv": ("material_id", "material_type", "specific_type", "converted_area",
                      "conversion_coefficient", "max_rescue_time"),
    "suppliers.csv": ("supplier_id", "supplier_type", "location", "longitude", "latitude", "supplier_volume",
                      "fixed_cost", "coverage_share", "material_type", "specific_material", "material_quantity",
                      "unit_cost", "longest_rescue_time"),
    "links.csv": ("disaster_point", "rescue_point", "distance", "min_radius", "max_radius",
                  "coverage_expectation", "rescue_time", "speed"),
    "demands.csv": ("area_id", "material_id", "demand"),
}
BOUNDS_FILE = "bounds.json"
BOUNDS_KEYS = SUPPLIER_KINDS
BOUNDS_OPTIONAL = ("total", "big_m", "name")
BUNDLE_FILES = tuple(SCHEMAS) + (BOUNDS_FILE,)
COMPANION_FILES = {"judgment": "judgment.csv", "series": "series.csv", "training": "training.csv",
                   "catalog": "catalog.csv"}

# relative tolerance for derived columns
DERIVED_RTOL = 1e-3


@dataclass
class LoadedBundle:
    instance: ProblemInstance
    warnings: list[str] = field(default_factory=list)
    digests: dict[str, str] = field(default_factory=dict)

    @property
    def digest(self) -> str:
        return combined_digest(self.digests)


def example_bundle_dir() -> Path:
    """Directory of the example bundle shipped with the package."""
    return Path(str(resources.files("relief_layout") / "data" / "example"))


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def combined_digest(digests: dict[str, str]) -> str:
    h = hashlib.sha256()
    for name in sorted(digests):
        h.update(f"{name}:{digests[name]}\n".encode())
    return h.hexdigest()


# ---------------------------------------------------------------- reading

def _read_table(path: Path, expected: tuple[str, ...]) -> list[tuple[int, dict[str, str]]]:
    if not path.is_file():
        raise SchemaError(f"{path}: file not found")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected header {', '.join(expected)}") from None
        for col in expected:
            if col not in header:
                raise SchemaError(f"{path}: missing column {col!r}")
        extra = [h for h in header if h not in expected]
        if extra:
            raise SchemaError(f"{path}: unexpected column {extra[0]!r}")
        if len(header) != len(set(header)):
            dup = next(h for h in header if header.count(h) > 1)
            raise SchemaError(f"{path}: duplicate column {dup!r}")
        rows = []
        for lineno, cells in enumerate(reader, start=2):
            if not cells or not any(c.strip() for c in cells):
                continue
            if len(cells) != len(header):
                raise SchemaError(f"{path}:{lineno}: {len(cells)} cells, header has {len(header)}")
            rows.append((lineno, {h: c.strip() for h, c in zip(header, cells)}))
    return rows


def _num(row: dict, col: str, where: str, optional: bool = False) -> float | None:
    cell = row[col]
    if cell == "":
        if optional:
            return None
        raise SchemaError(f"{where}: empty value in column {col!r}")
    try:
        v = float(cell)
    except ValueError:
        raise SchemaError(f"{where}: column {col!r} is not a number: {cell!r}") from None
    if not math.isfinite(v):
        raise RangeError(f"{where}: column {col!r} must be finite")
    return v


def _nonneg(row: dict, col: str, where: str) -> float:
    v = _num(row, col, where)
    if v < 0:
        raise RangeError(f"{where}: {col} must be >= 0, got {v}")
    return v


def _mismatch(stored: float, derived: float) -> bool:
    return not math.isclose(stored, derived, rel_tol=DERIVED_RTOL, abs_tol=1e-9)


def _load_materials(bundle: Path) -> dict[str, Material]:
    out = {}
    for lineno, row in _read_table(bundle / "materials.csv", SCHEMAS["materials.csv"]):
        where = f"materials.csv:{lineno}"
        mid = row["material_id"]
        if mid in out:
            raise IntegrityError(f"{where}: duplicate material id {mid!r}")
        out[mid] = Material(mid, row["material_type"], _num(row, "converted_area", where),
                            _num(row, "max_rescue_time", where),
                            conversion_coefficient=_num(row, "conversion_coefficient", where, optional=True),
                            specific_type=row["specific_type"])
    return out


def _load_areas(bundle: Path) -> dict[str, dict]:
    out = {}
    for lineno, row in _read_table(bundle / "areas.csv", SCHEMAS["areas.csv"]):
        where = f"areas.csv:{lineno}"
        aid = row["area_id"]
        if aid in out:
            raise IntegrityError(f"{where}: duplicate area id {aid!r}")
        for col in NUMERIC_ATTRIBUTES:
            _num(row, col, where, optional=True)
        attrs = {c: row[c] for c in AREA_ATTRIBUTES if row[c] != ""}
        out[aid] = {"disaster_type": row["disaster_type"], "longitude": _num(row, "longitude", where),
                    "latitude": _num(row, "latitude", where), "attributes": attrs, "demand": {}}
    return out


def _load_demands(bundle: Path, areas: dict, materials: dict) -> None:
    for lineno, row in _read_table(bundle / "demands.csv", SCHEMAS["demands.csv"]):
        where = f"demands.csv:{lineno}"
        aid, mid = row["area_id"], row["material_id"]
        if aid not in areas:
            raise IntegrityError(f"{where}: unknown area id {aid!r}")
        if mid not in materials:
            raise IntegrityError(f"{where}: unknown material id {mid!r}")
        if mid in areas[aid]["demand"]:
            raise IntegrityError(f"{where}: duplicate demand for ({aid}, {mid})")
        areas[aid]["demand"][mid] = _nonneg(row, "demand", where)


_SUPPLIER_FIELDS = ("supplier_type", "location", "longitude", "latitude", "supplier_volume", "fixed_cost",
                    "coverage_share")


def _load_suppliers(bundle: Path, materials: dict, notes: list[str]) -> list[Supplier]:
    groups: dict[str, dict] = {}
    for lineno, row in _read_table(bundle / "suppliers.csv", SCHEMAS["suppliers.csv"]):
        where = f"suppliers.csv:{lineno}"
        sid, mid = row["supplier_id"], row["specific_material"]
        if mid not in materials:
            raise IntegrityError(f"{where}: unknown material id {mid!r}")
        g = groups.get(sid)
        if g is None:
            g = groups[sid] = {"head": {c: row[c] for c in _SUPPLIER_FIELDS}, "where": where,
                               "cost": {}, "qty": {}}
        else:
            for c in _SUPPLIER_FIELDS:
                if row[c] != g["head"][c]:
                    raise IntegrityError(f"{where}: supplier {sid!r} has inconsistent {c!r} across rows")
        if mid in g["cost"]:
            raise IntegrityError(f"{where}: duplicate row for ({sid}, {mid})")
        g["cost"][mid] = _num(row, "unit_cost", where)
        g["qty"][mid] = _nonneg(row, "material_quantity", where)
        mat = materials[mid]
        if row["material_type"] != mat.kind:
            notes.append(f"{where}: material_type {row['material_type']!r} disagrees with "
                         f"materials.csv ({mat.kind!r}) for {mid}")
        lrt = _num(row, "longest_rescue_time", where)
        if _mismatch(lrt, mat.max_rescue_time):
            notes.append(f"{where}: longest_rescue_time {lrt} disagrees with material {mid} "
                         f"limit {mat.max_rescue_time}")
    out = []
    for sid, g in groups.items():
        head, where = g["head"], g["where"]
        kind = head["supplier_type"]
        qty = g["qty"] if kind == EXISTING else {m: q for m, q in g["qty"].items() if q != 0}
        volume = _num(head, "supplier_volume", where)
        if volume <= 0:
            raise RangeError(f"{where}: supplier_volume of {sid} must be > 0, got {volume}")
        out.append(Supplier(sid, kind, volume, g["cost"], _num(head, "coverage_share", where),
                            fixed_cost=_num(head, "fixed_cost", where), stock=qty, location=head["location"],
                            longitude=_num(head, "longitude", where), latitude=_num(head, "latitude", where)))
    return out


def _load_links(bundle: Path, suppliers: dict[str, Supplier], areas: dict, notes: list[str]) -> dict:
    links = {}
    for lineno, row in _read_table(bundle / "links.csv", SCHEMAS["links.csv"]):
        where = f"links.csv:{lineno}"
        aid, sid = row["disaster_point"], row["rescue_point"]
        if sid not in suppliers:
            raise IntegrityError(f"{where}: unknown supplier id {sid!r}")
        if aid not in areas:
            raise IntegrityError(f"{where}: unknown area id {aid!r}")
        if (sid, aid) in links:
            raise IntegrityError(f"{where}: duplicate link ({sid}, {aid})")
        try:
            link = LinkData(_num(row, "distance", where), _num(row, "speed", where),
                            _num(row, "min_radius", where), _num(row, "max_radius", where))
        except RangeError as exc:
            raise RangeError(f"{where}: {exc}") from None
        links[(sid, aid)] = link
        t = _num(row, "rescue_time", where)
        if _mismatch(t, link.time):
            notes.append(f"{where}: rescue_time {t} != distance / speed = {link.time}")
        share = suppliers[sid].coverage_share
        ce = _num(row, "coverage_expectation", where)
        expect = share * coverage_satisfaction(link.distance, link.min_radius, link.max_radius)
        if _mismatch(ce, expect):
            notes.append(f"{where}: coverage_expectation {ce} != share * satisfaction = {expect}")
    return links


def _pair(v, key: str) -> tuple[int, int] | None:
    if v is None:
        return None
    if not isinstance(v, list) or len(v) != 2 or not all(isinstance(x, int) and not isinstance(x, bool)
                                                         for x in v):
        raise SchemaError(f"{BOUNDS_FILE}: {key!r} must be [min, max] integers, got {v!r}")
    return v[0], v[1]


def _load_bounds(bundle: Path) -> tuple[CountBounds, float | None, str]:
    path = bundle / BOUNDS_FILE
    if not path.is_file():
        raise SchemaError(f"{path}: file missing from bundle")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise SchemaError(f"{path}: expected a JSON object")
    for key in BOUNDS_KEYS:
        if key not in raw:
            raise SchemaError(f"{path}: missing key {key!r}")
    extra = [k for k in raw if k not in BOUNDS_KEYS + BOUNDS_OPTIONAL]
    if extra:
        raise SchemaError(f"{path}: unexpected key {extra[0]!r}")
    per_kind = {k: _pair(raw[k], k) for k in BOUNDS_KEYS if raw[k] is not None}
    big_m = raw.get("big_m")
    if big_m is not None:
        if not isinstance(big_m, (int, float)) or isinstance(big_m, bool):
            raise SchemaError(f"{path}: 'big_m' must be a number")
        if not big_m > 0:
            raise RangeError(f"{path}: big_m must be > 0")
        big_m = float(big_m)
    return CountBounds(per_kind, _pair(raw.get("total"), "total")), big_m, str(raw.get("name", ""))


def load_bundle(bundle_dir: str | Path) -> LoadedBundle:
    """Parse and validate a bundle; derived-value mismatches are collected as warnings."""
    bundle = Path(bundle_dir)
    if not bundle.is_dir():
        raise SchemaError(f"{bundle}: bundle directory not found")
    notes: list[str] = []
    materials = _load_materials(bundle)
    areas = _load_areas(bundle)
    _load_demands(bundle, areas, materials)
    suppliers = _load_suppliers(bundle, materials, notes)
    by_id = {s.id: s for s in suppliers}
    links = _load_links(bundle, by_id, areas, notes)
    bounds, big_m, name = _load_bounds(bundle)
    area_objs = tuple(DisasterArea(aid, a["disaster_type"], a["demand"], a["longitude"], a["latitude"],
                                   a["attributes"]) for aid, a in areas.items())
    inst = ProblemInstance(tuple(materials.values()), area_objs, tuple(suppliers), links, bounds, big_m, name)
    digests = {name: file_digest(bundle / name) for name in BUNDLE_FILES}
    return LoadedBundle(inst, notes, digests)


def load_instance(bundle_dir: str | Path) -> ProblemInstance:
    """Load a bundle, emitting one BundleWarning per derived-value mismatch."""
    loaded = load_bundle(bundle_dir)
    for note in loaded.warnings:
        warnings.warn(note, BundleWarning, stacklevel=2)
    return loaded.instance


def read_demand_csv(path: str | Path) -> dict[str, dict[str, float]]:
    """Demand table ``area_id,material_id,demand`` as {area: {material: demand}}."""
    path = Path(path)
    out: dict[str, dict[str, float]] = {}
    for lineno, row in _read_table(path, SCHEMAS["demands.csv"]):
        where = f"{path.name}:{lineno}"
        d = out.setdefault(row["area_id"], {})
        if row["material_id"] in d:
            raise IntegrityError(f"{where}: duplicate demand for ({row['area_id']}, {row['material_id']})")
        d[row["material_id"]] = _nonneg(row, "demand", where)
    return out


# ---------------------------------------------------------------- writing

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def write_demand_csv(path: str | Path, inst: ProblemInstance) -> None:
    rows = [(a.id, m, float(v)) for a in inst.areas for m, v in a.demand.items()]
    try:
        _write_rows(Path(path), SCHEMAS["demands.csv"], rows)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def save_instance(inst: ProblemInstance, bundle_dir: str | Path) -> None:
    """Write ``inst`` as a bundle that ``load_instance`` reads back unchanged."""
    out = Path(bundle_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        _save(inst, out)
    except OSError as exc:
        raise IoError(f"cannot write bundle to {out}: {exc}") from exc


def _save(inst: ProblemInstance, out: Path) -> None:
    mats = {m.id: m for m in inst.materials}
    _write_rows(out / "materials.csv", SCHEMAS["materials.csv"],
                [(m.id, m.kind, m.specific_type, float(m.converted_area),
                  None if m.conversion_coefficient is None else float(m.conversion_coefficient),
                  float(m.max_rescue_time)) for m in inst.materials])
    _write_rows(out / "areas.csv", SCHEMAS["areas.csv"],
                [(a.id, a.disaster_type, a.attributes.get("location", ""), float(a.longitude), float(a.latitude),
                  *(a.attributes.get(c, "") for c in AREA_ATTRIBUTES[1:])) for a in inst.areas])
    write_demand_csv(out / "demands.csv", inst)
    rows = []
    for s in inst.suppliers:
        listed = list(dict.fromkeys(list(s.unit_costs) + list(s.stock)))
        for mid in listed:
            m = mats[mid]
            rows.append((s.id, s.kind, s.location, float(s.longitude), float(s.latitude), float(s.capacity_area),
                         float(s.fixed_cost), float(s.coverage_share), m.kind, mid,
                         float(s.stock.get(mid, 0.0)), float(s.unit_costs.get(mid, 0.0)),
                         float(m.max_rescue_time)))
    _write_rows(out / "suppliers.csv", SCHEMAS["suppliers.csv"], rows)
    shares = {s.id: s.coverage_share for s in inst.suppliers}
    rows = []
    for (sid, aid), l in inst.links.items():
        ce = shares[sid] * coverage_satisfaction(l.distance, l.min_radius, l.max_radius)
        rows.append((aid, sid, float(l.distance), float(l.min_radius), float(l.max_radius), float(ce),
                     float(l.time), float(l.speed)))
    _write_rows(out / "links.csv", SCHEMAS["links.csv"], rows)
    b = inst.bounds
    bounds = {k: list(b.per_kind[k]) if k in b.per_kind else None for k in BOUNDS_KEYS}
    bounds["total"] = None if b.total is None else list(b.total)
    bounds["big_m"] = inst.big_m
    bounds["name"] = inst.name
    (out / BOUNDS_FILE).write_text(json.dumps(bounds, indent=2) + "\n", encoding="utf-8")
