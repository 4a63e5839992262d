"""Synthetic problem instances and sample data.

* ``tiny_instance``: 2 areas x 4 suppliers x 2 materials, small enough to enumerate.
* ``scale_instance``: a large random instance (3500 decision variables by default).
* ``example_instance`` and the ``*_rows`` helpers: the shipped example bundle
  (22 materials, three disaster types) and its companion inputs.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .model import (COMMON, EXISTING, FRAMEWORK, GOVERNMENT, MAX_RESCUE_TIME, SPECIAL, CountBounds,
                    DisasterArea, LinkData, Material, ProblemInstance, Supplier)
from .model.objectives import coverage_satisfaction

TINY_LEVELS = (0.0, 0.5, 1.0)
DISASTER_TYPES = ("earthquake", "flood", "mudslide")


def tiny_instance() -> ProblemInstance:
    """2 areas x 4 suppliers (government, framework, two existing) x 2 materials."""
    materials = (
        Material("rescue_kit", SPECIAL, 0.5, MAX_RESCUE_TIME["rescue_equipment"], specific_type="rescue_equipment"),
        Material("food", COMMON, 0.2, MAX_RESCUE_TIME["food_daily_supplies"], conversion_coefficient=1.5,
                 specific_type="food_daily_supplies"),
    )
    areas = (
        DisasterArea("A1", "earthquake", {"rescue_kit": 20, "food": 20}, 103.6, 31.0),
        DisasterArea("A2", "flood", {"rescue_kit": 10, "food": 20}, 104.2, 30.6),
    )
    suppliers = (
        Supplier("G1", GOVERNMENT, 40.0, {"rescue_kit": 10.0, "food": 2.0}, 0.6, fixed_cost=500.0),
        Supplier("P1", FRAMEWORK, 40.0, {"rescue_kit": 12.0, "food": 3.0}, 0.5),
        Supplier("K1", EXISTING, 20.0, {"rescue_kit": 4.0, "food": 1.0}, 0.3,
                 stock={"rescue_kit": 15, "food": 30}),
        Supplier("K2", EXISTING, 30.0, {"rescue_kit": 4.0, "food": 1.5}, 0.3,
                 stock={"rescue_kit": 0, "food": 60}),
    )
    # K2 sits beyond every material's time limit from A1, so it can only serve A2
    dist = {"G1": (20, 45), "P1": (50, 15), "K1": (25, 35), "K2": (200, 30)}
    links = {}
    for sid, ds in dist.items():
        for aid, d in zip(("A1", "A2"), ds):
            links[(sid, aid)] = LinkData(float(d), 60.0, 10.0, 60.0)
    bounds = CountBounds({GOVERNMENT: (0, 1), FRAMEWORK: (0, 1), EXISTING: (0, 2)})
    return ProblemInstance(materials, areas, suppliers, links, bounds, name="tiny")


# ---------------------------------------------------------------- material catalog

@dataclass(frozen=True)
class CatalogEntry:
    id: str
    specific_type: str
    converted_area: float           # m2 per unit
    conversion_coefficient: float | None
    base_cost: float                # per unit
    # raw attribute scores used by the fuzzy classifier
    urgency: float
    substitutability: float
    shelf_life: float
    handling: float

    @property
    def kind(self) -> str:
        return SPECIAL if self.specific_type in ("rescue_equipment", "medical_supplies") else COMMON


MATERIAL_CATALOG = (
    CatalogEntry("life_detector", "rescue_equipment", 0.30, None, 120.0, 9.5, 1.0, 9.0, 7.0),
    CatalogEntry("hydraulic_cutter", "rescue_equipment", 0.40, None, 90.0, 9.0, 1.5, 9.0, 8.0),
    CatalogEntry("rescue_rope", "rescue_equipment", 0.05, None, 8.0, 8.5, 3.0, 8.0, 3.0),
    CatalogEntry("generator", "rescue_equipment", 0.80, None, 150.0, 8.0, 2.0, 9.5, 9.0),
    CatalogEntry("searchlight", "rescue_equipment", 0.10, None, 25.0, 8.0, 2.5, 8.5, 4.0),
    CatalogEntry("first_aid_kit", "medical_supplies", 0.02, None, 15.0, 9.0, 2.0, 5.0, 2.0),
    CatalogEntry("stretcher", "medical_supplies", 0.50, None, 40.0, 8.5, 2.5, 9.0, 5.0),
    CatalogEntry("medicine_pack", "medical_supplies", 0.01, None, 20.0, 9.0, 1.5, 3.0, 3.0),
    CatalogEntry("blood_plasma", "medical_supplies", 0.01, None, 60.0, 9.5, 1.0, 1.5, 9.0),
    CatalogEntry("disinfectant", "medical_supplies", 0.02, None, 5.0, 7.0, 4.0, 6.0, 4.0),
    CatalogEntry("bottled_water", "food_daily_supplies", 0.02, 1.2, 1.0, 7.5, 6.0, 6.0, 2.0),
    CatalogEntry("instant_noodles", "food_daily_supplies", 0.03, 1.0, 2.0, 6.0, 8.0, 5.0, 1.5),
    CatalogEntry("biscuits", "food_daily_supplies", 0.02, 1.0, 2.5, 6.0, 8.5, 5.5, 1.5),
    CatalogEntry("rice", "food_daily_supplies", 0.04, 0.8, 3.0, 5.0, 7.5, 7.0, 2.0),
    CatalogEntry("quilt", "food_daily_supplies", 0.15, 1.1, 12.0, 5.5, 7.0, 9.0, 2.5),
    CatalogEntry("clothing", "food_daily_supplies", 0.05, 1.3, 10.0, 4.5, 8.0, 9.0, 1.5),
    CatalogEntry("tent", "tents_logistics", 0.60, 1.0, 80.0, 7.0, 5.0, 9.0, 5.0),
    CatalogEntry("folding_bed", "tents_logistics", 0.40, 1.2, 30.0, 5.0, 7.0, 9.5, 3.5),
    CatalogEntry("tarpaulin", "tents_logistics", 0.08, 1.5, 6.0, 5.5, 8.0, 9.0, 2.0),
    CatalogEntry("mobile_toilet", "tents_logistics", 1.50, 1.0, 200.0, 4.0, 5.5, 9.5, 8.0),
    CatalogEntry("water_purifier", "tents_logistics", 0.30, 1.0, 70.0, 6.5, 4.5, 8.5, 6.0),
    CatalogEntry("lamp", "tents_logistics", 0.03, 1.4, 6.0, 4.5, 8.5, 8.5, 1.5),
)
CATALOG_FACTORS = ("urgency", "substitutability", "shelf_life", "handling")


def catalog_materials(entries=MATERIAL_CATALOG) -> tuple[Material, ...]:
    return tuple(Material(e.id, e.kind, e.converted_area, MAX_RESCUE_TIME[e.specific_type],
                          conversion_coefficient=e.conversion_coefficient, specific_type=e.specific_type)
                 for e in entries)


# ---------------------------------------------------------------- random instances

def _random_instance(rng: np.random.Generator, n_suppliers: int, n_areas: int, entries, name: str,
                     region_km: float, counts: dict[str, int], near_per_area: int) -> ProblemInstance:
    materials = catalog_materials(entries)
    I = len(materials)

    area_xy = rng.uniform(0.15, 0.85, size=(n_areas, 2)) * region_km
    # a few suppliers close to every area keep the tight rescue-time limits
    # reachable; the first of them is a stock-free government/framework site
    near = [area_xy[f] + rng.normal(0.0, 6.0, size=2) for f in range(n_areas) for _ in range(near_per_area)]
    rest = rng.uniform(0.0, region_km, size=(max(n_suppliers - len(near), 0), 2))
    sup_xy = np.vstack([np.array(near).reshape(-1, 2), rest])[:n_suppliers]
    anchors = list(range(0, min(len(near), n_suppliers), near_per_area))

    pool = [GOVERNMENT] * counts[GOVERNMENT] + [FRAMEWORK] * counts[FRAMEWORK]
    pool += [EXISTING] * (n_suppliers - len(pool))
    pool = [pool[k] for k in rng.permutation(n_suppliers)]
    kinds = [""] * n_suppliers
    for j in anchors:
        k = next((t for t, kind in enumerate(pool) if kind != EXISTING), None)
        if k is not None:
            kinds[j] = pool.pop(k)
    for j in range(n_suppliers):
        if not kinds[j]:
            kinds[j] = pool.pop()
    order = rng.permutation(n_suppliers)
    sup_xy, kinds = sup_xy[order], [kinds[k] for k in order]

    demand = np.rint(rng.uniform(10, 120, size=(n_areas, I)))
    areas = []
    for f in range(n_areas):
        dtype = DISASTER_TYPES[f % len(DISASTER_TYPES)]
        lon, lat = 103.0 + area_xy[f, 0] / 95.0, 30.0 + area_xy[f, 1] / 111.0
        areas.append(DisasterArea(f"F{f + 1:02d}", dtype, {m.id: float(demand[f, i]) for i, m in enumerate(materials)},
                                  round(lon, 5), round(lat, 5)))

    area_m2 = np.array([m.converted_area for m in materials])
    base_cost = np.array([e.base_cost for e in entries])
    suppliers = []
    for j in range(n_suppliers):
        kind = kinds[j]
        cost_scale = {GOVERNMENT: 1.0, FRAMEWORK: 1.2, EXISTING: 0.6}[kind]
        unit = {m.id: round(float(base_cost[i] * cost_scale * rng.uniform(0.85, 1.15)), 2)
                for i, m in enumerate(materials)}
        capacity = float(np.rint(rng.uniform(0.6, 1.2) * (demand.sum(axis=0) @ area_m2) / 4.0))
        stock = {}
        if kind == EXISTING:
            held = rng.random(I) < 0.6
            qty = np.where(held, np.rint(rng.uniform(0.3, 1.0, size=I) * demand.max(axis=0)), 0.0)
            used = qty @ area_m2
            if used > capacity:
                qty = np.floor(qty * capacity / used)
            stock = {m.id: float(qty[i]) for i, m in enumerate(materials)}
        fixed = float(np.rint(rng.uniform(2000, 5000))) if kind == GOVERNMENT else 0.0
        share = round(float(rng.uniform(0.2, 0.9)), 2)
        lon, lat = 103.0 + sup_xy[j, 0] / 95.0, 30.0 + sup_xy[j, 1] / 111.0
        suppliers.append(Supplier(f"S{j + 1:03d}", kind, capacity, unit, share, fixed_cost=fixed, stock=stock,
                                  location=f"site-{j + 1}", longitude=round(lon, 5), latitude=round(lat, 5)))

    links = {}
    for j, s in enumerate(suppliers):
        for f, a in enumerate(areas):
            d = float(np.round(np.hypot(*(sup_xy[j] - area_xy[f])) * 1.25, 2))   # road detour factor
            speed = float(rng.choice([40.0, 60.0, 80.0]))
            links[(s.id, a.id)] = LinkData(d, speed, 10.0, 60.0)

    # drawn last so the layout above does not depend on them
    areas = [replace(a, attributes=_area_attributes(rng, f, a.disaster_type)) for f, a in enumerate(areas)]

    n_kind = {k: kinds.count(k) for k in (GOVERNMENT, FRAMEWORK, EXISTING)}
    bounds = CountBounds({GOVERNMENT: (1, n_kind[GOVERNMENT]), FRAMEWORK: (0, n_kind[FRAMEWORK]),
                          EXISTING: (0, n_kind[EXISTING])})
    return ProblemInstance(materials, tuple(areas), tuple(suppliers), links, bounds, name=name)


_ADVICE = {
    "earthquake": ("reinforce school buildings", "seismograph network"),
    "flood": ("raise riverside embankments", "river gauge readings"),
    "mudslide": ("relocate slope-foot villages", "slope displacement sensors"),
}
DANGER_LEVELS = ("low", "moderate", "high", "severe")


def _area_attributes(rng: np.random.Generator, f: int, disaster_type: str) -> dict[str, str]:
    level = int(rng.integers(1, 5))
    prevention, monitoring = _ADVICE[disaster_type]
    return {
        "location": f"zone-{f + 1}",
        "seismic_intensity": f"{rng.uniform(4.0, 9.0):.1f}",
        "threat_population": str(int(rng.integers(200, 20000))),
        "threaten_property": str(int(rng.integers(50, 5000))),
        "disaster_level": str(level),
        "danger_level": DANGER_LEVELS[level - 1],
        "prevention_suggestions": prevention,
        "monitoring_recommendations": monitoring,
        "destroyed_houses": str(int(rng.integers(0, 3000))),
    }


def scale_instance(n_suppliers: int = 100, n_areas: int = 12, n_materials: int = 22,
                   seed: int = 0) -> ProblemInstance:
    """Random instance with J + J*F + J*I decision variables (3500 by default)."""
    if not 1 <= n_materials <= len(MATERIAL_CATALOG):
        raise ValueError(f"n_materials must be in [1, {len(MATERIAL_CATALOG)}]")
    rng = np.random.default_rng(seed)
    counts = {GOVERNMENT: max(1, n_suppliers // 10), FRAMEWORK: max(1, (3 * n_suppliers) // 10)}
    return _random_instance(rng, n_suppliers, n_areas, MATERIAL_CATALOG[:n_materials], f"scale-{seed}",
                            region_km=220.0, counts=counts, near_per_area=4)


def example_instance(seed: int = 7) -> ProblemInstance:
    """The shipped example: 22 materials, 9 areas over three disaster types, 30 suppliers."""
    rng = np.random.default_rng(seed)
    counts = {GOVERNMENT: 4, FRAMEWORK: 8}
    return _random_instance(rng, 30, 9, MATERIAL_CATALOG, "example", region_km=150.0, counts=counts,
                            near_per_area=3)


def link_expectation(share: float, link: LinkData) -> float:
    """Coverage expectation of one link: supplier share times gradual-coverage satisfaction."""
    return share * coverage_satisfaction(link.distance, link.min_radius, link.max_radius)


# ---------------------------------------------------------------- companion inputs

TRAINING_FEATURES = ("seismic_intensity", "threat_population", "threaten_property", "disaster_level",
                     "destroyed_houses")


def training_rows(n_events: int = 60, seed: int = 11, entries=MATERIAL_CATALOG) -> list[dict]:
    """Historical demand records: one row per (event, material)."""
    rng = np.random.default_rng(seed)
    rows = []
    for e in range(n_events):
        intensity = round(float(rng.uniform(4.0, 9.0)), 1)
        population = int(rng.integers(200, 20000))
        prop = int(rng.integers(50, 5000))
        level = int(rng.integers(1, 5))
        houses = int(rng.integers(0, 3000))
        for k, m in enumerate(entries):
            scale = 1.0 + 0.15 * (k % 3)
            mean = scale * (4.0 * intensity + population / 400.0 + 6.0 * level + houses / 150.0)
            demand = max(0.0, round(float(mean + rng.normal(0.0, 3.0)), 1))
            rows.append({"event_id": f"E{e + 1:03d}", "material_id": m.id, "seismic_intensity": intensity,
                         "threat_population": population, "threaten_property": prop, "disaster_level": level,
                         "destroyed_houses": houses, "demand": demand})
    return rows


def catalog_rows(entries=MATERIAL_CATALOG) -> list[dict]:
    """Material catalog for the fuzzy classifier (kind hint plus raw factor scores)."""
    return [{"material_id": e.id, "kind_hint": e.kind, **{f: getattr(e, f) for f in CATALOG_FACTORS}}
            for e in entries]


# judgment matrix over (intensity, population, property, disaster level)
EXAMPLE_JUDGMENT = (
    (1.0, 3.0, 1.0, 1 / 3),
    (1 / 3, 1.0, 0.5, 0.2),
    (1.0, 2.0, 1.0, 1 / 3),
    (3.0, 5.0, 3.0, 1.0),
)
COUPLING_INDICATORS = ("intensity", "population", "property", "disaster_level")
# per-subsystem indicator series, one row per disaster type
EXAMPLE_SERIES = (
    ("earthquake", (7.8, 12000.0, 3400.0, 4.0)),
    ("flood", (6.5, 15000.0, 3900.0, 3.0)),
    ("mudslide", (5.9, 6000.0, 2100.0, 3.0)),
)


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow(header)
        w.writerows(rows)


def write_example_bundle(out_dir) -> Path:
    """Write the example instance and its pipeline companions to ``out_dir``."""
    from .bundle import COMPANION_FILES, save_instance

    out = Path(out_dir)
    save_instance(example_instance(), out)
    _write_csv(out / COMPANION_FILES["judgment"], None, [[repr(float(v)) for v in row] for row in EXAMPLE_JUDGMENT])
    _write_csv(out / COMPANION_FILES["series"], ("subsystem",) + COUPLING_INDICATORS,
               [(name, *vals) for name, vals in EXAMPLE_SERIES])
    rows = training_rows()
    _write_csv(out / COMPANION_FILES["training"], list(rows[0]), [list(r.values()) for r in rows])
    rows = catalog_rows()
    _write_csv(out / COMPANION_FILES["catalog"], list(rows[0]), [list(r.values()) for r in rows])
    return out
