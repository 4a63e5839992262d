import csv
import json

import numpy as np
import pytest

from relief_layout.errors import IoError
from relief_layout.export import QUANTITY_COLUMNS, SOLUTION_COLUMNS, export_report, read_objectives
from relief_layout.model import CandidateSolution, evaluate
from relief_layout.nsga2 import EvolutionConfig, ParetoArchive, evolve
from relief_layout.synth import TINY_LEVELS, tiny_instance


@pytest.fixture(scope="module")
def archive():
    return evolve(tiny_instance(), EvolutionConfig(population_size=20, generations=10, seed=1,
                                                   quantity_levels=TINY_LEVELS))


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_empty_archive_header_only(tmp_path):
    files = export_report(ParetoArchive(), tmp_path / "empty.csv", "csv")
    assert _rows(files[0]) == [list(SOLUTION_COLUMNS)]
    assert _rows(files[1]) == [list(QUANTITY_COLUMNS)]
    doc = json.loads(export_report(ParetoArchive(), tmp_path / "empty.json")[0].read_text())
    assert doc["solutions"] == [] and doc["metadata"]["size"] == 0


@pytest.mark.parametrize("fmt", ["json", "csv"])
def test_objectives_round_trip(tmp_path, archive, fmt):
    path = export_report(archive, tmp_path / f"a.{fmt}", fmt, instance=tiny_instance(),
                         metadata={"active": ["flood"]})[0]
    back = read_objectives(path)
    assert np.array_equal(back, archive.objective_matrix())


def test_csv_layout(tmp_path, archive):
    inst = tiny_instance()
    main, qty, meta = export_report(archive, tmp_path / "a.csv", "csv", instance=inst, metadata={"c": 0.5})
    rows = _rows(main)
    assert rows[0] == list(SOLUTION_COLUMNS) and len(rows) == len(archive) + 1
    s = archive.solutions[0]
    assert rows[1][SOLUTION_COLUMNS.index("x_bits")] == "".join(str(int(v)) for v in s.X)
    assert rows[1][SOLUTION_COLUMNS.index("y_bits")].count("/") == inst.shape[0] - 1
    assert float(rows[1][SOLUTION_COLUMNS.index("coverage")]) == -s.objectives[1]
    q = [r for r in _rows(qty)[1:] if r[0] == "0"]
    assert sum(float(r[3]) for r in q) == s.Z.sum()
    m = json.loads(meta.read_text())
    assert m["scenario"] == {"c": 0.5} and m["supplier_ids"] == inst.supplier_ids


def test_forty_solution_archive(tmp_path):
    inst = tiny_instance()
    sols = []
    for n in range(40):
        s = CandidateSolution.empty(inst)
        s.Z[0, 0] = n
        sols.append(evaluate(s, inst))
    arch = ParetoArchive(sols)
    for fmt in ("csv", "json"):
        path = export_report(arch, tmp_path / f"forty.{fmt}", fmt)[0]
        assert read_objectives(path).shape == (40, 4)
    assert len(_rows(tmp_path / "forty.csv")) == 41


def test_unwritable_path(tmp_path, archive):
    blocker = tmp_path / "file"
    blocker.write_text("")
    for fmt in ("json", "csv"):
        with pytest.raises(IoError):
            export_report(archive, blocker / "x" / f"a.{fmt}", fmt)


def test_identical_runs_byte_identical(tmp_path):
    cfg = EvolutionConfig(population_size=20, generations=8, seed=7, quantity_levels=TINY_LEVELS)
    for run in ("r1", "r2"):
        arch = evolve(tiny_instance(), cfg)
        export_report(arch, tmp_path / run / "a.json", "json")
        export_report(arch, tmp_path / run / "a.csv", "csv")
    for name in ("a.json", "a.csv", "a.quantities.csv", "a.meta.json"):
        assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()
