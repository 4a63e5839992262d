from dataclasses import replace

import numpy as np
import pytest

from relief_layout.bundle import example_bundle_dir
from relief_layout.model import CountBounds
from relief_layout.synth import tiny_instance


def power_iteration(a, iters=10_000, tol=1e-15):
    """Principal eigenpair of a positive matrix, independent of the library code."""
    a = np.asarray(a, dtype=float)
    v = np.ones(a.shape[0]) / a.shape[0]
    lam = 0.0
    for _ in range(iters):
        w = a @ v
        new_lam = w.sum() / v.sum()
        w = w / w.sum()
        if np.max(np.abs(w - v)) < tol and abs(new_lam - lam) < tol:
            v, lam = w, new_lam
            break
        v, lam = w, new_lam
    return lam, v


def random_reciprocal(rng, n):
    scale = np.array([1 / 9, 1 / 7, 1 / 5, 1 / 3, 1 / 2, 1, 2, 3, 5, 7, 9])
    a = np.ones((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            v = rng.choice(scale)
            a[i, j], a[j, i] = v, 1 / v
    return a


@pytest.fixture(scope="session")
def tiny():
    return tiny_instance()


@pytest.fixture(scope="session")
def example_dir():
    return example_bundle_dir()


def tiny_feasible(inst):
    """Hand-built feasible layout on the tiny instance: G1 serves A1, P1 serves A2.

    A1 needs 20 kits and 20 * 1.5 = 30 food units; A2 needs 10 kits and 30 food.
    Links used: G1->A1 20 km (0.33 h), P1->A2 15 km (0.25 h), both within the 0.5 h kit limit.
    """
    from relief_layout.model import CandidateSolution

    J, F, I = inst.shape
    assert inst.supplier_ids == ["G1", "P1", "K1", "K2"]
    X = np.array([1, 1, 0, 0])
    y = np.zeros((J, F), dtype=int)
    y[0, 0] = y[1, 1] = 1
    Z = np.zeros((J, I))
    Z[0] = (20, 30)
    Z[1] = (10, 30)
    return CandidateSolution(X, y, Z)


def mini_instance(materials, areas, suppliers, links, bounds=None, **kw):
    from relief_layout.model import CountBounds, ProblemInstance

    return ProblemInstance(tuple(materials), tuple(areas), tuple(suppliers), links,
                           bounds or CountBounds({}), **kw)


def _bounds(inst, **per_kind):
    kinds = dict(inst.bounds.per_kind)
    total = per_kind.pop("total", inst.bounds.total)
    kinds.update(per_kind)
    return replace(inst, bounds=CountBounds(kinds, total))


def inject_violation(tiny, family):
    """(instance, solution) pair in which the named family is violated by construction."""
    inst, sol = tiny, tiny_feasible(tiny)
    if family == "total_count":
        inst = _bounds(tiny, total=(0, 1))
    elif family == "government_count":
        inst = _bounds(tiny, government=(0, 0))
    elif family == "framework_count":
        inst = _bounds(tiny, framework=(0, 0))
    elif family == "existing_count":
        inst = _bounds(tiny, existing=(1, 2))
    elif family == "government_capacity":
        sol.Z[0, 1] = 200
    elif family == "existing_capacity":
        sol.X[2], sol.y[2, 0], sol.Z[2] = 1, 1, (15, 100)
    elif family == "framework_capacity":
        sol.Z[1, 1] = 300
    elif family == "common_demand":
        sol.Z[0, 1] = 10
    elif family == "special_demand":
        sol.Z[0, 0] = 5
    elif family == "special_service_link":
        sol.X[2], sol.Z[2, 0] = 1, 5
    elif family == "service_activation":
        sol.y[3, 1] = 1
    elif family == "stocking_link":
        sol.X[3] = 1
    elif family == "area_service":
        sol.y[1, 1] = 0
    elif family == "binary_domain":
        sol.y = sol.y.astype(float)
        sol.y[0, 0] = 0.5
    elif family == "nonnegative_quantity":
        sol.X[3], sol.Z[3, 1] = 1, -5
    else:
        raise KeyError(family)
    return inst, sol


ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(n: int, passed: bool, detail: str) -> str:
    line = f"criterion {n}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[n] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
