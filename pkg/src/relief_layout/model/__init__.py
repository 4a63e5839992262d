from .constraints import (FAMILIES, FAMILY_IDS, NUMBERED_FAMILIES, ConstraintReport, Violation,
                          check_constraints, violation_totals_batch)
from .instance import (COMMON, EXISTING, FRAMEWORK, GOVERNMENT, MAX_RESCUE_TIME, SPECIAL, SUPPLIER_KINDS,
                       CandidateSolution, CountBounds, DisasterArea, LinkData, Material, ProblemInstance,
                       Supplier)
from .objectives import (OBJECTIVE_NAMES, coverage_satisfaction, evaluate_cost, evaluate_coverage,
                         evaluate_rescue_time, evaluate_supply_gap, objectives_batch, unserved_areas)
from .scenario import REFERENCE_SCENARIOS, DisasterScenario, coupled_demand


def evaluate(sol: CandidateSolution, inst: ProblemInstance) -> CandidateSolution:
    """Fill the cached objective vector and violation total of ``sol`` in place."""
    sol.check_shape(inst)
    sol.objectives = objectives_batch(inst, sol.X, sol.y, sol.Z)[0]
    sol.violation_total = float(violation_totals_batch(inst, sol.X, sol.y, sol.Z)[0])
    return sol
