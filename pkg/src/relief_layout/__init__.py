"""Joint-supplier pre-positioning of emergency materials for compound disasters.

Stages: disaster coupling analysis (``coupling``), demand forecasting
(``forecast``), material classification (``classify``), the layout model
(``model``) and its NSGA-II solver (``nsga2``), tied together by
``pipeline`` and the ``relief-layout`` command.
"""

__version__ = "0.1.0"

from .bundle import load_bundle, load_instance, save_instance  # noqa: E402
from .export import export_report  # noqa: E402
from .model import CandidateSolution, ProblemInstance, check_constraints, evaluate  # noqa: E402
from .nsga2 import EvolutionConfig, ParetoArchive, brute_force_pareto, evolve  # noqa: E402

__all__ = [
    "__version__", "load_bundle", "load_instance", "save_instance", "export_report",
    "CandidateSolution", "ProblemInstance", "check_constraints", "evaluate",
    "EvolutionConfig", "ParetoArchive", "brute_force_pareto", "evolve",
]
