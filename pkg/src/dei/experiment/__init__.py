from .generality import generality, load_corpus, load_pool_seeds
from .report import (
    ReportError,
    RunData,
    TrialData,
    generality_series,
    load_run,
    merged_qd_series,
    write_line_svg,
    write_merged_csv,
    write_report,
    write_summary_csv,
)
from .runner import (
    BudgetMismatch,
    TrialResult,
    run_experiment,
    run_trial,
    stable_seed,
)
from .spec import (
    CONDITIONS,
    ExperimentSpec,
    NetworkSpec,
    NodeSpec,
    OperatorSpec,
    SpecError,
    load_spec,
    save_spec,
)

__all__ = [
    "BudgetMismatch",
    "CONDITIONS",
    "ExperimentSpec",
    "NetworkSpec",
    "NodeSpec",
    "OperatorSpec",
    "ReportError",
    "RunData",
    "SpecError",
    "TrialData",
    "TrialResult",
    "generality",
    "generality_series",
    "load_corpus",
    "load_pool_seeds",
    "load_run",
    "load_spec",
    "merged_qd_series",
    "run_experiment",
    "run_trial",
    "save_spec",
    "stable_seed",
    "write_line_svg",
    "write_merged_csv",
    "write_report",
    "write_summary_csv",
]
