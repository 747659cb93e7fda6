"""Study harness: configurations, runners and the command-line interface."""

from .config import ConfigError, Gate, StudyConfig, StudyReport, dumps, rows_to_csv
from .studies import (
    DEFAULT_GATES,
    default_config,
    run_equivalence_study,
    run_kernel_checks,
    run_lacunary_study,
    run_lp_cotype_study,
    run_mobius_check,
    run_moduli_study,
    run_study,
    run_witness_study,
)

__all__ = [
    "ConfigError",
    "Gate",
    "StudyConfig",
    "StudyReport",
    "dumps",
    "rows_to_csv",
    "DEFAULT_GATES",
    "default_config",
    "run_equivalence_study",
    "run_kernel_checks",
    "run_lacunary_study",
    "run_lp_cotype_study",
    "run_mobius_check",
    "run_moduli_study",
    "run_study",
    "run_witness_study",
]
