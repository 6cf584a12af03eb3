from .config import ConfigError, ExperimentConfig, dump_config, load_config, parse_config
from .experiment import ExperimentReport, run_experiment
from .report import emit_report, parse_report, report_json

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ExperimentReport",
    "dump_config",
    "emit_report",
    "load_config",
    "parse_config",
    "parse_report",
    "report_json",
    "run_experiment",
]
