"""Experiment orchestration: configs, the streaming protocol, artifacts and the CLI."""
from .config import ConfigError, ExperimentConfig, load_config, parse_config_text
from .io import emit_plot_series, read_csv, write_artifacts
from .runner import (RunArtifacts, measure_runtime, run_ablation, run_experiment,
                     run_repeat, summarize)

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config_text",
           "emit_plot_series", "read_csv", "write_artifacts", "RunArtifacts",
           "measure_runtime", "run_ablation", "run_experiment", "run_repeat", "summarize"]
