"""Experiment configuration, end-to-end runs, traces and plots."""
from .config import ExperimentConfig, dump_config, from_dict, load_config
from .plots import emit_plots
from .runner import (SCHEMA_VERSION, ExperimentTrace, expand_grid, read_trace, replay, run, schema,
                     sweep, validate_trace, write_trace)

__all__ = [
    "SCHEMA_VERSION", "ExperimentConfig", "ExperimentTrace", "dump_config", "emit_plots", "expand_grid",
    "from_dict", "load_config", "read_trace", "replay", "run", "schema", "sweep", "validate_trace",
    "write_trace",
]
