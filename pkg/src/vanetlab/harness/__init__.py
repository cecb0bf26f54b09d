"""Traffic generation, metrics, experiments and sweeps."""
from .experiment import (ExperimentConfig, build_network, build_scenario, derive_seed,
                         generate_trace, model_name, run_experiment, run_scenario, static_trace)
from .metrics import METRIC_NAMES, Delivery, MetricsReport, compute_metrics, deliveries
from .sweep import (SweepResult, aggregate, emit_plot_data, plot_table_values, sweep,
                    sweep_from_csv, sweep_to_csv)
from .traffic import Connection, TrafficConfig, build_traffic

__all__ = [
    "ExperimentConfig", "build_network", "build_scenario", "derive_seed", "generate_trace",
    "model_name", "run_experiment", "run_scenario", "static_trace",
    "METRIC_NAMES", "Delivery", "MetricsReport", "compute_metrics", "deliveries",
    "SweepResult", "aggregate", "emit_plot_data", "plot_table_values", "sweep",
    "sweep_from_csv", "sweep_to_csv",
    "Connection", "TrafficConfig", "build_traffic",
]
