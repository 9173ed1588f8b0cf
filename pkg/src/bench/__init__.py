# Experiment harness: datasets, run configuration, orchestration and reports
from .datasets import (Dataset, load_cifar10_binary, load_idx, load_idx_dir, make_micro_dataset,
                       read_cifar10_batch, resolve_dataset, write_idx)
from .runconfig import RunConfig, load_run_config
from .runner import RunResult, run
from .report import combined_front, render_combined_report, render_report, report

__all__ = [
    "Dataset", "load_cifar10_binary", "load_idx", "load_idx_dir", "make_micro_dataset",
    "read_cifar10_batch", "resolve_dataset", "write_idx", "RunConfig", "load_run_config",
    "RunResult", "run", "combined_front", "render_combined_report", "render_report", "report",
]
