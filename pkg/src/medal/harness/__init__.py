from .config import format_config, load_config, parse_config
from .data import (Dataset, SyntheticSpec, generate_synthetic, load_dataset, oversample_minority,
                   split)
from .experiments import (CurveTable, check_audit, compare_init, eval_distance_functions,
                          run_al_experiment)

__all__ = [
    "CurveTable", "Dataset", "SyntheticSpec", "check_audit", "compare_init",
    "eval_distance_functions", "format_config", "generate_synthetic", "load_dataset",
    "load_config", "oversample_minority", "parse_config", "run_al_experiment", "split",
]
