from .config import ConfigError, ExperimentConfig, dump_config, parse_config, parse_config_text
from .experiments import run_experiment_1, run_experiment_2
