"""Instance generators, experiment drivers, the oracle Monte Carlo, file I/O and the CLI."""

from .experiments import ExperimentConfig, ExperimentResult, TrialRecord, run_experiment
from .generators import gen_instance
from .oracle import OracleConfig, OracleSummary, k_functional_min, run_oracle_mc
