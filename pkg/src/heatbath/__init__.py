"""Qubit coupled to a damped oscillator: master equations under three dissipation models."""
from .experiments import (
    InitialQubit,
    Run,
    Scenario,
    SolverOptions,
    convergence_study,
    oracle_check,
    run_coherence_trace,
    run_equilibration,
    run_population_trace,
    run_scenario,
    scaling_check,
    simulate,
)
from .integrator import IntegrationError, IntegratorSpec, Method, Trajectory, evolve_expm, integrate
from .model import Coupling, Dissipator, Liouvillian, Model, ModelConfig, ModelConfigError, liouvillian_matrix, rhs
from .observables import ObservableRecord, ObservableTable, equilibrium_population, record, tabulate
from .operators import HilbertDims, partial_trace_env
from .runconfig import ConfigError, RunConfig, load_config, read_trajectory_csv, write_trajectory_csv
from .thermal import thermal_state

__version__ = "0.1.0"
