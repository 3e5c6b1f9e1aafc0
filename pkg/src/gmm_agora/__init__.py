"""Interacting Gaussian-mixture agents: simulation engine and theory toolkit.

Agents hold mixture beliefs over a shared set of component means, exchange
samples through retrieval bags, and re-fit by single M-steps.  The package
provides the full multi-agent engine (`engine`), its scalar two-component
reduction (`chain`), observables (`metrics`), polarization lower bounds with
Monte Carlo verification (`bounds`), and reproducible named experiments
(`harness`) behind a CLI (`gmm-agora`).
"""

from .bounds import (
    BoundQuery,
    BoundResult,
    McEstimate,
    constants,
    generate_tables,
    lemma_behave_log_bound,
    lemma_pol_log_bound,
    monte_carlo_polarization,
    reference_table,
    theorem1_log_bound,
    theorem2_bounds,
)
from .chain import (
    McConfig,
    McRecord,
    McState,
    default_initial_state,
    mc_run,
    mc_step,
    mc_weight_update,
)
from .engine import (
    COV_RIDGE,
    WEIGHT_PSEUDOCOUNT,
    AgentState,
    InteractionRecord,
    SimulationConfig,
    SystemState,
    Trajectory,
    choose_partner,
    init_rags,
    init_weights,
    interaction_step,
    k_nearest_gmms,
    rag_replace,
    run_simulation,
    sweep,
)
from .harness import (
    EXPERIMENTS,
    ExperimentSpec,
    default_spec,
    mean_geometry,
    run_experiment,
)
from .metrics import (
    PolarizationConstants,
    classify_silo_system,
    convergence_time,
    interval_I,
    is_level_polarized,
    silo,
    silo_count,
    silo_trace,
    stability,
    well_behaved,
)
from .mixture import (
    MixtureParams,
    ball_update_bounds,
    g_j_sigma,
    h_sigma,
    log_component_density,
    responsibilities,
    sample_from_gmm,
    update_log_weights,
    update_log_weights_and_covariances,
    update_weights,
    update_weights_and_covariances,
    validate_log_weights,
    validate_weights,
    volume_rescale,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # mixture
    "MixtureParams",
    "validate_weights",
    "sample_from_gmm",
    "log_component_density",
    "responsibilities",
    "h_sigma",
    "g_j_sigma",
    "update_weights",
    "update_weights_and_covariances",
    "validate_log_weights",
    "update_log_weights",
    "update_log_weights_and_covariances",
    "volume_rescale",
    "ball_update_bounds",
    # engine
    "SimulationConfig",
    "WEIGHT_PSEUDOCOUNT",
    "COV_RIDGE",
    "AgentState",
    "SystemState",
    "InteractionRecord",
    "Trajectory",
    "init_weights",
    "init_rags",
    "k_nearest_gmms",
    "choose_partner",
    "rag_replace",
    "interaction_step",
    "sweep",
    "run_simulation",
    # chain
    "McConfig",
    "McState",
    "McRecord",
    "mc_weight_update",
    "mc_step",
    "mc_run",
    "default_initial_state",
    # metrics
    "silo",
    "silo_trace",
    "stability",
    "silo_count",
    "classify_silo_system",
    "PolarizationConstants",
    "interval_I",
    "is_level_polarized",
    "well_behaved",
    "convergence_time",
    # bounds
    "constants",
    "BoundQuery",
    "BoundResult",
    "theorem2_bounds",
    "lemma_behave_log_bound",
    "lemma_pol_log_bound",
    "theorem1_log_bound",
    "generate_tables",
    "reference_table",
    "McEstimate",
    "monte_carlo_polarization",
    # harness
    "ExperimentSpec",
    "EXPERIMENTS",
    "default_spec",
    "mean_geometry",
    "run_experiment",
]
