"""Time-fair admission policies for the online knapsack problem.

Items with a value and a weight arrive one at a time; a policy must accept
or reject each immediately, subject to unit capacity. This package bundles
the threshold policies that trade competitiveness against time fairness,
exact and greedy offline oracles, adversarial instance generators, an
empirical fairness auditor, and a reproducible benchmark harness with a
CLI.
"""

from .algorithms import (
    PolicySpec,
    RandomizedValueEstimate,
    expected_value_randomized,
    run,
    sample_zcl_threshold,
    zcl_threshold_cdf,
    zcl_threshold_pdf,
)
from .audit import (
    AuditReport,
    TifDemonstration,
    Witness,
    audit_ctif,
    audit_randomized_ctif,
    default_interval,
    demonstrate_tif_impossibility,
)
from .bench import (
    BoundViolation,
    ExperimentReport,
    ExperimentSpec,
    empirical_cr,
    pareto_curves,
    ramp_family,
    robustness_sweep,
    run_experiment,
)
from .core import (
    Decision,
    Instance,
    Item,
    KnapsackState,
    RunTrace,
    density,
    read_instance,
    replay_trace,
    validate_instance,
    write_instance,
)
from .errors import KnapfairError, ParameterError, ResourceBudgetError, ValidationError
from .instances import (
    GeneratorSpec,
    gen_gadget,
    gen_x_nondecreasing,
    generate,
    ingest,
    simulate_prediction,
    synth_trace,
)
from .numerics import (
    BoundContext,
    bound_baseline_cr,
    bound_laect_consistency,
    bound_laect_robustness,
    bound_lemma_add,
    bound_pareto_beta,
    bound_pareto_beta_implicit,
    lambert_w0,
    threshold_baseline,
    threshold_ect,
    threshold_laect,
    threshold_zcl,
)
from .oracles import OracleResult, apx_greedy, compute_dstar, opt_dp, oracle_star

__version__ = "0.1.0"

__all__ = [
    "AuditReport",
    "BoundContext",
    "BoundViolation",
    "Decision",
    "ExperimentReport",
    "ExperimentSpec",
    "GeneratorSpec",
    "Instance",
    "Item",
    "KnapfairError",
    "KnapsackState",
    "OracleResult",
    "ParameterError",
    "PolicySpec",
    "RandomizedValueEstimate",
    "ResourceBudgetError",
    "RunTrace",
    "TifDemonstration",
    "ValidationError",
    "Witness",
    "apx_greedy",
    "audit_ctif",
    "audit_randomized_ctif",
    "bound_baseline_cr",
    "bound_laect_consistency",
    "bound_laect_robustness",
    "bound_lemma_add",
    "bound_pareto_beta",
    "bound_pareto_beta_implicit",
    "compute_dstar",
    "default_interval",
    "demonstrate_tif_impossibility",
    "density",
    "empirical_cr",
    "expected_value_randomized",
    "gen_gadget",
    "gen_x_nondecreasing",
    "generate",
    "ingest",
    "lambert_w0",
    "opt_dp",
    "oracle_star",
    "pareto_curves",
    "ramp_family",
    "read_instance",
    "replay_trace",
    "robustness_sweep",
    "run",
    "run_experiment",
    "sample_zcl_threshold",
    "simulate_prediction",
    "synth_trace",
    "threshold_baseline",
    "threshold_ect",
    "threshold_laect",
    "threshold_zcl",
    "validate_instance",
    "write_instance",
    "zcl_threshold_cdf",
    "zcl_threshold_pdf",
]
