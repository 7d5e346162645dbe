"""High-dimensional Bayesian optimization along incumbent-guided lines.

A particle swarm supplies search directions built from personal and global
incumbents; a Thompson-sampling bandit picks the most promising line; a
three-objective NSGA-II optimizes the acquisition along it; and an adaptive
sparse subspace embedding keeps early iterations low-dimensional.
"""

from .bandit import LineSelection, select_line
from .driver import (
    ABLATION_VARIANTS,
    RunAborted,
    RunConfig,
    RunResult,
    TraceRecord,
    budget_schedule,
    run,
    run_ablation,
    update_counters,
)
from .embedding import (
    Embedding,
    ExpansionMap,
    expand,
    identity_embedding,
    lift_point,
    new_embedding,
    project_up,
    success_probability,
    success_probability_oracle,
)
from .moacq import (
    LineOptParams,
    MOProblem,
    ParetoResult,
    crowding_distance,
    dominates,
    line_opt,
    nondominated_sort,
    nsga2,
)
from .objectives import (
    EvalRecord,
    ObjectiveSpec,
    evaluate,
    make_synthetic,
    to_native,
    to_unit,
)
from .surrogate import (
    GPFitError,
    GPHyperparams,
    GPModel,
    SamplePath,
    fit,
    joint_sample,
    log_marginal_likelihood,
    posterior,
    sample_path,
)
from .swarm import (
    GuidingLine,
    Lemma1Result,
    Particle,
    Swarm,
    build_lines,
    compute_direction,
    init_swarm,
    lemma1_check,
    update_particle,
)

__version__ = "0.1.0"

__all__ = [
    "ABLATION_VARIANTS",
    "Embedding",
    "EvalRecord",
    "ExpansionMap",
    "GPFitError",
    "GPHyperparams",
    "GPModel",
    "GuidingLine",
    "Lemma1Result",
    "LineOptParams",
    "LineSelection",
    "MOProblem",
    "ObjectiveSpec",
    "ParetoResult",
    "Particle",
    "RunAborted",
    "RunConfig",
    "RunResult",
    "SamplePath",
    "Swarm",
    "TraceRecord",
    "budget_schedule",
    "build_lines",
    "compute_direction",
    "crowding_distance",
    "dominates",
    "evaluate",
    "expand",
    "fit",
    "identity_embedding",
    "init_swarm",
    "joint_sample",
    "lemma1_check",
    "lift_point",
    "line_opt",
    "log_marginal_likelihood",
    "make_synthetic",
    "new_embedding",
    "nondominated_sort",
    "nsga2",
    "posterior",
    "project_up",
    "run",
    "run_ablation",
    "sample_path",
    "select_line",
    "success_probability",
    "success_probability_oracle",
    "to_native",
    "to_unit",
    "update_counters",
]
