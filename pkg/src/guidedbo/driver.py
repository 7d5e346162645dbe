"""The full optimization loop: subspace lifecycles, per-stage budgets,
success/failure counters with a termination factor, expansion, and
full-dimension restarts.

One run owns a single seeded random stream; every stochastic choice flows
through it in a fixed order, so a (config, seed) pair reproduces its trace
bit for bit.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ._threads import limit_blas_threads
from .bandit import default_candidates_per_line, select_line
from .embedding import (
    Embedding,
    ExpansionMap,
    expand,
    identity_embedding,
    lift_point,
    new_embedding,
    project_up,
)
from .moacq import LineOptParams, line_opt
from .objectives import evaluate, make_synthetic, to_native
from .surrogate import GPFitError, GPHyperparams, fit, sample_path
from .swarm import Swarm, build_lines, init_swarm, update_particle

__all__ = [
    "RunConfig",
    "RunState",
    "TraceRecord",
    "RunResult",
    "RunAborted",
    "ABLATION_VARIANTS",
    "budget_schedule",
    "update_counters",
    "failure_threshold",
    "run",
    "run_ablation",
]

ABLATION_VARIANTS = (
    "full",
    "random_direction",
    "random_line_select",
    "no_line_opt",
    "no_embedding",
)


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a run; field names double as config-file keys."""

    objective: str
    dim: int
    total_budget: int
    seed: int = 0
    noise_sd: float = 0.0
    n_init: Optional[int] = None
    swarm_size: int = 20
    inertia: float = 0.729
    cognitive: Optional[float] = None
    social: Optional[float] = None
    target_dim_init: int = 1
    bin_size: int = 3
    budget_to_full_dim: Optional[int] = None
    term_factor_init: int = 1
    term_factor_min: int = 0
    term_factor_max: int = 7
    success_threshold: int = 3
    n_features: int = 1024
    nsga_pop: int = 100
    nsga_generations: int = 100
    line_fraction: float = 1.0
    candidates_per_line: Optional[int] = None
    gp_starts: int = 10
    gp_steps: int = 50
    gp_refit_every: int = 1
    gp_warm_steps: int = 15
    record_walltime: bool = False
    random_direction: bool = False
    random_line_select: bool = False
    no_line_opt: bool = False
    no_embedding: bool = False

    @property
    def n_init_resolved(self) -> int:
        if self.n_init is not None:
            return self.n_init
        return max(self.swarm_size, self.target_dim_init + 1)

    @property
    def budget_to_full_dim_resolved(self) -> int:
        return self.budget_to_full_dim if self.budget_to_full_dim is not None else self.total_budget

    @property
    def cognitive_resolved(self) -> float:
        return self.cognitive if self.cognitive is not None else 2.05 * self.inertia

    @property
    def social_resolved(self) -> float:
        return self.social if self.social is not None else 2.05 * self.inertia

    def validate(self) -> None:
        if self.swarm_size < 1:
            raise ValueError("swarm_size must be >= 1")
        if self.n_init_resolved < self.swarm_size:
            raise ValueError("n_init must be >= swarm_size")
        if self.total_budget < self.n_init_resolved:
            raise ValueError("total_budget must cover the initial design")
        if not (1 <= self.target_dim_init <= self.dim):
            raise ValueError("need 1 <= target_dim_init <= dim")
        if self.bin_size < 2:
            raise ValueError("bin_size must be >= 2")
        if not (self.term_factor_min <= self.term_factor_init <= self.term_factor_max):
            raise ValueError("termination factor bounds are inconsistent")
        if self.inertia <= 0 or self.cognitive_resolved <= 0 or self.social_resolved <= 0:
            raise ValueError("swarm coefficients must be positive")
        if sum((self.random_direction, self.random_line_select,
                self.no_line_opt, self.no_embedding)) > 1:
            raise ValueError("at most one ablation flag may be set")


@dataclass
class RunState:
    """Mutable bookkeeping for the current subspace stage."""

    embedding: Embedding
    X_target: list[np.ndarray] = field(default_factory=list)
    X_input: list[np.ndarray] = field(default_factory=list)
    y: list[float] = field(default_factory=list)
    swarm: Optional[Swarm] = None
    term_factor: int = 1
    term_factor_min: int = 0
    term_factor_max: int = 7
    success_threshold: int = 3
    success_count: int = 0
    failure_count: int = 0
    evals_used: int = 0
    evals_in_subspace: int = 0
    restart_count: int = 0


@dataclass(frozen=True)
class TraceRecord:
    """One row per objective evaluation; ``selected_particle`` is -1 for
    initialization points."""

    eval_index: int
    iteration: int
    target_dim: int
    restart_count: int
    selected_particle: int
    y: float
    best_y: float
    wall_ms: float


@dataclass(frozen=True)
class RunResult:
    best_x_native: np.ndarray
    best_y: float
    trace: list[TraceRecord]
    evals_used: int
    restart_count: int
    final_target_dim: int


class RunAborted(RuntimeError):
    """A run died partway; the trace gathered so far rides along."""

    def __init__(self, message: str, trace: list[TraceRecord]):
        super().__init__(message)
        self.trace = trace


def failure_threshold(target_dim: int) -> int:
    """Failure tolerance before the termination factor rises."""
    return max(5, target_dim)


def budget_schedule(
    target_dim_init: int,
    bin_size: int,
    dim: int,
    budget: int,
    swarm_size: int = 0,
) -> list[tuple[int, int]]:
    """Per-stage evaluation budgets for the planned dimension ladder.

    Dimensions grow by a factor of ``bin_size`` (capped at ``dim``); budgets
    are proportional to the stage dimension, floored at ``swarm_size + 1``,
    with the rounding remainder folded into the last stage.
    """
    if not (1 <= target_dim_init <= dim):
        raise ValueError("need 1 <= target_dim_init <= dim")
    if bin_size < 2:
        raise ValueError("bin_size must be >= 2")
    dims = [target_dim_init]
    while dims[-1] < dim:
        dims.append(min(bin_size * dims[-1], dim))
    floor = swarm_size + 1
    if len(dims) == 1:
        if budget < floor:
            raise ValueError("budget too small for the single stage")
        return [(dim, budget)]
    total_dim = sum(dims)
    alloc = [max(floor, round(budget * dk / total_dim)) for dk in dims[:-1]]
    last = budget - sum(alloc)
    if last < floor:
        raise ValueError("budget too small to give every stage its minimum")
    alloc.append(last)
    return list(zip(dims, alloc))


def update_counters(state: RunState, improved: bool) -> bool:
    """Advance success/failure counters; returns True when the stage must end.

    A success streak lowers the termination factor (clamped at its minimum),
    a failure streak raises it; crossing the maximum terminates the stage.
    Each outcome resets the opposite counter.
    """
    if improved:
        state.success_count += 1
        state.failure_count = 0
        if state.success_count >= state.success_threshold:
            state.term_factor = max(state.term_factor - 1, state.term_factor_min)
            state.success_count = 0
    else:
        state.failure_count += 1
        state.success_count = 0
        if state.failure_count >= failure_threshold(state.embedding.target_dim):
            state.term_factor += 1
            state.failure_count = 0
    return state.term_factor > state.term_factor_max


def _lift_hyperparams(hp: GPHyperparams, emap: ExpansionMap) -> GPHyperparams:
    """Children inherit their parent's lengthscale across an expansion."""
    ls = np.empty(emap.new_target_dim)
    for parent, group in enumerate(emap.children):
        ls[list(group)] = hp.lengthscales[parent]
    return GPHyperparams(ls, hp.signal_variance, hp.noise_variance)


def _lift_state(state: RunState, emap: ExpansionMap) -> None:
    state.X_target = [lift_point(emap, x) for x in state.X_target]
    swarm = state.swarm
    if swarm is not None:
        for p in swarm.particles:
            p.position = lift_point(emap, p.position)
            p.displacement = lift_point(emap, p.displacement)
            p.history = [(lift_point(emap, x), v) for x, v in p.history]
        swarm.global_best_position = lift_point(emap, swarm.global_best_position)


def run(config: RunConfig) -> RunResult:
    """Execute the full loop and return the best point, value, and trace."""
    limit_blas_threads()
    config.validate()
    spec = make_synthetic(config.objective, config.dim, config.noise_sd)
    rng = np.random.default_rng(config.seed)
    total = config.total_budget
    trace: list[TraceRecord] = []

    best_y = np.inf
    best_x: Optional[np.ndarray] = None
    iteration = 0
    restart_count = 0
    state: Optional[RunState] = None

    def record(y: float, x_native: np.ndarray, selected: int, target_dim: int, wall_ms: float) -> None:
        nonlocal best_y, best_x
        if y < best_y:
            best_y = y
            best_x = x_native.copy()
        trace.append(
            TraceRecord(
                eval_index=len(trace) + 1,
                iteration=iteration,
                target_dim=target_dim,
                restart_count=restart_count,
                selected_particle=selected,
                y=y,
                best_y=best_y,
                wall_ms=wall_ms,
            )
        )

    line_params = LineOptParams(
        pop_size=config.nsga_pop,
        generations=config.nsga_generations,
        line_fraction=config.line_fraction,
    )
    evals = 0
    first_lifecycle = True

    while evals < total:
        if not first_lifecycle:
            restart_count += 1
        if first_lifecycle and not config.no_embedding and config.target_dim_init < spec.dim:
            emb = new_embedding(spec.dim, config.target_dim_init, rng)
            try:
                stages = budget_schedule(
                    config.target_dim_init,
                    config.bin_size,
                    spec.dim,
                    config.budget_to_full_dim_resolved,
                    config.swarm_size,
                )
            except ValueError:
                # budget too small to fund the whole ladder: stay schedule-free
                stages = [(emb.target_dim, config.budget_to_full_dim_resolved)]
        else:
            # full-dimension lifecycle: identity assignment, budget = whatever is left
            emb = identity_embedding(spec.dim)
            stages = [(spec.dim, total - evals)]
        first_lifecycle = False

        state = RunState(
            embedding=emb,
            term_factor=config.term_factor_init,
            term_factor_min=config.term_factor_min,
            term_factor_max=config.term_factor_max,
            success_threshold=config.success_threshold,
            evals_used=evals,
            restart_count=restart_count,
        )

        n_init = min(config.n_init_resolved, total - evals)
        for _ in range(n_init):
            t0 = time.perf_counter()
            x_t = rng.uniform(-1.0, 1.0, size=emb.target_dim)
            x_in = project_up(emb, x_t)
            x_native = to_native(spec, x_in)
            y_val = evaluate(spec, x_native, rng)
            state.X_target.append(x_t)
            state.X_input.append(x_in)
            state.y.append(y_val)
            evals += 1
            wall = (time.perf_counter() - t0) * 1e3 if config.record_walltime else 0.0
            record(y_val, x_native, -1, emb.target_dim, wall)
        state.evals_used = evals
        if evals >= total:
            break

        state.swarm = init_swarm(
            np.asarray(state.X_target),
            np.asarray(state.y),
            config.swarm_size,
            rng,
            inertia=config.inertia,
            cognitive=config.cognitive_resolved,
            social=config.social_resolved,
        )
        warm_hp: Optional[GPHyperparams] = None

        stage_idx = 0
        lifecycle_done = False
        while not lifecycle_done and evals < total:
            stage_budget = stages[min(stage_idx, len(stages) - 1)][1]
            state.term_factor = config.term_factor_init
            state.success_count = 0
            state.failure_count = 0
            state.evals_in_subspace = n_init if stage_idx == 0 else 0
            emb = state.embedding
            it_in_stage = 0

            while state.evals_in_subspace < stage_budget and evals < total:
                t0 = time.perf_counter()
                iteration += 1
                X = np.asarray(state.X_target)
                yv = np.asarray(state.y)
                try:
                    if warm_hp is None or it_in_stage % max(1, config.gp_refit_every) == 0:
                        model = fit(X, yv, rng, n_starts=config.gp_starts,
                                    n_steps=config.gp_steps, init=warm_hp)
                    else:
                        model = fit(X, yv, rng, n_starts=1,
                                    n_steps=config.gp_warm_steps, init=warm_hp)
                except GPFitError as exc:
                    raise RunAborted(f"surrogate fitting failed: {exc}", trace) from exc
                warm_hp = model.hyperparams
                it_in_stage += 1

                lines = build_lines(state.swarm, rng, random_directions=config.random_direction)
                if config.random_line_select:
                    chosen = int(rng.integers(0, state.swarm.size))
                else:
                    n_cand = config.candidates_per_line or default_candidates_per_line(
                        emb.target_dim, state.swarm.size
                    )
                    chosen = select_line(
                        model, lines, n_cand, rng, n_features=config.n_features
                    ).chosen_index

                path = sample_path(model, n_features=config.n_features, rng=rng)

                def acq(Q: np.ndarray, _p=path, _m=model) -> np.ndarray:
                    return -(_p(Q) - _m.y_mean) / _m.y_sd

                if config.no_line_opt:
                    pool = rng.uniform(
                        -1.0, 1.0, size=(min(100 * emb.target_dim, 5000), emb.target_dim)
                    )
                    x_t = pool[int(np.argmax(acq(pool)))]
                else:
                    x_t = line_opt(
                        acq,
                        lines[chosen],
                        state.swarm.particles[chosen].personal_best[0],
                        state.swarm.global_best_position,
                        line_params,
                        rng,
                    )
                x_t = np.clip(x_t, -1.0, 1.0)
                x_in = project_up(emb, x_t)
                x_native = to_native(spec, x_in)
                y_val = evaluate(spec, x_native, rng)

                improved = y_val < state.swarm.global_best_value
                update_particle(state.swarm, chosen, x_t, y_val)
                state.X_target.append(x_t)
                state.X_input.append(x_in)
                state.y.append(y_val)
                evals += 1
                state.evals_used = evals
                state.evals_in_subspace += 1
                wall = (time.perf_counter() - t0) * 1e3 if config.record_walltime else 0.0
                record(y_val, x_native, chosen, emb.target_dim, wall)

                if update_counters(state, improved):
                    break

            if evals >= total:
                break
            if state.embedding.target_dim < spec.dim:
                new_emb, emap = expand(state.embedding, config.bin_size, rng)
                _lift_state(state, emap)
                state.embedding = new_emb
                if warm_hp is not None:
                    warm_hp = _lift_hyperparams(warm_hp, emap)
                stage_idx += 1
                assert all(
                    np.array_equal(project_up(new_emb, x_t), x_in)
                    for x_t, x_in in zip(state.X_target, state.X_input)
                ), "expansion must preserve projected history exactly"
            else:
                lifecycle_done = True  # full dimension exhausted or terminated: restart

    assert best_x is not None
    return RunResult(
        best_x_native=best_x,
        best_y=float(best_y),
        trace=trace,
        evals_used=evals,
        restart_count=restart_count,
        final_target_dim=state.embedding.target_dim if state is not None else config.dim,
    )


def run_ablation(config: RunConfig, variant: str) -> RunResult:
    """Run with exactly one component replaced by its unguided counterpart."""
    if variant not in ABLATION_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; pick one of {ABLATION_VARIANTS}")
    flags = dict(
        random_direction=False,
        random_line_select=False,
        no_line_opt=False,
        no_embedding=False,
    )
    if variant != "full":
        flags[variant] = True
    return run(replace(config, **flags))
