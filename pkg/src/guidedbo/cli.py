"""Command-line harness: seeded runs, batch sweeps, ablations, theory checks.

Outputs are a trace CSV per run (one row per evaluation) plus summary JSON;
batch mode adds an aggregate JSON with per-evaluation quartiles of the best
value. A flat key=value config file can seed any run; command-line flags
override file values, and GUIDEDBO_OUTDIR overrides the default output
directory.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import embedding as emb_mod
from . import swarm as swarm_mod
from ._threads import limit_blas_threads
from .driver import (
    ABLATION_VARIANTS,
    RunAborted,
    RunConfig,
    RunResult,
    TraceRecord,
    run,
    run_ablation,
)

TRACE_HEADER = "eval_index,iteration,d_A,restart_count,selected_particle,y,best_y,wall_ms"

_CONFIG_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_BOOL_FIELDS = {
    "record_walltime",
    "random_direction",
    "random_line_select",
    "no_line_opt",
    "no_embedding",
}


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def write_trace(records: Sequence[TraceRecord], path: Path | str) -> None:
    """Write the per-evaluation CSV; floats use 17 significant digits so a
    re-parse reproduces them exactly."""
    if not records:
        raise ValueError("refusing to write an empty trace")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(TRACE_HEADER + "\n")
        for r in records:
            fh.write(
                f"{r.eval_index},{r.iteration},{r.target_dim},{r.restart_count},"
                f"{r.selected_particle},{_fmt(r.y)},{_fmt(r.best_y)},{_fmt(r.wall_ms)}\n"
            )


def read_trace(path: Path | str) -> list[TraceRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != TRACE_HEADER:
            raise ValueError(f"unexpected trace header: {header}")
        for line in fh:
            parts = line.strip().split(",")
            records.append(
                TraceRecord(
                    eval_index=int(parts[0]),
                    iteration=int(parts[1]),
                    target_dim=int(parts[2]),
                    restart_count=int(parts[3]),
                    selected_particle=int(parts[4]),
                    y=float(parts[5]),
                    best_y=float(parts[6]),
                    wall_ms=float(parts[7]),
                )
            )
    return records


def parse_config_file(path: Path | str) -> dict:
    """Flat key=value file mirroring RunConfig field names; '#' comments."""
    values: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {raw.strip()!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            values[key] = val
    return values


def _coerce(key: str, raw: str):
    if key not in _CONFIG_FIELDS:
        raise ValueError(f"unknown config key: {key}")
    if key == "objective":
        return raw
    if key in _BOOL_FIELDS:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"bad boolean for {key}: {raw}")
    if raw.lower() in ("none", ""):
        return None
    if key in ("noise_sd", "inertia", "cognitive", "social", "line_fraction"):
        return float(raw)
    return int(raw)


def build_config(file_values: dict, overrides: dict) -> RunConfig:
    merged: dict = {}
    for key, raw in file_values.items():
        merged[key] = _coerce(key, raw)
    for key, val in overrides.items():
        if val is not None:
            merged[key] = val
    if "objective" not in merged or "dim" not in merged or "total_budget" not in merged:
        raise ValueError("objective, dim, and total_budget are required")
    return RunConfig(**merged)


def _out_dir(flag_value: Optional[str]) -> Path:
    if flag_value:
        return Path(flag_value)
    env = os.environ.get("GUIDEDBO_OUTDIR")
    if env:
        return Path(env)
    return Path("runs")


def _run_name(config: RunConfig, variant: str = "full") -> str:
    tag = "" if variant == "full" else f"-{variant}"
    return f"{config.objective}-d{config.dim}{tag}-s{config.seed}"


def _summary(config: RunConfig, result: RunResult, variant: str = "full") -> dict:
    return {
        "objective": config.objective,
        "dim": config.dim,
        "seed": config.seed,
        "variant": variant,
        "total_budget": config.total_budget,
        "evals_used": result.evals_used,
        "best_y": result.best_y,
        "best_x": [float(v) for v in result.best_x_native],
        "restart_count": result.restart_count,
        "final_target_dim": result.final_target_dim,
    }


def _execute_run(config: RunConfig, variant: str) -> RunResult:
    return run_ablation(config, variant)


def _write_run_outputs(
    out: Path, config: RunConfig, result: RunResult, variant: str = "full"
) -> Path:
    name = _run_name(config, variant)
    write_trace(result.trace, out / f"{name}.csv")
    with open(out / f"{name}.json", "w", encoding="utf-8") as fh:
        json.dump(_summary(config, result, variant), fh, indent=2)
        fh.write("\n")
    return out / f"{name}.csv"


@dataclass(frozen=True)
class ExperimentBatch:
    """A seed sweep over one config template, optionally across variants."""

    template: RunConfig
    seeds: list[int]
    out_dir: Path
    variants: list[str] = field(default_factory=lambda: ["full"])

    def __post_init__(self) -> None:
        if len(set(self.seeds)) != len(self.seeds) or not self.seeds:
            raise ValueError("seeds must be distinct and non-empty")
        for v in self.variants:
            if v not in ABLATION_VARIANTS:
                raise ValueError(f"unknown variant {v!r}")
        self.out_dir.mkdir(parents=True, exist_ok=True)
        if not os.access(self.out_dir, os.W_OK):
            raise ValueError(f"output directory not writable: {self.out_dir}")

    def configs(self) -> list[RunConfig]:
        return [dataclasses.replace(self.template, seed=s) for s in self.seeds]


def _parse_seeds(text: str) -> list[int]:
    seeds: list[int] = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if ":" in chunk:
            lo, hi = chunk.split(":")
            seeds.extend(range(int(lo), int(hi) + 1))
        elif chunk:
            seeds.append(int(chunk))
    if len(set(seeds)) != len(seeds):
        raise ValueError("seeds must be distinct")
    if not seeds:
        raise ValueError("no seeds given")
    return seeds


def _batch_worker(args: tuple) -> tuple[int, RunResult]:
    config, variant = args
    return config.seed, _execute_run(config, variant)


def _run_many(
    batch: ExperimentBatch, variant: str, workers: int
) -> dict[int, RunResult]:
    jobs = [(cfg, variant) for cfg in batch.configs()]
    results: dict[int, RunResult] = {}
    if workers <= 1:
        for job in jobs:
            seed, res = _batch_worker(job)
            results[seed] = res
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            for seed, res in pool.map(_batch_worker, jobs):
                results[seed] = res
    return results


def best_y_quartiles(traces: Sequence[Sequence[TraceRecord]]) -> dict:
    """Per-evaluation-index quartiles of best_y across runs (truncated to the
    shortest trace)."""
    n = min(len(t) for t in traces)
    mat = np.array([[rec.best_y for rec in t[:n]] for t in traces])
    return {
        "eval_index": list(range(1, n + 1)),
        "best_y_q25": [float(v) for v in np.percentile(mat, 25, axis=0)],
        "best_y_median": [float(v) for v in np.median(mat, axis=0)],
        "best_y_q75": [float(v) for v in np.percentile(mat, 75, axis=0)],
    }


def _add_config_args(parser: argparse.ArgumentParser, require_objective: bool) -> None:
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--objective", required=require_objective,
                        help="objective name (ackley, branin_aug, hartmann6_aug)")
    parser.add_argument("--dim", type=int)
    parser.add_argument("--budget", dest="total_budget", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--noise-sd", dest="noise_sd", type=float)
    parser.add_argument("--n-init", dest="n_init", type=int)
    parser.add_argument("--swarm-size", dest="swarm_size", type=int)
    parser.add_argument("--target-dim-init", dest="target_dim_init", type=int)
    parser.add_argument("--bin-size", dest="bin_size", type=int)
    parser.add_argument("--budget-to-full-dim", dest="budget_to_full_dim", type=int)
    parser.add_argument("--n-features", dest="n_features", type=int)
    parser.add_argument("--nsga-pop", dest="nsga_pop", type=int)
    parser.add_argument("--nsga-generations", dest="nsga_generations", type=int)
    parser.add_argument("--line-fraction", dest="line_fraction", type=float)
    parser.add_argument("--inertia", dest="inertia", type=float)
    parser.add_argument("--candidates-per-line", dest="candidates_per_line", type=int)
    parser.add_argument("--gp-starts", dest="gp_starts", type=int)
    parser.add_argument("--gp-steps", dest="gp_steps", type=int)
    parser.add_argument("--gp-refit-every", dest="gp_refit_every", type=int)
    parser.add_argument("--record-walltime", dest="record_walltime",
                        action="store_const", const=True)
    parser.add_argument("--out", help="output directory")


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    file_values = parse_config_file(args.config) if args.config else {}
    override_keys = set(_CONFIG_FIELDS) - {
        "random_direction", "random_line_select", "no_line_opt", "no_embedding",
    }
    overrides = {k: getattr(args, k, None) for k in override_keys}
    return build_config(file_values, overrides)


def _cmd_run(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    out = _out_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        result = run(config)
    except RunAborted as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        if exc.trace:
            write_trace(exc.trace, out / (_run_name(config) + ".partial.csv"))
        return 1
    csv_path = _write_run_outputs(out, config, result)
    print(f"best_y={result.best_y:.6g} evals={result.evals_used} trace={csv_path}")
    return 0


def _cmd_batch(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    batch = ExperimentBatch(
        template=config, seeds=_parse_seeds(args.seeds), out_dir=_out_dir(args.out)
    )
    try:
        results = _run_many(batch, "full", args.workers)
    except RunAborted as exc:
        print(f"batch aborted: {exc}", file=sys.stderr)
        return 1
    traces = []
    for cfg in batch.configs():
        result = results[cfg.seed]
        _write_run_outputs(batch.out_dir, cfg, result)
        traces.append(result.trace)
    aggregate = {
        "objective": config.objective,
        "dim": config.dim,
        "seeds": batch.seeds,
        "final_best_y": {str(s): results[s].best_y for s in batch.seeds},
        "curves": best_y_quartiles(traces),
    }
    agg_path = batch.out_dir / f"{config.objective}-d{config.dim}-aggregate.json"
    with open(agg_path, "w", encoding="utf-8") as fh:
        json.dump(aggregate, fh, indent=2)
        fh.write("\n")
    finals = [results[s].best_y for s in batch.seeds]
    print(f"{len(batch.seeds)} runs, median final best_y = {float(np.median(finals)):.6g}")
    print(f"aggregate: {agg_path}")
    return 0


def _cmd_ablate(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    variants = args.variants.split(",") if args.variants else list(ABLATION_VARIANTS)
    try:
        batch = ExperimentBatch(
            template=config,
            seeds=_parse_seeds(args.seeds),
            out_dir=_out_dir(args.out),
            variants=variants,
        )
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    comparison: dict = {"objective": config.objective, "dim": config.dim,
                        "seeds": batch.seeds, "variants": {}}
    for variant in batch.variants:
        try:
            results = _run_many(batch, variant, args.workers)
        except RunAborted as exc:
            print(f"ablation {variant} aborted: {exc}", file=sys.stderr)
            return 1
        finals = {}
        for cfg in batch.configs():
            _write_run_outputs(batch.out_dir, cfg, results[cfg.seed], variant)
            finals[str(cfg.seed)] = results[cfg.seed].best_y
        med = float(np.median(list(finals.values())))
        comparison["variants"][variant] = {
            "final_best_y": finals,
            "median_final_best_y": med,
        }
        print(f"{variant}: median final best_y = {med:.6g}")
    path = batch.out_dir / f"{config.objective}-d{config.dim}-ablation.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(comparison, fh, indent=2)
        fh.write("\n")
    print(f"comparison: {path}")
    return 0


def _cmd_check_embedding(args: argparse.Namespace) -> int:
    cases = 0
    max_diff = 0.0
    for d in range(1, args.max_dim + 1):
        for d_t in range(1, d + 1):
            for d_e in range(0, min(args.max_effective, d) + 1):
                closed = emb_mod.success_probability(d, d_t, d_e)
                exact = emb_mod.success_probability_oracle(d, d_t, d_e)
                max_diff = max(max_diff, abs(closed - exact))
                cases += 1
    ok = max_diff <= 1e-12
    print(f"{cases} cases, max abs diff = {max_diff:.3e} -> {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def sample_aligned_case(
    d: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Random (g, h1, h2) with <g,h1>*<g,h2> >= 0, the regime where the
    alignment bound is valid (flipping h2's sign leaves the bound unchanged)."""
    g = rng.normal(size=d)
    while float(g @ g) == 0.0:
        g = rng.normal(size=d)
    h1 = rng.normal(size=d)
    h2 = rng.normal(size=d)
    if float(g @ h1) * float(g @ h2) < 0.0:
        h2 = -h2
    return g, h1, h2


def _cmd_check_lemma1(args: argparse.Namespace) -> int:
    rng = np.random.default_rng(args.seed)
    dims = [int(t) for t in args.dims.split(",")]
    failures = 0
    for trial in range(args.trials):
        d = dims[trial % len(dims)]
        g, h1, h2 = sample_aligned_case(d, rng)
        res = swarm_mod.lemma1_check(g, h1, h2, args.samples, rng)
        ok = (
            res.empirical_mean >= res.bound - 4.0 * res.std_error
            and abs(res.empirical_mean - res.exact_mean) <= 5.0 * res.std_error
        )
        failures += not ok
        print(
            f"d={d:3d} empirical={res.empirical_mean:.6g} exact={res.exact_mean:.6g} "
            f"bound={res.bound:.6g} se={res.std_error:.3g} -> {'PASS' if ok else 'FAIL'}"
        )
    print(f"{args.trials} trials, {failures} failures")
    return 0 if failures == 0 else 1


def _cmd_selftest(args: argparse.Namespace) -> int:
    rng = np.random.default_rng(0)
    failures = 0

    def report(name: str, ok: bool) -> None:
        nonlocal failures
        failures += not ok
        print(f"{name}: {'PASS' if ok else 'FAIL'}")

    # expansion preserves projections exactly
    ok = True
    for _ in range(200):
        d = int(rng.integers(2, 40))
        d_t = int(rng.integers(1, d))
        emb = emb_mod.new_embedding(d, d_t, rng)
        new_emb, emap = emb_mod.expand(emb, 3, rng)
        x = rng.uniform(-1, 1, d_t)
        lifted = emb_mod.lift_point(emap, x)
        if not np.array_equal(
            emb_mod.project_up(new_emb, lifted), emb_mod.project_up(emb, x)
        ):
            ok = False
            break
    report("expand/lift projection preservation", ok)

    # line geometry stays inside the box
    from .swarm import init_swarm as _init, build_lines as _lines

    X = rng.uniform(-1, 1, (30, 5))
    y = rng.normal(size=30)
    sw = _init(X, y, 10, rng)
    ok = True
    for line in _lines(sw, rng):
        ts = np.linspace(line.t_lo, line.t_hi, 100)
        pts = line.points_at(ts)
        if np.any(pts < -1 - 1e-12) or np.any(pts > 1 + 1e-12):
            ok = False
    report("guiding lines stay inside the box", ok)

    # nondominated sort agrees with the pairwise definition
    from .moacq import dominates as _dom, nondominated_sort as _sort

    ok = True
    for _ in range(20):
        F = rng.normal(size=(25, 3))
        fronts = _sort(F)
        first = set(fronts[0])
        brute = {
            i for i in range(25)
            if not any(_dom(F[j], F[i]) for j in range(25) if j != i)
        }
        if first != brute:
            ok = False
    report("nondominated sort matches brute force", ok)

    # success/failure counter behaviour
    from .driver import RunState, budget_schedule, update_counters
    from .embedding import identity_embedding as _ident

    state = RunState(embedding=_ident(4))
    for _ in range(3):
        update_counters(state, True)
    ok = state.term_factor == 0
    state = RunState(embedding=_ident(4), term_factor=7)
    for _ in range(5):
        terminated = update_counters(state, False)
    report("termination factor bounds", ok and terminated and state.term_factor == 8)

    # budget schedule allocates exactly
    ok = True
    for budget in (130, 200, 977):
        schedule = budget_schedule(1, 3, 9, budget, swarm_size=0)
        if sum(t for _, t in schedule) != budget:
            ok = False
    report("stage budgets sum exactly", ok)

    # tiny deterministic end-to-end run
    cfg = RunConfig(
        objective="branin_aug", dim=6, total_budget=40, seed=7, swarm_size=5,
        n_init=8, n_features=128, nsga_pop=20, nsga_generations=10,
        gp_starts=2, gp_steps=10, candidates_per_line=10,
    )
    r1 = run(cfg)
    r2 = run(cfg)
    report("seeded run is reproducible", r1.trace == r2.trace)

    print(f"selftest: {failures} failures")
    return 0 if failures == 0 else 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    limit_blas_threads()
    parser = argparse.ArgumentParser(
        prog="guidedbo",
        description="Guided-line Bayesian optimization benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single seeded run -> trace CSV + summary JSON")
    _add_config_args(p_run, require_objective=False)
    p_run.set_defaults(func=_cmd_run)

    p_batch = sub.add_parser("batch", help="seed sweep -> per-seed CSVs + aggregate JSON")
    _add_config_args(p_batch, require_objective=False)
    p_batch.add_argument("--seeds", required=True, help="e.g. 1:10 or 0,3,7")
    p_batch.add_argument("--workers", type=int, default=1)
    p_batch.set_defaults(func=_cmd_batch)

    p_abl = sub.add_parser("ablate", help="variant sweep -> comparison JSON")
    _add_config_args(p_abl, require_objective=False)
    p_abl.add_argument("--seeds", required=True)
    p_abl.add_argument("--workers", type=int, default=1)
    p_abl.add_argument("--variants", help="comma list; default all")
    p_abl.set_defaults(func=_cmd_ablate)

    p_che = sub.add_parser("check-embedding",
                           help="closed-form success probability vs enumeration")
    p_che.add_argument("--max-dim", type=int, default=8)
    p_che.add_argument("--max-effective", type=int, default=3)
    p_che.set_defaults(func=_cmd_check_embedding)

    p_chl = sub.add_parser("check-lemma1", help="randomized direction-bound suite")
    p_chl.add_argument("--trials", type=int, default=20)
    p_chl.add_argument("--samples", type=int, default=100_000)
    p_chl.add_argument("--dims", default="1,2,4,8,16")
    p_chl.add_argument("--seed", type=int, default=0)
    p_chl.set_defaults(func=_cmd_check_lemma1)

    p_self = sub.add_parser("selftest", help="fast property battery")
    p_self.set_defaults(func=_cmd_selftest)

    args = parser.parse_args(argv)

    if args.command in ("run", "batch", "ablate") and not args.config and not args.objective:
        parser.error("either --config or --objective is required")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
