"""Three-objective NSGA-II and the guided-line acquisition optimizer.

The proposal step maximizes (acquisition, -distance to personal incumbent,
-distance to global incumbent) over the unit box, seeding the population
from the selected guiding line, then picks the Pareto member with the best
acquisition value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .swarm import GuidingLine

__all__ = [
    "MOProblem",
    "ParetoResult",
    "dominates",
    "nondominated_sort",
    "crowding_distance",
    "nsga2",
    "line_opt",
    "LineOptParams",
]

SBX_ETA = 15.0
SBX_PROB = 0.9
MUTATION_ETA = 20.0
_EPS = 1e-14


@dataclass(frozen=True)
class MOProblem:
    """Three maximized objectives over the box [-1, 1]^dim.

    ``objectives`` maps an (n, dim) array to an (n, 3) array and must be
    deterministic for the lifetime of one solver run.
    """

    dim: int
    objectives: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ParetoResult:
    """Index-aligned decision points and objective triples of the final front."""

    set: np.ndarray
    front: np.ndarray


def dominates(a: np.ndarray, b: np.ndarray) -> bool:
    """Pareto dominance under maximization: a >= b everywhere, > somewhere."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return bool(np.all(a >= b) and np.any(a > b))


def _domination_matrix(F: np.ndarray) -> np.ndarray:
    """dom[i, j] is True when row i dominates row j."""
    ge = np.all(F[:, None, :] >= F[None, :, :], axis=2)
    gt = np.any(F[:, None, :] > F[None, :, :], axis=2)
    return ge & gt


def nondominated_sort(F: np.ndarray) -> list[list[int]]:
    """Partition indices into fronts; front k is non-dominated once fronts < k are removed."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    n = F.shape[0]
    dom = _domination_matrix(F)
    n_dominators = dom.sum(axis=0)
    fronts: list[list[int]] = []
    assigned = np.zeros(n, dtype=bool)
    current = np.nonzero(n_dominators == 0)[0]
    while current.size:
        fronts.append([int(i) for i in current])
        assigned[current] = True
        n_dominators = n_dominators - dom[current].sum(axis=0)
        current = np.nonzero((n_dominators == 0) & ~assigned)[0]
    return fronts


def crowding_distance(F: np.ndarray) -> np.ndarray:
    """Deb's crowding distance: infinite at per-objective boundaries,
    normalized neighbor-gap sums inside."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    n, n_obj = F.shape
    dist = np.zeros(n)
    if n <= 2:
        return np.full(n, np.inf)
    for k in range(n_obj):
        order = np.argsort(F[:, k], kind="stable")
        lo, hi = F[order[0], k], F[order[-1], k]
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        if hi > lo:
            gaps = (F[order[2:], k] - F[order[:-2], k]) / (hi - lo)
            dist[order[1:-1]] += gaps
    return dist


def _rank_and_crowding(F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    fronts = nondominated_sort(F)
    rank = np.empty(F.shape[0], dtype=np.int64)
    crowd = np.empty(F.shape[0])
    for k, front in enumerate(fronts):
        idx = np.asarray(front)
        rank[idx] = k
        crowd[idx] = crowding_distance(F[idx])
    return rank, crowd


def _tournament(
    rank: np.ndarray, crowd: np.ndarray, rng: np.random.Generator, n_out: int
) -> np.ndarray:
    """Binary tournament on (rank, crowding); ties keep the first contestant."""
    a = rng.integers(0, rank.shape[0], size=n_out)
    b = rng.integers(0, rank.shape[0], size=n_out)
    better_b = (rank[b] < rank[a]) | ((rank[b] == rank[a]) & (crowd[b] > crowd[a]))
    return np.where(better_b, b, a)


def _sbx(parents1: np.ndarray, parents2: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Bounded simulated binary crossover on the box [-1, 1]."""
    n, dim = parents1.shape
    c1 = parents1.copy()
    c2 = parents2.copy()
    do_pair = rng.random(n) <= SBX_PROB
    do_var = (rng.random((n, dim)) <= 0.5) & do_pair[:, None]
    y1 = np.minimum(parents1, parents2)
    y2 = np.maximum(parents1, parents2)
    spread = y2 - y1
    do_var &= spread > _EPS
    u = rng.random((n, dim))

    with np.errstate(divide="ignore", invalid="ignore"):
        beta_l = 1.0 + 2.0 * (y1 + 1.0) / spread
        beta_u = 1.0 + 2.0 * (1.0 - y2) / spread

        def _betaq(beta: np.ndarray) -> np.ndarray:
            alpha = 2.0 - beta ** -(SBX_ETA + 1.0)
            inside = u <= 1.0 / alpha
            out = np.where(
                inside,
                (u * alpha) ** (1.0 / (SBX_ETA + 1.0)),
                (1.0 / (2.0 - u * alpha)) ** (1.0 / (SBX_ETA + 1.0)),
            )
            return out

        child_lo = 0.5 * ((y1 + y2) - _betaq(beta_l) * spread)
        child_hi = 0.5 * ((y1 + y2) + _betaq(beta_u) * spread)

    child_lo = np.clip(child_lo, -1.0, 1.0)
    child_hi = np.clip(child_hi, -1.0, 1.0)
    swap = (rng.random((n, dim)) <= 0.5) & do_var
    c1 = np.where(do_var, np.where(swap, child_hi, child_lo), c1)
    c2 = np.where(do_var, np.where(swap, child_lo, child_hi), c2)
    return np.concatenate((c1, c2), axis=0)


def _polynomial_mutation(X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Bounded polynomial mutation with per-variable probability 1/dim."""
    n, dim = X.shape
    Y = X.copy()
    do = rng.random((n, dim)) <= (1.0 / dim)
    u = rng.random((n, dim))
    delta1 = (Y + 1.0) / 2.0
    delta2 = (1.0 - Y) / 2.0
    mut_pow = 1.0 / (MUTATION_ETA + 1.0)
    low_branch = u < 0.5
    xy = np.where(low_branch, 1.0 - delta1, 1.0 - delta2)
    val = np.where(
        low_branch,
        2.0 * u + (1.0 - 2.0 * u) * xy ** (MUTATION_ETA + 1.0),
        2.0 * (1.0 - u) + 2.0 * (u - 0.5) * xy ** (MUTATION_ETA + 1.0),
    )
    deltaq = np.where(low_branch, val**mut_pow - 1.0, 1.0 - val**mut_pow)
    Y = np.where(do, np.clip(Y + deltaq * 2.0, -1.0, 1.0), Y)
    return Y


def _survival(
    X: np.ndarray, F: np.ndarray, pop_size: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Elitist truncation by rank then crowding; returns survivors and their stats.

    Survivors keep whole fronts plus a crowding-truncated slice of the first
    overfull one, so their ranks are the combined-population ranks and only
    the crowding of each surviving front needs recomputing.
    """
    fronts = nondominated_sort(F)
    keep: list[int] = []
    keep_rank: list[int] = []
    for k, front in enumerate(fronts):
        if len(keep) + len(front) <= pop_size:
            keep.extend(front)
            keep_rank.extend([k] * len(front))
        else:
            idx = np.asarray(front)
            crowd = crowding_distance(F[idx])
            order = np.argsort(-crowd, kind="stable")
            taken = idx[order[: pop_size - len(keep)]]
            keep.extend(int(i) for i in taken)
            keep_rank.extend([k] * len(taken))
            break
    keep_arr = np.asarray(keep)
    Xs, Fs = X[keep_arr], F[keep_arr]
    rank = np.asarray(keep_rank)
    crowd = np.empty(len(keep))
    for k in range(rank.max() + 1):
        members = np.nonzero(rank == k)[0]
        crowd[members] = crowding_distance(Fs[members])
    return Xs, Fs, rank, crowd


def nsga2(
    problem: MOProblem,
    init: np.ndarray,
    pop_size: int,
    generations: int,
    rng: np.random.Generator,
) -> ParetoResult:
    """Run elitist NSGA-II and return the final first front.

    The initial population is ``init`` padded with uniform box samples (or
    truncated) to ``pop_size``; variation is SBX crossover plus polynomial
    mutation, both box-bounded.
    """
    if pop_size < 4 or pop_size % 2 != 0:
        raise ValueError("pop_size must be even and >= 4")
    init = np.atleast_2d(np.asarray(init, dtype=float))
    if init.shape[0] < 1:
        raise ValueError("need a non-empty initial population")
    if init.shape[1] != problem.dim:
        raise ValueError("initial population dimension mismatch")
    X = init[:pop_size]
    if X.shape[0] < pop_size:
        pad = rng.uniform(-1.0, 1.0, size=(pop_size - X.shape[0], problem.dim))
        X = np.concatenate((X, pad), axis=0)
    X = np.clip(X, -1.0, 1.0)
    F = np.asarray(problem.objectives(X), dtype=float)
    rank, crowd = _rank_and_crowding(F)

    for _ in range(generations):
        p1 = _tournament(rank, crowd, rng, pop_size // 2)
        p2 = _tournament(rank, crowd, rng, pop_size // 2)
        offspring = _sbx(X[p1], X[p2], rng)
        offspring = _polynomial_mutation(offspring, rng)
        F_off = np.asarray(problem.objectives(offspring), dtype=float)
        X_all = np.concatenate((X, offspring), axis=0)
        F_all = np.concatenate((F, F_off), axis=0)
        X, F, rank, crowd = _survival(X_all, F_all, pop_size)

    first = np.asarray(nondominated_sort(F)[0])
    return ParetoResult(set=X[first].copy(), front=F[first].copy())


@dataclass(frozen=True)
class LineOptParams:
    pop_size: int = 100
    generations: int = 100
    # population share seeded on the line; crossover and mutation still
    # explore the whole box, so full line seeding does not collapse to 1-D
    line_fraction: float = 1.0


def line_opt(
    acq: Callable[[np.ndarray], np.ndarray],
    line: GuidingLine,
    personal_incumbent: np.ndarray,
    global_incumbent: np.ndarray,
    params: LineOptParams,
    rng: np.random.Generator,
) -> np.ndarray:
    """Propose the next point by guided multi-objective acquisition search.

    Objectives (all maximized): the acquisition realization, and the negated
    distances to the personal and global incumbents. The population is
    seeded with points on the guiding line (remainder uniform in the box).
    Returns the Pareto member with the best acquisition value; ties break
    toward the global incumbent.
    """
    p_inc = np.asarray(personal_incumbent, dtype=float)
    g_inc = np.asarray(global_incumbent, dtype=float)
    dim = p_inc.shape[0]

    def _objectives(X: np.ndarray) -> np.ndarray:
        a = np.asarray(acq(X), dtype=float).ravel()
        dp = np.linalg.norm(X - p_inc[None, :], axis=1)
        dg = np.linalg.norm(X - g_inc[None, :], axis=1)
        return np.column_stack((a, -dp, -dg))

    n_line = max(1, int(round(params.line_fraction * params.pop_size)))
    t = rng.uniform(line.t_lo, line.t_hi, size=n_line)
    init = np.clip(line.points_at(t), -1.0, 1.0)
    result = nsga2(MOProblem(dim, _objectives), init, params.pop_size, params.generations, rng)

    best = float(np.max(result.front[:, 0]))
    tied = np.nonzero(result.front[:, 0] == best)[0]
    if tied.size == 1:
        return result.set[tied[0]].copy()
    dists = np.linalg.norm(result.set[tied] - g_inc[None, :], axis=1)
    return result.set[tied[int(np.argmin(dists))]].copy()
