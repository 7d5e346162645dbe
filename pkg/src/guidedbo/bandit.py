"""Thompson-sampling choice among the guiding lines.

Every line contributes a pool of candidate points; a single joint draw from
the surrogate posterior scores the whole pool, and each line's reward is
the best score among its own candidates. Sharing one realization across
lines is essential: independent draws per line would bias the argmax.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .surrogate import GPModel, joint_sample, sample_path
from .swarm import GuidingLine

__all__ = ["LineSelection", "select_line", "default_candidates_per_line"]

JOINT_SAMPLE_GUARD = 20000


@dataclass(frozen=True)
class LineSelection:
    """Chosen line index plus the per-line rewards that produced it."""

    chosen_index: int
    rewards: np.ndarray
    candidates_per_line: int


def default_candidates_per_line(target_dim: int, n_lines: int) -> int:
    """Equal split of the candidate pool across lines, floored at 50."""
    return max(50, min(100 * target_dim, 5000) // n_lines)


def _stratified_t(line: GuidingLine, n: int, rng: np.random.Generator) -> np.ndarray:
    """One uniform draw per equal-width stratum of [t_lo, t_hi]."""
    edges = np.linspace(line.t_lo, line.t_hi, n + 1)
    return edges[:-1] + rng.random(n) * (edges[1:] - edges[:-1])


def select_line(
    model: GPModel,
    lines: list[GuidingLine],
    n_cand: int,
    rng: np.random.Generator,
    n_features: int = 1024,
) -> LineSelection:
    """Pick the line whose candidates contain the best posterior-draw value.

    Rewards are reported in negated standardized units so that larger is
    better while the underlying objective is minimized. Ties go to the
    lowest index. Pools too large for exact joint sampling fall back to one
    shared random-feature path.
    """
    m = len(lines)
    if m < 1:
        raise ValueError("need at least one line")
    if n_cand < 2:
        raise ValueError("need at least two candidates per line")
    pools = []
    for line in lines:
        t = _stratified_t(line, n_cand, rng)
        pools.append(np.clip(line.points_at(t), -1.0, 1.0))
    pool = np.concatenate(pools, axis=0)

    # a realization is a function: coincident candidates (e.g. duplicated
    # lines) must receive identical values, so sample unique points once
    unique, inverse = np.unique(pool, axis=0, return_inverse=True)
    if unique.shape[0] <= JOINT_SAMPLE_GUARD:
        draws = joint_sample(model, unique, rng)[inverse]
    else:
        path = sample_path(model, n_features=n_features, rng=rng)
        draws = path(unique)[inverse]

    scores = -(draws - model.y_mean) / model.y_sd
    rewards = scores.reshape(m, n_cand).max(axis=1)
    chosen = int(np.argmax(rewards))
    return LineSelection(chosen_index=chosen, rewards=rewards, candidates_per_line=n_cand)
