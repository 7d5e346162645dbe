"""Particle bookkeeping and incumbent-guided line construction.

Each particle remembers its own evaluation history; its direction blends
the last displacement with randomized pulls toward its personal incumbent
and the global incumbent, PSO-style. Lines are the particle position plus
that direction, clipped to the unit box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

__all__ = [
    "Particle",
    "Swarm",
    "GuidingLine",
    "Lemma1Result",
    "DEFAULT_INERTIA",
    "init_swarm",
    "compute_direction",
    "build_lines",
    "update_particle",
    "lemma1_check",
]

DEFAULT_INERTIA = 0.729
# cognitive/social coefficients default to 2.05 * inertia


@dataclass
class Particle:
    position: np.ndarray
    displacement: np.ndarray
    history: list[tuple[np.ndarray, float]]
    update_count: int = 0

    @property
    def personal_best(self) -> tuple[np.ndarray, float]:
        """Earliest history entry attaining the minimum value."""
        best = self.history[0]
        for entry in self.history[1:]:
            if entry[1] < best[1]:
                best = entry
        return best


@dataclass
class Swarm:
    particles: list[Particle]
    inertia: float
    cognitive: float
    social: float
    global_best_position: np.ndarray
    global_best_value: float

    @property
    def size(self) -> int:
        return len(self.particles)

    @property
    def dim(self) -> int:
        return self.particles[0].position.shape[0]


@dataclass(frozen=True)
class GuidingLine:
    """The segment anchor + t * direction for t in [t_lo, t_hi], inside the box."""

    anchor: np.ndarray
    direction: np.ndarray
    t_lo: float
    t_hi: float

    def point_at(self, t: float) -> np.ndarray:
        return self.anchor + t * self.direction

    def points_at(self, t: np.ndarray) -> np.ndarray:
        return self.anchor[None, :] + np.asarray(t, dtype=float)[:, None] * self.direction[None, :]


def init_swarm(
    X: np.ndarray,
    y: np.ndarray,
    m: int,
    rng: np.random.Generator,
    inertia: float = DEFAULT_INERTIA,
    cognitive: Optional[float] = None,
    social: Optional[float] = None,
) -> Swarm:
    """Seed ``m`` particles from distinct dataset rows chosen at random.

    The global incumbent is the dataset argmin, which may be a row that did
    not become a particle.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] < m:
        raise ValueError(f"need at least m={m} dataset points, got {X.shape[0]}")
    if m < 1:
        raise ValueError("m must be >= 1")
    if cognitive is None:
        cognitive = 2.05 * inertia
    if social is None:
        social = 2.05 * inertia
    chosen = rng.choice(X.shape[0], size=m, replace=False)
    particles = [
        Particle(
            position=X[i].copy(),
            displacement=np.zeros(X.shape[1]),
            history=[(X[i].copy(), float(y[i]))],
        )
        for i in chosen
    ]
    best = int(np.argmin(y))
    return Swarm(
        particles=particles,
        inertia=inertia,
        cognitive=cognitive,
        social=social,
        global_best_position=X[best].copy(),
        global_best_value=float(y[best]),
    )


def compute_direction(swarm: Swarm, i: int, rng: np.random.Generator) -> np.ndarray:
    """Blend displacement with randomized pulls toward both incumbents.

    v = w * displacement + r1 o (c1 * (personal_best - x)) + r2 o (c2 * (global_best - x)),
    with r1, r2 fresh uniform draws in [0, 1]^dim each call.
    """
    p = swarm.particles[i]
    d = p.position.shape[0]
    r1 = rng.random(d)
    r2 = rng.random(d)
    personal = p.personal_best[0]
    return (
        swarm.inertia * p.displacement
        + r1 * (swarm.cognitive * (personal - p.position))
        + r2 * (swarm.social * (swarm.global_best_position - p.position))
    )


def _box_t_range(anchor: np.ndarray, direction: np.ndarray) -> tuple[float, float]:
    """Largest [t_lo, t_hi] with anchor + t * direction inside [-1, 1]^dim."""
    t_lo, t_hi = -np.inf, np.inf
    for a, v in zip(anchor, direction):
        if v > 0.0:
            t_lo = max(t_lo, (-1.0 - a) / v)
            t_hi = min(t_hi, (1.0 - a) / v)
        elif v < 0.0:
            t_lo = max(t_lo, (1.0 - a) / v)
            t_hi = min(t_hi, (-1.0 - a) / v)
    if not math.isfinite(t_lo):
        t_lo, t_hi = 0.0, 0.0
    return min(t_lo, 0.0), max(t_hi, 0.0)


def build_lines(
    swarm: Swarm, rng: np.random.Generator, random_directions: bool = False
) -> list[GuidingLine]:
    """One guiding line per particle, anchored at its current position.

    A particle whose blended direction is exactly zero falls back to a
    uniform random direction so no line degenerates to a point. With
    ``random_directions`` every direction is drawn uniformly instead
    (the unguided variant).
    """
    lines = []
    for i in range(swarm.size):
        anchor = swarm.particles[i].position
        if random_directions:
            direction = rng.uniform(-2.0, 2.0, size=swarm.dim)
        else:
            direction = compute_direction(swarm, i, rng)
        while not np.any(direction != 0.0):
            direction = rng.uniform(-1.0, 1.0, size=swarm.dim)
        t_lo, t_hi = _box_t_range(anchor, direction)
        lines.append(GuidingLine(anchor.copy(), direction, t_lo, t_hi))
    return lines


def update_particle(swarm: Swarm, i: int, new_position: np.ndarray, y: float) -> None:
    """Move particle ``i`` to an evaluated point and refresh both incumbents."""
    p = swarm.particles[i]
    new_position = np.asarray(new_position, dtype=float)
    if new_position.shape != p.position.shape:
        raise ValueError("position dimension mismatch")
    p.displacement = new_position - p.position
    p.position = new_position.copy()
    p.history.append((new_position.copy(), float(y)))
    p.update_count += 1
    if y < swarm.global_best_value:
        swarm.global_best_value = float(y)
        swarm.global_best_position = new_position.copy()


class Lemma1Result(NamedTuple):
    empirical_mean: float
    bound: float
    std_error: float
    exact_mean: float


def lemma1_check(
    g: np.ndarray,
    h1: np.ndarray,
    h2: np.ndarray,
    n_samples: int,
    rng: np.random.Generator,
) -> Lemma1Result:
    """Monte-Carlo check that randomized incumbent pulls keep a guaranteed
    alignment with any fixed vector g.

    Estimates E[<g, r1 o h1 + r2 o h2>^2] over uniform r1, r2 and returns it
    together with the lower bound
    (||h1||^2 cos^2(g,h1) + ||h2||^2 cos^2(g,h2)) * ||g||^2 / 4
    and the exact expectation
    (||g o h1||^2 + ||g o h2||^2) / 12 + <g, h1 + h2>^2 / 4.

    Note the cross moment E[<g, r1 o h1> <g, r2 o h2>] equals
    <g, h1> <g, h2> / 4, not zero, because the uniform draws are not
    centered. The bound therefore holds exactly when
    <g, h1> * <g, h2> >= 0 (both pulls correlated with g the same way,
    the regime the incumbent directions are designed for) and can fail
    otherwise, e.g. g = 1, h1 = 1, h2 = -1 in one dimension gives exact
    mean 1/6 against bound 1/2.
    """
    g = np.asarray(g, dtype=float)
    h1 = np.asarray(h1, dtype=float)
    h2 = np.asarray(h2, dtype=float)
    if g.shape != h1.shape or g.shape != h2.shape:
        raise ValueError("g, h1, h2 must share a dimension")
    if n_samples < 10_000:
        raise ValueError("need at least 1e4 samples")
    g_norm2 = float(g @ g)
    if g_norm2 == 0.0:
        raise ValueError("g must be non-zero")

    def _term(h: np.ndarray) -> float:
        h_norm2 = float(h @ h)
        if h_norm2 == 0.0:
            return 0.0
        cos2 = float(g @ h) ** 2 / (g_norm2 * h_norm2)
        return h_norm2 * cos2

    bound = 0.25 * (_term(h1) + _term(h2)) * g_norm2
    gh1 = g * h1
    gh2 = g * h2
    exact = (float(gh1 @ gh1) + float(gh2 @ gh2)) / 12.0 + 0.25 * float(
        g @ (h1 + h2)
    ) ** 2

    d = g.shape[0]
    samples = np.empty(n_samples)
    chunk = 200_000 // max(d, 1) + 1
    done = 0
    while done < n_samples:
        k = min(chunk, n_samples - done)
        r1 = rng.random((k, d))
        r2 = rng.random((k, d))
        inner = (r1 * h1 + r2 * h2) @ g
        samples[done : done + k] = inner * inner
        done += k
    mean = float(np.mean(samples))
    se = float(np.std(samples) / math.sqrt(n_samples))
    return Lemma1Result(mean, bound, se, exact)
