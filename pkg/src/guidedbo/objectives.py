"""Black-box objectives: bounds, unit-box scaling, and synthetic benchmarks.

All internal optimization happens in the symmetric unit box [-1, 1]^d;
objectives are evaluated in their native units after an affine map, so the
bounds live here and nowhere else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "ObjectiveSpec",
    "EvalRecord",
    "make_synthetic",
    "evaluate",
    "to_native",
    "to_unit",
    "SYNTHETIC_NAMES",
]

SYNTHETIC_NAMES = ("ackley", "branin_aug", "hartmann6_aug")


@dataclass(frozen=True)
class ObjectiveSpec:
    """A boxed black-box function with optional observation noise.

    ``effective_dims`` lists the 0-based coordinates that influence the
    noiseless value; remaining coordinates are dummies. ``noise_sd`` is the
    standard deviation of additive Gaussian noise in objective units.
    """

    name: str
    dim: int
    lower: np.ndarray
    upper: np.ndarray
    fn: Callable[[np.ndarray], float]
    effective_dims: tuple[int, ...]
    noise_sd: float = 0.0
    known_optimum: Optional[float] = None

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if lower.shape != (self.dim,) or upper.shape != (self.dim,):
            raise ValueError("bounds must have one entry per dimension")
        if not np.all(lower < upper):
            raise ValueError("every lower bound must be strictly below its upper bound")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")
        if any(i < 0 or i >= self.dim for i in self.effective_dims):
            raise ValueError("effective_dims out of range")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "effective_dims", tuple(self.effective_dims))


@dataclass(frozen=True)
class EvalRecord:
    """One observed evaluation: native-unit input, value, 1-based counter."""

    x_native: np.ndarray
    y: float
    eval_index: int

    def __post_init__(self) -> None:
        if self.eval_index < 1:
            raise ValueError("eval_index counts from 1")
        object.__setattr__(self, "x_native", np.asarray(self.x_native, dtype=float))


def _ackley_value(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    sq = math.sqrt(float(np.mean(x * x)))
    cos = float(np.mean(np.cos(2.0 * math.pi * x)))
    return -20.0 * math.exp(-0.2 * sq) - math.exp(cos) + 20.0 + math.e


_BRANIN_B = 5.1 / (4.0 * math.pi**2)
_BRANIN_C = 5.0 / math.pi
_BRANIN_T = 1.0 / (8.0 * math.pi)


def _branin_value(x: np.ndarray) -> float:
    x1, x2 = float(x[0]), float(x[1])
    term = x2 - _BRANIN_B * x1 * x1 + _BRANIN_C * x1 - 6.0
    return term * term + 10.0 * (1.0 - _BRANIN_T) * math.cos(x1) + 10.0


_HARTMANN6_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
_HARTMANN6_A = np.array(
    [
        [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
        [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
        [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
        [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
    ]
)
_HARTMANN6_P = 1e-4 * np.array(
    [
        [1312.0, 1696.0, 5569.0, 124.0, 8283.0, 5886.0],
        [2329.0, 4135.0, 8307.0, 3736.0, 1004.0, 9991.0],
        [2348.0, 1451.0, 3522.0, 2883.0, 3047.0, 6650.0],
        [4047.0, 8828.0, 8732.0, 5743.0, 1091.0, 381.0],
    ]
)


def _hartmann6_value(x: np.ndarray) -> float:
    x = np.asarray(x[:6], dtype=float)
    inner = np.sum(_HARTMANN6_A * (x[None, :] - _HARTMANN6_P) ** 2, axis=1)
    return -float(np.sum(_HARTMANN6_ALPHA * np.exp(-inner)))


def make_synthetic(name: str, dim: int, noise_sd: float = 0.0) -> ObjectiveSpec:
    """Build one of the synthetic benchmarks at the requested dimension.

    ``branin_aug`` and ``hartmann6_aug`` pad their base problem with dummy
    coordinates in [0, 1] that provably do not affect the value.
    """
    if name == "ackley":
        if dim < 1:
            raise ValueError("ackley requires dim >= 1")
        return ObjectiveSpec(
            name="ackley",
            dim=dim,
            lower=np.full(dim, -32.768),
            upper=np.full(dim, 32.768),
            fn=_ackley_value,
            effective_dims=tuple(range(dim)),
            noise_sd=noise_sd,
            known_optimum=0.0,
        )
    if name == "branin_aug":
        if dim < 2:
            raise ValueError("branin_aug requires dim >= 2")
        lower = np.concatenate(([-5.0, 0.0], np.zeros(dim - 2)))
        upper = np.concatenate(([10.0, 15.0], np.ones(dim - 2)))
        return ObjectiveSpec(
            name="branin_aug",
            dim=dim,
            lower=lower,
            upper=upper,
            fn=_branin_value,
            effective_dims=(0, 1),
            noise_sd=noise_sd,
            known_optimum=0.39788735772973816,
        )
    if name == "hartmann6_aug":
        if dim < 6:
            raise ValueError("hartmann6_aug requires dim >= 6")
        return ObjectiveSpec(
            name="hartmann6_aug",
            dim=dim,
            lower=np.zeros(dim),
            upper=np.ones(dim),
            fn=_hartmann6_value,
            effective_dims=tuple(range(6)),
            noise_sd=noise_sd,
            known_optimum=-3.32237,
        )
    raise ValueError(f"unknown synthetic objective: {name!r}")


def evaluate(
    spec: ObjectiveSpec,
    x_native: np.ndarray,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Evaluate the objective at a native-unit point, adding noise if configured.

    Out-of-bounds inputs are an error, never clamped. With ``noise_sd == 0``
    this is a pure function of ``x_native`` and the rng is untouched.
    """
    x = np.asarray(x_native, dtype=float)
    if x.shape != (spec.dim,):
        raise ValueError(f"expected shape ({spec.dim},), got {x.shape}")
    if np.any(x < spec.lower) or np.any(x > spec.upper):
        raise ValueError("input outside the objective bounds")
    y = float(spec.fn(x))
    if spec.noise_sd > 0.0:
        if rng is None:
            raise ValueError("noisy evaluation requires an rng")
        y += spec.noise_sd * float(rng.standard_normal())
    return y


def to_native(spec: ObjectiveSpec, x_unit: np.ndarray) -> np.ndarray:
    """Affine map from the unit box [-1, 1]^d to native bounds."""
    x = np.asarray(x_unit, dtype=float)
    if x.shape != (spec.dim,):
        raise ValueError(f"expected shape ({spec.dim},), got {x.shape}")
    if np.any(x < -1.0) or np.any(x > 1.0):
        raise ValueError("unit-box coordinate outside [-1, 1]")
    return spec.lower + 0.5 * (x + 1.0) * (spec.upper - spec.lower)


def to_unit(spec: ObjectiveSpec, x_native: np.ndarray) -> np.ndarray:
    """Inverse of :func:`to_native`."""
    x = np.asarray(x_native, dtype=float)
    if x.shape != (spec.dim,):
        raise ValueError(f"expected shape ({spec.dim},), got {x.shape}")
    return 2.0 * (x - spec.lower) / (spec.upper - spec.lower) - 1.0
