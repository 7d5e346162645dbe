"""Sparse signed subspace embeddings with bin-split expansion.

An embedding assigns each input dimension to exactly one target dimension
with a sign, i.e. a count-sketch-style projection. Points proposed in the
low-dimensional target box are pushed to the input box by copying each
target coordinate (with sign) into its assigned input dimensions. Expansion
splits each target dimension's input dimensions into up to ``bin_size``
child dimensions while exactly preserving all previously projected points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, TextIO

import numpy as np

__all__ = [
    "Embedding",
    "ExpansionMap",
    "new_embedding",
    "identity_embedding",
    "project_up",
    "expand",
    "lift_point",
    "success_probability",
    "success_probability_oracle",
    "write_embedding",
    "read_embedding",
]


@dataclass(frozen=True)
class Embedding:
    """Assignment of ``input_dim`` coordinates onto ``target_dim`` bins.

    ``targets[i]`` is the target dimension of input dimension ``i`` and
    ``signs[i]`` its sign in {-1, +1}. Every target dimension holds at
    least one input dimension.
    """

    input_dim: int
    target_dim: int
    targets: np.ndarray
    signs: np.ndarray

    def __post_init__(self) -> None:
        targets = np.asarray(self.targets, dtype=np.int64)
        signs = np.asarray(self.signs, dtype=np.int64)
        if not (1 <= self.target_dim <= self.input_dim):
            raise ValueError("need 1 <= target_dim <= input_dim")
        if targets.shape != (self.input_dim,) or signs.shape != (self.input_dim,):
            raise ValueError("targets/signs must have one entry per input dimension")
        if targets.min() < 0 or targets.max() >= self.target_dim:
            raise ValueError("target index out of range")
        if not np.all(np.abs(signs) == 1):
            raise ValueError("signs must be +1 or -1")
        if len(np.unique(targets)) != self.target_dim:
            raise ValueError("every target dimension needs at least one input dimension")
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "signs", signs)

    def bin_members(self, t: int) -> np.ndarray:
        """Input dimensions assigned to target dimension ``t``."""
        return np.nonzero(self.targets == t)[0]


@dataclass(frozen=True)
class ExpansionMap:
    """Records how each old target dimension split into new ones."""

    old_target_dim: int
    new_target_dim: int
    children: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if self.new_target_dim < self.old_target_dim:
            raise ValueError("expansion cannot shrink the target dimension")
        if len(self.children) != self.old_target_dim:
            raise ValueError("one child list per old target dimension")
        flat = sorted(c for group in self.children for c in group)
        if flat != list(range(self.new_target_dim)):
            raise ValueError("child lists must partition the new target dimensions")
        if any(len(group) < 1 for group in self.children):
            raise ValueError("each old dimension needs at least one child")


def new_embedding(input_dim: int, target_dim: int, rng: np.random.Generator) -> Embedding:
    """Draw a uniform random assignment with uniform random signs.

    Empty target bins are repaired by moving a random input dimension out of
    the currently largest bin, so the non-emptiness invariant always holds.
    """
    if not (1 <= target_dim <= input_dim):
        raise ValueError("need 1 <= target_dim <= input_dim")
    targets = rng.integers(0, target_dim, size=input_dim)
    signs = rng.choice(np.array([-1, 1]), size=input_dim)
    counts = np.bincount(targets, minlength=target_dim)
    while np.any(counts == 0):
        empty = int(np.argmin(counts))
        largest = int(np.argmax(counts))
        donors = np.nonzero(targets == largest)[0]
        mover = int(rng.choice(donors))
        targets[mover] = empty
        counts[largest] -= 1
        counts[empty] += 1
    return Embedding(input_dim, target_dim, targets, signs)


def identity_embedding(dim: int) -> Embedding:
    """The trivial full-dimension embedding (one bin per input dimension, +1 signs)."""
    return Embedding(dim, dim, np.arange(dim), np.ones(dim, dtype=np.int64))


def project_up(emb: Embedding, x_target: np.ndarray) -> np.ndarray:
    """Push a target-box point to the input box: out[i] = signs[i] * x[targets[i]]."""
    x = np.asarray(x_target, dtype=float)
    if x.shape != (emb.target_dim,):
        raise ValueError(f"expected shape ({emb.target_dim},), got {x.shape}")
    return emb.signs * x[emb.targets]


def expand(
    emb: Embedding, bin_size: int, rng: np.random.Generator
) -> tuple[Embedding, ExpansionMap]:
    """Split every target dimension into up to ``bin_size`` non-empty child bins.

    Each bin's input dimensions are partitioned uniformly at random over its
    children; signs are inherited unchanged. The new target dimension is the
    sum of child counts, which never exceeds the input dimension.
    """
    if bin_size < 2:
        raise ValueError("bin_size must be >= 2")
    if emb.target_dim >= emb.input_dim:
        raise ValueError("embedding is already at full dimension")
    new_targets = np.empty(emb.input_dim, dtype=np.int64)
    children: list[tuple[int, ...]] = []
    next_dim = 0
    for t in range(emb.target_dim):
        members = emb.bin_members(t)
        n_children = min(bin_size, len(members))
        order = rng.permutation(members)
        # one member per child first, so no child bin is empty
        child_of_member = np.empty(len(members), dtype=np.int64)
        child_of_member[:n_children] = np.arange(n_children)
        if len(members) > n_children:
            child_of_member[n_children:] = rng.integers(
                0, n_children, size=len(members) - n_children
            )
        new_targets[order] = next_dim + child_of_member
        children.append(tuple(range(next_dim, next_dim + n_children)))
        next_dim += n_children
    new_emb = Embedding(emb.input_dim, next_dim, new_targets, emb.signs.copy())
    emap = ExpansionMap(emb.target_dim, next_dim, tuple(children))
    return new_emb, emap


def lift_point(emap: ExpansionMap, x_old: np.ndarray) -> np.ndarray:
    """Copy each parent coordinate into all of its children.

    For the matching embeddings this preserves up-projection exactly:
    ``project_up(new, lift_point(emap, x)) == project_up(old, x)``.
    """
    x = np.asarray(x_old, dtype=float)
    if x.shape != (emap.old_target_dim,):
        raise ValueError(f"expected shape ({emap.old_target_dim},), got {x.shape}")
    out = np.empty(emap.new_target_dim, dtype=float)
    for parent, group in enumerate(emap.children):
        out[list(group)] = x[parent]
    return out


def _binom(n: int, k: int) -> int:
    if n < 0 or k < 0 or k > n:
        return 0
    return math.comb(n, k)


def _bin_sizes(input_dim: int, target_dim: int) -> tuple[int, int, int, int]:
    """Bin-size profile of a balanced assignment: sizes alpha and beta with counts."""
    alpha = input_dim // target_dim
    beta = -(-input_dim // target_dim)
    n_alpha = target_dim * (1 + alpha) - input_dim
    n_beta = input_dim - target_dim * alpha
    return alpha, beta, n_alpha, n_beta


def success_probability(input_dim: int, target_dim: int, effective_dim: int) -> float:
    """Probability that a balanced random assignment keeps every effective
    dimension in its own target bin (so the embedded box can represent the
    optimum).

    Counts placements of ``effective_dim`` marked dimensions over bins of
    size floor(d/d_t) and ceil(d/d_t); equals 1 whenever the target
    dimension reaches the input dimension.
    """
    if not (1 <= target_dim <= input_dim):
        raise ValueError("need 1 <= target_dim <= input_dim")
    if not (0 <= effective_dim <= input_dim):
        raise ValueError("need 0 <= effective_dim <= input_dim")
    if effective_dim == 0:
        return 1.0
    alpha, beta, n_alpha, n_beta = _bin_sizes(input_dim, target_dim)
    total = 0
    for i in range(effective_dim + 1):
        total += (
            _binom(n_alpha, i)
            * _binom(n_beta, effective_dim - i)
            * alpha**i
            * beta ** (effective_dim - i)
        )
    return float(Fraction(total, math.comb(input_dim, effective_dim)))


def success_probability_oracle(
    input_dim: int, target_dim: int, effective_dim: int
) -> float:
    """Exact success fraction by enumerating every placement of the effective
    dimensions over the balanced bins. Small inputs only.
    """
    if input_dim > 12:
        raise ValueError("enumeration oracle supports input_dim <= 12")
    if not (1 <= target_dim <= input_dim):
        raise ValueError("need 1 <= target_dim <= input_dim")
    if not (0 <= effective_dim <= input_dim):
        raise ValueError("need 0 <= effective_dim <= input_dim")
    alpha, beta, n_alpha, n_beta = _bin_sizes(input_dim, target_dim)
    bin_of_slot: list[int] = []
    for b in range(target_dim):
        size = alpha if b < n_alpha else beta
        bin_of_slot.extend([b] * size)
    good = 0
    total = 0
    for placement in combinations(range(input_dim), effective_dim):
        total += 1
        bins = [bin_of_slot[s] for s in placement]
        good += len(set(bins)) == len(bins)
    return float(Fraction(good, total))


def write_embedding(emb: Embedding, fh: TextIO) -> None:
    """Serialize as one line per input dimension: index, target, sign."""
    fh.write(f"# input_dim={emb.input_dim} target_dim={emb.target_dim}\n")
    for i in range(emb.input_dim):
        fh.write(f"{i} {int(emb.targets[i])} {int(emb.signs[i])}\n")


def read_embedding(lines: Iterable[str]) -> Embedding:
    """Parse the line-oriented format produced by :func:`write_embedding`."""
    header = None
    rows: list[tuple[int, int, int]] = []
    for raw in lines:
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            header = dict(part.split("=") for part in line[1:].split())
            continue
        i, t, s = (int(tok) for tok in line.split())
        rows.append((i, t, s))
    if header is None:
        raise ValueError("missing embedding header line")
    input_dim = int(header["input_dim"])
    target_dim = int(header["target_dim"])
    targets = np.empty(input_dim, dtype=np.int64)
    signs = np.empty(input_dim, dtype=np.int64)
    if len(rows) != input_dim:
        raise ValueError("wrong number of assignment rows")
    for i, t, s in rows:
        targets[i] = t
        signs[i] = s
    return Embedding(input_dim, target_dim, targets, signs)
