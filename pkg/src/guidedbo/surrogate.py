"""Gaussian-process surrogate with a Matern-5/2 ARD kernel.

Targets are standardized internally; hyperparameters are constrained to
fixed boxes so the scales stay meaningful after standardization:
lengthscales in [0.005, 10], signal variance in [0.05, 20], noise variance
in [5e-4, 0.2]. Fitting maximizes the log marginal likelihood by projected
gradient ascent in log-parameter space from several starts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.linalg.lapack import dpotri

__all__ = [
    "GPHyperparams",
    "GPModel",
    "SamplePath",
    "GPFitError",
    "LENGTHSCALE_BOUNDS",
    "SIGNAL_BOUNDS",
    "NOISE_BOUNDS",
    "fit",
    "log_marginal_likelihood",
    "posterior",
    "joint_sample",
    "sample_path",
]

LENGTHSCALE_BOUNDS = (0.005, 10.0)
SIGNAL_BOUNDS = (0.05, 20.0)
NOISE_BOUNDS = (5e-4, 0.2)

# diagonal jitter escalation used whenever a factorization fails
_JITTERS = (0.0, 1e-8, 1e-6, 1e-4)

_SQRT5 = math.sqrt(5.0)


class GPFitError(RuntimeError):
    """Raised when a covariance factorization fails at the maximum jitter."""


@dataclass(frozen=True)
class GPHyperparams:
    lengthscales: np.ndarray
    signal_variance: float
    noise_variance: float

    def __post_init__(self) -> None:
        ls = np.asarray(self.lengthscales, dtype=float)
        object.__setattr__(self, "lengthscales", ls)
        lo, hi = LENGTHSCALE_BOUNDS
        if not np.all((ls >= lo) & (ls <= hi)):
            raise ValueError(f"lengthscales outside [{lo}, {hi}]")
        if not SIGNAL_BOUNDS[0] <= self.signal_variance <= SIGNAL_BOUNDS[1]:
            raise ValueError("signal_variance outside its bounds")
        if not NOISE_BOUNDS[0] <= self.noise_variance <= NOISE_BOUNDS[1]:
            raise ValueError("noise_variance outside its bounds")
        if not (np.all(np.isfinite(ls)) and math.isfinite(self.signal_variance)
                and math.isfinite(self.noise_variance)):
            raise ValueError("hyperparameters must be finite")


def _scaled_r(X1: np.ndarray, X2: np.ndarray, lengthscales: np.ndarray) -> np.ndarray:
    """Pairwise scaled distances r with r^2 = sum_j (x_j - x'_j)^2 / l_j^2."""
    A = X1 / lengthscales
    B = X2 / lengthscales
    sq = A @ (-2.0 * B).T
    sq += np.sum(A * A, axis=1)[:, None]
    sq += np.sum(B * B, axis=1)[None, :]
    np.maximum(sq, 0.0, out=sq)
    np.sqrt(sq, out=sq)
    return sq


def _matern52(r: np.ndarray) -> np.ndarray:
    """Unit-variance Matern-5/2 correlation as a function of scaled distance."""
    sr = _SQRT5 * r
    out = np.exp(-sr)
    sr += 1.0
    sr += (5.0 / 3.0) * r * r
    out *= sr
    return out


def kernel(X1: np.ndarray, X2: np.ndarray, hp: GPHyperparams) -> np.ndarray:
    """Matern-5/2 ARD covariance between two point sets."""
    return hp.signal_variance * _matern52(_scaled_r(X1, X2, hp.lengthscales))


def _chol_with_jitter(K: np.ndarray) -> np.ndarray:
    n = K.shape[0]
    scale = max(float(np.trace(K)) / n, 1.0)
    for jitter in _JITTERS:
        KJ = K.copy()
        KJ.flat[:: n + 1] += jitter * scale
        try:
            return cholesky(KJ, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            continue
    raise GPFitError("covariance factorization failed at maximum jitter")


def log_marginal_likelihood(
    X: np.ndarray,
    y: np.ndarray,
    hp: GPHyperparams,
    with_grad: bool = True,
) -> tuple[float, Optional[np.ndarray]]:
    """Gaussian log marginal likelihood and its exact gradient.

    The gradient is taken with respect to the log-hyperparameters, ordered
    as (log lengthscales..., log signal_variance, log noise_variance).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n, d = X.shape
    if n < 1:
        raise ValueError("need at least one training point")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite training data")
    r = _scaled_r(X, X, hp.lengthscales)
    expterm = np.exp(-_SQRT5 * r)
    corr = (1.0 + _SQRT5 * r + (5.0 / 3.0) * r * r) * expterm
    K = hp.signal_variance * corr
    K.flat[:: n + 1] += hp.noise_variance
    L = _chol_with_jitter(K)
    alpha = cho_solve((L, True), y, check_finite=False)
    value = (
        -0.5 * float(y @ alpha)
        - float(np.sum(np.log(np.diag(L))))
        - 0.5 * n * math.log(2.0 * math.pi)
    )
    if not with_grad:
        return value, None
    Kinv, info = dpotri(L, lower=1)
    if info != 0:
        raise GPFitError("triangular inversion failed")
    # dpotri fills one triangle only
    Kinv = Kinv + Kinv.T
    Kinv.flat[:: n + 1] *= 0.5
    W = np.outer(alpha, alpha) - Kinv
    grad = np.empty(d + 2)
    # dK/d(log l_j) = sf2 * (5/3) (1 + sqrt5 r) e^{-sqrt5 r} * D2_j / l_j^2;
    # sum_ik WM_ik (x_ij - x_kj)^2 = 2 s.x_j^2 - 2 x_j.(WM x_j) with s the row sums
    M = hp.signal_variance * (5.0 / 3.0) * (1.0 + _SQRT5 * r) * expterm
    WM = W * M
    s = WM.sum(axis=1)
    G = WM @ X
    grad[:d] = (s @ (X * X) - np.einsum("ij,ij->j", X, G)) / hp.lengthscales**2
    grad[d] = 0.5 * float(np.sum(W * (hp.signal_variance * corr)))
    grad[d + 1] = 0.5 * float(np.trace(W)) * hp.noise_variance
    return value, grad


@dataclass(frozen=True)
class GPModel:
    """A fitted surrogate: hyperparameters, training data, and factorization.

    ``y_train`` is stored standardized; ``y_mean``/``y_sd`` convert back to
    objective units. ``chol`` is the lower Cholesky factor of K + noise*I
    and ``alpha`` the solved weights.
    """

    hyperparams: GPHyperparams
    X_train: np.ndarray
    y_train: np.ndarray
    y_mean: float
    y_sd: float
    chol: np.ndarray
    alpha: np.ndarray

    @property
    def n_train(self) -> int:
        return self.X_train.shape[0]

    @property
    def dim(self) -> int:
        return self.X_train.shape[1]


def _log_bounds(dim: int) -> tuple[np.ndarray, np.ndarray]:
    lo = np.concatenate(
        (
            np.full(dim, math.log(LENGTHSCALE_BOUNDS[0])),
            [math.log(SIGNAL_BOUNDS[0]), math.log(NOISE_BOUNDS[0])],
        )
    )
    hi = np.concatenate(
        (
            np.full(dim, math.log(LENGTHSCALE_BOUNDS[1])),
            [math.log(SIGNAL_BOUNDS[1]), math.log(NOISE_BOUNDS[1])],
        )
    )
    return lo, hi


def _theta_to_hp(theta: np.ndarray, dim: int) -> GPHyperparams:
    # exp(log(bound)) can land a ulp outside the box; snap back in
    return GPHyperparams(
        lengthscales=np.clip(np.exp(theta[:dim]), *LENGTHSCALE_BOUNDS),
        signal_variance=float(np.clip(np.exp(theta[dim]), *SIGNAL_BOUNDS)),
        noise_variance=float(np.clip(np.exp(theta[dim + 1]), *NOISE_BOUNDS)),
    )


def _default_hp(dim: int) -> GPHyperparams:
    # geometric midpoints of the boxes
    return GPHyperparams(
        lengthscales=np.full(dim, math.sqrt(LENGTHSCALE_BOUNDS[0] * LENGTHSCALE_BOUNDS[1])),
        signal_variance=math.sqrt(SIGNAL_BOUNDS[0] * SIGNAL_BOUNDS[1]),
        noise_variance=math.sqrt(NOISE_BOUNDS[0] * NOISE_BOUNDS[1]),
    )


def _ascend(
    X: np.ndarray,
    y: np.ndarray,
    theta0: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    n_steps: int,
) -> tuple[float, np.ndarray]:
    """Projected gradient ascent with backtracking on the step size."""
    dim = X.shape[1]
    theta = np.clip(theta0, lo, hi)
    value, grad = log_marginal_likelihood(X, y, _theta_to_hp(theta, dim))
    step = 0.1
    for _ in range(n_steps):
        gnorm = float(np.max(np.abs(grad)))
        if gnorm < 1e-8:
            break
        improved = False
        while step >= 1e-6:
            cand = np.clip(theta + step * grad, lo, hi)
            cand_value, _ = log_marginal_likelihood(
                X, y, _theta_to_hp(cand, dim), with_grad=False
            )
            if cand_value > value:
                improved = True
                break
            step *= 0.5
        if not improved:
            break
        theta = cand
        value, grad = log_marginal_likelihood(X, y, _theta_to_hp(theta, dim))
        step = min(step * 2.0, 1.0)
    return value, theta


def fit(
    X: np.ndarray,
    y: np.ndarray,
    rng: Optional[np.random.Generator] = None,
    n_starts: int = 10,
    n_steps: int = 50,
    init: Optional[GPHyperparams] = None,
) -> GPModel:
    """Fit the surrogate by multi-start maximum marginal likelihood.

    One start is ``init`` (or box midpoints); the rest are log-uniform draws
    inside the hyperparameter boxes. Targets are standardized to zero mean
    and unit variance with a 1e-8 floor on the scale.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be (n, d) with matching y")
    if X.shape[0] < 1:
        raise ValueError("need at least one training point")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite training data")
    if rng is None:
        rng = np.random.default_rng(0)
    n, dim = X.shape
    y_mean = float(np.mean(y))
    y_sd = max(float(np.std(y)), 1e-8)
    y_std = (y - y_mean) / y_sd

    lo, hi = _log_bounds(dim)
    start_hp = init if init is not None else _default_hp(dim)
    starts = [np.concatenate((
        np.log(start_hp.lengthscales),
        [math.log(start_hp.signal_variance), math.log(start_hp.noise_variance)],
    ))]
    for _ in range(max(0, n_starts - 1)):
        starts.append(rng.uniform(lo, hi))

    best_value = -np.inf
    best_theta = starts[0]
    for theta0 in starts:
        value, theta = _ascend(X, y_std, theta0, lo, hi, n_steps)
        if value > best_value:
            best_value = value
            best_theta = theta
    hp = _theta_to_hp(best_theta, dim)

    K = kernel(X, X, hp)
    K.flat[:: n + 1] += hp.noise_variance
    L = _chol_with_jitter(K)
    alpha = cho_solve((L, True), y_std, check_finite=False)
    return GPModel(
        hyperparams=hp,
        X_train=X.copy(),
        y_train=y_std,
        y_mean=y_mean,
        y_sd=y_sd,
        chol=L,
        alpha=alpha,
    )


def posterior(model: GPModel, Q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Predictive mean vector and covariance matrix in objective units."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if Q.shape[1] != model.dim:
        raise ValueError(f"query dimension {Q.shape[1]} != model dimension {model.dim}")
    Ks = kernel(model.X_train, Q, model.hyperparams)
    Kss = kernel(Q, Q, model.hyperparams)
    mean_std = Ks.T @ model.alpha
    V = solve_triangular(model.chol, Ks, lower=True, check_finite=False)
    cov_std = Kss - V.T @ V
    cov_std = 0.5 * (cov_std + cov_std.T)
    diag = np.diag(cov_std).copy()
    np.fill_diagonal(cov_std, np.maximum(diag, 0.0))
    mean = model.y_mean + model.y_sd * mean_std
    cov = model.y_sd**2 * cov_std
    return mean, cov


def joint_sample(
    model: GPModel, Q: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """One draw from the exact joint posterior at the query points."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if Q.shape[0] < 1:
        raise ValueError("need at least one query point")
    if Q.shape[0] > 20000:
        raise ValueError("query set too large for exact joint sampling")
    mean, cov = posterior(model, Q)
    L = _chol_with_jitter(cov / model.y_sd**2) * model.y_sd
    return mean + L @ rng.standard_normal(Q.shape[0])


@dataclass(frozen=True)
class SamplePath:
    """A deterministic approximate posterior draw built on random features.

    Frequencies follow the Matern-5/2 spectral density (multivariate
    Student-t with 5 degrees of freedom, scaled by inverse lengthscales);
    the weights are conditioned on the training data, so evaluating the
    path twice at the same point gives identical values.
    """

    feature_frequencies: np.ndarray
    feature_phases: np.ndarray
    feature_weights: np.ndarray
    count: int
    amplitude: float
    y_mean: float
    y_sd: float

    def __call__(self, Q: np.ndarray) -> np.ndarray:
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        phi = self.amplitude * np.cos(Q @ self.feature_frequencies.T + self.feature_phases)
        return self.y_mean + self.y_sd * (phi @ self.feature_weights)


def sample_path(
    model: GPModel, n_features: int = 1024, rng: Optional[np.random.Generator] = None
) -> SamplePath:
    """Draw a random-feature posterior path evaluable at arbitrary points.

    The prior weight draw is updated against the training data through the
    n x n feature Gram system, which is exact for the feature-space model.
    """
    if n_features < 64:
        raise ValueError("n_features must be >= 64")
    if rng is None:
        rng = np.random.default_rng(0)
    hp = model.hyperparams
    d = model.dim
    z = rng.standard_normal((n_features, d))
    u = rng.chisquare(5.0, size=n_features)
    freqs = z * np.sqrt(5.0 / u)[:, None] / hp.lengthscales[None, :]
    phases = rng.uniform(0.0, 2.0 * math.pi, size=n_features)
    amplitude = math.sqrt(2.0 * hp.signal_variance / n_features)

    phi = amplitude * np.cos(model.X_train @ freqs.T + phases)
    w_prior = rng.standard_normal(n_features)
    noise = math.sqrt(hp.noise_variance) * rng.standard_normal(model.n_train)
    gram = phi @ phi.T
    gram.flat[:: model.n_train + 1] += hp.noise_variance
    L = _chol_with_jitter(gram)
    resid = model.y_train - phi @ w_prior - noise
    weights = w_prior + phi.T @ cho_solve((L, True), resid, check_finite=False)
    return SamplePath(
        feature_frequencies=freqs,
        feature_phases=phases,
        feature_weights=weights,
        count=n_features,
        amplitude=amplitude,
        y_mean=model.y_mean,
        y_sd=model.y_sd,
    )
