import numpy as np
import pytest

from guidedbo.bandit import default_candidates_per_line, select_line
from guidedbo.surrogate import fit
from guidedbo.swarm import GuidingLine, build_lines, init_swarm


def _model(seed=0, n=12, d=2):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (n, d))
    y = np.sin(3 * X[:, 0]) + 0.5 * X[:, 1]
    return fit(X, y, rng, n_starts=3, n_steps=20), X, y, rng


def _lines_for(X, y, m, rng):
    swarm = init_swarm(X, y, m, rng)
    return build_lines(swarm, rng)


def test_single_line_always_chosen():
    model, X, y, rng = _model()
    line = _lines_for(X, y, 1, rng)
    sel = select_line(model, line, 10, rng)
    assert sel.chosen_index == 0
    assert sel.rewards.shape == (1,)


def test_identical_lines_tie_to_lowest_index():
    model, X, y, rng = _model(1)
    line = _lines_for(X, y, 1, rng)[0]
    twins = [GuidingLine(line.anchor, line.direction, line.t_lo, line.t_hi) for _ in range(3)]

    class _SharedT:
        """rng stub: same stratified offsets for every line, one real joint draw."""

        def __init__(self, rng):
            self._rng = rng
            self._cached = None

        def random(self, size=None):
            if self._cached is None:
                self._cached = self._rng.random(size)
            return self._cached

        def standard_normal(self, size=None):
            return self._rng.standard_normal(size)

    sel = select_line(model, twins, 8, _SharedT(np.random.default_rng(3)))
    assert np.max(np.abs(sel.rewards - sel.rewards[0])) < 1e-12
    assert sel.chosen_index == 0


def test_chosen_index_attains_max_reward():
    model, X, y, rng = _model(2)
    lines = _lines_for(X, y, 6, rng)
    sel = select_line(model, lines, 12, rng)
    assert sel.rewards[sel.chosen_index] == np.max(sel.rewards)
    assert sel.candidates_per_line == 12


def test_fixed_seed_reproducible():
    model, X, y, rng = _model(3)
    lines = _lines_for(X, y, 5, rng)
    a = select_line(model, lines, 15, np.random.default_rng(42))
    b = select_line(model, lines, 15, np.random.default_rng(42))
    assert a.chosen_index == b.chosen_index
    assert np.array_equal(a.rewards, b.rewards)


def test_collapsed_surrogate_matches_mean_argmax():
    # densely observed smooth function with a deep basin: the posterior
    # collapses enough that selection must agree with a brute-force argmax
    # of the posterior mean over the same candidate pool
    rng = np.random.default_rng(4)
    X = rng.uniform(-1, 1, (150, 2))
    y = 50.0 * ((X - 0.5) ** 2).sum(axis=1)
    model = fit(X, y, rng, n_starts=6, n_steps=60)

    # one line through the basin, two hugging the far corner
    lines = [
        GuidingLine(np.array([0.5, 0.5]), np.array([1.0, 0.0]), -0.3, 0.3),
        GuidingLine(np.array([-0.9, -0.9]), np.array([1.0, 0.0]), -0.05, 0.05),
        GuidingLine(np.array([-0.9, -0.9]), np.array([0.0, 1.0]), -0.05, 0.05),
    ]
    n_cand = 20
    sel = select_line(model, lines, n_cand, np.random.default_rng(99))

    from guidedbo.bandit import _stratified_t
    from guidedbo.surrogate import posterior

    pool_rng = np.random.default_rng(99)
    best_per_line = []
    for line in lines:
        t = _stratified_t(line, n_cand, pool_rng)
        mean, _ = posterior(model, np.clip(line.points_at(t), -1.0, 1.0))
        best_per_line.append(-(mean.min() - model.y_mean) / model.y_sd)
    assert sel.chosen_index == int(np.argmax(best_per_line)) == 0


def test_reward_units_are_negated_standardized():
    model, X, y, rng = _model(5)
    lines = _lines_for(X, y, 3, rng)
    sel = select_line(model, lines, 10, np.random.default_rng(0))
    # a reward r corresponds to objective value y_mean - y_sd * r; the best
    # reward should decode to something in the plausible objective range
    decoded = model.y_mean - model.y_sd * sel.rewards
    assert decoded.min() > y.min() - 5 * model.y_sd
    assert decoded.max() < y.max() + 5 * model.y_sd


def test_empty_lines_and_tiny_candidate_counts_rejected():
    model, X, y, rng = _model(6)
    with pytest.raises(ValueError):
        select_line(model, [], 10, rng)
    lines = _lines_for(X, y, 2, rng)
    with pytest.raises(ValueError):
        select_line(model, lines, 1, rng)


def test_default_candidate_budget_split():
    assert default_candidates_per_line(1, 20) == 50  # floor
    assert default_candidates_per_line(10, 20) == 50
    assert default_candidates_per_line(50, 20) == 250
    assert default_candidates_per_line(100, 20) == 250  # 5000 cap


def test_large_pool_falls_back_to_shared_path():
    model, X, y, rng = _model(7)
    lines = _lines_for(X, y, 3, rng)
    sel = select_line(model, lines, 7000, np.random.default_rng(1), n_features=128)
    assert sel.rewards.shape == (3,)
    assert sel.chosen_index == int(np.argmax(sel.rewards))
