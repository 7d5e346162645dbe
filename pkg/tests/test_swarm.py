import numpy as np
import pytest

from guidedbo.swarm import (
    Swarm,
    build_lines,
    compute_direction,
    init_swarm,
    lemma1_check,
    update_particle,
)


class _FixedUniform:
    """Stand-in rng whose uniform draws are all ones (forces r1 = r2 = 1)."""

    def random(self, size=None):
        return np.ones(size) if size is not None else 1.0


def _swarm_from(X, y, m, seed=0, **kw):
    return init_swarm(np.asarray(X, float), np.asarray(y, float), m,
                      np.random.default_rng(seed), **kw)


def test_init_swarm_uses_all_points_when_exact():
    X = np.arange(12.0).reshape(4, 3)
    y = np.array([3.0, 1.0, 2.0, 4.0])
    swarm = _swarm_from(X, y, 4)
    positions = sorted(tuple(p.position) for p in swarm.particles)
    assert positions == sorted(tuple(row) for row in X)
    assert swarm.global_best_value == 1.0
    assert np.array_equal(swarm.global_best_position, X[1])


def test_init_swarm_single_particle_and_errors():
    X = np.random.default_rng(0).uniform(-1, 1, (5, 2))
    y = np.arange(5.0)
    swarm = _swarm_from(X, y, 1)
    assert swarm.size == 1
    assert any(np.array_equal(swarm.particles[0].position, row) for row in X)
    with pytest.raises(ValueError):
        _swarm_from(X, y, 6)


def test_init_swarm_deterministic_per_seed():
    rng_data = np.random.default_rng(1)
    X = rng_data.uniform(-1, 1, (30, 4))
    y = rng_data.normal(size=30)
    a = _swarm_from(X, y, 10, seed=5)
    b = _swarm_from(X, y, 10, seed=5)
    for pa, pb in zip(a.particles, b.particles):
        assert np.array_equal(pa.position, pb.position)


def test_default_coefficients():
    X = np.zeros((3, 2))
    swarm = _swarm_from(X, np.zeros(3), 3)
    assert swarm.inertia == 0.729
    assert swarm.cognitive == pytest.approx(1.49445)
    assert swarm.social == pytest.approx(1.49445)


def test_compute_direction_vanishes_when_stationary_at_best():
    X = np.array([[0.5, -0.5]])
    swarm = _swarm_from(X, np.array([1.0]), 1)
    v = compute_direction(swarm, 0, np.random.default_rng(0))
    assert np.array_equal(v, np.zeros(2))


def test_compute_direction_forced_draw_arithmetic():
    # displacement (1,0), personal pull (0,2), global pull (2,2), r1=r2=1
    swarm = Swarm(
        particles=[],
        inertia=0.729,
        cognitive=1.49445,
        social=1.49445,
        global_best_position=np.array([2.0, 2.0]),
        global_best_value=0.0,
    )
    from guidedbo.swarm import Particle

    p = Particle(
        position=np.array([0.0, 0.0]),
        displacement=np.array([1.0, 0.0]),
        history=[(np.array([0.0, 2.0]), -1.0), (np.array([0.0, 0.0]), 0.0)],
        update_count=1,
    )
    swarm.particles.append(p)
    v = compute_direction(swarm, 0, _FixedUniform())
    assert v == pytest.approx([3.7179, 5.9778], abs=1e-4)


def test_build_lines_center_unit_direction():
    X = np.zeros((1, 3))
    swarm = _swarm_from(X, np.zeros(1), 1)
    swarm.particles[0].displacement = np.array([1.0, 0.0, 0.0]) / swarm.inertia
    line = build_lines(swarm, _FixedUniform2())[0]
    assert line.t_lo == pytest.approx(-1.0)
    assert line.t_hi == pytest.approx(1.0)


class _FixedUniform2:
    """rng that yields zero uniform [0,1) draws and never triggers fallbacks."""

    def random(self, size=None):
        return np.zeros(size) if size is not None else 0.0

    def uniform(self, lo, hi, size=None):
        raise AssertionError("fallback should not be used")


def test_build_lines_corner_outward_direction():
    X = np.ones((1, 2))
    swarm = _swarm_from(X, np.zeros(1), 1)
    swarm.particles[0].displacement = np.array([1.0, 1.0]) / swarm.inertia
    line = build_lines(swarm, _FixedUniform2())[0]
    assert line.t_hi == 0.0
    assert line.t_lo < 0.0


def test_build_lines_stationary_swarm_falls_back_to_random():
    rng = np.random.default_rng(2)
    X = np.zeros((5, 3))
    swarm = _swarm_from(X, np.zeros(5), 5)
    lines = build_lines(swarm, rng)
    assert len(lines) == 5
    for line in lines:
        assert np.any(line.direction != 0.0)
        assert line.t_lo < line.t_hi


def test_lines_stay_inside_box_property():
    rng = np.random.default_rng(3)
    X = rng.uniform(-1, 1, (40, 6))
    y = rng.normal(size=40)
    swarm = _swarm_from(X, y, 20)
    for _ in range(5):
        for line in build_lines(swarm, rng):
            ts = np.linspace(line.t_lo, line.t_hi, 100)
            pts = line.points_at(ts)
            assert np.all(pts >= -1 - 1e-12) and np.all(pts <= 1 + 1e-12)


def test_update_particle_incumbent_rules():
    X = np.array([[0.0, 0.0], [1.0, 1.0]])
    swarm = _swarm_from(X, np.array([2.0, 3.0]), 2)
    i = next(k for k, p in enumerate(swarm.particles) if p.history[0][1] == 2.0)
    update_particle(swarm, i, np.array([0.5, 0.5]), 1.0)
    p = swarm.particles[i]
    assert np.array_equal(p.personal_best[0], [0.5, 0.5])
    assert np.array_equal(p.displacement, [0.5, 0.5])
    assert p.update_count == 1
    assert swarm.global_best_value == 1.0
    # worse value moves the particle but not its incumbent
    update_particle(swarm, i, np.array([0.9, 0.9]), 9.0)
    assert np.array_equal(p.personal_best[0], [0.5, 0.5])
    assert np.array_equal(p.position, [0.9, 0.9])
    assert swarm.global_best_value == 1.0


def test_incumbents_match_bruteforce_after_update_storm():
    rng = np.random.default_rng(4)
    X = rng.uniform(-1, 1, (6, 3))
    y = rng.normal(size=6)
    swarm = _swarm_from(X, y, 6)
    for _ in range(200):
        i = int(rng.integers(6))
        update_particle(swarm, i, rng.uniform(-1, 1, 3), float(rng.normal()))
    best_val = np.inf
    for p in swarm.particles:
        vals = [v for _, v in p.history]
        pos, val = p.personal_best
        k = int(np.argmin(vals))
        assert val == vals[k]
        assert np.array_equal(pos, p.history[k][0])
        best_val = min(best_val, min(vals))
    assert swarm.global_best_value == best_val


def test_update_particle_ties_keep_earlier_entry():
    X = np.array([[0.0], [1.0]])
    swarm = _swarm_from(X, np.array([1.0, 2.0]), 2)
    i = next(k for k, p in enumerate(swarm.particles) if p.history[0][1] == 1.0)
    first_pos = swarm.particles[i].history[0][0].copy()
    update_particle(swarm, i, np.array([0.7]), 1.0)
    assert np.array_equal(swarm.particles[i].personal_best[0], first_pos)


def test_lemma1_orthogonal_bound_is_zero():
    rng = np.random.default_rng(5)
    g = np.array([1.0, 0.0, 0.0])
    h1 = np.array([0.0, 2.0, 0.0])
    h2 = np.array([0.0, 0.0, -3.0])
    res = lemma1_check(g, h1, h2, 20_000, rng)
    assert res.bound == 0.0
    assert res.empirical_mean >= 0.0


def test_lemma1_d1_closed_forms():
    rng = np.random.default_rng(6)
    one = np.array([1.0])
    res = lemma1_check(one, one, one, 200_000, rng)
    assert res.exact_mean == pytest.approx(7.0 / 6.0, abs=1e-12)
    assert res.bound == pytest.approx(0.5, abs=1e-12)
    assert res.empirical_mean == pytest.approx(7.0 / 6.0, abs=5 * res.std_error)

    res2 = lemma1_check(one, one, np.array([0.0]), 200_000, rng)
    assert res2.exact_mean == pytest.approx(1.0 / 3.0, abs=1e-12)
    assert res2.bound == pytest.approx(0.25, abs=1e-12)
    assert res2.empirical_mean == pytest.approx(1.0 / 3.0, abs=5 * res2.std_error)


def test_lemma1_exact_mean_matches_monte_carlo_everywhere():
    # the closed form holds for arbitrary triples, aligned or not
    rng = np.random.default_rng(7)
    for d in (1, 2, 4, 8, 16):
        g = rng.normal(size=d)
        h1 = rng.normal(size=d)
        h2 = rng.normal(size=d)
        res = lemma1_check(g, h1, h2, 100_000, rng)
        assert res.empirical_mean == pytest.approx(res.exact_mean, abs=5 * res.std_error)


def test_lemma1_bound_holds_in_aligned_regime():
    from guidedbo.cli import sample_aligned_case

    rng = np.random.default_rng(8)
    for d in (1, 2, 4, 8, 16):
        for _ in range(4):
            g, h1, h2 = sample_aligned_case(d, rng)
            res = lemma1_check(g, h1, h2, 50_000, rng)
            assert res.empirical_mean >= res.bound - 4 * res.std_error
            # analytically exact in this regime, not just within noise
            assert res.exact_mean >= res.bound - 1e-12


def test_lemma1_rejects_zero_g_and_small_samples():
    rng = np.random.default_rng(9)
    with pytest.raises(ValueError):
        lemma1_check(np.zeros(3), np.ones(3), np.ones(3), 20_000, rng)
    with pytest.raises(ValueError):
        lemma1_check(np.ones(3), np.ones(3), np.ones(3), 100, rng)


def test_update_particle_rejects_dimension_mismatch():
    X = np.zeros((2, 3))
    swarm = _swarm_from(X, np.zeros(2), 2)
    with pytest.raises(ValueError):
        update_particle(swarm, 0, np.zeros(4), 1.0)
