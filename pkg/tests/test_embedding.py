import io

import numpy as np
import pytest

from guidedbo.embedding import (
    Embedding,
    expand,
    identity_embedding,
    lift_point,
    new_embedding,
    project_up,
    read_embedding,
    success_probability,
    success_probability_oracle,
    write_embedding,
)


def test_square_embedding_is_signed_permutation():
    rng = np.random.default_rng(0)
    emb = new_embedding(5, 5, rng)
    assert sorted(emb.targets.tolist()) == list(range(5))


def test_single_bin_takes_everything():
    rng = np.random.default_rng(1)
    emb = new_embedding(3, 1, rng)
    assert np.all(emb.targets == 0)
    assert set(emb.signs.tolist()) <= {-1, 1}


def test_construction_never_leaves_empty_bins():
    rng = np.random.default_rng(2)
    for _ in range(1000):
        emb = new_embedding(100, 10, rng)
        counts = np.bincount(emb.targets, minlength=10)
        assert np.all(counts >= 1)
        assert counts.sum() == 100


def test_invalid_dimensions_rejected():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        new_embedding(3, 4, rng)
    with pytest.raises(ValueError):
        new_embedding(3, 0, rng)


def test_project_up_small_example():
    emb = Embedding(3, 2, np.array([0, 1, 0]), np.array([1, 1, -1]))
    out = project_up(emb, np.array([0.5, -1.0]))
    assert np.array_equal(out, [0.5, -1.0, -0.5])


def test_project_up_zero_and_linearity():
    rng = np.random.default_rng(3)
    emb = new_embedding(30, 7, rng)
    assert np.array_equal(project_up(emb, np.zeros(7)), np.zeros(30))
    for _ in range(20):
        x, y = rng.uniform(-0.5, 0.5, (2, 7))
        lhs = project_up(emb, x + y)
        rhs = project_up(emb, x) + project_up(emb, y)
        assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_project_up_identity_is_permutation():
    emb = identity_embedding(6)
    x = np.linspace(-1, 1, 6)
    assert np.array_equal(project_up(emb, x), x)


def test_expand_even_split_counts():
    rng = np.random.default_rng(4)
    emb = Embedding(9, 3, np.array([0, 0, 0, 1, 1, 1, 2, 2, 2]), np.ones(9, dtype=int))
    new_emb, emap = expand(emb, 3, rng)
    assert new_emb.target_dim == 9
    assert np.all(np.bincount(new_emb.targets, minlength=9) == 1)
    assert emap.new_target_dim == 9
    assert all(len(g) == 3 for g in emap.children)


def test_expand_singleton_bin_stays_whole():
    rng = np.random.default_rng(5)
    emb = Embedding(4, 3, np.array([0, 0, 1, 2]), np.ones(4, dtype=int))
    new_emb, emap = expand(emb, 3, rng)
    assert len(emap.children[1]) == 1
    assert len(emap.children[2]) == 1
    assert new_emb.target_dim == 4


def test_expand_capped_at_input_dim():
    rng = np.random.default_rng(6)
    emb = Embedding(4, 2, np.array([0, 0, 1, 1]), np.ones(4, dtype=int))
    new_emb, _ = expand(emb, 3, rng)
    assert new_emb.target_dim == 4


def test_expand_conserves_members_and_signs():
    rng = np.random.default_rng(7)
    for _ in range(200):
        d = int(rng.integers(3, 60))
        d_t = int(rng.integers(1, d))
        emb = new_embedding(d, d_t, rng)
        new_emb, emap = expand(emb, 3, rng)
        assert np.array_equal(new_emb.signs, emb.signs)
        assert np.all(np.bincount(new_emb.targets, minlength=new_emb.target_dim) >= 1)
        assert new_emb.target_dim <= d
        # each input dim lands in a child of its old bin
        for i in range(d):
            assert new_emb.targets[i] in emap.children[emb.targets[i]]


def test_lift_point_coordinate_copy():
    rng = np.random.default_rng(8)
    emb = Embedding(3, 2, np.array([0, 0, 1]), np.ones(3, dtype=int))
    new_emb, emap = expand(emb, 3, rng)
    lifted = lift_point(emap, np.array([0.3, -0.7]))
    for parent, group in enumerate(emap.children):
        for child in group:
            assert lifted[child] == [0.3, -0.7][parent]
    assert np.array_equal(lift_point(emap, np.zeros(2)), np.zeros(new_emb.target_dim))


def test_lift_preserves_projection_exactly():
    rng = np.random.default_rng(9)
    for _ in range(100):
        d = int(rng.integers(2, 80))
        d_t = int(rng.integers(1, d))
        emb = new_embedding(d, d_t, rng)
        new_emb, emap = expand(emb, 3, rng)
        x = rng.uniform(-1, 1, d_t)
        a = project_up(new_emb, lift_point(emap, x))
        b = project_up(emb, x)
        assert np.array_equal(a, b)


def test_success_probability_trivial_values():
    assert success_probability(17, 17, 4) == 1.0
    assert success_probability(9, 4, 0) == 1.0
    assert success_probability(4, 2, 2) == pytest.approx(2.0 / 3.0, abs=1e-15)


def test_success_probability_oracle_examples():
    assert success_probability_oracle(2, 2, 2) == 1.0
    assert success_probability_oracle(4, 2, 1) == 1.0
    assert success_probability_oracle(4, 2, 2) == pytest.approx(2.0 / 3.0, abs=1e-15)


def test_success_probability_matches_oracle_grid():
    for d in range(1, 9):
        for d_t in range(1, d + 1):
            for d_e in range(0, min(3, d) + 1):
                closed = success_probability(d, d_t, d_e)
                exact = success_probability_oracle(d, d_t, d_e)
                assert abs(closed - exact) <= 1e-12, (d, d_t, d_e)


def test_success_probability_in_unit_interval():
    rng = np.random.default_rng(10)
    for _ in range(300):
        d = int(rng.integers(1, 2000))
        d_t = int(rng.integers(1, d + 1))
        d_e = int(rng.integers(0, min(d, 12) + 1))
        p = success_probability(d, d_t, d_e)
        assert 0.0 <= p <= 1.0
        if d_t == d:
            assert p == 1.0


def test_oracle_guards_large_inputs():
    with pytest.raises(ValueError):
        success_probability_oracle(13, 4, 2)


def test_serialization_roundtrip():
    rng = np.random.default_rng(12)
    emb = new_embedding(40, 9, rng)
    buf = io.StringIO()
    write_embedding(emb, buf)
    back = read_embedding(buf.getvalue().splitlines())
    assert back.input_dim == emb.input_dim
    assert back.target_dim == emb.target_dim
    assert np.array_equal(back.targets, emb.targets)
    assert np.array_equal(back.signs, emb.signs)


def test_expand_rejects_full_dimension():
    rng = np.random.default_rng(14)
    with pytest.raises(ValueError):
        expand(identity_embedding(5), 3, rng)


def test_lift_point_rejects_dimension_mismatch():
    rng = np.random.default_rng(15)
    emb = new_embedding(8, 3, rng)
    _, emap = expand(emb, 3, rng)
    with pytest.raises(ValueError):
        lift_point(emap, np.zeros(emap.old_target_dim + 1))


def test_project_up_rejects_dimension_mismatch():
    rng = np.random.default_rng(16)
    emb = new_embedding(8, 3, rng)
    with pytest.raises(ValueError):
        project_up(emb, np.zeros(4))


def test_success_probability_rejects_invalid_ranges():
    with pytest.raises(ValueError):
        success_probability(4, 5, 1)
    with pytest.raises(ValueError):
        success_probability(4, 0, 1)
    with pytest.raises(ValueError):
        success_probability(4, 2, 5)
    with pytest.raises(ValueError):
        success_probability_oracle(4, 2, -1)
