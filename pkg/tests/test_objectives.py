import numpy as np
import pytest

from guidedbo.objectives import EvalRecord, evaluate, make_synthetic, to_native, to_unit


def test_ackley_bounds_and_effective_dims():
    spec = make_synthetic("ackley", 100)
    assert spec.dim == 100
    assert np.all(spec.lower == -32.768)
    assert np.all(spec.upper == 32.768)
    assert spec.effective_dims == tuple(range(100))


def test_branin_aug_bounds_and_effective_dims():
    spec = make_synthetic("branin_aug", 500)
    assert spec.effective_dims == (0, 1)
    assert spec.lower[0] == -5.0 and spec.upper[0] == 10.0
    assert spec.lower[1] == 0.0 and spec.upper[1] == 15.0
    assert np.all(spec.lower[2:] == 0.0) and np.all(spec.upper[2:] == 1.0)
    assert spec.dim - len(spec.effective_dims) == 498


def test_hartmann_no_dummy_degenerate():
    spec = make_synthetic("hartmann6_aug", 6)
    assert spec.effective_dims == tuple(range(6))
    assert np.all(spec.lower == 0.0) and np.all(spec.upper == 1.0)


@pytest.mark.parametrize(
    "name,dim",
    [("nonsense", 5), ("branin_aug", 1), ("hartmann6_aug", 5)],
)
def test_make_synthetic_rejects_bad_requests(name, dim):
    with pytest.raises(ValueError):
        make_synthetic(name, dim)


def test_ackley_minimum_at_origin():
    spec = make_synthetic("ackley", 7)
    assert abs(evaluate(spec, np.zeros(7))) < 1e-12


def test_branin_value_at_known_minimizer():
    spec = make_synthetic("branin_aug", 10)
    x = np.concatenate(([np.pi, 2.275], np.full(8, 0.3)))
    assert evaluate(spec, x) == pytest.approx(0.397887, abs=1e-5)


def test_hartmann_value_at_published_minimizer():
    spec = make_synthetic("hartmann6_aug", 9)
    x_star = [0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573]
    x = np.concatenate((x_star, [0.5, 0.5, 0.5]))
    assert evaluate(spec, x) == pytest.approx(-3.32237, abs=1e-4)


def test_evaluate_rejects_out_of_bounds_and_bad_shape():
    spec = make_synthetic("hartmann6_aug", 6)
    with pytest.raises(ValueError):
        evaluate(spec, np.full(6, 1.5))
    with pytest.raises(ValueError):
        evaluate(spec, np.full(7, 0.5))


def test_dummy_dims_are_bit_identical():
    rng = np.random.default_rng(11)
    for name, dim in [("branin_aug", 12), ("hartmann6_aug", 10)]:
        spec = make_synthetic(name, dim)
        k = len(spec.effective_dims)
        for _ in range(50):
            eff = spec.lower[:k] + rng.random(k) * (spec.upper[:k] - spec.lower[:k])
            a = np.concatenate((eff, rng.random(dim - k)))
            b = np.concatenate((eff, rng.random(dim - k)))
            assert evaluate(spec, a) == evaluate(spec, b)


def test_to_native_endpoints_and_midpoint():
    ackley = make_synthetic("ackley", 4)
    assert np.all(to_native(ackley, -np.ones(4)) == -32.768)
    hart = make_synthetic("hartmann6_aug", 6)
    assert np.all(to_native(hart, np.zeros(6)) == 0.5)
    branin = make_synthetic("branin_aug", 2)
    assert np.allclose(to_native(branin, np.array([1.0, -1.0])), [10.0, 0.0])


def test_to_native_rejects_outside_unit_box():
    spec = make_synthetic("ackley", 3)
    with pytest.raises(ValueError):
        to_native(spec, np.array([0.0, 1.0001, 0.0]))


def test_unit_roundtrip_identity():
    rng = np.random.default_rng(5)
    spec = make_synthetic("branin_aug", 20)
    for _ in range(100):
        x = rng.uniform(-1.0, 1.0, 20)
        back = to_unit(spec, to_native(spec, x))
        assert np.max(np.abs(back - x)) < 1e-12


def test_noiseless_evaluate_is_pure():
    spec = make_synthetic("ackley", 5)
    x = np.full(5, 3.21)
    assert evaluate(spec, x) == evaluate(spec, x)


def test_eval_record_counts_from_one():
    rec = EvalRecord(x_native=[0.5, 0.5], y=1.25, eval_index=1)
    assert rec.x_native.dtype == float
    with pytest.raises(ValueError):
        EvalRecord(x_native=[0.5], y=0.0, eval_index=0)


def test_noise_is_deterministic_given_rng_state():
    spec = make_synthetic("ackley", 5, noise_sd=0.5)
    x = np.full(5, 1.0)
    a = evaluate(spec, x, np.random.default_rng(42))
    b = evaluate(spec, x, np.random.default_rng(42))
    assert a == b
    assert a != evaluate(spec, x, np.random.default_rng(43))
    with pytest.raises(ValueError):
        evaluate(spec, x)  # noisy evaluation without an rng
