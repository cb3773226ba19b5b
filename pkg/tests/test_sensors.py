import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ppf_attitude.errors import DegenerateVector
from ppf_attitude.sensors import (
    GyroModel,
    TruthState,
    VectorSensorModel,
    constant_profile,
    gyro_measure,
    make_rng,
    omega_profile,
    propagate_truth,
    truth_step,
    vector_measure,
)
from ppf_attitude.so3 import dist_identity, exp_so3, is_rotation

from conftest import rotations

BENCH_GYRO = GyroModel((0.1, -0.1, 0.1), 0.3)


def test_profile_examples():
    assert np.allclose(omega_profile(0.0), [0, np.sqrt(0.5), 0.4], atol=1e-15)
    assert omega_profile(np.pi / 0.8)[0] == pytest.approx(1.0)
    t = np.linspace(0, 100, 10_001)
    assert np.all(np.abs(omega_profile(t)) <= [1, 1, 0.4])
    assert omega_profile(t).shape == (10_001, 3)


def test_truth_step_examples():
    s = TruthState(0.0, np.eye(3), np.zeros(3))
    assert np.array_equal(truth_step(s, 0.1, constant_profile([0, 0, 0])).R, np.eye(3))
    s = TruthState(0.0, np.eye(3), np.array([0, 0, np.pi / 2]))
    prof = constant_profile([0, 0, np.pi / 2])
    for _ in range(100):
        s = truth_step(s, 0.01, prof)
    assert s.t == pytest.approx(1.0)
    assert np.allclose(s.R, [[0, -1, 0], [1, 0, 0], [0, 0, 1]], atol=1e-12)
    with pytest.raises(ValueError):
        truth_step(s, 0.0)


def test_propagate_matches_truth_step():
    _, R, omega = propagate_truth(np.eye(3), 0.01, 50, project_every=0)
    s = TruthState(0.0, np.eye(3), omega_profile(np.asarray(0.0)))
    for _ in range(50):
        s = truth_step(s, 0.01)
    assert np.allclose(R[-1], s.R, atol=1e-14)
    assert np.allclose(omega[-1], s.omega)


def test_truth_converges_at_first_order():
    # piecewise-constant rate: error against a fine reference halves with dt
    def final(dt):
        return propagate_truth(np.eye(3), dt, int(round(1.0 / dt)))[1][-1]

    ref = final(1e-5)
    errs = [np.linalg.norm(final(dt) - ref) for dt in (4e-3, 2e-3, 1e-3)]
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(orders > 0.9)


def test_truth_stays_on_so3_long_run():
    _, R, _ = propagate_truth(np.eye(3), 1e-3, 200_000)
    assert is_rotation(R[-1])
    assert is_rotation(R[::1000])


def test_gyro_noise_free():
    w = omega_profile(np.linspace(0, 1, 11))
    out = gyro_measure(w, GyroModel(), 1e-3, make_rng(0))
    assert np.array_equal(out, w)


def test_gyro_statistics():
    n = 1_000_000
    out = gyro_measure(np.zeros((n, 3)), BENCH_GYRO, 1e-3, make_rng(11))
    mean, std = out.mean(axis=0), out.std(axis=0)
    assert np.all(np.abs(mean - BENCH_GYRO.bias) < 3 * 0.3 / np.sqrt(n))
    assert np.all(np.abs(std / 0.3 - 1) < 0.01)


def test_gyro_euler_maruyama_scaling():
    g = GyroModel(noise_std=0.3, mode="euler-maruyama")
    assert np.allclose(g.sample_std(0.01), 3.0)
    with pytest.raises(ValueError):
        GyroModel(mode="pink")
    with pytest.raises(ValueError):
        GyroModel(noise_std=-1)


def test_gyro_per_axis_std():
    g = GyroModel(noise_std=(0.1, 0.2, 0.3))
    out = gyro_measure(np.zeros((200_000, 3)), g, 1e-3, make_rng(3))
    assert np.allclose(out.std(axis=0), [0.1, 0.2, 0.3], rtol=0.01)


@given(rotations())
def test_vector_noise_free(R):
    m = VectorSensorModel(ref=(1.0, -1.0, 1.0))
    ref, meas = vector_measure(R, m, make_rng(0))
    assert np.allclose(ref, np.array([1, -1, 1]) / np.sqrt(3))
    assert np.allclose(meas, R.T @ ref, atol=1e-15)


@given(rotations(), st.integers(0, 2**32))
def test_vector_output_is_unit(R, seed):
    m = VectorSensorModel(ref=(0, 0, 1), bias=(0.0, 0.0, 0.1), noise_std=0.12)
    _, meas = vector_measure(R, m, make_rng(seed))
    assert np.linalg.norm(meas) == pytest.approx(1.0, abs=1e-15)


def test_vector_noise_added_before_normalization():
    # with a large bias along the true vector the direction is unchanged
    m = VectorSensorModel(ref=(0, 0, 1), bias=(0, 0, 5.0))
    _, meas = vector_measure(np.eye(3), m, make_rng(0))
    assert np.allclose(meas, [0, 0, 1])
    m = VectorSensorModel(ref=(0, 0, 1), bias=(1.0, 0, 0))
    _, meas = vector_measure(np.eye(3), m, make_rng(0))
    assert np.allclose(meas, np.array([1, 0, 1]) / np.sqrt(2))


def test_vector_degenerate():
    m = VectorSensorModel(ref=(0, 0, 1), bias=(0, 0, -1.0))
    with pytest.raises(DegenerateVector):
        vector_measure(np.eye(3), m, make_rng(0))


def test_streams_are_deterministic():
    def draw(seed):
        rng = make_rng(seed)
        w = gyro_measure(np.zeros((100, 3)), BENCH_GYRO, 1e-3, rng)
        _, v = vector_measure(exp_so3(np.ones((100, 3)), 0.1), VectorSensorModel((1, 0, 0), noise_std=0.1), rng)
        return np.concatenate([w.ravel(), v.ravel()])

    assert np.array_equal(draw(42), draw(42))
    assert not np.array_equal(draw(42), draw(43))


def test_batched_vector_measure_matches_loop():
    R = exp_so3(np.random.default_rng(0).standard_normal((5, 3)), 1.0)
    m = VectorSensorModel((1, -1, 1), (0.1, 0, 0), 0.2)
    _, batch = vector_measure(R, m, make_rng(9))
    rng = make_rng(9)
    loop = np.stack([vector_measure(r, m, rng)[1] for r in R])
    assert np.allclose(batch, loop, atol=0)
    assert np.all(dist_identity(R) >= 0)
