import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from streamedit.autodiff import Tensor
from streamedit.flow import (
    TEACHER_CONFIG,
    LogitNormalTimeSampler,
    NFECounter,
    SamplerConfig,
    cfg_velocity,
    euler_sample,
    interpolate,
    logit,
    make_flow_sample,
    rf_loss,
    sample_time,
)


def test_interpolate_endpoints():
    rng = np.random.default_rng(0)
    x0, x1 = rng.standard_normal((2, 3)), rng.standard_normal((2, 3))
    np.testing.assert_array_equal(interpolate(x0, x1, 0.0), x0)
    np.testing.assert_array_equal(interpolate(x0, x1, 1.0), x1)


def test_interpolate_midpoint():
    assert interpolate(np.zeros(1), np.full(1, 2.0), 0.5)[0] == 1.0


def test_interpolate_random_triple_matches_formula():
    rng = np.random.default_rng(1)
    x0, x1 = rng.standard_normal((4, 5)), rng.standard_normal((4, 5))
    t = rng.random(4)
    expected = np.array([[(1 - t[i]) * x0[i, j] + t[i] * x1[i, j] for j in range(5)] for i in range(4)])
    np.testing.assert_allclose(interpolate(x0, x1, t), expected, rtol=1e-14)


def test_interpolate_shape_mismatch():
    with pytest.raises(ValueError):
        interpolate(np.zeros(3), np.zeros(4), 0.5)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), t=st.floats(0.05, 0.95))
def test_path_is_affine_with_constant_velocity(seed, t):
    rng = np.random.default_rng(seed)
    x0, x1 = rng.standard_normal(6), rng.standard_normal(6)
    h = 1e-3
    fd = (interpolate(x0, x1, t + h) - interpolate(x0, x1, t - h)) / (2 * h)
    np.testing.assert_allclose(fd, x1 - x0, atol=1e-9)


def test_flow_sample_invariants():
    rng = np.random.default_rng(2)
    s = make_flow_sample(rng.standard_normal((8, 3)), rng)
    np.testing.assert_allclose(s.xt, (1 - s.t[:, None]) * s.x0 + s.t[:, None] * s.x1)
    np.testing.assert_array_equal(s.v_target, s.x1 - s.x0)


# ------------------------------------------------------------------ rf_loss


def test_rf_loss_zero_for_oracle_model():
    rng = np.random.default_rng(3)
    x1 = rng.standard_normal((16, 4))
    x0 = rng.standard_normal((16, 4))
    oracle = lambda xt, t, c: Tensor(x1 - x0)  # noqa: E731
    assert float(rf_loss(oracle, x1, x0=x0, t=rng.random(16)).data) == 0.0


def test_rf_loss_zero_model_with_zero_noise():
    x1 = np.array([[1.0, -2.0, 3.0]])
    zero = lambda xt, t, c: Tensor(np.zeros_like(xt.data))  # noqa: E731
    loss = rf_loss(zero, x1, x0=np.zeros_like(x1), t=0.3)
    assert float(loss.data) == pytest.approx(14.0)


def test_rf_loss_monte_carlo_matches_gaussian_moment():
    # E||c - (x1 - x0)||^2 = ||c - x1||^2 + d  for x0 ~ N(0, I) and fixed x1
    rng = np.random.default_rng(4)
    d = 3
    c = np.array([0.5, -1.0, 2.0])
    x1 = np.tile([1.0, 0.0, -1.0], (10_000, 1))
    const = lambda xt, t, cond: Tensor(np.broadcast_to(c, xt.shape).copy())  # noqa: E731
    loss = float(rf_loss(const, x1, rng=rng).data)
    expected = np.sum((c - x1[0]) ** 2) + d
    assert abs(loss - expected) / expected < 0.02


def test_rf_loss_rejects_bad_output_shape():
    bad = lambda xt, t, c: Tensor(np.zeros((2, 2)))  # noqa: E731
    with pytest.raises(ValueError, match="shape"):
        rf_loss(bad, np.zeros((3, 2)), x0=np.zeros((3, 2)), t=0.5)


def test_rf_loss_is_differentiable_and_nonnegative():
    rng = np.random.default_rng(5)
    w = Tensor(rng.standard_normal((2, 2)), requires_grad=True)
    model = lambda xt, t, c: xt @ w  # noqa: E731
    loss = rf_loss(model, rng.standard_normal((8, 2)), rng=rng)
    loss.backward()
    assert float(loss.data) >= 0 and w.grad.shape == (2, 2)


# ------------------------------------------------------------------ time sampler


def test_logit_normal_median():
    t = sample_time(LogitNormalTimeSampler(0.0, 1.0), np.random.default_rng(6), size=100_000)
    assert abs(np.median(t) - 0.5) < 0.01


def test_logit_normal_strictly_inside_unit_interval():
    t = LogitNormalTimeSampler(0.0, 8.0).sample(np.random.default_rng(7), size=100_000)
    assert np.all(t > 0) and np.all(t < 1)


@pytest.mark.parametrize("mean,std", [(0.5, 1.0), (-1.0, 0.7)])
def test_logit_normal_moments(mean, std):
    z = logit(LogitNormalTimeSampler(mean, std).sample(np.random.default_rng(8), size=100_000))
    assert abs(z.mean() - mean) / abs(mean) < 0.02
    assert abs(z.std() - std) / std < 0.02


def test_time_sampler_rejects_nonpositive_std():
    with pytest.raises(ValueError):
        LogitNormalTimeSampler(0.0, 0.0)


# ------------------------------------------------------------------ Euler sampling


def _constant_oracle(x0, x1):
    return lambda x, t, c: Tensor(x1 - x0)


@pytest.mark.parametrize("steps", [1, 40])
def test_euler_recovers_endpoint_for_constant_velocity(steps):
    with np.errstate(all="raise"):
        rng = np.random.default_rng(9)
        x0, x1 = rng.standard_normal((5, 3)), rng.standard_normal((5, 3))
        out = euler_sample(_constant_oracle(x0, x1), x0, SamplerConfig(steps=steps))
    np.testing.assert_allclose(out, x1, atol=1e-13)


def test_euler_nfe_accounting():
    x0 = np.zeros((2, 2))
    model = NFECounter(lambda x, t, c: Tensor(np.zeros_like(x.data)))
    euler_sample(model, x0, SamplerConfig(steps=7))
    assert model.count == 7
    model.reset()
    euler_sample(model, x0, SamplerConfig(steps=7, guidance_scale=3.0), condition=1, null_condition=None)
    assert model.count == 14


def test_teacher_profile_is_80_nfe():
    model = NFECounter(lambda x, t, c: Tensor(np.zeros_like(x.data)))
    euler_sample(model, np.zeros((1, 1)), TEACHER_CONFIG, condition=1)
    assert model.count == TEACHER_CONFIG.nfe == 80


def test_euler_is_deterministic_given_seed():
    model = lambda x, t, c: Tensor(np.sin(x.data) * t[:, None])  # noqa: E731

    def run():
        x0 = np.random.default_rng(10).standard_normal((4, 2))
        return euler_sample(model, x0, SamplerConfig(steps=10))

    assert np.array_equal(run(), run())


@pytest.mark.parametrize(
    "kwargs",
    [{"steps": 0}, {"steps": 2, "schedule": (0.0, 0.7, 0.5)}, {"steps": 2, "schedule": (0.1, 0.5, 1.0)}, {"steps": 1, "guidance_scale": -1}],
)
def test_sampler_config_validation(kwargs):
    with pytest.raises(ValueError):
        SamplerConfig(**kwargs)


def test_custom_schedule_accepted():
    cfg = SamplerConfig(steps=3, schedule=(0.0, 0.2, 0.7, 1.0))
    assert cfg.schedule[1] == 0.2


# ------------------------------------------------------------------ guidance


def test_cfg_scale_one_and_zero():
    vc, vu = np.array([1.0, 2.0]), np.array([-1.0, 0.5])
    np.testing.assert_array_equal(cfg_velocity(vc, vu, 1.0), vc)
    np.testing.assert_array_equal(cfg_velocity(vc, vu, 0.0), vu)


def test_cfg_linear_extrapolation():
    assert cfg_velocity(np.ones(1), np.zeros(1), 2.0)[0] == 2.0


def test_cfg_shape_mismatch():
    with pytest.raises(ValueError):
        cfg_velocity(np.ones(2), np.ones(3), 2.0)
