import numpy as np
import pytest

from streamedit.toyflow import ToyFlowModel

MU = np.array([1.0, -0.5])
COV = np.array([[1.0, 0.6], [0.6, 0.8]])


@pytest.fixture(scope="module")
def gaussian_model():
    X = np.random.default_rng(0).multivariate_normal(MU, COV, size=20_000)
    return ToyFlowModel(n_iter=2000, random_state=0).fit(X)


def test_loss_decreases(gaussian_model):
    curve = np.asarray(gaussian_model.loss_curve_)
    assert curve[-200:].mean() < curve[:50].mean()


def test_recovers_gaussian_moments(gaussian_model):
    # 100 Euler steps: 40 steps alone shrink the covariance by ~0.06 even with the exact field
    s = gaussian_model.sample(10_000, steps=100, random_state=1)
    assert np.abs(s.mean(axis=0) - MU).max() < 0.05
    assert np.abs(np.cov(s.T) - COV).max() < 0.1


def test_estimator_params_roundtrip():
    m = ToyFlowModel(hidden=32)
    assert m.get_params()["hidden"] == 32
    assert m.set_params(n_iter=5).n_iter == 5


def test_conditional_sampling_separates_classes():
    rng = np.random.default_rng(2)
    X = np.concatenate([rng.normal(-2, 0.3, (2000, 1)), rng.normal(2, 0.3, (2000, 1))])
    y = np.repeat([0, 1], 2000)
    m = ToyFlowModel(hidden=32, n_iter=600, random_state=0).fit(X, y)
    a = m.sample(500, y=0, random_state=3)
    b = m.sample(500, y=1, random_state=3)
    assert a.mean() < -1 and b.mean() > 1
