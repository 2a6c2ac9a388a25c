"""Small vector-valued flow models, exposed through a scikit-learn style estimator."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_array, check_is_fitted

from .autodiff import MLP, Adam, Module, Tensor, no_grad
from .autodiff import functional as F
from .flow import LogitNormalTimeSampler, SamplerConfig, euler_sample, rf_loss

N_TIME_FREQS = 3


def time_features(t, batch, dtype):
    t = np.broadcast_to(np.asarray(t, dtype=np.float64), (batch,))[:, None]
    k = np.arange(1, N_TIME_FREQS + 1)[None, :] * np.pi
    return np.concatenate([t, np.sin(k * t), np.cos(k * t)], axis=1).astype(dtype)


class VelocityMLP(Module):
    """``v(x, t, label)`` for flat vectors; label ``None`` (or -1) means unconditional."""

    def __init__(self, dim, hidden=64, n_layers=3, n_classes=0, rng=None):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.dim = dim
        self.n_classes = n_classes
        in_dim = dim + 1 + 2 * N_TIME_FREQS + (n_classes + 1 if n_classes else 0)
        self.net = MLP([in_dim] + [hidden] * n_layers + [dim], rng)

    def _label_features(self, cond, batch, dtype):
        onehot = np.zeros((batch, self.n_classes + 1), dtype=dtype)
        if cond is None:
            onehot[:, self.n_classes] = 1.0
            return onehot
        labels = np.broadcast_to(np.asarray(cond), (batch,))
        idx = np.where(labels < 0, self.n_classes, labels)
        onehot[np.arange(batch), idx] = 1.0
        return onehot

    def forward(self, x, t, cond=None):
        x = x if isinstance(x, Tensor) else Tensor(np.asarray(x))
        batch = x.shape[0]
        parts = [x, Tensor(time_features(t, batch, x.dtype))]
        if self.n_classes:
            parts.append(Tensor(self._label_features(cond, batch, x.dtype)))
        return self.net(F.concat(parts, axis=1))


class ToyFlowModel(BaseEstimator):
    """Rectified-flow generative model for low-dimensional data.

    Parameters
    ----------
    hidden, n_layers : int
        Width and depth of the velocity MLP.
    n_iter : int
        Optimizer steps.
    batch_size : int
    learning_rate : float
    time_mean, time_std : float
        Logit-normal training-time distribution.
    sample_steps : int
        Default Euler steps for :meth:`sample`.
    cond_dropout : float
        Probability of replacing a label by the null label (enables guidance).
    random_state : int, Generator or None
    """

    def __init__(
        self,
        hidden=64,
        n_layers=3,
        n_iter=2000,
        batch_size=256,
        learning_rate=2e-3,
        time_mean=0.0,
        time_std=1.0,
        sample_steps=40,
        cond_dropout=0.1,
        random_state=0,
    ):
        self.hidden = hidden
        self.n_layers = n_layers
        self.n_iter = n_iter
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.time_mean = time_mean
        self.time_std = time_std
        self.sample_steps = sample_steps
        self.cond_dropout = cond_dropout
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float32)
        rng = np.random.default_rng(check_random_state(self.random_state).randint(2**31))
        self.n_features_in_ = X.shape[1]
        if y is not None:
            self.classes_, y_idx = np.unique(np.asarray(y), return_inverse=True)
            n_classes = len(self.classes_)
        else:
            self.classes_, y_idx, n_classes = None, None, 0
        self.velocity_model_ = VelocityMLP(X.shape[1], self.hidden, self.n_layers, n_classes, rng)
        opt = Adam(self.velocity_model_.parameters(), lr=self.learning_rate)
        sampler = LogitNormalTimeSampler(self.time_mean, self.time_std)
        self.loss_curve_ = []
        for it in range(self.n_iter):
            # cosine decay to 5% of the base rate
            opt.lr = self.learning_rate * (0.05 + 0.95 * 0.5 * (1 + np.cos(np.pi * it / self.n_iter)))
            idx = rng.integers(0, X.shape[0], size=self.batch_size)
            cond = None
            if y_idx is not None:
                cond = y_idx[idx].copy()
                cond[rng.random(self.batch_size) < self.cond_dropout] = -1
            opt.zero_grad()
            loss = rf_loss(self.velocity_model_, X[idx], cond, rng, sampler, reduction="mean")
            loss.backward()
            opt.step()
            self.loss_curve_.append(float(loss.data))
        return self

    def velocity(self, x, t, cond=None):
        check_is_fitted(self, "velocity_model_")
        return self.velocity_model_(x, t, cond)

    def _encode_labels(self, y, n):
        if y is None or self.classes_ is None:
            return None
        y = np.broadcast_to(np.asarray(y), (n,))
        return np.searchsorted(self.classes_, y)

    def sample(self, n_samples, y=None, guidance_scale=1.0, steps=None, random_state=None):
        """Draw ``n_samples`` by Euler-integrating the learned velocity field."""
        check_is_fitted(self, "velocity_model_")
        rng = np.random.default_rng(check_random_state(random_state).randint(2**31))
        x0 = rng.standard_normal((n_samples, self.n_features_in_)).astype(np.float32)
        config = SamplerConfig(steps=steps or self.sample_steps, guidance_scale=guidance_scale)
        cond = self._encode_labels(y, n_samples)
        null = None if cond is None else np.full(n_samples, -1)
        with no_grad():
            return euler_sample(self.velocity_model_, x0, config, cond, null)
