"""Learners and losses with a uniform score / loss / weighted-step contract.

Three model families share one update path: a scalar (or per-class vector)
gradient factor ``g`` is computed from the score, and every parameter update
is ``-eta * alpha * g`` applied against the input features.  The bias is
treated as an implicit always-1 feature throughout, so step norms take the
uniform form ``eta^2 * |g|^2 * (||x||^2 + 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import ConfigError


@dataclass(slots=True)
class LabeledInstance:
    """One stream element: a dense feature vector and an integer class label.

    Binary streams use +1 for the minority/positive class and -1 for the
    majority/negative class; multiclass streams use 0..C-1.
    """

    features: np.ndarray
    label: int


class LossKind(Enum):
    PERCEPTRON = "perceptron"
    HINGE = "hinge"
    SOFTMAX = "softmax"


def label_from_score(score):
    """Predicted label for a score: sign for binary (0 maps to -1, the
    majority), argmax with lowest-id tie break for score vectors."""
    if np.ndim(score) == 0:
        return 1 if score > 0.0 else -1
    return int(np.argmax(score))


class LinearModel:
    """Affine binary scorer: score(x) = w.x + b."""

    def __init__(self, d, w=None, b=0.0):
        self.d = d
        self.w = np.zeros(d) if w is None else np.asarray(w, dtype=float).copy()
        self.b = float(b)

    def score(self, x):
        return float(self.w @ x) + self.b

    def step(self, x, scale_g):
        # parameter delta for gradient factor g at combined scale eta*alpha
        self.w -= scale_g * x
        self.b -= scale_g

    def grad_sq(self, x, g):
        return g * g * (float(x @ x) + 1.0)

    def copy(self):
        return LinearModel(self.d, self.w, self.b)


class SoftmaxModel:
    """Linear multiclass scorer: one affine score per class."""

    def __init__(self, n_classes, d, W=None, b=None):
        self.n_classes = n_classes
        self.d = d
        self.W = np.zeros((n_classes, d)) if W is None else np.asarray(W, dtype=float).copy()
        self.b = np.zeros(n_classes) if b is None else np.asarray(b, dtype=float).copy()

    def score(self, x):
        return self.W @ x + self.b

    def step(self, x, scale_g):
        # scale_g is the per-class gradient vector times eta*alpha
        self.W -= np.outer(scale_g, x)
        self.b -= scale_g

    def grad_sq(self, x, g):
        return float(g @ g) * (float(x @ x) + 1.0)

    def copy(self):
        return SoftmaxModel(self.n_classes, self.d, self.W, self.b)


class KernelModel:
    """RBF-kernel scorer over a growing support set.

    score(x) = sum_j coef_j * exp(-gamma * ||s_j - x||^2) + bias.  The support
    set is unbounded: every nonzero update appends one instance.
    """

    def __init__(self, d, gamma=None):
        self.d = d
        self.gamma = float(gamma) if gamma is not None else 1.0 / d
        if self.gamma <= 0.0:
            raise ValueError("gamma must be positive")
        self.bias = 0.0
        self._cap = 64
        self._n = 0
        self._X = np.empty((self._cap, d))
        self._coef = np.empty(self._cap)

    @property
    def support_size(self):
        return self._n

    def support(self):
        return [(self._X[j].copy(), float(self._coef[j])) for j in range(self._n)]

    def kernel(self, a, b):
        diff = a - b
        return math.exp(-self.gamma * float(diff @ diff))

    def score(self, x):
        if self._n == 0:
            return self.bias
        diffs = self._X[: self._n] - x
        k = np.exp(-self.gamma * np.einsum("ij,ij->i", diffs, diffs))
        return float(self._coef[: self._n] @ k) + self.bias

    def step(self, x, scale_g):
        if scale_g == 0.0:
            return
        if self._n == self._cap:
            self._cap *= 2
            self._X = np.vstack([self._X, np.empty_like(self._X)])
            self._coef = np.concatenate([self._coef, np.empty_like(self._coef)])
        self._X[self._n] = x
        self._coef[self._n] = -scale_g
        self._n += 1
        self.bias -= scale_g

    def grad_sq(self, x, g):
        # functional norm of the step; k(x,x)=1 for the RBF kernel
        return g * g * (1.0 + 1.0)

    def copy(self):
        m = KernelModel(self.d, self.gamma)
        m.bias = self.bias
        m._cap = self._cap
        m._n = self._n
        m._X = self._X.copy()
        m._coef = self._coef.copy()
        return m


def predict(model, features):
    """Score an instance. Raises ValueError on a feature-dimension mismatch."""
    x = np.asarray(features, dtype=float)
    if x.shape != (model.d,):
        raise ValueError(f"feature dimension {x.shape} does not match model d={model.d}")
    return model.score(x)


def loss_and_gradient_factor(loss_kind, score, label):
    """Loss value and the gradient factor g at the current score.

    For the binary losses g is the scalar with grad_w = g*x and grad_b = g;
    for softmax it is the probability-minus-onehot vector.
    """
    if loss_kind is LossKind.HINGE:
        margin = 1.0 - label * score
        if margin > 0.0:
            return margin, float(-label)
        return 0.0, 0.0
    if loss_kind is LossKind.PERCEPTRON:
        viol = -label * score
        if viol > 0.0:
            return viol, float(-label)
        return 0.0, 0.0
    if loss_kind is LossKind.SOFTMAX:
        z = np.asarray(score, dtype=float)
        z = z - z.max()
        expz = np.exp(z)
        p = expz / expz.sum()
        loss = -math.log(max(p[label], 1e-300))
        g = p.copy()
        g[label] -= 1.0
        return loss, g
    raise ConfigError(f"unknown loss kind: {loss_kind!r}")


def gradient_norm_sq(model, instance, loss_kind, eta):
    """Squared norm of the eta-scaled gradient step at the current point."""
    if eta <= 0.0:
        raise ValueError("eta must be positive")
    score = predict(model, instance.features)
    _, g = loss_and_gradient_factor(loss_kind, score, instance.label)
    return eta * eta * model.grad_sq(instance.features, g)


def apply_step(model, instance, eta, alpha, loss_kind):
    """One weighted gradient step in place; no-op when the loss is zero.

    With alpha=1 this is the plain online-gradient-descent update; the
    harmonized and cost-sensitive variants only change alpha.
    """
    if eta <= 0.0:
        raise ValueError("eta must be positive")
    if alpha < 0.0:
        raise ValueError("alpha must be nonnegative")
    score = predict(model, instance.features)
    loss, g = loss_and_gradient_factor(loss_kind, score, instance.label)
    if loss > 0.0:
        model.step(instance.features, eta * alpha * g)
    return model
