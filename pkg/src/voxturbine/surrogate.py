"""Incremental MLP fitness surrogate.

A small fully connected network (10 or 15 inputs, one logistic hidden layer of
5 units, one logistic output) trained by stochastic gradient descent, one
sample at a time, on the cross-entropy of the logistic output against targets
in [0, 1]. Fitness values are normalized by ``fitness_scale`` for training,
and predictions are mapped back, so predictions always fall strictly inside
(0, fitness_scale). Squared error is still reported as telemetry via
:meth:`MLPSurrogate.loss`.

The estimator follows scikit-learn conventions: hyperparameters are stored
verbatim in ``__init__``, learned state lives in trailing-underscore
attributes, ``fit`` reinitializes, and ``partial_fit`` continues training from
the current weights, which is how a campaign retrains between generations.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

VALID_INPUT_SIZES = (10, 15)
WEIGHT_INIT_SPAN = 0.5


class MLPSurrogate(BaseEstimator, RegressorMixin):
    """One-hidden-layer logistic MLP trained by single-sample SGD.

    Parameters
    ----------
    input_size : int, 10 or 15
        Length of scaled genome vectors (15 when genomes carry z-alleles).
    hidden_size : int
        Hidden units; 5 unless experimenting.
    learning_rate : float
        SGD step size applied to the gradient of the per-sample cross-entropy
        (through the logistic output this is the classic delta rule,
        output_minus_target at the output unit).
    momentum : float
        Classical momentum coefficient; 0 gives plain SGD.
    updates_per_fit : int
        Single-sample updates performed by each fit/partial_fit call. Samples
        are visited in random order without replacement, reshuffling whenever
        the dataset is exhausted.
    fitness_scale : float
        Positive scale mapping raw fitness to the sigmoid's (0, 1) range.
    random_state : numpy Generator, int, or None
        Source for weight initialization and shuffling. Passing a Generator
        shares its stream, which is how campaigns keep one seeded stream.
    """

    def __init__(
        self,
        input_size: int = 10,
        hidden_size: int = 5,
        learning_rate: float = 0.3,
        momentum: float = 0.0,
        updates_per_fit: int = 1000,
        fitness_scale: float = 1.0,
        random_state=None,
    ) -> None:
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.updates_per_fit = updates_per_fit
        self.fitness_scale = fitness_scale
        self.random_state = random_state

    def _check_params(self) -> None:
        if self.input_size not in VALID_INPUT_SIZES:
            raise ValueError(
                f"input_size must be one of {VALID_INPUT_SIZES}, got {self.input_size}"
            )
        if self.hidden_size < 1:
            raise ValueError("hidden_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")
        if self.updates_per_fit < 1:
            raise ValueError("updates_per_fit must be >= 1")
        if self.fitness_scale <= 0:
            raise ValueError("fitness_scale must be positive")

    def _validate_data(self, X, y=None) -> tuple[np.ndarray, np.ndarray | None]:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.input_size:
            raise ValueError(f"X must have shape (n, {self.input_size})")
        if y is None:
            return X, None
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (len(X),):
            raise ValueError("y must be one value per row of X")
        if len(X) == 0:
            raise ValueError("training requires at least one sample")
        return X, y

    def _init_state(self) -> None:
        self._check_params()
        rs = self.random_state
        rng = rs if isinstance(rs, np.random.Generator) else np.random.default_rng(rs)
        self.rng_ = rng
        span = WEIGHT_INIT_SPAN
        self.w1_ = rng.uniform(-span, span, size=(self.hidden_size, self.input_size))
        self.b1_ = np.zeros(self.hidden_size)
        self.w2_ = rng.uniform(-span, span, size=self.hidden_size)
        self.b2_ = 0.0
        self._vel_w1 = np.zeros_like(self.w1_)
        self._vel_b1 = np.zeros_like(self.b1_)
        self._vel_w2 = np.zeros_like(self.w2_)
        self._vel_b2 = 0.0

    def _check_fitted(self) -> None:
        if not hasattr(self, "w1_"):
            raise NotFittedError("this MLPSurrogate instance is not fitted yet")

    def fit(self, X, y) -> "MLPSurrogate":
        """Initialize fresh weights, then run ``updates_per_fit`` updates."""
        X, y = self._validate_data(X, y)
        self._init_state()
        self._train(X, y / self.fitness_scale)
        return self

    def partial_fit(self, X, y) -> "MLPSurrogate":
        """Continue training from the current weights (retraining step)."""
        X, y = self._validate_data(X, y)
        if not hasattr(self, "w1_"):
            self._init_state()
        self._train(X, y / self.fitness_scale)
        return self

    def _train(self, X: np.ndarray, y_norm: np.ndarray, updates: int | None = None) -> None:
        remaining = self.updates_per_fit if updates is None else updates
        lr = self.learning_rate
        mom = self.momentum
        w1, b1, w2 = self.w1_, self.b1_, self.w2_
        v_w1, v_b1, v_w2 = self._vel_w1, self._vel_b1, self._vel_w2
        n = len(X)
        while remaining > 0:
            for i in self.rng_.permutation(n):
                x = X[i]
                h = expit(w1 @ x + b1)
                o = float(expit(w2 @ h + self.b2_))
                # Cross-entropy gradient through the logistic output (the
                # delta rule): the o*(1-o) factor of the squared-error chain
                # cancels, so the step stays informative even when targets sit
                # deep in the sigmoid's tails.
                delta_o = o - y_norm[i]
                delta_h = (delta_o * w2) * (h * (1.0 - h))
                v_w2 *= mom
                v_w2 -= lr * delta_o * h
                w2 += v_w2
                self._vel_b2 = mom * self._vel_b2 - lr * delta_o
                self.b2_ += self._vel_b2
                v_w1 *= mom
                v_w1 -= lr * np.outer(delta_h, x)
                w1 += v_w1
                v_b1 *= mom
                v_b1 -= lr * delta_h
                b1 += v_b1
                remaining -= 1
                if remaining == 0:
                    break

    def _forward_norm(self, X: np.ndarray) -> np.ndarray:
        hidden = expit(X @ self.w1_.T + self.b1_)
        return expit(hidden @ self.w2_ + self.b2_)

    def predict(self, X) -> np.ndarray:
        """Predicted fitness in real units, strictly inside (0, fitness_scale)."""
        self._check_fitted()
        X, _ = self._validate_data(X)
        return self.fitness_scale * self._forward_norm(X)

    def predict_one(self, x) -> float:
        return float(self.predict(np.asarray(x, dtype=np.float64)[None, :])[0])

    def loss(self, X, y) -> float:
        """Mean squared error in normalized fitness units."""
        self._check_fitted()
        X, y = self._validate_data(X, y)
        residual = self._forward_norm(X) - y / self.fitness_scale
        return float(np.mean(residual**2))
