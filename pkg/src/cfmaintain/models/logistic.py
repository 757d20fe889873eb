from __future__ import annotations

import numpy as np
from scipy.special import expit

from .._validation import as_matrix, as_vector, check_positive
from .base import OnlineClassifier


class OnlineLogisticRegression(OnlineClassifier):
    """Logistic regression trained by plain SGD on the log loss.

    Each ``learn_one`` call performs ``w += lr * (y - p) * x`` and the same
    step on the bias, with ``p = sigmoid(w.x + b)``.
    """

    def __init__(self, learning_rate: float = 0.3):
        self.learning_rate = learning_rate

    def _reset(self) -> None:
        for attr in ("coef_", "intercept_", "n_features_in_"):
            self.__dict__.pop(attr, None)

    def _init(self, d: int) -> None:
        check_positive(self.learning_rate, "learning_rate")
        self.coef_ = np.zeros(d)
        self.intercept_ = 0.0
        self.n_features_in_ = d

    def decision_function(self, X) -> np.ndarray:
        X = as_matrix(X, getattr(self, "n_features_in_", None))
        if not hasattr(self, "coef_"):
            return np.zeros(X.shape[0])
        return X @ self.coef_ + self.intercept_

    def learn_one(self, x, y: int) -> "OnlineLogisticRegression":
        x = as_vector(x, getattr(self, "n_features_in_", None))
        if not hasattr(self, "coef_"):
            self._init(x.shape[0])
        err = int(y) - float(expit(float(x @ self.coef_) + self.intercept_))
        self.coef_ = self.coef_ + self.learning_rate * err * x
        self.intercept_ += self.learning_rate * err
        return self

    def proba_one(self, x) -> np.ndarray:
        if not hasattr(self, "coef_"):
            return np.array([0.5, 0.5])
        x = np.asarray(x, dtype=float)
        if x.shape != self.coef_.shape:
            raise ValueError(f"x has shape {x.shape}, expected {self.coef_.shape}")
        p1 = float(expit(float(x @ self.coef_) + self.intercept_))
        return np.array([1.0 - p1, p1])

    def predict_proba(self, X) -> np.ndarray:
        z = self.decision_function(X)
        p1 = expit(z)
        return np.column_stack([1.0 - p1, p1])
