import numpy as np
import pytest

from cfmaintain.core import LabeledBuffer
from cfmaintain.models import OnlineLogisticRegression


class ConstantModel:
    """Predicts the same class distribution everywhere."""

    def __init__(self, p1: float):
        self.p1 = p1

    def proba_one(self, x):
        return np.array([1.0 - self.p1, self.p1])

    def predict_proba(self, X):
        X = np.atleast_2d(X)
        return np.tile(self.proba_one(None), (X.shape[0], 1))

    def predict_one(self, x):
        return int(self.p1 > 0.5)

    def predict(self, X):
        return np.full(np.atleast_2d(X).shape[0], int(self.p1 > 0.5))


def fixed_lr(w, b):
    """Logistic regression with hand-set weights."""
    model = OnlineLogisticRegression()
    model.coef_ = np.asarray(w, dtype=float)
    model.intercept_ = float(b)
    model.n_features_in_ = len(model.coef_)
    return model


def make_buffer(points, labels, capacity=1000):
    return LabeledBuffer(capacity).extend(np.asarray(points, dtype=float), labels)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
