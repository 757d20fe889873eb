from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_X_y

from ..core import CLASSES


class OnlineClassifier(ClassifierMixin, BaseEstimator):
    """Binary classifier trained one instance at a time.

    Subclasses implement ``learn_one``, ``proba_one`` and ``predict_proba``
    plus ``_reset``. Everything else (``fit``, ``partial_fit``, ``predict``,
    ``score``) follows from those. ``predict`` breaks probability ties
    towards the smaller class id.
    """

    classes_ = np.array(CLASSES)

    def _reset(self) -> None:
        raise NotImplementedError

    def learn_one(self, x, y: int) -> "OnlineClassifier":
        raise NotImplementedError

    def proba_one(self, x) -> np.ndarray:
        raise NotImplementedError

    def predict_proba(self, X) -> np.ndarray:
        raise NotImplementedError

    def predict_one(self, x) -> int:
        p = self.proba_one(x)
        return 0 if p[0] >= p[1] else 1

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    def partial_fit(self, X, y, classes=None) -> "OnlineClassifier":
        X, y = check_X_y(X, y)
        if classes is not None and set(np.unique(classes)) - set(CLASSES):
            raise ValueError(f"only classes {CLASSES} are supported")
        if set(np.unique(y)) - set(CLASSES):
            raise ValueError(f"labels must be in {CLASSES}")
        for xi, yi in zip(X, y):
            self.learn_one(xi, int(yi))
        return self

    def fit(self, X, y) -> "OnlineClassifier":
        """Reset, then make a single online pass over ``(X, y)``."""
        self._reset()
        return self.partial_fit(X, y)
