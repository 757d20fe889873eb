"""Online binary classifiers with an sklearn-compatible surface."""
from .base import OnlineClassifier
from .hoeffding import HoeffdingTreeClassifier, hoeffding_bound
from .logistic import OnlineLogisticRegression

MODEL_KINDS = {"lr": OnlineLogisticRegression, "ht": HoeffdingTreeClassifier}


def make_model(kind: str, **params) -> OnlineClassifier:
    try:
        cls = MODEL_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {sorted(MODEL_KINDS)}") from None
    return cls(**params)


def learn_one(model: OnlineClassifier, inst) -> OnlineClassifier:
    return model.learn_one(inst[0], inst[1])


def prob(model: OnlineClassifier, x):
    return model.proba_one(x)


__all__ = ["OnlineClassifier", "OnlineLogisticRegression", "HoeffdingTreeClassifier",
           "hoeffding_bound", "make_model", "learn_one", "prob", "MODEL_KINDS"]
