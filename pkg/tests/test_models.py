import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from sklearn.base import clone

from cfmaintain.models import (HoeffdingTreeClassifier, OnlineLogisticRegression,
                               hoeffding_bound, learn_one, make_model, prob)
from cfmaintain.models.hoeffding import entropy, split_gains
from cfmaintain.streams import DriftingStream, DriftSchedule, StreamSpec, label

from conftest import fixed_lr


# -- logistic regression ------------------------------------------------------

def test_untrained_models_are_uniform():
    for kind in ("lr", "ht"):
        model = make_model(kind)
        np.testing.assert_array_equal(prob(model, np.array([0.3, 0.4])), [0.5, 0.5])
        np.testing.assert_array_equal(model.predict_proba(np.zeros((3, 2))), 0.5)


def test_lr_probability_example():
    model = fixed_lr([2.0, 0.0], -1.0)
    assert prob(model, np.array([1.0, 0.0]))[1] == pytest.approx(1 / (1 + math.exp(-1)))
    assert prob(model, np.array([1.0, 0.0]))[1] == pytest.approx(0.7311, abs=5e-5)


def test_lr_single_step_by_hand():
    model = OnlineLogisticRegression(learning_rate=0.5)
    learn_one(model, (np.array([1.0, 0.0]), 1))
    # p = 0.5, so w += 0.5 * 0.5 * x and b += 0.25
    np.testing.assert_allclose(model.coef_, [0.25, 0.0])
    assert model.intercept_ == pytest.approx(0.25)


def _log_loss(w, b, x, y):
    z = x @ w + b
    return np.logaddexp(0.0, z) - y * z


@settings(max_examples=100, deadline=None)
@given(w=arrays(float, 3, elements=st.floats(-3, 3)), b=st.floats(-3, 3),
       x=arrays(float, 3, elements=st.floats(0, 1)), y=st.integers(0, 1))
def test_lr_step_is_negative_log_loss_gradient(w, b, x, y):
    lr = 0.1
    model = fixed_lr(w, b)
    model.learning_rate = lr
    model.learn_one(x, y)
    step = np.append(model.coef_ - w, model.intercept_ - b) / -lr

    h = 1e-6
    theta = np.append(w, b)
    fd = np.empty(4)
    for i in range(4):
        e = np.zeros(4)
        e[i] = h
        plus, minus = theta + e, theta - e
        fd[i] = (_log_loss(plus[:3], plus[3], x, y) - _log_loss(minus[:3], minus[3], x, y)) / (2 * h)
    scale = max(np.linalg.norm(fd), 1e-3)
    assert np.linalg.norm(step - fd) / scale < 1e-4


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), kind=st.sampled_from(["lr", "ht"]))
def test_probabilities_sum_to_one(seed, kind):
    rng = np.random.default_rng(seed)
    X = rng.random((300, 2))
    y = (rng.random(300) < X[:, 0]).astype(int)
    model = make_model(kind, grace_period=20) if kind == "ht" else make_model(kind)
    model.fit(X, y)
    P = model.predict_proba(rng.random((50, 2)))
    np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-9)
    assert np.all((P > 0) & (P < 1))


def test_sklearn_surface():
    model = OnlineLogisticRegression(learning_rate=0.2)
    assert model.get_params() == {"learning_rate": 0.2}
    assert clone(model).learning_rate == 0.2
    X = np.random.default_rng(0).random((200, 2))
    y = (X[:, 0] > 0.5).astype(int)
    model.fit(X, y)
    assert list(model.classes_) == [0, 1]
    refit = clone(model).fit(X, y)
    np.testing.assert_array_equal(refit.coef_, model.coef_)
    with pytest.raises(ValueError):
        model.predict(np.zeros((2, 3)))


def test_tie_predicts_class_zero():
    model = fixed_lr([0.0, 0.0], 0.0)
    assert model.predict_one(np.array([0.2, 0.2])) == 0


# -- Hoeffding tree ------------------------------------------------------------

def test_hoeffding_bound_examples():
    assert hoeffding_bound(1.0, 1.0, 10) == 0.0
    # independent evaluation of sqrt(R^2 ln(1/delta) / 2n)
    assert hoeffding_bound(1.0, 0.05, 100) == pytest.approx(0.12239, abs=5e-6)
    assert hoeffding_bound(2.0, 0.05, 100) == pytest.approx(0.24477, abs=5e-6)
    assert hoeffding_bound(2.0, 0.05, 100) == pytest.approx(2 * hoeffding_bound(1.0, 0.05, 100))
    for bad in (0.0, 1.5, -0.1):
        with pytest.raises(ValueError):
            hoeffding_bound(1.0, bad, 10)


def test_leaf_laplace_estimate():
    tree = HoeffdingTreeClassifier(grace_period=1000)
    for y in (0, 0, 0, 1):
        tree.learn_one([0.5, 0.5], y)
    np.testing.assert_allclose(tree.proba_one(np.array([0.1, 0.9])), [4 / 6, 2 / 6])


def test_entropy_and_gain_oracle():
    assert entropy(np.array([5, 5])) == pytest.approx(1.0)
    assert entropy(np.array([0, 7])) == 0.0
    # one feature, 4 bins: classes perfectly separated at the middle edge
    stats = np.array([[[10, 0], [10, 0], [0, 10], [0, 10]]])
    gains = split_gains(stats)
    # by hand: left 1/4 holds 10 zeros, right 3/4 holds 10 zeros + 20 ones
    h_right = -(1 / 3) * math.log2(1 / 3) - (2 / 3) * math.log2(2 / 3)
    np.testing.assert_allclose(gains[0], [1.0 - 0.75 * h_right, 1.0, 1.0 - 0.75 * h_right])


def test_pure_leaf_never_splits():
    tree = HoeffdingTreeClassifier(grace_period=10)
    rng = np.random.default_rng(0)
    for x in rng.random((200, 2)):
        tree.learn_one(x, 1)
    assert tree.n_leaves == 1


def test_separable_feature_splits():
    rng = np.random.default_rng(1)
    X = rng.random((200, 2))
    y = (X[:, 1] >= 0.5).astype(int)
    tree = HoeffdingTreeClassifier(grace_period=200, adaptive=False).fit(X, y)
    # oracle: the perfect threshold has gain H(y) ~ 1 bit, well above the bound
    assert hoeffding_bound(1.0, 1e-3, 200) < 0.2
    root = tree.root_
    assert (root.feature, root.threshold) == (1, 0.5)


def test_tied_features_do_not_split_while_bound_is_wide():
    rng = np.random.default_rng(2)
    x = rng.random(50)
    X = np.column_stack([x, x])
    y = (x >= 0.5).astype(int)
    tree = HoeffdingTreeClassifier(grace_period=50, tie_threshold=0.1, adaptive=False)
    tree.fit(X, y)
    assert hoeffding_bound(1.0, 1e-3, 50) > 0.1
    assert tree.n_leaves == 1


def test_predictions_are_constant_within_leaf_boxes():
    X, y = DriftingStream(StreamSpec("sine", seed=4)).take(3000)
    tree = HoeffdingTreeClassifier().fit(X, y)
    assert tree.n_leaves > 3
    rng = np.random.default_rng(0)
    for lo, hi, leaf in tree.leaves():
        lo, hi = np.maximum(lo, 0.0), np.minimum(hi, 1.0)
        Z = lo + (hi - lo) * rng.random((30, 2)) * (1 - 1e-9)
        np.testing.assert_array_equal(tree.predict_proba(Z), np.tile(leaf.proba(), (30, 1)))
        for z in Z[:5]:
            np.testing.assert_array_equal(tree.proba_one(z), leaf.proba())


@pytest.mark.parametrize("kind", ["lr", "ht"])
def test_prequential_accuracy_on_stationary_stream(kind):
    spec = StreamSpec("hyperplane", params={"theta0": 0.6, "delta_theta": 0.0}, seed=7)
    X, y = DriftingStream(spec).take(2000)
    model = make_model(kind)
    hits = []
    for i, (x, c) in enumerate(zip(X, y)):
        if i >= 1000:
            hits.append(model.predict_one(x) == c)
        model.learn_one(x, c)
    assert np.mean(hits) > 0.9


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_adaptive_tree_recovers_from_abrupt_switch(seed):
    spec = StreamSpec("hyperplane", drift=DriftSchedule(2000, 1),
                      params={"delta_theta": math.pi / 2}, seed=seed)
    X, y = DriftingStream(spec).take(2500)
    X_test = np.random.default_rng(seed).random((2000, 2))
    y_test = label(spec, X_test, 1.0)
    acc = {}
    for adaptive in (True, False):
        tree = HoeffdingTreeClassifier(adaptive=adaptive).fit(X, y)
        acc[adaptive] = np.mean(tree.predict(X_test) == y_test)
    assert acc[True] >= 0.8
    assert acc[False] < 0.8
