import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cfmaintain.core import CfeState, LabeledBuffer
from cfmaintain.metrics import (MetricsConfig, checkpoint_evaluate, kde_score, knn_score,
                                proximity, validity_metric)

from conftest import ConstantModel, fixed_lr, make_buffer

VERTICAL = fixed_lr([10.0, 0.0], -5.0)


def _states(points, x0=(0.1, 0.5)):
    return [CfeState(np.array(x0), np.array(p, dtype=float), 1, True, i)
            for i, p in enumerate(points)]


def test_validity_examples():
    assert validity_metric(_states([[0.9, 0.5], [0.8, 0.1], [0.2, 0.2]]), VERTICAL) == \
        pytest.approx(0.6667, abs=5e-5)
    assert validity_metric(_states([[0.9, 0.5], [0.7, 0.7]]), VERTICAL) == 1.0
    assert validity_metric([], VERTICAL) is None


@settings(max_examples=50, deadline=None)
@given(X=arrays(float, (7, 2), elements=st.floats(0, 1)))
def test_validity_is_mean_of_indicators(X):
    states = _states(X)
    v = validity_metric(states, VERTICAL)
    assert 0.0 <= v <= 1.0
    assert v == pytest.approx(np.mean([VERTICAL.predict_one(s.x_cf) == 1 for s in states]))


def test_proximity_examples():
    assert proximity([0.3, 0.3], [0.3, 0.3]) == 0.0
    assert proximity([0, 0], [0.6, 0.8]) == pytest.approx(1.0)
    assert proximity([0.1, 0.2], [0.4, 0.6]) == pytest.approx(math.sqrt(0.09 + 0.16))


def test_knn_examples():
    rng = np.random.default_rng(0)
    near = 0.5 + 0.01 * rng.random((15, 2))
    far = rng.random((30, 2)) * 0.2
    buf = make_buffer(np.vstack([far, near]), [0] * 30 + [1] * 15)
    assert knn_score([0.5, 0.5], 1, buf) == 1.0
    buf = make_buffer(np.vstack([far, near]), [0] * 30 + [1] * 12 + [0] * 3)
    assert knn_score([0.5, 0.5], 1, buf) == pytest.approx(0.8)
    assert knn_score([0.5, 0.5], 0, make_buffer(near, [1] * 15)) == 0.0
    assert knn_score([0.5, 0.5], 1, LabeledBuffer(5)) is None


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 200), k=st.integers(1, 20))
def test_knn_matches_all_pairs_oracle(seed, n, k):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 6, size=(n, 2)) / 5.0
    y = rng.integers(0, 2, n)
    q = rng.integers(0, 6, size=2) / 5.0
    pairs = sorted(((float(np.sum((X[i] - q) ** 2)), i) for i in range(n)))
    oracle = np.mean([y[i] == 1 for _, i in pairs[:k]])
    score = knn_score(q, 1, make_buffer(X, y), k)
    assert score == oracle
    assert 0.0 <= score <= 1.0


def test_kde_examples():
    buf = make_buffer([[0.3, 0.3]], [1])
    assert kde_score([0.3, 0.3], 1, buf, 0.1) == pytest.approx(math.log(100), abs=1e-9)
    assert kde_score([0.3, 0.3], 1, buf, 0.1) == pytest.approx(4.60517, abs=5e-6)
    far = make_buffer([[1.3, 0.3]], [1])  # ten bandwidths away
    assert kde_score([0.3, 0.3], 1, far, 0.1) == pytest.approx(math.log(100) - 50, abs=1e-9)
    assert kde_score([0.3, 0.3], 0, buf, 0.1) == -math.inf


def test_kde_far_points_stay_finite():
    buf = make_buffer([[0.0, 0.0]], [1])
    assert math.isfinite(kde_score([1.0, 1.0], 1, buf, 0.01))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), shift=arrays(float, 2, elements=st.floats(-5, 5)))
def test_kde_translation_invariance(seed, shift):
    rng = np.random.default_rng(seed)
    X, y, x = rng.random((40, 2)), rng.integers(0, 2, 40), rng.random(2)
    y[0] = 1
    a = kde_score(x, 1, make_buffer(X, y), 0.1)
    b = kde_score(x + shift, 1, make_buffer(X + shift, y), 0.1)
    assert b == pytest.approx(a, abs=1e-9)


def test_checkpoint_with_no_active_states():
    states = [s.retired() for s in _states([[0.9, 0.5]] * 4)]
    report = checkpoint_evaluate(states, VERTICAL, make_buffer([[0.9, 0.5]], [1]))
    assert (report.validity, report.l2, report.knn, report.kde) == (None,) * 4
    assert (report.active, report.retired) == (0, 4)


def test_checkpoint_single_state():
    buf = make_buffer(np.random.default_rng(0).random((50, 2)), [1] * 50)
    report = checkpoint_evaluate(_states([[0.6, 0.5]]), VERTICAL, buf,
                                 MetricsConfig(), checkpoint=3, method="ours-p")
    assert report.validity == 1.0
    assert report.l2 == pytest.approx(0.5)
    assert report.knn == 1.0
    assert (report.checkpoint, report.method, report.active, report.retired) == \
        (3, "ours-p", 1, 0)
    assert report.as_dict()["l2"] == report.l2


def test_undefined_kde_excluded_from_mean(caplog):
    buf = make_buffer([[0.9, 0.5]], [0])
    report = checkpoint_evaluate(_states([[0.9, 0.5]]), ConstantModel(0.9), buf, method="x")
    assert report.kde is None
    assert "KDE scores undefined" in caplog.text


def test_active_mask_override():
    states = _states([[0.9, 0.5], [0.2, 0.5]])
    report = checkpoint_evaluate(states, VERTICAL, make_buffer([[0.9, 0.5]], [1]),
                                 active_mask=np.array([True, False]))
    assert (report.validity, report.active, report.retired) == (1.0, 1, 1)
