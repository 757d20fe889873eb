import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from cfmaintain.generators import (GenerationError, GrowingSpheres, GrowingSpheresConfig,
                                   NearestNeighbor, NoPrototypeWarning, RobX, StabilityConfig,
                                   gs_generate, make_generator, nn_generate, robx_generate,
                                   stability)

from conftest import ConstantModel, fixed_lr, make_buffer

# class 1 iff x1 + x2 > 1
DIAGONAL = fixed_lr([10.0, 10.0], -10.0)


def _random_problem(seed):
    """A steep random LR boundary and a query on its class-0 side."""
    rng = np.random.default_rng(seed)
    while True:
        angle = rng.uniform(0, 2 * np.pi)
        w = 8.0 * np.array([np.cos(angle), np.sin(angle)])
        model = fixed_lr(w, -w @ rng.uniform(0.2, 0.8, 2))
        x0 = rng.random(2)
        if model.predict_one(x0) == 0:
            return model, x0, rng


# -- nearest neighbour ----------------------------------------------------------

def test_nn_returns_only_qualifying_point():
    buf = make_buffer([[0.2, 0.2], [0.8, 0.8]], [0, 1])
    np.testing.assert_array_equal(nn_generate([0.3, 0.3], 1, buf, DIAGONAL), [0.8, 0.8])


def test_nn_uses_predictions_not_labels():
    buf = make_buffer([[0.45, 0.45], [0.9, 0.9]], [1, 1])
    np.testing.assert_array_equal(nn_generate([0.3, 0.3], 1, buf, DIAGONAL), [0.9, 0.9])


def test_nn_without_candidates_fails():
    buf = make_buffer([[0.2, 0.2], [0.1, 0.3]], [1, 1])
    with pytest.raises(GenerationError):
        nn_generate([0.3, 0.3], 1, buf, DIAGONAL)


# -- growing spheres ------------------------------------------------------------

def test_gs_constant_target_model_hits_first_shell(rng):
    cfg = GrowingSpheresConfig()
    x0 = np.array([0.5, 0.5])
    out = gs_generate(x0, 1, ConstantModel(0.9), cfg, rng)
    assert np.linalg.norm(out - x0) <= cfg.r0 + cfg.step + 1e-12


@pytest.mark.parametrize("seed", range(20))
def test_gs_lands_just_past_a_known_boundary(seed):
    model = fixed_lr([40.0, 0.0], -28.0)  # boundary x1 = 0.7
    x0 = np.array([0.4, 0.5])  # 0.3 away
    out = gs_generate(x0, 1, model, GrowingSpheresConfig(), np.random.default_rng(seed))
    assert out[0] > 0.7  # brute-force validity against the true boundary
    assert 0.3 <= np.linalg.norm(out - x0) <= 0.40


def test_gs_impossible_target_fails(rng):
    with pytest.raises(GenerationError):
        gs_generate([0.5, 0.5], 1, ConstantModel(0.1), GrowingSpheresConfig(), rng)


@pytest.mark.parametrize("seed", range(30))
def test_gs_distance_against_grid_oracle(seed):
    model, x0, rng = _random_problem(seed)
    cfg = GrowingSpheresConfig()
    g = np.linspace(0, 1, 401)
    grid = np.array(np.meshgrid(g, g)).reshape(2, -1).T
    valid = grid[model.predict(grid) == 1]
    d_min = np.min(np.linalg.norm(valid - x0, axis=1))
    # upper edge of the first shell that contains a valid point
    shell_top = cfg.r0 + cfg.step * (np.floor((d_min - cfg.r0) / cfg.step) + 1)
    d = np.linalg.norm(gs_generate(x0, 1, model, cfg, rng) - x0)
    assert d >= d_min - 0.002  # grid resolution
    assert d <= max(shell_top, cfg.r0 + cfg.step) + cfg.step


def test_gs_config_validation():
    with pytest.raises(ValueError):
        GrowingSpheresConfig(step=0.0)


# -- stability and RobX -----------------------------------------------------------

@pytest.mark.parametrize("p", [0.9, 0.5])
def test_stability_of_constant_model(p, rng):
    assert stability([0.5, 0.5], 1, ConstantModel(p), 0.1, 100, rng) == pytest.approx(p)


def test_robx_keeps_stable_base(rng):
    buf = make_buffer([[0.9, 0.9]], [1])
    base = np.array([0.95, 0.95])
    out = robx_generate([0.2, 0.2], 1, base, buf, DIAGONAL, StabilityConfig(), rng)
    np.testing.assert_array_equal(out, base)


def test_robx_full_blend_jumps_to_prototype(rng):
    model = fixed_lr([20.0, 0.0], -10.0)  # boundary x1 = 0.5
    proto = np.array([0.9, 0.5])
    buf = make_buffer([proto, [0.1, 0.5], [0.8, 0.2]], [1, 0, 0])
    base = np.array([0.52, 0.5])
    cfg = StabilityConfig(blend=1.0)
    assert stability(base, 1, model, cfg.spread, cfg.n_samples, rng) < cfg.threshold
    out = robx_generate([0.3, 0.5], 1, base, buf, model, cfg, rng)
    np.testing.assert_array_equal(out, proto)


def test_robx_without_prototypes_warns_and_keeps_base(rng):
    buf = make_buffer([[0.1, 0.1]], [0])
    base = np.array([0.6, 0.6])
    with pytest.warns(NoPrototypeWarning):
        out = robx_generate([0.2, 0.2], 1, base, buf, DIAGONAL, StabilityConfig(), rng)
    np.testing.assert_array_equal(out, base)


def _buffer_for(model, seed, n=400):
    X = np.random.default_rng(seed).random((n, 2))
    return make_buffer(X, model.predict(X))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), kind=st.sampled_from(["nn", "gs", "robx"]))
def test_generated_points_are_valid(seed, kind):
    model, x0, rng = _random_problem(seed)
    buf = _buffer_for(model, seed)
    out = make_generator(kind).generate(x0, 1, model, rng, buf)
    assert model.predict_one(out) == 1
    assert np.all((out >= 0) & (out <= 1))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_robx_does_not_lose_stability(seed):
    model, x0, rng = _random_problem(seed)
    buf = _buffer_for(model, seed)
    base = gs_generate(x0, 1, model, GrowingSpheresConfig(), rng)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NoPrototypeWarning)
        out = robx_generate(x0, 1, base, buf, model, StabilityConfig(), rng)
    # common random numbers with a large sample keep the comparison tight
    s_base = stability(base, 1, model, 0.1, 4000, np.random.default_rng(0))
    s_out = stability(out, 1, model, 0.1, 4000, np.random.default_rng(0))
    assert s_out >= s_base - 0.03


def test_estimator_wrappers():
    assert isinstance(make_generator("nn"), NearestNeighbor)
    gs = GrowingSpheres(n_samples=30)
    assert clone(gs).get_params()["n_samples"] == 30
    robx = RobX(blend=0.5)
    assert robx.get_params()["base"] == "gs"
    with pytest.raises(ValueError):
        make_generator("dice")
    with pytest.raises(GenerationError):
        NearestNeighbor().generate([0.3, 0.3], 1, DIAGONAL, None, make_buffer([[0, 0]], [0]))
