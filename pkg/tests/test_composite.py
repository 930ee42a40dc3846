import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compsurv.baseline import BAYESIAN, KAPLAN_MEIER, BaselineCurve
from compsurv.composite import (
    GLOBAL,
    CompositeModel,
    compose_curves,
    dumps_model,
    fit,
    load_model,
    predict_curves,
    predict_dataset,
    save_model,
)
from compsurv.dataset import TimeGrid
from compsurv.errors import ModelFormatError, ModelVersionError
from compsurv.scores import ScoreModel, ScoreNormalization
from compsurv.synth import SynthConfig, synth_generate


def with_baseline(model: CompositeModel, survival) -> CompositeModel:
    grid = TimeGrid.span(len(survival) - 1)
    base = BaselineCurve(grid, np.zeros(len(survival)), survival)
    return CompositeModel(
        baseline=base,
        baseline_kind=model.baseline_kind,
        scores=ScoreModel([1.0], 0.0),
        norm=ScoreNormalization(-1.0, 1.0),  # x = -1 -> r = 0, x = 1 -> r = 1
        censoring=model.censoring,
        preprocessing=model.preprocessing,
    )


@pytest.fixture(scope="module")
def fitted(cohort):
    return fit(cohort, BAYESIAN)


@pytest.mark.parametrize(
    "x, expected",
    [
        (-1.0, [1.0, math.exp(-0.5), math.exp(-1.0)]),
        (1.0, [1.0, math.exp(-1.0), math.exp(-2.0)]),
    ],
)
def test_closed_form_curves(fitted, x, expected):
    m = with_baseline(fitted, [1.0, 0.5, 0.0])
    got = predict_curves(m, [[x]]).values[0]
    np.testing.assert_allclose(got, expected, rtol=0, atol=1e-12)
    # decimal values quoted for these cases
    np.testing.assert_allclose(got[1:], [0.60653, 0.36788] if x < 0 else [0.36788, 0.13534], atol=5e-6)


def test_flat_baseline_flattens_curves(fitted):
    m = with_baseline(fitted, [1.0, 1.0, 1.0, 1.0])
    np.testing.assert_array_equal(predict_curves(m, [[-0.3], [0.9]]).values, 1.0)


def test_global_normalization_variant():
    v = compose_curves(np.array([1.0, 0.5, 0.0]), np.array([0.0, 1.0]), GLOBAL)
    assert v.max() == 1.0
    assert v[0, 0] == pytest.approx(math.exp(1 - 2), rel=1e-15)


def test_fit_is_deterministic(cohort):
    assert dumps_model(fit(cohort, BAYESIAN)) == dumps_model(fit(cohort, BAYESIAN))


def test_baseline_swap_leaves_weights(cohort):
    a = fit(cohort, BAYESIAN)
    b = fit(cohort, KAPLAN_MEIER)
    np.testing.assert_array_equal(a.scores.weights, b.scores.weights)
    assert a.norm == b.norm


def _median(curve):
    return int(np.argmax(curve <= 0.5))


LAM = 0.1
CONST_HAZARD = SynthConfig(n=2000, n_covariates=3, rate=LAM, coef=(0.0, 0.0, 0.0), censoring_rate=0.3, seed=8)


def test_km_baseline_median_matches_exponential():
    m = fit(synth_generate(CONST_HAZARD), KAPLAN_MEIER)
    assert abs(_median(m.baseline.survival) - math.log(2) / LAM) <= 0.2 * math.log(2) / LAM


@pytest.mark.xfail(strict=True, reason="Bayesian baseline is not a product-limit estimate")
def test_bayesian_baseline_median_matches_exponential():
    m = fit(synth_generate(CONST_HAZARD), BAYESIAN)
    assert abs(_median(m.baseline.survival) - math.log(2) / LAM) <= 0.2 * math.log(2) / LAM


def test_save_load_round_trip(fitted, cohort, tmp_path):
    path = tmp_path / "m.json"
    save_model(fitted, path)
    back = load_model(path)
    a = predict_dataset(fitted, cohort).values
    b = predict_dataset(back, cohort).values
    assert np.array_equal(a, b)
    assert dumps_model(back) == dumps_model(fitted)


def test_truncated_file(fitted, tmp_path):
    path = tmp_path / "m.json"
    text = dumps_model(fitted)
    path.write_text(text[: len(text) // 2])
    with pytest.raises(ModelFormatError, match="parse"):
        load_model(path)


def test_unknown_version(fitted, tmp_path):
    d = json.loads(dumps_model(fitted))
    d["version"] = "v999"
    path = tmp_path / "m.json"
    path.write_text(json.dumps(d))
    with pytest.raises(ModelVersionError):
        load_model(path)


def test_missing_section_is_format_error(fitted, tmp_path):
    d = json.loads(dumps_model(fitted))
    del d["scores"]
    path = tmp_path / "m.json"
    path.write_text(json.dumps(d))
    with pytest.raises(ModelFormatError):
        load_model(path)


def test_width_mismatch(fitted):
    with pytest.raises(ValueError):
        predict_curves(fitted, np.ones((2, 7)))


# --- properties -----------------------------------------------------------------


def random_baseline(rng, steps):
    drops = rng.random(steps - 1) * (rng.random(steps - 1) < 0.8)
    s = np.concatenate([[1.0], 1.0 - np.cumsum(drops) / max(drops.sum(), 1e-12)])
    return np.clip(s, 0.0, 1.0)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_non_crossing(seed):
    rng = np.random.default_rng(seed)
    base = random_baseline(rng, int(rng.integers(2, 40)))
    r = np.sort(rng.random(int(rng.integers(2, 20))))
    v = compose_curves(base, r)
    # rows ordered by score -> survival ordered the other way at every step
    assert np.all(np.diff(v, axis=0) <= 0)
    below = base < base[0]
    distinct = np.diff(r) > 0
    assert np.all(np.diff(v, axis=0)[np.ix_(distinct, below)] < 0)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_curves_start_at_one_and_decrease(seed):
    rng = np.random.default_rng(seed)
    base = random_baseline(rng, int(rng.integers(2, 30)))
    v = compose_curves(base, rng.random(8))
    np.testing.assert_array_equal(v[:, 0], 1.0)
    assert np.all(np.diff(v, axis=1) <= 0)
    assert np.all((v >= 0) & (v <= 1))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_rank_invariance_across_baselines(seed):
    rng = np.random.default_rng(seed)
    steps = int(rng.integers(3, 30))
    a = np.concatenate([[1.0], np.sort(rng.random(steps - 1))[::-1]])
    b = np.concatenate([[1.0], np.sort(rng.random(steps - 1))[::-1]])
    if np.any(np.diff(a) >= 0) or np.any(np.diff(b) >= 0):
        return
    r = rng.random(12)
    va, vb = compose_curves(a, r), compose_curves(b, r)
    for j in range(1, steps):
        assert np.array_equal(np.argsort(va[:, j], kind="stable"), np.argsort(vb[:, j], kind="stable"))


def test_prediction_is_per_member(fitted, cohort):
    X = cohort.X[:25]
    full = predict_dataset(fitted, cohort.subset(np.arange(25))).values
    alone = predict_dataset(fitted, cohort.subset([7])).values
    assert np.array_equal(full[7], alone[0])
    assert X.shape[0] == 25
