import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compsurv.baseline import BaselineCurve, CensoringCurve, fit_censoring_km
from compsurv.composite import SurvivalCurveMatrix, fit
from compsurv.dataset import TimeGrid, discretize_times
from compsurv.errors import ValidationError
from compsurv.metrics import (
    AS_WRITTEN,
    UNSQUARED,
    EvalProtocol,
    MetricReport,
    auc_at,
    brier_at,
    brier_curve,
    c_index_antolini,
    evaluate,
    evaluate_curves,
    integrated_brier,
    mean_auc,
)

from conftest import make_ds
from oracles import auc_all_pairs, brier_uncensored, cindex_all_pairs


def curves_of(values, horizon=None):
    v = np.asarray(values, dtype=float)
    grid = TimeGrid.span(v.shape[1] - 1 if horizon is None else horizon)
    return SurvivalCurveMatrix(tuple(range(v.shape[0])), grid, v)


def no_censoring(horizon):
    return CensoringCurve(TimeGrid.span(horizon), np.ones(horizon + 1))


def oracle_curves(time, horizon):
    """Indicator curves S_i(t) = 1[t < T_i]."""
    steps = np.arange(horizon + 1)
    return curves_of((steps[None, :] < np.asarray(time)[:, None]).astype(float))


# --- Brier ----------------------------------------------------------------------


def test_brier_coin_flip():
    test = make_ds([1, 2, 3, 4], [1, 1, 1, 1])
    c = curves_of(np.full((4, 5), 0.5))
    assert brier_at(c, test, 2, no_censoring(4)) == 0.25


def test_brier_oracle_is_zero():
    test = make_ds([1, 2, 3, 4], [1, 0, 1, 1])
    g = fit_censoring_km(test, TimeGrid.span(4))
    c = oracle_curves(test.time, 4)
    assert all(v == 0.0 for _, v in brier_curve(c, test, g))


def test_brier_everyone_censored_before_t():
    test = make_ds([1, 1, 2], [0, 0, 0])
    c = curves_of(np.full((3, 6), 0.3), horizon=5)
    assert brier_at(c, test, 4, no_censoring(5)) == 0.0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_brier_uncensored_matches_plain_squared_error(seed):
    rng = np.random.default_rng(seed)
    n, horizon = int(rng.integers(1, 51)), int(rng.integers(1, 12))
    time = rng.integers(0, horizon + 1, size=n)
    test = make_ds(time, [1] * n)
    values = np.sort(rng.random((n, horizon + 1)), axis=1)[:, ::-1]
    c = curves_of(values)
    for t in range(horizon + 1):
        expected = brier_uncensored(values[:, t], time, t)
        assert brier_at(c, test, t, no_censoring(horizon)) == pytest.approx(expected, abs=1e-12)


def test_brier_censored_weights_hand_computed():
    # censor at 1 -> G = 1, 0.75, 0.75, ...; event at 2 weighted by 1/G(1)
    test = make_ds([1, 2, 3, 4], [0, 1, 1, 0])
    grid = TimeGrid.span(4)
    g = fit_censoring_km(test, grid)
    c = curves_of(np.full((4, 5), 0.4))
    got = brier_at(c, test, 2, g)
    expected = (0.4**2 / 0.75 + 2 * 0.6**2 / 0.75) / 4
    assert got == pytest.approx(expected, abs=1e-15)


# --- IBS ------------------------------------------------------------------------


def test_ibs_constant():
    assert integrated_brier([(0, 0.2), (3, 0.2), (10, 0.2)], 0, 10) == pytest.approx(0.2, abs=1e-15)


def test_ibs_linear():
    pts = [(t, 0.02 * t) for t in range(11)]
    assert integrated_brier(pts, 0, 10) == pytest.approx(0.1, abs=1e-15)


def test_ibs_single_interval():
    assert integrated_brier([(2, 0.1), (4, 0.3)], 2, 4) == pytest.approx(0.2, abs=1e-15)


def test_ibs_window_validated():
    with pytest.raises(ValidationError):
        integrated_brier([(0, 0.1), (1, 0.1)], 1, 1)
    with pytest.raises(ValidationError):
        integrated_brier([(0, 0.1)], 0, 1)


def test_ibs_trapezoid_converges_quadratically():
    def err(m):
        t = np.linspace(0, 1, m + 1)
        return abs(integrated_brier(list(zip(t, t**2)), 0, 1) - 1 / 3)

    assert err(10) / err(20) == pytest.approx(4.0, rel=1e-6)


# --- concordance ----------------------------------------------------------------


def test_cindex_two_members_concordant():
    test = make_ds([1, 2], [1, 1])
    c = curves_of([[1.0, 0.2, 0.1], [1.0, 0.8, 0.5]])
    assert c_index_antolini(c, test) == 1.0


def test_cindex_two_members_discordant():
    test = make_ds([1, 2], [1, 1])
    c = curves_of([[1.0, 0.8, 0.5], [1.0, 0.2, 0.1]])
    assert c_index_antolini(c, test) == 0.0


def test_cindex_all_ties():
    test = make_ds([1, 2, 3, 4], [1, 1, 0, 1])
    assert c_index_antolini(curves_of(np.full((4, 5), 0.7)), test) == 0.5


def test_cindex_no_comparable_pairs():
    with pytest.raises(ValidationError, match="comparable"):
        c_index_antolini(curves_of(np.full((2, 3), 0.5)), make_ds([1, 2], [0, 0]))
    with pytest.raises(ValidationError, match="comparable"):
        c_index_antolini(curves_of(np.full((2, 3), 0.5)), make_ds([2, 2], [1, 1]))


def test_cindex_row_count_checked():
    with pytest.raises(ValidationError):
        c_index_antolini(curves_of(np.full((2, 3), 0.5)), make_ds([1, 2, 2], [1, 1, 1]))


def _random_instance(rng):
    n, horizon = int(rng.integers(2, 31)), int(rng.integers(1, 10))
    time = rng.integers(0, horizon + 1, size=n).astype(float)
    event = rng.integers(0, 2, size=n)
    time[0], event[0] = 0.0, 1
    time[1] = float(horizon)
    # coarse values so ties occur
    values = np.round(rng.random((n, horizon + 1)) * 4) / 4
    return make_ds(time, event), curves_of(values)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_cindex_matches_brute_force(backend, seed):
    test, c = _random_instance(np.random.default_rng(seed))
    tidx = c.grid.index_of(test.time)
    num, den = backend.concordance_counts(c.values, tidx, test.time, test.event)
    expected = cindex_all_pairs(c.values, lambda t: int(c.grid.index_of(t)), test.time, test.event)
    assert num / den == pytest.approx(expected, abs=1e-12)
    assert c_index_antolini(c, test) == pytest.approx(expected, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_cindex_negation_symmetry(seed):
    test, c = _random_instance(np.random.default_rng(seed))
    flipped = curves_of(1.0 - c.values)
    assert c_index_antolini(c, test) + c_index_antolini(flipped, test) == pytest.approx(1.0, abs=1e-12)


# --- AUC ------------------------------------------------------------------------


AUC_TEST = make_ds([1, 2, 5, 6], [1, 1, 0, 1])


def test_auc_perfect():
    assert auc_at([0.9, 0.8, 0.1, 0.2], AUC_TEST, 3, no_censoring(6)) == 1.0


def test_auc_anti():
    assert auc_at([0.1, 0.2, 0.9, 0.8], AUC_TEST, 3, no_censoring(6)) == 0.0


def test_auc_constant_risk_tie_conventions():
    g = no_censoring(6)
    assert auc_at([0.5] * 4, AUC_TEST, 3, g) == 1.0
    assert auc_at([0.5] * 4, AUC_TEST, 3, g, ties="half") == 0.5


def test_auc_needs_cases_and_controls():
    with pytest.raises(ValidationError, match="cases and controls"):
        auc_at([0.1] * 4, AUC_TEST, 0, no_censoring(6))
    with pytest.raises(ValidationError, match="cases and controls"):
        auc_at([0.1] * 4, AUC_TEST, 6, no_censoring(6))


def test_auc_tie_mode_validated():
    with pytest.raises(ValidationError):
        auc_at([0.1] * 4, AUC_TEST, 3, no_censoring(6), ties="lt")


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_auc_matches_brute_force(backend, seed, half):
    rng = np.random.default_rng(seed)
    test, _ = _random_instance(rng)
    risk = np.round(rng.random(len(test)) * 5) / 5
    w = 1.0 / rng.uniform(0.2, 1.0, size=len(test))
    t = float(rng.integers(0, int(test.time.max())))
    if not ((test.time <= t) & (test.event == 1)).any() or not (test.time > t).any():
        return
    num, den = backend.auc_counts(risk, test.time, test.event, w, t, half)
    expected = auc_all_pairs(risk, test.time, test.event, w, t, half)
    assert num / den == pytest.approx(expected, abs=1e-12)


# --- mean AUC -------------------------------------------------------------------


def _surv(values):
    v = np.asarray(values, dtype=float)
    return BaselineCurve(TimeGrid.span(len(v) - 1), np.zeros_like(v), v)


def test_mean_auc_constant():
    s = _surv([1.0, 0.9, 0.7, 0.6, 0.5])
    auc = [(1, 0.8), (2, 0.8), (3, 0.8), (4, 0.8)]
    assert mean_auc(auc, s, 0, 4, UNSQUARED) == pytest.approx(0.8, abs=1e-15)
    assert mean_auc(auc, s, 0, 4, AS_WRITTEN) == pytest.approx(0.8 / 0.5, abs=1e-14)


def test_mean_auc_equal_drops():
    s = _surv([1.0, 0.8, 0.6])
    assert mean_auc([(1, 0.6), (2, 0.8)], s, 0, 2, UNSQUARED) == pytest.approx(0.7, abs=1e-15)


def test_mean_auc_flat_survival():
    with pytest.raises(ValidationError, match="flat"):
        mean_auc([(1, 0.6)], _surv([1.0, 1.0, 1.0]), 0, 2)


def test_mean_auc_variant_validated():
    with pytest.raises(ValidationError):
        mean_auc([(1, 0.6)], _surv([1.0, 0.5]), 0, 1, "squared")


# --- end to end -----------------------------------------------------------------


def test_evaluate_oracle_curves():
    rng = np.random.default_rng(3)
    time = rng.integers(1, 30, size=200)
    event = (rng.random(200) < 0.7).astype(int)
    event[np.argmin(time)] = 1
    test = make_ds(time, event)
    g = fit_censoring_km(test, TimeGrid.span(int(time.max())))
    rep = evaluate_curves(oracle_curves(time, int(time.max())), test, g, EvalProtocol(auc_grid=(5, 10, 20)))
    assert rep.c_index == 1.0
    assert rep.ibs < 0.01
    assert all(v == pytest.approx(1.0, abs=1e-12) for _, v in rep.auc_curve)


@pytest.mark.parametrize("seed", range(5))
def test_evaluate_random_scores_near_half(cohort, seed):
    rng = np.random.default_rng(seed)
    test, grid = discretize_times(cohort)
    r = rng.random(len(test))
    values = np.exp(-np.outer(r, grid.steps) / 10.0)
    c = SurvivalCurveMatrix(tuple(range(len(test))), grid, values)
    assert 0.45 <= c_index_antolini(c, test) <= 0.55


def test_report_round_trip(cohort):
    model = fit(cohort.subset(np.arange(400)))
    rep = evaluate(model, cohort.subset(np.arange(400, 600)))
    back = MetricReport.from_dict(json.loads(rep.to_json()))
    assert back.to_json() == rep.to_json()
    d = json.loads(rep.to_json())
    assert set(d) == {"c_index", "ibs", "mean_auc", "brier_curve", "auc_curve", "grid", "config"}
    assert set(d["mean_auc"]) == {"as_written", "unsquared"}
    assert 0.5 < rep.c_index <= 1.0
    assert math.isfinite(rep.ibs)
