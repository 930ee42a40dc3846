"""Censoring-aware evaluation: Brier/IBS, Antolini concordance, IPCW AUC."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .baseline import G_FLOOR, BaselineCurve, CensoringCurve, fit_km_baseline
from .composite import CompositeModel, SurvivalCurveMatrix, predict_dataset
from .dataset import SurvivalDataset, TimeGrid, discretize_times
from .errors import ValidationError

AS_WRITTEN = "as-written"
UNSQUARED = "unsquared"

DEFAULT_AUC_GRID = tuple(range(7, 85, 7)) + (90,)


def _curve_at_times(curves: SurvivalCurveMatrix, t: np.ndarray) -> np.ndarray:
    return curves.values[np.arange(len(curves)), curves.grid.index_of(t)]


def _check_rows(curves: SurvivalCurveMatrix, test: SurvivalDataset) -> None:
    if len(curves) != len(test):
        raise ValidationError(
            f"{len(curves)} predicted curves for {len(test)} test members"
        )


def brier_at(
    curves: SurvivalCurveMatrix, test: SurvivalDataset, t: float, g: CensoringCurve
) -> float:
    """IPCW Brier score at time ``t``.

    Events at or before ``t`` are weighted by ``1 / G`` just before their own
    time, survivors past ``t`` by ``1 / G(t)``; members censored before ``t``
    contribute nothing.
    """
    _check_rows(curves, test)
    s = curves.at(t)
    died = (test.time <= t) & (test.event == 1)
    alive = test.time > t
    g_own = np.maximum(g.before(test.time), G_FLOOR)
    g_t = max(float(g.at(t)), G_FLOOR)
    terms = np.where(died, s**2 / g_own, 0.0) + np.where(alive, (1.0 - s) ** 2 / g_t, 0.0)
    return float(np.mean(terms))


def brier_curve(
    curves: SurvivalCurveMatrix, test: SurvivalDataset, g: CensoringCurve, times=None
) -> list[tuple[float, float]]:
    times = curves.grid.steps if times is None else times
    out = []
    for t in times:
        if g.at(t) <= G_FLOOR:
            continue
        out.append((float(t), brier_at(curves, test, t, g)))
    return out


def integrated_brier(brier: list[tuple[float, float]], t1: float, t2: float) -> float:
    """Trapezoidal time-average of a Brier curve over ``[t1, t2]``."""
    if not t1 < t2:
        raise ValidationError(f"need t1 < t2, got {t1} and {t2}")
    pts = np.asarray(brier, dtype=float).reshape(-1, 2)
    keep = (pts[:, 0] >= t1) & (pts[:, 0] <= t2)
    t, v = pts[keep, 0], pts[keep, 1]
    if t.size < 2:
        raise ValidationError("need at least two Brier points inside the window")
    return float(np.trapezoid(v, t) / (t2 - t1))


def c_index_antolini(curves: SurvivalCurveMatrix, test: SurvivalDataset) -> float:
    """Time-dependent concordance.

    For pairs with ``T_i > T_j`` and ``D_j = 1`` the predicted survival of both
    members is read at ``T_j``; the pair is concordant when member ``j`` has the
    lower survival. Ties count one half.
    """
    _check_rows(curves, test)
    tidx = curves.grid.index_of(test.time)
    num, den = kernels.concordance_counts(curves.values, tidx, test.time, test.event)
    if den == 0:
        raise ValidationError(
            "no comparable pairs: need an event time strictly below another member's time"
        )
    return num / den


def failure_risk(curves: SurvivalCurveMatrix) -> np.ndarray:
    """Probability of failure at the last grid step, ``1 - S(t_J)``."""
    return 1.0 - curves.values[:, -1]


def auc_at(
    risk, test: SurvivalDataset, t: float, g: CensoringCurve, ties: str = "le"
) -> float:
    """IPCW cumulative/dynamic AUC at ``t``.

    ``ties="le"`` counts controls with risk ``<=`` a case's risk as fully
    concordant; ``ties="half"`` gives ties one half.
    """
    if ties not in ("le", "half"):
        raise ValidationError(f"ties must be 'le' or 'half', got {ties!r}")
    risk = np.asarray(risk, dtype=float)
    if risk.shape != (len(test),):
        raise ValidationError("one risk value per test member is required")
    cases = (test.time <= t) & (test.event == 1)
    controls = test.time > t
    if not cases.any() or not controls.any():
        raise ValidationError(f"AUC at t={t} needs both cases and controls")
    w = 1.0 / np.maximum(g.before(test.time), G_FLOOR)
    num, den = kernels.auc_counts(risk, test.time, test.event, w, float(t), ties == "half")
    return num / den


def auc_curve(
    risk, test: SurvivalDataset, g: CensoringCurve, times, ties: str = "le"
) -> list[tuple[float, float]]:
    out = []
    for t in times:
        cases = (test.time <= t) & (test.event == 1)
        if not cases.any() or not (test.time > t).any():
            continue
        out.append((float(t), auc_at(risk, test, t, g, ties)))
    return out


def mean_auc(
    auc: list[tuple[float, float]],
    survival: BaselineCurve,
    tau1: float,
    tau2: float,
    variant: str = AS_WRITTEN,
) -> float:
    """Survival-weighted mean of an AUC curve over ``(tau1, tau2]``.

    Each AUC point is weighted by the survival drop since the previous point
    (or since ``tau1``). ``"as-written"`` divides by the squared total drop,
    ``"unsquared"`` by the total drop.
    """
    if variant not in (AS_WRITTEN, UNSQUARED):
        raise ValidationError(f"unknown mean-AUC variant {variant!r}")
    if not tau1 < tau2:
        raise ValidationError(f"need tau1 < tau2, got {tau1} and {tau2}")
    pts = np.asarray(auc, dtype=float).reshape(-1, 2)
    pts = pts[(pts[:, 0] > tau1) & (pts[:, 0] <= tau2)]
    s1, s2 = float(survival.at(tau1)), float(survival.at(tau2))
    total = s1 - s2
    if total == 0.0:
        raise ValidationError(f"survival is flat over ({tau1}, {tau2}]; mean AUC undefined")
    if pts.shape[0] == 0:
        raise ValidationError(f"no AUC points inside ({tau1}, {tau2}]")
    s = survival.at(pts[:, 0])
    drops = np.concatenate([[s1], s[:-1]]) - s
    acc = float(np.sum(pts[:, 1] * drops))
    return acc / total**2 if variant == AS_WRITTEN else acc / total


# ----------------------------------------------------------------------------
# full report


@dataclass(frozen=True)
class EvalProtocol:
    auc_grid: tuple[float, ...] = DEFAULT_AUC_GRID
    ibs_window: tuple[float, float] | None = None
    ties: str = "le"


@dataclass
class MetricReport:
    c_index: float
    ibs: float
    mean_auc: dict[str, float | None]
    brier_curve: list[tuple[float, float]]
    auc_curve: list[tuple[float, float]]
    grid: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "c_index": self.c_index,
            "ibs": self.ibs,
            "mean_auc": dict(self.mean_auc),
            "brier_curve": [[t, v] for t, v in self.brier_curve],
            "auc_curve": [[t, v] for t, v in self.auc_curve],
            "grid": self.grid,
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        return cls(
            c_index=d["c_index"],
            ibs=d["ibs"],
            mean_auc=dict(d["mean_auc"]),
            brier_curve=[(t, v) for t, v in d["brier_curve"]],
            auc_curve=[(t, v) for t, v in d["auc_curve"]],
            grid=d.get("grid", {}),
            config=d.get("config", {}),
        )


def evaluate_curves(
    curves: SurvivalCurveMatrix,
    test: SurvivalDataset,
    g: CensoringCurve,
    protocol: EvalProtocol | None = None,
) -> MetricReport:
    """All metrics for curves predicted on a discretized test set."""
    protocol = protocol or EvalProtocol()
    grid: TimeGrid = curves.grid
    cidx = c_index_antolini(curves, test)

    bs = brier_curve(curves, test, g)
    t1, t2 = protocol.ibs_window or (float(grid.steps[0]), float(grid.steps[-1]))
    ibs = integrated_brier(bs, t1, t2)

    auc_times = [t for t in protocol.auc_grid if grid.steps[0] < t <= grid.steps[-1]]
    if not auc_times:
        warnings.warn("AUC grid does not intersect the model grid; AUC not reported", stacklevel=2)
    auc = auc_curve(failure_risk(curves), test, g, auc_times, protocol.ties)
    means: dict[str, float | None] = {"as_written": None, "unsquared": None}
    if auc:
        km_test = fit_km_baseline(test, grid)
        tau1, tau2 = float(grid.steps[0]), float(auc_times[-1])
        for key, variant in (("as_written", AS_WRITTEN), ("unsquared", UNSQUARED)):
            try:
                means[key] = mean_auc(auc, km_test, tau1, tau2, variant)
            except ValidationError as exc:
                warnings.warn(str(exc), stacklevel=2)
    return MetricReport(
        c_index=cidx,
        ibs=ibs,
        mean_auc=means,
        brier_curve=bs,
        auc_curve=auc,
        grid={
            "horizon": int(grid.horizon),
            "ibs_window": [t1, t2],
            "auc_times": [float(t) for t in auc_times],
            "ties": protocol.ties,
        },
    )


def evaluate(
    model: CompositeModel, test: SurvivalDataset, protocol: EvalProtocol | None = None
) -> MetricReport:
    """Predict ``test`` (raw covariates) with ``model`` and score the curves.

    Test times are discretized onto the model's integer scale; IPCW weights
    come from the censoring curve fitted on the training fold.
    """
    curves = predict_dataset(model, test)
    disc, _ = discretize_times(test)
    return evaluate_curves(curves, disc, model.censoring, protocol)
