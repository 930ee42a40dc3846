"""Population-level baseline curves.

Two estimators share the :class:`BaselineCurve` shape: the recursive Gaussian
posterior accumulator (``fit_bayesian_baseline``) and the product-limit
estimator (``fit_km_baseline``). ``fit_censoring_km`` is the product-limit
estimate of the censoring distribution used for IPCW weights.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .dataset import SIGMA_FLOOR, SurvivalDataset, TimeGrid
from .errors import ValidationError

G_FLOOR = 1e-12

BAYESIAN = "bayesian"
KAPLAN_MEIER = "kaplan-meier"


@dataclass(frozen=True)
class GaussianParams:
    mu: float
    sigma: float

    def __post_init__(self) -> None:
        if not self.sigma >= SIGMA_FLOOR:
            raise ValidationError(f"sigma {self.sigma} below floor {SIGMA_FLOOR}")


@dataclass(frozen=True, eq=False)
class BaselineCurve:
    grid: TimeGrid
    hazard_score: np.ndarray
    survival: np.ndarray

    def __post_init__(self) -> None:
        h = np.asarray(self.hazard_score, dtype=float)
        s = np.asarray(self.survival, dtype=float)
        if h.shape != (len(self.grid),) or s.shape != (len(self.grid),):
            raise ValidationError("baseline vectors must have one entry per grid step")
        h.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "hazard_score", h)
        object.__setattr__(self, "survival", s)

    def at(self, t) -> np.ndarray:
        """Step-function lookup at arbitrary times."""
        return self.survival[self.grid.index_of(t)]

    def to_dict(self) -> dict:
        return {
            "times": self.grid.steps.tolist(),
            "hazard_score": self.hazard_score.tolist(),
            "survival": self.survival.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BaselineCurve":
        return cls(TimeGrid(np.asarray(d["times"])), d["hazard_score"], d["survival"])


@dataclass(frozen=True, eq=False)
class CensoringCurve:
    grid: TimeGrid
    g: np.ndarray

    def __post_init__(self) -> None:
        g = np.asarray(self.g, dtype=float)
        if g.shape != (len(self.grid),):
            raise ValidationError("censoring curve needs one entry per grid step")
        g.setflags(write=False)
        object.__setattr__(self, "g", g)

    def at(self, t) -> np.ndarray:
        return self.g[self.grid.index_of(t)]

    def before(self, t) -> np.ndarray:
        """G at the grid step preceding ``t`` (left limit); 1 before the first step."""
        t = np.asarray(t, dtype=float)
        idx = self.grid.index_of(t)
        # a time that is itself a grid step looks one step back
        on_step = self.grid.steps[idx] == t
        prev = np.where(on_step, idx - 1, idx)
        return np.where(prev < 0, 1.0, self.g[np.maximum(prev, 0)])

    def to_dict(self) -> dict:
        return {"times": self.grid.steps.tolist(), "g": self.g.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "CensoringCurve":
        return cls(TimeGrid(np.asarray(d["times"])), d["g"])


# ----------------------------------------------------------------------------
# Gaussian pieces


def mle_params(history) -> GaussianParams:
    """Sample mean and population standard deviation (floored)."""
    x = np.asarray(history, dtype=float).reshape(-1)
    if x.size == 0:
        raise ValidationError("MLE needs a non-empty history")
    mu = float(x.mean())
    sigma = float(np.sqrt(np.mean((x - mu) ** 2)))
    return GaussianParams(mu, max(sigma, SIGMA_FLOOR))


def loglik_term(history, params: GaussianParams) -> float:
    """Shifted Gaussian log-likelihood ``1 + sum_i log N(x_i | mu, sigma)``."""
    x = np.asarray(history, dtype=float).reshape(-1)
    if x.size == 0:
        raise ValidationError("log-likelihood needs a non-empty history")
    z = (x - params.mu) / params.sigma
    log_norm = np.log(1.0 / np.sqrt(2.0 * np.pi * params.sigma**2))
    return float(1.0 + np.sum(log_norm - 0.5 * z * z))


def _event_history(train: SurvivalDataset, grid: TimeGrid) -> tuple[np.ndarray, np.ndarray]:
    ev = np.flatnonzero(train.event == 1)
    order = ev[np.argsort(train.time[ev], kind="stable")]
    t_ev = train.time[order]
    counts = np.searchsorted(t_ev, grid.steps, side="right").astype(np.int64)
    return train.X[order], counts


def accumulate_loglik(train: SurvivalDataset, grid: TimeGrid) -> np.ndarray:
    """Per-covariate accumulators ``A[j, i]`` (rows: grid steps)."""
    x_events, counts = _event_history(train, grid)
    return kernels.bayes_accumulate(x_events, counts, SIGMA_FLOOR)


def survival_from_hazard(h: np.ndarray, raw: bool = False) -> np.ndarray:
    """Turn the accumulated hazard score into a survival curve.

    ``1 - h / h_ext`` where ``h_ext`` is the entry of largest magnitude (this is
    ``max(h)`` whenever the scores are non-negative). Unless ``raw``, a running
    minimum makes the curve non-increasing and it is rescaled onto [0, 1].
    """
    h = np.asarray(h, dtype=float)
    ext = h[np.argmax(np.abs(h))]
    if ext == 0.0:
        return np.ones_like(h)
    s = 1.0 - h / ext
    if raw:
        return s
    s = np.minimum.accumulate(s)
    lo, hi = s.min(), s.max()
    if hi - lo <= 0.0:
        return np.ones_like(s)
    return (s - lo) / (hi - lo)


def fit_bayesian_baseline(
    train: SurvivalDataset, grid: TimeGrid, raw: bool = False
) -> BaselineCurve:
    """Recursive Gaussian posterior baseline on a discretized training set.

    At each step the event history (covariates of events with time ``<= t_j``)
    gives MLE parameters and a shifted log-likelihood per covariate. These are
    accumulated in log space, summed over covariates and normalized into a
    survival curve. Steps where the history did not grow carry forward.
    """
    if not np.any(train.event == 1):
        raise ValidationError("Bayesian baseline needs at least one event in the training data")
    A = accumulate_loglik(train, grid)
    h = A.sum(axis=1)
    if np.all(h == 0.0):
        warnings.warn("hazard score is identically zero; baseline is flat", stacklevel=2)
    return BaselineCurve(grid, h, survival_from_hazard(h, raw=raw))


# ----------------------------------------------------------------------------
# product-limit estimators


def _product_limit(
    time: np.ndarray, flag: np.ndarray, grid: TimeGrid
) -> tuple[np.ndarray, np.ndarray]:
    """Product-limit survival and Nelson-Aalen cumulative hazard on the grid."""
    idx = grid.index_of(time)
    on_grid = time <= grid.steps[-1]
    at_risk = (len(time) - np.searchsorted(np.sort(time), grid.steps, side="left")).astype(float)
    d = np.bincount(idx[(flag == 1) & on_grid], minlength=len(grid)).astype(float)
    ratio = np.zeros(len(grid))
    ok = at_risk > 0
    ratio[ok] = d[ok] / at_risk[ok]
    return np.cumprod(1.0 - ratio), np.cumsum(ratio)


def fit_km_baseline(train: SurvivalDataset, grid: TimeGrid) -> BaselineCurve:
    """Kaplan-Meier survival on the grid; steps with nobody at risk carry forward.

    The hazard score slot holds the Nelson-Aalen cumulative hazard.
    """
    s, cumhaz = _product_limit(train.time, train.event, grid)
    return BaselineCurve(grid, cumhaz, s)


def fit_censoring_km(train: SurvivalDataset, grid: TimeGrid) -> CensoringCurve:
    g, _ = _product_limit(train.time, 1 - train.event, grid)
    return CensoringCurve(grid, np.maximum(g, G_FLOOR))


def fit_baseline(
    train: SurvivalDataset, grid: TimeGrid, kind: str, raw: bool = False
) -> BaselineCurve:
    if kind == BAYESIAN:
        return fit_bayesian_baseline(train, grid, raw=raw)
    if kind == KAPLAN_MEIER:
        return fit_km_baseline(train, grid)
    raise ValidationError(f"unknown baseline kind {kind!r}")
