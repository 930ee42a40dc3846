"""Synthetic right-censored cohorts with proportional-hazards event times."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .dataset import CONTINUOUS, SurvivalDataset
from .errors import ValidationError

HAZARDS = ("exponential", "piecewise")


@dataclass(frozen=True)
class SynthConfig:
    """Parameters for :func:`synth_generate`.

    ``hazard="exponential"`` uses the constant baseline ``rate``;
    ``"piecewise"`` uses ``rates[k]`` on ``[breakpoints[k], breakpoints[k+1])``,
    the default being a bathtub shape. ``coef`` gives the log-hazard effect of
    each covariate (``None`` draws them from N(0, 0.5^2)).
    """

    n: int = 1000
    n_covariates: int = 3
    hazard: str = "exponential"
    rate: float = 0.1
    breakpoints: tuple[float, ...] = (0.0, 3.0, 20.0)
    rates: tuple[float, ...] = (0.25, 0.03, 0.2)
    coef: tuple[float, ...] | None = None
    censoring_rate: float = 0.3
    seed: int = 0

    def validate(self) -> None:
        if self.n < 1:
            raise ValidationError(f"n must be >= 1, got {self.n}")
        if self.n_covariates < 1:
            raise ValidationError("n_covariates must be >= 1")
        if not 0.0 <= self.censoring_rate < 1.0:
            raise ValidationError(f"censoring rate must lie in [0, 1), got {self.censoring_rate}")
        if self.hazard not in HAZARDS:
            raise ValidationError(f"hazard must be one of {HAZARDS}, got {self.hazard!r}")
        if self.hazard == "exponential" and not self.rate > 0:
            raise ValidationError("rate must be positive")
        if self.hazard == "piecewise":
            b, r = np.asarray(self.breakpoints), np.asarray(self.rates)
            if len(b) != len(r) or len(b) == 0 or b[0] != 0 or np.any(np.diff(b) <= 0):
                raise ValidationError("breakpoints must start at 0, increase, and match rates")
            if np.any(r <= 0):
                raise ValidationError("piecewise rates must be positive")
        if self.coef is not None and len(self.coef) != self.n_covariates:
            raise ValidationError("coef length must equal n_covariates")


def _invert_piecewise(target: np.ndarray, breakpoints, rates) -> np.ndarray:
    """Solve H(t) = target for a piecewise-constant hazard H' = rates."""
    b = np.asarray(breakpoints, dtype=float)
    r = np.asarray(rates, dtype=float)
    # cumulative hazard at each breakpoint
    H = np.concatenate([[0.0], np.cumsum(r[:-1] * np.diff(b))])
    k = np.searchsorted(H, target, side="right") - 1
    return b[k] + (target - H[k]) / r[k]


def _censoring_scale(times: np.ndarray, target: float) -> float:
    """Exponential censoring rate giving mean P(C < T_i) equal to ``target``."""

    def excess(log_mu: float) -> float:
        return float(np.mean(-np.expm1(-np.exp(log_mu) * times))) - target

    lo, hi = -30.0, 30.0
    if excess(hi) < 0:
        # target unreachable (many zero times); censor as hard as possible
        return float(np.exp(hi))
    return float(np.exp(brentq(excess, lo, hi, xtol=1e-12)))


def synth_generate(config: SynthConfig) -> SurvivalDataset:
    config.validate()
    rng = np.random.default_rng(config.seed)
    p = config.n_covariates
    X = rng.standard_normal((config.n, p))
    coef = (
        np.asarray(config.coef, dtype=float)
        if config.coef is not None
        else rng.normal(0.0, 0.5, size=p)
    )
    risk = np.exp(X @ coef)
    target = rng.exponential(1.0, size=config.n) / risk
    if config.hazard == "exponential":
        event_time = target / config.rate
    else:
        event_time = _invert_piecewise(target, config.breakpoints, config.rates)

    if config.censoring_rate > 0:
        mu = _censoring_scale(event_time, config.censoring_rate)
        cens_time = rng.exponential(1.0 / mu, size=config.n)
    else:
        cens_time = np.full(config.n, np.inf)
    event = (event_time <= cens_time).astype(np.int64)
    observed = np.where(event == 1, event_time, cens_time)
    return SurvivalDataset(
        X=X,
        time=observed,
        event=event,
        covariate_names=tuple(f"x{i}" for i in range(p)),
        covariate_kinds=(CONTINUOUS,) * p,
    )
