"""Pure numpy implementations of the hot loops (fallback backend).

Every function here has a twin with the same signature in ``_ckernels.pyx``.
"""

from __future__ import annotations

import numpy as np

LOG_2PI = float(np.log(2.0 * np.pi))


def bayes_accumulate(
    x_events: np.ndarray, counts_upto: np.ndarray, sigma_floor: float
) -> np.ndarray:
    """Per-covariate log-space accumulators ``A[j, i]`` on the grid.

    ``x_events`` holds covariates of event records sorted by discretized time
    and ``counts_upto[j]`` is the number of those with time ``<= t_j``.
    """
    x_events = np.ascontiguousarray(x_events, dtype=np.float64)
    counts_upto = np.asarray(counts_upto, dtype=np.int64)
    n_steps = counts_upto.shape[0]
    p = x_events.shape[1]
    A = np.zeros((n_steps, p))
    if x_events.shape[0] == 0:
        return A

    # update steps (j >= 1): history grew since the last update; t_0 never updates
    seen = np.concatenate([[0, 0], counts_upto[1:-1]])[:n_steps]
    update = counts_upto > seen
    update[0] = False
    steps = np.flatnonzero(update)
    if steps.size == 0:
        return A
    ll = np.empty((steps.size, p))
    for k, j in enumerate(steps):
        n = int(counts_upto[j])
        hist = x_events[:n]
        M2 = np.sum((hist - hist.mean(axis=0)) ** 2, axis=0)
        sigma = np.maximum(np.sqrt(M2 / n), sigma_floor)
        ll[k] = 1.0 - 0.5 * n * (LOG_2PI + 2.0 * np.log(sigma)) - 0.5 * M2 / (sigma * sigma)

    incr = np.zeros((n_steps, p))
    incr[steps] = ll
    return np.cumsum(incr, axis=0)


def concordance_counts(
    surv: np.ndarray, tidx: np.ndarray, time: np.ndarray, event: np.ndarray
) -> tuple[float, float]:
    """Antolini concordance numerator and number of comparable pairs.

    Pair ``(i, j)`` is comparable when ``time[i] > time[j]`` and ``event[j]``;
    it is concordant when ``surv[j, tidx[j]] < surv[i, tidx[j]]``, ties count half.
    """
    surv = np.asarray(surv, dtype=np.float64)
    time = np.asarray(time, dtype=np.float64)
    tidx = np.asarray(tidx, dtype=np.int64)
    event = np.asarray(event)
    num = 0.0
    den = 0.0
    ev = np.flatnonzero(event == 1)
    if ev.size == 0:
        return 0.0, 0.0
    for tau in np.unique(time[ev]):
        group = ev[time[ev] == tau]
        later = time > tau
        n_later = int(later.sum())
        if n_later == 0:
            continue
        for k in np.unique(tidx[group]):
            members = group[tidx[group] == k]
            col = np.sort(surv[later, k])
            own = surv[members, k]
            below_or_eq = np.searchsorted(col, own, side="right")
            below = np.searchsorted(col, own, side="left")
            # comparators strictly greater than own -> concordant
            num += float(np.sum(n_later - below_or_eq) + 0.5 * np.sum(below_or_eq - below))
            den += float(n_later * members.size)
    return num, den


def auc_counts(
    risk: np.ndarray,
    time: np.ndarray,
    event: np.ndarray,
    weight: np.ndarray,
    t: float,
    strict: bool,
) -> tuple[float, float]:
    """IPCW cumulative/dynamic AUC numerator and denominator at time ``t``.

    Cases: ``time <= t`` with an event, weighted by ``weight``. Controls:
    ``time > t``. ``strict=False`` credits ``risk_ctrl <= risk_case`` fully;
    ``strict=True`` credits ``<`` fully and ties by half.
    """
    risk = np.asarray(risk, dtype=np.float64)
    time = np.asarray(time, dtype=np.float64)
    cases = (time <= t) & (np.asarray(event) == 1)
    ctrl = np.sort(risk[time > t])
    w = np.asarray(weight, dtype=np.float64)[cases]
    r = risk[cases]
    le = np.searchsorted(ctrl, r, side="right")
    if strict:
        lt = np.searchsorted(ctrl, r, side="left")
        hits = lt + 0.5 * (le - lt)
    else:
        hits = le
    return float(np.sum(w * hits)), float(ctrl.size * np.sum(w))
