"""Hot loops, compiled with numba when available.

Set ``SAGPLAN_NUMBA=0`` to force the pure numpy implementations.  Both paths
consume the same pre-drawn random numbers, so they agree on every trial.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:  # pragma: no cover - exercised through the env flag
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and os.environ.get("SAGPLAN_NUMBA", "1") not in ("0", "false", "no")

# below this lambda*p the closed form loses digits to cancellation
_SERIES_CUTOFF = 1e-3


def _boundary(p, mu, lam):
    u = lam * p
    if u < _SERIES_CUTOFF:
        core = u * u * (0.5 + u * (1.0 / 6.0 + u * (1.0 / 24.0 + u / 120.0)))
    else:
        core = math.expm1(u) - u
    return mu / lam * core


def _select_level(p, q, mus, lams, means, avail, start):
    # Priority descent with the dominated-level skip; classes sorted by level.
    # Returns the class index to work on, or -1 to stop.
    s = min(start, len(mus) - 1)
    while s >= 0:
        if p > 0.0 and q < _boundary(p, mus[s], lams[s]):
            if avail[s]:
                return s
            s -= 1
        else:
            while s > 0 and means[s - 1] >= means[s]:
                s -= 1
            s -= 1
    return -1


def _phase1_trials_py(budget, mus, means, draws):
    lams = 1.0 / means
    n_trials, width = draws.shape
    aborted = np.zeros(n_trials, dtype=np.bool_)
    attempts = np.zeros(n_trials, dtype=np.int64)
    avail = np.ones(len(mus), dtype=np.bool_)
    top = len(mus) - 1
    for t in range(n_trials):
        p = budget
        q = 0.0
        k = 0
        while True:
            s = _select_level(p, q, mus, lams, means, avail, top)
            if s < 0:
                break
            if k >= width:
                attempts[t] = -1
                break
            cost = draws[t, k] * means[s]
            k += 1
            if cost <= p:
                p -= cost
                q += mus[s] * cost
            else:
                aborted[t] = True
                break
        if attempts[t] >= 0:
            attempts[t] = k
    return aborted, attempts


def _phase1_trials_np(budget, mus, means, draws):
    """Same policy, advanced for all trials in lock-step with array ops."""
    lams = 1.0 / means
    n_trials, width = draws.shape
    n_cls = len(mus)
    p = np.full(n_trials, float(budget))
    q = np.zeros(n_trials)
    alive = np.ones(n_trials, dtype=bool)
    aborted = np.zeros(n_trials, dtype=bool)
    attempts = np.zeros(n_trials, dtype=np.int64)
    mus = np.asarray(mus, dtype=float)
    for k in range(width):
        if not alive.any():
            break
        idx = np.flatnonzero(alive)
        pa, qa = p[idx], q[idx]
        # per-class feasibility
        u = lams[None, :] * pa[:, None]
        series = u * u * (0.5 + u * (1.0 / 6.0 + u * (1.0 / 24.0 + u / 120.0)))
        with np.errstate(over="ignore"):
            core = np.where(u < _SERIES_CUTOFF, series, np.expm1(u) - u)
        g = (mus / lams)[None, :] * core
        feas = (pa[:, None] > 0.0) & (qa[:, None] < g)
        level = np.full(len(idx), -1)
        active = np.ones(len(idx), dtype=bool)
        s = np.full(len(idx), n_cls - 1)
        # walk down the levels; at most n_cls rounds of the skip rule
        for _ in range(n_cls + 1):
            if not active.any():
                break
            rows = np.flatnonzero(active & (s >= 0))
            active[active & (s < 0)] = False
            if rows.size == 0:
                break
            ok = feas[rows, s[rows]]
            level[rows[ok]] = s[rows[ok]]
            active[rows[ok]] = False
            bad = rows[~ok]
            for r in bad:
                ss = s[r]
                while ss > 0 and means[ss - 1] >= means[ss]:
                    ss -= 1
                s[r] = ss - 1
        stop = level < 0
        alive[idx[stop]] = False
        go = idx[~stop]
        lv = level[~stop]
        cost = draws[go, k] * means[lv]
        attempts[go] += 1
        fits = cost <= p[go]
        ok_idx = go[fits]
        p[ok_idx] -= cost[fits]
        q[ok_idx] += mus[lv[fits]] * cost[fits]
        fail = go[~fits]
        aborted[fail] = True
        alive[fail] = False
    attempts[alive] = -1
    return aborted, attempts


def _dp_diagonals_py(totals, mu, lam, h, imax):
    """Value along diagonals ``q + mu*p = total`` for a single class.

    Piecewise-linear interpolation of the value in ``p`` integrated exactly
    against the exponential density; the geometric kernel lets the history sum
    be carried forward in O(1) per step.
    """
    d = len(totals)
    phi = np.empty((d, imax + 1))
    z = lam * h
    ez = math.exp(-z)
    e_all = -math.expm1(-z)
    a0 = (e_all - z * ez) / z
    b0 = e_all - a0
    w_hist = a0 / ez + b0
    for r in range(d):
        t = totals[r]
        phi[r, 0] = t
        hist = 0.0
        first = phi[r, 0]
        decay0 = 1.0
        for i in range(1, imax + 1):
            if i >= 2:
                hist = ez * (hist + phi[r, i - 1])
            rest = w_hist * hist + a0 * decay0 * first
            decay0 *= ez
            cont = rest / (1.0 - b0)
            stop = t - mu * i * h
            phi[r, i] = cont if cont > stop else stop
    return phi


def _dp_diagonals_np(totals, mu, lam, h, imax):
    totals = np.asarray(totals, dtype=float)
    phi = np.empty((len(totals), imax + 1))
    z = lam * h
    ez = math.exp(-z)
    e_all = -math.expm1(-z)
    a0 = (e_all - z * ez) / z
    b0 = e_all - a0
    w_hist = a0 / ez + b0
    phi[:, 0] = totals
    hist = np.zeros(len(totals))
    decay0 = 1.0
    for i in range(1, imax + 1):
        if i >= 2:
            hist = ez * (hist + phi[:, i - 1])
        rest = w_hist * hist + a0 * decay0 * phi[:, 0]
        decay0 *= ez
        cont = rest / (1.0 - b0)
        phi[:, i] = np.maximum(cont, totals - mu * i * h)
    return phi


boundary_scalar = _boundary
select_level_scalar = _select_level

if USE_NUMBA:
    _boundary = numba.njit(cache=True)(_boundary)
    _select_level = numba.njit(cache=True)(_select_level)
    phase1_trials = numba.njit(cache=True)(_phase1_trials_py)
    dp_diagonals = numba.njit(cache=True)(_dp_diagonals_py)
else:
    phase1_trials = _phase1_trials_np
    dp_diagonals = _dp_diagonals_np

# always-available references for benchmarking and cross-checks
phase1_trials_numpy = _phase1_trials_np
dp_diagonals_numpy = _dp_diagonals_np
