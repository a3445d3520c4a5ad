"""Optimal stopping for trips with exponentially distributed task costs.

A trip is summarised by ``(p, q)``: resource left and gain collected since the
last base visit.  For a priority class with gain ratio ``mu`` and rate
``lam = 1/mean_cost`` the one-stage-look-ahead rule says another task is worth
attempting while ``q < g(p)`` with

    g(p) = mu / lam * (exp(lam * p) - 1 - lam * p).
"""

from __future__ import annotations

import enum
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import _kernels


@dataclass(frozen=True)
class PriorityClass:
    level: int
    gain_ratio: float
    mean_cost: float

    def __post_init__(self):
        if self.level < 1:
            raise ValueError(f"priority level must be >= 1, got {self.level}")
        if not self.gain_ratio > 0:
            raise ValueError(f"gain ratio must be positive, got {self.gain_ratio}")
        if not self.mean_cost > 0:
            raise ValueError(f"mean cost must be positive, got {self.mean_cost}")

    @property
    def rate(self) -> float:
        return 1.0 / self.mean_cost


def sorted_classes(classes) -> tuple[PriorityClass, ...]:
    """Normalise a mapping or iterable of classes; checks gain ratios increase
    with level."""
    if isinstance(classes, Mapping):
        classes = classes.values()
    out = tuple(sorted(classes, key=lambda c: c.level))
    levels = [c.level for c in out]
    if len(set(levels)) != len(levels):
        raise ValueError(f"duplicate priority levels: {levels}")
    for lo, hi in zip(out, out[1:]):
        if not lo.gain_ratio < hi.gain_ratio:
            raise ValueError(
                f"gain ratio must increase with level: mu({lo.level})={lo.gain_ratio} "
                f">= mu({hi.level})={hi.gain_ratio}"
            )
    return out


@dataclass(frozen=True)
class TripState:
    p: float
    q: float = 0.0


def boundary(p: float, cls: PriorityClass) -> float:
    """Gain threshold ``g(p, s)`` above which the trip should end."""
    if p < 0:
        raise ValueError(f"resource must be nonnegative, got {p}")
    try:
        return float(_kernels.boundary_scalar(float(p), cls.gain_ratio, cls.rate))
    except OverflowError:
        return math.inf


def log_boundary(p: float, cls: PriorityClass) -> float:
    """``log g(p, s)`` without overflow for large ``lam * p``."""
    u = cls.rate * p
    if u > 30.0:
        core = u + math.log1p(-(1.0 + u) * math.exp(-u))
    else:
        core = math.log(_kernels.boundary_scalar(u, 1.0, 1.0))
    return math.log(cls.gain_ratio / cls.rate) + core


def is_level_feasible(state: TripState, cls: PriorityClass) -> bool:
    """True when the trip state lies strictly below the class boundary.

    Sitting exactly on the boundary counts as a stop.
    """
    return state.p > 0 and state.q < boundary(state.p, cls)


def select_level(state: TripState, classes, available, start_level: int | None = None) -> int:
    """Highest level worth attempting, or 0 to return to base.

    ``available(level)`` says whether pending tasks of that level exist.  An
    infeasible level lets the descent skip every lower level whose mean cost is
    at least as large, since those boundaries lie entirely below it.
    """
    classes = sorted_classes(classes)
    levels = [c.level for c in classes]
    if start_level is None:
        s = len(classes) - 1
    else:
        s = max((k for k, lv in enumerate(levels) if lv <= start_level), default=-1)
    while s >= 0:
        cls = classes[s]
        if is_level_feasible(state, cls):
            if available(cls.level):
                return cls.level
            s -= 1
        else:
            while s > 0 and classes[s - 1].mean_cost >= classes[s].mean_cost:
                s -= 1
            s -= 1
    return 0


def sample_q1(state: TripState, start_level: int, tasks: Iterable, classes):
    """Candidate set for the next task: all pending tasks of the highest
    feasible level at or below ``start_level``.

    Returns ``(tasks, level)``; ``(set(), 0)`` means the trip should end.
    """
    by_level: dict[int, list] = {}
    for t in tasks:
        if t.pending:
            by_level.setdefault(t.level, []).append(t)
    level = select_level(state, classes, lambda s: bool(by_level.get(s)), start_level)
    if level == 0:
        return set(), 0
    return set(by_level[level]), level


class BoundaryKind(enum.Enum):
    LEMMA1_DOMINATED = "lemma1_dominated"
    CONDITION1 = "condition1"
    CONDITION2 = "condition2"


@dataclass(frozen=True)
class BoundaryRelation:
    kind: BoundaryKind
    crossing_p0: float | None = None


def classify_boundaries(low: PriorityClass, high: PriorityClass) -> BoundaryRelation:
    """How the boundary curves of two classes relate.

    With ``mean(low) >= mean(high)`` the high curve lies above everywhere.
    Otherwise either the high curve stays below for all ``p > 0``
    (condition 1) or it starts above and crosses once at ``p0`` (condition 2).
    """
    if not low.level < high.level:
        raise ValueError(f"need low.level < high.level, got {low.level} and {high.level}")
    if not low.gain_ratio < high.gain_ratio:
        raise ValueError("need mu(low) < mu(high)")
    if low.mean_cost >= high.mean_cost:
        return BoundaryRelation(BoundaryKind.LEMMA1_DOMINATED)

    def diff(p):
        return log_boundary(p, high) - log_boundary(p, low)

    lo = 1e-9 * min(low.mean_cost, high.mean_cost)
    hi = 200.0 * max(low.mean_cost, high.mean_cost)
    f_lo, f_hi = diff(lo), diff(hi)
    if f_lo >= 0 > f_hi:
        p0 = brentq(diff, lo, hi, xtol=1e-14, rtol=1e-12, maxiter=500)
        return BoundaryRelation(BoundaryKind.CONDITION2, float(p0))
    return BoundaryRelation(BoundaryKind.CONDITION1)


# -- dynamic-programming oracle --------------------------------------------


def dp_values(states, classes, grid_step: float, q_grid_step: float | None = None) -> np.ndarray:
    """Discretised expected-return function at several ``(p, q)`` states.

    The recursion always keeps the option to stop and bank ``q``.  ``p`` values
    must be multiples of ``grid_step``.  One class is solved exactly on the
    lattice ``q + mu*p = const``; several classes use a ``q`` grid with linear
    interpolation (and treat ``q`` above the grid as a stopping state).
    """
    classes = sorted_classes(classes)
    states = [(float(p), float(q)) for p, q in states]
    idx = []
    for p, _ in states:
        i = round(p / grid_step)
        if p < 0 or abs(i * grid_step - p) > 1e-9 * max(1.0, p):
            raise ValueError(f"p={p} is not on the grid of step {grid_step}")
        idx.append(i)
    if len(classes) == 1:
        cls = classes[0]
        totals = np.array([q + cls.gain_ratio * i * grid_step for (_, q), i in zip(states, idx)])
        phi = _kernels.dp_diagonals(totals, cls.gain_ratio, cls.rate, grid_step, max(idx, default=0))
        return np.array([phi[r, i] for r, i in enumerate(idx)])
    return _dp_multi(states, idx, classes, grid_step, q_grid_step)


def _dp_multi(states, idx, classes, h, dq):
    imax = max(idx, default=0)
    pmax = imax * h
    qs = [q for _, q in states]
    q_top = max(qs, default=0.0) + max(c.gain_ratio for c in classes) * pmax
    q_top = max(q_top, max(boundary(pmax, c) for c in classes)) + h
    q_lo = min(qs, default=0.0)
    dq = dq or h
    qgrid = np.arange(q_lo, q_top + dq, dq)
    phi = np.empty((imax + 1, len(qgrid)))
    phi[0] = qgrid
    for i in range(1, imax + 1):
        best = qgrid.copy()
        for c in classes:
            lam = c.rate
            j = np.arange(1, i + 1)
            # probability mass of each cost cell, value read at its right end
            w = np.exp(-lam * (j - 1) * h) - np.exp(-lam * j * h)
            acc = np.zeros(len(qgrid))
            for jj, wj in zip(j, w):
                qq = qgrid + c.gain_ratio * jj * h
                # above the grid every class says stop, so the value is qq
                acc += wj * np.where(qq > qgrid[-1], qq, np.interp(qq, qgrid, phi[i - jj]))
            best = np.maximum(best, acc)
        phi[i] = best
    out = []
    for (p, q), i in zip(states, idx):
        out.append(float(np.interp(q, qgrid, phi[i])))
    return np.array(out)


def dp_value_oracle(state: TripState, classes, grid_step: float) -> float:
    """Expected return from ``state`` under optimal play, by discretised DP.

    Only for testing the stopping rule; planners never call it.
    """
    if state.p <= 0:
        return float(state.q)
    return float(dp_values([(state.p, state.q)], classes, grid_step)[0])
