"""Water-filling and the uplink-sum lower bound on weighted sum download time.

Every allocator in the package reduces to one primitive: given weights
``W``, per-peer ceilings and a rate budget, find the level ``R`` such that
``sum_i min(sqrt(W_i) R, cap_i)`` meets the budget. The function is
piecewise linear and nondecreasing in ``R``, so it is solved exactly by
sorting its breakpoints; no iteration is involved.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import Network


@dataclass(frozen=True)
class WaterfillSolution:
    level: float
    rates: np.ndarray
    capped: np.ndarray

    @property
    def total(self) -> float:
        return float(self.rates.sum())


def _as_array(x: Sequence[float] | np.ndarray) -> np.ndarray:
    return np.asarray(x, dtype=float).reshape(-1)


def waterfill(
    weights: Sequence[float],
    caps: Sequence[float],
    budget: float,
    floors: Sequence[float] | None = None,
) -> WaterfillSolution:
    """Solve ``sum_i clip(sqrt(W_i) R, floor_i, cap_i) = budget`` for the level ``R``.

    Without ``floors`` this is the plain form ``min(sqrt(W_i) R, cap_i)``.
    Zero-weight peers sit at their floor (0 by default). If the budget exceeds
    what the positive-weight peers can absorb, every one of them is capped and
    ``R`` is the smallest level that does so.
    """
    w, cap = _as_array(weights), _as_array(caps)
    if w.shape != cap.shape:
        raise ValueError("weights and caps must have the same length")
    lo = np.zeros_like(cap) if floors is None else _as_array(floors)
    if lo.shape != cap.shape:
        raise ValueError("floors must match caps")
    if np.any(w < 0) or np.any(cap < 0) or np.any(lo < 0) or budget < 0:
        raise ValueError("weights, caps, floors and budget must be nonnegative")
    if np.any(lo > cap * (1 + 1e-12) + 1e-300):
        raise ValueError("floor above cap")
    lo = np.minimum(lo, cap)

    sw = np.sqrt(w)
    active = sw > 0
    base = float(lo.sum())
    reachable = base + float((cap[active] - lo[active]).sum())
    if budget < base * (1 - 1e-12) - 1e-300:
        raise ValueError(f"budget {budget} below the sum of floors {base}")
    target = min(budget, reachable)

    if not active.any():
        return WaterfillSolution(0.0, lo.copy(), np.zeros_like(cap, dtype=bool))

    start = lo[active] / sw[active]
    stop = cap[active] / sw[active]
    if target >= reachable:
        level = float(stop.max())
    else:
        pos = np.concatenate([start, stop])
        delta = np.concatenate([sw[active], -sw[active]])
        order = np.argsort(pos, kind="stable")
        pos, delta = pos[order], delta[order]
        slope = np.cumsum(delta)
        # value of the sum at each breakpoint
        vals = base + np.concatenate([[0.0], np.cumsum(slope[:-1] * np.diff(pos))])
        k = int(np.searchsorted(vals, target, side="left"))
        if k == 0:
            level = 0.0 if target <= base else float(pos[0])
        else:
            s = slope[k - 1]
            level = float(pos[k - 1] + (target - vals[k - 1]) / s) if s > 0 else float(pos[k - 1])

    rates = np.where(active, np.clip(sw * level, lo, cap), lo)
    capped = active & (sw * level >= cap)
    return WaterfillSolution(level, rates, capped)


def waterfill_minus_max(
    weights: Sequence[float],
    caps: Sequence[float],
    total: float,
) -> WaterfillSolution:
    """Water-fill whose budget is ``total - max_k rate_k``.

    Equivalently, find ``R`` with ``h(R) = sum_i r_i(R) + max_i r_i(R) = total``
    where ``r_i(R) = min(sqrt(W_i) R, cap_i)``. ``h`` is nondecreasing and
    piecewise linear with kinks at ``cap_i / sqrt(W_i)``; between two kinks
    the capped set is fixed and the max is either the largest capped rate or
    the steepest free one, so each piece is solved in closed form.
    """
    w, cap = _as_array(weights), _as_array(caps)
    if w.shape != cap.shape:
        raise ValueError("weights and caps must have the same length")
    if np.any(w < 0) or np.any(cap < 0):
        raise ValueError("weights and caps must be nonnegative")
    sw = np.sqrt(w)
    active = sw > 0
    if total <= 0 or not active.any():
        return waterfill(w, cap, 0.0)

    knee = np.full_like(cap, np.inf)
    knee[active] = cap[active] / sw[active]
    kinks = np.unique(knee[active])

    def h(level: float) -> float:
        r = np.where(active, np.minimum(sw * level, cap), 0.0)
        return float(r.sum() + r.max())

    values = np.array([h(k) for k in kinks])
    if values[-1] <= total:
        level = float(kinks[-1])
    else:
        k = int(np.searchsorted(values, total, side="left"))
        lo = float(kinks[k - 1]) if k > 0 else 0.0
        hi = float(kinks[k])
        # on (lo, hi) a peer is capped iff its kink is <= lo
        capped = active & (knee <= lo)
        free = active & ~capped
        base = float(cap[capped].sum())
        top = float(cap[capped].max()) if capped.any() else 0.0
        slope, steep = float(sw[free].sum()), float(sw[free].max())
        level = (total - base - top) / slope
        if steep * level > top:
            level = (total - base) / (slope + steep)
        level = min(max(level, lo), hi)

    rates = np.where(active, np.minimum(sw * level, cap), 0.0)
    return WaterfillSolution(level, rates, active & (knee <= level))


def wsdt(flow_rates: Sequence[float], weights: Sequence[float], file_size: float = 1.0) -> float:
    """``sum_i W_i B / r_i``; zero-weight peers contribute 0 even at rate 0.

    Returns ``inf`` when a positive-weight peer has zero rate.
    """
    r, w = _as_array(flow_rates), _as_array(weights)
    if r.shape != w.shape:
        raise ValueError("flow rates and weights must have the same length")
    pos = w > 0
    if np.any(r[pos] <= 0):
        return math.inf
    return float(np.sum(w[pos] * file_size / r[pos]))


@dataclass(frozen=True)
class LowerBound:
    rates: np.ndarray
    value: float
    level: float

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.value)


def wsdt_lower_bound(network: Network) -> LowerBound:
    """Relaxed optimum: water-fill under ``r_i <= min(D_i, U_s)``, ``sum r_i <= U_s + sum U_i``.

    The relaxation keeps only cut constraints, so the value bounds every
    static allocation from below.
    """
    sol = waterfill(network.weights, network.effective_downlinks(), network.total_uplink)
    value = wsdt(sol.rates, network.weights, network.file_size)
    return LowerBound(sol.rates, value, sol.level)
