"""Slow, obviously-correct reference implementations used only by the tests."""
import itertools
import math

import numpy as np


def waterfill_bisect(weights, caps, budget, iters=200):
    """Level R of sum_i min(sqrt(W_i) R, cap_i) = min(budget, reachable), by bisection."""
    sw = np.sqrt(np.asarray(weights, float))
    cap = np.asarray(caps, float)
    reach = float(cap[sw > 0].sum())
    target = min(budget, reach)

    def f(r):
        return float(np.minimum(sw * r, cap).sum())

    if target <= 0 or not (sw > 0).any():
        return 0.0, np.zeros_like(cap)
    hi = 1.0
    while f(hi) < target and hi < 1e300:
        hi *= 2
    lo = 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
    return hi, np.minimum(sw * hi, cap)


def minus_max_bisect(weights, caps, total, iters=300):
    """Rates with sum + max = total, by bisection on the level R directly."""
    sw = np.sqrt(np.asarray(weights, float))
    cap = np.asarray(caps, float)

    def g(r):
        rates = np.minimum(sw * r, cap)
        return float(rates.sum() + rates.max())

    reach = g(1e300)
    if reach <= total:
        return np.minimum(sw * 1e300, cap)
    lo, hi = 0.0, 1.0
    while g(hi) < total:
        hi *= 2
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if g(mid) < total:
            lo = mid
        else:
            hi = mid
    return np.minimum(sw * hi, cap)


def min_cut_enumerate(n_vertices, edges, s, t):
    """Minimum s-t cut over every vertex bipartition; ``edges`` maps (u, v) -> capacity."""
    others = [v for v in range(n_vertices) if v not in (s, t)]
    best = math.inf
    for bits in itertools.product((0, 1), repeat=len(others)):
        side = {s} | {v for v, b in zip(others, bits) if b}
        cut = sum(c for (u, v), c in edges.items() if u in side and v not in side)
        best = min(best, cut)
    return best
