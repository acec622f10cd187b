"""Static rate allocators built from depth-1 and depth-2 trees.

* :func:`mutualcast` delivers one common rate to every peer.
* :func:`extended_mutualcast` stacks Mutualcast runs on nested peer suffixes
  so each peer gets ``min(R, D~_i)``; this minimises the unweighted sum of
  download times.
* :func:`depth2_rateless` handles arbitrary weights: a water-filled target
  sets the depth-2 relay rates, leftover source uplink goes to a depth-1
  water-fill.
* :func:`routing_based` is the same construction restricted so that plain
  chunk routing (no coding) suffices, at the cost of some wasted uplink.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bound import waterfill, waterfill_minus_max, wsdt
from .model import TOL, Network, RateAllocation

__all__ = [
    "Depth2Allocation",
    "MutualcastError",
    "depth2_rateless",
    "extended_mutualcast",
    "max_common_rate",
    "mutualcast",
    "routing_based",
    "wsdt",
]


class MutualcastError(ValueError):
    """Requested broadcast rate exceeds what the network can carry."""


@dataclass
class Depth2Allocation:
    """Result of the depth-2 allocators.

    ``flow_rates`` is what each peer can actually decode. For the routing
    scheme this is the effective rate, which can be below the download rate
    (``download_rates``) because relayed chunks a peer does not keep are lost.
    """

    allocation: RateAllocation
    flow_rates: np.ndarray
    tilde_rates: np.ndarray
    c: float
    alpha: float
    beta: np.ndarray
    download_rates: np.ndarray
    wasted_uplink: float = 0.0
    delegated: bool = False
    order: tuple[int, ...] | None = None

    def wsdt(self, weights: Sequence[float], file_size: float = 1.0) -> float:
        return wsdt(self.flow_rates, weights, file_size)


def max_common_rate(network: Network) -> float:
    """Largest rate Mutualcast can deliver to all peers at once."""
    return float(min(network.source_uplink, network.total_uplink / network.n, network.downlinks.min()))


def _mutualcast_pass(alloc, up_res, down_res, members, rate):
    """One run of the download-constrained Mutualcast on ``members``; mutates its inputs.

    Returns the source uplink consumed.
    """
    m = len(members)
    remaining = rate
    used = 0.0
    r = alloc.rates
    for i in members:
        share = up_res[i] / (m - 1) if m > 1 else 0.0
        a = max(0.0, min(remaining, down_res[i], share))
        if a > 0:
            r[i, members] += a
            alloc.source_depth2[i] += a
            up_res[i] -= (m - 1) * a
            down_res[members] -= a
            remaining -= a
            used += a
    if remaining > 0:
        # leftover goes straight from the source to every member, not relayed
        r[members, members] += remaining
        alloc.source_depth1[members] += remaining
        down_res[members] -= remaining
        used += m * remaining
    return used


def mutualcast(network: Network, rate: float, order: Sequence[int] | None = None) -> RateAllocation:
    """Deliver ``rate`` to every peer using depth-2 trees, then direct depth-1 top-up.

    Peer ``i`` first receives ``min(R, D_i, U_i/(N-1))`` from the source and
    relays it to all others; whatever rate is still missing is sent by the
    source directly to each peer.
    """
    ceiling = max_common_rate(network)
    if rate < 0:
        raise MutualcastError(f"rate must be nonnegative, got {rate}")
    if rate > ceiling + TOL * max(1.0, ceiling):
        raise MutualcastError(f"rate {rate} above the feasible ceiling {ceiling}")
    n = network.n
    members = np.array(range(n) if order is None else list(order), dtype=int)
    if sorted(members.tolist()) != list(range(n)):
        raise ValueError("order must be a permutation of the peers")
    alloc = RateAllocation.zeros(n)
    _mutualcast_pass(alloc, network.uplinks, np.minimum(network.downlinks, network.source_uplink), members, min(rate, ceiling))
    return alloc


def extended_mutualcast(network: Network) -> tuple[RateAllocation, np.ndarray]:
    """Sum-download-time-optimal static allocation and its flow rates.

    With ``D~`` sorted ascending and ``R`` the unit-weight water level, step
    ``k`` runs Mutualcast at rate ``min(R, D~_k) - min(R, D~_(k-1))`` over
    peers ``k..N``. Each peer ends at flow rate ``min(R, D~_i)``.
    """
    n = network.n
    cap = network.effective_downlinks()
    sol = waterfill(np.ones(n), cap, network.total_uplink)
    order = np.argsort(cap, kind="stable")
    levels = np.minimum(cap[order], sol.level)
    steps = np.diff(np.concatenate([[0.0], levels]))

    alloc = RateAllocation.zeros(n)
    up_res = network.uplinks.copy()
    down_res = cap.copy()
    for k, delta in enumerate(steps):
        if delta > 0:
            _mutualcast_pass(alloc, up_res, down_res, order[k:], float(delta))
    return alloc, sol.rates.copy()


def _depth2_trees(network: Network, tilde: np.ndarray, download_cap: np.ndarray, trim: bool = False):
    """Depth-2 relay rates for water-filled targets ``tilde``, scaled by the largest feasible ``c``.

    With ``trim`` the downlink limits do not shrink ``c`` for everyone:
    ``c`` only respects the source uplink and each relay's own stream, and a
    peer whose download would overflow has just its incoming relays cut back.
    """
    up = network.uplinks
    total = float(tilde.sum())
    peak = float(tilde.max()) if tilde.size else 0.0
    denom = total - tilde
    ok = denom > 1e-12 * max(total, 1e-300)
    g = np.where(ok, up / np.where(ok, denom, 1.0), 0.0)
    alpha = float(g.sum())
    # per-unit-c download rate: own depth-2 stream plus everything relayed in
    beta_unit = g * peak + tilde * (alpha - g)

    c = 1.0
    if alpha * peak > 0:
        c = min(c, network.source_uplink / (alpha * peak))
    bound = g * peak if trim else beta_unit
    pos = bound > 0
    if pos.any():
        c = min(c, float(np.min(download_cap[pos] / bound[pos])))
    c = max(c, 0.0)

    relays = c * np.outer(g, tilde)
    np.fill_diagonal(relays, 0.0)
    depth2 = c * g * peak
    if trim:
        inflow = relays.sum(axis=0)
        room = np.maximum(download_cap - depth2, 0.0)
        over = inflow > room
        scale = np.ones_like(inflow)
        scale[over] = room[over] / inflow[over]
        relays *= scale[None, :]
    return c, alpha, depth2, relays, depth2 + relays.sum(axis=0), g


def _delegate(network: Network) -> Depth2Allocation:
    alloc, flows = extended_mutualcast(network)
    down = alloc.download_rates()
    return Depth2Allocation(
        allocation=alloc,
        flow_rates=flows,
        tilde_rates=flows.copy(),
        c=1.0,
        alpha=0.0,
        beta=down.copy(),
        download_rates=down,
        delegated=True,
    )


def _abundant(network: Network) -> bool:
    return network.total_uplink >= float(network.effective_downlinks().sum())


def depth2_rateless(network: Network) -> Depth2Allocation:
    """Rateless-coding allocation for arbitrary weights and downlinks.

    When total uplink covers every ``min(D_i, U_s)`` this is Extended
    Mutualcast. Otherwise the targets ``r~`` water-fill the budget
    ``U_s + sum U - max r~``; the depth-2 trees are sized from ``r~`` and the
    remaining source uplink is water-filled over depth-1 trees with each
    peer's depth-2 rate as a floor. A peer whose downlink would overflow has
    its incoming relays trimmed rather than shrinking every tree. Every peer
    ends with rate at least ``r~_i``.
    """
    if _abundant(network):
        return _delegate(network)
    w, cap = network.weights, network.effective_downlinks()
    tilde = waterfill_minus_max(w, cap, network.total_uplink).rates
    c, alpha, depth2, relays, beta, _ = _depth2_trees(network, tilde, cap, trim=True)
    beta = np.minimum(beta, cap)

    leftover = max(network.source_uplink - float(depth2.sum()), 0.0)
    top = waterfill(w, cap, float(beta.sum()) + leftover, floors=beta)
    depth1 = np.maximum(top.rates - beta, 0.0)

    rates = relays.copy()
    rates[np.diag_indices_from(rates)] = depth1 + depth2
    alloc = RateAllocation(rates, depth1, depth2)
    flows = beta + depth1
    return Depth2Allocation(alloc, flows, tilde, c, alpha, beta, alloc.download_rates())


def _tilde_order(tilde: np.ndarray) -> list[int]:
    return sorted(range(tilde.size), key=lambda i: (-tilde[i], i))


def routing_based(network: Network, order: Sequence[int] | None = None) -> Depth2Allocation:
    """Depth-2 allocation whose chunks can be routed without coding.

    Peers finish in decreasing order of the target rates ``r~``. Each peer
    keeps only the chunks it forwards to its predecessor in that order, so
    part of its download is wasted; ``flow_rates`` holds the effective rate
    and ``wasted_uplink`` the total loss. Depth-1 rates are nonincreasing
    along the finish order and use the running minimum of weights and of
    downlink headroom.
    """
    if _abundant(network):
        out = _delegate(network)
        out.order = tuple(np.argsort(-out.flow_rates, kind="stable").tolist())
        return out
    w, cap = network.weights, network.effective_downlinks()
    tilde = waterfill_minus_max(w, cap, network.total_uplink).rates
    natural = _tilde_order(tilde)
    seq = natural if order is None else [int(k) for k in order]
    if sorted(seq) != list(range(network.n)):
        raise ValueError("order must be a permutation of the peers")
    if np.any(np.diff(tilde[seq]) > 1e-12 * max(1.0, float(tilde.max()))):
        raise ValueError("order must sort the target rates in decreasing order")

    c, alpha, depth2, relays, download, g = _depth2_trees(network, tilde, cap)
    t = tilde[seq]
    prev = np.concatenate([[t[0]], t[:-1]])
    gs = g[seq]
    effective = np.empty(network.n)
    effective[seq] = c * (alpha * t + (prev - t) * gs)
    wasted = float(c * np.sum((t[0] - prev) * gs))

    leftover = max(network.source_uplink - float(depth2.sum()), 0.0)
    depth1 = np.zeros(network.n)
    depth1[seq] = _monotone_depth1(
        np.sqrt(np.minimum.accumulate(w[seq])),
        effective[seq],
        np.maximum(np.minimum.accumulate(cap[seq] - download[seq]), 0.0),
        leftover,
    )

    rates = relays.copy()
    rates[np.diag_indices_from(rates)] = depth1 + depth2
    alloc = RateAllocation(rates, depth1, depth2)
    return Depth2Allocation(
        alloc,
        effective + depth1,
        tilde,
        c,
        alpha,
        effective,
        alloc.download_rates(),
        wasted_uplink=wasted,
        order=tuple(seq),
    )


def _monotone_depth1(sw: np.ndarray, floor: np.ndarray, headroom: np.ndarray, budget: float) -> np.ndarray:
    """Nonincreasing depth-1 rates ``clip(sqrt(W^) R - beta, 0, D^)`` summing to ``budget``.

    Inputs are already in finish order. The running minimum keeps the
    sequence nonincreasing; the total is monotone in ``R``, so bisection finds
    the level.
    """
    def at(level: float) -> np.ndarray:
        return np.minimum.accumulate(np.clip(sw * level - floor, 0.0, headroom))

    if budget <= 0 or not np.any(sw > 0):
        return np.zeros_like(floor)
    full = at(math.inf) if np.all(sw > 0) else np.minimum.accumulate(np.where(sw > 0, headroom, 0.0))
    if full.sum() <= budget:
        return full
    lo, hi = 0.0, 1.0
    while at(hi).sum() < budget:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if at(mid).sum() < budget:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return at(hi)
