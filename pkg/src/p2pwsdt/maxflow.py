"""Max-flow over rate graphs and time-expanded graphs.

A rate allocation induces a directed graph whose edges carry the allocated
rates. The information rate a peer can decode is the min cut between the
source and that peer. Stretching the graph over epochs (one copy per epoch,
memory edges linking a node's copies) turns rates into volumes and certifies
whether a whole vector of download times is simultaneously achievable.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

from .model import Network, RateAllocation

SOURCE = "s"

# residual capacities at or below this (relative to the largest capacity) are empty
_EPS = 1e-14


class GraphError(KeyError):
    """A vertex referenced by a flow query is not in the graph."""


@dataclass
class CapGraph:
    """Directed graph with at most one capacitated edge per ordered vertex pair.

    Capacities may be ``math.inf``; :func:`max_flow` replaces them with the sum
    of all finite capacities plus one, which no flow can reach.
    """

    vertices: list[Hashable] = field(default_factory=list)
    edges: dict[tuple[Hashable, Hashable], float] = field(default_factory=dict)

    def add_vertex(self, v: Hashable) -> None:
        if v not in self._index:
            self._index[v] = len(self.vertices)
            self.vertices.append(v)

    def add_edge(self, u: Hashable, v: Hashable, capacity: float) -> None:
        if capacity < 0 or math.isnan(capacity):
            raise ValueError(f"edge {u}->{v}: capacity must be >= 0, got {capacity}")
        if u == v:
            raise ValueError("self loops are not allowed")
        self.add_vertex(u)
        self.add_vertex(v)
        self.edges[(u, v)] = float(capacity)

    def __post_init__(self):
        self._index: dict[Hashable, int] = {}
        for v in list(self.vertices):
            self._index.setdefault(v, len(self._index))
        self.vertices = list(self._index)
        for (u, v) in self.edges:
            self.add_vertex(u)
            self.add_vertex(v)

    def __contains__(self, v: Hashable) -> bool:
        return v in self._index

    def index(self, v: Hashable) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise GraphError(f"vertex {v!r} not in graph") from None

    def capacity_matrix(self) -> np.ndarray:
        n = len(self.vertices)
        cap = np.zeros((n, n))
        finite = [c for c in self.edges.values() if math.isfinite(c)]
        big = float(sum(finite)) + 1.0
        for (u, v), c in self.edges.items():
            cap[self._index[u], self._index[v]] = c if math.isfinite(c) else big
        return cap

    def scaled(self, alpha: float) -> "CapGraph":
        return CapGraph(list(self.vertices), {e: alpha * c for e, c in self.edges.items()})


def _edmonds_karp(cap: np.ndarray, s: int, t: int) -> float:
    n = cap.shape[0]
    resid = cap.tolist()
    adj = [[v for v in range(n) if cap[u, v] > 0 or cap[v, u] > 0] for u in range(n)]
    eps = _EPS * max(1.0, float(cap.max(initial=0.0)))
    flow = 0.0
    while True:
        parent = [-1] * n
        parent[s] = s
        q = deque([s])
        while q and parent[t] < 0:
            u = q.popleft()
            ru = resid[u]
            for v in adj[u]:
                if parent[v] < 0 and ru[v] > eps:
                    parent[v] = u
                    q.append(v)
        if parent[t] < 0:
            return flow
        push = math.inf
        v = t
        while v != s:
            u = parent[v]
            push = min(push, resid[u][v])
            v = u
        v = t
        while v != s:
            u = parent[v]
            resid[u][v] -= push
            resid[v][u] += push
            v = u
        flow += push


def max_flow(graph: CapGraph, source: Hashable, sink: Hashable) -> float:
    """Value of a maximum ``source``->``sink`` flow (shortest augmenting paths)."""
    s, t = graph.index(source), graph.index(sink)
    if s == t:
        raise ValueError("source and sink must differ")
    return _edmonds_karp(graph.capacity_matrix(), s, t)


def rate_graph(alloc: RateAllocation) -> CapGraph:
    """Source ``"s"`` plus peers ``0..N-1``; edges carry the allocated rates."""
    g = CapGraph([SOURCE, *range(alloc.n)])
    r = alloc.rates
    for i in range(alloc.n):
        if r[i, i] > 0:
            g.add_edge(SOURCE, i, r[i, i])
        for j in range(alloc.n):
            if i != j and r[i, j] > 0:
                g.add_edge(i, j, r[i, j])
    return g


def flow_rates_of_allocation(network: Network, alloc: RateAllocation) -> np.ndarray:
    """Min-cut value from the source to each peer in the allocation's rate graph."""
    alloc.check(network)
    n = alloc.n
    cap = np.zeros((n + 1, n + 1))
    cap[1:, 1:] = alloc.relay_rates
    cap[0, 1:] = alloc.source_rates
    cap = np.clip(cap, 0.0, None)
    return np.array([_edmonds_karp(cap, 0, i + 1) for i in range(n)])


@dataclass
class TimeExpandedGraph:
    """Epoch copies ``(v, n)`` of every node, for ``n = 0..N-1``.

    Transmission edges carry ``rate * durations[n]``; memory edges
    ``(v, n) -> (v, n + 1)`` are unbounded.
    """

    graph: CapGraph
    durations: np.ndarray

    @classmethod
    def build(cls, alloc: RateAllocation, durations: Sequence[float]) -> "TimeExpandedGraph":
        dt = np.asarray(durations, dtype=float)
        n = alloc.n
        nodes = [SOURCE, *range(n)]
        g = CapGraph([(v, k) for k in range(len(dt)) for v in nodes])
        r = alloc.rates
        for k, d in enumerate(dt):
            for i in range(n):
                if r[i, i] > 0:
                    g.add_edge((SOURCE, k), (i, k), r[i, i] * d)
                for j in range(n):
                    if i != j and r[i, j] > 0:
                        g.add_edge((i, k), (j, k), r[i, j] * d)
            if k + 1 < len(dt):
                for v in nodes:
                    g.add_edge((v, k), (v, k + 1), math.inf)
        return cls(g, dt)


@dataclass(frozen=True)
class ScheduleVerdict:
    flows: np.ndarray
    feasible: np.ndarray
    finish_times: np.ndarray

    @property
    def all_feasible(self) -> bool:
        return bool(self.feasible.all())


def verify_static_schedule(
    network: Network,
    alloc: RateAllocation,
    finish_order: Iterable[int],
    durations: Sequence[float],
    tol: float = 1e-9,
) -> ScheduleVerdict:
    """Check that a fixed allocation delivers the file to every peer on schedule.

    ``finish_order`` lists 0-based peer indices in the order they finish; the
    peer in position ``k`` must hold ``B`` units of information by the end of
    epoch ``k``, whose length is ``durations[k]``.
    """
    order = list(finish_order)
    n = network.n
    if sorted(order) != list(range(n)):
        raise ValueError(f"finish order must be a permutation of 0..{n - 1}, got {order}")
    dt = np.asarray(durations, dtype=float)
    if dt.shape != (n,):
        raise ValueError(f"need {n} epoch durations, got {dt.size}")
    if np.any(dt < 0):
        raise ValueError("epoch durations must be nonnegative")
    alloc.check(network)

    teg = TimeExpandedGraph.build(alloc, dt)
    cap = teg.graph.capacity_matrix()
    src = teg.graph.index((SOURCE, 0))
    flows = np.zeros(n)
    for k, peer in enumerate(order):
        flows[peer] = _edmonds_karp(cap, src, teg.graph.index((peer, k)))
    finish = np.empty(n)
    finish[order] = np.cumsum(dt)
    feasible = flows >= network.file_size - tol
    return ScheduleVerdict(flows, feasible, finish)


def staggered_schedule(rates: Sequence[float], file_size: float = 1.0) -> tuple[list[int], np.ndarray]:
    """Finish order and epoch lengths ``B/r_k - B/r_(k-1)`` for flow rates ``rates``.

    Peers are ordered by decreasing rate, ties broken by index. All rates must
    be positive.
    """
    r = np.asarray(rates, dtype=float)
    if np.any(r <= 0):
        raise ValueError("every flow rate must be positive")
    order = sorted(range(r.size), key=lambda i: (-r[i], i))
    times = file_size / r[order]
    return order, np.diff(np.concatenate([[0.0], times]))
