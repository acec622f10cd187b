"""Epoch-driven simulation of the dynamic rateless scheme.

Between events (a peer finishing, joining or leaving) the allocation is
static. At every event the active peers are ranked by ``W_i / q_i``, where
``q_i`` is the fraction of the file peer ``i`` still lacks, and the shortest
prefix whose effective downlinks cover the total uplink is fully supported:
those peers get epoch weight 1 and everyone else 0. The depth-2 rateless
allocator then sets the epoch's rates.

In ``retain`` mode a finished peer stays and uploads; holding the whole file,
it is equivalent to extra source uplink, so its uplink joins the source pool.
In ``leave`` mode it departs and its uplink is lost.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .model import Network, PeerSpec
from .static_alloc import depth2_rateless

FINISH_EPS = 1e-12


class Mode(str, Enum):
    RETAIN = "retain"
    LEAVE = "leave"


class SimulationDivergence(RuntimeError):
    """Some peer that still needs the file can never receive any rate."""


@dataclass(frozen=True)
class Join:
    time: float
    peer: PeerSpec


@dataclass
class DynamicState:
    """Mutable state of one simulation run; arrays cover every peer ever seen."""

    source_uplink: float
    uplinks: np.ndarray
    downlinks: np.ndarray
    weights: np.ndarray
    q: np.ndarray
    join_times: np.ndarray
    active: np.ndarray
    finished: np.ndarray
    departed: np.ndarray
    time: float = 0.0

    @classmethod
    def from_network(cls, network: Network) -> "DynamicState":
        n = network.n
        return cls(
            source_uplink=network.source_uplink,
            uplinks=network.uplinks,
            downlinks=network.downlinks,
            weights=network.weights,
            q=np.ones(n),
            join_times=np.zeros(n),
            active=np.ones(n, dtype=bool),
            finished=np.zeros(n, dtype=bool),
            departed=np.zeros(n, dtype=bool),
        )

    def add_peer(self, peer: PeerSpec, time: float) -> int:
        self.uplinks = np.append(self.uplinks, min(peer.uplink, peer.downlink))
        self.downlinks = np.append(self.downlinks, peer.downlink)
        self.weights = np.append(self.weights, peer.weight)
        self.q = np.append(self.q, 1.0)
        self.join_times = np.append(self.join_times, time)
        self.active = np.append(self.active, True)
        self.finished = np.append(self.finished, False)
        self.departed = np.append(self.departed, False)
        return self.q.size - 1

    @property
    def source_pool(self) -> float:
        """Source uplink plus the uplink of finished peers still present."""
        return float(self.source_uplink + self.uplinks[self.finished & ~self.departed].sum())

    def effective_downlinks(self) -> np.ndarray:
        return np.minimum(self.downlinks, self.source_pool)


def strictly_precedes(w_i, w_j, q_i, q_j, d_i, d_j, budget=None) -> bool:
    """Pairwise optimality test for fully supporting ``i`` ahead of ``j``.

    ``d_*`` are effective downlinks and ``budget`` the uplink shared by the
    pair; it defaults to ``d_i`` (``i`` fully supported, ``j`` not).
    """
    s = d_i if budget is None else budget
    if q_i * d_j <= q_j * d_i:
        # i drains no later than j at full support
        return w_i * q_j > w_j * max(q_i, q_j * (s - d_j) / d_j)
    return w_i * max(q_j, q_i * (s - d_i) / d_i) > w_j * q_i


def approx_precedes(w_i, w_j, q_i, q_j) -> bool:
    """Transitive surrogate: ``W_i / q_i >= W_j / q_j``."""
    return w_i * q_j >= w_j * q_i


@dataclass(frozen=True)
class Precedence:
    strict: bool
    approx: bool
    exact_region: bool


def precedence(state: DynamicState, i: int, j: int, budget: float | None = None) -> Precedence:
    """Both orderings of active peers ``i`` and ``j``.

    ``exact_region`` flags states where ``q_i/q_j > (D~_i - D~_j)/D~_j``;
    there the surrogate agrees with the pairwise test up to ties.
    """
    if i == j:
        raise ValueError("precedence needs two distinct peers")
    d = state.effective_downlinks()
    w, q = state.weights, state.q
    return Precedence(
        strict=strictly_precedes(w[i], w[j], q[i], q[j], d[i], d[j], budget),
        approx=approx_precedes(w[i], w[j], q[i], q[j]),
        exact_region=bool(q[i] * d[j] > q[j] * (d[i] - d[j])),
    )


def select_support_set(state: DynamicState) -> tuple[list[int], np.ndarray]:
    """Peers to fully support this epoch and the 0/1 epoch weights.

    Active peers are sorted by ``W/q`` descending (ties: smaller ``q``, then
    lower index); the smallest prefix whose effective downlinks reach
    ``pool + sum U`` over active peers is selected. Weights are returned over
    all peers, 0 for inactive ones.
    """
    idx = np.flatnonzero(state.active)
    if idx.size == 0:
        raise ValueError("no active peers")
    w, q = state.weights[idx], state.q[idx]
    ranked = sorted(range(idx.size), key=lambda k: (-(w[k] / q[k]), q[k], idx[k]))
    ranked_ids = idx[ranked]
    budget = state.source_pool + float(state.uplinks[idx].sum())
    cover = np.cumsum(state.effective_downlinks()[ranked_ids])
    m = int(np.searchsorted(cover, budget * (1 - 1e-12), side="left")) + 1
    support = ranked_ids[: min(m, idx.size)].tolist()
    epoch_weights = np.zeros(state.q.size)
    epoch_weights[support] = 1.0
    return support, epoch_weights


@dataclass(frozen=True)
class EpochRecord:
    index: int
    start: float
    duration: float
    event: str
    supported: tuple[int, ...]
    weights: np.ndarray
    rates: np.ndarray
    source_pool: float


@dataclass
class DynamicTrace:
    epochs: list[EpochRecord]
    finish_times: np.ndarray
    join_times: np.ndarray
    weights: np.ndarray
    mode: Mode
    file_size: float = 1.0

    @property
    def download_times(self) -> np.ndarray:
        return self.finish_times - self.join_times

    @property
    def wsdt(self) -> float:
        """Weighted sum of download times under the original weights."""
        return float(np.sum(self.weights * self.download_times))

    @property
    def finish_order(self) -> list[int]:
        return sorted(range(self.finish_times.size), key=lambda i: (self.finish_times[i], i))


def _residual_network(state: DynamicState, active: np.ndarray, epoch_weights: np.ndarray) -> Network:
    peers = tuple(
        PeerSpec(float(state.uplinks[i]), float(state.downlinks[i]), float(epoch_weights[i]))
        for i in active
    )
    return Network(state.source_pool, peers, 1.0)


def simulate_dynamic(
    network: Network,
    mode: Mode | str = Mode.RETAIN,
    joins: Iterable[Join] = (),
    max_epochs: int | None = None,
) -> DynamicTrace:
    """Run the dynamic scheme until every peer, including later joiners, has the file."""
    mode = Mode(mode)
    schedule = sorted(joins, key=lambda j: j.time)
    if any(j.time < 0 for j in schedule):
        raise ValueError("join times must be nonnegative")
    state = DynamicState.from_network(network)
    b = network.file_size
    finish = [math.nan] * network.n
    epochs: list[EpochRecord] = []
    pending = list(schedule)
    limit = max_epochs or 10 * (network.n + len(schedule)) + 10

    def admit_due():
        while pending and pending[0].time <= state.time:
            j = pending.pop(0)
            state.add_peer(j.peer, j.time)
            finish.append(math.nan)

    admit_due()
    while state.active.any() or pending:
        if len(epochs) >= limit:
            raise SimulationDivergence(f"no termination after {limit} epochs")
        if not state.active.any():
            # idle until the next peer arrives
            state.time = pending[0].time
            admit_due()
            continue

        support, epoch_w = select_support_set(state)
        active = np.flatnonzero(state.active)
        sol = depth2_rateless(_residual_network(state, active, epoch_w))
        rates = np.zeros(state.q.size)
        rates[active] = sol.flow_rates

        with np.errstate(divide="ignore"):
            drain = np.where(rates[active] > 0, state.q[active] * b / rates[active], math.inf)
        next_finish = float(drain.min())
        next_join = pending[0].time - state.time if pending else math.inf
        if not math.isfinite(next_finish) and not math.isfinite(next_join):
            raise SimulationDivergence("active peers receive no rate and nobody is joining")

        dt = min(next_finish, next_join)
        event = "finish" if next_finish <= next_join else "join"
        epochs.append(
            EpochRecord(len(epochs), state.time, dt, event, tuple(support), epoch_w, rates, state.source_pool)
        )
        state.q[active] -= rates[active] * dt / b
        state.time += dt
        done = active[(drain <= dt * (1 + 1e-9)) | (state.q[active] <= FINISH_EPS)]
        for i in done:
            state.q[i] = 0.0
            state.active[i] = False
            state.finished[i] = True
            if mode is Mode.LEAVE:
                state.departed[i] = True
            finish[i] = state.time
        admit_due()

    return DynamicTrace(
        epochs=epochs,
        finish_times=np.array(finish),
        join_times=state.join_times.copy(),
        weights=state.weights.copy(),
        mode=mode,
        file_size=b,
    )
