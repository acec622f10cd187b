"""Problem instances: peers, networks, rate allocations and benchmark cases.

Bandwidths are in file-units per unit time. An unbounded downlink is stored
as ``math.inf``; :meth:`Network.effective_downlinks` resolves it against the
source uplink, so no sentinel value ever enters the arithmetic.

Peer indices are 0-based in code. Documentation, CSV output and scenario files
present them 1-based.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

#: relative slack used by every capacity-respect check
TOL = 1e-9

CASE_IDS = ("I", "II", "III", "IV", "V", "VI")


class ScenarioError(ValueError):
    """Base class for invalid problem instances."""

    kind = "invalid-scenario"


class EmptyNetworkError(ScenarioError):
    kind = "no-peers"


class SourceUplinkError(ScenarioError):
    kind = "non-positive-source-uplink"


class FileSizeError(ScenarioError):
    kind = "non-positive-file-size"


class NegativeCapacityError(ScenarioError):
    kind = "negative-capacity"


class NegativeWeightError(ScenarioError):
    kind = "negative-weight"


class AllocationError(ValueError):
    """A rate allocation violates a capacity or sign constraint."""


@dataclass(frozen=True)
class PeerSpec:
    uplink: float
    downlink: float = math.inf
    weight: float = 1.0


@dataclass(frozen=True)
class Network:
    """A source with uplink ``source_uplink`` serving ``peers`` a file of size ``file_size``.

    Build instances with :func:`validate_scenario` (or :meth:`from_arrays`),
    which enforces the constraints and clamps each uplink to its downlink.
    """

    source_uplink: float
    peers: tuple[PeerSpec, ...]
    file_size: float = 1.0

    @property
    def n(self) -> int:
        return len(self.peers)

    @property
    def uplinks(self) -> np.ndarray:
        return np.array([p.uplink for p in self.peers], dtype=float)

    @property
    def downlinks(self) -> np.ndarray:
        return np.array([p.downlink for p in self.peers], dtype=float)

    @property
    def weights(self) -> np.ndarray:
        return np.array([p.weight for p in self.peers], dtype=float)

    def effective_downlinks(self) -> np.ndarray:
        """``min(D_i, U_s)``: the ceiling on any flow rate peer ``i`` can see."""
        return np.minimum(self.downlinks, self.source_uplink)

    @property
    def total_uplink(self) -> float:
        return float(self.source_uplink + self.uplinks.sum())

    def with_weights(self, weights: Sequence[float]) -> "Network":
        if len(weights) != self.n:
            raise ValueError(f"expected {self.n} weights, got {len(weights)}")
        peers = tuple(replace(p, weight=float(w)) for p, w in zip(self.peers, weights))
        return validate_scenario(replace(self, peers=peers))

    @classmethod
    def from_arrays(
        cls,
        source_uplink: float,
        uplinks: Iterable[float],
        downlinks: Iterable[float] | float = math.inf,
        weights: Iterable[float] | float = 1.0,
        file_size: float = 1.0,
    ) -> "Network":
        up = [float(u) for u in uplinks]
        down = _broadcast(downlinks, len(up))
        w = _broadcast(weights, len(up))
        peers = tuple(PeerSpec(u, d, ww) for u, d, ww in zip(up, down, w))
        return validate_scenario(cls(float(source_uplink), peers, float(file_size)))


def _broadcast(value: Iterable[float] | float, n: int) -> list[float]:
    if np.isscalar(value):
        return [float(value)] * n  # type: ignore[arg-type]
    out = [float(v) for v in value]  # type: ignore[union-attr]
    if len(out) != n:
        raise ValueError(f"expected {n} values, got {len(out)}")
    return out


def _parse_bandwidth(value: Any) -> float:
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinity", "unbounded"):
            return math.inf
        return float(value)
    if value is None:
        return math.inf
    return float(value)


def validate_scenario(raw: Network | Mapping[str, Any]) -> Network:
    """Check a problem instance and clamp every uplink to its downlink.

    ``raw`` is either a :class:`Network` or a mapping shaped like the scenario
    JSON document (``source_uplink``, ``file_size``, ``peers``). Applying the
    function twice gives the same result as applying it once.
    """
    if isinstance(raw, Network):
        us, b, peers_in = raw.source_uplink, raw.file_size, raw.peers
        peers_raw = [(p.uplink, p.downlink, p.weight) for p in peers_in]
    else:
        try:
            us = float(raw["source_uplink"])
            b = float(raw.get("file_size", 1.0))
            peers_raw = [
                (
                    float(p["uplink"]),
                    _parse_bandwidth(p.get("downlink", math.inf)),
                    float(p.get("weight", 1.0)),
                )
                for p in raw.get("peers", [])
            ]
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise ScenarioError(f"malformed scenario: {exc!r}") from exc

    if not peers_raw:
        raise EmptyNetworkError("network has no peers")
    if not (math.isfinite(us) and us > 0):
        raise SourceUplinkError(f"non-positive source uplink: {us}")
    if not (math.isfinite(b) and b > 0):
        raise FileSizeError(f"non-positive file size: {b}")

    peers = []
    for i, (u, d, w) in enumerate(peers_raw, start=1):
        if not math.isfinite(u) or u < 0:
            raise NegativeCapacityError(f"peer {i}: uplink must be finite and >= 0, got {u}")
        if math.isnan(d) or d <= 0:
            raise NegativeCapacityError(f"peer {i}: downlink must be > 0, got {d}")
        if not math.isfinite(w) or w < 0:
            raise NegativeWeightError(f"peer {i}: weight must be finite and >= 0, got {w}")
        peers.append(PeerSpec(min(u, d), d, w))
    return Network(us, tuple(peers), b)


@dataclass
class RateAllocation:
    """An ``N x N`` rate matrix; ``rates[i, j]`` is i->j and ``rates[i, i]`` is source->i.

    ``source_depth1``/``source_depth2`` optionally split the diagonal into the
    part peer ``i`` keeps and the part it relays on its depth-2 tree.
    """

    rates: np.ndarray
    source_depth1: np.ndarray | None = None
    source_depth2: np.ndarray | None = None

    def __post_init__(self):
        self.rates = np.asarray(self.rates, dtype=float)
        if self.rates.ndim != 2 or self.rates.shape[0] != self.rates.shape[1]:
            raise AllocationError(f"rate matrix must be square, got shape {self.rates.shape}")

    @classmethod
    def zeros(cls, n: int) -> "RateAllocation":
        return cls(np.zeros((n, n)), np.zeros(n), np.zeros(n))

    @property
    def n(self) -> int:
        return self.rates.shape[0]

    @property
    def source_rates(self) -> np.ndarray:
        return np.diag(self.rates).copy()

    @property
    def relay_rates(self) -> np.ndarray:
        r = self.rates.copy()
        np.fill_diagonal(r, 0.0)
        return r

    def upload_rates(self) -> np.ndarray:
        """Total rate each peer sends to other peers."""
        return self.relay_rates.sum(axis=1)

    def download_rates(self) -> np.ndarray:
        """Total rate each peer receives, source included."""
        return self.rates.sum(axis=0)

    def check(self, network: Network, tol: float = TOL) -> None:
        """Raise :class:`AllocationError` if any capacity is exceeded."""
        if self.n != network.n:
            raise AllocationError(f"allocation has {self.n} peers, network has {network.n}")
        if np.any(self.rates < -tol):
            raise AllocationError("negative rate in allocation")
        src = self.source_rates.sum()
        if src > network.source_uplink + tol * max(1.0, network.source_uplink):
            raise AllocationError(f"source sends {src} > U_s = {network.source_uplink}")
        up, cap = self.upload_rates(), network.uplinks
        bad = np.flatnonzero(up > cap + tol * np.maximum(1.0, cap))
        if bad.size:
            i = bad[0]
            raise AllocationError(f"peer {i + 1} uploads {up[i]} > U = {cap[i]}")
        down, dcap = self.download_rates(), network.downlinks
        slack = tol * np.maximum(1.0, np.where(np.isfinite(dcap), dcap, 0.0))
        bad = np.flatnonzero(down > dcap + slack)
        if bad.size:
            i = bad[0]
            raise AllocationError(f"peer {i + 1} downloads {down[i]} > D = {dcap[i]}")


def check_flow_rates(network: Network, rates: Sequence[float], tol: float = TOL) -> None:
    """Raise if ``rates`` breaks the per-peer or aggregate uplink relaxation."""
    r = np.asarray(rates, dtype=float)
    cap = network.effective_downlinks()
    if np.any(r < -tol):
        raise AllocationError("negative flow rate")
    if np.any(r > cap + tol * np.maximum(1.0, cap)):
        raise AllocationError("flow rate above min(D_i, U_s)")
    total = network.total_uplink
    if r.sum() > total + tol * max(1.0, total):
        raise AllocationError("flow rates exceed the total uplink")


@dataclass(frozen=True)
class WeightProfile:
    """Per-peer weights by formula.

    ``uniform``: 1. ``linear``: i/N. ``two-class``: 1 + 99 [i > N/2].
    ``two-class-mild``: 1 + [i > N/2]. ``custom``: the stored ``values``.
    ``i`` is 1-based.
    """

    tag: str = "uniform"
    values: tuple[float, ...] = field(default=())

    TAGS = ("uniform", "linear", "two-class", "two-class-mild", "custom")

    def __post_init__(self):
        if self.tag not in self.TAGS:
            raise ValueError(f"unknown weight profile {self.tag!r}; choose from {self.TAGS}")

    def weights(self, n: int) -> np.ndarray:
        i = np.arange(1, n + 1)
        upper = (i > n / 2).astype(float)
        if self.tag == "uniform":
            return np.ones(n)
        if self.tag == "linear":
            return i / n
        if self.tag == "two-class":
            return 1.0 + 99.0 * upper
        if self.tag == "two-class-mild":
            return 1.0 + upper
        if len(self.values) != n:
            raise ValueError(f"custom profile has {len(self.values)} weights, need {n}")
        return np.array(self.values, dtype=float)


def _case_key(case_id: str | int) -> str:
    if isinstance(case_id, int) or (isinstance(case_id, str) and case_id.isdigit()):
        k = int(case_id)
        if 1 <= k <= 6:
            return CASE_IDS[k - 1]
    elif isinstance(case_id, str) and case_id.upper() in CASE_IDS:
        return case_id.upper()
    raise ValueError(f"unknown case id {case_id!r}; expected one of {CASE_IDS}")


def case_parameters(case_id: str | int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Raw ``(uplinks, downlinks)`` of a benchmark case, before clamping."""
    key = _case_key(case_id)
    if n < 1:
        raise EmptyNetworkError("benchmark case needs N >= 1")
    i = np.arange(1, n + 1, dtype=float)
    ones, inf = np.ones(n), np.full(n, math.inf)
    boosted = 1.0 + 9.0 * (i > n / 2)
    table = {
        "I": (ones, inf),
        "II": (ones, np.full(n, 8.0)),
        "III": (i / n, inf),
        "IV": (i / n, 8.0 * i / n),
        "V": (boosted, inf),
        "VI": (boosted, 8.0 * i / n),
    }
    up, down = table[key]
    return up.copy(), down.copy()


def generate_case(
    case_id: str | int,
    n: int,
    source_uplink: float,
    weights: WeightProfile | str = "uniform",
    file_size: float = 1.0,
) -> Network:
    """One of the six benchmark networks (I..VI) with ``n`` peers.

    The result is validated, so in cases where ``U_i > D_i`` (e.g. case VI)
    the uplink comes back clamped.
    """
    up, down = case_parameters(case_id, n)
    profile = WeightProfile(weights) if isinstance(weights, str) else weights
    return Network.from_arrays(source_uplink, up, down, profile.weights(n), file_size)


def scenario_to_dict(network: Network) -> dict[str, Any]:
    return {
        "source_uplink": network.source_uplink,
        "file_size": network.file_size,
        "peers": [
            {
                "uplink": p.uplink,
                "downlink": "inf" if math.isinf(p.downlink) else p.downlink,
                "weight": p.weight,
            }
            for p in network.peers
        ],
    }


def load_scenario(path: str | Path) -> Network:
    with open(path) as fh:
        return validate_scenario(json.load(fh))


def dump_scenario(network: Network, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(network), fh, indent=2)
        fh.write("\n")
