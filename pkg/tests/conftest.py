import math

import numpy as np
import pytest

from p2pwsdt import Network


def random_network(rng: np.random.Generator, n_max: int = 12, zero_weight_p: float = 0.2) -> Network:
    """Mixed finite/unbounded downlinks, some helper peers, some idle uplinks."""
    n = int(rng.integers(1, n_max + 1))
    us = float(rng.uniform(0.1, 10.0))
    up = rng.uniform(0.0, 5.0, n)
    up[rng.random(n) < 0.1] = 0.0
    down = np.where(rng.random(n) < 0.3, math.inf, rng.uniform(0.1, 10.0, n))
    w = np.where(rng.random(n) < zero_weight_p, 0.0, rng.uniform(0.1, 5.0, n))
    if not (w > 0).any():
        w[0] = 1.0
    return Network.from_arrays(us, up, down, w)


@pytest.fixture
def three_peer() -> Network:
    return Network.from_arrays(2.0, [1.0, 1.0, 1.0])


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE: list[str] = []


def record_acceptance(label: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
