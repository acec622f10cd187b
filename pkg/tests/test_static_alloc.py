import math

import numpy as np
import pytest

from p2pwsdt import (
    MutualcastError,
    Network,
    depth2_rateless,
    extended_mutualcast,
    flow_rates_of_allocation,
    max_common_rate,
    mutualcast,
    routing_based,
    wsdt,
    wsdt_lower_bound,
)
from conftest import random_network

TOL = 1e-9


def test_mutualcast_source_bottleneck():
    net = Network.from_arrays(1.0, np.ones(10))
    alloc = mutualcast(net, 1.0)
    src = alloc.source_rates
    np.testing.assert_allclose(src[:9], 1 / 9, atol=1e-12)
    assert src[9] == 0
    relay = alloc.relay_rates
    for i in range(9):
        np.testing.assert_allclose(np.delete(relay[i], i), 1 / 9, atol=1e-12)
    assert not relay[9].any()
    np.testing.assert_allclose(flow_rates_of_allocation(net, alloc), 1.0, atol=1e-12)


def test_mutualcast_direct_top_up():
    net = Network.from_arrays(10.0, np.ones(10))
    alloc = mutualcast(net, 2.0)
    np.testing.assert_allclose(alloc.source_depth2, 1 / 9, atol=1e-12)
    np.testing.assert_allclose(alloc.source_depth1, 8 / 9, atol=1e-12)
    np.testing.assert_allclose(alloc.source_rates, 1.0, atol=1e-12)
    np.testing.assert_allclose(alloc.download_rates(), 2.0, atol=1e-12)
    np.testing.assert_allclose(flow_rates_of_allocation(net, alloc), 2.0, atol=1e-12)


def test_mutualcast_zero_and_ceiling(three_peer):
    assert not mutualcast(three_peer, 0.0).rates.any()
    assert max_common_rate(three_peer) == pytest.approx(5 / 3)
    with pytest.raises(MutualcastError):
        mutualcast(three_peer, 1.7)
    with pytest.raises(MutualcastError):
        mutualcast(three_peer, -1.0)
    with pytest.raises(ValueError):
        mutualcast(three_peer, 1.0, order=[0, 0, 1])


def test_mutualcast_delivers_any_feasible_rate():
    rng = np.random.default_rng(21)
    for _ in range(300):
        net = random_network(rng, 8)
        rate = max_common_rate(net) * float(rng.uniform(0, 1))
        order = rng.permutation(net.n)
        alloc = mutualcast(net, rate, order)
        alloc.check(net)
        np.testing.assert_allclose(flow_rates_of_allocation(net, alloc), rate, atol=1e-9 * max(1, rate))


def test_extended_examples(three_peer):
    alloc, flows = extended_mutualcast(three_peer)
    np.testing.assert_allclose(flows, [5 / 3] * 3, atol=1e-12)
    assert wsdt(flows, np.ones(3)) == pytest.approx(1.8, abs=1e-9)
    # same allocation as the symmetric three-peer optimum: 2/3 direct, 1/2 relayed
    np.testing.assert_allclose(np.diag(alloc.rates), 2 / 3, atol=1e-12)
    np.testing.assert_allclose(alloc.relay_rates[~np.eye(3, dtype=bool)], 0.5, atol=1e-12)

    net = Network.from_arrays(4.0, [1, 1], [2, 3])
    alloc, flows = extended_mutualcast(net)
    np.testing.assert_allclose(flows, [2, 3])
    np.testing.assert_allclose(flow_rates_of_allocation(net, alloc), [2, 3], atol=1e-12)

    net = Network.from_arrays(3.0, [0.5], [2.0])
    alloc, flows = extended_mutualcast(net)
    np.testing.assert_allclose(flows, [2.0])
    np.testing.assert_allclose(flow_rates_of_allocation(net, alloc), [2.0])


def test_depth2_uniform_matches_mutualcast(three_peer):
    sol = depth2_rateless(three_peer)
    np.testing.assert_allclose(sol.flow_rates, [5 / 3] * 3, atol=1e-12)
    assert sol.wsdt(three_peer.weights) == pytest.approx(1.8, abs=1e-9)


def test_depth2_weighted_three_peer():
    net = Network.from_arrays(2.0, [1, 1, 1], weights=[4, 1, 1])
    sol = depth2_rateless(net)
    np.testing.assert_allclose(sol.tilde_rates, [5 / 3, 5 / 6, 5 / 6], atol=1e-12)
    assert np.all(sol.flow_rates >= sol.tilde_rates - TOL)
    # the source constraint binds: c = U_s / (alpha max r~) and every byte of
    # source uplink is used, the peers' uplinks only in proportion c
    assert sol.c == pytest.approx(6 / 7)
    assert sol.flow_rates.sum() == pytest.approx(net.source_uplink + sol.c * net.uplinks.sum())
    np.testing.assert_allclose(sol.flow_rates, [2, 9 / 7, 9 / 7], atol=1e-12)
    assert sol.wsdt(net.weights) <= wsdt(sol.tilde_rates, net.weights)


def test_depth2_single_peer():
    for w in (0.0, 1.0, 7.0):
        for d in (0.5, 2.0, math.inf):
            net = Network.from_arrays(1.5, [3.0], [d], [w])
            sol = depth2_rateless(net)
            np.testing.assert_allclose(sol.flow_rates, [min(1.5, d)])


def test_routing_uniform_and_abundant(three_peer):
    sol = routing_based(three_peer)
    np.testing.assert_allclose(sol.flow_rates, [5 / 3] * 3, atol=1e-12)
    assert sol.wasted_uplink == pytest.approx(0, abs=1e-12)
    net = Network.from_arrays(4.0, [1, 1], [2, 3])
    sol = routing_based(net)
    assert sol.delegated
    np.testing.assert_allclose(sol.flow_rates, [2, 3])


def test_routing_weighted_three_peer():
    net = Network.from_arrays(2.0, [1, 1, 1], weights=[4, 1, 1])
    sol = routing_based(net)
    t = sol.tilde_rates
    assert not np.allclose(t, t[0])
    assert sol.wasted_uplink > 0
    assert np.all(sol.flow_rates <= sol.download_rates + TOL)
    np.testing.assert_allclose(flow_rates_of_allocation(net, sol.allocation), sol.download_rates, atol=1e-12)
    assert sol.order == (0, 1, 2)
    with pytest.raises(ValueError):
        routing_based(net, order=[1, 0, 2])
    assert routing_based(net, order=[0, 2, 1]).order == (0, 2, 1)


def _chain_ok(sol, tol=1e-9):
    """Relayed rates from each peer are nonincreasing along the finish order."""
    r = sol.allocation.rates
    seq = list(sol.order)
    d1 = sol.allocation.source_depth1[seq]
    if np.any(np.diff(d1) > tol):
        return False
    for i in seq:
        chain = [sol.allocation.source_depth2[i]] + [r[i, j] for j in seq if j != i]
        if np.any(np.diff(chain) > tol * max(1.0, chain[0])):
            return False
    return True


def test_static_properties_random():
    rng = np.random.default_rng(22)
    for _ in range(1500):
        net = random_network(rng)
        cap = net.effective_downlinks()
        abundant = net.total_uplink >= cap.sum()
        for sol in (depth2_rateless(net), routing_based(net)):
            sol.allocation.check(net)
            scale = max(1.0, float(cap.max()))
            if abundant:
                np.testing.assert_allclose(sol.flow_rates, cap, atol=1e-9 * scale)
            # relay bound: a peer only forwards what its depth-2 tree brings in
            relay = sol.allocation.relay_rates
            assert np.all(relay <= sol.allocation.source_depth2[:, None] + 1e-9 * scale)
        d2 = depth2_rateless(net)
        assert np.all(d2.flow_rates >= d2.tilde_rates - 1e-9 * max(1.0, d2.tilde_rates.max()))
        np.testing.assert_allclose(flow_rates_of_allocation(net, d2.allocation), d2.flow_rates, atol=1e-9 * max(1.0, cap.max()))
        rt = routing_based(net)
        mc = flow_rates_of_allocation(net, rt.allocation)
        np.testing.assert_allclose(mc, rt.download_rates, atol=1e-9 * max(1.0, cap.max()))
        assert np.all(rt.flow_rates <= mc + 1e-9 * max(1.0, cap.max()))
        assert rt.wasted_uplink >= -1e-12
        if not rt.delegated:
            assert _chain_ok(rt)


def test_extended_is_sum_time_optimal():
    rng = np.random.default_rng(23)
    for _ in range(1500):
        net = random_network(rng)
        alloc, flows = extended_mutualcast(net)
        alloc.check(net)
        mc = flow_rates_of_allocation(net, alloc)
        np.testing.assert_allclose(mc, flows, atol=1e-9 * max(1.0, flows.max()))
        lb = wsdt_lower_bound(net.with_weights(np.ones(net.n))).value
        assert wsdt(mc, np.ones(net.n)) == pytest.approx(lb, rel=1e-9)


def test_depth2_never_beats_lower_bound():
    rng = np.random.default_rng(24)
    for _ in range(500):
        net = random_network(rng)
        lb = wsdt_lower_bound(net).value
        for sol in (depth2_rateless(net), routing_based(net)):
            assert sol.wsdt(net.weights) >= lb * (1 - 1e-9)


def test_no_allocator_claims_unreachable_rates():
    # U_s = 3, U = 1: the rates (3, 3, 0) satisfy the relaxation but no static
    # scheme supports them
    net = Network.from_arrays(3.0, [1, 1, 1], weights=[1, 1, 0])
    for flows in (extended_mutualcast(net)[1], depth2_rateless(net).flow_rates, routing_based(net).flow_rates):
        assert not np.allclose(flows, [3, 3, 0])
