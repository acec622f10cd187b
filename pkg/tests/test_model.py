import json
import math

import numpy as np
import pytest

from p2pwsdt import (
    CASE_IDS,
    AllocationError,
    EmptyNetworkError,
    FileSizeError,
    NegativeCapacityError,
    NegativeWeightError,
    Network,
    PeerSpec,
    RateAllocation,
    ScenarioError,
    SourceUplinkError,
    WeightProfile,
    case_parameters,
    check_flow_rates,
    dump_scenario,
    generate_case,
    load_scenario,
    scenario_to_dict,
    validate_scenario,
)


def test_three_peer_scenario_is_valid_unchanged(three_peer):
    raw = {"source_uplink": 2, "file_size": 1, "peers": [{"uplink": 1, "downlink": "inf", "weight": 1}] * 3}
    net = validate_scenario(raw)
    assert net == three_peer
    assert net.n == 3
    assert np.all(np.isinf(net.downlinks))
    np.testing.assert_array_equal(net.effective_downlinks(), [2, 2, 2])
    assert net.total_uplink == 5


def test_uplink_clamped_to_downlink():
    net = validate_scenario({"source_uplink": 1, "peers": [{"uplink": 5, "downlink": 3}]})
    assert net.peers[0] == PeerSpec(3.0, 3.0, 1.0)


@pytest.mark.parametrize(
    "raw, err",
    [
        ({"source_uplink": 0, "peers": [{"uplink": 1}]}, SourceUplinkError),
        ({"source_uplink": -2, "peers": [{"uplink": 1}]}, SourceUplinkError),
        ({"source_uplink": 1, "peers": []}, EmptyNetworkError),
        ({"source_uplink": 1, "file_size": 0, "peers": [{"uplink": 1}]}, FileSizeError),
        ({"source_uplink": 1, "peers": [{"uplink": -1}]}, NegativeCapacityError),
        ({"source_uplink": 1, "peers": [{"uplink": 1, "downlink": 0}]}, NegativeCapacityError),
        ({"source_uplink": 1, "peers": [{"uplink": 1, "weight": -1}]}, NegativeWeightError),
        ({"peers": [{"uplink": 1}]}, ScenarioError),
    ],
)
def test_validation_errors(raw, err):
    with pytest.raises(err):
        validate_scenario(raw)


def test_error_kinds_are_distinct():
    kinds = {e.kind for e in (EmptyNetworkError, SourceUplinkError, FileSizeError, NegativeCapacityError, NegativeWeightError)}
    assert len(kinds) == 5


def test_zero_source_message():
    with pytest.raises(SourceUplinkError, match="non-positive source uplink"):
        Network.from_arrays(0.0, [1.0])


def test_validate_idempotent():
    rng = np.random.default_rng(1)
    for _ in range(200):
        n = int(rng.integers(1, 8))
        net = Network.from_arrays(rng.uniform(0.1, 5), rng.uniform(0, 5, n), rng.uniform(0.1, 5, n), rng.uniform(0, 3, n))
        assert validate_scenario(net) == net
        assert validate_scenario(scenario_to_dict(net)) == net


def test_case_examples():
    up, down = case_parameters("III", 4)
    np.testing.assert_allclose(up, [0.25, 0.5, 0.75, 1.0])
    net = generate_case("I", 10, 3.0)
    np.testing.assert_array_equal(net.uplinks, np.ones(10))
    assert np.all(np.isinf(net.downlinks))
    up, down = case_parameters("VI", 2)
    np.testing.assert_array_equal(up, [1, 10])
    np.testing.assert_array_equal(down, [4, 8])
    # the validated network clamps the second uplink to its downlink
    np.testing.assert_array_equal(generate_case("VI", 2, 1.0).uplinks, [1, 8])


def test_case_ids_accept_numbers_and_reject_unknown():
    assert generate_case(4, 5, 1.0) == generate_case("iv", 5, 1.0)
    with pytest.raises(ValueError):
        generate_case("VII", 5, 1.0)


@pytest.mark.parametrize("case", CASE_IDS)
def test_generated_cases_are_fixed_points(case):
    for n in (1, 2, 3, 7, 10, 101, 1000):
        net = generate_case(case, n, 2.5, "linear")
        assert validate_scenario(net) == net
        assert np.all(net.uplinks <= net.downlinks)


@pytest.mark.parametrize("case", ["V", "VI"])
def test_boosted_upper_half_for_odd_n(case):
    # the indicator i > N/2 (1-based) boosts the last ceil(N/2) peers
    for n in (1, 3, 9, 101):
        up, _ = case_parameters(case, n)
        assert int(np.sum(up == 10.0)) == (n + 1) // 2
        assert np.all(up[: n // 2] == 1.0)


def test_weight_profiles():
    np.testing.assert_array_equal(WeightProfile("uniform").weights(4), np.ones(4))
    np.testing.assert_allclose(WeightProfile("linear").weights(4), [0.25, 0.5, 0.75, 1.0])
    np.testing.assert_array_equal(WeightProfile("two-class").weights(4), [1, 1, 100, 100])
    np.testing.assert_array_equal(WeightProfile("two-class-mild").weights(3), [1, 2, 2])
    np.testing.assert_array_equal(WeightProfile("custom", (3.0, 0.0)).weights(2), [3, 0])
    with pytest.raises(ValueError):
        WeightProfile("custom", (1.0,)).weights(2)
    with pytest.raises(ValueError):
        WeightProfile("bogus")


def test_scenario_file_round_trip(tmp_path):
    net = Network.from_arrays(3.0, [1, 2], [math.inf, 4], [1, 0.5], file_size=2.0)
    path = tmp_path / "s.json"
    dump_scenario(net, path)
    assert json.loads(path.read_text())["peers"][0]["downlink"] == "inf"
    assert load_scenario(path) == net


def test_rate_allocation_checks(three_peer):
    ok = RateAllocation(np.full((3, 3), 0.5))
    ok.check(three_peer)
    np.testing.assert_array_equal(ok.download_rates(), [1.5] * 3)
    np.testing.assert_array_equal(ok.upload_rates(), [1.0] * 3)
    too_much_source = RateAllocation(np.eye(3))
    with pytest.raises(AllocationError, match="source"):
        too_much_source.check(three_peer)
    r = np.zeros((3, 3))
    r[0, 1] = r[0, 2] = 0.6
    with pytest.raises(AllocationError, match="uploads"):
        RateAllocation(r).check(three_peer)
    r = np.zeros((3, 3))
    r[0, 0] = -1
    with pytest.raises(AllocationError, match="negative"):
        RateAllocation(r).check(three_peer)
    net = Network.from_arrays(5.0, [1.0, 1.0], [1.0, 1.0])
    with pytest.raises(AllocationError, match="downloads"):
        RateAllocation(np.diag([2.0, 0.0])).check(net)
    with pytest.raises(AllocationError):
        RateAllocation(np.zeros((2, 3)))


def test_check_flow_rates(three_peer):
    check_flow_rates(three_peer, [5 / 3] * 3)
    with pytest.raises(AllocationError):
        check_flow_rates(three_peer, [2.5, 0, 0])
    with pytest.raises(AllocationError):
        check_flow_rates(three_peer, [2, 2, 2])
