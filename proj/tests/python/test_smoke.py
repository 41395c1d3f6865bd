import json
import math

import pytest

import prefgait


def test_protocol_defaults():
    assert prefgait.default_ranges() == [
        (5.0, 8.0), (10.0, 20.0), (10.0, 20.0), (5.0, 8.0), (55.0, 65.0), (10.0, 20.0)
    ]
    assert prefgait.familiarization_profile() == [7.0, 10.0, 15.0, 7.0, 60.0, 15.0]


def test_interpolate_and_torque():
    f = prefgait.familiarization_profile()
    phase, torque = prefgait.interpolate(f)
    assert len(phase) == len(torque) == 1000
    assert prefgait.torque_at(f, 0.10) == pytest.approx(-7.0)
    assert prefgait.torque_at(f, 0.60) == pytest.approx(7.0)
    with pytest.raises(ValueError):
        prefgait.interpolate(f, 10)


def test_batch_and_perturb():
    batch = prefgait.sample_batch(40, 3)
    assert len(batch) == 40
    assert len({tuple(p) for p in batch}) == 40
    assert batch == prefgait.sample_batch(40, 3)
    p = prefgait.perturb(prefgait.familiarization_profile(), "peak_torque_ext", 1)
    assert p[0] == pytest.approx(9.0)


def test_likelihood_sums_to_one():
    for ra, rb in [(0.3, -1.2), (5.0, 4.0), (-20.0, 20.0)]:
        assert prefgait.choice_probability(ra, rb, 2.0) + prefgait.choice_probability(rb, ra, 2.0) == 1.0
    assert prefgait.choice_probability(1.0, 0.0, 1.0) == pytest.approx(1 / (1 + math.exp(-1)))


def test_prior_is_unit_norm():
    for w in prefgait.prior_belief(50, 1):
        assert math.fsum(x * x for x in w) == pytest.approx(1.0)


def test_power_ratio():
    n = 10000
    omega = [math.sin(2 * math.pi * (i + 0.5) / n) for i in range(n)]
    assert prefgait.power_ratio([1.0] * n, omega) == pytest.approx(1.0, abs=1e-6)
    assert prefgait.power_ratio([1.0] * 4, [0.5] * 4) == 0.0


def test_simulate_and_replay(tmp_path):
    r = prefgait.simulate({"beta": "inf", "seed": 2}, {"seed": 5}, validate=True)
    assert r["final_index"] is not None
    assert len(r["weight_history"]) == 12
    log = tmp_path / "session.jsonl"
    log.write_text("".join(json.dumps(e) + "\n" for e in r["events"]))
    back = prefgait.replay(log)
    assert back["final_index"] == r["final_index"]
    assert back["weight_history"] == r["weight_history"]
    with pytest.raises(FileNotFoundError):
        prefgait.replay(tmp_path / "missing.jsonl")


def test_campaign():
    s = prefgait.campaign({"beta": 5}, {"sampler": {"beta": 5}}, seed_count=3)
    assert 0.0 <= s["top1_rate"] <= s["top3_rate"] <= 1.0
    assert s["csv"].splitlines()[0].startswith("seed,final_index")
    with pytest.raises(ValueError):
        prefgait.simulate({"beta": -1})
