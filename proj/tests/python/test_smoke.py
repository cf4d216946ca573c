import math
import os
from pathlib import Path

import pytest

import optstop

CONFIGS = Path(os.environ.get("OPTSTOP_CONFIG_DIR", Path(__file__).resolve().parents[2] / "configs"))


def test_belief_update():
    assert optstop.belief_update(0.5, 0.1, 0.2, 0.01) == pytest.approx(0.6711, abs=1e-4)
    assert optstop.belief_update(1.0, 0.3, 0.1, 0.01) == 1.0
    with pytest.raises(optstop.ZeroLikelihoodError):
        optstop.belief_update(0.3, 0.0, 0.0, 0.01)


def test_policy_helpers():
    assert optstop.sigmoid(0.0) == 0.5
    assert optstop.harden([0.0, 0.0]) == [0.5, 0.5]
    assert optstop.stop_probability([0.0], 1, 0.5) == pytest.approx(0.5)
    assert optstop.stop_probability([0.0], 1, 0.75) == pytest.approx(1.0 / (1.0 + 3.0**-20))


def test_transition_minors():
    m = optstop.transition_minors(0.01)
    assert m[0][0] == 1.0
    assert m[1][0] == 0.01
    assert m[1][1] == 0.99
    assert m[2][2] == 0.99
    assert all(v == 0.0 for row in optstop.transition_minors(0.01, final_stop=True) for v in row)


def test_oracle_structure():
    exp = optstop.Experiment.from_file(CONFIGS / "smoke.yaml")
    assert exp.stops == 3
    report = exp.oracle()
    assert report["resolution"] == 201
    assert report["converged"]
    for key in ("nested", "connected", "monotone_thresholds", "tp2_observations"):
        assert report[key]["ok"], key
    alpha = report["thresholds"]
    assert alpha[0] >= alpha[1] >= alpha[2]
    assert report["values"][3][0] == pytest.approx(report["value_at_zero"])


def test_train_and_evaluate_are_deterministic():
    exp = optstop.Experiment.from_file(CONFIGS / "smoke.yaml")
    a = exp.train(iterations=50, restarts=2)
    b = exp.train(iterations=50, restarts=2)
    assert a == b
    assert len(a["runs"]) == 2
    assert len(a["thresholds"]) == 3
    m = exp.evaluate("hard_threshold", a["thresholds"], episodes=100)
    assert m["episodes"] == 100
    assert m == exp.evaluate("hard_threshold", a["thresholds"], episodes=100)
    assert m["prevention_probability"] + m["early_stopping_probability"] == pytest.approx(1.0)


def test_baselines_and_errors():
    exp = optstop.Experiment.scenario("easy")
    oracle = exp.evaluate("intrusion_time_oracle", episodes=200)
    shiryaev = exp.evaluate("shiryaev", [0.75], episodes=200)
    assert oracle["prevention_probability"] == 1.0
    assert oracle["reward_mean"] >= shiryaev["reward_mean"]
    assert math.isfinite(oracle["delay_mean"])
    with pytest.raises(ValueError):
        exp.evaluate("hard_threshold", [1.5])
    with pytest.raises(ValueError):
        exp.evaluate("random")
    with pytest.raises(optstop.ConfigError):
        optstop.Experiment.scenario("hard")
    assert "stops: 1" in exp.config_yaml()
