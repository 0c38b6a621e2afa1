import math
import os

import numpy as np
import pytest

import scenario
from shared.errors import ConfigError, ParameterDomainError

SCENARIOS = os.path.join(os.path.dirname(__file__), os.pardir, "scenarios")

MINIMAL = """
# resonant pair
ensemble.beta = 1.0
drive.eta = 0.1
"""


def _violations(text):
    with pytest.raises(ConfigError) as info:
        scenario.parse_config(text)
    return info.value.violations


def test_minimal_config_defaults():
    config = scenario.parse_config(MINIMAL)
    assert config["ensemble.beta"] == 1.0
    assert config["pair.omega1"] == 1.0
    assert config.routes == ("perturbative", "spectral")
    assert config.sweep_points() == [{}]
    assert config.output_dir == "output"
    assert config["detuning.points"] == 2001


def test_zero_temperature_flag():
    config = scenario.parse_config("ensemble.beta = inf\ndrive.eta = 0.1\n")
    assert math.isinf(config["ensemble.beta"])
    assert scenario.build_ensemble(config).is_zero_temperature


def test_negative_eta_names_key_and_line():
    violations = _violations("ensemble.beta = 1\ndrive.eta = -0.1\n")
    assert violations == [(2, "drive.eta", "drive.eta must be finite and > 0, got -0.1")]


def test_all_violations_are_reported():
    text = "ensemble.beta = 1\ndrive.eta = 0.1\npair.spin = 2\npair.m1 = 0\n"
    violations = _violations(text)
    assert [(line, key) for line, key, _ in violations] == [(3, "pair.spin"), (4, "pair.m1")]
    message = str(ConfigError(violations))
    assert "line 3: pair.spin: unknown key" in message


def test_too_many_sweep_axes():
    text = MINIMAL + (
        "sweep.axis1 = ensemble.beta 1 2 2\n"
        "sweep.axis2 = drive.eta 0.1 0.2 2\n"
        "sweep.axis3 = pair.omega2 1 2 2\n"
    )
    violations = _violations(text)
    assert any("at most 2 sweep axes" in message for _, _, message in violations)


def test_missing_required_key_unless_swept():
    violations = _violations("drive.eta = 0.1\n")
    assert (None, "ensemble.beta", "missing required key") in violations
    config = scenario.parse_config("drive.eta = 0.1\nsweep.axis1 = ensemble.beta 1 4 3 geometric\n")
    assert [point["ensemble.beta"] for point in config.sweep_points()] == pytest.approx([1.0, 2.0, 4.0])


def test_ramp_needs_eta():
    violations = _violations("ensemble.beta = 1\n")
    assert any(key == "drive.eta" for _, key, _ in violations)


def test_sweep_points_row_major():
    text = MINIMAL + "sweep.axis1 = pair.omega2 1 2 2\nsweep.axis2 = drive.eta 0.1 0.2 2\n"
    points = scenario.parse_config(text).sweep_points()
    assert [(p["pair.omega2"], p["drive.eta"]) for p in points] == [(1.0, 0.1), (1.0, 0.2), (2.0, 0.1), (2.0, 0.2)]


def test_bad_sweep_axes():
    assert _violations(MINIMAL + "sweep.axis1 = pair.spin 1 2 3\n")[0][2] == "'pair.spin' is not a sweepable parameter"
    assert _violations(MINIMAL + "sweep.axis1 = drive.eta -1 1 3 geometric\n")
    assert _violations(MINIMAL + "sweep.axis1 = drive.eta 0.1 0.2\n")


def test_routes_run_in_fixed_order():
    config = scenario.parse_config(MINIMAL + "routes = spectral, kubo\n")
    assert config.routes == ("kubo", "spectral")
    violations = _violations(MINIMAL + "routes = spectral, magic\n")
    assert "magic" in violations[0][2]


def test_duplicate_and_malformed_lines():
    violations = _violations(MINIMAL + "drive.eta = 0.2\nnot a setting\n")
    assert [line for line, _, _ in violations] == [5, 6]


def test_updated_config_is_a_copy():
    config = scenario.parse_config(MINIMAL)
    changed = config.updated({"drive.eta": 0.5})
    assert changed["drive.eta"] == 0.5 and config["drive.eta"] == 0.1


def test_builders():
    config = scenario.parse_config(
        MINIMAL + "pair.omega2 = 1.3\ndrive.grad_psi = 2, 0, 0\ndrive.v = 0.5, 1, 0\ntruncation.levels = 7\n"
    )
    pair, ensemble = scenario.build_pair(config), scenario.build_ensemble(config)
    assert pair.omega2 == 1.3
    assert scenario.coupling_strength(config) == 1.0
    assert scenario.build_drive(config).G == pytest.approx([2.0, 0.0, 0.0])
    assert scenario.build_profile(config).kind == "ramp_damped"
    assert scenario.build_truncation(config, pair, ensemble).n_levels_per_oscillator == 7


def test_sampled_drive_from_file(tmp_path):
    t = np.linspace(-5.0, 11.0, 801)
    lines = "\n".join(f"{a:.17g}, {b:.17g}" for a, b in zip(t, np.exp(-((t - 3.0) ** 2))))
    (tmp_path / "pulse.csv").write_text("# t, q\n" + lines + "\n")
    path = tmp_path / "scenario.txt"
    path.write_text("ensemble.beta = inf\ndrive.kind = sampled\ndrive.samples = pulse.csv\n")
    config = scenario.load_config(str(path))
    profile = scenario.build_profile(config)
    assert profile.kind == "sampled"
    assert profile.q(3.0) == pytest.approx(1.0, rel=1e-12)
    assert scenario.build_drive(config) is None


def test_sampled_drive_needs_samples():
    violations = _violations("ensemble.beta = inf\ndrive.kind = sampled\n")
    assert any(key == "drive.samples" for _, key, _ in violations)


def test_sampled_file_shape(tmp_path):
    (tmp_path / "bad.csv").write_text("0 1 2\n1 2 3\n2 3 4\n3 4 5\n")
    path = tmp_path / "scenario.txt"
    path.write_text("ensemble.beta = inf\ndrive.kind = sampled\ndrive.samples = bad.csv\n")
    with pytest.raises(ParameterDomainError):
        scenario.build_profile(scenario.load_config(str(path)))


@pytest.mark.parametrize("content", ["0, 0\n1, x\n2, 0\n3, 0\n", None])
def test_unreadable_samples_name_the_file(tmp_path, content):
    if content is not None:
        (tmp_path / "pulse.csv").write_text(content)
    path = tmp_path / "scenario.txt"
    path.write_text("ensemble.beta = inf\ndrive.kind = sampled\ndrive.samples = pulse.csv\n")
    with pytest.raises(ParameterDomainError, match="pulse.csv"):
        scenario.build_profile(scenario.load_config(str(path)))


@pytest.mark.parametrize("name", ["resonant_pair.txt", "zero_temperature.txt"])
def test_shipped_scenarios_stay_small(name):
    config = scenario.load_config(os.path.join(SCENARIOS, name))
    for point in config.sweep_points():
        point_config = config.updated(point)
        pair, ensemble = scenario.build_pair(point_config), scenario.build_ensemble(point_config)
        assert scenario.build_truncation(point_config, pair, ensemble).n_levels_per_oscillator <= 40
