import math

import numpy as np
import pytest

import bandframe


def interval_settings(tmp_path, **extra):
    settings = {
        "domain.kind": "interval",
        "domain.params": [0, 1],
        "domain.h": "1/128",
        "test.trials": 10,
        "test.functions": 4,
        "output.dir": str(tmp_path / "out"),
    }
    settings.update(extra)
    return settings


def test_filters_sum_to_one():
    s = np.linspace(0.0, 40.0, 401)
    total = [bandframe.filter_value(0, x) ** 2 + sum(bandframe.filter_value(j, x) ** 2 for j in range(1, 8)) for x in s]
    assert max(abs(t - 1.0) for t in total) < 1e-12
    assert bandframe.cutoff(0.5) == 1.0
    assert bandframe.cutoff(2.5) == 0.0


def test_run_interval(tmp_path):
    report = bandframe.run("all", settings=interval_settings(tmp_path))
    assert report["schema"] == bandframe.REPORT_SCHEMA
    assert report["passed"] is True
    assert (tmp_path / "out" / "report.json").exists()
    text = bandframe.summarize(report)
    assert "all gating certificates pass" in text


def test_partial_stage_and_no_files(tmp_path):
    report = bandframe.run("frame", settings=interval_settings(tmp_path, **{"output.write": False}))
    assert "frame" in report
    assert "verify" not in report
    assert not (tmp_path / "out").exists()


def test_config_errors_name_the_key(tmp_path):
    with pytest.raises(bandframe.ConfigError, match="frame.delta"):
        bandframe.run("frame", settings=interval_settings(tmp_path, **{"frame.delta": 1.5}))
    with pytest.raises(bandframe.ConfigError):
        bandframe.resolve_config(settings={"frame.colour": 1})
    assert "frame.delta" in bandframe.setting_keys()


def test_config_file(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('[domain]\nkind = "disk"\nparams = [0, 0, 1]\nh = "1/16"\n[frame]\ndelta = 0.4\n')
    resolved = bandframe.resolve_config(path, {"test.seed": 7})
    assert resolved["frame"]["delta"] == 0.4
    assert resolved["test"]["seed"] == 7


def test_problem_round_trip():
    p = bandframe.Problem("rectangle", [0, 1, 0, 1], 1 / 32)
    assert p.size == 31 * 31
    assert p.nodes.shape == (p.size, 2)
    assert abs(p.eigenvalues[0] / (2 * math.pi**2) - 1) < 1e-2

    a0 = p.build_frame(delta=0.5)
    assert a0 > 0
    lower, upper = p.frame_bounds()
    assert lower >= 0.5 - 1e-10
    assert upper <= 1 + 1e-10

    omega = p.eigenvalues[p.resolved_modes - 1]
    f = p.sample(omega, 3)
    coeffs = p.analyze(f)
    assert len(coeffs) == p.max_level + 1
    energy = sum(float(c @ c) for c in coeffs)
    assert 0.5 - 1e-10 <= energy / p.norm(f) ** 2 <= 1 + 1e-10

    value, errors = p.reconstruct(coeffs, 17, f)
    assert errors[-1] / errors[0] <= 1e-8
    assert p.norm(value - f) <= 1e-8

    norms = p.besov_norms(f, alpha=1.0, q=2.0)
    assert math.sqrt(0.5) - 1e-10 <= norms["frame"] / norms["lp"] <= 1 + 1e-10


def test_problem_requires_frame():
    p = bandframe.Problem("interval", [0, 1], 1 / 64)
    with pytest.raises(bandframe.ContractViolation):
        p.analyze(np.zeros(p.size))
