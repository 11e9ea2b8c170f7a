import json
import math

import pytest

import fvselect as fv


def test_qsd_family():
    q = fv.QsdParams(0.375)
    assert q.beta == pytest.approx(0.5)
    assert q.norm_const == pytest.approx(1.5)
    assert q.density(1.0) == pytest.approx(1.5 * math.exp(-1) * math.sinh(0.5), rel=1e-12)
    assert fv.QsdParams(0.5).is_minimal()
    with pytest.raises(ValueError):
        fv.QsdParams(0.7)


def test_survival_and_hitting():
    assert fv.survival_prob(1.0, 0.0) == 1.0
    assert fv.survival_prob(1.0, 1.0) == pytest.approx(0.331898, abs=1e-6)
    assert math.isfinite(fv.survival_prob(700.0, 2.0))
    assert fv.hitting_mgf(1.0, 0.5) == pytest.approx(math.e)
    assert fv.green_g1(2.5) == 2.5
    g = fv.green_apply(lambda x: math.exp(-x), [1.0, 2.0])
    assert g[0] == pytest.approx(2.0 / 3.0 * (1 - math.exp(-1)), rel=1e-6)
    assert fv.t_y_qsd(fv.QsdParams(0.25), 3.0) == pytest.approx(12.0)


def test_sampling_and_distances():
    xs = fv.QsdParams(0.5).sample(200_000, seed=3)
    assert sum(xs) / len(xs) == pytest.approx(2.0, abs=0.02)
    assert fv.w1_to_qsd(xs, 0.5) < 0.02
    assert fv.w1([1.0], [3.0]) == pytest.approx(2.0)
    assert fv.ks([1.0], [1.0]) == 0.0
    assert fv.QsdParams(0.5).sample(10, seed=3) == fv.QsdParams(0.5).sample(10, seed=3)


def test_constants():
    assert fv.iota(100) == pytest.approx(-100 * math.log(0.99))
    assert fv.lambda_lower_bound(100) == pytest.approx(0.5 / fv.iota(100))
    x = 1 / math.sqrt(2)
    assert fv.wave_profile(fv.MIN_WAVE_SPEED, x) == pytest.approx(2 * x * math.exp(-1))


def test_flow_theta():
    parts, log_s = fv.flow_theta(1.0, 1.0, 20_000, dt=0.01, seed=5)
    assert all(p > 0 for p in parts)
    assert -log_s == pytest.approx(math.log(fv.survival_prob(1.0, 1.0)), abs=0.05)


def test_config_errors():
    with pytest.raises(fv.ConfigError, match="replicas"):
        fv.run("fv-stationary", {"replicas": 0})
    with pytest.raises(fv.ConfigError, match="bogus"):
        fv.run("qsd-table", "bogus = 1\n")
    with pytest.raises(ValueError):
        fv.default_config("nope")


def test_run_and_verify(tmp_path):
    assert "fv-sweep" in fv.experiment_names()
    assert fv.default_config("fv-sweep")["n_particles"] == [20, 50, 100, 200]
    out = tmp_path / "qsd"
    files = fv.run("qsd-table", {"paths": 5000, "lambdas": [0.25, 0.5]}, seed=11, out=str(out))
    assert {p.name for p in files} >= {"qsd_table.csv", "manifest.json"}
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["root_seed"] == 11
    report = fv.verify(out)
    assert report["passed"], report

    again = tmp_path / "qsd2"
    fv.run("qsd-table", {"paths": 5000, "lambdas": [0.25, 0.5]}, seed=11, out=str(again), workers=1)
    assert (out / "qsd_table.csv").read_bytes() == (again / "qsd_table.csv").read_bytes()

    assert not fv.verify(tmp_path / "missing")["passed"]
