import json

import numpy as np
import pytest

from manifold_relu.cli import main
from manifold_relu.indicators import ball_size
from manifold_relu.pipeline import (ConfigError, PipelineConfig, annulus_vs_disk, run_pipeline,
                                    scaling_csv, scaling_experiment, scaling_spec)
from manifold_relu.shapes import shape_to_dict, write_point_cloud


@pytest.fixture(scope="module")
def report():
    return run_pipeline(PipelineConfig(seed=3))


def test_pipeline_succeeds_and_reports(report):
    assert report.success and report.recovery_success and report.risk_success
    assert report.betti_recovered == {"1": [1, 1], "0": [1, 0]}
    assert report.classifier["within_bound"]
    assert report.risk["mean"] <= 0.1
    assert report.g_size_measured > report.classifier["size"]
    assert "training set smaller than the sample-size bound" in report.flags


def test_pipeline_is_deterministic(report):
    again = run_pipeline(PipelineConfig(seed=3))
    assert again.to_json() == report.to_json()


def test_identity_embedding_in_the_plane():
    rep = run_pipeline(PipelineConfig(problem=annulus_vs_disk(D=2), seed=1))
    assert rep.recovery_success
    assert rep.complex_counts["K"] == rep.complex_counts["L"]


def test_config_validation():
    with pytest.raises(ConfigError):
        PipelineConfig(nerve_radius=0.3).validate()  # tau / 2 = 0.25
    with pytest.raises(ConfigError):
        PipelineConfig(eps=1.5).validate()
    with pytest.raises(ConfigError):
        PipelineConfig(n_risk_samples=10).validate()


def test_scaling_sizes_are_exact_and_quadratic():
    res = scaling_experiment([2, 4, 8], 0.1, 2)
    for row in res["rows"]:
        assert row["size"] == row["expected_size"] and row["within_bound"]
        assert row["size"] == row["beta"] * ball_size(2, 0.5, 0.1 / row["beta"]) + 2
    assert 1.8 <= res["exponent"] <= 2.1
    lines = scaling_csv(res).strip().splitlines()
    assert lines[0].startswith("beta,components,size") and len(lines) == 4


def test_scaling_degenerate_fit():
    res = scaling_experiment([4], 0.1, 2)
    assert res["exponent"] is None and "degenerate" in res["error"]
    assert "degenerate" in scaling_csv(res)
    with pytest.raises(ValueError):
        scaling_spec(3, 3, kind="torus")


def test_halving_eps_roughly_doubles_size():
    small = scaling_experiment([2], 0.2, 2)["rows"][0]["size"]
    big = scaling_experiment([2], 0.1, 2)["rows"][0]["size"]
    assert 1.8 <= big / small <= 2.2


def _cli(tmp_path, cmd, cfg):
    path = tmp_path / f"{cmd}.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / cmd
    return main([cmd, "--config", str(path), "--out", str(out)]), out


def test_cli_synth_and_risk(tmp_path):
    code, out = _cli(tmp_path, "synth-ball", {"d": 2, "r": 1.0, "eps": 0.1,
                                              "measure": {"type": "uniform_box",
                                                          "lower": [-2, -2], "upper": [2, 2]}})
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["constructed_size"] == 164 and rep["within_bounds"]
    problem = {"type": "problem", "positive": {"type": "ball", "r": 1.0, "c": [0, 0]},
               "measure": {"type": "uniform_box", "lower": [-2, -2], "upper": [2, 2]}}
    code, rout = _cli(tmp_path, "risk", {"network": str(out / "network.json"),
                                         "problem": problem, "n": 5000})
    assert code == 0 and json.loads((rout / "report.json").read_text())["mean"] <= 0.05


def test_cli_complexes(tmp_path):
    t = np.linspace(0, 2 * np.pi, 40, endpoint=False)
    write_point_cloud(tmp_path / "c.csv", np.c_[np.cos(t), np.sin(t)])
    for cmd in ("cech", "alpha2d"):
        code, out = _cli(tmp_path, cmd, {"points": str(tmp_path / "c.csv"), "r": 0.3,
                                       "max_dim": 3})
        assert code == 0
        assert json.loads((out / "report.json").read_text())["betti"][:2] == [1, 1]
    code, out = _cli(tmp_path, "betti", {"complex": str(tmp_path / "cech" / "complex.txt")})
    assert code == 0 and json.loads((out / "report.json").read_text())["complexity"] == 2


def test_cli_bounds_and_scaling(tmp_path):
    code, out = _cli(tmp_path, "bounds", {"d": 1, "D": 2, "beta": 2, "eps": 0.4, "tau": 1.0,
                                          "delta": 0.05, "vol": 6.283185307179586})
    assert code == 0
    assert json.loads((out / "report.json").read_text())["sample_bound"]["n_required"] == 225
    code, out = _cli(tmp_path, "scaling", {"betas": [2, 4], "eps": 0.2})
    assert code == 0 and (out / "scaling.csv").exists()


def test_cli_exit_codes(tmp_path):
    assert _cli(tmp_path, "bounds", {})[0] == 2
    assert _cli(tmp_path, "synth-rep", {})[0] == 2
    ring = {"type": "uniform_on_shapes",
            "shapes": [{"type": "torus", "r": 0.02, "R": 0.98, "c": [0, 0]}]}
    assert _cli(tmp_path, "synth-ball", {"d": 2, "r": 1.0, "eps": 0.5, "measure": ring})[0] == 3


def test_cli_pipeline(tmp_path):
    cfg = {"problem": shape_to_dict(annulus_vs_disk()), "n_risk_samples": 200}
    code, out = _cli(tmp_path, "pipeline", cfg)
    assert code == 0
    assert json.loads((out / "report.json").read_text())["recovery_success"]
