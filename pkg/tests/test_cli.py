from __future__ import annotations

import json

import pytest

from wqlab.cli import main

CUBE = {"type": "UniformBox", "lower": [0, 0, 0], "sides": [1, 1, 1]}
TP = {"type": "TwoPoint", "a": [0, 0, 0], "b": [1, 0, 0], "w": 0.5}


def _config(tmp_path, experiments, **extra):
    cfg = {"master_seed": 1234, "measures": {"cube": CUBE, "tp": TP}, "experiments": experiments}
    cfg.update(extra)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg, indent=2))
    return path


SIM = {"id": "sim", "measure": "cube", "p": 1, "norm": "LInf", "n_values": [8, 16, 32],
       "replications": 4, "q": 3, "solver": {"kind": "semidiscrete", "grid_level": 2},
       "commands": ["simulate", "rate", "cube-check", "pierce-check"]}
EXACT = {"id": "one", "commands": ["exact"], "p": 1, "norm": "L2",
         "mu": {"atoms": [[0, 0, 0]]}, "nu": {"atoms": [[3, 4, 0]]}}


def test_exact_prints_distance(tmp_path, capsys):
    cfg = _config(tmp_path, [EXACT])
    assert main(["exact", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert "= 5.0" in capsys.readouterr().out
    assert (tmp_path / "o" / "one.exact.csv").exists()
    man = json.loads((tmp_path / "o" / "exact.manifest.json").read_text())
    assert man["master_seed"] == 1234 and "one.exact.csv" in man["artifacts"]


def test_simulate_deterministic_and_manifest_rerun(tmp_path):
    cfg = _config(tmp_path, [EXACT, SIM])
    for out in ("a", "b"):
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / out)]) == 0
    a, b = tmp_path / "a", tmp_path / "b"
    for name in ("sim.simulate.csv", "sim.simulate.summary.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert not (a / "one.exact.csv").exists()
    man = a / "simulate.manifest.json"
    assert main(["simulate", "--config", str(man), "--out", str(tmp_path / "c"), "--workers", "2"]) == 0
    assert (a / "sim.simulate.csv").read_bytes() == (tmp_path / "c" / "sim.simulate.csv").read_bytes()


def test_seed_override_changes_output(tmp_path):
    cfg = _config(tmp_path, [SIM])
    main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "a")])
    main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "b"), "--seed", "99"])
    assert ((tmp_path / "a" / "sim.simulate.csv").read_bytes()
            != (tmp_path / "b" / "sim.simulate.csv").read_bytes())


def test_rate_two_point_exact(tmp_path):
    exp = {"id": "tpx", "measure": "tp", "p": 1, "source": "two_point_exact",
           "n_values": [16, 32, 64, 128, 256, 512, 1024]}
    cfg = _config(tmp_path, [exp])
    assert main(["rate", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    fit = (tmp_path / "tpx.rate.csv").read_text().splitlines()[-1].split(",")
    assert fit[0] == "fit" and -0.55 <= float(fit[6]) <= -0.45


def test_checks_and_experiment_filter(tmp_path, capsys):
    cfg = _config(tmp_path, [EXACT, SIM])
    for sub in ("cube-check", "pierce-check"):
        assert main([sub, "--config", str(cfg), "--out", str(tmp_path), "--experiment", "sim"]) == 0
        text = (tmp_path / f"sim.{sub}.csv").read_text()
        assert "UNSATISFIED" not in text and text.count("\n") == 4


def test_hr_check_with_reference(tmp_path):
    half = {"type": "UniformBox", "lower": [0, 0, 0], "sides": [0.5, 1, 1]}
    ref = dict(SIM, id="ref", commands=["simulate"])
    hr = dict(SIM, id="half", measure=half, reference="ref", commands=["hr-check"])
    cfg = _config(tmp_path, [ref, hr])
    assert main(["hr-check", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert "empirical-constant" in (tmp_path / "half.hr-check.csv").read_text()


def test_dyadic_and_quantize(tmp_path):
    dy = {"id": "dy", "measure": "cube", "N": 16, "levels": 8, "commands": ["dyadic"]}
    qo = {"id": "qo", "measure": "cube", "n_values": [1, 2], "p": 2, "norm": "L2",
          "restarts": 1, "iters": 10, "commands": ["quantize-opt"]}
    cfg = _config(tmp_path, [dy, qo])
    assert main(["dyadic", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert main(["quantize-opt", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "dy.dyadic.csv").exists() and (tmp_path / "qo.quantize-opt.csv").exists()


def test_kappa(tmp_path):
    ka = {"id": "ka", "d": 3, "p": 1, "n_values": [8, 16, 32], "replications": 3,
          "solver": {"kind": "semidiscrete", "grid_level": 2}, "commands": ["kappa"]}
    cfg = _config(tmp_path, [ka])
    assert main(["kappa", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert "last3_rel_change" in (tmp_path / "ka.kappa.csv").read_text()


@pytest.mark.parametrize("mutate,needle", [
    (lambda c: c.pop("master_seed"), "master_seed"),
    (lambda c: c["experiments"].append(dict(c["experiments"][0])), "duplicate id"),
    (lambda c: c["experiments"][0].update(measure="nope"), "unknown measure"),
    (lambda c: c["experiments"][0].pop("replications"), "replications"),
    (lambda c: c["experiments"][0].update(norm="L7"), "L7"),
    (lambda c: c["experiments"][0].update(commands=["fly"]), "commands"),
])
def test_config_errors_exit_2(tmp_path, capsys, mutate, needle):
    cfg = {"master_seed": 1, "measures": {"cube": CUBE}, "experiments": [dict(SIM)]}
    mutate(cfg)
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(cfg))
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path)]) == 2
    assert needle in capsys.readouterr().err


def test_malformed_json_reports_position(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"master_seed": 1,\n "experiments": [}')
    assert main(["simulate", "--config", str(path)]) == 2
    assert "line 2" in capsys.readouterr().err


def test_capacity_error_exit_3(tmp_path, capsys):
    exp = dict(SIM, solver={"kind": "semidiscrete", "grid_level": 5, "edge_cap": 1000})
    cfg = _config(tmp_path, [exp])
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 3
    assert "capacity" in capsys.readouterr().err


def test_unsatisfied_rows_still_exit_0(tmp_path):
    # a tiny level-0 grid inflates the certified bracket above the cube bound
    exp = dict(SIM, n_values=[4096], replications=2, solver={"kind": "semidiscrete", "grid_level": 0})
    cfg = _config(tmp_path, [exp])
    assert main(["cube-check", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert "UNSATISFIED" in (tmp_path / "sim.cube-check.csv").read_text()
