import csv
import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from eisndt.asymptotics import PoleSet, dg_from_poles
from eisndt.cli import (EXIT_OK, EXIT_PARSE, EXIT_RANK, EXIT_SOLVER, EXIT_VALIDATION, ConfigError,
                        freq_label, main, parse_frequencies)
from eisndt.forward import Frame
from eisndt.scene import Bar, Scene

from conftest import circle_points

ONE_BAR = Scene(0.1, bars=(Bar((0.03, -0.02), 0.01),))


def write_config(tmp_path, scene=ONE_BAR, **extra):
    data = {"scene": scene.to_dict(), "mesh": {"target_h": 0.01}, **extra}
    path = tmp_path / "run.json"
    path.write_text(json.dumps(data))
    return str(path)


def test_frequency_parsing():
    assert parse_frequencies("10, 1e4,800000") == [10.0, 1e4, 8e5]
    assert parse_frequencies([0, 1e6]) == [0.0, 1e6]
    for bad in ("", "abc", "-5", "2e6", []):
        with pytest.raises(ConfigError):
            parse_frequencies(bad)
    assert freq_label(8e5) == "800000" and freq_label(2.5) == "2.5"


def test_validate_builtin_model(capsys):
    assert main(["validate", "--model", "1"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "scene is valid" in out and "VIOLATION" not in out


def test_validate_reports_overlap(tmp_path, capsys):
    scene = Scene(0.1, bars=(Bar((0.0, 0.0), 0.01), Bar((0.015, 0.0), 0.01)))
    assert main(["validate", "--config", write_config(tmp_path, scene)]) == EXIT_VALIDATION
    assert "VIOLATION" in capsys.readouterr().out


def test_parse_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["validate", "--config", str(bad)]) == EXIT_PARSE
    assert main(["validate", "--config", str(tmp_path / "missing.json")]) == EXIT_PARSE
    assert main(["validate"]) == EXIT_PARSE
    assert main(["frobnicate"]) == EXIT_PARSE
    assert main(["forward", "--model", "1", "--freqs", ""]) == EXIT_PARSE
    assert main(["forward", "--model", "1", "--freqs", "5e6"]) == EXIT_PARSE
    weird = tmp_path / "weird.json"
    weird.write_text(json.dumps({"scene": {"bars": []}}))
    assert main(["validate", "--config", str(weird)]) == EXIT_PARSE
    assert main(["sweep", "--config", write_config(tmp_path, mesh={"crack_mode": "x"})]) == EXIT_PARSE


def test_mesh_failure_is_a_solver_error(tmp_path):
    cfg = write_config(tmp_path)
    data = json.loads(open(cfg).read())
    data["mesh"] = {"target_h": 1e-4, "cap": 1000}
    open(cfg, "w").write(json.dumps(data))
    assert main(["forward", "--config", cfg, "--freqs", "10"]) == EXIT_SOLVER


def test_forward_writes_reciprocal_frames(tmp_path, capsys):
    out = tmp_path / "fwd"
    code = main(["forward", "--config", write_config(tmp_path), "--out", str(out),
                 "--freqs", "10,800000", "--check-reciprocity"])
    assert code == EXIT_OK
    assert "max relative asymmetry" in capsys.readouterr().out
    for tag in ("10", "800000"):
        path = out / f"frame_{tag}.csv"
        with open(path) as fh:
            assert len(list(csv.reader(fh))) == 257
        assert Frame.from_csv(path).reciprocity_error() <= 1e-8


def test_outputs_are_byte_identical(tmp_path):
    cfg = write_config(tmp_path)
    for name in ("a", "b"):
        assert main(["sweep", "--config", cfg, "--freqs", "10,800000",
                     "--out", str(tmp_path / name)]) == EXIT_OK
    a, b = sorted((tmp_path / "a").iterdir()), sorted((tmp_path / "b").iterdir())
    assert [p.name for p in a] == [p.name for p in b]
    assert all(p.read_bytes() == q.read_bytes() for p, q in zip(a, b))


def test_sweep_outputs(tmp_path):
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", write_config(tmp_path), "--out", str(out),
                 "--coarse-inverse", "--alpha-rel", "1e-3"]) == EXIT_OK
    index = json.loads((out / "index.json").read_text())
    assert index["alpha_rel"] == 1e-3
    assert len(index["images"]) == 6
    assert len(list(out.glob("image_*.csv"))) == 6
    assert len(list(out.glob("sigma_*.pgm"))) == 6 and len(list(out.glob("epsilon_*.pgm"))) == 6
    assert index["inverse_mesh"]["triangles"] < index["simulation_mesh"]["triangles"]
    assert set(index["images"][0]["visibility"]) == {"bar_1"}


def write_samples(path, poles, n=256):
    pts = circle_points(n)
    vals = dg_from_poles(poles, pts[:, 0] + 1j * pts[:, 1])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "re", "im"])
        for (x, y), v in zip(pts, vals):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(v.real)), repr(float(v.imag))])
    return str(path)


def test_locate_from_samples(tmp_path):
    z = 0.03 - 0.02j
    samples = write_samples(tmp_path / "dg.csv", PoleSet(z=np.array([z]), d=np.array([2e-4 + 0j])))
    out = tmp_path / "loc"
    assert main(["locate", "--config", write_config(tmp_path), "--samples", samples,
                 "--out", str(out)]) == EXIT_OK
    report = json.loads((out / "poles.json").read_text())
    assert report["residual"] < 1e-9
    assert complex(*report["bars"][0]["z"]) == pytest.approx(z, abs=1e-12)


def test_locate_rank_deficient(tmp_path):
    samples = write_samples(tmp_path / "zero.csv", PoleSet())
    assert main(["locate", "--config", write_config(tmp_path), "--samples", samples,
                 "--out", str(tmp_path)]) == EXIT_RANK


def test_locate_without_defects(tmp_path):
    out = tmp_path / "loc"
    assert main(["locate", "--config", write_config(tmp_path, Scene(0.1)), "--out", str(out)]) == EXIT_OK
    report = json.loads((out / "poles.json").read_text())
    assert report["cracks"] == [] and report["bars"] == []


@pytest.mark.slow
def test_locate_model1_bars(tmp_path):
    out = tmp_path / "loc"
    assert main(["locate", "--model", "1", "--out", str(out)]) == EXIT_OK
    centres = sorted(complex(*b["z"]).real for b in json.loads((out / "poles.json").read_text())["bars"])
    assert np.allclose(centres, [-0.05, 0.05], atol=0.01)


def test_spectro_dump(tmp_path):
    out = tmp_path / "sp"
    assert main(["spectro-dump", "--model", "1", "--freqs", "10,1000000", "--out", str(out)]) == EXIT_OK
    with open(out / "spectro.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2
    assert float(rows[1]["abs_lambda_c"]) == pytest.approx(0.004859810618418716, rel=1e-12)


def test_console_script(tmp_path):
    exe = shutil.which("eisndt")
    cmd = [exe] if exe else [sys.executable, "-m", "eisndt.cli"]
    ok = subprocess.run(cmd + ["validate", "--model", "2"], capture_output=True, text=True)
    assert ok.returncode == 0 and "scene is valid" in ok.stdout
    bad = subprocess.run(cmd + ["forward", "--model", "1", "--freqs", ""], capture_output=True, text=True)
    assert bad.returncode == 1 and "empty" in bad.stderr
