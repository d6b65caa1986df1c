import csv
import io
import json
import subprocess
import sys

import pytest

from pnglab import harness
from pnglab.cli import main
from pnglab.pointfield import PointConfig, sample_config


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_no_arguments_prints_usage(capsys):
    code, out, err = run(capsys)
    assert code == 2 and "usage" in err and out == ""


@pytest.mark.parametrize("argv", [["bogus"], ["tabulate", "cdf", "--nope"], ["simulate", "ising"],
                                  ["experiment", "not_an_experiment"]])
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "usage" in err


def test_domain_error_exit_2(capsys):
    code, _, err = run(capsys, "tabulate", "cdf", "--lambda", "1", "--rho", "1")
    assert code == 2 and "error" in err


def test_tabulate_cdf_boundaries(capsys):
    code, out, _ = run(capsys, "tabulate", "cdf", "--lambda", "0.5", "--rho", "1")
    assert code == 0
    table = {float(r["r"]): float(r["z_cdf"]) for r in csv.DictReader(io.StringIO(out))}
    assert table[1.0] == 0.0 and table[4.0] == 1.0


def test_tabulate_formats(capsys, tmp_path):
    code, out, _ = run(capsys, "tabulate", "shape", "--format", "json", "--points", "5")
    assert code == 0 and json.loads(out)["f"][2] == pytest.approx(2 ** 0.5)
    dest = tmp_path / "b.svg"
    assert run(capsys, "tabulate", "burgers", "--format", "svg", "--out", str(dest))[0] == 0
    assert dest.read_text().startswith("<svg")


def test_sample_reproduces_config(capsys, tmp_path):
    dest = tmp_path / "c.json"
    code, _, _ = run(capsys, "sample", "--lambda", "1", "--rho", "0.5", "--window", "6", "4",
                     "--seed", "12", "--out", str(dest))
    assert code == 0
    assert PointConfig.from_json(dest).same_as(sample_config(1, 0.5, (6, 4), seed=12))
    code, out, _ = run(capsys, "sample", "--horizon", "3", "--format", "csv")
    assert code == 0 and out.startswith("kind,x,t")


@pytest.mark.parametrize("model", ["lpp", "hammersley", "png"])
@pytest.mark.parametrize("fmt", ["csv", "json", "svg"])
def test_simulate_exports(capsys, tmp_path, model, fmt):
    src = tmp_path / "c.json"
    sample_config(1, 1, (12, 12), seed=3).to_json(src)
    code, out, _ = run(capsys, "simulate", model, "--input", str(src), "--format", fmt)
    assert code == 0
    if fmt == "json":
        json.loads(out)
    elif fmt == "svg":
        assert out.startswith("<svg")
    else:
        assert len(out.splitlines()) > 2


def test_experiment_writes_record_with_effective_config(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "tail_check", "lambda": 0, "rho": 0, "horizon": 20,
                               "replicas": 3, "seed": 5, "options": {"width": 6.0}}))
    code, out, _ = run(capsys, "experiment", "tail_check", "--config", str(cfg), "--replicas", "4",
                       "--out", str(tmp_path / "runs"))
    assert code == 0 and "PASS" in out
    rec = harness.load(tmp_path / "runs" / "tail_check-seed5")
    # flag beats file, file beats defaults
    assert rec.spec.replicas == 4 and rec.spec.horizon == 20 and rec.spec.seed == 5
    assert rec.spec.options == {"width": 6.0}
    assert rec.spec.out == str(tmp_path / "runs")


def test_experiment_failure_exit_1(capsys, tmp_path):
    code, out, _ = run(capsys, "experiment", "shape_check", "--horizon", "10", "--replicas", "3",
                       "--out", str(tmp_path))
    assert code == 1 and "FAIL" in out


def test_output_directory_from_environment(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("PNGLAB_OUT", str(tmp_path / "env"))
    code, _, _ = run(capsys, "experiment", "tail_check", "--horizon", "20", "--replicas", "2",
                     "--seed", "3")
    assert code == 0
    assert (tmp_path / "env" / "tail_check-seed3" / "summary.json").exists()


def test_experiment_json_summary(capsys, tmp_path):
    code, out, _ = run(capsys, "experiment", "cdf_scp", "--lambda", "0.5", "--rho", "1", "--horizon", "30",
                       "--replicas", "20", "--seed", "7", "--out", str(tmp_path), "--format", "json")
    doc = json.loads(out)
    assert code in (0, 1)
    assert doc["spec"]["seed"] == 7 and doc["verdicts"][0]["name"] == "ks_distance"
    assert (tmp_path / "cdf_scp-seed7" / "cdf.svg").exists()


def test_config_for_other_experiment_rejected(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "cdf_scp", "lambda": 0.5, "rho": 1, "horizon": 5,
                               "replicas": 1}))
    code, _, err = run(capsys, "experiment", "tail_check", "--config", str(cfg), "--out", str(tmp_path))
    assert code == 2 and "cdf_scp" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "pnglab"], capture_output=True, text=True)
    assert proc.returncode == 2 and "usage" in proc.stderr
