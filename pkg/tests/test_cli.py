"""CLI surface: flags, config layering, file formats, manifests, exit codes."""

import hashlib
import json

import numpy as np
import pytest

import bzlattice as bz
from bzlattice.cli import main, parse_number, parse_range


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    return header, rows


def sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def test_parse_number_expressions():
    assert parse_number("pi/2-0.1") == pytest.approx(np.pi / 2 - 0.1)
    assert parse_number("2**3") == 8.0
    assert parse_number("-0.5") == -0.5
    assert parse_number(" (pi) * 2 ") == pytest.approx(2 * np.pi)
    for bad in ("two", "pi;import os", "1/0*nan", "e**2"):
        with pytest.raises(Exception):
            parse_number(bad)


def test_parse_range():
    assert parse_range("0:1.2:120") == (0.0, 1.2, 120)
    assert parse_range("0:pi:4") == (0.0, pytest.approx(np.pi), 4)
    for bad in ("0:1", "0:1:0", "0:1:x"):
        with pytest.raises(Exception):
            parse_range(bad)


def test_spectrum_json_matches_library(capsys):
    code, out = run(capsys, "spectrum", "--model", "model1", "--t1", "0.2",
                    "--t2", "1", "--delta", "0.7", "--force", "0.2")
    assert code == 0
    got = json.loads(out)
    res = bz.theta_exact(bz.ModelSpec("model1", 0.2, 1.0, 0.7), 0.2)
    assert got["theta"]["re"] == res.theta.real
    assert got["theta"]["im"] == res.theta.imag
    assert got["theta"]["im"] > 0
    assert got["n_k"] == res.n_k


def test_sweep_csv_roundtrip_and_manifest(tmp_path, capsys):
    code, out = run(capsys, "sweep", "--model", "model1", "--t1", "0.2",
                    "--t2", "1", "--force", "0.2", "--delta", "0:0.6:12",
                    "--no-wkb", "--outdir", str(tmp_path))
    assert code == 0
    header, rows = read_csv(tmp_path / "sweep.csv")
    assert header == ["delta", "re_theta", "im_theta",
                      "re_theta_wkb", "im_theta_wkb"]
    assert len(rows) == 13
    curve = bz.sweep_delta(bz.ModelSpec("model1", 0.2, 1.0), 0.0, 0.6, 12,
                           0.2, include_wkb=False)
    for row, want in zip(rows, curve.thetas):
        # 17 significant digits reproduce the binary doubles exactly
        assert float(row[1]) == want.real and float(row[2]) == want.imag
        assert row[3] == "" and row[4] == ""
    manifest = json.loads((tmp_path / "sweep_manifest.json").read_text())
    assert manifest["command"] == "sweep"
    assert manifest["version"] == bz.__version__
    assert manifest["params"]["threads"] >= 1
    assert manifest["params"]["eps_floor"] == 1e-6
    entry = manifest["outputs"][0]
    assert entry["path"] == "sweep.csv"
    assert entry["sha256"] == sha256(tmp_path / "sweep.csv")


def test_sweep_byte_identical_across_threads(tmp_path, capsys, monkeypatch):
    args = ["sweep", "--model", "rice-mele", "--t1", "0.4", "--t2", "1",
            "--force", "0.2", "--delta", "0:0.4:8", "--no-wkb"]
    assert main(args + ["--threads", "1", "--outdir", str(tmp_path / "a")]) == 0
    monkeypatch.setenv("BZL_THREADS", "4")
    assert main(args + ["--outdir", str(tmp_path / "b")]) == 0
    capsys.readouterr()
    assert sha256(tmp_path / "a" / "sweep.csv") == sha256(
        tmp_path / "b" / "sweep.csv")
    mb = json.loads((tmp_path / "b" / "sweep_manifest.json").read_text())
    assert mb["params"]["threads"] == 4


def test_config_file_layering(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"model": "model1", "t1": 0.2, "t2": 1.0,
                               "delta": 0.3, "force": 0.2}))
    code, out = run(capsys, "spectrum", "--config", str(cfg))
    assert code == 0
    base = json.loads(out)["theta"]
    # an explicit flag overrides the config value
    code, out = run(capsys, "spectrum", "--config", str(cfg),
                    "--delta", "0.8")
    assert code == 0
    flagged = json.loads(out)["theta"]
    assert flagged != base
    want = bz.theta_exact(bz.ModelSpec("model1", 0.2, 1.0, 0.8), 0.2).theta
    assert flagged["im"] == want.imag
    # pi-expression strings work inside config files too
    cfg2 = tmp_path / "qw.json"
    cfg2.write_text(json.dumps({"m": 61, "beta1": "pi/2-0.1",
                                "beta2": "pi/2-0.15", "delta": 0.0,
                                "q": 0.0}))
    code, out = run(capsys, "qw-spectrum", "--config", str(cfg2))
    assert code == 0


def test_config_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"frobnicate": 1}))
    code, _ = run(capsys, "spectrum", "--config", str(cfg))
    assert code == 2


def test_exit_codes(tmp_path, capsys):
    # argparse rejections exit 2 via SystemExit
    with pytest.raises(SystemExit) as exc:
        main(["spectrum", "--model", "bogus"])
    assert exc.value.code == 2
    capsys.readouterr()
    # malformed range is a config error
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--delta", "0:1.2"])
    assert exc.value.code == 2
    capsys.readouterr()
    # boundary contamination is a numerical guard, exit 3
    code = main(["evolve", "--model", "model1", "--t1", "0.2", "--t2", "1",
                 "--delta", "0.4", "--force", "0.2", "--cells", "15",
                 "--periods", "6", "--outdir", str(tmp_path)])
    assert code == 3
    capsys.readouterr()
    # missing file is a config error
    assert main(["classify", "--csv", str(tmp_path / "nope.csv")]) == 2
    capsys.readouterr()


def test_classify_roundtrip(tmp_path, capsys):
    code, out = run(capsys, "sweep", "--model", "rice-mele", "--t1", "0.4",
                    "--t2", "1", "--force", "0.2", "--delta", "0:1.2:60",
                    "--no-wkb", "--outdir", str(tmp_path))
    assert code == 0
    reported = json.loads(out.splitlines()[-1])
    code, out = run(capsys, "classify", "--csv",
                    str(tmp_path / "sweep.csv"))
    assert code == 0
    got = json.loads(out)
    assert got["classification"] == reported["classification"] == "smooth"
    assert got["delta_star"] == pytest.approx(reported["delta_star"], abs=1e-9)


def test_evolve_outputs(tmp_path, capsys):
    code, out = run(capsys, "evolve", "--model", "model1", "--t1", "0.2",
                    "--t2", "1", "--delta", "0.7", "--force", "0.2",
                    "--periods", "7", "--outdir", str(tmp_path))
    assert code == 0
    assert json.loads(out.splitlines()[-1])["classification"] == "periodic"
    manifest = json.loads((tmp_path / "evolve_manifest.json").read_text())
    for key in ("cells", "dt", "sample_every", "t_end", "cell_origin"):
        assert key in manifest["params"], key
    assert manifest["params"]["cells"] == 69
    header, rows = read_csv(tmp_path / "evolve_trajectory.csv")
    assert header == ["t", "n", "sublattice", "abs_normalized_amplitude"]
    # long format: samples x cells x 2 sublattices, cell index relative to
    # the excited cell
    summary = json.loads((tmp_path / "evolve_summary.json").read_text())
    assert len(rows) == len(summary["times"]) * 69 * 2
    assert rows[0][1] == "-34" and rows[0][2] == "a"
    assert summary["revival"][0] == pytest.approx(1.0)


def test_qw_evolve_outputs(tmp_path, capsys):
    code, out = run(capsys, "qw-evolve", "--m", "61", "--beta1", "pi/2-0.1",
                    "--beta2", "pi/2-0.15", "--delta", "0.06",
                    "--steps", "610", "--outdir", str(tmp_path))
    assert code == 0
    assert json.loads(out.splitlines()[-1])["classification"] == "periodic"
    header, rows = read_csv(tmp_path / "qw_evolve_recurrence.csv")
    assert header == ["m", "a_m", "log_amp"]
    assert len(rows) == 611
    assert float(rows[0][1]) == 1.0


def test_repro_preset(tmp_path, capsys):
    code, out = run(capsys, "repro", "fig3bc", "--outdir", str(tmp_path))
    assert code == 0
    manifest = json.loads(
        (tmp_path / "repro_fig3bc_manifest.json").read_text())
    names = {o["path"] for o in manifest["outputs"]}
    assert names == {"fig3b_trajectory.csv", "fig3b_recurrence.csv",
                     "fig3c_trajectory.csv", "fig3c_recurrence.csv"}
    for entry in manifest["outputs"]:
        assert sha256(tmp_path / entry["path"]) == entry["sha256"]
    panels = manifest["params"]["panels"]
    assert panels["fig3b"]["classification"] == "aperiodic"
    assert panels["fig3c"]["classification"] == "periodic"
