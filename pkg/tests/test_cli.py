import json

import numpy as np
import pytest

from graphla.cli import default_nt, main, read_config, build_parser
from graphla.grid import load_grid, save_grid


@pytest.fixture
def data(tmp_path):
    """Small phantom and its noisy seismic, written through the CLI."""
    x = tmp_path / "x.grd"
    y = tmp_path / "y.grd"
    code = main(["make-phantom", "--out", str(x), "--nt", "64", "--nx", "16", "--layers", "4",
                 "--seed", "2", "--seismic-out", str(y), "--psnr", "30"])
    assert code == 0
    return tmp_path, x, y


def test_default_nt():
    assert default_nt(32, 4) == 128
    assert default_nt(470, 4) == 1880
    assert default_nt(10, 1) == 11


def test_help_for_every_command(capsys):
    for cmd in ("invert", "benchmark", "make-phantom", "estimate-wavelet", "metrics"):
        assert main([cmd, "--help"]) == 0
    assert "usage" in capsys.readouterr().out


def test_missing_seismic_is_usage_error(capsys):
    assert main(["invert"]) == 2
    assert "usage" in capsys.readouterr().err


def test_make_phantom_byte_identical(tmp_path):
    a, b = tmp_path / "a.grd", tmp_path / "b.grd"
    assert main(["make-phantom", "--seed", "7", "--out", str(a)]) == 0
    assert main(["make-phantom", "--seed", "7", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_metrics_identical(data, capsys):
    _, x, _ = data
    capsys.readouterr()
    assert main(["metrics", "--rec", str(x), "--truth", str(x)]) == 0
    assert capsys.readouterr().out.strip() == "dmse=0 ssim=1"
    assert main(["metrics", "--rec", str(x), "--truth", str(x), "--json"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["dmse"] == 0.0 and abs(rec["ssim"] - 1.0) <= 1e-12


def test_invert_writes_outputs(data, capsys):
    tmp, x, y = data
    out = tmp / "run"
    code = main(["invert", "--seismic", str(y), "--init", "sb", "--alpha", "0.15", "--beta", "0.15",
                 "--R", "2", "--sigma", "0.25", "--iters", "2", "--wavelet", "ricker:30", "--out", str(out)])
    assert code == 0
    assert load_grid(out / "x2.grd").shape == (64, 16)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["n_t"] == 64 and len(manifest["solves"]) == 2
    assert "delta_estimated" in manifest["flags"]


def test_invert_external_wrong_shape(data, capsys):
    tmp, _, y = data
    save_grid(np.zeros((10, 3)), tmp / "x0.grd")
    code = main(["invert", "--seismic", str(y), "--init", f"external:{tmp / 'x0.grd'}", "--out", str(tmp / "r")])
    assert code == 1
    assert "DimensionMismatch" in capsys.readouterr().err


def test_invert_bad_wavelet_spec(data):
    _, _, y = data
    assert main(["invert", "--seismic", str(y), "--wavelet", "gabor:3"]) == 2


def test_missing_file_is_stage_error(tmp_path, capsys):
    assert main(["metrics", "--rec", str(tmp_path / "nope.grd"), "--truth", str(tmp_path / "nope.grd")]) == 1
    assert "IoFailure" in capsys.readouterr().err


def test_estimate_wavelet(data, capsys):
    tmp, _, y = data
    out = tmp / "w.csv"
    assert main(["estimate-wavelet", "--seismic", str(y), "--length", "11", "--out", str(out), "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["length"] == 11
    assert out.read_text().startswith("# dt=")


def test_config_file(data, tmp_path, capsys):
    tmp, x, _ = data
    cfg = tmp_path / "m.cfg"
    cfg.write_text(f"# metrics inputs\nrec = {x}\ntruth = {x}\njson = true\n")
    assert main(["metrics", "--config", str(cfg)]) == 0
    assert json.loads(capsys.readouterr().out)["dmse"] == 0.0
    cfg.write_text("rec = a\nbogus_key = 3\n")
    assert main(["metrics", "--config", str(cfg)]) == 2
    assert "unknown config key" in capsys.readouterr().err


def test_flags_override_config(tmp_path):
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices["invert"]
    cfg = tmp_path / "i.cfg"
    cfg.write_text("iters = 7\nR = 3\n")
    assert read_config(cfg, sub) == {"iters": 7, "R": 3.0}
    cfg.write_text("iters = seven\n")
    with pytest.raises(Exception):
        read_config(cfg, sub)


def test_benchmark_json(tmp_path, capsys):
    code = main(["benchmark", "--levels", "30", "--init", "sb", "--nt", "64", "--nx", "16", "--layers", "4",
                 "--iters", "1", "--out", str(tmp_path / "rep"), "--json", "--threads", "1"])
    assert code == 0
    rec = json.loads(capsys.readouterr().out)
    assert set(rec) == {"sb_noiseless", "sb_psnr30"}
    assert (tmp_path / "rep" / "sb_psnr30" / "metrics.csv").exists()


def test_bad_threads_is_usage_error(monkeypatch):
    assert main(["metrics", "--rec", "a", "--truth", "b", "--threads", "0"]) == 2
    monkeypatch.setenv("GRAPHLA_THREADS", "-1")
    assert main(["metrics", "--rec", "a", "--truth", "b"]) == 2
