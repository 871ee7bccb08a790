import csv
import io

import numpy as np
import pytest

from ltci.bench import acceptance_window
from ltci.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_PRECONDITION, main
from ltci.io import read_cube
from ltci.signal_model import RadarParams

RADAR = """[radar]
fc = 1.6e9
fs = 100e6
Br = 25e6
PRF = 500
M = 64
K = 64
sigma2 = {sigma2}
seed = 3
domain = {domain}
"""

TARGET = """
[target]
amplitude = 1
range = 45
velocity = 10
accel = 5
"""

SPACE = """
[space]
velocity_min = -20
velocity_max = 20
accel_min = -30
accel_max = 30
roi_start = 20
roi_stop = 40
"""

PARAMS = RadarParams(fc=1.6e9, fs=100e6, Br=25e6, PRF=500, M=64, K=64)


def write_cfg(tmp_path, sigma2=0.0, domain="freq", targets=TARGET, extra=""):
    path = tmp_path / "scene.cfg"
    path.write_text(RADAR.format(sigma2=sigma2, domain=domain) + targets + SPACE + extra)
    return str(path)


def rows_of(text):
    return list(csv.reader(io.StringIO(text)))


def simulate(tmp_path, **kw):
    cfg = write_cfg(tmp_path, **kw)
    cube = str(tmp_path / "cube.ltci")
    assert main(["simulate", "--config", cfg, "--out", cube]) == EXIT_OK
    return cfg, cube


@pytest.mark.parametrize("name", ["fd-grft", "ds-grft", "kt-mfp", "ds-kt-mfp"])
def test_noiseless_target_is_strongest_row(tmp_path, capsys, name):
    cfg, cube = simulate(tmp_path)
    assert main(["detect", "--config", cfg, "--cube", cube, "--detector", name]) == EXIT_OK
    table = rows_of(capsys.readouterr().out)
    assert table[0][:4] == ["statistic", "range_m", "velocity_mps", "accel_mps2"]
    assert len(table) >= 2
    assert float(table[1][0]) == max(float(r[0]) for r in table[1:])
    got = [float(x) for x in table[1][1:4]]
    win = acceptance_window(PARAMS, 2)
    for g, t, w in zip(got, (45.0, 10.0, 5.0), win):
        assert abs(g - t) <= w


def test_td_needs_range_domain(tmp_path):
    cfg, cube = simulate(tmp_path)
    assert main(["detect", "--config", cfg, "--cube", cube, "--detector", "td-grft"]) == EXIT_PRECONDITION
    cfg, cube = simulate(tmp_path, domain="range")
    out = tmp_path / "d.csv"
    assert main(["detect", "--config", cfg, "--cube", cube, "--detector", "td-grft", "--out", str(out)]) == EXIT_OK
    assert len(rows_of(out.read_text())) >= 2
    assert main(["detect", "--config", cfg, "--cube", cube, "--detector", "fd-grft"]) == EXIT_PRECONDITION


def test_empty_scene_gives_header_only(tmp_path, capsys):
    cfg, cube = simulate(tmp_path, targets="")
    assert main(["detect", "--config", cfg, "--cube", cube, "--detector", "ds-grft"]) == EXIT_OK
    assert rows_of(capsys.readouterr().out) == [["statistic", "range_m", "velocity_mps", "accel_mps2"]]


def test_simulated_cube_has_header_noise(tmp_path):
    _, cube = simulate(tmp_path, sigma2=0.25)
    c, s2 = read_cube(cube)
    assert s2 == 0.25 and c.params == PARAMS


def test_outputs_are_reproducible(tmp_path, capsys):
    cfg, cube = simulate(tmp_path, sigma2=0.5)
    first = (tmp_path / "cube.ltci").read_bytes()
    assert main(["simulate", "--config", cfg, "--out", cube]) == EXIT_OK
    assert (tmp_path / "cube.ltci").read_bytes() == first
    assert main(["simulate", "--config", cfg, "--out", cube, "--seed", "9"]) == EXIT_OK
    assert (tmp_path / "cube.ltci").read_bytes() != first
    outs = []
    for _ in range(2):
        main(["detect", "--config", cfg, "--cube", cube, "--detector", "ds-kt-mfp"])
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1]
    assert rows_of(outs[0])[0][-2:] == ["q", "c1_base"]


def test_exit_codes(tmp_path, capsys):
    cfg, cube = simulate(tmp_path)
    bad = tmp_path / "bad.cfg"
    bad.write_text("[radar]\nfc = x\n")
    assert main(["simulate", "--config", str(bad), "--out", cube]) == EXIT_CONFIG
    assert "line 2" in capsys.readouterr().err
    assert main(["simulate", "--config", str(tmp_path / "missing.cfg"), "--out", cube]) == EXIT_IO
    assert main(["detect", "--config", cfg, "--cube", str(tmp_path / "none.ltci"), "--detector", "fd-grft"]) == EXIT_IO
    (tmp_path / "junk.ltci").write_bytes(b"junk" * 40)
    assert main(["detect", "--config", cfg, "--cube", str(tmp_path / "junk.ltci"), "--detector", "fd-grft"]) == EXIT_IO
    assert main(["detect", "--config", cfg, "--cube", cube]) == EXIT_CONFIG
    assert main(["simulate", "--config", cfg]) == EXIT_CONFIG


def test_dual_scale_condition_violation_exits_4(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(RADAR.format(sigma2=0, domain="freq").replace("M = 64", "M = 8") + TARGET + SPACE)
    cube = str(tmp_path / "c.ltci")
    assert main(["simulate", "--config", str(cfg), "--out", cube]) == EXIT_OK
    assert main(["detect", "--config", str(cfg), "--cube", cube, "--detector", "ds-grft"]) == EXIT_PRECONDITION


def test_threads_validation(tmp_path, monkeypatch):
    cfg, cube = simulate(tmp_path)
    assert main(["simulate", "--config", cfg, "--out", cube, "--threads", "two"]) == EXIT_CONFIG
    assert main(["simulate", "--config", cfg, "--out", cube, "--threads", "-1"]) == EXIT_CONFIG
    monkeypatch.setenv("LTCI_THREADS", "x")
    assert main(["simulate", "--config", cfg, "--out", cube]) == EXIT_CONFIG
    monkeypatch.setenv("LTCI_THREADS", "2")
    assert main(["simulate", "--config", cfg, "--out", cube]) == EXIT_OK


def test_bench_pd_noiseless_limit(tmp_path, capsys):
    extra = "\n[bench]\nsnr_min = 40\nsnr_max = 40\ntrials = 1\ndetectors = fd-grft, ds-grft\n"
    cfg = write_cfg(tmp_path, extra=extra)
    assert main(["bench", "pd", "--config", cfg]) == EXIT_OK
    table = rows_of(capsys.readouterr().out)
    assert table[0] == ["snr_db", "detector", "pd", "ci_lo", "ci_hi"]
    assert [r[1] for r in table[1:]] == ["fd-grft", "ds-grft"]
    assert all(float(r[2]) == 1.0 for r in table[1:])


def test_bench_complexity_sweep(tmp_path):
    extra = "\n[bench]\ndetectors = fd-grft, ds-grft\nratio_min = 8\nratio_max = 64\nratio_step = 8\n"
    cfg = write_cfg(tmp_path, extra=extra)
    out = tmp_path / "cx.csv"
    assert main(["bench", "complexity", "--config", cfg, "--out", str(out)]) == EXIT_OK
    table = rows_of(out.read_text())
    measured = [r for r in table[1:] if r[3] != ""]
    assert {r[1] for r in measured} == {"fd-grft", "ds-grft"}
    for r in measured:
        assert float(r[2]) == float(r[3])
    ratios = [float(r[4]) for r in table[1:] if r[1] == "ds-grft" and r[4] != ""]
    assert len(ratios) == 8 and np.all(np.diff(ratios) < 0)


def test_bench_timing(tmp_path, capsys):
    cfg = write_cfg(tmp_path, extra="\n[bench]\ndetectors = ds-grft\n")
    assert main(["bench", "timing", "--config", cfg]) == EXIT_OK
    table = rows_of(capsys.readouterr().out)
    assert table[0] == ["detector", "seconds"] and table[1][0] == "ds-grft"
    cfg = write_cfg(tmp_path, extra="\n[bench]\ndetectors = ds-grft\nbudget = 10\n")
    assert main(["bench", "timing", "--config", cfg]) == EXIT_PRECONDITION
