"""Command-line front end.

    ltci simulate --config scene.cfg --out cube.ltci [--seed N]
    ltci detect   --config scene.cfg --cube cube.ltci --detector ds-kt-mfp [--out dets.csv]
    ltci bench pd|complexity|timing --config scene.cfg [--out table.csv]

Exit codes: 0 ok, 2 configuration error, 3 I/O error, 4 precondition
violation.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from ltci import bench
from ltci.detectors import extract_detections, threshold
from ltci.io import (
    ConfigError,
    CubeFormatError,
    load_config,
    read_cube,
    write_cube,
    write_table,
)
from ltci.search_space import ConditionViolated
from ltci.signal_model import FreqPulseCube, RangePulseCube, add_noise, range_ifft, synthesize_cube

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_PRECONDITION = 0, 2, 3, 4


class PreconditionError(RuntimeError):
    pass


def _threads(value) -> int:
    raw = value if value is not None else os.environ.get("LTCI_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"thread count must be an integer, got {raw!r}") from None
    if n < 0:
        raise ConfigError("thread count must be >= 0")
    return n


def _seed(args, cfg_value, default=0) -> int:
    if args.seed is not None:
        return args.seed
    return default if cfg_value is None else cfg_value


def _emit(args, header, rows):
    text = write_table(args.out, header, rows)
    if args.out is None:
        sys.stdout.write(text)


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    params = cfg.radar_params()
    targets = cfg.target_list()
    sigma2 = cfg.radar.get("sigma2", 0.0)
    seed = _seed(args, cfg.radar.get("seed"))
    domain = cfg.radar.get("domain", "freq")
    if domain not in ("freq", "range"):
        raise ConfigError(f"[radar] domain must be freq or range, got {domain!r}", cfg.lines.get(("radar", "domain")))
    cube = synthesize_cube(params, targets)
    if sigma2 < 0:
        raise ConfigError("[radar] sigma2 must be >= 0", cfg.lines.get(("radar", "sigma2")))
    cube = add_noise(cube, sigma2, seed)
    if domain == "range":
        cube = range_ifft(cube)
    if args.out is None:
        raise ConfigError("simulate needs --out")
    write_cube(args.out, cube, sigma2)
    return EXIT_OK


def _spaces_for(cfg, params):
    return bench.Spaces(params, cfg.bounds(), cfg.space.get("alpha"), cfg.roi())


def cmd_detect(args) -> int:
    cfg = load_config(args.config)
    name = args.detector or cfg.detector.get("name")
    if name is None:
        raise ConfigError("no detector given (--detector or [detector] name)")
    if name not in bench.DETECTORS:
        raise ConfigError(f"unknown detector {name!r}; choose from {', '.join(bench.DETECTORS)}")
    cube, sigma2 = read_cube(args.cube)
    params = cube.params
    spaces = _spaces_for(cfg, params)
    det = cfg.detector
    if name == "td-grft":
        if not isinstance(cube, RangePulseCube):
            raise PreconditionError("td-grft needs a range-pulse cube (simulate with domain = range)")
        from ltci.detectors import td_grft
        m = td_grft(cube, spaces.single())
    else:
        if not isinstance(cube, FreqPulseCube):
            raise PreconditionError(f"{name} needs a frequency-pulse cube")
        m = bench.run_detector(name, cube, spaces, project=det.get("project", True))
    gamma = threshold(params, sigma2, det.get("p_fa", 1e-4), det.get("noise_bins")) if sigma2 > 0 else 0.0
    floor = det.get("floor_db", None if sigma2 > 0 else -6.0)
    dets = extract_detections(m, gamma, radius=det.get("radius", 1), floor_db=floor)
    P = spaces.P
    header = ["statistic", "range_m", "velocity_mps"]
    header += ["accel_mps2", "jerk_mps3"][: P - 1]
    kt = name in ("kt-mfp", "ds-kt-mfp")
    if kt:
        header += ["q", "c1_base"]
    rows = []
    for d in dets:
        row = [d.statistic] + list(d.motion.c)
        if kt:
            row += [d.extras["q"], float(d.extras["c1_base"])]
        rows.append(row)
    _emit(args, header, rows)
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = load_config(args.config)
    params = cfg.radar_params()
    b = cfg.bench
    if args.what == "pd":
        lo, hi, st = b.get("snr_min", -20.0), b.get("snr_max", 0.0), b.get("snr_step", 2.0)
        if st <= 0 or hi < lo:
            raise ConfigError("[bench] needs snr_min <= snr_max and snr_step > 0")
        snr = np.arange(lo, hi + st / 2, st)
        sc = bench.Scenario(
            params, cfg.target_list(), snr, cfg.bounds(),
            trials=b.get("trials", 200), p_fa=cfg.detector.get("p_fa", 1e-4),
            detectors=b.get("detectors", bench.DETECTORS), seed=_seed(args, b.get("seed")),
            alpha=cfg.space.get("alpha"), roi=cfg.roi(), range_jitter=b.get("range_jitter", False),
            window=b.get("window", "common"),
        )
        curves = bench.run_pd(sc)
        rows = []
        for i, s in enumerate(snr):
            for name, c in curves.items():
                pt = c.points[i]
                rows.append([float(s), name, pt.pd, pt.ci_lo, pt.ci_hi])
        _emit(args, ["snr_db", "detector", "pd", "ci_lo", "ci_hi"], rows)
        return EXIT_OK

    spaces = _spaces_for(cfg, params)
    detectors = b.get("detectors", bench.DETECTORS)
    budget = b.get("budget", 5e10)
    if args.what == "timing":
        rows = bench.run_timing(params, cfg.target_list(), spaces, detectors, budget=budget)
        _emit(args, ["detector", "seconds"], [[r.detector, r.seconds] for r in rows])
        return EXIT_OK

    # complexity: the configured scene, plus an optional closed-form sweep
    rows = []
    measured = bench.run_timing(params, cfg.target_list(), spaces, detectors, budget=budget)
    ratio = params.fc / params.fs
    for r in measured:
        rows.append([ratio, r.detector, r.symbolic_total, r.measured_total, ""])
    if "ratio_min" in b or "ratio_max" in b:
        lo, hi, st = b.get("ratio_min", 8.0), b.get("ratio_max", 512.0), b.get("ratio_step", 8.0)
        if st <= 0 or hi < lo:
            raise ConfigError("[bench] needs ratio_min <= ratio_max and ratio_step > 0")
        for x in np.arange(lo, hi + st / 2, st):
            tot = bench.cost_totals(bench.sweep_dims(float(x), roi=b.get("roi", bench.SWEEP_ROI)))
            rel = {"ds-grft": tot["ds-grft"] / tot["fd-grft"], "ds-kt-mfp": tot["ds-kt-mfp"] / tot["kt-mfp"]}
            for name in bench.DETECTORS:
                rows.append([float(x), name, tot[name], "", rel.get(name, "")])
    _emit(args, ["fc_over_fs", "detector", "symbolic_total", "measured_total", "ratio_to_standard"], rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ltci", description="Long-time coherent integration detectors.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="run configuration file")
    common.add_argument("--out", help="output path (stdout for tables when omitted)")
    common.add_argument("--seed", type=int, help="overrides the configured seed")
    common.add_argument("--threads", help="worker threads, 0 = auto (env LTCI_THREADS)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="synthesize a cube file")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("detect", parents=[common], help="run one detector on a cube file")
    p.add_argument("--cube", required=True)
    p.add_argument("--detector", choices=bench.DETECTORS)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("bench", parents=[common], help="Pd curves, complexity and timing")
    p.add_argument("what", choices=("pd", "complexity", "timing"))
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        _threads(args.threads)
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, CubeFormatError) as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO
    except (ConditionViolated, PreconditionError, bench.BudgetExceeded, ValueError) as e:
        print(f"precondition violated: {e}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
