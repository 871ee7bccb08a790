"""Detection-probability experiments, operation-count models and timing."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ltci.detectors import (
    DetectionMap,
    OpCounters,
    ds_grft,
    ds_kt_mfp,
    extract_detections,
    fd_grft,
    kt_mfp,
    td_grft,
    threshold,
)
from ltci.search_space import (
    build_ambiguity,
    build_dual_scale,
    build_single_scale,
    colon_grid,
)
from ltci.signal_model import (
    C,
    FreqPulseCube,
    RadarParams,
    Target,
    add_noise,
    range_ifft,
    synthesize_cube,
)
from ltci.transforms import keystone

DETECTORS = ("fd-grft", "td-grft", "kt-mfp", "ds-grft", "ds-kt-mfp")


class BudgetExceeded(RuntimeError):
    pass


# --------------------------------------------------------------------------
# spaces and a uniform detector entry point
# --------------------------------------------------------------------------

@dataclass(eq=False)
class Spaces:
    params: RadarParams
    bounds: tuple
    alpha: tuple | None = None
    roi: np.ndarray | None = None
    _cache: dict = field(default_factory=dict)

    @property
    def P(self) -> int:
        return len(self.bounds)

    def single(self):
        if "single" not in self._cache:
            self._cache["single"] = build_single_scale(self.params, self.P, self.bounds, self.alpha, self.roi)
        return self._cache["single"]

    def dual(self):
        if "dual" not in self._cache:
            self._cache["dual"] = build_dual_scale(self.params, self.P, self.bounds, self.alpha, self.roi)
        return self._cache["dual"]

    def ambiguity(self):
        if "amb" not in self._cache:
            self._cache["amb"] = build_ambiguity(self.params, self.bounds[0])
        return self._cache["amb"]


def run_detector(name: str, cube: FreqPulseCube, spaces: Spaces, project: bool = False,
                 cube_kt: FreqPulseCube | None = None) -> DetectionMap:
    """Dispatch by detector name; the range-pulse input of TD-GRFT is formed here."""
    if name == "fd-grft":
        return fd_grft(cube, spaces.single())
    if name == "td-grft":
        return td_grft(range_ifft(cube), spaces.single())
    if name == "kt-mfp":
        return kt_mfp(cube, spaces.ambiguity(), spaces.single(), cube_kt=cube_kt, project=project)
    if name == "ds-grft":
        return ds_grft(cube, spaces.dual(), project=project)
    if name == "ds-kt-mfp":
        return ds_kt_mfp(cube, spaces.ambiguity(), spaces.dual(), cube_kt=cube_kt, project=project)
    raise ValueError(f"unknown detector {name!r}; choose from {', '.join(DETECTORS)}")


# --------------------------------------------------------------------------
# detection probability
# --------------------------------------------------------------------------

def wilson(k: int, n: int, z: float = 1.959963984540054) -> tuple:
    if n <= 0:
        raise ValueError("need at least one trial")
    ph = k / n
    den = 1 + z * z / n
    mid = (ph + z * z / (2 * n)) / den
    half = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / den
    return max(0.0, mid - half), min(1.0, mid + half)


@dataclass(frozen=True)
class PdPoint:
    snr_db: float
    pd: float
    trials: int
    ci_lo: float
    ci_hi: float


@dataclass
class PdCurve:
    detector: str
    points: list

    @property
    def snr_db(self) -> np.ndarray:
        return np.array([p.snr_db for p in self.points])

    @property
    def pd(self) -> np.ndarray:
        return np.array([p.pd for p in self.points])

    def snr_at(self, pd_level: float = 0.9) -> float:
        """SNR where the curve first reaches ``pd_level`` (linear interpolation).

        Returns nan when the level is never reached or already exceeded at
        the first point.
        """
        s, p = self.snr_db, self.pd
        if p[0] >= pd_level:
            return float("nan")
        for i in range(1, len(p)):
            if p[i] >= pd_level:
                return float(s[i - 1] + (pd_level - p[i - 1]) * (s[i] - s[i - 1]) / (p[i] - p[i - 1]))
        return float("nan")


@dataclass
class Scenario:
    """One Monte-Carlo detection experiment.

    SNR is the pulse-compressed single-pulse SNR
    ``10 log10(K_valid |A1|^2 / sigma2)``; the target amplitude is fixed and
    the noise variance follows from it.  With ``range_jitter`` every trial
    shifts each target's initial range by a uniform offset in
    ``[-delta_R/2, delta_R/2)``.

    ``window`` picks the detection-success cell: ``"common"`` uses
    :func:`acceptance_window` for every detector, ``"grid"`` uses each
    detector's own lattice spacing.
    """

    params: RadarParams
    targets: list
    snr_db: Sequence[float]
    bounds: tuple
    trials: int = 200
    p_fa: float = 1e-4
    detectors: tuple = DETECTORS
    seed: int = 0
    alpha: tuple | None = None
    roi: Sequence[int] | None = None
    range_jitter: bool = False
    window: str = "common"

    def __post_init__(self):
        if self.window not in ("common", "grid"):
            raise ValueError("window must be 'common' or 'grid'")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        s = np.asarray(self.snr_db, dtype=float)
        if s.size == 0 or np.any(np.diff(s) <= 0):
            raise ValueError("SNR grid must be non-empty and ascending")
        if not self.targets:
            raise ValueError("scenario needs at least one target")
        for d in self.detectors:
            if d not in DETECTORS:
                raise ValueError(f"unknown detector {d!r}")

    def spaces(self) -> Spaces:
        roi = None if self.roi is None else np.asarray(self.roi)
        return Spaces(self.params, tuple(self.bounds), self.alpha, roi)


def sigma2_for_snr(params: RadarParams, amplitude: complex, snr_db: float) -> float:
    return params.K_valid * abs(amplitude) ** 2 / 10 ** (snr_db / 10)


def hit(det_motion, truth, resolution) -> bool:
    """Within one resolution cell of the truth on every axis."""
    d = np.abs(np.asarray(det_motion.c) - np.asarray(truth.c))
    tol = np.asarray(resolution)[: d.size] * (1 + 1e-9)
    return bool(np.all(d[: tol.size] <= tol))


def acceptance_window(params: RadarParams, P: int) -> tuple:
    """Detector-independent success cell: one range bin, then per order p
    the coefficient that adds one Doppler bin of phase over the dwell,
    ``lambda / (2 kappa T^p)``.

    Along the velocity/acceleration ridge a one-bin velocity offset trades
    against a one-cell acceleration offset on this lattice, so detectors
    reading velocity off a Doppler axis are not penalised for grid
    spacing.
    """
    cell = params.wavelength / (2 * params.kappa)
    return (params.delta_R,) + tuple(cell / params.T**p for p in range(1, P + 1))


def trial_seed(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *keys]))


def run_pd(sc: Scenario) -> dict:
    """Pd curves for every detector in the scenario.

    Each (SNR point, trial) draws its noise from a seed derived from
    ``(seed, point, trial)``, and all detectors see the same noisy cube.
    A trial succeeds for a detector when any extracted detection lies
    within one cell of the (first) target on every axis (see
    ``Scenario.window``).
    """
    p = sc.params
    spaces = sc.spaces()
    amp = sc.targets[0].amplitude
    hits = {d: np.zeros(len(sc.snr_db), dtype=int) for d in sc.detectors}
    base_cube = None if sc.range_jitter else synthesize_cube(p, sc.targets)
    common = acceptance_window(p, spaces.P)
    for i, snr in enumerate(sc.snr_db):
        s2 = sigma2_for_snr(p, amp, snr)
        gamma = threshold(p, s2, sc.p_fa)
        for trial in range(sc.trials):
            rng = trial_seed(sc.seed, i, trial)
            targets = sc.targets
            if sc.range_jitter:
                targets = []
                for tg in sc.targets:
                    c = list(tg.motion.c)
                    c[0] += (rng.random() - 0.5) * p.delta_R
                    targets.append(Target(tg.amplitude, c))
                cube0 = synthesize_cube(p, targets)
            else:
                cube0 = base_cube
            truth = targets[0].motion
            cube = add_noise(cube0, s2, rng)
            ykt = keystone(cube) if {"kt-mfp", "ds-kt-mfp"} & set(sc.detectors) else None
            for name in sc.detectors:
                m = run_detector(name, cube, spaces, project=True, cube_kt=ykt)
                dets = extract_detections(m, gamma)
                win = common if sc.window == "common" else m.resolution
                if any(hit(d.motion, truth, win) for d in dets):
                    hits[name][i] += 1
    out = {}
    for name in sc.detectors:
        pts = []
        for i, snr in enumerate(sc.snr_db):
            k = int(hits[name][i])
            lo, hi = wilson(k, sc.trials)
            pts.append(PdPoint(float(snr), k / sc.trials, sc.trials, lo, hi))
        out[name] = PdCurve(name, pts)
    return out


# --------------------------------------------------------------------------
# operation counts and cost model
# --------------------------------------------------------------------------

def bo_weights(M: int, N0: int) -> dict:
    """Cost of one basic operation of each kind."""
    return {
        "kt": M * M * N0,
        "mf": M,
        "ifft": 0.5 * N0 * math.log2(N0),
        "fft": 0.5 * M * math.log2(M),
    }


def weighted_total(counts, M: int, N0: int) -> float:
    c = counts.as_dict() if isinstance(counts, OpCounters) else counts
    w = bo_weights(M, N0)
    return float(sum(w[k] * c[k] for k in w))


def expected_counters(name: str, spaces: Spaces) -> OpCounters:
    """Operation counts implied by the grid cardinalities alone."""
    p = spaces.params
    M, N0 = p.M, p.K
    if name in ("fd-grft", "td-grft", "kt-mfp"):
        ss = spaces.single()
        n_roi = len(ss.range_bins)
        grid = int(np.prod(ss.sizes))
        if name == "fd-grft":
            return OpCounters(mf=N0 * grid, ifft=grid)
        if name == "td-grft":
            return OpCounters(mf=N0 * grid)
        na = len(spaces.ambiguity().q)
        n2 = int(np.prod(ss.sizes[1:]))
        return OpCounters(kt=1, mf=na * n2 * N0, ifft=na * n2 * M, fft=na * n2 * n_roi)
    ds = spaces.dual()
    n_roi = len(ds.range_bins)
    nc = [len(g) for g in ds.coarse]
    nf = [len(g) for g in ds.fine]
    if name == "ds-grft":
        ncoarse = int(np.prod(nc))
        nfine = int(np.prod(nf[1:]))
        return OpCounters(mf=ncoarse * nfine * n_roi, ifft=ncoarse * M, fft=ncoarse * nfine * n_roi)
    if name == "ds-kt-mfp":
        na = len(spaces.ambiguity().q)
        return OpCounters(kt=1, mf=na * nc[1] * nf[1] * n_roi, ifft=na * nc[1] * M,
                          fft=na * nc[1] * nf[1] * n_roi)
    raise ValueError(f"unknown detector {name!r}")


@dataclass(frozen=True)
class Dims:
    """Dimensions entering the closed-form totals (P = 2)."""

    M: int
    N0: int
    roi: int
    N1: float
    N2: float
    Na: float
    fs_over_fc: float


def cost_totals(d: Dims) -> dict:
    """Closed-form total cost of each detector; fs/fc enters continuously."""
    M, N0, Nt, N1, N2, Na, r = d.M, d.N0, d.roi, d.N1, d.N2, d.Na, d.fs_over_fc
    lN0, lM = math.log2(N0), math.log2(M)
    return {
        "td-grft": M * N0 * N1 * N2,
        "fd-grft": M * N0 * N1 * N2 + 0.5 * N2 * N1 * N0 * lN0,
        "ds-grft": r * M * Nt * N2 * N1 + 0.5 * r * r * N2 * N1 * M * N0 * lN0
        + 0.5 * r * N2 * N1 * Nt * M * lM,
        "kt-mfp": N2 * Na * M * N0 + 0.5 * N2 * Na * M * N0 * lN0 + M * M * N0
        + 0.5 * N2 * Na * Nt * M * lM,
        "ds-kt-mfp": N2 * Na * M * Nt + 0.5 * r * N2 * Na * M * N0 * lN0 + M * M * N0
        + 0.5 * N2 * Na * Nt * M * lM,
    }


def cost_counts(d: Dims) -> dict:
    """Closed-form basic-operation counts per detector (continuous in fs/fc)."""
    N0, Nt, N1, N2, Na, r, M = d.N0, d.roi, d.N1, d.N2, d.Na, d.fs_over_fc, d.M
    return {
        "td-grft": {"kt": 0, "mf": N2 * N1 * N0, "ifft": 0, "fft": 0},
        "fd-grft": {"kt": 0, "mf": N2 * N1 * N0, "ifft": N2 * N1, "fft": 0},
        "ds-grft": {"kt": 0, "mf": r * N2 * N1 * Nt, "ifft": r * r * N2 * N1 * M, "fft": r * N2 * N1 * Nt},
        "kt-mfp": {"kt": 1, "mf": N2 * Na * N0, "ifft": N2 * Na * M, "fft": N2 * Na * Nt},
        "ds-kt-mfp": {"kt": 1, "mf": N2 * Na * Nt, "ifft": r * N2 * Na * M, "fft": N2 * Na * Nt},
    }


# sweep defaults: Ka-band radar with fs fixed and fc swept
SWEEP_FS = 491.52e6
SWEEP_PRF = 1905.0
SWEEP_M = 512
SWEEP_N0 = 2048
SWEEP_VEL = (-50.0, 50.0)
SWEEP_ACC = (-30.0, 30.0)
SWEEP_ROI = 180


def sweep_dims(fc_over_fs: float, roi: int = SWEEP_ROI, weights=(1.0, 1.0)) -> Dims:
    """Grid sizes of the complexity sweep at a given fc/fs.

    ``N_p`` counts the points of ``[c_p,min : w_p c / (2 fc T^p) : c_p,max]``
    and ``N_a`` the folding factors covering the velocity interval.
    """
    fc = fc_over_fs * SWEEP_FS
    T = SWEEP_M / SWEEP_PRF
    steps = [w * C / (2 * fc * T**p) for p, w in enumerate(weights, start=1)]
    n1 = len(colon_grid(SWEEP_VEL[0], steps[0], SWEEP_VEL[1]))
    n2 = len(colon_grid(SWEEP_ACC[0], steps[1], SWEEP_ACC[1]))
    Va = (C / fc) * SWEEP_PRF / 2
    qlo = math.floor(SWEEP_VEL[0] / Va + 0.5)
    qhi = math.floor(SWEEP_VEL[1] / Va + 0.5)
    return Dims(SWEEP_M, SWEEP_N0, roi, n1, n2, qhi - qlo + 1, 1.0 / fc_over_fs)


def crossover(ratios: Sequence[float], faster: str = "ds-grft", slower: str = "kt-mfp", **kw) -> float:
    """Smallest fc/fs in ``ratios`` from which ``faster`` stays cheaper than
    ``slower`` for every larger ratio in the sweep (nan if never)."""
    ratios = sorted(ratios)
    ok = []
    for r in ratios:
        tot = cost_totals(sweep_dims(r, **kw))
        ok.append(tot[faster] < tot[slower])
    best = float("nan")
    for r, good in zip(reversed(ratios), reversed(ok)):
        if not good:
            break
        best = r
    return best


@dataclass
class ComplexityRow:
    detector: str
    symbolic_total: float
    counters: OpCounters | None = None
    measured_total: float | None = None
    seconds: float | None = None


def predict_complexity(spaces: Spaces, detectors: Sequence[str] = DETECTORS) -> list:
    p = spaces.params
    rows = []
    for name in detectors:
        cnt = expected_counters(name, spaces)
        rows.append(ComplexityRow(name, weighted_total(cnt, p.M, p.K), cnt))
    return rows


def run_timing(params: RadarParams, targets: Sequence[Target], spaces: Spaces,
               detectors: Sequence[str] = DETECTORS, budget: float = 5e10,
               project: bool = True) -> list:
    """Wall-clock time of each detector on one noiseless cube.

    Raises :class:`BudgetExceeded` before running anything if a predicted
    weighted total exceeds ``budget``.
    """
    pred = {r.detector: r for r in predict_complexity(spaces, detectors)}
    for r in pred.values():
        if r.symbolic_total > budget:
            raise BudgetExceeded(
                f"{r.detector}: predicted cost {r.symbolic_total:.3g} exceeds budget {budget:.3g}"
            )
    cube = synthesize_cube(params, targets)
    rows = []
    for name in detectors:
        t0 = time.perf_counter()
        m = run_detector(name, cube, spaces, project=project)
        dt = time.perf_counter() - t0
        r = pred[name]
        rows.append(ComplexityRow(name, r.symbolic_total, m.counters,
                                  weighted_total(m.counters, params.M, params.K), dt))
    return rows

