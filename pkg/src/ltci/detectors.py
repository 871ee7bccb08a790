"""GRFT-family detectors, thresholding and detection extraction.

Every detector returns a :class:`DetectionMap` holding the complex test
statistic over its search space together with the basic-operation counts
(keystone, MF, IFFT, FFT) it actually performed.

Counting rules (one unit per call of a basic operation):

* MF   - one length-M multiply(-accumulate) of a frequency or range row
* IFFT - one length-K transform over frequency
* FFT  - one length-M transform over slow time
* KT   - one keystone pass over the whole cube
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import ndimage, sparse

from ltci.search_space import AmbiguitySpace, DualScaleSpace, SingleScaleSpace
from ltci.signal_model import (
    C,
    FreqPulseCube,
    MotionParams,
    RadarParams,
    RangePulseCube,
)
from ltci.transforms import (
    dfm_phase,
    doppler_sum,
    keystone,
    kt_rm_phase,
    mgift,
)


@dataclass
class OpCounters:
    kt: int = 0
    mf: int = 0
    ifft: int = 0
    fft: int = 0

    def as_dict(self) -> dict:
        return {"kt": self.kt, "mf": self.mf, "ifft": self.ifft, "fft": self.fft}

    def __eq__(self, other):
        if isinstance(other, OpCounters):
            return self.as_dict() == other.as_dict()
        if isinstance(other, dict):
            return self.as_dict() == other
        return NotImplemented


@dataclass(frozen=True)
class Detection:
    motion: MotionParams
    statistic: float
    index: tuple
    extras: dict = field(default_factory=dict)


@dataclass(eq=False)
class DetectionMap:
    """Complex statistic over a detector's search space.

    ``estimator(index)`` maps a cell to ``(MotionParams, extras)`` and
    ``resolution`` gives the physical cell size per motion order
    (index 0 is range) used to merge duplicate detections.
    """

    kind: str
    values: np.ndarray
    axes: tuple
    counters: OpCounters
    estimator: Callable
    resolution: tuple
    space: object = None

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)

    def argmax(self) -> tuple:
        return np.unravel_index(int(np.argmax(self.magnitude)), self.values.shape)

    def peak(self) -> float:
        return float(self.magnitude.max()) if self.values.size else 0.0

    def estimate(self, index) -> tuple:
        return self.estimator(tuple(int(i) for i in index))


class _Best:
    """Running maximum over the projected (higher-order) axes."""

    def __init__(self, shape):
        self.values = np.zeros(shape, dtype=np.complex128)
        self.mag = np.zeros(shape)
        self.arg = np.zeros(shape, dtype=np.int64)

    def update(self, key, vals, flat):
        m = np.abs(vals)
        better = m > self.mag[key]
        self.values[key] = np.where(better, vals, self.values[key])
        self.mag[key] = np.where(better, m, self.mag[key])
        self.arg[key] = np.where(better, flat, self.arg[key])


# --------------------------------------------------------------------------
# literal statistics at a single parameter point (oracles and H0 studies)
# --------------------------------------------------------------------------

def _rtilde(coeffs, t):
    acc = np.zeros_like(t)
    for p, cp in enumerate(coeffs, start=1):
        acc = acc + cp * t**p
    return acc


def grft_statistic(data: np.ndarray, params: RadarParams, c) -> complex:
    """Frequency-domain GRFT at ``c = (c0, c1, ..., cP)`` by direct summation.

    ``data`` may carry leading batch dimensions (..., K, M).
    """
    t = params.slow_times()
    fk = params.freqs()
    rt = _rtilde(c[1:], t)
    w = np.exp(1j * (4 * np.pi / C) * (np.outer(fk + params.fc, rt) + fk[:, None] * c[0]))
    return np.sum(data * w, axis=(-2, -1))


def kt_mfp_statistic(data_kt: np.ndarray, params: RadarParams, c0, q, c1_base, c2) -> complex:
    """KT-MFP at one cell by direct summation over a keystoned cube."""
    t = params.slow_times()
    fk = params.freqs()
    ph = kt_rm_phase(params, q, c2) + dfm_phase(params, (c2,))[None, :]
    ph = ph + (4 * np.pi / C) * fk[:, None] * c0
    ph = ph + (4 * np.pi / params.wavelength) * c1_base * t[None, :]
    return np.sum(data_kt * np.exp(1j * ph), axis=(-2, -1))


def ds_grft_statistic(data: np.ndarray, params: RadarParams, c0, coarse, fine_scaled) -> complex:
    """GFT of the mGIFT output at one range point and one fine velocity.

    ``fine_scaled`` holds the kappa-scaled fine coefficients of orders 1..P.
    """
    t = params.slow_times()
    fk = params.freqs()
    rm = (4 * np.pi / C) * (np.outer(fk, _rtilde(coarse, t)) + fk[:, None] * c0)
    g = np.sum(data * np.exp(1j * rm), axis=-2)
    ph = (4 * np.pi / params.wavelength) * (_rtilde(coarse, t) + _rtilde(fine_scaled, t))
    return np.sum(g * np.exp(1j * ph), axis=-1)


def ds_kt_mfp_statistic(data_kt: np.ndarray, params: RadarParams, c0, q, c2_coarse,
                        c1_base, c2_fine_scaled) -> complex:
    t = params.slow_times()
    fk = params.freqs()
    rm = kt_rm_phase(params, q, c2_coarse) + (4 * np.pi / C) * fk[:, None] * c0
    g = np.sum(data_kt * np.exp(1j * rm), axis=-2)
    ph = (4 * np.pi / params.wavelength) * (
        (c2_coarse + c2_fine_scaled) * t**2 + c1_base * t
    )
    return np.sum(g * np.exp(1j * ph), axis=-1)


# --------------------------------------------------------------------------
# single-scale detectors
# --------------------------------------------------------------------------

_CHUNK = 2**22  # complex elements per batched kernel


def fd_grft(cube: FreqPulseCube, space: SingleScaleSpace) -> DetectionMap:
    """Frequency-domain GRFT over the single-scale grid, all range bins.

    Map axes: (range, c1, ..., cP).
    """
    p = cube.params
    K, M = p.K, p.M
    t = p.slow_times()
    fk_c = p.freqs() + p.fc
    y = cube.data
    g1 = space.grids[0]
    higher = space.grids[1:]
    shape_h = tuple(len(g) for g in higher)
    out = np.empty((K, len(g1)) + shape_h, dtype=np.complex128)
    step = max(1, _CHUNK // (K * M))
    hcombos = list(itertools.product(*[range(n) for n in shape_h]))
    zs = []
    for hidx in hcombos:
        acc = np.zeros_like(t)
        for pp, j in enumerate(hidx, start=2):
            acc = acc + higher[pp - 2][j] * t**pp
        zs.append(y * np.exp(1j * (4 * np.pi / C) * np.outer(fk_c, acc)))
    for s in range(0, len(g1), step):
        c1 = g1[s:s + step]
        # (K, n, M) velocity kernel, shared by every higher-order hypothesis
        w = np.exp(1j * (4 * np.pi / C) * fk_c[:, None, None] * (c1[None, :, None] * t[None, None, :]))
        for hidx, z in zip(hcombos, zs):
            S = np.matmul(w, z[:, :, None])[:, :, 0]
            out[(slice(None), slice(s, s + step)) + hidx] = K * np.fft.ifft(S, axis=0)
    n = len(g1) * len(hcombos)
    cnt = OpCounters(mf=n * K, ifft=n)

    def est(idx):
        c = [idx[0] * p.delta_R] + [space.grids[i][j] for i, j in enumerate(idx[1:])]
        return MotionParams(c), {}

    res = (p.delta_R,) + tuple(space.steps.delta_DFM)
    axes = ("range",) + tuple(f"c{i}" for i in range(1, space.P + 1))
    return DetectionMap("fd-grft", out, axes, cnt, est, res, space)


def td_grft(rcube: RangePulseCube, space: SingleScaleSpace) -> DetectionMap:
    """Time-domain GRFT: follow the rounded trajectory through the range
    cube.  Pulses whose trajectory leaves ``[0, N0)`` contribute nothing.

    Map axes: (range, c1, ..., cP).
    """
    p = rcube.params
    K, M = p.K, p.M
    t = p.slow_times()
    grid = np.array(list(itertools.product(*space.grids)))            # (G, P)
    G = grid.shape[0]
    rt = np.zeros((G, M))
    for pp in range(space.P):
        rt += grid[:, pp:pp + 1] * t[None, :] ** (pp + 1)
    shift = np.round(2 * rt / (C * p.Ts)).astype(np.int64)
    ph = np.exp(1j * (4 * np.pi / p.wavelength) * rt)
    # every (pulse, shift) column of the cube once, out-of-range rows zeroed
    s_lo, s_hi = int(shift.min()), int(shift.max())
    S = s_hi - s_lo + 1
    rows = np.arange(K)[:, None] + np.arange(s_lo, s_hi + 1)[None, :]   # (K, S)
    ok = (rows >= 0) & (rows < K)
    cols = rcube.data[np.clip(rows, 0, K - 1)] * ok[:, :, None]         # (K, S, M)
    A = cols.transpose(2, 1, 0).reshape(M * S, K)
    # sparse selector: grid point g picks column (m, shift[g, m]) with phase
    sel = sparse.csr_matrix(
        (ph.ravel(), (np.repeat(np.arange(G), M), (np.arange(M)[None, :] * S + shift - s_lo).ravel())),
        shape=(G, M * S),
    )
    out = np.asarray(sel @ A).T.reshape((K,) + tuple(space.sizes))
    cnt = OpCounters(mf=K * G)

    def est(idx):
        c = [idx[0] * p.delta_R] + [space.grids[i][j] for i, j in enumerate(idx[1:])]
        return MotionParams(c), {}

    res = (p.delta_R,) + tuple(space.steps.delta_DFM)
    axes = ("range",) + tuple(f"c{i}" for i in range(1, space.P + 1))
    return DetectionMap("td-grft", out, axes, cnt, est, res, space)


def _kt_factors(params: RadarParams):
    t = params.slow_times()
    fk = params.freqs()
    fbar = 1.0 - fk / params.fc
    a_q = (4 * np.pi / C) * np.outer(fk * fbar, params.Va * t)     # times q
    b_c2 = -(4 * np.pi / C) * np.outer(fk, t**2)                    # times c2
    return a_q, b_c2


def kt_mfp(cube: FreqPulseCube, amb: AmbiguitySpace, space: SingleScaleSpace,
           taps: int = 8, cube_kt: FreqPulseCube | None = None,
           project: bool = False) -> DetectionMap:
    """Keystone, then matched filtering over (q, c2) and Doppler processing.

    Map axes: (range[roi], doppler, q, c2), or (range[roi], doppler, q) with
    the best c2 kept per cell when ``project`` is set.  ``cube_kt`` skips
    the keystone when the caller already has it (the KT count is still
    reported).
    """
    if space.P != 2:
        raise ValueError("KT-MFP is implemented for P = 2")
    p = cube.params
    K, M = p.K, p.M
    ykt = keystone(cube, taps) if cube_kt is None else cube_kt
    roi = space.range_bins
    a_q, b_c2 = _kt_factors(p)
    dfm = dfm_phase(p, (1.0,))  # scales with c2
    c2g = space.grids[1]
    qs = amb.q
    if project:
        best = _Best((len(roi), M, len(qs)))
    else:
        out = np.empty((len(roi), M, len(qs), len(c2g)), dtype=np.complex128)
    cnt = OpCounters(kt=1)
    for iq, q in enumerate(qs):
        yq = ykt.data * np.exp(1j * q * a_q)
        for ic, c2 in enumerate(c2g):
            h = np.exp(1j * c2 * (b_c2 + dfm[None, :]))
            rows = K * np.fft.ifft(yq * h, axis=0)
            z = doppler_sum(rows[roi])
            if project:
                best.update((slice(None), slice(None), iq), z, ic)
            else:
                out[:, :, iq, ic] = z
            cnt.mf += K
            cnt.ifft += M
            cnt.fft += len(roi)
    vel = (np.arange(M) - M // 2) * p.Va / M
    res = (p.delta_R, p.Va / M, space.steps.delta_DFM[1])

    if project:
        def est_p(idx):
            n, d, iq = idx
            ic = int(best.arg[idx])
            return est((n, d, iq, ic))

    def est(idx):
        n, d, iq, ic = idx
        q = int(qs[iq])
        c1b = vel[d]
        return MotionParams([roi[n] * p.delta_R, q * p.Va + c1b, c2g[ic]]), {"q": q, "c1_base": c1b}

    if project:
        return DetectionMap("kt-mfp", best.values, ("range", "doppler", "q"), cnt, est_p, res, space)
    return DetectionMap("kt-mfp", out, ("range", "doppler", "q", "c2"), cnt, est, res, space)


# --------------------------------------------------------------------------
# dual-scale detectors
# --------------------------------------------------------------------------

def ds_grft(cube: FreqPulseCube, space: DualScaleSpace, project: bool = False) -> DetectionMap:
    """Dual-scale GRFT: mGIFT per coarse cell, GFT per fine higher-order cell.

    The fine velocity comes from the Doppler axis truncated to
    ``kappa * [-dc_1c/2, dc_1c/2]``.  Map axes:
    (c1c, ..., cPc, range[roi], c2f, ..., cPf, doppler[-D..D]).  With
    ``project`` only (c1c, range[roi], doppler) is kept and each cell
    remembers its best higher-order hypothesis.
    """
    p = cube.params
    M = p.M
    kappa = space.kappa
    roi = space.range_bins
    D = space.doppler_halfwidth
    dsel = np.arange(-D, D + 1) + M // 2
    coarse_shape = tuple(len(g) for g in space.coarse)
    fine_grids = space.fine[1:]
    fine_shape = tuple(len(g) for g in fine_grids)
    rest_shape = coarse_shape[1:] + fine_shape
    if project:
        best = _Best((coarse_shape[0], len(roi), 2 * D + 1))
    else:
        out = np.empty(coarse_shape + (len(roi),) + fine_shape + (2 * D + 1,), dtype=np.complex128)
    cnt = OpCounters()
    for cidx in itertools.product(*[range(n) for n in coarse_shape]):
        coarse = [space.coarse[i][j] for i, j in enumerate(cidx)]
        rows = mgift(cube, coarse).data[roi]
        cnt.ifft += M
        for fidx in itertools.product(*[range(n) for n in fine_shape]):
            higher = [kappa * fine_grids[i][j] for i, j in enumerate(fidx)]
            z = rows
            if higher:
                z = rows * np.exp(1j * dfm_phase(p, higher))[None, :]
            z = doppler_sum(z)[:, dsel]
            if project:
                flat = np.ravel_multi_index(cidx[1:] + fidx, rest_shape) if rest_shape else 0
                best.update(cidx[0], z, flat)
            else:
                out[cidx + (slice(None),) + fidx] = z
            cnt.mf += len(roi)
            cnt.fft += len(roi)
    Pn = space.P
    bin_v = p.Va / M

    def est_p(idx):
        i1, n, d = idx
        rest = np.unravel_index(int(best.arg[idx]), rest_shape) if rest_shape else ()
        rest = tuple(int(r) for r in rest)
        return est((i1,) + rest[: Pn - 1] + (n,) + rest[Pn - 1:] + (d,))

    def est(idx):
        cidx = idx[:Pn]
        n = idx[Pn]
        fidx = idx[Pn + 1:-1]
        d = idx[-1] - D
        c = [roi[n] * p.delta_R, space.coarse[0][cidx[0]] + d * bin_v / kappa]
        for i in range(1, Pn):
            c.append(space.coarse[i][cidx[i]] + fine_grids[i - 1][fidx[i - 1]])
        return MotionParams(c), {}

    res = (p.delta_R, bin_v / kappa) + tuple(space.fine_steps[1:])
    if project:
        return DetectionMap("ds-grft", best.values, ("c1c", "range", "doppler"), cnt, est_p, res, space)
    axes = (tuple(f"c{i}c" for i in range(1, Pn + 1)) + ("range",)
            + tuple(f"c{i}f" for i in range(2, Pn + 1)) + ("doppler",))
    return DetectionMap("ds-grft", out, axes, cnt, est, res, space)


def ds_kt_mfp(cube: FreqPulseCube, amb: AmbiguitySpace, space: DualScaleSpace,
              taps: int = 8, cube_kt: FreqPulseCube | None = None,
              project: bool = False) -> DetectionMap:
    """Dual-scale KT-MFP over (q, c2c) coarse cells and fine c2 cells.

    The baseband velocity is read from the full Doppler axis.  Map axes:
    (q, c2c, range[roi], c2f, doppler), or (q, range[roi], doppler) with
    ``project``.
    """
    if space.P != 2:
        raise ValueError("DS-KT-MFP is implemented for P = 2")
    p = cube.params
    M = p.M
    kappa = space.kappa
    roi = space.range_bins
    ykt = keystone(cube, taps) if cube_kt is None else cube_kt
    qs = amb.q
    c2c_g = space.coarse[1]
    c2f_g = space.fine[1]
    if project:
        best = _Best((len(qs), len(roi), M))
    else:
        out = np.empty((len(qs), len(c2c_g), len(roi), len(c2f_g), M), dtype=np.complex128)
    cnt = OpCounters(kt=1)
    dfm_unit = dfm_phase(p, (1.0,))
    for iq, q in enumerate(qs):
        for ic, c2c in enumerate(c2c_g):
            rows = mgift(ykt, (q, c2c), variant="kt").data[roi]
            cnt.ifft += M
            for jf, c2f in enumerate(c2f_g):
                z = doppler_sum(rows * np.exp(1j * kappa * c2f * dfm_unit)[None, :])
                if project:
                    best.update(iq, z, ic * len(c2f_g) + jf)
                else:
                    out[iq, ic, :, jf, :] = z
                cnt.mf += len(roi)
                cnt.fft += len(roi)
    vel = (np.arange(M) - M // 2) * p.Va / M

    def est(idx):
        iq, ic, n, jf, d = idx
        q = int(qs[iq])
        c1b = vel[d]
        c = [roi[n] * p.delta_R, q * p.Va + c1b, c2c_g[ic] + c2f_g[jf]]
        return MotionParams(c), {"q": q, "c1_base": c1b}

    res = (p.delta_R, p.Va / M, space.fine_steps[1])
    if project:
        def est_p(idx):
            iq, n, d = idx
            ic, jf = divmod(int(best.arg[idx]), len(c2f_g))
            return est((iq, ic, n, jf, d))

        return DetectionMap("ds-kt-mfp", best.values, ("q", "range", "doppler"), cnt, est_p, res, space)
    return DetectionMap("ds-kt-mfp", out, ("q", "c2c", "range", "c2f", "doppler"), cnt, est, res, space)


# --------------------------------------------------------------------------
# thresholding
# --------------------------------------------------------------------------

def threshold(params: RadarParams, sigma2: float, P_FA: float, noise_bins: int | None = None) -> float:
    """gamma = sqrt(-M * K * sigma2 * ln P_FA).

    With noise present in every one of the K frequency bins, the statistic
    at a fixed cell is a sum of M*K unit-weighted noise samples, so its
    magnitude is Rayleigh with scale^2 = M*K*sigma2/2 and the tail
    probability at gamma is exactly P_FA.  Pass ``noise_bins=K_valid`` when
    the guard band is noise-free.
    """
    if not 0 < P_FA < 1:
        raise ValueError("P_FA must lie in (0, 1)")
    if sigma2 < 0:
        raise ValueError("sigma2 must be non-negative")
    k = params.K if noise_bins is None else noise_bins
    return float(np.sqrt(-params.M * k * sigma2 * np.log(P_FA)))


def estimate_noise_variance(cube: FreqPulseCube) -> float:
    """Sample variance of the guard-band bins (or all bins if none)."""
    p = cube.params
    guard = cube.data[~p.valid_mask()]
    x = guard if guard.size else cube.data
    return float(np.mean(np.abs(x - x.mean()) ** 2))


def mean_velocity(motion: MotionParams, params: RadarParams) -> float:
    """Average of dR/dt over the dwell."""
    t = params.slow_times()
    v = np.zeros_like(t)
    for p, cp in enumerate(motion.c[1:], start=1):
        v = v + p * cp * t ** (p - 1)
    return float(v.mean())


def extract_detections(dmap: DetectionMap, gamma: float, radius: int = 1,
                       floor_db: float | None = None) -> list:
    """Local maxima above ``gamma``, strongest first.

    A cell is a candidate when it equals the maximum of its
    ``(2*radius+1)^n`` index neighbourhood.  A candidate is then merged into
    a stronger detection when both sit within ``radius`` range bins and
    ``radius`` velocity cells of each other in mean velocity over the
    dwell: points along the velocity/acceleration ridge of one target are
    not separate targets.  ``floor_db`` drops peaks more than that many dB
    below the strongest one.
    """
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    mag = dmap.magnitude
    if mag.size == 0:
        return []
    mx = ndimage.maximum_filter(mag, size=2 * radius + 1, mode="constant", cval=0.0)
    cand = np.flatnonzero((mag == mx) & (mag > gamma))
    if cand.size == 0:
        return []
    vals = mag.ravel()[cand]
    order = np.lexsort((cand, -vals))
    cand, vals = cand[order], vals[order]
    if floor_db is not None:
        keep = vals >= vals[0] * 10 ** (floor_db / 20)
        cand, vals = cand[keep], vals[keep]
    params = dmap.space.params
    tol_r = radius * dmap.resolution[0] * (1 + 1e-9)
    tol_v = radius * max(dmap.resolution[1], params.Va / params.M) * (1 + 1e-9)
    kept: list[Detection] = []
    kept_rv: list[tuple] = []
    for flat, v in zip(cand, vals):
        idx = np.unravel_index(int(flat), mag.shape)
        motion, extras = dmap.estimate(idx)
        r, vm = motion.c[0], mean_velocity(motion, params)
        if any(abs(r - kr) <= tol_r and abs(vm - kv) <= tol_v for kr, kv in kept_rv):
            continue
        kept.append(Detection(motion, float(v), tuple(int(i) for i in idx), extras))
        kept_rv.append((r, vm))
    return kept
