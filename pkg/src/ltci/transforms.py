"""Keystone resampling, generalized (inverse) Fourier transforms and the
matched-filter coefficient builders they use.

Transform conventions (pinned by the definition-equality tests):

* GIFT over frequency is the unnormalized inverse DFT
  ``sum_k y(f_k) H(f_k) exp(+j 4 pi f_k c0 / c)`` evaluated at every range
  bin ``c0 = n * delta_R`` at once.
* GFT over slow time is ``sum_m x(t_m) H_DFM(t_m) exp(+j 4 pi v t_m / lambda)``
  evaluated at the Doppler velocities ``v = d * Va / M``,
  ``d = -M/2 .. M/2 - 1`` (returned centered).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from ltci.signal_model import C, FreqPulseCube, RadarParams, RangePulseCube


class MFKind(str, Enum):
    RM = "RM"
    DFM = "DFM"
    KT_RM = "KT_RM"
    PRE_DFM = "PRE_DFM"


@dataclass(frozen=True, eq=False)
class MFCoefficients:
    kind: MFKind
    values: np.ndarray   # (K, M) for RM / KT_RM, (1, M) for DFM / PRE_DFM
    coeffs: tuple


@dataclass(frozen=True, eq=False)
class RangeDopplerMap:
    values: np.ndarray       # (len(range_bins), M), Doppler axis centered
    range_bins: np.ndarray
    velocities: np.ndarray   # baseband velocity of each Doppler column, m/s


def _poly(coeffs, t, start):
    """sum_{p >= start} coeffs[p-1] * t**p for coefficients of orders 1..P."""
    acc = np.zeros_like(t)
    for p, cp in enumerate(coeffs, start=1):
        if p >= start and cp != 0:
            acc = acc + cp * t**p
    return acc


def rm_phase(params: RadarParams, coeffs) -> np.ndarray:
    """(K, M) phase of H_RM: 4 pi f_k (sum_{p>=1} c_p t^p) / c."""
    t = params.slow_times()
    return (4 * np.pi / C) * np.outer(params.freqs(), _poly(coeffs, t, 1))


def kt_rm_phase(params: RadarParams, q: float, c2: float) -> np.ndarray:
    """(K, M) phase of H_KT,RM with the first-order fbar ~ 1 - f_k/fc."""
    t = params.slow_times()
    fk = params.freqs()
    fbar = 1.0 - fk / params.fc
    return (4 * np.pi / C) * fk[:, None] * (
        np.outer(fbar, q * params.Va * t) - c2 * t[None, :] ** 2
    )


def dfm_phase(params: RadarParams, higher: Sequence[float]) -> np.ndarray:
    """(M,) phase of H_DFM for coefficients of orders 2, 3, ..."""
    t = params.slow_times()
    acc = np.zeros_like(t)
    for p, cp in enumerate(higher, start=2):
        acc = acc + cp * t**p
    return (4 * np.pi / params.wavelength) * acc


def build_mf(kind, params: RadarParams, coeffs: Sequence[float], variant: str = "grft") -> MFCoefficients:
    """Matched-filter coefficients.

    ``coeffs`` is ``(c_1, ..., c_P)`` for the GRFT variant and
    ``(q, c_2)`` for the KT-MFP variant.
    """
    kind = MFKind(kind)
    coeffs = tuple(float(c) for c in coeffs)
    if variant not in ("grft", "kt"):
        raise ValueError(f"unknown variant {variant!r}")
    if variant == "kt" and len(coeffs) != 2:
        raise ValueError("KT-MFP coefficients are (q, c2)")
    t = params.slow_times()
    if kind is MFKind.RM:
        if variant == "kt":
            raise ValueError("use KT_RM for the KT-MFP variant")
        ph = rm_phase(params, coeffs)
    elif kind is MFKind.KT_RM:
        if variant != "kt":
            raise ValueError("KT_RM needs the KT-MFP variant")
        ph = kt_rm_phase(params, *coeffs)
    elif kind is MFKind.DFM:
        higher = coeffs[1:]
        ph = dfm_phase(params, higher)[None, :]
    else:
        if variant == "grft":
            ph = (4 * np.pi / params.wavelength) * _poly(coeffs, t, 1)
        else:
            ph = (4 * np.pi / params.wavelength) * coeffs[1] * t**2
        ph = ph[None, :]
    return MFCoefficients(kind, np.exp(1j * ph), coeffs)


def keystone(cube: FreqPulseCube, taps: int = 8) -> FreqPulseCube:
    """Resample each frequency row onto t -> fc / (f_k + fc) * t.

    Truncated-sinc interpolation with ``taps`` taps; indices past either end
    of the pulse train are clamped to the edge samples.
    """
    if taps < 1:
        raise ValueError("taps must be >= 1")
    p = cube.params
    if p.fc <= p.fs:
        raise ValueError("keystone needs fc > fs so that fc + f_k stays positive")
    M = p.M
    x = cube.data
    beta = p.fc / (p.fc + p.freqs())
    # pulse m = i + 1 lives in column i
    u = np.outer(beta, np.arange(1, M + 1)) - 1.0
    base = np.floor(u).astype(np.int64) - (taps // 2 - 1)
    rows = np.arange(p.K)[:, None]
    out = np.zeros_like(x)
    for j in range(taps):
        idx = base + j
        w = np.sinc(u - idx)
        out += w * x[rows, np.clip(idx, 0, M - 1)]
    return FreqPulseCube(out, p)


def gift(cube: FreqPulseCube, coeffs: Sequence[float], variant: str = "grft") -> RangePulseCube:
    """RM-compensated range compression at every range bin."""
    p = cube.params
    if variant == "grft":
        ph = rm_phase(p, coeffs) if any(coeffs) else None
    else:
        ph = kt_rm_phase(p, *coeffs)
    y = cube.data if ph is None else cube.data * np.exp(1j * ph)
    return RangePulseCube(p.K * np.fft.ifft(y, axis=0), p)


def pre_dfm(params: RadarParams, coeffs: Sequence[float], variant: str = "grft") -> np.ndarray:
    t = params.slow_times()
    if variant == "grft":
        ph = _poly(coeffs, t, 1)
    else:
        ph = coeffs[1] * t**2
    return np.exp(1j * (4 * np.pi / params.wavelength) * ph)


def mgift(cube: FreqPulseCube, coarse: Sequence[float], variant: str = "grft") -> RangePulseCube:
    """GIFT at the coarse parameters followed by the pre-DFM phase per pulse."""
    g = gift(cube, coarse, variant)
    return RangePulseCube(g.data * pre_dfm(cube.params, coarse, variant)[None, :], g.params)


def doppler_sum(z: np.ndarray) -> np.ndarray:
    """sum_{m=1..M} z[..., m-1] exp(+j 2 pi d m / M), d = -M/2..M/2-1."""
    M = z.shape[-1]
    d = np.arange(M) - M // 2
    full = M * np.fft.ifft(z, axis=-1)
    return full[..., d % M] * np.exp(2j * np.pi * d / M)


def doppler_velocities(params: RadarParams) -> np.ndarray:
    M = params.M
    return (np.arange(M) - M // 2) * params.Va / M


def gft(rows: RangePulseCube, higher: Sequence[float] = (), roi=None) -> RangeDopplerMap:
    """DFM-compensated Doppler processing of the selected range bins.

    ``higher`` holds the fine coefficients of orders 2..P; the fine velocity
    is read off the Doppler axis.
    """
    p = rows.params
    bins = np.arange(p.K) if roi is None else np.asarray(roi, dtype=int)
    if bins.size == 0:
        raise ValueError("empty range region of interest")
    z = rows.data[bins]
    if any(higher):
        z = z * np.exp(1j * dfm_phase(p, higher))[None, :]
    return RangeDopplerMap(doppler_sum(z), bins, doppler_velocities(p))
