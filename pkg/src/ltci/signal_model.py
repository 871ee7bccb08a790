"""Echo model in the range-frequency / slow-time domain.

A target at slant range R(t) = c0 + c1 t + ... + cP t^P contributes

    y(f_k, t_m) = A1 * exp(-j 4 pi (f_k + fc) R(t_m) / c)

to frequency bin ``k`` of pulse ``m``.  Range compression is the
unnormalized inverse DFT over frequency, so a point target compresses to
an aliased-sinc envelope of peak ``K_valid * |A1|``.

Layout conventions
------------------
* The echo occupies the baseband interval ``[-(K_valid-1) delta_f, 0]``
  below the carrier, ``delta_f = fs / K``.  Rows are in wrapped order:
  row 0 is ``f = 0`` and row ``k >= 1`` is ``f_k = (k - K) delta_f``, so the
  valid band is row 0 plus the last ``K_valid - 1`` rows and the rest is a
  zero guard band.  The IFFT kernel ``exp(+j 2 pi k n / K)`` is then
  literally ``exp(+j 2 pi f_k tau_n)``.  Putting the carrier at the top of
  the band is what makes the residual Doppler after coarse range-migration
  compensation scale by ``1 - Br / (2 fc)``.
* Slow time is ``t_m = m / PRF`` for ``m = 1..M``; array column ``i``
  holds pulse ``m = i + 1``.
* Range bin ``n`` (0-based) sits at ``tau_n = n / fs``, i.e. slant range
  ``n * delta_R``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

C = 3.0e8  # speed of light used throughout, m/s


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class RadarParams:
    """Waveform and sampling constants.

    ``K_valid`` defaults to ``K * Br / fs`` rounded to an even integer and
    ``Br`` is then snapped to ``K_valid * delta_f`` so that the bandwidth
    identity holds exactly.
    """

    fc: float
    fs: float
    Br: float
    PRF: float
    M: int
    K: int
    K_valid: int | None = None

    def __post_init__(self):
        for name in ("fc", "fs", "Br", "PRF"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise ValueError(f"{name} must be positive and finite, got {v}")
        if not _is_pow2(int(self.M)) or not _is_pow2(int(self.K)):
            raise ValueError("M and K must be powers of two")
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "K", int(self.K))
        kv = self.K_valid
        if kv is None:
            kv = 2 * int(round(self.K * self.Br / self.fs / 2.0))
        kv = int(kv)
        if not 1 <= kv <= self.K:
            raise ValueError(f"K_valid must lie in [1, K], got {kv}")
        object.__setattr__(self, "K_valid", kv)
        object.__setattr__(self, "Br", kv * self.delta_f)
        if self.fs < self.Br * (1 - 1e-12):
            raise ValueError("fs must be at least Br")

    @property
    def delta_f(self) -> float:
        return self.fs / self.K

    @property
    def wavelength(self) -> float:
        return C / self.fc

    @property
    def T(self) -> float:
        """Coherent integration time, s."""
        return self.M / self.PRF

    @property
    def Va(self) -> float:
        """Blind velocity lambda * PRF / 2, m/s."""
        return self.wavelength * self.PRF / 2.0

    @property
    def delta_R(self) -> float:
        return C / (2.0 * self.fs)

    @property
    def delta_fd(self) -> float:
        return 1.0 / self.T

    @property
    def Ts(self) -> float:
        return 1.0 / self.fs

    @property
    def kappa(self) -> float:
        """Fine-parameter scale 1 - Br / (2 fc)."""
        return 1.0 - self.Br / (2.0 * self.fc)

    def freqs(self) -> np.ndarray:
        """Baseband frequency of each row, Hz (wrapped, all <= 0)."""
        k = np.arange(self.K)
        return np.where(k == 0, 0, k - self.K) * self.delta_f

    def valid_mask(self) -> np.ndarray:
        k = np.arange(self.K)
        return (k == 0) | (k > self.K - self.K_valid)

    def slow_times(self) -> np.ndarray:
        return np.arange(1, self.M + 1) / self.PRF

    def range_axis(self) -> np.ndarray:
        return np.arange(self.K) * self.delta_R

    def range_bin(self, r: float) -> int:
        return int(round(r / self.delta_R))


@dataclass(frozen=True)
class MotionParams:
    """Polynomial range history; ``c[0]`` in m, ``c[p]`` in m/s^p."""

    c: tuple

    def __init__(self, c: Sequence[float]):
        arr = tuple(float(x) for x in c)
        if len(arr) < 2:
            raise ValueError("need at least c0 and c1 (P >= 1)")
        if not all(np.isfinite(arr)):
            raise ValueError("motion coefficients must be finite")
        object.__setattr__(self, "c", arr)

    @property
    def P(self) -> int:
        return len(self.c) - 1

    def __getitem__(self, p):
        return self.c[p]

    def __len__(self):
        return len(self.c)


@dataclass(frozen=True)
class Target:
    amplitude: complex
    motion: MotionParams

    def __post_init__(self):
        if not isinstance(self.motion, MotionParams):
            object.__setattr__(self, "motion", MotionParams(self.motion))
        if abs(self.amplitude) <= 0:
            raise ValueError("target amplitude must be nonzero")


@dataclass(frozen=True, eq=False)
class FreqPulseCube:
    """K x M samples y(f_k, t_m); rows are frequency bins, columns pulses."""

    data: np.ndarray
    params: RadarParams

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.complex128)
        if d.shape != (self.params.K, self.params.M):
            raise ValueError(f"cube shape {d.shape} != (K, M) = {(self.params.K, self.params.M)}")
        object.__setattr__(self, "data", d)

    @property
    def freqs(self) -> np.ndarray:
        return self.params.freqs()


@dataclass(frozen=True, eq=False)
class RangePulseCube:
    """N0 x M samples y(tau_n, t_m); N0 == K."""

    data: np.ndarray
    params: RadarParams

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.complex128)
        if d.shape != (self.params.K, self.params.M):
            raise ValueError(f"cube shape {d.shape} != (N0, M) = {(self.params.K, self.params.M)}")
        object.__setattr__(self, "data", d)


def asinc(tau, params: RadarParams):
    """Aliased sinc sin(pi Br tau) / (K_valid sin(pi delta_f tau)).

    Removable singularities (``delta_f * tau`` integer) take the limit +-1.
    """
    tau = np.asarray(tau, dtype=float)
    num = np.sin(np.pi * params.Br * tau)
    den = params.K_valid * np.sin(np.pi * params.delta_f * tau)
    sing = np.abs(np.sin(np.pi * params.delta_f * tau)) < 1e-12
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(sing, 0.0, num / np.where(sing, 1.0, den))
    lim = np.cos(np.pi * params.Br * tau) / np.cos(np.pi * params.delta_f * tau)
    out = np.where(sing, lim, out)
    return out[()] if out.ndim == 0 else out


def slant_range(motion: MotionParams, t):
    """Horner evaluation of c0 + sum_p c_p t^p."""
    c = motion.c if isinstance(motion, MotionParams) else tuple(motion)
    t = np.asarray(t, dtype=float)
    acc = np.full_like(t, c[-1])
    for coef in reversed(c[:-1]):
        acc = acc * t + coef
    return acc[()] if acc.ndim == 0 else acc


def synthesize_cube(params: RadarParams, targets: Sequence[Target]) -> FreqPulseCube:
    """Noiseless multi-target echo cube (superposition of single-target echoes)."""
    data = np.zeros((params.K, params.M), dtype=np.complex128)
    rows = params.valid_mask()
    fk = params.freqs()[rows]
    t = params.slow_times()
    for tgt in targets:
        r = slant_range(tgt.motion, t)
        data[rows] += tgt.amplitude * np.exp(
            -1j * (4 * np.pi / C) * np.outer(fk + params.fc, r)
        )
    return FreqPulseCube(data, params)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def add_noise(cube: FreqPulseCube, sigma2: float, seed=None) -> FreqPulseCube:
    """Add circular complex white Gaussian noise of total variance ``sigma2``
    to every frequency bin (guard band included)."""
    if sigma2 < 0:
        raise ValueError("sigma2 must be non-negative")
    if sigma2 == 0:
        return FreqPulseCube(cube.data.copy(), cube.params)
    rng = _rng(seed)
    shape = cube.data.shape
    noise = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return FreqPulseCube(cube.data + np.sqrt(sigma2 / 2.0) * noise, cube.params)


def range_ifft(cube: FreqPulseCube) -> RangePulseCube:
    """Unnormalized inverse DFT over frequency: sum_k y_k exp(+j 2 pi k n / K)."""
    K = cube.params.K
    return RangePulseCube(K * np.fft.ifft(cube.data, axis=0), cube.params)


def range_fft(cube: RangePulseCube) -> FreqPulseCube:
    """Inverse of :func:`range_ifft`."""
    K = cube.params.K
    return FreqPulseCube(np.fft.fft(cube.data, axis=0) / K, cube.params)
