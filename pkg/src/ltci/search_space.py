"""Motion-parameter search grids.

Single-scale grids step every order at the Doppler-migration resolution.
Dual-scale grids split each coefficient into a coarse part on the (much
wider) range-migration step and a fine residual spanning one coarse step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ltci.signal_model import C, MotionParams, RadarParams


class ConditionViolated(ValueError):
    """(fc/fs)/M > 1: the fine velocity no longer fits one Doppler period."""


@dataclass(frozen=True)
class StepSizes:
    alpha: tuple
    delta_RM: tuple   # per order p = 1..P
    delta_DFM: tuple
    coarse_velocity_identity: float  # alpha_1 * (fc/fs)/M * Va

    @property
    def P(self) -> int:
        return len(self.alpha)


def default_alpha(P: int) -> tuple:
    return tuple([1.0 / P] * P)


def step_sizes(params: RadarParams, P: int, alpha: Sequence[float] | None = None) -> StepSizes:
    if P < 1:
        raise ValueError("motion order P must be >= 1")
    if params.T <= 0:
        raise ValueError("integration time must be positive")
    alpha = default_alpha(P) if alpha is None else tuple(float(a) for a in alpha)
    if len(alpha) != P:
        raise ValueError(f"need {P} weights, got {len(alpha)}")
    if abs(sum(alpha) - 1.0) > 1e-12:
        raise ValueError(f"weights must sum to 1, got {sum(alpha)!r}")
    if any(a < 0 or a > 1 for a in alpha):
        raise ValueError("weights must lie in [0, 1]")
    T = params.T
    d_rm = tuple(a * C / (2 * params.fs * T**p) for p, a in enumerate(alpha, start=1))
    d_dfm = tuple(a * C / (2 * params.fc * T**p) for p, a in enumerate(alpha, start=1))
    ident = alpha[0] * (params.fc / params.fs) / params.M * params.Va
    return StepSizes(alpha, d_rm, d_dfm, ident)


def colon_grid(lo: float, step: float, hi: float) -> np.ndarray:
    """``lo:step:hi`` with the upper end dropped unless hit."""
    if step <= 0:
        raise ValueError("grid step must be positive")
    if hi < lo:
        raise ValueError(f"empty grid: min {lo} > max {hi}")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def covering_grid(lo: float, step: float, hi: float) -> np.ndarray:
    """``lo:step:...`` extended until it reaches ``hi``."""
    if step <= 0:
        raise ValueError("grid step must be positive")
    if hi < lo:
        raise ValueError(f"empty grid: min {lo} > max {hi}")
    n = int(math.ceil((hi - lo) / step - 1e-9)) + 1
    return lo + step * np.arange(n)


def _bounds(P: int, bounds) -> tuple:
    b = tuple((float(lo), float(hi)) for lo, hi in bounds)
    if len(b) != P:
        raise ValueError(f"need bounds for {P} orders, got {len(b)}")
    for lo, hi in b:
        if lo > hi:
            raise ValueError(f"bad bounds ({lo}, {hi})")
    return b


def _roi(params: RadarParams, roi) -> np.ndarray:
    if roi is None:
        return np.arange(params.K)
    r = np.unique(np.asarray(roi, dtype=int))
    if r.size == 0:
        raise ValueError("empty range region of interest")
    if r[0] < 0 or r[-1] >= params.K:
        raise ValueError("range bins outside [0, K)")
    return r


@dataclass(frozen=True, eq=False)
class SingleScaleSpace:
    params: RadarParams
    bounds: tuple
    steps: StepSizes
    grids: tuple          # grids[p-1] for order p
    range_bins: np.ndarray

    @property
    def P(self) -> int:
        return len(self.grids)

    @property
    def sizes(self) -> tuple:
        return tuple(len(g) for g in self.grids)


def build_single_scale(params: RadarParams, P: int, bounds, alpha=None, roi=None) -> SingleScaleSpace:
    """Grids ``[c_min : delta_DFM_p : c_max]`` for every order."""
    steps = step_sizes(params, P, alpha)
    b = _bounds(P, bounds)
    grids = tuple(colon_grid(lo, d, hi) for (lo, hi), d in zip(b, steps.delta_DFM))
    return SingleScaleSpace(params, b, steps, grids, _roi(params, roi))


@dataclass(frozen=True, eq=False)
class DualScaleSpace:
    params: RadarParams
    bounds: tuple
    steps: StepSizes
    coarse: tuple         # C_{p,c}
    fine: tuple           # C_{p,f}, anchored at -delta_{p,c}/2
    kappa: float
    range_bins: np.ndarray

    @property
    def P(self) -> int:
        return len(self.coarse)

    @property
    def coarse_steps(self) -> tuple:
        return self.steps.delta_RM

    @property
    def fine_steps(self) -> tuple:
        return self.steps.delta_DFM

    @property
    def doppler_halfwidth(self) -> int:
        """Half-width D of the Doppler bins -D..D whose cells overlap
        kappa * [-dc_1c/2, dc_1c/2]."""
        bin_v = self.params.Va / self.params.M
        half = self.kappa * self.coarse_steps[0] / 2 / bin_v
        return max(0, int(math.ceil(half - 0.5 - 1e-9)))


def build_dual_scale(params: RadarParams, P: int, bounds, alpha=None, roi=None) -> DualScaleSpace:
    ratio = (params.fc / params.fs) / params.M
    if ratio > 1:
        raise ConditionViolated(
            f"(fc/fs)/M = {ratio:.4g} > 1: fine velocity exceeds one Doppler period"
        )
    steps = step_sizes(params, P, alpha)
    b = _bounds(P, bounds)
    coarse = tuple(covering_grid(lo, d, hi) for (lo, hi), d in zip(b, steps.delta_RM))
    fine = tuple(
        covering_grid(-dc / 2, df, dc / 2) for dc, df in zip(steps.delta_RM, steps.delta_DFM)
    )
    kappa = params.kappa
    assert 0 < kappa < 1
    return DualScaleSpace(params, b, steps, coarse, fine, kappa, _roi(params, roi))


@dataclass(frozen=True, eq=False)
class AmbiguitySpace:
    q: np.ndarray           # folding factors
    baseband: np.ndarray    # Doppler-axis velocities, [-Va/2, Va/2)
    Va: float


def split_velocity(c1: float, params: RadarParams) -> tuple:
    """``c1 = q * Va + base`` with ``base`` in ``[-Va/2, Va/2)``."""
    Va = params.Va
    q = int(math.floor(c1 / Va + 0.5))
    return q, c1 - q * Va


def build_ambiguity(params: RadarParams, velocity_bounds) -> AmbiguitySpace:
    lo, hi = velocity_bounds
    q0, _ = split_velocity(lo, params)
    q1, _ = split_velocity(hi, params)
    M = params.M
    base = (np.arange(M) - M // 2) * params.Va / M
    return AmbiguitySpace(np.arange(q0, q1 + 1), base, params.Va)


def decompose(c_true: MotionParams, space: DualScaleSpace) -> tuple:
    """Coarse grid value and quantized fine residual for each order 1..P."""
    c = c_true.c if isinstance(c_true, MotionParams) else tuple(c_true)
    if len(c) != space.P + 1:
        raise ValueError("motion order does not match the space")
    coarse, fine = [], []
    for p in range(1, space.P + 1):
        lo, hi = space.bounds[p - 1]
        cp = c[p]
        if not lo - 1e-9 <= cp <= hi + 1e-9:
            raise ValueError(f"c_{p} = {cp} outside bounds [{lo}, {hi}]")
        dc, df = space.coarse_steps[p - 1], space.fine_steps[p - 1]
        cc = round((cp - lo) / dc) * dc + lo
        cf = round((cp - cc + dc / 2) / df) * df - dc / 2
        coarse.append(cc)
        fine.append(cf)
    return tuple(coarse), tuple(fine)


def recompose(coarse, fine_scaled, space: DualScaleSpace, range_bin: int = 0) -> MotionParams:
    """c_p = coarse_p + fine_scaled_p / kappa; c_0 from the range bin."""
    c0 = range_bin * space.params.delta_R
    return MotionParams(
        [c0] + [cc + ff / space.kappa for cc, ff in zip(coarse, fine_scaled)]
    )
