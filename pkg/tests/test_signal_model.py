import numpy as np
import pytest

from ltci.signal_model import (
    C,
    FreqPulseCube,
    MotionParams,
    RadarParams,
    Target,
    add_noise,
    asinc,
    range_fft,
    range_ifft,
    slant_range,
    synthesize_cube,
)

KA_BAND = RadarParams(fc=28e9, fs=491.52e6, Br=400e6, PRF=1905, M=512, K=2048)


def small(**kw):
    base = dict(fc=1.6e9, fs=100e6, Br=50e6, PRF=500, M=16, K=16)
    base.update(kw)
    return RadarParams(**base)


class TestRadarParams:
    def test_bandwidth_snapped_to_whole_bins(self):
        p = KA_BAND
        assert p.K_valid % 2 == 0
        assert p.Br == pytest.approx(p.K_valid * p.delta_f, rel=1e-15)
        assert abs(p.Br - 400e6) <= p.delta_f

    def test_derived_quantities(self):
        p = KA_BAND
        assert p.wavelength == pytest.approx(0.0107143, rel=1e-5)
        assert p.Va == pytest.approx(10.2054, rel=1e-4)
        assert p.T == pytest.approx(512 / 1905)
        assert p.delta_R == pytest.approx(C / (2 * 491.52e6))

    def test_frequency_layout_is_below_the_carrier(self):
        p = small(K=16, Br=50e6)
        f = p.freqs()
        assert f[0] == 0 and np.all(f <= 0)
        valid = f[p.valid_mask()]
        assert valid.size == p.K_valid
        assert valid.min() == pytest.approx(-(p.K_valid - 1) * p.delta_f)

    @pytest.mark.parametrize("kw", [dict(M=100), dict(K=48), dict(fs=-1.0), dict(Br=200e6), dict(K_valid=0)])
    def test_rejects_bad_params(self, kw):
        with pytest.raises(ValueError):
            small(**kw)


class TestAsinc:
    def test_unity_at_zero(self):
        assert asinc(0.0, KA_BAND) == pytest.approx(1.0)

    def test_null_at_inverse_bandwidth(self):
        assert abs(asinc(1 / KA_BAND.Br, KA_BAND)) < 1e-12

    def test_approaches_sinc_for_wide_band(self):
        p = RadarParams(fc=28e9, fs=400e6, Br=400e6, PRF=1905, M=8, K=1024)
        tau = np.linspace(-0.1 / p.Br, 0.1 / p.Br, 2001)
        assert np.max(np.abs(asinc(tau, p) - np.sinc(p.Br * tau))) < 1e-4


class TestSlantRange:
    def test_polynomial(self):
        assert slant_range(MotionParams([100, 10, 2]), 0.5) == pytest.approx(105.5)

    def test_time_zero_gives_c0(self):
        assert slant_range(MotionParams([7.0, -3.0, 1.0, 4.0]), 0.0) == 7.0

    def test_reference_target_one(self):
        r = slant_range(MotionParams([538.52, 20, 5.07]), 0.26877)
        assert r == pytest.approx(538.52 + 5.3754 + 0.36626, abs=1e-3)

    def test_motion_needs_velocity(self):
        with pytest.raises(ValueError):
            MotionParams([1.0])


class TestSynthesize:
    def test_stationary_columns_identical(self):
        p = small()
        cube = synthesize_cube(p, [Target(1.0, MotionParams([30.0, 0.0]))])
        assert np.allclose(cube.data, cube.data[:, :1])

    def test_blind_velocity_leaves_pulses_in_phase(self):
        p = small()
        cube = synthesize_cube(p, [Target(1.0, MotionParams([0.0, p.Va]))])
        row0 = cube.data[0]
        assert np.allclose(row0, row0[0], atol=1e-9)

    def test_superposition(self):
        p = small()
        a = Target(0.7, MotionParams([20.0, 3.0, 1.0]))
        b = Target(0.2j, MotionParams([40.0, -5.0, 2.0]))
        both = synthesize_cube(p, [a, b]).data
        assert np.allclose(both, synthesize_cube(p, [a]).data + synthesize_cube(p, [b]).data)

    def test_guard_band_is_empty(self):
        p = small()
        cube = synthesize_cube(p, [Target(1.0, MotionParams([20.0, 3.0]))])
        assert np.all(cube.data[~p.valid_mask()] == 0)

    def test_on_grid_compression_peak(self):
        p = small(K=64, M=4)
        n = 17
        cube = synthesize_cube(p, [Target(1.0, MotionParams([n * p.delta_R, 0.0]))])
        env = np.abs(range_ifft(cube).data)
        assert np.all(np.argmax(env, axis=0) == n)
        assert env[n, 0] == pytest.approx(p.K_valid, rel=1e-12)

    def test_half_bin_offset_follows_asinc(self):
        p = small(K=64, M=4)
        cube = synthesize_cube(p, [Target(1.0, MotionParams([17.5 * p.delta_R, 0.0]))])
        env = np.abs(range_ifft(cube).data[:, 0])
        assert env.max() == pytest.approx(p.K_valid * abs(asinc(0.5 * p.Ts, p)), rel=1e-9)

    def test_full_scale_range_migration_spans_several_bins(self):
        p = KA_BAND
        tg = [Target(1.0, MotionParams([538.52, 20, 5.07]))]
        env = np.abs(range_ifft(synthesize_cube(p, tg)).data)
        peaks = np.argmax(env, axis=0)
        assert peaks.max() - peaks.min() > 1


class TestNoise:
    def test_zero_variance_is_identity(self):
        p = small()
        cube = synthesize_cube(p, [Target(1.0, MotionParams([20.0, 3.0]))])
        assert np.array_equal(add_noise(cube, 0.0, 1).data, cube.data)

    def test_statistics(self):
        p = RadarParams(fc=1.6e9, fs=100e6, Br=50e6, PRF=500, M=512, K=1024)
        x = add_noise(FreqPulseCube(np.zeros((p.K, p.M)), p), 1.0, 5).data
        assert abs(x.mean()) < 5 * np.sqrt(1 / x.size)
        assert np.var(x) == pytest.approx(1.0, rel=0.02)

    def test_seeded(self):
        p = small()
        z = FreqPulseCube(np.zeros((p.K, p.M)), p)
        assert np.array_equal(add_noise(z, 1.0, 3).data, add_noise(z, 1.0, 3).data)
        assert not np.array_equal(add_noise(z, 1.0, 3).data, add_noise(z, 1.0, 4).data)

    def test_negative_variance(self):
        p = small()
        with pytest.raises(ValueError):
            add_noise(FreqPulseCube(np.zeros((p.K, p.M)), p), -1.0)


def test_range_transform_round_trip_and_parseval():
    p = small()
    rng = np.random.default_rng(0)
    x = FreqPulseCube(rng.standard_normal((p.K, p.M)) + 1j * rng.standard_normal((p.K, p.M)), p)
    r = range_ifft(x)
    assert np.allclose(range_fft(r).data, x.data)
    assert np.sum(np.abs(r.data) ** 2) == pytest.approx(p.K * np.sum(np.abs(x.data) ** 2))


def test_zero_cube_stays_zero():
    p = small()
    z = FreqPulseCube(np.zeros((p.K, p.M)), p)
    assert not np.any(range_ifft(z).data)
