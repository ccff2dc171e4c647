import numpy as np
import pytest

from thzvr.channel import (ChannelParams, ConfigError, absorption_coefficient,
                           array_response, azimuth, build_channel_set, distance3,
                           los_channel, path_gain, ris_mec_channels,
                           ris_path_compensation, ris_user_channel)
from thzvr.geometry import Position3

PARAMS = ChannelParams(f=3.0e11, absorption_table=((3.0e11, 0.0033),),
                       m_antennas=30, n_elements=20, ris_gain=1.0)


class TestArrayResponse:
    def test_single_element(self):
        assert array_response(1, 0.7, 1e-3) == pytest.approx([1.0])

    def test_two_elements_broadside(self):
        np.testing.assert_allclose(array_response(2, 0.0, 1e-3),
                                   np.ones(2) / np.sqrt(2))

    def test_matches_direct_evaluation(self):
        lam = 1e-3
        phi = np.pi / 6
        vec = array_response(4, phi, lam)
        direct = np.array([np.exp(-1j * 2 * np.pi / lam * m * np.sin(phi))
                           for m in range(4)]) / 2.0
        np.testing.assert_allclose(vec, direct, atol=1e-12)

    def test_unit_norm_over_sweep(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n = int(rng.integers(1, 64))
            vec = array_response(n, rng.uniform(-np.pi, np.pi), 1e-3)
            assert abs(np.linalg.norm(vec) - 1.0) < 1e-12


class TestPathGain:
    def test_magnitude_without_absorption(self):
        g = path_gain(3e11, 10.0, 0.0)
        assert abs(g) == pytest.approx(7.9577e-6, rel=1e-4)

    def test_double_distance_halves_magnitude(self):
        a = abs(path_gain(3e11, 10.0, 0.0))
        b = abs(path_gain(3e11, 20.0, 0.0))
        assert b == pytest.approx(a / 2.0, rel=1e-12)

    def test_absorption_factor(self):
        base = abs(path_gain(3e11, 10.0, 0.0))
        attenuated = abs(path_gain(3e11, 10.0, 0.0033))
        assert attenuated / base == pytest.approx(np.exp(-0.0165), rel=1e-12)

    def test_nonpositive_distance_rejected(self):
        with pytest.raises(ValueError):
            path_gain(3e11, 0.0, 0.0)

    def test_monotone_in_distance_and_absorption(self):
        ds = np.linspace(1.0, 30.0, 40)
        mags = [abs(path_gain(3e11, d, 0.0033)) for d in ds]
        assert all(a > b for a, b in zip(mags, mags[1:]))
        taus = np.linspace(0.0, 0.05, 40)
        mags = [abs(path_gain(3e11, 10.0, t)) for t in taus]
        assert all(a > b for a, b in zip(mags, mags[1:]))


class TestAbsorptionTable:
    def test_single_entry(self):
        assert absorption_coefficient(3e11, ((3e11, 0.0033),)) == 0.0033

    def test_midpoint_interpolation(self):
        table = ((1e11, 0.001), (3e11, 0.003))
        assert absorption_coefficient(2e11, table) == pytest.approx(0.002)

    def test_out_of_range(self):
        with pytest.raises(ConfigError):
            absorption_coefficient(4e11, ((3e11, 0.0033),))

    def test_unsorted_table(self):
        with pytest.raises(ConfigError):
            absorption_coefficient(2e11, ((3e11, 0.003), (1e11, 0.001)))


class TestLosChannel:
    def test_single_antenna_magnitude(self):
        params = ChannelParams(f=3e11, absorption_table=((3e11, 0.0),),
                               m_antennas=1, n_elements=1, ris_gain=1.0)
        h = los_channel(params, 10.0, 0.3)
        assert abs(h[0]) == pytest.approx(7.9577e-6, rel=1e-4)

    def test_blocked_user_zero_vector(self):
        h = los_channel(PARAMS, 10.0, 0.3, los=False)
        assert np.all(h == 0) and h.shape == (30,)

    def test_norm_equals_path_gain_magnitude(self):
        h = los_channel(PARAMS, 12.0, 0.7)
        assert np.linalg.norm(h) == pytest.approx(
            abs(path_gain(3e11, 12.0, PARAMS.tau)), rel=1e-12)


class TestRisChannels:
    def test_compensation_factor_value(self):
        assert ris_path_compensation(PARAMS) == pytest.approx(7.0898e4, rel=1e-4)

    def test_rank_one(self):
        g_up, g_down, _ = ris_mec_channels(PARAMS, 22.36, 0.2, -0.4)
        for mat in (g_up, g_down):
            s = np.linalg.svd(mat, compute_uv=False)
            assert s[1] <= 1e-10 * s[0]

    def test_down_is_up_hermitian_up_to_scalar_phase(self):
        g_up, g_down, _ = ris_mec_channels(PARAMS, 22.36, 0.2, -0.4)
        scalar = ris_path_compensation(PARAMS) * path_gain(3e11, 22.36, PARAMS.tau)
        phase = scalar / np.conj(scalar)
        np.testing.assert_allclose(g_down, phase * g_up.conj().T, atol=1e-18)
        np.testing.assert_allclose(np.abs(g_down), np.abs(g_up).T, atol=1e-18)

    def test_degenerate_single_antenna(self):
        params = ChannelParams(f=3e11, absorption_table=((3e11, 0.0),),
                               m_antennas=1, n_elements=1, ris_gain=1.0)
        g_up, g_down, _ = ris_mec_channels(params, 10.0, 0.0, 0.0)
        expected = ris_path_compensation(params) * path_gain(3e11, 10.0, 0.0)
        assert g_up[0, 0] == pytest.approx(expected)
        assert g_down[0, 0] == pytest.approx(expected)

    def test_ris_user_channel_entry_magnitude(self):
        vec = ris_user_channel(PARAMS, 12.0, 0.5)
        expected = 7.9577e-6 * 10.0 / 12.0 * np.exp(-0.0033 * 6.0) / np.sqrt(20)
        np.testing.assert_allclose(np.abs(vec), expected, rtol=1e-4)


class TestBuildChannelSet:
    def test_deterministic_and_consistent(self):
        mec, ris = Position3(0, 0, 3.0), Position3(10, 20, 3.0)
        users = [Position3(5, 5, 1.5), Position3(15, 15, 1.7)]
        flags = [True, False]
        a = build_channel_set(PARAMS, mec, ris, users, flags,
                              np.deg2rad(45), np.deg2rad(-90))
        b = build_channel_set(PARAMS, mec, ris, users, flags,
                              np.deg2rad(45), np.deg2rad(-90))
        np.testing.assert_array_equal(a.g_up, b.g_up)
        np.testing.assert_array_equal(a.h[0], b.h[0])
        assert np.all(a.h[1] == 0)  # blocked user has no direct channel
        assert a.g[1].shape == (20,)
        assert np.isfinite(a.g_up).all() and np.isfinite(a.g_down).all()

    def test_distance_and_azimuth_helpers(self):
        assert distance3(Position3(0, 0, 0), Position3(3, 4, 0)) == 5.0
        assert azimuth(Position3(0, 0, 0), Position3(1, 1, 0)) == pytest.approx(np.pi / 4)
