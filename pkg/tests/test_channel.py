import math

import numpy as np
import pytest

from nextsense.channel import (
    FROM_MOBILITY,
    ChannelScenario,
    FadingProcess,
    Tap,
    apply_channel,
    fading_autocorrelation_oracle,
    frequency_response,
    load_tdl_preset,
    mobility_doppler_hz,
    noise_variance,
    path_loss_db,
    port_correlation_matrix,
    read_tap_file,
    resolve_mobility_doppler,
    response_matrix,
    write_tap_file,
)
from nextsense.waveform import GridDims, generate_reference


def single_tap_scenario(delay_ns=0.0, power_db=0.0, doppler_hz=0.0, **kw):
    return ChannelScenario(taps=(Tap(delay_ns, power_db, doppler_hz),), **kw)


class TestTap:
    def test_negative_delay_rejected(self):
        with pytest.raises(ValueError):
            Tap(-1.0, 0.0, 0.0)

    def test_negative_doppler_rejected(self):
        with pytest.raises(ValueError):
            Tap(0.0, 0.0, -5.0)

    def test_mobility_sentinel_accepted(self):
        assert Tap(0.0, 0.0, FROM_MOBILITY).doppler_hz == FROM_MOBILITY

    def test_unknown_sentinel_rejected(self):
        with pytest.raises(ValueError):
            Tap(0.0, 0.0, "whenever")


class TestChannelScenario:
    def test_needs_taps(self):
        with pytest.raises(ValueError):
            ChannelScenario(taps=())

    def test_normalized_powers_sum_to_one(self):
        sc = ChannelScenario(
            taps=(Tap(0, 0.0), Tap(10, -3.0), Tap(20, -10.0)), normalize_power=True
        )
        assert abs(sc.linear_powers().sum() - 1.0) < 1e-9

    def test_unnormalized_powers(self):
        sc = ChannelScenario(taps=(Tap(0, 0.0), Tap(10, 0.0)))
        assert np.allclose(sc.linear_powers(), [1.0, 1.0])

    def test_resolve_mobility_doppler(self):
        sc = ChannelScenario(taps=(Tap(0, 0.0, FROM_MOBILITY), Tap(5, -3.0, 12.0)))
        with pytest.raises(ValueError):
            sc.numeric_dopplers()
        resolved = resolve_mobility_doppler(sc, 77.0)
        assert list(resolved.numeric_dopplers()) == [77.0, 12.0]

    def test_mobility_doppler_formula(self):
        # v * f_c / c at 3 m/s, 3.5 GHz
        assert mobility_doppler_hz(3.0, 3.5e9) == pytest.approx(35.02, abs=0.1)


class TestTdlPresets:
    def test_nominal_delays_match_table(self):
        taps = load_tdl_preset("tdla30")
        assert [t.delay_ns for t in taps[:4]] == [0.0, 10.0, 15.0, 20.0]
        assert taps[1].power_db == 0.0
        assert len(taps) == 12

    def test_override_scales_delays_only(self):
        base = load_tdl_preset("tdla30")
        scaled = load_tdl_preset("tdla30", 60.0)
        for a, b in zip(base, scaled):
            assert b.delay_ns == 2.0 * a.delay_ns
            assert b.power_db == a.power_db

    def test_all_presets_load(self):
        for name in ("tdla30", "tdlb100", "tdlc300"):
            taps = load_tdl_preset(name)
            assert len(taps) == 12
            assert max(t.power_db for t in taps) == 0.0

    def test_scaling_identity(self):
        taps = load_tdl_preset("custom", 30.0, custom_taps=[(1.0, 0.0)])
        assert taps[0].delay_ns == 30.0

    def test_zero_spread_rejected(self):
        with pytest.raises(ValueError):
            load_tdl_preset("tdla30", 0.0)

    def test_unknown_preset_rejected(self):
        with pytest.raises(ValueError):
            load_tdl_preset("tdlz999")

    def test_custom_needs_table(self):
        with pytest.raises(ValueError):
            load_tdl_preset("custom", 30.0)

    def test_preset_doppler_applied(self):
        taps = load_tdl_preset("tdlb100", doppler_hz=55.0)
        assert all(t.doppler_hz == 55.0 for t in taps)


class TestFrequencyResponse:
    dims = GridDims(num_subcarriers=64, num_symbols=1, num_snapshots=1)

    def test_flat_for_zero_delay(self):
        sc = single_tap_scenario()
        h = frequency_response(sc, np.array([1.0 + 0j]), self.dims)
        assert np.allclose(h, 1.0)

    def test_superposition_two_zero_delay_taps(self):
        sc = ChannelScenario(taps=(Tap(0, 0.0), Tap(0, 0.0)))
        h = frequency_response(sc, np.array([1.0, 1.0], dtype=complex), self.dims)
        assert np.allclose(h, 2.0)

    def test_phase_slope_matches_time_domain_oracle(self):
        # Oracle: delta impulse at tau through a dense time-domain grid + DFT.
        tau = 123e-9
        sc = single_tap_scenario(delay_ns=tau * 1e9)
        h = frequency_response(sc, np.array([1.0 + 0j]), self.dims)
        df = self.dims.subcarrier_spacing_hz
        k = np.arange(self.dims.num_subcarriers)
        oracle = np.exp(-2j * np.pi * k * df * tau)
        assert np.allclose(h, oracle, atol=1e-12)
        assert np.allclose(np.abs(h), 1.0, atol=1e-12)
        phase_step = np.angle(h[1:] * np.conj(h[:-1]))
        assert np.allclose(phase_step, -2 * np.pi * df * tau, atol=1e-9)

    def test_gain_count_checked(self):
        sc = ChannelScenario(taps=(Tap(0, 0.0), Tap(5, 0.0)))
        with pytest.raises(ValueError):
            frequency_response(sc, np.array([1.0 + 0j]), self.dims)


class TestFadingProcess:
    def test_static_tap_gain_is_one(self):
        proc = FadingProcess(single_tap_scenario(doppler_hz=0.0, seed=9))
        g = proc.gains_at(np.array([0.0, 0.5, 2.0]))
        assert np.all(g == 1.0)

    def test_unit_mean_power(self):
        # >= 10 coherence times at f_D = 100 Hz
        sc = single_tap_scenario(doppler_hz=100.0, seed=4)
        g = FadingProcess(sc).gains_at(np.arange(2000) * 1e-3)
        assert abs(np.mean(np.abs(g) ** 2) - 1.0) < 0.02

    def test_autocorrelation_matches_bessel_oracle(self):
        fd, dt = 100.0, 1e-3
        for seed in (0, 1, 2):
            sc = single_tap_scenario(doppler_hz=fd, seed=seed)
            g = FadingProcess(sc).gains_at(np.arange(3000) * dt)[0]
            energy = np.sum(np.abs(g) ** 2)
            lags = np.arange(0, 21)  # up to 2/f_D
            acf = np.array(
                [np.real(np.sum(np.conj(g[: g.size - m]) * g[m:])) / energy for m in lags]
            )
            oracle = np.array([fading_autocorrelation_oracle(fd, m * dt) for m in lags])
            assert np.sqrt(np.mean((acf - oracle) ** 2)) <= 0.05

    def test_deterministic_in_seed(self):
        sc = single_tap_scenario(doppler_hz=40.0, seed=11)
        t = np.arange(50) * 0.01
        assert np.array_equal(FadingProcess(sc).gains_at(t), FadingProcess(sc).gains_at(t))

    def test_port_coloring_matches_target_correlation(self):
        sc = single_tap_scenario(doppler_hz=200.0, seed=2, power_db=0.0)
        sc = ChannelScenario(taps=sc.taps, mimo_correlation="high", seed=2)
        proc = FadingProcess(sc, num_ports=2)
        g = proc.gains_at(np.arange(6000) * 2e-3)  # (2, 1, T)
        a, b = g[0, 0], g[1, 0]
        rho = np.abs(np.mean(a * np.conj(b))) / np.sqrt(
            np.mean(np.abs(a) ** 2) * np.mean(np.abs(b) ** 2)
        )
        assert abs(rho - 0.9) < 0.1

    def test_uncorrelated_ports_for_low(self):
        sc = ChannelScenario(taps=(Tap(0, 0.0, 150.0),), mimo_correlation="low", seed=3)
        g = FadingProcess(sc, num_ports=2).gains_at(np.arange(6000) * 2e-3)
        a, b = g[0, 0], g[1, 0]
        rho = np.abs(np.mean(a * np.conj(b)))
        assert rho < 0.1

    def test_correlation_matrix_shape(self):
        r = port_correlation_matrix("medium", 4)
        assert r.shape == (4, 4)
        assert np.allclose(np.diag(r), 1.0)
        assert r[0, 3] == pytest.approx(0.3)


class TestApplyChannel:
    dims = GridDims(num_subcarriers=48, num_symbols=2, num_snapshots=8)

    def test_identity_channel(self):
        x = generate_reference(7, self.dims)
        sc = single_tap_scenario()
        y = apply_channel(x, sc, np.arange(8) * 0.01)
        assert np.array_equal(y, np.repeat(x.values[:, :, None], 8, axis=2))

    def test_deterministic(self):
        x = generate_reference(7, self.dims)
        sc = ChannelScenario(
            taps=tuple(load_tdl_preset("tdlb100", doppler_hz=70.0)),
            seed=5,
            normalize_power=True,
            noise_spectral_density_dbm_hz=-60.0,
        )
        t = np.arange(8) * 0.005
        assert np.array_equal(apply_channel(x, sc, t), apply_channel(x, sc, t))

    def test_empty_times_rejected(self):
        x = generate_reference(7, self.dims)
        with pytest.raises(ValueError):
            apply_channel(x, single_tap_scenario(), np.array([]))

    def test_decreasing_times_rejected(self):
        x = generate_reference(7, self.dims)
        with pytest.raises(ValueError):
            apply_channel(x, single_tap_scenario(), np.array([0.0, 0.0]))

    def test_noise_disabled_via_minus_inf(self):
        x = generate_reference(7, self.dims)
        sc = single_tap_scenario(noise_spectral_density_dbm_hz=-math.inf)
        y = apply_channel(x, sc, [0.0])
        assert np.array_equal(y[:, :, 0], x.values)

    def test_noise_variance_calibration(self):
        # sigma^2 = N0_lin * spacing; -50 dBm/Hz at 30 kHz -> 0.3 linear
        sc = single_tap_scenario(noise_spectral_density_dbm_hz=-50.0)
        dims = GridDims(subcarrier_spacing_khz=30.0)
        assert noise_variance(sc, dims) == pytest.approx(10 ** (-50 / 10) * 30e3)
        x = generate_reference(1, GridDims(num_subcarriers=360, num_symbols=4))
        sc2 = single_tap_scenario(
            noise_spectral_density_dbm_hz=-50.0, doppler_hz=0.0, seed=8
        )
        y = apply_channel(x, sc2, np.arange(50) * 0.01)
        w = y - np.repeat(x.values[:, :, None], 50, axis=2)
        measured = np.mean(np.abs(w) ** 2)
        assert measured == pytest.approx(0.3, rel=0.05)

    def test_energy_preserved_with_normalized_fading(self):
        # mean |Y|^2 ~ 1 over >= 10 / f_D seconds, noise off
        dims = GridDims(num_subcarriers=120, num_symbols=2, num_snapshots=2000)
        x = generate_reference(3, dims)
        taps = tuple(Tap(d, p, 100.0) for d, p in [(0, 0.0), (400, -3.0), (900, -6.0)])
        sc = ChannelScenario(taps=taps, seed=21, normalize_power=True)
        y = apply_channel(x, sc, np.arange(2000) * 1e-3)
        assert abs(np.mean(np.abs(y) ** 2) - 1.0) < 0.05

    def test_flat_channel_equivalence(self):
        # all delays zero -> |H(k)| constant per snapshot
        taps = tuple(Tap(0.0, p, 90.0) for p in (0.0, -3.0, -7.0))
        sc = ChannelScenario(taps=taps, seed=13, normalize_power=True)
        h = response_matrix(sc, np.arange(20) * 0.002, self.dims)
        mags = np.abs(h)
        ratio = mags.max(axis=1) / mags.min(axis=1)
        assert np.all(np.abs(ratio - 1.0) < 1e-9)


class TestPathLoss:
    def test_zero_coefficients(self):
        assert path_loss_db(0.0, 0.0, 5.0) == 0.0

    def test_one_decade(self):
        assert path_loss_db(30.0, 20.0, 10.0) == pytest.approx(50.0)

    def test_two_decades(self):
        assert path_loss_db(28.0, 22.0, 100.0) == pytest.approx(72.0)

    def test_nonpositive_distance_rejected(self):
        with pytest.raises(ValueError):
            path_loss_db(28.0, 22.0, 0.0)


class TestAutocorrelationOracle:
    def test_zero_lag(self):
        assert fading_autocorrelation_oracle(100.0, 0.0) == 1.0

    def test_first_bessel_zero(self):
        lag = 2.4048 / (2 * np.pi * 100.0)
        assert abs(fading_autocorrelation_oracle(100.0, lag)) < 1e-4

    def test_static(self):
        for lag in (0.0, 0.5, 10.0):
            assert fading_autocorrelation_oracle(0.0, lag) == 1.0

    def test_negative_doppler_rejected(self):
        with pytest.raises(ValueError):
            fading_autocorrelation_oracle(-1.0, 0.1)


class TestTapFile:
    def test_round_trip_exact(self, tmp_path):
        taps = [Tap(0.0, 0.0, 0.0), Tap(185.1851851851852, -3.0, 12.25), Tap(500.0, -10.5, 0.1)]
        path = tmp_path / "scenario.taps"
        write_tap_file(path, taps)
        assert read_tap_file(path) == taps

    def test_comments_and_blanks_ignored(self, tmp_path):
        path = tmp_path / "t.taps"
        path.write_text("# header\n\n0.0 0.0 0.0\n# trailing\n10.0 -3.0 5.0\n")
        taps = read_tap_file(path)
        assert len(taps) == 2
        assert taps[1] == Tap(10.0, -3.0, 5.0)

    def test_malformed_line_reports_position(self, tmp_path):
        path = tmp_path / "bad.taps"
        path.write_text("0.0 0.0\n")
        with pytest.raises(ValueError, match=":1"):
            read_tap_file(path)

    def test_sentinel_not_serializable(self, tmp_path):
        with pytest.raises(ValueError):
            write_tap_file(tmp_path / "x.taps", [Tap(0.0, 0.0, FROM_MOBILITY)])

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.taps"
        path.write_text("# nothing\n")
        with pytest.raises(ValueError):
            read_tap_file(path)
