import csv
import json
import math

import numpy as np
import pytest

from nextsense.channel import Tap, read_tap_file
from nextsense.runner import (
    IntegrityError,
    SpecValidationError,
    compute_kpis,
    iq_from_bytes,
    iq_to_bytes,
    read_dataset,
    replay_estimate,
    run_experiment,
    write_dataset,
)
from nextsense.scenario import (
    Box,
    Cbr,
    ExperimentSpec,
    RadioConfig,
    UESpec,
    spec_to_doc,
)
from nextsense.waveform import GridDims, generate_reference

IDENTITY_CHANNEL = {
    "taps": [{"delay_ns": 0.0, "power_db": 0.0, "doppler_hz": 0.0}],
    "normalize_power": False,
    "seed": 1,
}


def small_spec(**kw):
    defaults = dict(
        name="t",
        duration_s=0.1,
        snapshot_interval_s=0.01,
        seed=5,
        ues=(UESpec(id="ue0", channel=IDENTITY_CHANNEL),),
    )
    defaults.update(kw)
    return ExperimentSpec(**defaults)


class TestRunExperiment:
    def test_counting_contract(self):
        ds = run_experiment(small_spec())
        ud = ds.ues[0]
        assert ud.iq.shape[2] == 10
        assert len(ud.kpis) == 10
        assert len(ud.mobility_times) == 11

    def test_determinism(self):
        spec = small_spec(
            ues=(UESpec(id="ue0", channel={"preset": "tdla30", "doppler_hz": 40.0,
                                           "noise_spectral_density_dbm_hz": -60.0, "seed": 9}),)
        )
        a = run_experiment(spec)
        b = run_experiment(spec)
        assert iq_to_bytes(a.ues[0].iq) == iq_to_bytes(b.ues[0].iq)

    def test_identity_channel_records_reference(self):
        spec = small_spec()
        ds = run_experiment(spec)
        dims = GridDims(num_subcarriers=360, num_symbols=4, num_snapshots=10,
                        subcarrier_spacing_khz=30.0)
        x = generate_reference(spec.seed, dims)
        assert np.array_equal(ds.ues[0].iq, np.repeat(x.values[:, :, None], 10, axis=2))

    def test_invalid_spec_rejected(self):
        spec = small_spec(radio=RadioConfig(subcarrier_spacing_khz=17.0))
        with pytest.raises(SpecValidationError):
            run_experiment(spec)

    def test_progress_monotone_and_complete(self):
        seen = []
        run_experiment(small_spec(), progress=seen.append)
        assert seen == sorted(seen)
        assert seen[-1] == pytest.approx(1.0)

    def test_rsrp_identity_channel_zero_dbm(self):
        ds = run_experiment(small_spec())
        assert ds.ues[0].kpis[0].rsrp_dbm == pytest.approx(0.0, abs=1e-9)

    def test_snr_none_when_noise_disabled(self):
        ds = run_experiment(small_spec())
        assert ds.ues[0].kpis[0].snr_db is None

    def test_timing_advance_two_bin_delay(self):
        dims = GridDims(num_snapshots=10)
        bin_ns = dims.bin_duration_s * 1e9
        spec = small_spec(
            ues=(UESpec(id="ue0", channel={
                "taps": [{"delay_ns": 2 * bin_ns, "power_db": 0.0, "doppler_hz": 0.0}],
                "seed": 1}),)
        )
        ds = run_experiment(spec)
        assert ds.ues[0].kpis[0].timing_advance_s == pytest.approx(2 * dims.bin_duration_s)

    def test_rsrp_decreases_with_distance(self):
        # Two placements, same channel: farther UE sees strictly lower RSRP.
        def spec_at(x_pos):
            return small_spec(
                radio=RadioConfig(antenna_position=(0.0, 0.0, 10.0)),
                ues=(UESpec(
                    id="ue0",
                    initial_position=(x_pos, 0.0, 1.5),
                    mobility_area=Box((-500, -500, 0), (500, 500, 3)),
                    channel=dict(IDENTITY_CHANNEL, path_loss_a_db=28.0, path_loss_b_db=22.0),
                ),),
            )
        near = run_experiment(spec_at(5.0)).ues[0].kpis[0].rsrp_dbm
        far = run_experiment(spec_at(400.0)).ues[0].kpis[0].rsrp_dbm
        assert far < near

    def test_mobility_doppler_filled_from_speed(self):
        # from-mobility sentinel resolves to v*fc/c; fading then decorrelates
        # snapshots, so the recorded tensor is not constant over n.
        spec = small_spec(
            duration_s=1.0,
            snapshot_interval_s=0.01,
            radio=RadioConfig(carrier_frequency_mhz=3500.0),
            ues=(UESpec(
                id="ue0",
                speed_mps=10.0,
                direction_deg=0.0,
                mobility_logic="linear_bounce",
                mobility_area=Box((-100, -100, 0), (100, 100, 3)),
                channel={"taps": [{"delay_ns": 0.0, "power_db": 0.0,
                                   "doppler_hz": "from-mobility"}], "seed": 2},
            ),),
        )
        ds = run_experiment(spec)
        iq = ds.ues[0].iq
        assert not np.allclose(iq[:, :, 0], iq[:, :, -1])

    def test_event_log_markers(self):
        ds = run_experiment(small_spec())
        events = ds.ues[0].events
        assert events[0].endswith("REGISTER ue=ue0")
        assert events[-1].endswith("RELEASE ue=ue0")
        assert any("PDU_SESSION_SETUP" in e for e in events)

    def test_nas_off_suppresses_session_event(self):
        spec = small_spec(log_verbosity={"nas": "off"})
        ds = run_experiment(spec)
        assert not any("PDU_SESSION_SETUP" in e for e in ds.ues[0].events)

    def _mcs_swing_spec(self, rrc_level):
        # UE retreating fast with a steep path-loss slope: SNR drops across
        # several MCS thresholds within the run.
        return small_spec(
            log_verbosity={"rrc": rrc_level},
            radio=RadioConfig(antenna_position=(0.0, 0.0, 1.5)),
            ues=(UESpec(
                id="ue0",
                initial_position=(1.0, 0.0, 1.5),
                speed_mps=40.0,
                direction_deg=0.0,
                mobility_logic="linear_bounce",
                mobility_area=Box((-100, -100, 0), (100, 100, 3)),
                channel=dict(IDENTITY_CHANNEL,
                             noise_spectral_density_dbm_hz=-60.0,
                             path_loss_a_db=10.0, path_loss_b_db=40.0),
            ),),
        )

    def test_rrc_full_emits_reconfig_on_mcs_change(self):
        ds = run_experiment(self._mcs_swing_spec("full"))
        mcs_values = {rec.dl_mcs for rec in ds.ues[0].kpis}
        assert len(mcs_values) > 1  # the scenario really does swing MCS
        assert any("RRC_RECONFIG" in e for e in ds.ues[0].events)

    def test_rrc_summary_suppresses_reconfig(self):
        ds = run_experiment(self._mcs_swing_spec("summary"))
        assert not any("RRC_RECONFIG" in e for e in ds.ues[0].events)


class TestComputeKpis:
    def test_throughput_capped_by_cbr(self):
        k = compute_kpis(
            tx_power_dbm=0.0, bandwidth_mhz=20.0, path_loss_db=0.0,
            mean_channel_gain=1.0, noise_power_dbm=-10.0, timing_advance_s=0.0,
            traffic_profile=Cbr(rate_kbps=100.0), max_mcs=28,
        )
        assert k["throughput_kbps"] == 100.0

    def test_throughput_shannon_for_ssb_profile(self):
        k = compute_kpis(
            tx_power_dbm=0.0, bandwidth_mhz=20.0, path_loss_db=0.0,
            mean_channel_gain=1.0, noise_power_dbm=0.0, timing_advance_s=0.0,
            traffic_profile="periodic_ssb_only", max_mcs=28,
        )
        assert k["throughput_kbps"] == pytest.approx(20e6 * math.log2(2.0) / 1e3)

    def test_no_traffic_zero_throughput(self):
        k = compute_kpis(
            tx_power_dbm=0.0, bandwidth_mhz=20.0, path_loss_db=0.0,
            mean_channel_gain=1.0, noise_power_dbm=0.0, timing_advance_s=0.0,
            traffic_profile="none", max_mcs=28,
        )
        assert k["throughput_kbps"] == 0.0

    def test_mcs_clamped(self):
        k = compute_kpis(
            tx_power_dbm=0.0, bandwidth_mhz=20.0, path_loss_db=0.0,
            mean_channel_gain=1.0, noise_power_dbm=-50.0, timing_advance_s=0.0,
            traffic_profile="periodic_ssb_only", max_mcs=10,
        )
        assert k["dl_mcs"] == 10

    def test_mcs_zero_at_low_snr(self):
        k = compute_kpis(
            tx_power_dbm=0.0, bandwidth_mhz=20.0, path_loss_db=100.0,
            mean_channel_gain=1.0, noise_power_dbm=0.0, timing_advance_s=0.0,
            traffic_profile="periodic_ssb_only", max_mcs=28,
        )
        assert k["dl_mcs"] == 0

    def test_rsrq_monotone_in_snr(self):
        values = []
        for noise in (0.0, -10.0, -20.0):
            k = compute_kpis(
                tx_power_dbm=0.0, bandwidth_mhz=20.0, path_loss_db=0.0,
                mean_channel_gain=1.0, noise_power_dbm=noise, timing_advance_s=0.0,
                traffic_profile="periodic_ssb_only", max_mcs=28,
            )
            values.append(k["rsrq_db"])
        assert values == sorted(values)
        assert all(v <= -3.0 + 1e-12 for v in values)


class TestIqBytes:
    def test_round_trip(self):
        rng = np.random.default_rng(1)
        iq = (rng.normal(size=(5, 3, 4)) + 1j * rng.normal(size=(5, 3, 4))).astype(np.complex64).astype(complex)
        assert np.array_equal(iq_from_bytes(iq_to_bytes(iq), 5, 3), iq)

    def test_layout_snapshot_major(self):
        iq = np.zeros((2, 1, 2), dtype=complex)
        iq[0, 0, 0] = 1.0 + 2.0j   # first subcarrier, first snapshot
        iq[1, 0, 1] = 3.0 - 4.0j   # second subcarrier, second snapshot
        raw = np.frombuffer(iq_to_bytes(iq), dtype="<f4")
        # snapshot 0: (k0 I,Q), (k1 I,Q); snapshot 1: (k0 I,Q), (k1 I,Q)
        assert list(raw) == [1.0, 2.0, 0.0, 0.0, 0.0, 0.0, 3.0, -4.0]

    def test_bad_length_rejected(self):
        with pytest.raises(IntegrityError):
            iq_from_bytes(b"\x00" * 10, 5, 3)


class TestDatasetIO:
    def test_write_read_round_trip(self, tmp_path):
        ds = run_experiment(small_spec())
        write_dataset(ds, tmp_path / "run")
        back = read_dataset(tmp_path / "run")
        assert back.manifest == json.loads(json.dumps(ds.manifest))
        for a, b in zip(ds.ues, back.ues):
            assert iq_to_bytes(a.iq) == iq_to_bytes(b.iq)
            assert np.array_equal(a.mobility_times, b.mobility_times)
            assert np.array_equal(a.mobility_positions, b.mobility_positions)
            assert a.events == b.events
            for ra, rb in zip(a.kpis, b.kpis):
                assert ra.time_s == rb.time_s
                assert ra.rsrp_dbm == rb.rsrp_dbm
                assert ra.snr_db == rb.snr_db
                assert ra.throughput_kbps == rb.throughput_kbps

    def test_digest_tracks_content(self, tmp_path):
        ds = run_experiment(small_spec())
        d1 = write_dataset(ds, tmp_path / "a")
        ds2 = run_experiment(small_spec(seed=6))
        d2 = write_dataset(ds2, tmp_path / "b")
        assert d1 != d2

    def test_corrupt_byte_detected(self, tmp_path):
        ds = run_experiment(small_spec())
        write_dataset(ds, tmp_path / "run")
        iq_path = tmp_path / "run" / "ue0" / "iq.bin"
        blob = bytearray(iq_path.read_bytes())
        blob[100] ^= 0xFF
        iq_path.write_bytes(bytes(blob))
        with pytest.raises(IntegrityError, match="sha256"):
            read_dataset(tmp_path / "run")

    def test_truncated_iq_detected(self, tmp_path):
        ds = run_experiment(small_spec())
        write_dataset(ds, tmp_path / "run")
        iq_path = tmp_path / "run" / "ue0" / "iq.bin"
        iq_path.write_bytes(iq_path.read_bytes()[:-8])
        with pytest.raises(IntegrityError, match="iq.bin"):
            read_dataset(tmp_path / "run")

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_dataset(tmp_path)

    def test_verbosity_gates_columns(self, tmp_path):
        spec = small_spec(log_verbosity={"phy": "off", "mac": "full"})
        ds = run_experiment(spec)
        write_dataset(ds, tmp_path / "run")
        with open(tmp_path / "run" / "ue0" / "kpis.csv", newline="") as f:
            header = next(csv.reader(f))
        assert "rsrp_dbm" not in header
        assert "throughput_kbps" in header
        assert "dl_bler" in header  # reserved, emitted empty

    def test_mac_summary_omits_reserved(self, tmp_path):
        ds = run_experiment(small_spec(log_verbosity={"mac": "summary"}))
        write_dataset(ds, tmp_path / "run")
        with open(tmp_path / "run" / "ue0" / "kpis.csv", newline="") as f:
            header = next(csv.reader(f))
        assert "dl_bler" not in header

    def test_manifest_self_describing(self, tmp_path):
        ds = run_experiment(small_spec())
        write_dataset(ds, tmp_path / "run")
        manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
        assert manifest["format_version"] == 1
        assert manifest["iq_format"]["dtype"] == "float32"
        assert "kpi_formulas" in manifest
        assert manifest["spec"] == spec_to_doc(small_spec())


class TestReplayEstimate:
    def test_recovers_configured_taps(self, tmp_path):
        dims = GridDims(num_snapshots=10)
        bin_ns = dims.bin_duration_s * 1e9
        taps = [
            {"delay_ns": 0.0, "power_db": 0.0, "doppler_hz": 0.0},
            {"delay_ns": 4 * bin_ns, "power_db": -6.0, "doppler_hz": 0.0},
        ]
        spec = small_spec(ues=(UESpec(id="ue0", channel={"taps": taps, "seed": 3}),))
        ds = run_experiment(spec)
        write_dataset(ds, tmp_path / "run")
        recovered = replay_estimate(tmp_path / "run")
        assert [t.delay_ns for t in recovered] == [0.0, 4 * bin_ns]
        assert recovered[1].power_db == pytest.approx(-6.0, abs=0.01)
