"""Orchestrator core: execute a validated experiment end to end.

Per snapshot and UE: advance mobility, derive path loss and Doppler, pass the
reference grid through the channel, record IQ and KPIs, and persist the whole
run as a self-describing dataset directory.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

import numpy as np

from . import channel as chan
from . import estimation as est
from . import scenario as scn
from .waveform import GridDims, ReferenceSignal, generate_reference

MANIFEST_FORMAT_VERSION = 1

# SNR (dB) thresholds for MCS 0..28; index = highest entry <= SNR.
MCS_SNR_THRESHOLDS_DB = [float(t) for t in range(-6, 23)]

KPI_FORMULAS = {
    "rsrp": "tx_power_dbm - path_loss_db + 10*log10(mean_k |H(k)|^2)",
    "snr": "rsrp_dbm - (noise_density_dbm_hz + 10*log10(subcarrier_spacing_hz))",
    "rsrq": "-3 + 10*log10(snr_lin / (1 + snr_lin))",
    "timing_advance": "delay of strongest estimated tap (s)",
    "throughput": "bandwidth_hz * log2(1 + snr_lin) / 1e3 kbps, capped by cbr rate",
    "dl_mcs": "snr-threshold-table-v1, clamped to radio.max_mcs",
}


class SpecValidationError(ValueError):
    def __init__(self, violations: list[scn.Violation]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


class IntegrityError(RuntimeError):
    """Dataset on disk does not match its manifest."""


@dataclass(frozen=True)
class SnapshotRecord:
    index: int
    time_s: float
    position: tuple[float, float, float]
    rsrp_dbm: float | None = None
    rsrq_db: float | None = None
    snr_db: float | None = None  # None = noise disabled (serialized empty)
    timing_advance_s: float | None = None
    throughput_kbps: float | None = None
    dl_mcs: int | None = None


@dataclass
class UERunData:
    ue_id: str
    iq: np.ndarray  # (K, S, N) complex
    kpis: list[SnapshotRecord]
    mobility_times: np.ndarray  # (N+1,)
    mobility_positions: np.ndarray  # (N+1, 3)
    events: list[str]


@dataclass
class RunDataset:
    manifest: dict
    ues: list[UERunData] = field(default_factory=list)


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


def _ue_seed(spec_seed: int, ue_index: int) -> int:
    seq = np.random.SeedSequence(entropy=spec_seed, spawn_key=(100 + ue_index,))
    return int(seq.generate_state(1, dtype=np.uint64)[0] % (2**63))


def compute_kpis(
    *,
    tx_power_dbm: float,
    bandwidth_mhz: float,
    path_loss_db: float,
    mean_channel_gain: float,
    noise_power_dbm: float | None,
    timing_advance_s: float,
    traffic_profile,
    max_mcs: int,
) -> dict:
    """Platform KPI conventions; formulas recorded in the manifest."""
    rsrp = tx_power_dbm - path_loss_db + 10.0 * math.log10(max(mean_channel_gain, 1e-30))
    if noise_power_dbm is None:
        snr_db = None
        snr_lin = math.inf
    else:
        snr_db = rsrp - noise_power_dbm
        snr_lin = 10.0 ** (snr_db / 10.0)
    rsrq = -3.0 + 10.0 * math.log10(snr_lin / (1.0 + snr_lin)) if math.isfinite(snr_lin) else -3.0

    if traffic_profile == "none":
        throughput = 0.0
    else:
        if math.isfinite(snr_lin):
            throughput = bandwidth_mhz * 1e6 * math.log2(1.0 + snr_lin) / 1e3
        else:
            throughput = None
        if isinstance(traffic_profile, scn.Cbr):
            cap = traffic_profile.rate_kbps
            throughput = cap if throughput is None else min(throughput, cap)

    if snr_db is None:
        mcs = max_mcs
    else:
        mcs = 0
        for i, thr in enumerate(MCS_SNR_THRESHOLDS_DB):
            if snr_db >= thr:
                mcs = i
        mcs = min(mcs, max_mcs)
    return {
        "rsrp_dbm": rsrp,
        "rsrq_db": rsrq,
        "snr_db": snr_db,
        "throughput_kbps": throughput,
        "dl_mcs": mcs,
        "timing_advance_s": timing_advance_s,
    }


def run_experiment(
    spec: scn.ExperimentSpec,
    progress: Callable[[float], None] | None = None,
) -> RunDataset:
    """Execute the spec; deterministic in spec.seed up to manifest timestamps."""
    violations = scn.validate_spec(spec)
    if violations:
        raise SpecValidationError(violations)

    n_snap = spec.num_snapshots
    dims = GridDims(
        num_subcarriers=spec.capture.num_subcarriers,
        num_symbols=spec.capture.num_symbols,
        num_snapshots=n_snap,
        subcarrier_spacing_khz=spec.radio.subcarrier_spacing_khz,
    )
    x = generate_reference(spec.seed, dims)
    created = _utcnow()

    ues: list[UERunData] = []
    total_steps = len(spec.ues) * n_snap
    done = 0
    for u_idx, ue in enumerate(spec.ues):
        scenario = scn.resolve_channel_scenario(ue.channel, fallback_seed=_ue_seed(spec.seed, u_idx))
        fd = chan.mobility_doppler_hz(ue.speed_mps, spec.radio.carrier_frequency_hz)
        scenario = chan.resolve_mobility_doppler(scenario, fd)

        times, positions = scn.trajectory(ue, spec.duration_s, spec.snapshot_interval_s)
        snap_times = times[:n_snap]
        y, h = chan.apply_channel(x, scenario, snap_times, return_response=True)

        # Timing advance from the estimated impulse response, per snapshot.
        h_hat = est.estimate_freq_channel(y, x)
        imp = est.impulse_response(h_hat)
        strongest_bin = np.argmax(np.abs(imp.values) ** 2, axis=0)
        ta = strongest_bin * imp.bin_duration_s

        noise_dbm = None
        if scenario.noise_enabled:
            noise_dbm = scenario.noise_spectral_density_dbm_hz + 10.0 * math.log10(
                dims.subcarrier_spacing_hz
            )

        mean_gain = np.mean(np.abs(h) ** 2, axis=1)  # (N,)
        kpis: list[SnapshotRecord] = []
        events = [f"{0.0:.6f} REGISTER ue={ue.id}"]
        if spec.log_verbosity.get("nas", "summary") != "off":
            events.append(f"{0.0:.6f} PDU_SESSION_SETUP ue={ue.id}")
        prev_mcs = None
        for n in range(n_snap):
            dist = scn.distance_to_antenna(positions[n], spec.radio)
            pl = chan.path_loss_db(scenario.path_loss_a_db, scenario.path_loss_b_db, dist)
            k = compute_kpis(
                tx_power_dbm=spec.radio.tx_power_dbm,
                bandwidth_mhz=spec.radio.bandwidth_mhz,
                path_loss_db=pl,
                mean_channel_gain=float(mean_gain[n]),
                noise_power_dbm=noise_dbm,
                timing_advance_s=float(ta[n]),
                traffic_profile=ue.traffic_profile,
                max_mcs=spec.radio.max_mcs,
            )
            kpis.append(
                SnapshotRecord(
                    index=n,
                    time_s=float(snap_times[n]),
                    position=tuple(float(c) for c in positions[n]),
                    **k,
                )
            )
            if (
                spec.log_verbosity.get("rrc", "summary") == "full"
                and prev_mcs is not None
                and k["dl_mcs"] != prev_mcs
            ):
                events.append(
                    f"{snap_times[n]:.6f} RRC_RECONFIG ue={ue.id} dl_mcs={prev_mcs}->{k['dl_mcs']}"
                )
            prev_mcs = k["dl_mcs"]
            done += 1
            if progress is not None:
                progress(done / total_steps)
        events.append(f"{spec.duration_s:.6f} RELEASE ue={ue.id}")
        ues.append(
            UERunData(
                ue_id=ue.id,
                iq=y,
                kpis=kpis,
                mobility_times=times,
                mobility_positions=positions,
                events=events,
            )
        )

    manifest = {
        "format_version": MANIFEST_FORMAT_VERSION,
        "kind": "nextsense-run",
        "name": spec.name,
        "seed": spec.seed,
        "created_utc": created,
        "finished_utc": _utcnow(),
        "spec": scn.spec_to_doc(spec),
        "grid": {
            "num_subcarriers": dims.num_subcarriers,
            "num_symbols": dims.num_symbols,
            "num_snapshots": dims.num_snapshots,
            "subcarrier_spacing_khz": dims.subcarrier_spacing_khz,
        },
        "iq_format": {
            "dtype": "float32",
            "byte_order": "little",
            "interleave": "iq",
            "order": ["snapshot", "symbol", "subcarrier"],
        },
        "kpi_formulas": dict(KPI_FORMULAS),
        "ues": [
            {
                "id": ud.ue_id,
                "iq_sha256": hashlib.sha256(iq_to_bytes(ud.iq)).hexdigest(),
                "num_snapshots": int(ud.iq.shape[2]),
            }
            for ud in ues
        ],
    }
    digest = hashlib.sha256()
    for ud in ues:
        digest.update(iq_to_bytes(ud.iq))
    manifest["iq_sha256_concat"] = digest.hexdigest()
    return RunDataset(manifest=manifest, ues=ues)


# ----------------------------------------------------------------------------
# Dataset serialization
#
# Layout: manifest.json; per UE u: ue<u>/iq.bin, ue<u>/kpis.csv,
# ue<u>/mobility.csv, ue<u>/events.log. iq.bin is little-endian float32,
# I then Q interleaved, snapshot-major then symbol then subcarrier.
# ----------------------------------------------------------------------------

_KPI_PHY_COLUMNS = ["rsrp_dbm", "rsrq_db", "snr_db", "timing_advance_s"]
_KPI_MAC_COLUMNS = ["throughput_kbps", "dl_mcs"]
_KPI_MAC_RESERVED = ["dl_bler", "dl_rounds"]  # emitted empty: no decoder in the loop


def iq_to_bytes(iq: np.ndarray) -> bytes:
    """Serialize a (K, S, N) complex tensor to the interchange byte layout."""
    k, s, n = iq.shape
    out = np.empty((n, s, k, 2), dtype="<f4")
    t = np.transpose(iq, (2, 1, 0))
    out[..., 0] = t.real
    out[..., 1] = t.imag
    return out.tobytes()


def iq_from_bytes(data: bytes, num_subcarriers: int, num_symbols: int) -> np.ndarray:
    per_snapshot = num_symbols * num_subcarriers * 8  # float32 I+Q
    if len(data) == 0 or len(data) % per_snapshot != 0:
        raise IntegrityError(
            f"iq payload of {len(data)} bytes is not a whole number of "
            f"{num_subcarriers}x{num_symbols} snapshots"
        )
    n = len(data) // per_snapshot
    arr = np.frombuffer(data, dtype="<f4").reshape(n, num_symbols, num_subcarriers, 2)
    return np.transpose(arr[..., 0] + 1j * arr[..., 1], (2, 1, 0)).astype(complex)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)  # shortest round-trip form
    return str(value)


def _kpi_columns(verbosity: dict) -> list[str]:
    cols = ["n", "time_s"]
    if verbosity.get("phy", "full") != "off":
        cols += _KPI_PHY_COLUMNS
    if verbosity.get("mac", "full") != "off":
        cols += _KPI_MAC_COLUMNS
        if verbosity.get("mac") == "full":
            cols += _KPI_MAC_RESERVED
    return cols


def write_dataset(ds: RunDataset, out_dir: str | Path) -> str:
    """Write the run to disk; returns the combined IQ digest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    verbosity = ds.manifest.get("spec", {}).get("log_verbosity", {})
    try:
        (out / "manifest.json").write_text(
            json.dumps(ds.manifest, sort_keys=True, indent=2) + "\n"
        )
        for u_idx, ud in enumerate(ds.ues):
            udir = out / f"ue{u_idx}"
            udir.mkdir(exist_ok=True)
            (udir / "iq.bin").write_bytes(iq_to_bytes(ud.iq))
            cols = _kpi_columns(verbosity)
            with open(udir / "kpis.csv", "w", newline="") as f:
                w = csv.writer(f)
                w.writerow(cols)
                for rec in ud.kpis:
                    row = {
                        "n": rec.index,
                        "time_s": _fmt(rec.time_s),
                        "rsrp_dbm": _fmt(rec.rsrp_dbm),
                        "rsrq_db": _fmt(rec.rsrq_db),
                        "snr_db": _fmt(rec.snr_db),
                        "timing_advance_s": _fmt(rec.timing_advance_s),
                        "throughput_kbps": _fmt(rec.throughput_kbps),
                        "dl_mcs": _fmt(rec.dl_mcs),
                        "dl_bler": "",
                        "dl_rounds": "",
                    }
                    w.writerow([row[c] for c in cols])
            with open(udir / "mobility.csv", "w", newline="") as f:
                w = csv.writer(f)
                w.writerow(["time_s", "x", "y", "z"])
                for t, p in zip(ud.mobility_times, ud.mobility_positions):
                    w.writerow([_fmt(float(t))] + [_fmt(float(c)) for c in p])
            (udir / "events.log").write_text("\n".join(ud.events) + "\n")
    except OSError as e:
        raise OSError(f"failed writing dataset under {out}: {e}") from e
    return ds.manifest["iq_sha256_concat"]


def read_dataset(in_dir: str | Path) -> RunDataset:
    """Exact inverse of write_dataset for binary payloads; verifies digests."""
    root = Path(in_dir)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise FileNotFoundError(f"{manifest_path}: missing manifest")
    manifest = json.loads(manifest_path.read_text())
    grid = manifest["grid"]
    k, s = grid["num_subcarriers"], grid["num_symbols"]
    expected_n = grid["num_snapshots"]

    ues = []
    combined = hashlib.sha256()
    for u_idx, ue_entry in enumerate(manifest["ues"]):
        udir = root / f"ue{u_idx}"
        iq_path = udir / "iq.bin"
        data = iq_path.read_bytes()
        if len(data) != expected_n * s * k * 8:
            raise IntegrityError(
                f"{iq_path}: expected {expected_n * s * k * 8} bytes, found {len(data)}"
            )
        digest = hashlib.sha256(data).hexdigest()
        if digest != ue_entry["iq_sha256"]:
            raise IntegrityError(f"{iq_path}: sha256 mismatch against manifest")
        combined.update(data)
        iq = iq_from_bytes(data, k, s)

        kpis = []
        with open(udir / "kpis.csv", newline="") as f:
            for row in csv.DictReader(f):
                kpis.append(
                    SnapshotRecord(
                        index=int(row["n"]),
                        time_s=float(row["time_s"]),
                        position=(math.nan, math.nan, math.nan),
                        rsrp_dbm=_parse(row.get("rsrp_dbm")),
                        rsrq_db=_parse(row.get("rsrq_db")),
                        snr_db=_parse(row.get("snr_db")),
                        timing_advance_s=_parse(row.get("timing_advance_s")),
                        throughput_kbps=_parse(row.get("throughput_kbps")),
                        dl_mcs=_parse_int(row.get("dl_mcs")),
                    )
                )
        times, positions = [], []
        with open(udir / "mobility.csv", newline="") as f:
            for row in csv.DictReader(f):
                times.append(float(row["time_s"]))
                positions.append([float(row["x"]), float(row["y"]), float(row["z"])])
        # Backfill KPI positions from the mobility trace.
        kpis = [
            SnapshotRecord(
                index=r.index,
                time_s=r.time_s,
                position=tuple(positions[i]),
                rsrp_dbm=r.rsrp_dbm,
                rsrq_db=r.rsrq_db,
                snr_db=r.snr_db,
                timing_advance_s=r.timing_advance_s,
                throughput_kbps=r.throughput_kbps,
                dl_mcs=r.dl_mcs,
            )
            for i, r in enumerate(kpis)
        ]
        events = (udir / "events.log").read_text().splitlines()
        ues.append(
            UERunData(
                ue_id=ue_entry["id"],
                iq=iq,
                kpis=kpis,
                mobility_times=np.array(times),
                mobility_positions=np.array(positions),
                events=events,
            )
        )
    if combined.hexdigest() != manifest["iq_sha256_concat"]:
        raise IntegrityError(f"{root}: combined iq digest mismatch against manifest")
    return RunDataset(manifest=manifest, ues=ues)


def _parse(s: str | None) -> float | None:
    return float(s) if s not in (None, "") else None


def _parse_int(s: str | None) -> int | None:
    return int(s) if s not in (None, "") else None


def replay_estimate(
    dataset_dir: str | Path,
    ue_index: int = 0,
    *,
    max_taps: int = 12,
    power_floor_db: float = -25.0,
) -> list[chan.Tap]:
    """Reconstruct a tap scenario from a recorded dataset (the capture-to-
    emulator workflow): pilot division, IDFT, PDP/Doppler, tap selection."""
    ds = read_dataset(dataset_dir)
    spec = scn.spec_from_doc(ds.manifest["spec"])
    ud = ds.ues[ue_index]
    dims = GridDims(
        num_subcarriers=ds.manifest["grid"]["num_subcarriers"],
        num_symbols=ds.manifest["grid"]["num_symbols"],
        num_snapshots=ds.manifest["grid"]["num_snapshots"],
        subcarrier_spacing_khz=ds.manifest["grid"]["subcarrier_spacing_khz"],
    )
    x = generate_reference(spec.seed, dims)
    h_hat = est.estimate_freq_channel(ud.iq, x)
    imp = est.impulse_response(h_hat)
    pdp = est.power_delay_profile(imp)
    doppler = None
    if imp.values.shape[1] >= 8:
        doppler = est.doppler_profile(imp, spec.snapshot_interval_s)
    return est.select_dominant_taps(
        pdp, doppler, max_taps=max_taps, power_floor_db=power_floor_db
    )
