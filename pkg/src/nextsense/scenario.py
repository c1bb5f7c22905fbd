"""Experiment input space: radio/UE/traffic configuration, validation, mobility."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import channel as chan
from .waveform import VALID_SUBCARRIER_SPACINGS_KHZ

FORMAT_VERSION = 1

MOBILITY_LOGICS = ("static", "linear_bounce", "waypoint")
TRAFFIC_PROFILES = ("none", "periodic_ssb_only", "cbr")
LOG_LAYERS = ("phy", "mac", "rrc", "nas")
LOG_LEVELS = ("off", "summary", "full")
ANTENNA_TYPES = ("isotropic", "sector")

Vec3 = tuple[float, float, float]


def _vec3(v) -> Vec3:
    x, y, z = (float(c) for c in v)
    return (x, y, z)


@dataclass(frozen=True)
class Box:
    """Axis-aligned box, lo <= hi per axis."""

    lo: Vec3
    hi: Vec3

    def __post_init__(self) -> None:
        object.__setattr__(self, "lo", _vec3(self.lo))
        object.__setattr__(self, "hi", _vec3(self.hi))

    def contains(self, p, tol: float = 1e-9) -> bool:
        return all(lo - tol <= c <= hi + tol for c, lo, hi in zip(p, self.lo, self.hi))


@dataclass(frozen=True)
class Waypoints:
    points: tuple[Vec3, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", tuple(_vec3(p) for p in self.points))


@dataclass(frozen=True)
class Cbr:
    rate_kbps: float


@dataclass(frozen=True)
class RadioConfig:
    """Cell and gNB parameters. Range checks live in validate_spec."""

    num_cells: int = 1
    carrier_frequency_mhz: float = 3500.0
    bandwidth_mhz: float = 20.0
    subcarrier_spacing_khz: float = 30.0
    tx_power_dbm: float = 0.0
    num_dl_antennas: int = 1
    num_ul_antennas: int = 1
    max_mcs: int = 28
    rx_tx_latency_slots: int = 0
    antenna_position: Vec3 = (0.0, 0.0, 10.0)
    antenna_type: str = "isotropic"

    def __post_init__(self) -> None:
        object.__setattr__(self, "antenna_position", _vec3(self.antenna_position))

    @property
    def carrier_frequency_hz(self) -> float:
        return self.carrier_frequency_mhz * 1e6


@dataclass(frozen=True)
class UESpec:
    """One emulated UE: placement, motion, traffic, and channel binding.

    channel may be a TDL preset name, a ChannelScenario, or the raw JSON dict
    form of one (resolved after validation).
    """

    id: str
    initial_position: Vec3 = (0.0, 0.0, 1.5)
    speed_mps: float = 0.0
    direction_deg: float = 0.0
    elevation_deg: float = 0.0
    mobility_area: Box = Box((-50.0, -50.0, 0.0), (50.0, 50.0, 3.0))
    mobility_logic: str | Waypoints = "static"
    traffic_profile: str | Cbr = "periodic_ssb_only"
    channel: str | dict | chan.ChannelScenario = "tdla30"

    def __post_init__(self) -> None:
        object.__setattr__(self, "initial_position", _vec3(self.initial_position))


@dataclass(frozen=True)
class CaptureConfig:
    """Dimensions of the per-snapshot reference capture block."""

    num_subcarriers: int = 360
    num_symbols: int = 4


def default_log_verbosity() -> dict[str, str]:
    return {"phy": "full", "mac": "full", "rrc": "summary", "nas": "summary"}


@dataclass(frozen=True)
class ExperimentSpec:
    name: str = "experiment"
    radio: RadioConfig = field(default_factory=RadioConfig)
    ues: tuple[UESpec, ...] = (UESpec(id="ue0"),)
    duration_s: float = 1.0
    snapshot_interval_s: float = 0.01
    log_verbosity: dict[str, str] = field(default_factory=default_log_verbosity)
    seed: int = 0
    capture: CaptureConfig = field(default_factory=CaptureConfig)

    def __post_init__(self) -> None:
        object.__setattr__(self, "ues", tuple(self.ues))
        lv = dict(default_log_verbosity())
        lv.update(self.log_verbosity)
        object.__setattr__(self, "log_verbosity", lv)

    @property
    def num_snapshots(self) -> int:
        return max(1, math.ceil(self.duration_s / self.snapshot_interval_s - 1e-9))


@dataclass(frozen=True)
class Violation:
    field: str
    reason: str

    def __str__(self) -> str:
        return f"{self.field}: {self.reason}"


def validate_spec(spec: ExperimentSpec) -> list[Violation]:
    """Check every invariant; returns one Violation per failure (empty = valid)."""
    v: list[Violation] = []

    r = spec.radio
    if r.num_cells < 1:
        v.append(Violation("radio.num_cells", "must be >= 1"))
    if r.carrier_frequency_mhz <= 0:
        v.append(Violation("radio.carrier_frequency_mhz", "must be > 0"))
    if not 0 < r.bandwidth_mhz <= 100:
        v.append(Violation("radio.bandwidth_mhz", "must be in (0, 100] MHz"))
    if r.subcarrier_spacing_khz not in VALID_SUBCARRIER_SPACINGS_KHZ:
        v.append(
            Violation(
                "radio.subcarrier_spacing",
                f"must be one of {VALID_SUBCARRIER_SPACINGS_KHZ} kHz, got {r.subcarrier_spacing_khz}",
            )
        )
    if not -40 <= r.tx_power_dbm <= 50:
        v.append(Violation("radio.tx_power_dbm", "must be in [-40, 50] dBm"))
    if r.num_dl_antennas < 1 or r.num_ul_antennas < 1:
        v.append(Violation("radio.num_antennas", "antenna counts must be >= 1"))
    if not 0 <= r.max_mcs <= 28:
        v.append(Violation("radio.max_mcs", "must be in [0, 28]"))
    if r.rx_tx_latency_slots < 0:
        v.append(Violation("radio.rx_tx_latency_slots", "must be >= 0"))
    if r.antenna_type not in ANTENNA_TYPES:
        v.append(Violation("radio.antenna_type", f"must be one of {ANTENNA_TYPES}"))

    if spec.capture.num_subcarriers < 2:
        v.append(Violation("capture.num_subcarriers", "must be >= 2"))
    if spec.capture.num_symbols < 1:
        v.append(Violation("capture.num_symbols", "must be >= 1"))

    if spec.duration_s <= 0:
        v.append(Violation("duration_s", "must be > 0"))
    if spec.snapshot_interval_s <= 0:
        v.append(Violation("snapshot_interval_s", "must be > 0"))
    if spec.duration_s > 0 and spec.snapshot_interval_s > 0:
        if spec.duration_s / spec.snapshot_interval_s < 1 - 1e-9:
            v.append(Violation("snapshot_interval_s", "duration/snapshot_interval must be >= 1"))
    if spec.seed < 0:
        v.append(Violation("seed", "must be non-negative"))

    for layer, level in spec.log_verbosity.items():
        if layer not in LOG_LAYERS or level not in LOG_LEVELS:
            v.append(Violation(f"log_verbosity.{layer}", f"unknown layer or level {level!r}"))

    if not spec.ues:
        v.append(Violation("ues", "at least one UE required"))
    seen_ids: set[str] = set()
    for i, ue in enumerate(spec.ues):
        prefix = f"ues[{ue.id or i}]"
        if not ue.id:
            v.append(Violation(prefix + ".id", "must be non-empty"))
        elif ue.id in seen_ids:
            v.append(Violation(prefix + ".id", "duplicate UE id"))
        seen_ids.add(ue.id)
        area = ue.mobility_area
        if any(lo > hi for lo, hi in zip(area.lo, area.hi)):
            v.append(Violation(prefix + ".mobility_area", "lo must be <= hi per axis"))
        if not area.contains(ue.initial_position):
            v.append(Violation(prefix + ".initial_position", "outside mobility_area"))
        if ue.speed_mps < 0:
            v.append(Violation(prefix + ".speed_mps", "must be >= 0"))
        logic = ue.mobility_logic
        if isinstance(logic, str):
            if logic not in ("static", "linear_bounce"):
                v.append(Violation(prefix + ".mobility_logic", f"unknown logic {logic!r}"))
            elif logic == "static" and ue.speed_mps != 0:
                v.append(Violation(prefix + ".speed_mps", "static mobility requires speed 0"))
            elif logic == "linear_bounce" and ue.speed_mps > 0:
                vel = velocity_vector(ue.speed_mps, ue.direction_deg, ue.elevation_deg)
                for axis, (lo, hi) in enumerate(zip(area.lo, area.hi)):
                    if abs(vel[axis]) > 1e-12 and hi - lo <= 0:
                        v.append(
                            Violation(
                                prefix + ".mobility_area",
                                f"zero extent on axis {axis} with nonzero velocity",
                            )
                        )
        elif isinstance(logic, Waypoints):
            if not logic.points:
                v.append(Violation(prefix + ".mobility_logic", "waypoint list is empty"))
            for j, p in enumerate(logic.points):
                if not area.contains(p):
                    v.append(
                        Violation(prefix + f".mobility_logic.points[{j}]", "outside mobility_area")
                    )
        else:
            v.append(Violation(prefix + ".mobility_logic", "unrecognized logic"))
        traffic = ue.traffic_profile
        if isinstance(traffic, Cbr):
            if traffic.rate_kbps <= 0:
                v.append(Violation(prefix + ".traffic_profile.rate_kbps", "must be > 0"))
        elif traffic not in ("none", "periodic_ssb_only"):
            v.append(Violation(prefix + ".traffic_profile", f"unknown profile {traffic!r}"))
        try:
            resolve_channel_scenario(ue.channel, fallback_seed=0)
        except (ValueError, TypeError, KeyError, OSError) as e:
            v.append(Violation(prefix + ".channel", str(e)))
    return v


def resolve_channel_scenario(
    value: str | dict | chan.ChannelScenario, fallback_seed: int
) -> chan.ChannelScenario:
    """Turn a UESpec channel binding into a concrete ChannelScenario.

    Preset names become normalized-power scenarios with noise disabled and no
    path loss; dict form accepts a "preset", explicit "taps", or a "tap_file"
    path in the external interchange format.
    """
    if isinstance(value, chan.ChannelScenario):
        return value
    if isinstance(value, str):
        return chan.ChannelScenario(
            taps=tuple(chan.load_tdl_preset(value)),
            seed=fallback_seed,
            normalize_power=True,
        )
    if isinstance(value, dict):
        d = dict(value)
        if "tap_file" in d:
            taps = tuple(chan.read_tap_file(d.pop("tap_file")))
        elif "taps" in d:
            taps = tuple(
                chan.Tap(
                    delay_ns=float(t["delay_ns"]),
                    power_db=float(t["power_db"]),
                    doppler_hz=t.get("doppler_hz", 0.0)
                    if isinstance(t.get("doppler_hz", 0.0), str)
                    else float(t.get("doppler_hz", 0.0)),
                )
                for t in d.pop("taps")
            )
        elif "preset" in d:
            taps = tuple(
                chan.load_tdl_preset(
                    d.pop("preset"),
                    d.pop("delay_spread_ns", None),
                    doppler_hz=d.pop("doppler_hz", 0.0),
                )
            )
        else:
            raise ValueError("channel dict needs 'taps', 'preset', or 'tap_file'")
        return chan.ChannelScenario(
            taps=taps,
            mimo_correlation=d.pop("mimo_correlation", "low"),
            noise_spectral_density_dbm_hz=d.pop("noise_spectral_density_dbm_hz", None),
            path_loss_a_db=float(d.pop("path_loss_a_db", 0.0)),
            path_loss_b_db=float(d.pop("path_loss_b_db", 0.0)),
            seed=int(d.pop("seed", fallback_seed)),
            normalize_power=bool(d.pop("normalize_power", True)),
        )
    raise TypeError(f"cannot resolve channel from {type(value).__name__}")


# ----------------------------------------------------------------------------
# Mobility engine
# ----------------------------------------------------------------------------


def velocity_vector(speed_mps: float, direction_deg: float, elevation_deg: float) -> np.ndarray:
    """speed * (cos el cos az, cos el sin az, sin el); azimuth 0 deg = +x."""
    az = math.radians(direction_deg)
    el = math.radians(elevation_deg)
    return speed_mps * np.array(
        [math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el)]
    )


@dataclass(frozen=True)
class MobilityState:
    position: np.ndarray
    velocity: np.ndarray
    waypoint_index: int = 0  # next target point (waypoint logic only)


def make_initial_state(ue: UESpec) -> MobilityState:
    pos = np.array(ue.initial_position, dtype=float)
    if isinstance(ue.mobility_logic, Waypoints):
        points = ue.mobility_logic.points
        vel = np.zeros(3)
        if points and ue.speed_mps > 0:
            d = np.array(points[0]) - pos
            n = np.linalg.norm(d)
            if n > 0:
                vel = ue.speed_mps * d / n
        return MobilityState(position=pos, velocity=vel, waypoint_index=0)
    if ue.mobility_logic == "static":
        return MobilityState(position=pos, velocity=np.zeros(3))
    return MobilityState(
        position=pos,
        velocity=velocity_vector(ue.speed_mps, ue.direction_deg, ue.elevation_deg),
    )


def _bounce_axis(p: float, v: float, lo: float, hi: float, dt: float) -> tuple[float, float]:
    """1-D specular reflection: triangle-wave fold of the unfolded motion."""
    length = hi - lo
    if length <= 0:
        return lo, -v
    s = (p - lo + v * dt) % (2.0 * length)
    if s < length:
        return lo + s, v
    return lo + 2.0 * length - s, -v


def step_mobility(
    state: MobilityState,
    logic: str | Waypoints,
    area: Box,
    dt: float,
) -> MobilityState:
    """Advance one time step; the result always lies inside the area."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if logic == "static":
        return state
    if logic == "linear_bounce":
        pos = np.empty(3)
        vel = np.empty(3)
        for axis in range(3):
            pos[axis], vel[axis] = _bounce_axis(
                state.position[axis], state.velocity[axis], area.lo[axis], area.hi[axis], dt
            )
        return MobilityState(position=pos, velocity=vel)
    if isinstance(logic, Waypoints):
        speed = float(np.linalg.norm(state.velocity))
        if speed == 0.0:
            return state
        pos = state.position.copy()
        idx = state.waypoint_index
        remaining = speed * dt
        points = logic.points
        while remaining > 0 and idx < len(points):
            target = np.array(points[idx])
            gap = float(np.linalg.norm(target - pos))
            if gap <= remaining + 1e-12:
                pos = target
                remaining -= gap
                idx += 1
            else:
                pos = pos + (target - pos) * (remaining / gap)
                remaining = 0.0
        if idx < len(points):
            d = np.array(points[idx]) - pos
            n = float(np.linalg.norm(d))
            vel = speed * d / n if n > 0 else np.zeros(3)
        else:
            vel = np.zeros(3)  # stopped at the final waypoint
        return MobilityState(position=pos, velocity=vel, waypoint_index=idx)
    raise ValueError(f"unknown mobility logic {logic!r}")


def trajectory(ue: UESpec, duration_s: float, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Timestamped positions: ceil(duration/dt)+1 samples including t=0."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    n_steps = max(1, math.ceil(duration_s / dt - 1e-9))
    times = np.arange(n_steps + 1) * dt
    positions = np.empty((n_steps + 1, 3))
    state = make_initial_state(ue)
    positions[0] = state.position
    for i in range(1, n_steps + 1):
        state = step_mobility(state, ue.mobility_logic, ue.mobility_area, dt)
        positions[i] = state.position
    return times, positions


def distance_to_antenna(position, radio: RadioConfig) -> float:
    """Euclidean distance to the antenna, floored at 0.1 m."""
    d = float(np.linalg.norm(np.asarray(position, dtype=float) - np.array(radio.antenna_position)))
    return max(d, 0.1)


# ----------------------------------------------------------------------------
# JSON document form (the generated specification of the companion UI)
# ----------------------------------------------------------------------------


def _logic_to_json(logic: str | Waypoints):
    if isinstance(logic, Waypoints):
        return {"type": "waypoint", "points": [list(p) for p in logic.points]}
    return logic


def _logic_from_json(doc) -> str | Waypoints:
    if isinstance(doc, dict):
        if doc.get("type") != "waypoint":
            raise ValueError(f"unknown mobility logic object {doc!r}")
        return Waypoints(points=tuple(tuple(p) for p in doc["points"]))
    return doc


def _traffic_to_json(traffic: str | Cbr):
    if isinstance(traffic, Cbr):
        return {"type": "cbr", "rate_kbps": traffic.rate_kbps}
    return traffic


def _traffic_from_json(doc) -> str | Cbr:
    if isinstance(doc, dict):
        if doc.get("type") != "cbr":
            raise ValueError(f"unknown traffic profile object {doc!r}")
        return Cbr(rate_kbps=float(doc["rate_kbps"]))
    return doc


def _channel_to_json(value: str | dict | chan.ChannelScenario):
    if isinstance(value, chan.ChannelScenario):
        return {
            "taps": [
                {"delay_ns": t.delay_ns, "power_db": t.power_db, "doppler_hz": t.doppler_hz}
                for t in value.taps
            ],
            "mimo_correlation": value.mimo_correlation,
            "noise_spectral_density_dbm_hz": value.noise_spectral_density_dbm_hz,
            "path_loss_a_db": value.path_loss_a_db,
            "path_loss_b_db": value.path_loss_b_db,
            "seed": value.seed,
            "normalize_power": value.normalize_power,
        }
    return value


def spec_to_doc(spec: ExperimentSpec) -> dict:
    r = spec.radio
    return {
        "format_version": FORMAT_VERSION,
        "name": spec.name,
        "seed": spec.seed,
        "duration_s": spec.duration_s,
        "snapshot_interval_s": spec.snapshot_interval_s,
        "log_verbosity": dict(spec.log_verbosity),
        "capture": {
            "num_subcarriers": spec.capture.num_subcarriers,
            "num_symbols": spec.capture.num_symbols,
        },
        "radio": {
            "num_cells": r.num_cells,
            "carrier_frequency_mhz": r.carrier_frequency_mhz,
            "bandwidth_mhz": r.bandwidth_mhz,
            "subcarrier_spacing_khz": r.subcarrier_spacing_khz,
            "tx_power_dbm": r.tx_power_dbm,
            "num_dl_antennas": r.num_dl_antennas,
            "num_ul_antennas": r.num_ul_antennas,
            "max_mcs": r.max_mcs,
            "rx_tx_latency_slots": r.rx_tx_latency_slots,
            "antenna_position": list(r.antenna_position),
            "antenna_type": r.antenna_type,
        },
        "ues": [
            {
                "id": ue.id,
                "initial_position": list(ue.initial_position),
                "speed_mps": ue.speed_mps,
                "direction_deg": ue.direction_deg,
                "elevation_deg": ue.elevation_deg,
                "mobility_area": {"lo": list(ue.mobility_area.lo), "hi": list(ue.mobility_area.hi)},
                "mobility_logic": _logic_to_json(ue.mobility_logic),
                "traffic_profile": _traffic_to_json(ue.traffic_profile),
                "channel": _channel_to_json(ue.channel),
            }
            for ue in spec.ues
        ],
    }


def spec_from_doc(doc: dict) -> ExperimentSpec:
    r = doc.get("radio", {})
    radio = RadioConfig(
        num_cells=int(r.get("num_cells", 1)),
        carrier_frequency_mhz=float(r.get("carrier_frequency_mhz", 3500.0)),
        bandwidth_mhz=float(r.get("bandwidth_mhz", 20.0)),
        subcarrier_spacing_khz=float(r.get("subcarrier_spacing_khz", 30.0)),
        tx_power_dbm=float(r.get("tx_power_dbm", 0.0)),
        num_dl_antennas=int(r.get("num_dl_antennas", 1)),
        num_ul_antennas=int(r.get("num_ul_antennas", 1)),
        max_mcs=int(r.get("max_mcs", 28)),
        rx_tx_latency_slots=int(r.get("rx_tx_latency_slots", 0)),
        antenna_position=tuple(r.get("antenna_position", (0.0, 0.0, 10.0))),
        antenna_type=r.get("antenna_type", "isotropic"),
    )
    cap = doc.get("capture", {})
    ues = []
    for u in doc.get("ues", []):
        area = u.get("mobility_area", {})
        ues.append(
            UESpec(
                id=u.get("id", ""),
                initial_position=tuple(u.get("initial_position", (0.0, 0.0, 1.5))),
                speed_mps=float(u.get("speed_mps", 0.0)),
                direction_deg=float(u.get("direction_deg", 0.0)),
                elevation_deg=float(u.get("elevation_deg", 0.0)),
                mobility_area=Box(
                    lo=tuple(area.get("lo", (-50.0, -50.0, 0.0))),
                    hi=tuple(area.get("hi", (50.0, 50.0, 3.0))),
                ),
                mobility_logic=_logic_from_json(u.get("mobility_logic", "static")),
                traffic_profile=_traffic_from_json(u.get("traffic_profile", "periodic_ssb_only")),
                channel=u.get("channel", "tdla30"),
            )
        )
    return ExperimentSpec(
        name=doc.get("name", "experiment"),
        radio=radio,
        ues=tuple(ues) if ues else (UESpec(id="ue0"),),
        duration_s=float(doc.get("duration_s", 1.0)),
        snapshot_interval_s=float(doc.get("snapshot_interval_s", 0.01)),
        log_verbosity=dict(doc.get("log_verbosity", {})),
        seed=int(doc.get("seed", 0)),
        capture=CaptureConfig(
            num_subcarriers=int(cap.get("num_subcarriers", 360)),
            num_symbols=int(cap.get("num_symbols", 4)),
        ),
    )


def spec_to_json(spec: ExperimentSpec) -> str:
    """Canonical serialization: sorted keys, 2-space indent."""
    return json.dumps(spec_to_doc(spec), sort_keys=True, indent=2) + "\n"


def spec_from_json(text: str) -> ExperimentSpec:
    return spec_from_doc(json.loads(text))
