"""Tap-based fading channel emulation.

Multipath is a finite set of taps (delay, relative power, Doppler). Each tap
carries an independent Jakes-style sum-of-sinusoids fading stream; the
frequency response over the grid follows from the tap delays, and receiver
noise is injected per resource element. Everything is deterministic in the
scenario seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.special import j0 as _bessel_j0

from .waveform import GridDims, ReferenceSignal

SPEED_OF_LIGHT = 299_792_458.0  # m/s

# Sentinel for tap Doppler filled in by the runner from UE speed and carrier.
FROM_MOBILITY = "from-mobility"

CORRELATION_LEVELS = ("low", "medium", "high")
# One-sided spatial correlation coefficient per level (TS 36.101-style alpha).
_CORRELATION_ALPHA = {"low": 0.0, "medium": 0.3, "high": 0.9}


@dataclass(frozen=True)
class Tap:
    """One multipath component: delay (ns), relative power (dB), Doppler (Hz)."""

    delay_ns: float
    power_db: float
    doppler_hz: float | str = 0.0

    def __post_init__(self) -> None:
        if self.delay_ns < 0:
            raise ValueError(f"tap delay must be >= 0, got {self.delay_ns}")
        if isinstance(self.doppler_hz, str):
            if self.doppler_hz != FROM_MOBILITY:
                raise ValueError(f"unknown doppler sentinel {self.doppler_hz!r}")
        elif self.doppler_hz < 0:
            raise ValueError(f"tap doppler must be >= 0, got {self.doppler_hz}")

    @property
    def delay_s(self) -> float:
        return self.delay_ns * 1e-9


@dataclass(frozen=True)
class ChannelScenario:
    """Complete emulator channel description.

    noise_spectral_density_dbm_hz of None (or -inf) disables noise. The
    transmit grid is treated as the 0 dBm reference level, so the per-element
    noise variance is 10^((N0 + 10*log10(subcarrier spacing))/10).
    """

    taps: tuple[Tap, ...]
    mimo_correlation: str = "low"
    noise_spectral_density_dbm_hz: float | None = None
    path_loss_a_db: float = 0.0
    path_loss_b_db: float = 0.0
    seed: int = 0
    normalize_power: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "taps", tuple(self.taps))
        if not self.taps:
            raise ValueError("scenario needs at least one tap")
        if self.mimo_correlation not in CORRELATION_LEVELS:
            raise ValueError(f"mimo_correlation must be one of {CORRELATION_LEVELS}")
        if self.seed < 0:
            raise ValueError("scenario seed must be non-negative")

    @property
    def noise_enabled(self) -> bool:
        n0 = self.noise_spectral_density_dbm_hz
        return n0 is not None and not math.isinf(n0)

    def linear_powers(self) -> np.ndarray:
        """Per-tap linear powers; sums to 1 when normalize_power is set."""
        p = 10.0 ** (np.array([t.power_db for t in self.taps]) / 10.0)
        if self.normalize_power:
            p = p / p.sum()
        return p

    def delays_s(self) -> np.ndarray:
        return np.array([t.delay_s for t in self.taps])

    def numeric_dopplers(self) -> np.ndarray:
        """Per-tap Doppler in Hz; raises if any tap still carries the sentinel."""
        out = []
        for t in self.taps:
            if isinstance(t.doppler_hz, str):
                raise ValueError(
                    "tap Doppler is 'from-mobility'; resolve it with "
                    "resolve_mobility_doppler() before use"
                )
            out.append(float(t.doppler_hz))
        return np.array(out)


def resolve_mobility_doppler(scenario: ChannelScenario, doppler_hz: float) -> ChannelScenario:
    """Replace every 'from-mobility' tap Doppler with the given value."""
    taps = tuple(
        replace(t, doppler_hz=float(doppler_hz)) if isinstance(t.doppler_hz, str) else t
        for t in scenario.taps
    )
    return replace(scenario, taps=taps)


def mobility_doppler_hz(speed_mps: float, carrier_frequency_hz: float) -> float:
    """Maximum Doppler f_D = v * f_c / c."""
    return abs(speed_mps) * carrier_frequency_hz / SPEED_OF_LIGHT


# ----------------------------------------------------------------------------
# TDL presets
#
# 12-tap scaled TDL tables (3GPP TR 38.901 family, nominal delay spreads of
# 30/100/300 ns). Delays stored normalized by the nominal spread so an
# overridden delay_spread rescales delays while leaving powers untouched.
# ----------------------------------------------------------------------------

_TDL_TABLES_NS = {
    "tdla30": (
        30.0,
        (0.0, 10.0, 15.0, 20.0, 25.0, 50.0, 65.0, 75.0, 105.0, 135.0, 150.0, 190.0),
        (-15.5, 0.0, -5.1, -5.1, -9.6, -8.2, -13.1, -11.5, -11.0, -16.2, -16.6, -26.2),
    ),
    "tdlb100": (
        100.0,
        (0.0, 10.0, 20.0, 30.0, 35.0, 45.0, 55.0, 120.0, 170.0, 245.0, 330.0, 480.0),
        (0.0, -2.2, -0.6, -0.6, -0.3, -1.2, -5.9, -2.2, -0.8, -6.3, -7.5, -7.1),
    ),
    "tdlc300": (
        300.0,
        (0.0, 65.0, 70.0, 190.0, 195.0, 200.0, 240.0, 325.0, 520.0, 1045.0, 1510.0, 2595.0),
        (-6.9, 0.0, -7.7, -2.5, -2.4, -9.9, -8.0, -6.6, -7.1, -13.0, -14.2, -16.0),
    ),
}

TDL_PRESET_NAMES = tuple(_TDL_TABLES_NS) + ("custom",)


def load_tdl_preset(
    name: str,
    delay_spread_ns: float | None = None,
    *,
    doppler_hz: float | str = 0.0,
    custom_taps: list[tuple[float, float]] | None = None,
) -> list[Tap]:
    """Standard tap table scaled to the requested delay spread.

    Named presets default to the spread encoded in the name (30/100/300 ns).
    For "custom" the caller supplies (normalized_delay, power_db) rows and a
    delay spread to scale them by. doppler_hz is applied to every tap.
    """
    key = name.lower()
    if key == "custom":
        if custom_taps is None:
            raise ValueError("custom preset requires a normalized tap table")
        if delay_spread_ns is None:
            raise ValueError("custom preset requires delay_spread_ns")
        if delay_spread_ns <= 0:
            raise ValueError("delay_spread_ns must be > 0")
        return [
            Tap(delay_ns=float(d) * delay_spread_ns, power_db=float(p), doppler_hz=doppler_hz)
            for d, p in custom_taps
        ]
    if key not in _TDL_TABLES_NS:
        raise ValueError(f"unknown TDL preset {name!r}; known: {TDL_PRESET_NAMES}")
    nominal_ns, delays_ns, powers_db = _TDL_TABLES_NS[key]
    if delay_spread_ns is None:
        delay_spread_ns = nominal_ns
    if delay_spread_ns <= 0:
        raise ValueError("delay_spread_ns must be > 0")
    scale = delay_spread_ns / nominal_ns
    return [
        Tap(delay_ns=d * scale, power_db=p, doppler_hz=doppler_hz)
        for d, p in zip(delays_ns, powers_db)
    ]


def port_correlation_matrix(level: str, num_ports: int) -> np.ndarray:
    """Spatial correlation matrix R[i,j] = alpha^((i-j)/(P-1))^2 for the level."""
    if level not in CORRELATION_LEVELS:
        raise ValueError(f"unknown correlation level {level!r}")
    if num_ports < 1:
        raise ValueError("num_ports must be >= 1")
    alpha = _CORRELATION_ALPHA[level]
    if num_ports == 1:
        return np.ones((1, 1))
    idx = np.arange(num_ports)
    expo = ((idx[:, None] - idx[None, :]) / (num_ports - 1)) ** 2
    if alpha == 0.0:
        return np.eye(num_ports)
    return alpha**expo


class FadingProcess:
    """Per-tap Jakes sum-of-sinusoids gain generator.

    Each fading tap sums num_sinusoids equally spaced arrival angles (with a
    seeded random rotation) and seeded random phases, giving unit mean power
    and the classical J0(2*pi*f_D*tau) autocorrelation. Taps with Doppler 0
    are static with gain exactly 1. With num_ports > 1, independent per-port
    streams are colored with the scenario's correlation matrix.

    Gains are a pure function of (scenario, time); a process instance belongs
    to a single run and should be asked for snapshot gains in time order.
    """

    def __init__(self, scenario: ChannelScenario, num_sinusoids: int = 32, num_ports: int = 1):
        if num_sinusoids < 8:
            raise ValueError("num_sinusoids must be >= 8")
        self.scenario = scenario
        self.num_sinusoids = num_sinusoids
        self.num_ports = num_ports
        self._dopplers = scenario.numeric_dopplers()
        n_taps = len(scenario.taps)
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=scenario.seed, spawn_key=(0,))
        )
        # Angle offsets and sinusoid phases, drawn per port and tap.
        self._theta = rng.uniform(0.0, 2.0 * np.pi, size=(num_ports, n_taps))
        self._phases = rng.uniform(0.0, 2.0 * np.pi, size=(num_ports, n_taps, num_sinusoids))
        self._mix = None
        if num_ports > 1:
            r = port_correlation_matrix(scenario.mimo_correlation, num_ports)
            self._mix = np.linalg.cholesky(r)

    def gains_at(self, times_s: np.ndarray) -> np.ndarray:
        """Complex gains, shape (num_taps, T), or (num_ports, num_taps, T)."""
        t = np.atleast_1d(np.asarray(times_s, dtype=float))
        p, l, n = self.num_ports, len(self.scenario.taps), self.num_sinusoids
        out = np.empty((p, l, t.size), dtype=complex)
        i = np.arange(n)
        for pi in range(p):
            for li in range(l):
                fd = self._dopplers[li]
                if fd == 0.0:
                    out[pi, li] = 1.0
                    continue
                angles = self._theta[pi, li] + 2.0 * np.pi * i / n
                omega = 2.0 * np.pi * fd * np.cos(angles)  # rad/s per sinusoid
                phase = omega[:, None] * t[None, :] + self._phases[pi, li][:, None]
                out[pi, li] = np.exp(1j * phase).sum(axis=0) / math.sqrt(n)
        if self._mix is not None:
            out = np.einsum("pq,qlt->plt", self._mix, out)
        if self.num_ports == 1:
            return out[0]
        return out


def _steering(scenario: ChannelScenario, dims: GridDims) -> np.ndarray:
    """Per-tap subcarrier phase ramps exp(-2j*pi*k*df*tau), shape (L, K)."""
    k = np.arange(dims.num_subcarriers)
    tau = scenario.delays_s()
    return np.exp(-2j * np.pi * np.outer(tau * dims.subcarrier_spacing_hz, k))


def frequency_response(
    scenario: ChannelScenario, fading_gains: np.ndarray, dims: GridDims
) -> np.ndarray:
    """H(k) = sum_l g_l * sqrt(P_l) * exp(-2j*pi*k*df*tau_l), shape (K,)."""
    g = np.asarray(fading_gains)
    if g.shape != (len(scenario.taps),):
        raise ValueError(f"expected {len(scenario.taps)} fading gains, got shape {g.shape}")
    amp = np.sqrt(scenario.linear_powers())
    return (g * amp) @ _steering(scenario, dims)


def response_matrix(
    scenario: ChannelScenario,
    snapshot_times: np.ndarray,
    dims: GridDims,
    num_sinusoids: int = 32,
) -> np.ndarray:
    """Frequency response per snapshot, shape (T, K). Deterministic in seed."""
    times = _check_times(snapshot_times)
    gains = FadingProcess(scenario, num_sinusoids=num_sinusoids).gains_at(times)  # (L, T)
    amp = np.sqrt(scenario.linear_powers())
    return (gains.T * amp) @ _steering(scenario, dims)


def _check_times(snapshot_times) -> np.ndarray:
    times = np.atleast_1d(np.asarray(snapshot_times, dtype=float))
    if times.size == 0:
        raise ValueError("snapshot_times is empty")
    if times.size > 1 and not np.all(np.diff(times) > 0):
        raise ValueError("snapshot_times must be strictly increasing")
    return times


def noise_variance(scenario: ChannelScenario, dims: GridDims) -> float:
    """Per-resource-element complex noise variance, 0 dBm grid reference."""
    if not scenario.noise_enabled:
        return 0.0
    n0 = scenario.noise_spectral_density_dbm_hz
    return 10.0 ** ((n0 + 10.0 * math.log10(dims.subcarrier_spacing_hz)) / 10.0)


def apply_channel(
    x: ReferenceSignal,
    scenario: ChannelScenario,
    snapshot_times: np.ndarray,
    *,
    num_sinusoids: int = 32,
    return_response: bool = False,
):
    """Pass the reference grid through the channel: Y = H_n(k) X(k,s) + w.

    Fading advances with snapshot time per tap Doppler; noise is circular
    complex Gaussian per resource element. Fully deterministic in
    scenario.seed. Returns the (K, S, T) tensor, plus the (T, K) response
    matrix when return_response is set.
    """
    times = _check_times(snapshot_times)
    dims = x.dims
    h = response_matrix(scenario, times, dims, num_sinusoids=num_sinusoids)  # (T, K)
    y = x.values[:, :, None] * h.T[:, None, :]  # (K, S, T)
    sigma2 = noise_variance(scenario, dims)
    if sigma2 > 0.0:
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=scenario.seed, spawn_key=(1,))
        )
        scale = math.sqrt(sigma2 / 2.0)
        w = rng.normal(scale=scale, size=(*y.shape, 2))
        y = y + w[..., 0] + 1j * w[..., 1]
    if return_response:
        return y, h
    return y


def path_loss_db(a_db: float, b_db_per_decade: float, distance_m: float) -> float:
    """PL = A + B*log10(d), d in meters."""
    if distance_m <= 0:
        raise ValueError(f"distance must be > 0, got {distance_m}")
    return a_db + b_db_per_decade * math.log10(distance_m)


def fading_autocorrelation_oracle(doppler_hz: float, lag_s: float) -> float:
    """Classical Doppler autocorrelation J0(2*pi*f_D*tau)."""
    if doppler_hz < 0:
        raise ValueError("doppler must be >= 0")
    return float(_bessel_j0(2.0 * np.pi * doppler_hz * lag_s))


# ----------------------------------------------------------------------------
# Tap-file import/export: one tap per line, "delay_ns power_db doppler_hz",
# '#' comment lines ignored. The interchange path for externally designed
# channels.
# ----------------------------------------------------------------------------


def write_tap_file(path: str | Path, taps: list[Tap] | tuple[Tap, ...]) -> None:
    lines = ["# delay_ns power_db doppler_hz"]
    for t in taps:
        if isinstance(t.doppler_hz, str):
            raise ValueError("tap files carry literal Doppler values only")
        lines.append(f"{t.delay_ns!r} {t.power_db!r} {t.doppler_hz!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_tap_file(path: str | Path) -> list[Tap]:
    taps = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 3:
            raise ValueError(f"{path}:{lineno}: expected 3 fields, got {len(fields)}")
        try:
            delay, power, doppler = (float(f) for f in fields)
        except ValueError as e:
            raise ValueError(f"{path}:{lineno}: {e}") from None
        taps.append(Tap(delay_ns=delay, power_db=power, doppler_hz=doppler))
    if not taps:
        raise ValueError(f"{path}: no taps found")
    return taps
