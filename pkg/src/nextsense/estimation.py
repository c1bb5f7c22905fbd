"""Data-driven channel reconstruction from captured ensembles.

Pipeline: pilot division per snapshot -> delay-domain impulse response via
IDFT across subcarriers -> power delay profile and Doppler statistics ->
dominant-tap selection into an emulator scenario.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .channel import ChannelScenario, Tap
from .waveform import ReferenceSignal


@dataclass(frozen=True)
class FreqChannelEstimate:
    """Estimated response per (subcarrier, snapshot), symbol axis reduced."""

    values: np.ndarray  # (K, N) complex
    subcarrier_spacing_hz: float


@dataclass(frozen=True)
class ImpulseResponse:
    """Delay-domain estimate per (delay bin, snapshot)."""

    values: np.ndarray  # (K, N) complex
    bin_duration_s: float


@dataclass(frozen=True)
class PowerDelayProfile:
    power: np.ndarray  # (K,) linear, >= 0
    bin_duration_s: float


def estimate_freq_channel(y: np.ndarray, x: ReferenceSignal) -> FreqChannelEstimate:
    """Pilot division H(k,s,n) = Y(k,s,n)/X(k,s), averaged over symbols."""
    y = np.asarray(y)
    if y.ndim != 3 or y.shape[:2] != x.values.shape:
        raise ValueError(
            f"tensor shape {y.shape} does not match reference grid {x.values.shape}"
        )
    h = y / x.values[:, :, None]
    return FreqChannelEstimate(
        values=h.mean(axis=1), subcarrier_spacing_hz=x.dims.subcarrier_spacing_hz
    )


def impulse_response(h_hat: FreqChannelEstimate) -> ImpulseResponse:
    """Per-snapshot IDFT across subcarriers (1/K-scaled, exact DFT inverse)."""
    k = h_hat.values.shape[0]
    if k < 2:
        raise ValueError("need at least 2 subcarriers")
    values = np.fft.ifft(h_hat.values, axis=0)
    return ImpulseResponse(
        values=values, bin_duration_s=1.0 / (k * h_hat.subcarrier_spacing_hz)
    )


def power_delay_profile(h: ImpulseResponse) -> PowerDelayProfile:
    """Per-bin mean of |h|^2 over snapshots."""
    if h.values.ndim != 2 or h.values.shape[1] < 1:
        raise ValueError("need at least one snapshot")
    return PowerDelayProfile(
        power=np.mean(np.abs(h.values) ** 2, axis=1), bin_duration_s=h.bin_duration_s
    )


def rms_delay_spread(pdp: PowerDelayProfile) -> float:
    """RMS width of the profile in seconds."""
    p = pdp.power
    total = p.sum()
    if total <= 0:
        raise ValueError("all-zero power delay profile")
    tau = np.arange(p.size) * pdp.bin_duration_s
    mean = (p * tau).sum() / total
    # Central-moment form: exactly zero for a single occupied bin.
    variance = (p * (tau - mean) ** 2).sum() / total
    return float(np.sqrt(max(variance, 0.0)))


def doppler_profile(
    h: ImpulseResponse,
    snapshot_interval_s: float,
    snapshot_times: np.ndarray | None = None,
) -> np.ndarray:
    """Dominant |Doppler| per delay bin, from the DFT over snapshots.

    Resolution is 1/(N*dt). When snapshot_times is given it is checked for
    uniform spacing.
    """
    n = h.values.shape[1]
    if n < 8:
        raise ValueError("need at least 8 snapshots for a Doppler estimate")
    if snapshot_times is not None:
        dt = np.diff(np.asarray(snapshot_times, dtype=float))
        if not np.allclose(dt, dt[0], rtol=1e-9, atol=1e-12):
            raise ValueError("snapshot times are not uniformly spaced")
        snapshot_interval_s = float(dt[0])
    if snapshot_interval_s <= 0:
        raise ValueError("snapshot_interval_s must be > 0")
    spectrum = np.abs(np.fft.fft(h.values, axis=1))  # (K, N), two-sided
    freqs = np.fft.fftfreq(n, d=snapshot_interval_s)
    # argmax returns the first peak; fftfreq orders DC first, so a static bin
    # resolves to 0 Hz. Sign is folded away.
    peak = np.argmax(spectrum, axis=1)
    return np.abs(freqs[peak])


def select_dominant_taps(
    pdp: PowerDelayProfile,
    doppler_hz: np.ndarray | None = None,
    *,
    max_taps: int = 12,
    power_floor_db: float = -25.0,
) -> list[Tap]:
    """Strongest profile bins as emulator taps.

    Bins within power_floor_db of the strongest are kept (at most max_taps,
    power ties broken toward the smaller delay), then emitted in ascending
    delay order with powers in dB relative to the strongest bin.
    """
    if max_taps < 1:
        raise ValueError("max_taps must be >= 1")
    p = pdp.power
    if p.size == 0:
        raise ValueError("empty power delay profile")
    strongest = p.max()
    if strongest <= 0:
        raise ValueError("all-zero power delay profile")
    if doppler_hz is None:
        doppler_hz = np.zeros(p.size)
    order = sorted(range(p.size), key=lambda i: (-p[i], i))
    floor = strongest * 10.0 ** (power_floor_db / 10.0)
    kept = [i for i in order if p[i] >= floor][:max_taps]
    kept.sort()
    bin_ns = pdp.bin_duration_s * 1e9
    return [
        Tap(
            delay_ns=i * bin_ns,
            power_db=float(10.0 * np.log10(p[i] / strongest)),
            doppler_hz=float(doppler_hz[i]),
        )
        for i in kept
    ]


def export_scenario(taps: list[Tap], base: ChannelScenario | None = None) -> ChannelScenario:
    """Package selected taps as a power-normalized emulator scenario."""
    if not taps:
        raise ValueError("no taps to export")
    if base is None:
        return ChannelScenario(taps=tuple(taps), normalize_power=True)
    return replace(base, taps=tuple(taps), normalize_power=True)
