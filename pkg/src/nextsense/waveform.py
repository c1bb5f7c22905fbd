"""Resource grid geometry and the deterministic pilot grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

VALID_SUBCARRIER_SPACINGS_KHZ = (15.0, 30.0, 60.0, 120.0)

# Unit-modulus QPSK alphabet. The axis-aligned rotation keeps both |x| and
# |x|^2 exactly 1.0 in binary floating point, and makes pilot division by
# X(k,s) lossless downstream.
QPSK_POINTS = np.array([1.0 + 0.0j, 0.0 + 1.0j, -1.0 + 0.0j, 0.0 - 1.0j])


@dataclass(frozen=True)
class GridDims:
    """Capture block geometry: subcarriers x symbols x snapshots."""

    num_subcarriers: int = 360
    num_symbols: int = 4
    num_snapshots: int = 100
    subcarrier_spacing_khz: float = 30.0

    def __post_init__(self) -> None:
        if min(self.num_subcarriers, self.num_symbols, self.num_snapshots) < 1:
            raise ValueError("grid counts must all be >= 1")
        if self.subcarrier_spacing_khz not in VALID_SUBCARRIER_SPACINGS_KHZ:
            raise ValueError(
                f"subcarrier_spacing_khz must be one of {VALID_SUBCARRIER_SPACINGS_KHZ}, "
                f"got {self.subcarrier_spacing_khz}"
            )

    @property
    def subcarrier_spacing_hz(self) -> float:
        return self.subcarrier_spacing_khz * 1e3

    @property
    def bin_duration_s(self) -> float:
        """Delay resolution of the K-point IDFT across subcarriers."""
        return 1.0 / (self.num_subcarriers * self.subcarrier_spacing_hz)


@dataclass(frozen=True)
class ReferenceSignal:
    """Known transmitted pilot grid, shape (num_subcarriers, num_symbols)."""

    values: np.ndarray
    seed: int
    dims: GridDims


def generate_reference(seed: int, dims: GridDims) -> ReferenceSignal:
    """Deterministic unit-modulus QPSK pilot grid.

    Pure function of (seed, dims); the snapshot count has no effect since the
    transmitted block is identical in every snapshot. Philox is counter-based,
    so regeneration is bit-identical for a given seed.
    """
    if seed < 0:
        raise ValueError("seed must be non-negative")
    rng = np.random.Generator(np.random.Philox(seed))
    idx = rng.integers(0, 4, size=(dims.num_subcarriers, dims.num_symbols))
    values = QPSK_POINTS[idx]
    values.setflags(write=False)
    return ReferenceSignal(values=values, seed=seed, dims=dims)


def grid_power(tensor: np.ndarray) -> float:
    """Mean of |x|^2 over every element of the tensor."""
    t = np.asarray(tensor)
    if t.size == 0:
        raise ValueError("empty tensor")
    return float(np.mean(np.abs(t) ** 2))
