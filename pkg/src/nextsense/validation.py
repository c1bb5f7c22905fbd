"""Statistical comparison of captured ensembles.

Two-sample tests (KS, Wasserstein) and variance on power-normalized magnitude
samples, temporal auto/cross-correlation, waterfall export, and a seeded
linear classifier harness for transfer experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .waveform import grid_power

WATERFALL_FLOOR_DB = -120.0


@dataclass
class EnsembleStats:
    var_a: float
    var_b: float
    ks_d: float
    ks_p: float
    wasserstein: float
    autocorr_a: np.ndarray
    autocorr_b: np.ndarray
    crosscorr: np.ndarray
    phase_edges: np.ndarray = field(default_factory=lambda: np.array([]))
    phase_hist_a: np.ndarray = field(default_factory=lambda: np.array([]))
    phase_hist_b: np.ndarray = field(default_factory=lambda: np.array([]))

    def to_doc(self) -> dict:
        return {
            "format_version": 1,
            "kind": "nextsense-ensemble-stats",
            "var_a": self.var_a,
            "var_b": self.var_b,
            "ks_d": self.ks_d,
            "ks_p": self.ks_p,
            "wasserstein": self.wasserstein,
            "autocorr_a": list(map(float, self.autocorr_a)),
            "autocorr_b": list(map(float, self.autocorr_b)),
            "crosscorr": list(map(float, self.crosscorr)),
            "phase_edges": list(map(float, self.phase_edges)),
            "phase_hist_a": list(map(float, self.phase_hist_a)),
            "phase_hist_b": list(map(float, self.phase_hist_b)),
        }


def power_normalize(t: np.ndarray) -> np.ndarray:
    """Scale so the mean of |x|^2 is 1."""
    p = grid_power(t)
    if p <= 0:
        raise ValueError("zero-power tensor cannot be normalized")
    return np.asarray(t) / math.sqrt(p)


def magnitude_variance(t: np.ndarray) -> float:
    """Population variance of |x| over all elements."""
    t = np.asarray(t)
    if t.size == 0:
        raise ValueError("empty tensor")
    return float(np.var(np.abs(t)))


def ks_two_sample(a, b) -> tuple[float, float]:
    """Two-sample KS statistic and asymptotic p-value.

    D is the supremum ECDF difference; p uses the Kolmogorov series with the
    small-sample correction lambda = (sqrt(n_e) + 0.12 + 0.11/sqrt(n_e)) * D,
    n_e = n_a*n_b/(n_a+n_b).
    """
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample")
    everything = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, everything, side="right") / a.size
    cdf_b = np.searchsorted(b, everything, side="right") / b.size
    d = float(np.max(np.abs(cdf_a - cdf_b)))
    n_e = a.size * b.size / (a.size + b.size)
    lam = (math.sqrt(n_e) + 0.12 + 0.11 / math.sqrt(n_e)) * d
    return d, _kolmogorov_sf(lam)


def _kolmogorov_sf(lam: float) -> float:
    """2 * sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lam^2), clamped to [0, 1]."""
    if lam <= 1e-3:
        return 1.0
    total = 0.0
    for k in range(1, 2001):
        term = math.exp(-2.0 * k * k * lam * lam)
        total += term if k % 2 == 1 else -term
        if term < 1e-17:
            break
    return min(max(2.0 * total, 0.0), 1.0)


def wasserstein_1d(a, b) -> float:
    """W1 between empirical distributions: integral of |ECDF_a - ECDF_b|."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample")
    if a.size == b.size:
        return float(np.mean(np.abs(a - b)))
    support = np.sort(np.concatenate([a, b]))
    deltas = np.diff(support)
    cdf_a = np.searchsorted(a, support[:-1], side="right") / a.size
    cdf_b = np.searchsorted(b, support[:-1], side="right") / b.size
    return float(np.sum(np.abs(cdf_a - cdf_b) * deltas))


def _per_cell_energy(t: np.ndarray) -> np.ndarray:
    return np.sum(np.abs(t) ** 2, axis=2)


def temporal_autocorrelation(t: np.ndarray, max_lag: int) -> np.ndarray:
    """Normalized correlation over the snapshot axis, averaged over (k, s).

    Per-lag unbiased normalization (overlap length times mean power), so a
    constant-over-snapshots tensor reads exactly 1 at every lag. Cells with
    zero energy are excluded from the average.
    """
    t = np.asarray(t)
    n = t.shape[2]
    if n < max_lag + 1:
        raise ValueError(f"need at least {max_lag + 1} snapshots, have {n}")
    mean_power = _per_cell_energy(t) / n
    mask = mean_power > 0
    if not mask.any():
        raise ValueError("all-zero tensor")
    out = np.empty(max_lag + 1)
    for m in range(max_lag + 1):
        num = np.sum(np.conj(t[:, :, : n - m]) * t[:, :, m:], axis=2).real
        out[m] = np.mean(num[mask] / ((n - m) * mean_power[mask]))
    return out


def cross_correlation(a: np.ndarray, b: np.ndarray, max_lag: int) -> np.ndarray:
    """Same estimator across a pair, normalized by the geometric mean power."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    n = a.shape[2]
    if n < max_lag + 1:
        raise ValueError(f"need at least {max_lag + 1} snapshots, have {n}")
    denom = np.sqrt(_per_cell_energy(a) * _per_cell_energy(b)) / n
    mask = denom > 0
    if not mask.any():
        raise ValueError("all-zero tensor")
    out = np.empty(max_lag + 1)
    for m in range(max_lag + 1):
        num = np.sum(np.conj(a[:, :, : n - m]) * b[:, :, m:], axis=2).real
        out[m] = np.mean(num[mask] / ((n - m) * denom[mask]))
    return out


def waterfall(t: np.ndarray) -> np.ndarray:
    """Per (subcarrier, snapshot) power in dB (symbol-averaged), floored."""
    t = np.asarray(t)
    if t.size == 0:
        raise ValueError("empty tensor")
    p = np.mean(np.abs(t) ** 2, axis=1)  # (K, N)
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(p)
    return np.maximum(db, WATERFALL_FLOOR_DB)


def ensemble_report(a: np.ndarray, b: np.ndarray, max_lag: int | None = None) -> EnsembleStats:
    """All comparison metrics between two ensembles (power-normalized first)."""
    a = power_normalize(a)
    b = power_normalize(b)
    if max_lag is None:
        max_lag = min(a.shape[2] - 1, b.shape[2] - 1, 50)
    mag_a = np.abs(a).ravel()
    mag_b = np.abs(b).ravel()
    d, p = ks_two_sample(mag_a, mag_b)
    edges = np.linspace(-np.pi, np.pi, 65)
    hist_a, _ = np.histogram(np.angle(a).ravel(), bins=edges, density=True)
    hist_b, _ = np.histogram(np.angle(b).ravel(), bins=edges, density=True)
    crosscorr = (
        cross_correlation(a, b, max_lag)
        if a.shape == b.shape
        else np.array([])
    )
    return EnsembleStats(
        var_a=magnitude_variance(a),
        var_b=magnitude_variance(b),
        ks_d=d,
        ks_p=p,
        wasserstein=wasserstein_1d(mag_a, mag_b),
        autocorr_a=temporal_autocorrelation(a, max_lag),
        autocorr_b=temporal_autocorrelation(b, max_lag),
        crosscorr=crosscorr,
        phase_edges=edges,
        phase_hist_a=hist_a,
        phase_hist_b=hist_b,
    )


# ----------------------------------------------------------------------------
# Transfer-proxy classifier: per-subcarrier mean magnitude features, linear
# maximum-margin separator trained by seeded Pegasos-style hinge-loss SGD.
# ----------------------------------------------------------------------------


def tensor_features(t: np.ndarray) -> np.ndarray:
    """Per-subcarrier mean magnitude of a power-normalized tensor, shape (K,)."""
    return np.mean(np.abs(power_normalize(t)), axis=(1, 2))


def _pegasos(x: np.ndarray, y: np.ndarray, *, lam: float, iters: int, seed: int):
    rng = np.random.default_rng(seed)
    w = np.zeros(x.shape[1])
    bias = 0.0
    for t in range(1, iters + 1):
        i = rng.integers(0, x.shape[0])
        eta = 1.0 / (lam * t)
        margin = y[i] * (x[i] @ w + bias)
        w *= 1.0 - eta * lam
        if margin < 1.0:
            w += eta * y[i] * x[i]
            bias += eta * y[i]
    return w, bias


def train_eval_classifier(
    class_a: list[np.ndarray],
    class_b: list[np.ndarray],
    split: float = 0.8,
    *,
    seed: int = 0,
    lam: float = 1e-3,
    iters: int = 20000,
) -> float:
    """Held-out accuracy of the linear separator between two tensor classes."""
    if len(class_a) < 10 or len(class_b) < 10:
        raise ValueError("need at least 10 tensors per class")
    if not 0.0 < split < 1.0:
        raise ValueError("split must be in (0, 1)")
    feats = np.array([tensor_features(t) for t in class_a + class_b])
    labels = np.array([1.0] * len(class_a) + [-1.0] * len(class_b))
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(labels))
    feats, labels = feats[order], labels[order]
    n_train = int(round(split * len(labels)))
    n_train = min(max(n_train, 1), len(labels) - 1)
    x_tr, y_tr = feats[:n_train], labels[:n_train]
    x_te, y_te = feats[n_train:], labels[n_train:]
    mean = x_tr.mean(axis=0)
    std = np.maximum(x_tr.std(axis=0), 1e-12)
    x_tr = (x_tr - mean) / std
    x_te = (x_te - mean) / std
    w, bias = _pegasos(x_tr, y_tr, lam=lam, iters=iters, seed=seed + 1)
    pred = np.where(x_te @ w + bias >= 0, 1.0, -1.0)
    return float(np.mean(pred == y_te))


# ----------------------------------------------------------------------------
# Report serialization helpers (stats.json + CSV matrices for plotting)
# ----------------------------------------------------------------------------


def waterfall_csv(t: np.ndarray) -> str:
    """Waterfall matrix as CSV: one row per subcarrier, one column per snapshot."""
    m = waterfall(t)
    header = "subcarrier," + ",".join(f"n{j}" for j in range(m.shape[1]))
    lines = [header]
    for k in range(m.shape[0]):
        lines.append(f"{k}," + ",".join(f"{v:.3f}" for v in m[k]))
    return "\n".join(lines) + "\n"


def magnitude_cdf_csv(a: np.ndarray, b: np.ndarray, points: int = 512) -> str:
    """Magnitude CDF curves of both ensembles on a shared quantile grid."""
    mag_a = np.sort(np.abs(power_normalize(a)).ravel())
    mag_b = np.sort(np.abs(power_normalize(b)).ravel())
    q = np.linspace(0.0, 1.0, points)
    qa = np.quantile(mag_a, q)
    qb = np.quantile(mag_b, q)
    lines = ["quantile,magnitude_a,magnitude_b"]
    for qi, va, vb in zip(q, qa, qb):
        lines.append(f"{qi:.6f},{va!r},{vb!r}")
    return "\n".join(lines) + "\n"
