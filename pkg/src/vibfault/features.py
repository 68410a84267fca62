"""Sixteen statistical descriptors per vector and the fused 112-feature window representation."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .transforms import WaveletParams, dwt_decompose, fft_magnitude

STAT_NAMES = (
    "mean", "max", "rms", "std", "impulse_factor", "crest_factor", "skewness", "kurtosis",
    "cm3", "cm4", "cm5", "cm6", "fm4", "variance", "shape_factor", "entropy",
)
N_STATS = len(STAT_NAMES)

# relative to the window RMS; DWT subbands of a constant window are ~1e-16 and count as degenerate
DEGENERATE_RTOL = 1e-10


def stat16(v, atol: float = 0.0) -> np.ndarray:
    """F1..F16 of a real vector.

    Skewness/kurtosis use (N-1)*std**p denominators; impulse and shape factors divide by
    mean(|v|); FM4 is the 4th central moment over the squared variance; entropy is taken
    over p_n = |v_n| / sum|v| with 0 log 0 = 0.

    A vector whose spread is zero (or whose std is <= `atol`) gets std, variance, central
    moments, crest factor, skewness, kurtosis and FM4 set to 0. If additionally
    max|v| <= `atol`, impulse factor, shape factor and entropy are 0 as well.
    """
    x = np.asarray(v, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("stat16 needs a 1-D vector with at least 2 values")
    if not np.all(np.isfinite(x)):
        raise ValueError("stat16: non-finite input")
    n = x.size
    f = np.zeros(N_STATS)
    mean = x.mean()
    ax = np.abs(x)
    peak = ax.max()
    abs_mean = ax.mean()
    rms = np.sqrt(np.mean(x * x))
    f[0] = mean
    f[1] = x.max()
    f[2] = rms

    dev = x - mean
    ss = np.sum(dev ** 2)
    std = np.sqrt(ss / (n - 1))
    all_zero = peak <= atol
    if not all_zero:
        f[4] = peak / abs_mean
        f[14] = rms / abs_mean
        p = ax / ax.sum()
        nz = p[p > 0]
        f[15] = -np.sum(nz * np.log(nz))
    if np.ptp(x) == 0 or std <= atol:
        return f

    f[3] = std
    f[5] = peak / rms
    d2 = dev * dev
    d3 = d2 * dev
    d4 = d2 * d2
    f[6] = d3.sum() / ((n - 1) * std ** 3)
    f[7] = d4.sum() / ((n - 1) * std ** 4)
    f[8] = d3.mean()
    f[9] = d4.mean()
    f[10] = (d4 * dev).mean()
    f[11] = (d4 * d2).mean()
    f[13] = std * std
    f[12] = f[9] / f[13] ** 2
    return f


def subband_names(levels: int = 4) -> list[str]:
    return [f"A{levels}"] + [f"D{k}" for k in range(levels, 0, -1)]


def feature_names(levels: int = 4) -> list[str]:
    blocks = ["time", "freq"] + [f"dwt.{b}" for b in subband_names(levels)]
    return [f"{blk}.F{i}" for blk in blocks for i in range(1, N_STATS + 1)]


def fuse(window, wavelet_params: WaveletParams = WaveletParams()) -> np.ndarray:
    """[time | |FFT| | A_L, D_L..D_1] x 16 statistics; 112 values for the default 4 levels."""
    x = np.asarray(getattr(window, "samples", window), dtype=float)
    time_block = stat16(x)
    atol = DEGENERATE_RTOL * max(time_block[2], np.finfo(float).tiny)
    blocks = [time_block, stat16(fft_magnitude(x).magnitudes, atol=atol * np.sqrt(x.size))]
    for band in dwt_decompose(x, wavelet_params).as_list():
        blocks.append(stat16(band, atol=atol))
    return np.concatenate(blocks)


def feature_matrix(windows, wavelet_params: WaveletParams = WaveletParams()):
    """Stack fused vectors; returns (X, labels) with labels taken from each window."""
    X = np.vstack([fuse(w, wavelet_params) for w in windows])
    y = np.array([w.label if w.label is not None else 0 for w in windows], dtype=int)
    return X, y


def save_feature_matrix(path, X, y, names):
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(list(names) + ["label"]) + "\n")
        for row, lab in zip(X, y):
            fh.write(",".join(repr(float(v)) for v in row) + f",{int(lab)}\n")


def load_feature_matrix(path):
    """Returns (X, y, names)."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    if not header or header[-1] != "label":
        raise ValueError(f"{path}: last header column must be 'label'")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(header):
        raise ValueError(f"{path}: {data.shape[1]} columns but {len(header)} header names")
    return data[:, :-1], data[:, -1].astype(int), header[:-1]
