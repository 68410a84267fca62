"""One-sided FFT magnitude spectrum and a multilevel orthogonal DWT (pyramid algorithm)."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np

MODES = ("symmetric", "periodization")


@dataclass(frozen=True)
class Spectrum:
    magnitudes: np.ndarray
    bin_hz: float


def fft_magnitude(window, sample_rate: float = 1.0) -> Spectrum:
    """|X[k]| for k = 0..N//2, no normalisation."""
    x = np.asarray(window, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("fft_magnitude needs a 1-D window of length >= 2")
    if not np.all(np.isfinite(x)):
        raise ValueError("fft_magnitude: non-finite input")
    return Spectrum(np.abs(np.fft.rfft(x)), sample_rate / x.size)


@lru_cache(maxsize=None)
def _table():
    text = resources.files("vibfault").joinpath("daubechies.json").read_text()
    return {k: tuple(v) for k, v in json.loads(text).items()}


def wavelet_families():
    return sorted(_table(), key=lambda s: int(s[2:]))


@dataclass(frozen=True)
class WaveletParams:
    family: str = "db10"
    levels: int = 4
    mode: str = "symmetric"
    dilation_base: int = field(default=2, init=False)

    def __post_init__(self):
        if self.family not in _table():
            raise ValueError(f"unknown wavelet {self.family!r}; available: db1..db20")
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"unknown extension mode {self.mode!r}")

    @property
    def rec_lo(self) -> np.ndarray:
        return np.array(_table()[self.family])

    @property
    def filter_coeffs(self):
        """(dec_lo, dec_hi, rec_lo, rec_hi) of the orthogonal quadrature-mirror pair."""
        rec_lo = self.rec_lo
        dec_lo = rec_lo[::-1].copy()
        rec_hi = dec_lo * (-1.0) ** np.arange(dec_lo.size)
        dec_hi = rec_hi[::-1].copy()
        return dec_lo, dec_hi, rec_lo, rec_hi

    @property
    def filter_length(self) -> int:
        return len(_table()[self.family])

    def max_level(self, n: int) -> int:
        return int(np.floor(np.log2(n / self.filter_length))) if n >= self.filter_length else 0


@dataclass(frozen=True)
class Subbands:
    approximation: np.ndarray
    details: list  # coarsest first: D_L, ..., D_1
    input_lengths: tuple  # length of the signal entering each level, level 1 first

    @property
    def levels(self) -> int:
        return len(self.details)

    def as_list(self):
        """[A_L, D_L, ..., D_1]"""
        return [self.approximation, *self.details]


def _analysis(x, dec_lo, dec_hi, mode):
    f = dec_lo.size
    n = x.size
    if mode == "periodization":
        if n % 2:
            raise ValueError("periodization needs an even length at every level")
        # o[m] = sum_j h[j] x[(2m + 1 - j) mod n]
        idx = (2 * np.arange(n // 2)[:, None] + 1 - np.arange(f)[None, :]) % n
        xs = x[idx]
        return xs @ dec_lo, xs @ dec_hi
    xe = np.pad(x, f - 1, mode="symmetric")
    m = (n + f - 1) // 2
    lo = np.convolve(xe, dec_lo)[f:f + 2 * m:2]
    hi = np.convolve(xe, dec_hi)[f:f + 2 * m:2]
    return lo, hi


def _synthesis(a, d, rec_lo, rec_hi, n, mode):
    f = rec_lo.size
    if mode == "periodization":
        dec_lo, dec_hi = rec_lo[::-1], rec_hi[::-1]
        idx = (2 * np.arange(n // 2)[:, None] + 1 - np.arange(f)[None, :]) % n
        out = np.zeros(n)
        np.add.at(out, idx, a[:, None] * dec_lo[None, :] + d[:, None] * dec_hi[None, :])
        return out
    u_a = np.zeros(2 * a.size + 1)
    u_d = np.zeros(2 * d.size + 1)
    u_a[1::2] = a
    u_d[1::2] = d
    y = np.convolve(u_a, rec_lo) + np.convolve(u_d, rec_hi)
    return y[f - 1:f - 1 + n]


def _coeff_len(n, f, mode):
    return n // 2 if mode == "periodization" else (n + f - 1) // 2


def dwt_decompose(window, params: WaveletParams = WaveletParams()) -> Subbands:
    x = np.asarray(window, dtype=float)
    if x.ndim != 1:
        raise ValueError("dwt_decompose expects a 1-D window")
    if not np.all(np.isfinite(x)):
        raise ValueError("dwt_decompose: non-finite input")
    if params.levels > params.max_level(x.size):
        raise ValueError(
            f"{x.size} samples support at most {params.max_level(x.size)} levels of "
            f"{params.family}, {params.levels} requested"
        )
    dec_lo, dec_hi, _, _ = params.filter_coeffs
    details, lengths = [], []
    a = x
    for _ in range(params.levels):
        lengths.append(a.size)
        a, d = _analysis(a, dec_lo, dec_hi, params.mode)
        details.append(d)
    return Subbands(a, details[::-1], tuple(lengths))


def dwt_reconstruct(subbands: Subbands, params: WaveletParams = WaveletParams()) -> np.ndarray:
    if subbands.levels != params.levels or len(subbands.input_lengths) != params.levels:
        raise ValueError(f"subbands carry {subbands.levels} levels, params expect {params.levels}")
    _, _, rec_lo, rec_hi = params.filter_coeffs
    f = rec_lo.size
    a = np.asarray(subbands.approximation, dtype=float)
    for d, n in zip(subbands.details, reversed(subbands.input_lengths)):
        d = np.asarray(d, dtype=float)
        expect = _coeff_len(n, f, params.mode)
        if a.size != expect or d.size != expect:
            raise ValueError(f"inconsistent subband lengths: got {a.size}/{d.size}, expected {expect}")
        a = _synthesis(a, d, rec_lo, rec_hi, n, params.mode)
    return a
