"""Signal loading, windowing and a seeded synthetic bearing-vibration generator."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

KINDS = ("healthy", "inner_race", "outer_race")
SPEED_PROFILES = ("constant", "decreasing")

# shaft rate used for the inner-race amplitude modulation (BPFI ~ 5.4 x shaft for common geometries)
BPFI_TO_SHAFT = 5.4
# a decreasing-speed record ends at this fraction of its starting impulse rate
DECREASING_END_FRACTION = 0.6


@dataclass(frozen=True)
class Signal:
    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=float)
        if x.ndim != 1 or x.size == 0:
            raise ValueError("signal must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(x)):
            raise ValueError("signal contains non-finite samples")
        if not self.sample_rate > 0:
            raise ValueError(f"sample_rate must be > 0, got {self.sample_rate}")
        object.__setattr__(self, "samples", x)

    def __len__(self):
        return self.samples.size


@dataclass(frozen=True)
class SignalWindow:
    samples: np.ndarray
    label: Optional[int] = None
    source_offset: int = 0

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=float)
        if x.ndim != 1 or x.size < 2:
            raise ValueError("window needs at least 2 samples")
        if not np.all(np.isfinite(x)):
            raise ValueError("window contains non-finite samples")
        if self.label is not None and int(self.label) < 1:
            raise ValueError("class labels are integers >= 1")
        object.__setattr__(self, "samples", x)


@dataclass
class ClassSpec:
    label: int
    kind: str = "healthy"
    impulse_rate: float = 100.0
    resonance: float = 3000.0
    decay: float = 800.0
    snr_db: float = 0.0
    speed_profile: str = "constant"


@dataclass
class SynthSpec:
    classes: list[ClassSpec] = field(default_factory=list)
    duration_s: float = 6.144
    sample_rate: float = 20000.0
    windows_per_class: int = 60

    def validate(self):
        if not self.classes:
            raise ValueError("synth spec needs at least one class")
        if self.sample_rate <= 0 or self.duration_s <= 0:
            raise ValueError("sample_rate and duration_s must be positive")
        if self.windows_per_class < 1:
            raise ValueError("windows_per_class must be >= 1")
        if self.window_len < 2:
            raise ValueError("duration too short for the requested windows_per_class")
        nyq = self.sample_rate / 2
        labels = [c.label for c in self.classes]
        if len(set(labels)) != len(labels):
            raise ValueError(f"class labels must be distinct, got {labels}")
        for c in self.classes:
            if c.label < 1:
                raise ValueError("class labels are integers >= 1")
            if c.kind not in KINDS:
                raise ValueError(f"unknown class kind {c.kind!r}; expected one of {KINDS}")
            if c.speed_profile not in SPEED_PROFILES:
                raise ValueError(f"unknown speed profile {c.speed_profile!r}")
            if not 0 < c.impulse_rate < nyq:
                raise ValueError(f"class {c.label}: impulse_rate must be in (0, {nyq})")
            if not 0 < c.resonance < nyq:
                raise ValueError(f"class {c.label}: resonance must be in (0, {nyq})")
            if c.decay <= 0:
                raise ValueError(f"class {c.label}: decay must be positive")
            if not np.isfinite(c.snr_db):
                raise ValueError(f"class {c.label}: snr_db must be finite")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_s * self.sample_rate))

    @property
    def window_len(self) -> int:
        return self.n_samples // self.windows_per_class


def default_synth_spec() -> SynthSpec:
    """Three classes labelled like the Ottawa data: healthy=1, inner race=2, outer race=3."""
    return SynthSpec(classes=[
        ClassSpec(1, "healthy", speed_profile="decreasing"),
        ClassSpec(2, "inner_race", impulse_rate=162.0, resonance=3500.0, decay=900.0,
                  snr_db=0.0, speed_profile="decreasing"),
        ClassSpec(3, "outer_race", impulse_rate=104.0, resonance=2500.0, decay=700.0,
                  snr_db=0.0, speed_profile="decreasing"),
    ])


_SPLIT = re.compile(r"[,\s;]+")


def load_signal(path, channel_index: int = 0, sample_rate: float = 1.0) -> Signal:
    """Read one column of a delimited text file (comma/semicolon/whitespace; optional header)."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"signal file not found: {path}")
    if channel_index < 0:
        raise ValueError("channel_index must be >= 0")
    values = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = [c for c in _SPLIT.split(line) if c]
            if channel_index >= len(cells):
                raise ValueError(f"{path}:{lineno}: no column {channel_index} (row has {len(cells)})")
            try:
                values.append(float(cells[channel_index]))
            except ValueError:
                if lineno == 1 and not values and _is_header(cells):
                    continue
                raise ValueError(
                    f"{path}:{lineno}: non-numeric cell {cells[channel_index]!r} in column {channel_index}"
                ) from None
    if not values:
        raise ValueError(f"{path}: column {channel_index} is empty")
    return Signal(np.array(values), sample_rate)


def _is_header(cells):
    for c in cells:
        try:
            float(c)
            return False
        except ValueError:
            pass
    return True


def save_signal(path, signal: Signal):
    np.savetxt(path, signal.samples, fmt="%.17g")


def segment(signal: Signal, window_len: int = 2048, hop: int = 2048,
            label: Optional[int] = None) -> list[SignalWindow]:
    n = len(signal)
    if window_len < 2:
        raise ValueError("window_len must be >= 2")
    if hop < 1:
        raise ValueError("hop must be >= 1")
    if window_len > n:
        raise ValueError(f"window_len {window_len} exceeds signal length {n}")
    count = (n - window_len) // hop + 1
    x = signal.samples
    return [SignalWindow(x[i * hop:i * hop + window_len].copy(), label, i * hop) for i in range(count)]


def _impulse_times(c: ClassSpec, duration: float, rng: np.random.Generator) -> np.ndarray:
    # instantaneous rate, integrated to a phase; an impulse fires each time the phase crosses an integer
    if c.speed_profile == "constant":
        rate0, rate1 = c.impulse_rate, c.impulse_rate
    else:
        rate0, rate1 = c.impulse_rate, c.impulse_rate * DECREASING_END_FRACTION
    slope = (rate1 - rate0) / duration
    total = rate0 * duration + 0.5 * slope * duration ** 2
    k = np.arange(np.ceil(total) + 1) + rng.uniform(0, 1)
    k = k[k < total]
    if slope == 0:
        t = k / rate0
    else:
        t = (-rate0 + np.sqrt(rate0 ** 2 + 2 * slope * k)) / slope
    # small slip jitter (1% of a period), as in real rolling-element bearings
    period = 1.0 / (rate0 + slope * t)
    return t + rng.normal(0, 0.01, t.size) * period


def synth_signal(c: ClassSpec, n: int, fs: float, rng: np.random.Generator) -> np.ndarray:
    noise = rng.standard_normal(n)
    if c.kind == "healthy":
        return noise
    duration = n / fs
    times = _impulse_times(c, duration, rng)
    ring_len = min(n, int(np.ceil(8.0 / c.decay * fs)) + 1)
    tr = np.arange(ring_len) / fs
    ring = np.exp(-c.decay * tr) * np.sin(2 * np.pi * c.resonance * tr)
    train = np.zeros(n)
    idx = np.clip(np.round(times * fs).astype(int), 0, n - 1)
    amps = 1.0 + 0.1 * rng.standard_normal(idx.size)
    if c.kind == "inner_race":
        shaft = c.impulse_rate / BPFI_TO_SHAFT
        amps = amps * (1.0 + 0.8 * np.cos(2 * np.pi * shaft * times))
    np.add.at(train, idx, amps)
    x = np.convolve(train, ring)[:n]
    rms = np.sqrt(np.mean(x ** 2))
    if rms > 0:
        x = x / rms
    return x + noise * 10 ** (-c.snr_db / 20)


def synth_signals(spec: SynthSpec, seed: int = 0) -> list[tuple[int, Signal]]:
    """One continuous record per class; children of a single SeedSequence keep classes independent."""
    spec.validate()
    children = np.random.SeedSequence(seed).spawn(len(spec.classes))
    out = []
    for c, ss in zip(spec.classes, children):
        x = synth_signal(c, spec.n_samples, spec.sample_rate, np.random.default_rng(ss))
        out.append((c.label, Signal(x, spec.sample_rate)))
    return out


def synth_dataset(spec: SynthSpec, seed: int = 0) -> list[SignalWindow]:
    windows = []
    wl = spec.window_len
    for label, sig in synth_signals(spec, seed):
        windows.extend(segment(sig, wl, wl, label=label)[:spec.windows_per_class])
    return windows
