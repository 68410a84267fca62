"""INI-style run configuration (``key = value`` under sections) and its dataclass form."""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .classify import METHODS, PipelineStages, SelectionConfig
from .evaluation import ROBUSTNESS_METHODS, default_ratio_grid, default_threshold_grid
from .ingest import ClassSpec, SynthSpec, default_synth_spec
from .selection import NORMALIZER_MODES
from .transforms import WaveletParams


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    source: str = "synth"  # "synth" or "files"
    manifest: Optional[str] = None  # CSV with path,label[,channel] rows
    sample_rate: float = 20000.0
    channel: int = 0
    synth: SynthSpec = field(default_factory=default_synth_spec)
    window_len: int = 2048
    hop: int = 2048
    wavelet: WaveletParams = field(default_factory=WaveletParams)
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    k: int = 2
    baseline_k: int = 1
    folds: int = 5
    seed: int = 0
    trials: int = 30
    noise_ratios: list = field(default_factory=default_ratio_grid)
    robustness_methods: list = field(default_factory=lambda: list(ROBUSTNESS_METHODS))
    thresholds: list = field(default_factory=default_threshold_grid)

    @property
    def stages(self) -> PipelineStages:
        return PipelineStages(self.selection, self.k)

    def validate(self):
        if self.source not in ("synth", "files"):
            raise ConfigError(f"data.source must be 'synth' or 'files', got {self.source!r}")
        if self.source == "files" and not self.manifest:
            raise ConfigError("data.source = files needs data.manifest")
        if self.window_len < 2 or self.hop < 1:
            raise ConfigError("features.window_len must be >= 2 and features.hop >= 1")
        max_lv = self.wavelet.max_level(self.window_len)
        if self.wavelet.levels > max_lv:
            raise ConfigError(
                f"window_len {self.window_len} supports at most {max_lv} levels of {self.wavelet.family}")
        s = self.selection
        if not 0 <= s.threshold <= 1:
            raise ConfigError("selection.threshold must be in [0, 1]")
        if s.smoothing_window < 1 or s.smoothing_window % 2 == 0:
            raise ConfigError("selection.smoothing_window must be an odd integer >= 1")
        if s.normalizer_mode not in NORMALIZER_MODES:
            raise ConfigError(f"selection.normalizer_mode must be one of {NORMALIZER_MODES}")
        if self.k < 1 or self.baseline_k < 1:
            raise ConfigError("classifier.k must be >= 1")
        if self.folds < 2:
            raise ConfigError("cv.folds must be >= 2")
        if self.trials < 1:
            raise ConfigError("robustness.trials must be >= 1")
        if any(not 0 <= r <= 1 for r in self.noise_ratios):
            raise ConfigError("robustness.ratios must lie in [0, 1]")
        bad = set(self.robustness_methods) - set(ROBUSTNESS_METHODS)
        if bad:
            raise ConfigError(f"robustness.methods: unknown {sorted(bad)}")
        ts = self.thresholds
        if any(b < a for a, b in zip(ts, ts[1:])) or any(not 0 <= t <= 1 for t in ts):
            raise ConfigError("sweep.thresholds must be ascending within [0, 1]")
        if self.source == "synth":
            try:
                self.synth.validate()
            except ValueError as e:
                raise ConfigError(f"synth: {e}") from None
        return self


def parse_grid(text: str) -> list:
    """'a:step:b' (inclusive) or a comma list."""
    text = text.strip()
    if ":" in text:
        a, step, b = (float(v) for v in text.split(":"))
        if step <= 0:
            raise ConfigError(f"grid step must be positive: {text!r}")
        n = int(round((b - a) / step))
        digits = max(len(p.split(".")[1]) if "." in p else 0 for p in text.split(":"))
        return [round(a + i * step, digits) for i in range(n + 1)]
    return [float(v) for v in text.split(",") if v.strip()]


def _fmt(v):
    return repr(v) if isinstance(v, float) else str(v)


def load_config(path) -> PipelineConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser()
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from None
    cfg = from_parser(cp)
    if cfg.manifest and not Path(cfg.manifest).is_absolute():
        cfg.manifest = str((path.parent / cfg.manifest).resolve())
    return cfg


def loads_config(text: str) -> PipelineConfig:
    cp = configparser.ConfigParser()
    cp.read_string(text)
    return from_parser(cp)


def from_parser(cp: configparser.ConfigParser) -> PipelineConfig:
    cfg = PipelineConfig()
    try:
        if cp.has_section("data"):
            d = cp["data"]
            cfg.source = d.get("source", cfg.source)
            cfg.manifest = d.get("manifest", cfg.manifest)
            cfg.sample_rate = d.getfloat("sample_rate", cfg.sample_rate)
            cfg.channel = d.getint("channel", cfg.channel)
        if cp.has_section("synth"):
            s = cp["synth"]
            cfg.synth.duration_s = s.getfloat("duration_s", cfg.synth.duration_s)
            cfg.synth.sample_rate = s.getfloat("sample_rate", cfg.synth.sample_rate)
            cfg.synth.windows_per_class = s.getint("windows_per_class", cfg.synth.windows_per_class)
        class_sections = [n for n in cp.sections() if n.startswith("synth.class.")]
        if class_sections:
            classes = []
            for name in class_sections:
                c = cp[name]
                base = ClassSpec(int(name.rsplit(".", 1)[1]))
                classes.append(ClassSpec(
                    label=base.label,
                    kind=c.get("kind", base.kind),
                    impulse_rate=c.getfloat("impulse_rate", base.impulse_rate),
                    resonance=c.getfloat("resonance", base.resonance),
                    decay=c.getfloat("decay", base.decay),
                    snr_db=c.getfloat("snr_db", base.snr_db),
                    speed_profile=c.get("speed_profile", base.speed_profile),
                ))
            cfg.synth.classes = sorted(classes, key=lambda c: c.label)
        if cp.has_section("features"):
            f = cp["features"]
            cfg.window_len = f.getint("window_len", cfg.window_len)
            cfg.hop = f.getint("hop", cfg.hop)
            cfg.wavelet = WaveletParams(f.get("wavelet", cfg.wavelet.family),
                                        f.getint("levels", cfg.wavelet.levels),
                                        f.get("mode", cfg.wavelet.mode))
        if cp.has_section("selection"):
            s = cp["selection"]
            d = s.get("d", "").strip()
            cfg.selection = SelectionConfig(
                method=s.get("method", cfg.selection.method),
                threshold=s.getfloat("threshold", cfg.selection.threshold),
                smoothing_window=s.getint("smoothing_window", cfg.selection.smoothing_window),
                normalizer_mode=s.get("normalizer_mode", cfg.selection.normalizer_mode),
                d=int(d) if d and d.lower() != "none" else None,
            )
        if cp.has_section("classifier"):
            c = cp["classifier"]
            cfg.k = c.getint("k", cfg.k)
            cfg.baseline_k = c.getint("baseline_k", cfg.baseline_k)
        if cp.has_section("cv"):
            c = cp["cv"]
            cfg.folds = c.getint("folds", cfg.folds)
            cfg.seed = c.getint("seed", cfg.seed)
        if cp.has_section("robustness"):
            r = cp["robustness"]
            cfg.trials = r.getint("trials", cfg.trials)
            if "ratios" in r:
                cfg.noise_ratios = parse_grid(r["ratios"])
            if "methods" in r:
                cfg.robustness_methods = [m.strip() for m in r["methods"].split(",") if m.strip()]
        if cp.has_section("sweep") and "thresholds" in cp["sweep"]:
            cfg.thresholds = parse_grid(cp["sweep"]["thresholds"])
    except (ValueError, KeyError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e)) from None
    if cfg.selection.method not in METHODS:
        raise ConfigError(f"selection.method must be one of {METHODS}")
    return cfg.validate()


def dumps_config(cfg: PipelineConfig) -> str:
    """Inverse of loads_config: every field written out explicitly."""
    cp = configparser.ConfigParser()
    cp["data"] = {"source": cfg.source, "sample_rate": _fmt(cfg.sample_rate), "channel": str(cfg.channel)}
    if cfg.manifest:
        cp["data"]["manifest"] = cfg.manifest
    cp["synth"] = {"duration_s": _fmt(cfg.synth.duration_s), "sample_rate": _fmt(cfg.synth.sample_rate),
                   "windows_per_class": str(cfg.synth.windows_per_class)}
    for c in cfg.synth.classes:
        cp[f"synth.class.{c.label}"] = {
            "kind": c.kind, "impulse_rate": _fmt(c.impulse_rate), "resonance": _fmt(c.resonance),
            "decay": _fmt(c.decay), "snr_db": _fmt(c.snr_db), "speed_profile": c.speed_profile,
        }
    cp["features"] = {"window_len": str(cfg.window_len), "hop": str(cfg.hop), "wavelet": cfg.wavelet.family,
                      "levels": str(cfg.wavelet.levels), "mode": cfg.wavelet.mode}
    s = cfg.selection
    cp["selection"] = {"method": s.method, "threshold": _fmt(s.threshold),
                       "smoothing_window": str(s.smoothing_window), "normalizer_mode": s.normalizer_mode,
                       "d": "none" if s.d is None else str(s.d)}
    cp["classifier"] = {"k": str(cfg.k), "baseline_k": str(cfg.baseline_k)}
    cp["cv"] = {"folds": str(cfg.folds), "seed": str(cfg.seed)}
    cp["robustness"] = {"trials": str(cfg.trials), "ratios": ",".join(_fmt(r) for r in cfg.noise_ratios),
                        "methods": ",".join(cfg.robustness_methods)}
    cp["sweep"] = {"thresholds": ",".join(_fmt(t) for t in cfg.thresholds)}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
