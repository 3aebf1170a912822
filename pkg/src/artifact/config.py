"""INI-style run configuration with sections [model], [sweep], [simulation], [output]."""

from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .spectral_model import SpectralModel, isotropic, load_spectrum, make_power_law


@dataclass
class ModelConfig:
    kind: str = "rfm"
    spectrum: str = "powerlaw"  # powerlaw | isotropic | file
    alpha: float = 1.5
    r: float = 0.4
    noise_var: float = 0.0
    rank: int | None = None  # isotropic rank (random features); linear uses dim
    target_norm_sq: float = 1.0
    spectrum_file: str | None = None
    tail_tol: float = 1e-8


@dataclass
class SweepConfig:
    n: list[int] = field(default_factory=lambda: [100])
    axis: str = "gamma"  # gamma | lambda
    values: list[float] | None = None
    start: float | None = None
    stop: float | None = None
    num: int | None = None
    scale: str = "linear"  # linear | log
    lam: float = 1e-3
    gamma: float | None = None
    samples: list[tuple[float, float]] | None = None  # (q, ell) pairs for scaling


@dataclass
class SimulationConfig:
    enabled: bool = False
    trials: int = 20
    seed: int = 0
    truncation: int | None = None
    workers: int = 1


@dataclass
class OutputConfig:
    format: str = "csv"
    path: str | None = None


@dataclass
class Config:
    model: ModelConfig = field(default_factory=ModelConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def grid(self) -> list[float]:
        s = self.sweep
        if s.values is not None:
            return list(s.values)
        if s.start is None and s.stop is None and s.num is None:
            return []
        if None in (s.start, s.stop, s.num):
            raise ConfigError("[sweep] needs either values or all of start, stop, num")
        if s.scale == "log":
            if s.start <= 0 or s.stop <= 0:
                raise ConfigError("log-scaled grids need positive start and stop")
            return [float(v) for v in np.geomspace(s.start, s.stop, s.num)]
        return [float(v) for v in np.linspace(s.start, s.stop, s.num)]

    def build_model(self, dim: int | None = None) -> SpectralModel:
        """The configured spectrum; linear power laws are truncated per sweep point later.

        A linear isotropic spectrum takes its rank from ``dim`` when given.
        """
        m = self.model
        try:
            if m.spectrum == "powerlaw":
                return make_power_law(m.alpha, m.r, m.noise_var, m.tail_tol, kind=m.kind)
            if m.spectrum == "file":
                return load_spectrum(m.spectrum_file, kind=m.kind, noise_var=m.noise_var)
            if m.spectrum == "isotropic":
                rank = dim if m.kind == "linear" and dim is not None else m.rank
                if rank is None:
                    raise ConfigError("isotropic spectra need [model] rank")
                return isotropic(rank, m.target_norm_sq, m.noise_var, kind=m.kind)
        except OSError as exc:
            raise ConfigError(f"cannot read spectrum file: {exc}") from exc
        raise ConfigError(f"unknown spectrum {m.spectrum!r}")


_SECTIONS = {"model": ModelConfig, "sweep": SweepConfig,
             "simulation": SimulationConfig, "output": OutputConfig}
_KEY_ALIASES = {"lambda": "lam"}
_LIST_KEYS = ("n", "values", "samples")
_CHOICES = {
    ("model", "kind"): ("linear", "rfm"),
    ("model", "spectrum"): ("powerlaw", "isotropic", "file"),
    ("sweep", "axis"): ("gamma", "lambda"),
    ("sweep", "scale"): ("linear", "log"),
    ("output", "format"): ("csv", "json"),
}


def _parse_value(section: str, key: str, raw: str):
    raw = raw.strip()
    if raw.lower() == "none":
        return None
    if not raw:
        return [] if key in _LIST_KEYS else None
    try:
        if key in ("kind", "spectrum", "spectrum_file", "axis", "scale", "format", "path"):
            choices = _CHOICES.get((section, key))
            if choices and raw not in choices:
                raise ConfigError(f"[{section}] {key} must be one of {choices}, got {raw!r}")
            return raw
        if key == "enabled":
            if raw.lower() in ("true", "yes", "on", "1"):
                return True
            if raw.lower() in ("false", "no", "off", "0"):
                return False
            raise ConfigError(f"[{section}] enabled must be a boolean, got {raw!r}")
        if key == "n":
            return [int(v) for v in raw.split(",") if v.strip()]
        if key == "values":
            return [float(v) for v in raw.split(",") if v.strip()]
        if key == "samples":
            pairs = []
            for item in raw.split(";"):
                if item.strip():
                    q, ell = item.split(":")
                    pairs.append((float(q), float(ell)))
            return pairs
        if key in ("rank", "num", "trials", "seed", "truncation", "workers"):
            return int(raw)
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from exc


def _format_value(key: str, value) -> str:
    if value is None:
        return "none"
    if key == "n":
        return ", ".join(str(v) for v in value)
    if key == "values":
        return ", ".join(repr(float(v)) for v in value)
    if key == "samples":
        return "; ".join(f"{q!r}:{ell!r}" for q, ell in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_config(text: str) -> Config:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    unknown = set(parser.sections()) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    parts = {}
    for name, cls in _SECTIONS.items():
        defaults = {f.name: f.default for f in fields(cls)}
        kwargs = {}
        if parser.has_section(name):
            for key, raw in parser.items(name):
                attr = _KEY_ALIASES.get(key, key)
                if attr not in defaults:
                    raise ConfigError(f"[{name}] unknown key {key!r}")
                value = _parse_value(name, attr, raw)
                if value is None and defaults[attr] is not None:
                    raise ConfigError(f"[{name}] {key} needs a value")
                kwargs[attr] = value
        parts[name] = cls(**kwargs)
    cfg = Config(**parts)
    _validate(cfg)
    return cfg


def _validate(cfg: Config) -> None:
    if not cfg.sweep.n or any(v < 1 for v in cfg.sweep.n):
        raise ConfigError("[sweep] n must list positive integers")
    if cfg.simulation.trials < 1:
        raise ConfigError("[simulation] trials must be at least 1")
    if cfg.simulation.workers < 1:
        raise ConfigError("[simulation] workers must be at least 1")
    if cfg.sweep.lam is not None and cfg.sweep.lam < 0:
        raise ConfigError("[sweep] lambda must be non-negative")
    if cfg.model.noise_var < 0:
        raise ConfigError("[model] noise_var must be non-negative")
    if cfg.model.spectrum == "file" and not cfg.model.spectrum_file:
        raise ConfigError("[model] spectrum = file needs spectrum_file")


def load_config(path) -> Config:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def dump_config(cfg: Config) -> str:
    out = []
    for name in _SECTIONS:
        out.append(f"[{name}]")
        for key, value in asdict(getattr(cfg, name)).items():
            label = "lambda" if key == "lam" else key
            out.append(f"{label} = {_format_value(key, value)}")
        out.append("")
    return "\n".join(out)

