"""Experiment configuration and its flat ``section.key = value`` text format.

Example::

    # Rotating hyperplane, online logistic regression
    stream.kind = hyperplane
    model.kind = lr
    experiment.repeats = 5
    maintenance.lambda_u = 2

Values are Python literals where they parse as such (numbers, booleans,
lists) and bare strings otherwise. ``model.*`` and ``generator.*`` keys
other than ``kind`` are passed to the estimator constructors.
"""
from __future__ import annotations

import ast
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Tuple

from ..maintenance import MaintenanceConfig
from ..metrics import MetricsConfig
from ..streams import DEFAULT_PARAMS, DriftSchedule, StreamSpec

ALL_METHODS = ("frozen", "ours-p", "ours-vp", "nn", "gs", "robx-regen")
TRACKED_METHODS = ("frozen", "ours-p", "ours-vp")
REGEN_METHODS = ("nn", "gs", "robx-regen")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    stream_kind: str = "hyperplane"
    n_features: int | None = None
    drift_start: int = 0
    drift_width: int = 2000
    noise_rate: float = 0.0
    stream_params: Dict[str, float] = field(default_factory=dict)
    model_kind: str = "lr"
    model_params: Dict[str, object] = field(default_factory=dict)
    generator: str = "robx"
    generator_params: Dict[str, object] = field(default_factory=dict)
    initial_size: int = 1000
    stream_length: int = 2000
    checkpoint_interval: int = 200
    population: int = 50
    buffer_capacity: int = 1000
    methods: Tuple[str, ...] = ALL_METHODS
    repeats: int = 5
    seed: int = 0
    runtime_checkpoints: int = 8
    maintenance: MaintenanceConfig = field(default_factory=MaintenanceConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)

    def __post_init__(self):
        if self.repeats < 1:
            raise ConfigError("experiment.repeats must be >= 1")
        if self.checkpoint_interval < 1 or self.stream_length % self.checkpoint_interval:
            raise ConfigError("experiment.stream_length must be divisible by "
                              "experiment.checkpoint_interval")
        if self.population < 0 or self.initial_size < 1:
            raise ConfigError("experiment.population must be >= 0 and initial_size >= 1")
        unknown = set(self.methods) - set(ALL_METHODS)
        if unknown:
            raise ConfigError(f"unknown methods {sorted(unknown)}; expected {ALL_METHODS}")
        if self.runtime_checkpoints < 1:
            raise ConfigError("experiment.runtime_checkpoints must be >= 1")
        self.stream_spec(0)  # validates the stream section

    @property
    def n_checkpoints(self) -> int:
        return self.stream_length // self.checkpoint_interval

    def stream_spec(self, seed: int) -> StreamSpec:
        try:
            return StreamSpec(kind=self.stream_kind, n_features=self.n_features,
                              drift=DriftSchedule(self.drift_start, self.drift_width),
                              params=dict(self.stream_params), noise_rate=self.noise_rate,
                              seed=seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    # -- flat key/value representation --------------------------------------
    def to_flat(self) -> Dict[str, object]:
        flat: Dict[str, object] = {
            "stream.kind": self.stream_kind,
            "stream.drift_start": self.drift_start,
            "stream.drift_width": self.drift_width,
            "stream.noise_rate": self.noise_rate,
            "model.kind": self.model_kind,
            "generator.kind": self.generator,
        }
        if self.n_features is not None:
            flat["stream.n_features"] = self.n_features
        flat.update({f"stream.{k}": v for k, v in self.stream_params.items()})
        flat.update({f"model.{k}": v for k, v in self.model_params.items()})
        flat.update({f"generator.{k}": v for k, v in self.generator_params.items()})
        for name in _EXPERIMENT_KEYS:
            value = getattr(self, name)
            flat[f"experiment.{name}"] = list(value) if isinstance(value, tuple) else value
        for f in dataclasses.fields(MaintenanceConfig):
            flat[f"maintenance.{f.name}"] = getattr(self.maintenance, f.name)
        for f in dataclasses.fields(MetricsConfig):
            flat[f"metrics.{f.name}"] = getattr(self.metrics, f.name)
        return flat

    @classmethod
    def from_flat(cls, flat: Dict[str, object]) -> "ExperimentConfig":
        kwargs: Dict[str, object] = {}
        stream_params, model_params, gen_params = {}, {}, {}
        maint, metr = {}, {}
        maint_fields = {f.name for f in dataclasses.fields(MaintenanceConfig)}
        metr_fields = {f.name for f in dataclasses.fields(MetricsConfig)}
        all_stream_params = {p for ps in DEFAULT_PARAMS.values() for p in ps}
        for key, value in flat.items():
            section, _, name = key.partition(".")
            if not name:
                raise ConfigError(f"key {key!r} has no section (expected section.name)")
            if section == "stream":
                if name == "kind":
                    kwargs["stream_kind"] = value
                elif name in ("n_features", "drift_start", "drift_width", "noise_rate"):
                    kwargs[name] = value
                elif name in all_stream_params:
                    stream_params[name] = value
                else:
                    raise ConfigError(f"unknown key {key!r}")
            elif section == "model":
                if name == "kind":
                    kwargs["model_kind"] = value
                else:
                    model_params[name] = value
            elif section == "generator":
                if name == "kind":
                    kwargs["generator"] = value
                else:
                    gen_params[name] = value
            elif section == "experiment" and name in _EXPERIMENT_KEYS:
                kwargs[name] = tuple(value) if name == "methods" else value
            elif section == "maintenance" and name in maint_fields:
                maint[name] = value
            elif section == "metrics" and name in metr_fields:
                metr[name] = value
            else:
                raise ConfigError(f"unknown key {key!r}")
        try:
            kwargs["maintenance"] = MaintenanceConfig(**maint)
            kwargs["metrics"] = MetricsConfig(**metr)
            return cls(stream_params=stream_params, model_params=model_params,
                       generator_params=gen_params, **kwargs)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


_EXPERIMENT_KEYS = ("initial_size", "stream_length", "checkpoint_interval", "population",
                    "buffer_capacity", "methods", "repeats", "seed", "runtime_checkpoints")


def _parse_value(text: str):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def parse_config_text(text: str) -> Dict[str, object]:
    flat: Dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        flat[key.strip()] = _parse_value(value.strip())
    return flat


def format_config(cfg: ExperimentConfig) -> str:
    return "".join(f"{k} = {v!r}\n" if isinstance(v, str) else f"{k} = {v}\n"
                   for k, v in cfg.to_flat().items())


def load_config(path) -> ExperimentConfig:
    return ExperimentConfig.from_flat(parse_config_text(Path(path).read_text()))
