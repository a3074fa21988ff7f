"""Experiment configuration: one JSON document, parsed into frozen dataclasses."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .baselines import SELECTORS
from .data import SplitConfig, SynthSpec
from .engine import EvolveConfig
from .errors import ConfigError
from .mirt import PretrainConfig, UpdateConfig

TAU_GRID = (0.5, 0.75, 1.0, 1.25, 1.5)


@dataclass(frozen=True)
class DataSource:
    """Either a pair of CSV paths or a synthetic cohort description."""

    interactions: str | None = None
    qmatrix: str | None = None
    synth: SynthSpec | None = None
    synth_seed: int = 13

    def __post_init__(self):
        has_files = self.interactions is not None or self.qmatrix is not None
        if has_files == (self.synth is not None):
            raise ConfigError("data needs either interactions+qmatrix paths or a synth section")
        if has_files and (self.interactions is None or self.qmatrix is None):
            raise ConfigError("data needs both interactions and qmatrix paths")


@dataclass(frozen=True)
class ExperimentConfig:
    data: DataSource
    split: SplitConfig = field(default_factory=SplitConfig)
    selector: str = "peoat"
    test_lengths: tuple[int, ...] = (5, 10, 15, 20)
    evolve: EvolveConfig = field(default_factory=EvolveConfig)
    update: UpdateConfig = field(default_factory=UpdateConfig)
    theta0: UpdateConfig = field(default_factory=UpdateConfig)
    pretrain: PretrainConfig = field(default_factory=PretrainConfig)
    model: str | None = None
    master_seed: int = 0
    max_students: int | None = None
    student_timeout: float | None = 60.0
    tau_values: tuple[float, ...] = TAU_GRID
    output_dir: str = "oat_output"
    workers: int = 1

    def __post_init__(self):
        if self.selector not in SELECTORS:
            raise ConfigError(f"selector must be one of {SELECTORS}, got {self.selector!r}")
        if not self.test_lengths:
            raise ConfigError("test_lengths must be non-empty")
        if any(L < 1 for L in self.test_lengths):
            raise ConfigError("test lengths must be positive")
        if max(self.test_lengths) > self.split.max_length:
            raise ConfigError(
                f"test length {max(self.test_lengths)} exceeds split.max_length={self.split.max_length}"
            )
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def experiment_dict(self) -> dict:
        """Everything that determines results; excludes output and worker settings."""
        d = dataclasses.asdict(self)
        d.pop("output_dir")
        d.pop("workers")
        return d

    def config_hash(self) -> str:
        canonical = json.dumps(self.experiment_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _build(cls, payload, where):
    if payload is None:
        return cls()
    if not isinstance(payload, dict):
        raise ConfigError(f"{where} must be an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(payload) - names
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    try:
        return cls(**payload)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def synth_spec_from_dict(payload: dict) -> SynthSpec:
    payload = dict(payload)
    split = _build(SplitConfig, payload.pop("split", None), "synth.split")
    return _build(SynthSpec, {**payload, "split": split}, "synth")


def config_from_dict(payload: dict, base_dir=None) -> ExperimentConfig:
    if not isinstance(payload, dict):
        raise ConfigError("configuration must be a JSON object")
    payload = dict(payload)
    base = Path(base_dir) if base_dir is not None else Path(".")
    split = _build(SplitConfig, payload.pop("split", None), "split")

    data = dict(payload.pop("data", None) or {})
    unknown = set(data) - {"interactions", "qmatrix", "synth", "synth_seed"}
    if unknown:
        raise ConfigError(f"unknown keys in data: {sorted(unknown)}")
    if "synth" in data:
        synth = dict(data["synth"])
        if "split" in synth:
            raise ConfigError("put split settings at top level, not under data.synth")
        data["synth"] = _build(SynthSpec, {**synth, "split": split}, "data.synth")
    for key in ("interactions", "qmatrix"):
        if data.get(key) is not None:
            data[key] = str(base / data[key])
    try:
        source = DataSource(**data)
    except TypeError as exc:
        raise ConfigError(f"data: {exc}") from None

    if payload.get("model") is not None:
        payload["model"] = str(base / payload["model"])
    if "output_dir" in payload:
        payload["output_dir"] = str(base / payload["output_dir"])
    for key in ("test_lengths", "tau_values"):
        if key in payload:
            payload[key] = tuple(payload[key])
    sections = {
        "evolve": EvolveConfig,
        "update": UpdateConfig,
        "theta0": UpdateConfig,
        "pretrain": PretrainConfig,
    }
    for key, cls in sections.items():
        payload[key] = _build(cls, payload.get(key), key)
    payload["data"] = source
    payload["split"] = split
    return _build(ExperimentConfig, payload, "config")


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"no such config file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(payload, base_dir=path.parent)
