"""Run configuration: TOML file + flag overrides, with a stable hash.

The hash covers only semantic knobs (seed, topics, code map, filter
bounds, vocabulary/negative-sampling/epoch settings, backend spec,
concurrency), never filesystem locations, so the same logical run is
byte-identical no matter where its workdir lives.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .corpus import KNOWN_TOPICS
from .frames import DEFAULT_FRAME_CODES, Frame, parse_code_map


class ConfigError(ValueError):
    """Bad configuration value or file."""


# Fields that locate things on disk; excluded from the config hash.
_LOCATION_FIELDS = ("corpus_dir", "workdir")


@dataclass(frozen=True)
class RunConfig:
    corpus_dir: str = "corpus"
    workdir: str = "run"
    seed: int = 13
    topics: tuple[str, ...] = KNOWN_TOPICS
    frame_codes: dict[int, Frame] = field(
        default_factory=lambda: dict(DEFAULT_FRAME_CODES)
    )
    val_per_topic: int = 600
    test_per_topic: int = 600
    min_tokens: int = 5
    max_tokens: int = 50
    tolerance: float = 0.5
    vocab_k: int = 100
    vocab_split: str = "train"
    vocab_aggregate: str = "sum"
    neg_ratio: float = 1.0
    pretrain_epochs: int = 1
    finetune_epochs: int = 1
    adversarial_epochs: int = 3
    backend: str = "mock"  # mock | replay:FILE | http:URL
    concurrency_limit: int = 4
    max_gen_tokens: int = 60
    retries: int = 2
    request_timeout: float = 30.0

    def __post_init__(self) -> None:
        if self.min_tokens < 1 or self.max_tokens < self.min_tokens:
            raise ConfigError(
                f"bad token bounds [{self.min_tokens}, {self.max_tokens}]"
            )
        if not 0 < self.tolerance <= 1:
            raise ConfigError(f"tolerance must be in (0, 1], got {self.tolerance}")
        if self.vocab_k < 1:
            raise ConfigError(f"vocab_k must be >= 1, got {self.vocab_k}")
        if self.neg_ratio < 0:
            raise ConfigError(f"neg_ratio must be >= 0, got {self.neg_ratio}")
        if self.concurrency_limit < 1:
            raise ConfigError(
                f"concurrency_limit must be >= 1, got {self.concurrency_limit}"
            )
        for epochs in (self.pretrain_epochs, self.finetune_epochs, self.adversarial_epochs):
            if epochs < 1:
                raise ConfigError(f"epoch budgets must be >= 1, got {epochs}")
        unknown = set(self.topics) - set(KNOWN_TOPICS)
        if unknown:
            raise ConfigError(f"unknown topics: {sorted(unknown)}")

    @property
    def hash(self) -> str:
        payload = {}
        for f in dataclasses.fields(self):
            if f.name in _LOCATION_FIELDS:
                continue
            value = getattr(self, f.name)
            if f.name == "frame_codes":
                value = {str(k): v.value for k, v in sorted(value.items())}
            elif f.name == "topics":
                value = sorted(value)
            payload[f.name] = value
        blob = json.dumps(payload, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    @property
    def workdir_path(self) -> Path:
        return Path(self.workdir)

    @property
    def corpus_path(self) -> Path:
        return Path(self.corpus_dir)


_SIMPLE_KEYS = {
    "corpus_dir": str,
    "workdir": str,
    "seed": int,
    "val_per_topic": int,
    "test_per_topic": int,
    "min_tokens": int,
    "max_tokens": int,
    "tolerance": float,
    "vocab_k": int,
    "vocab_split": str,
    "vocab_aggregate": str,
    "neg_ratio": float,
    "pretrain_epochs": int,
    "finetune_epochs": int,
    "adversarial_epochs": int,
    "backend": str,
    "concurrency_limit": int,
    "max_gen_tokens": int,
    "retries": int,
    "request_timeout": float,
}


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    """Resolve a RunConfig from an optional TOML file plus overrides.

    Override values of None are ignored, so CLI flags can be passed
    through unconditionally; flags win over the file.
    """
    data: dict = {}
    if path is not None:
        config_path = Path(path)
        if not config_path.exists():
            raise ConfigError(f"config file not found: {config_path}")
        try:
            with open(config_path, "rb") as fh:
                data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML in {config_path}: {exc}") from exc

    merged: dict = {}
    for key, caster in _SIMPLE_KEYS.items():
        if key in data:
            merged[key] = caster(data[key])
    if "topics" in data:
        merged["topics"] = tuple(data["topics"])
    if "frame_codes" in data:
        merged["frame_codes"] = parse_code_map(data["frame_codes"])

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "topics":
            merged["topics"] = tuple(value)
        elif key == "frame_codes":
            merged["frame_codes"] = (
                value if isinstance(value, dict) and all(
                    isinstance(k, int) for k in value
                ) else parse_code_map(value)
            )
        elif key in _SIMPLE_KEYS:
            merged[key] = _SIMPLE_KEYS[key](value)
        else:
            raise ConfigError(f"unknown config key: {key!r}")

    try:
        return RunConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
