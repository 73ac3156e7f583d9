"""Pipeline configuration: one seeded config drives every stage.

Configs live in a small sectioned key/value file (TOML; JSON also accepted),
with every value overridable from the command line (flags win). The resolved
effective config is echoed as JSON into the output directory of each run and
is itself loadable.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib  # python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .corpus import LengthFilterSpec
from .distill import ExperimentConfig
from .metrics import BleuConfig, ChrfConfig
from .model import ModelConfig, TrainConfig
from .pseudo import DEFAULT_RETAIN, DEFAULT_VOWELS, EifelerRuleConfig

ENV_CONFIG_PATH = "LOWMT_CONFIG"


class ConfigError(ValueError):
    """Raised for unreadable or invalid configuration."""


def load_config_file(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    data = path.read_bytes()
    try:
        if path.suffix == ".json":
            return json.loads(data.decode("utf-8"))
        return tomllib.loads(data.decode("utf-8"))
    except (json.JSONDecodeError, tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc


def default_config_path() -> str | None:
    return os.environ.get(ENV_CONFIG_PATH)


PATH_KEYS = ("corpus", "dictionary", "golden_vectors", "output_dir")


@dataclass
class PipelineConfig:
    """Typed view of the sectioned config file plus the top-level seed."""

    seed: int = 0
    length_filter: LengthFilterSpec = field(default_factory=LengthFilterSpec)
    eifeler: EifelerRuleConfig = field(default_factory=EifelerRuleConfig)
    bleu: BleuConfig = field(default_factory=BleuConfig)
    chrf: ChrfConfig = field(default_factory=ChrfConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    kd_mode: str = "sequence"
    paths: dict = field(default_factory=dict)

    @classmethod
    def from_mapping(cls, raw: dict) -> "PipelineConfig":
        try:
            return cls(
                seed=int(raw.get("seed", 0)),
                length_filter=_length_filter(raw.get("corpus", {})),
                eifeler=_eifeler(raw.get("eifeler", {})),
                bleu=BleuConfig(**_known(raw.get("bleu", {}), BleuConfig)),
                chrf=ChrfConfig(**_known(raw.get("chrf", {}), ChrfConfig)),
                train=TrainConfig(**_known(raw.get("train", {}), TrainConfig)),
                model=ModelConfig(**_known(raw.get("model", {}), ModelConfig)),
                experiment=ExperimentConfig(**_known(raw.get("experiment", {}), ExperimentConfig)),
                kd_mode=raw.get("distill", {}).get("mode", "sequence"),
                paths=_paths(raw.get("paths", {})),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: {exc}") from exc

    def path(self, key: str):
        """Configured path for ``key``, or None when not set."""
        return self.paths.get(key)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "corpus": {
                "min_chars": self.length_filter.min_chars,
                "max_chars": self.length_filter.max_chars,
                "sides": list(self.length_filter.sides) if self.length_filter.sides else None,
            },
            "eifeler": {
                "retain_before": sorted(self.eifeler.retain_before),
                "vowel_set": sorted(self.eifeler.vowel_set),
                "exceptions": sorted(self.eifeler.exceptions),
                "retain_at_pause": self.eifeler.retain_at_pause,
            },
            "bleu": {
                "max_order": self.bleu.max_order,
                "smoothing": self.bleu.smoothing,
                "tokenizer": self.bleu.tokenizer,
                "effective_order": self.bleu.effective_order,
            },
            "chrf": {
                "char_order": self.chrf.char_order,
                "word_order": self.chrf.word_order,
                "beta": self.chrf.beta,
                "remove_whitespace": self.chrf.remove_whitespace,
            },
            "train": {
                "lr": self.train.lr,
                "weight_decay": self.train.weight_decay,
                "batch_size": self.train.batch_size,
                "max_steps": self.train.max_steps,
                "second_round_max_steps": self.train.second_round_max_steps,
                "seed": self.train.seed,
                "temperature": self.train.temperature,
            },
            "model": {
                "embed_dim": self.model.embed_dim,
                "hidden_dim": self.model.hidden_dim,
                "max_len": self.model.max_len,
            },
            "experiment": vars(self.experiment),
            "distill": {"mode": self.kd_mode},
            "paths": dict(self.paths),
        }

    def echo(self, path) -> None:
        """Write the resolved config as JSON (loadable back through this module)."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_dict(), fh, ensure_ascii=False, indent=2, sort_keys=True)
            fh.write("\n")


def _known(section: dict, cls) -> dict:
    allowed = set(cls.__dataclass_fields__)
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys for {cls.__name__}: {sorted(unknown)}")
    return dict(section)


def _length_filter(section: dict) -> LengthFilterSpec:
    sides = section.get("sides")
    return LengthFilterSpec(
        min_chars=int(section.get("min_chars", 50)),
        max_chars=int(section.get("max_chars", 500)),
        sides=tuple(sides) if sides else None,
    )


def _paths(section: dict) -> dict:
    unknown = set(section) - set(PATH_KEYS)
    if unknown:
        raise ConfigError(f"unknown path keys: {sorted(unknown)}")
    # referenced inputs must exist up front; the output directory is created on use
    for key in ("corpus", "dictionary", "golden_vectors"):
        value = section.get(key)
        if value is not None and not Path(value).exists():
            raise ConfigError(f"configured {key} path does not exist: {value}")
    return {k: str(v) for k, v in section.items()}


def _eifeler(section: dict) -> EifelerRuleConfig:
    return EifelerRuleConfig(
        retain_before=frozenset(section.get("retain_before", DEFAULT_RETAIN)),
        vowel_set=frozenset(section.get("vowel_set", DEFAULT_VOWELS)),
        exceptions=frozenset(w.casefold() for w in section.get("exceptions", ())),
        retain_at_pause=bool(section.get("retain_at_pause", True)),
    )


def load_pipeline_config(path=None) -> PipelineConfig:
    """Load from an explicit path, else $LOWMT_CONFIG, else built-in defaults."""
    if path is None:
        path = default_config_path()
    if path is None:
        return PipelineConfig()
    return PipelineConfig.from_mapping(load_config_file(path))
