"""Run configuration: a TOML file mirroring :class:`RunConfig`, overridden by flags.

Example::

    data = "data/flamelets.csv"     # omit to use the synthetic library
    encoder = "identity-p4"         # or a weights file path
    strategy = "flamelets"
    holdout_fraction = 0.2
    seed = 7
    out = "runs/flamelets"

    [synthetic]
    n_flamelets = 100
    seed = 7

    [ensemble]
    n_members = 8
    sample_fraction = 0.8
    with_replacement = false

    [train]
    hidden_dims = [64, 128, 64]
    max_epochs = 400
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import tomli

from .dataset import (
    EncodedSet,
    EncoderWeights,
    EnsembleStrategy,
    FlameletDataset,
    SyntheticConfig,
    encode,
    generate_synthetic,
    load_csv,
    load_encoder,
)
from .ensemble import EnsembleConfig
from .errors import ConfigError
from .network import TrainConfig

IDENTITY_ENCODER = "identity-p4"


@dataclass(frozen=True)
class RunConfig:
    data: str | None = None
    synthetic: SyntheticConfig = field(default_factory=SyntheticConfig)
    synthetic_seed: int = 7
    encoder: str = IDENTITY_ENCODER
    strategy: EnsembleStrategy = EnsembleStrategy.FLAMELETS
    holdout_fraction: float = 0.2
    seed: int = 7
    n_members: int = 8
    sample_fraction: float = 0.8
    with_replacement: bool = False
    train: TrainConfig = field(default_factory=TrainConfig)
    out: str | None = None
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "strategy", EnsembleStrategy.parse(self.strategy))
        if not 0 < self.holdout_fraction < 1:
            raise ConfigError("holdout_fraction must lie in (0, 1)")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    def ensemble_config(self) -> EnsembleConfig:
        return EnsembleConfig(self.n_members, self.strategy, self.sample_fraction,
                              self.with_replacement, self.train, self.seed)

    def single_config(self) -> TrainConfig:
        return replace(self.train, seed=self.seed)

    def data_source(self) -> dict:
        if self.data is not None:
            return {"csv": str(Path(self.data).resolve())}
        return {"synthetic": _synthetic_dict(self.synthetic), "seed": self.synthetic_seed}


def _synthetic_dict(cfg: SyntheticConfig) -> dict:
    d = asdict(cfg)
    d["species"] = list(cfg.species)
    return d


def synthetic_from_dict(d: dict) -> SyntheticConfig:
    d = dict(d)
    if "species" in d:
        d["species"] = tuple(d["species"])
    return _build(SyntheticConfig, d, "synthetic")


def _build(cls, values: dict, section: str):
    known = {f.name for f in fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")
    try:
        return cls(**values)
    except TypeError as exc:
        raise ConfigError(f"[{section}]: {exc}") from None


def load_run_config(path=None, **overrides) -> RunConfig:
    """Read a TOML run config (optional) and apply non-None overrides."""
    raw: dict = {}
    if path is not None:
        try:
            raw = tomli.loads(Path(path).read_text(encoding="utf-8"))
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    raw = dict(raw)
    synthetic = raw.pop("synthetic", {})
    ensemble = raw.pop("ensemble", {})
    train = raw.pop("train", {})
    if "seed" in synthetic:
        raw["synthetic_seed"] = synthetic.pop("seed")
    raw.update(ensemble)

    train_overrides = overrides.pop("train", {}) or {}
    synth_overrides = overrides.pop("synthetic", {}) or {}
    raw.update({k: v for k, v in overrides.items() if v is not None})
    train.update({k: v for k, v in train_overrides.items() if v is not None})
    synthetic.update({k: v for k, v in synth_overrides.items() if v is not None})

    raw["train"] = _build(TrainConfig, train, "train")
    raw["synthetic"] = synthetic_from_dict(synthetic)
    return _build(RunConfig, raw, "run")


def resolve_dataset(source: dict) -> FlameletDataset:
    if "csv" in source:
        return load_csv(source["csv"])
    return generate_synthetic(synthetic_from_dict(source["synthetic"]), source["seed"])


def resolve_encoder(spec: str, dataset: FlameletDataset) -> EncoderWeights:
    if spec == IDENTITY_ENCODER:
        return EncoderWeights.identity(dataset.species.names, 4)
    return load_encoder(spec)


def encoded_dataset(source: dict, encoder: str) -> EncodedSet:
    dataset = resolve_dataset(source)
    return encode(dataset, resolve_encoder(encoder, dataset))
