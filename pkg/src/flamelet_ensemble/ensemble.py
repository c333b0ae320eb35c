"""Bagged ensembles of regressors under the flamelets or points strategy.

Each member is trained on a resample of the train-val partition.  The
resampling unit is either a whole flamelet (all of its grid points travel
together) or an individual point.  Member ``i`` draws from a generator
seeded by ``member_seed(seed, i)``, so member ``i`` is identical whatever
the ensemble size and whatever order members are trained in.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ._io import atomic_write_text
from .dataset import EncodedSet, EnsembleStrategy
from .errors import ConfigError, Corrupted, DimensionMismatch, FlameletError, TrainingError, UnsupportedVersion
from .network import (
    FORMAT_VERSION,
    Mlp,
    TrainConfig,
    dumps,
    forward,
    loads,
    model_from_dict,
    model_to_dict,
    train_single,
)
from .rng import SplitMix64, member_seed, round_half_up

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnsembleConfig:
    n_members: int = 8
    strategy: EnsembleStrategy = EnsembleStrategy.FLAMELETS
    sample_fraction: float = 0.8
    with_replacement: bool = False
    base: TrainConfig = field(default_factory=TrainConfig)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "strategy", EnsembleStrategy.parse(self.strategy))
        if self.n_members < 2:
            raise ConfigError("an ensemble needs at least 2 members")
        if not 0 < self.sample_fraction <= 1:
            raise ConfigError("sample_fraction must lie in (0, 1]")

    def member_config(self, member_index: int) -> TrainConfig:
        return replace(self.base, seed=member_seed(self.seed, member_index))

    def to_dict(self) -> dict:
        return {
            "n_members": self.n_members,
            "strategy": self.strategy.value,
            "sample_fraction": self.sample_fraction,
            "with_replacement": self.with_replacement,
            "base": self.base.to_dict(),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleConfig":
        d = dict(d)
        d["base"] = TrainConfig.from_dict(d["base"])
        return cls(**d)


@dataclass
class EnsembleModel:
    members: list[Mlp]
    config: EnsembleConfig
    manifests: list[list]
    fingerprint: str

    def __post_init__(self):
        if len(self.manifests) != len(self.members):
            raise DimensionMismatch("one manifest per member required")

    @property
    def n_members(self) -> int:
        return len(self.members)

    def truncated(self, n: int) -> "EnsembleModel":
        """The ensemble formed by the first ``n`` members."""
        if not 2 <= n <= self.n_members:
            raise ConfigError(f"cannot truncate {self.n_members} members to {n}")
        return EnsembleModel(self.members[:n], replace(self.config, n_members=n),
                             self.manifests[:n], self.fingerprint)


def _units(train_val: EncodedSet, strategy: EnsembleStrategy) -> list:
    if strategy is EnsembleStrategy.FLAMELETS:
        return train_val.unique_keys()
    return [int(i) for i in train_val.ids]


def sample_member_data(train_val: EncodedSet, cfg: EnsembleConfig, member_index: int) -> tuple[EncodedSet, list]:
    """Resample ``train_val`` for one member.

    Draws ``round(sample_fraction * units)`` units, returning the induced
    points and the sorted manifest of drawn unit ids (flamelet keys or point
    ids, repeated when drawn with replacement).
    """
    if not 0 <= member_index < cfg.n_members:
        raise ConfigError(f"member_index {member_index} outside [0, {cfg.n_members})")
    units = _units(train_val, cfg.strategy)
    n_draw = round_half_up(cfg.sample_fraction * len(units))
    if n_draw == 0:
        raise TrainingError("member sample is empty", member=member_index)
    rng = SplitMix64(member_seed(cfg.seed, member_index))
    if cfg.with_replacement:
        picked = [units[rng.below(len(units))] for _ in range(n_draw)]
    else:
        pool = list(units)
        # partial Fisher-Yates: first n_draw slots are the sample
        for i in range(n_draw):
            j = i + rng.below(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        picked = pool[:n_draw]
    manifest = sorted(picked)
    if cfg.strategy is EnsembleStrategy.FLAMELETS:
        rows = train_val.rows_for_keys(manifest)
    else:
        rows = train_val.rows_for_ids(manifest)
    return train_val.subset(rows), manifest


def _train_member(args):
    train_val, cfg, index, fingerprint = args
    sample, manifest = sample_member_data(train_val, cfg, index)
    try:
        model = train_single(sample, cfg.member_config(index), fingerprint=fingerprint)
    except FlameletError as exc:
        raise TrainingError(f"member {index}: {exc}", member=index) from exc
    model.metadata["member_index"] = index
    return model, manifest


def train_members(train_val: EncodedSet, cfg: EnsembleConfig, indices, threads: int = 1):
    """Train the given member indices; results come back in ``indices`` order."""
    fingerprint = train_val.fingerprint()
    jobs = [(train_val, cfg, i, fingerprint) for i in indices]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_train_member, jobs))
    out = []
    for job in jobs:
        log.info("training member %d/%d", job[2] + 1, cfg.n_members)
        out.append(_train_member(job))
    return out


def train_ensemble(train_val: EncodedSet, cfg: EnsembleConfig, threads: int = 1) -> EnsembleModel:
    if len(train_val) == 0:
        raise TrainingError("train_val is empty")
    results = train_members(train_val, cfg, range(cfg.n_members), threads)
    return EnsembleModel([m for m, _ in results], cfg, [man for _, man in results],
                         train_val.fingerprint())


def predict_members(ens: EnsembleModel, inputs) -> np.ndarray:
    """Per-member predictions: (N, k+1) for one input, (N, M, k+1) for M rows."""
    return np.stack([forward(m, inputs) for m in ens.members])


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------

def ensemble_to_dict(ens: EnsembleModel) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": "ensemble",
        "config": ens.config.to_dict(),
        "fingerprint": ens.fingerprint,
        "manifests": ens.manifests,
        "members": [model_to_dict(m) for m in ens.members],
    }


def ensemble_from_dict(doc: dict) -> EnsembleModel:
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"ensemble format_version {version!r} (supported: {FORMAT_VERSION})")
    if doc.get("kind") != "ensemble":
        raise Corrupted(f"not an ensemble document (kind={doc.get('kind')!r})")
    try:
        config = EnsembleConfig.from_dict(doc["config"])
        manifests = doc["manifests"]
        member_docs = doc["members"]
    except (KeyError, TypeError, ValueError) as exc:
        raise Corrupted(f"malformed ensemble header: {exc}") from None
    members = []
    for i, mdoc in enumerate(member_docs):
        try:
            members.append(model_from_dict(mdoc))
        except (Corrupted, UnsupportedVersion, AttributeError) as exc:
            raise Corrupted(f"member {i}: {exc}", member=i) from None
    if len(members) != config.n_members or len(manifests) != len(members):
        raise Corrupted(f"expected {config.n_members} members and manifests, found "
                        f"{len(members)} and {len(manifests)}")
    return EnsembleModel(members, config, manifests, doc["fingerprint"])


def save_ensemble(ens: EnsembleModel, path) -> None:
    atomic_write_text(path, dumps(ensemble_to_dict(ens)))


def load_ensemble(path) -> EnsembleModel:
    return ensemble_from_dict(loads(Path(path).read_text(encoding="utf-8")))
