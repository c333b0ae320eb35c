"""Flamelet data model, CSV interchange, synthetic libraries and encoding.

A flamelet library is a set of 1-D steady flame solutions, one per strain
rate (the *flamelet key*), each sampled on the same number of grid points.
Per grid point we carry the axial position, the mixture fraction, all species
mass fractions, the source terms of the seven key species and the source
energy.  The regressors never see the mass fractions directly: they are
projected onto a few progress variables with a fixed linear encoder and
concatenated with the mixture fraction.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._io import atomic_write_text
from .errors import (
    ConfigError,
    DimensionMismatch,
    EmptyDataset,
    MassFractionSum,
    SchemaError,
)
from .rng import SplitMix64, round_half_up

KEY_SPECIES = ("O2", "CO", "CO2", "H2O", "OH", "H2", "CH4")
SOURCE_COLUMNS = tuple(f"Sdot_{name}" for name in KEY_SPECIES)
TARGET_NAMES = SOURCE_COLUMNS + ("S_e",)
MASS_FRACTION_TOL = 1e-6
DEFAULT_GRID_SIZE = 299
DEFAULT_EMBED_DIM = 4

# GRI-Mech 3.0 species, in mechanism order.
GRI30_SPECIES = (
    "H2", "H", "O", "O2", "OH", "H2O", "HO2", "H2O2", "C", "CH", "CH2",
    "CH2(S)", "CH3", "CH4", "CO", "CO2", "HCO", "CH2O", "CH2OH", "CH3O",
    "CH3OH", "C2H", "C2H2", "C2H3", "C2H4", "C2H5", "C2H6", "HCCO", "CH2CO",
    "HCCOH", "N", "NH", "NH2", "NH3", "NNH", "NO", "NO2", "N2O", "HNO", "CN",
    "HCN", "H2CN", "HCNN", "HCNO", "HOCN", "HNCO", "NCO", "N2", "AR", "C3H7",
    "C3H8", "CH2CHO", "CH3CHO",
)

# Standard heat of formation at 298 K (kJ/mol) and molar mass (g/mol).
_FORMATION_DATA = {
    "H2": (0.0, 2.016),
    "H": (217.999, 1.008),
    "O": (249.18, 15.999),
    "O2": (0.0, 31.998),
    "OH": (37.3, 17.007),
    "H2O": (-241.826, 18.015),
    "HO2": (12.0, 33.006),
    "H2O2": (-136.1, 34.014),
    "CH3": (146.0, 15.035),
    "CH4": (-74.87, 16.043),
    "CO": (-110.53, 28.010),
    "CO2": (-393.52, 44.009),
    "CH2O": (-108.6, 30.026),
    "CH3OH": (-201.0, 32.042),
    "C2H2": (227.4, 26.038),
    "C2H4": (52.4, 28.054),
    "C2H6": (-84.0, 30.070),
    "NH3": (-45.9, 17.031),
    "NO": (91.27, 30.006),
    "NO2": (33.2, 46.006),
    "N2O": (81.6, 44.013),
    "HCN": (135.1, 27.026),
    "C3H8": (-104.7, 44.097),
    "N2": (0.0, 28.014),
    "AR": (0.0, 39.948),
}


def heat_of_formation(name: str) -> float:
    """Heat of formation in J/kg; 0.0 for species without tabulated data."""
    if name not in _FORMATION_DATA:
        return 0.0
    dhf, molar_mass = _FORMATION_DATA[name]
    return dhf * 1e6 / molar_mass


class EnsembleStrategy(str, enum.Enum):
    """Resampling unit for holdout splits and member bagging."""

    FLAMELETS = "flamelets"
    POINTS = "points"

    @classmethod
    def parse(cls, value: "str | EnsembleStrategy") -> "EnsembleStrategy":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigError(f"unknown strategy {value!r}; expected 'flamelets' or 'points'") from None


@dataclass(frozen=True)
class SpeciesTable:
    names: tuple[str, ...]
    heats_of_formation: np.ndarray

    def __post_init__(self):
        if not self.names or any(not n for n in self.names):
            raise SchemaError("species names must be non-empty")
        if len(set(self.names)) != len(self.names):
            raise SchemaError("species names must be unique")
        if len(self.heats_of_formation) != len(self.names):
            raise DimensionMismatch("heats_of_formation length differs from species count")
        if len(self.names) < len(KEY_SPECIES):
            raise SchemaError("fewer species than key species")

    @classmethod
    def from_names(cls, names) -> "SpeciesTable":
        names = tuple(names)
        heats = np.array([heat_of_formation(n) for n in names], dtype=float)
        return cls(names, heats)

    @property
    def size(self) -> int:
        return len(self.names)

    def key_heats(self) -> np.ndarray:
        """Heats of formation of the key species, in source-term column order."""
        return np.array([heat_of_formation(n) if n not in self.names
                         else self.heats_of_formation[self.names.index(n)]
                         for n in KEY_SPECIES])


@dataclass(frozen=True)
class FlameletPoint:
    x_pos: float
    z_mix: float
    mass_fractions: np.ndarray
    source_terms: np.ndarray
    source_energy: float


@dataclass(frozen=True)
class Flamelet:
    """One flamelet stored column-wise; ``point(i)`` gives a row view."""

    key: float
    x_pos: np.ndarray
    z_mix: np.ndarray
    mass_fractions: np.ndarray  # (n_points, s)
    source_terms: np.ndarray  # (n_points, k)
    source_energy: np.ndarray  # (n_points,)
    extinguished: bool = False

    def __post_init__(self):
        n = len(self.x_pos)
        if not self.key > 0:
            raise SchemaError(f"flamelet key must be positive, got {self.key!r}")
        for name in ("z_mix", "mass_fractions", "source_terms", "source_energy"):
            if len(getattr(self, name)) != n:
                raise DimensionMismatch(f"flamelet {self.key!r}: {name} has wrong length")
        if self.source_terms.shape[1] != len(KEY_SPECIES):
            raise DimensionMismatch("source_terms must have one column per key species")
        if n > 1 and not np.all(np.diff(self.x_pos) > 0):
            raise SchemaError(f"flamelet {self.key!r}: x_pos not strictly increasing")

    def __len__(self) -> int:
        return len(self.x_pos)

    def point(self, i: int) -> FlameletPoint:
        return FlameletPoint(float(self.x_pos[i]), float(self.z_mix[i]),
                             self.mass_fractions[i], self.source_terms[i],
                             float(self.source_energy[i]))

    @property
    def points(self) -> list[FlameletPoint]:
        return [self.point(i) for i in range(len(self))]


@dataclass(frozen=True)
class FlameletDataset:
    species: SpeciesTable
    flamelets: tuple[Flamelet, ...]
    n_extinguished_dropped: int = 0

    def __post_init__(self):
        keys = [f.key for f in self.flamelets]
        if len(set(keys)) != len(keys):
            raise SchemaError("flamelet keys must be unique")
        for f in self.flamelets:
            if f.mass_fractions.shape[1] != self.species.size:
                raise DimensionMismatch("mass_fractions width differs from species count")

    @property
    def n_points(self) -> int:
        return sum(len(f) for f in self.flamelets)

    @property
    def keys(self) -> list[float]:
        return [f.key for f in self.flamelets]

    def flamelet(self, key: float) -> Flamelet:
        for f in self.flamelets:
            if f.key == key:
                return f
        raise KeyError(key)

    def without_extinguished(self) -> "FlameletDataset":
        kept = tuple(f for f in self.flamelets if not f.extinguished)
        dropped = sum(len(f) for f in self.flamelets if f.extinguished)
        return FlameletDataset(self.species, kept, self.n_extinguished_dropped + dropped)


# --------------------------------------------------------------------------
# CSV interchange
# --------------------------------------------------------------------------

def csv_header(species_names) -> list[str]:
    return (["flame_key", "x_pos", "z_mix", "extinguished"]
            + [f"Y_{n}" for n in species_names]
            + list(SOURCE_COLUMNS) + ["S_e"])


def _fmt(x: float) -> str:
    return repr(float(x))


def dataset_to_csv_text(dataset: FlameletDataset) -> str:
    lines = [",".join(csv_header(dataset.species.names))]
    for f in dataset.flamelets:
        key = _fmt(f.key)
        flag = "1" if f.extinguished else "0"
        for i in range(len(f)):
            row = [key, _fmt(f.x_pos[i]), _fmt(f.z_mix[i]), flag]
            row.extend(map(_fmt, f.mass_fractions[i]))
            row.extend(map(_fmt, f.source_terms[i]))
            row.append(_fmt(f.source_energy[i]))
            lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def save_csv(dataset: FlameletDataset, path) -> None:
    atomic_write_text(path, dataset_to_csv_text(dataset))


def load_csv(path) -> FlameletDataset:
    """Read a flamelet CSV, dropping rows flagged as extinguished.

    Rows are grouped by ``flame_key`` (ascending) and sorted by ``x_pos``.
    Row numbers in error messages count data rows from 1.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDataset(f"{path}: file is empty") from None
        rows = [r for r in reader if r]

    header = [h.strip() for h in header]
    species = _species_from_header(header)
    expected = csv_header(species)
    if header != expected:
        missing = [c for c in expected if c not in header]
        extra = [c for c in header if c not in expected]
        raise SchemaError(f"{path}: bad header (missing={missing}, extra={extra})")
    if not rows:
        raise EmptyDataset(f"{path}: no data rows")

    width = len(header)
    data = np.empty((len(rows), width))
    for r, row in enumerate(rows, start=1):
        if len(row) != width:
            raise SchemaError(f"row {r}: expected {width} cells, got {len(row)}")
        try:
            data[r - 1] = [float(c) for c in row]
        except ValueError:
            bad = next(c for c in row if not _is_float(c))
            raise SchemaError(f"row {r}: non-numeric cell {bad!r}") from None
    if not np.all(np.isfinite(data)):
        r = int(np.argwhere(~np.isfinite(data))[0, 0]) + 1
        raise SchemaError(f"row {r}: non-finite value")

    s = len(species)
    y = data[:, 4:4 + s]
    sums = y.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > MASS_FRACTION_TOL)
    if bad.size:
        raise MassFractionSum(int(bad[0]) + 1, float(sums[bad[0]]))
    out_of_range = np.flatnonzero(((y < -MASS_FRACTION_TOL) | (y > 1 + MASS_FRACTION_TOL)).any(axis=1))
    if out_of_range.size:
        raise SchemaError(f"row {int(out_of_range[0]) + 1}: mass fraction outside [0, 1]")

    pairs = set()
    for r, (key, x) in enumerate(data[:, :2], start=1):
        if (key, x) in pairs:
            raise SchemaError(f"row {r}: duplicate (flame_key, x_pos) = ({key!r}, {x!r})")
        pairs.add((key, x))

    flag = data[:, 3]
    if not np.all((flag == 0) | (flag == 1)):
        raise SchemaError("extinguished column must be 0 or 1")
    n_dropped = int(np.count_nonzero(flag == 1))
    data = data[flag == 0]
    if len(data) == 0:
        raise EmptyDataset(f"{path}: every row is flagged extinguished")

    flamelets = []
    for key in np.unique(data[:, 0]):
        block = data[data[:, 0] == key]
        block = block[np.argsort(block[:, 1], kind="stable")]
        flamelets.append(Flamelet(
            key=float(key),
            x_pos=block[:, 1].copy(),
            z_mix=block[:, 2].copy(),
            mass_fractions=block[:, 4:4 + s].copy(),
            source_terms=block[:, 4 + s:4 + s + len(KEY_SPECIES)].copy(),
            source_energy=block[:, -1].copy(),
        ))
    return FlameletDataset(SpeciesTable.from_names(species), tuple(flamelets), n_dropped)


def _species_from_header(header: list[str]) -> list[str]:
    return [h[2:] for h in header if h.startswith("Y_")]


def _is_float(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


# --------------------------------------------------------------------------
# Synthetic flamelet libraries
# --------------------------------------------------------------------------

# (amplitude, offset from flame centre, width) of the Gaussian bumps making up
# each key species source term, kg/(m^3 s).
_SOURCE_BUMPS = {
    "O2": [(-1500.0, -0.02, 0.050)],
    "CO": [(900.0, -0.04, 0.040), (-700.0, 0.03, 0.050)],
    "CO2": [(300.0, 0.02, 0.060)],
    "H2O": [(800.0, 0.00, 0.050)],
    "OH": [(250.0, 0.01, 0.030), (-120.0, 0.06, 0.040)],
    "H2": [(150.0, -0.05, 0.040), (-130.0, 0.02, 0.040)],
    "CH4": [(-700.0, -0.04, 0.050)],
}

# Peak mass fraction of the major intermediate/product species.
_MAJOR_PEAKS = {"CO2": 0.12, "H2O": 0.10, "CO": 0.04, "H2": 0.005,
                "OH": 0.004, "O": 0.001, "H": 0.0005}


@dataclass(frozen=True)
class SyntheticConfig:
    """Parameters of the analytic flamelet library.

    Keys follow ``key0 / strain_step**j``.  The extinction factor of a
    flamelet is ``exp(-extinction_rate * (key / key0 - 1))``; flamelets whose
    factor is below ``extinction_threshold`` are flagged extinguished.  With
    the defaults, 55 of 100 flamelets survive.
    """

    n_flamelets: int = 100
    grid_size: int = DEFAULT_GRID_SIZE
    key0: float = 2.0e-4
    strain_step: float = 0.99
    extinction_rate: float = 2.0
    extinction_threshold: float = 0.23
    flame_center: float = 0.55
    center_shift: float = 0.05
    z_width: float = 0.1
    fuel_mass_fraction: float = 0.5
    oxidizer_o2: float = 0.232
    oxidizer_ar: float = 0.0128
    species: tuple[str, ...] = GRI30_SPECIES

    def validate(self) -> None:
        if self.n_flamelets < 2:
            raise ConfigError("n_flamelets must be >= 2")
        if self.grid_size < 3:
            raise ConfigError("grid_size must be >= 3")
        if not self.key0 > 0:
            raise ConfigError("key0 must be positive")
        if not 0 < self.strain_step < 1:
            raise ConfigError("strain_step must lie in (0, 1)")
        if self.extinction_rate < 0 or self.extinction_threshold < 0:
            raise ConfigError("extinction parameters must be non-negative")
        if not 0 < self.z_width:
            raise ConfigError("z_width must be positive")
        missing = [n for n in KEY_SPECIES + ("N2",) if n not in self.species]
        if missing:
            raise ConfigError(f"species list lacks {missing}")

    def keys(self) -> np.ndarray:
        j = np.arange(self.n_flamelets)
        return self.key0 / self.strain_step ** j

    def extinction_factor(self, key: float) -> float:
        return math.exp(-self.extinction_rate * (key / self.key0 - 1.0))


def _gauss(x, center, width):
    return np.exp(-0.5 * ((x - center) / width) ** 2)


def mixture_fraction(x: np.ndarray, z_width: float = 0.1) -> np.ndarray:
    """Logistic mixture-fraction profile, 1 at the fuel side and 0 at the air side."""
    sig = lambda t: 1.0 / (1.0 + np.exp(-t))  # noqa: E731
    lo, hi = sig(-0.5 / z_width), sig(0.5 / z_width)
    return (sig((0.5 - np.asarray(x)) / z_width) - lo) / (hi - lo)


def synthetic_source_terms(x: np.ndarray, key: float, config: SyntheticConfig) -> np.ndarray:
    """Analytic key-species source terms of one synthetic flamelet, shape (n, k)."""
    ratio = key / config.key0
    ext = config.extinction_factor(key)
    center = config.flame_center + config.center_shift * (ratio - 1.0)
    out = np.zeros((len(x), len(KEY_SPECIES)))
    for col, name in enumerate(KEY_SPECIES):
        for amp, offset, width in _SOURCE_BUMPS[name]:
            out[:, col] += amp * _gauss(x, center + offset, width / math.sqrt(ratio))
    return out * (ext * ratio)


def generate_synthetic(config: SyntheticConfig | None = None, seed: int = 7,
                       drop_extinguished: bool = True) -> FlameletDataset:
    """Build an analytic flamelet library.

    The seed only drives the placement and size of the minor-species mass
    fraction bumps; source terms are closed-form functions of ``x_pos`` and
    the key, so they act as an exact oracle for evaluation.
    """
    config = config or SyntheticConfig()
    config.validate()
    species = SpeciesTable.from_names(config.species)
    names = species.names
    s = len(names)
    key_heats = species.key_heats()

    rng = np.random.default_rng(seed)
    offsets = rng.uniform(-0.08, 0.08, size=s)
    widths = rng.uniform(0.04, 0.09, size=s)
    minor_peaks = 10.0 ** rng.uniform(-5.0, math.log10(2e-3), size=s)

    x = np.linspace(0.0, 1.0, config.grid_size)
    z = mixture_fraction(x, config.z_width)
    i_n2 = names.index("N2")
    boundary = {"CH4", "O2", "AR", "N2"}

    flamelets = []
    for key in config.keys():
        key = float(key)
        ratio = key / config.key0
        ext = config.extinction_factor(key)
        center = config.flame_center + config.center_shift * (ratio - 1.0)
        amp = ext / math.sqrt(ratio)

        y = np.zeros((len(x), s))
        for i, name in enumerate(names):
            if name in boundary:
                continue
            peak = _MAJOR_PEAKS.get(name, minor_peaks[i])
            y[:, i] = peak * amp * _gauss(x, center + offsets[i], widths[i] / math.sqrt(ratio))
        consumption = 0.3 * ext * _gauss(x, center, 0.08)
        y[:, names.index("CH4")] = config.fuel_mass_fraction * z * (1.0 - consumption)
        y[:, names.index("O2")] = config.oxidizer_o2 * (1.0 - z) * (1.0 - consumption)
        if "AR" in names:
            y[:, names.index("AR")] = config.oxidizer_ar * (1.0 - z)
        y[:, i_n2] = 1.0 - y.sum(axis=1)

        sdot = synthetic_source_terms(x, key, config)
        flamelets.append(Flamelet(
            key=key,
            x_pos=x.copy(),
            z_mix=z.copy(),
            mass_fractions=y,
            source_terms=sdot,
            source_energy=sdot @ key_heats,
            extinguished=ext < config.extinction_threshold,
        ))
    dataset = FlameletDataset(species, tuple(flamelets))
    return dataset.without_extinguished() if drop_extinguished else dataset


# --------------------------------------------------------------------------
# Linear encoding
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EncoderWeights:
    """Species-to-progress-variable loadings, one row per species."""

    w: np.ndarray
    species: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.w.ndim != 2:
            raise DimensionMismatch("encoder weights must be a matrix")
        if not np.all(np.isfinite(self.w)):
            raise ConfigError("encoder weights must be finite")
        if self.species is not None and len(self.species) != self.w.shape[0]:
            raise DimensionMismatch("species list length differs from weight rows")

    @property
    def p(self) -> int:
        return self.w.shape[1]

    @classmethod
    def identity(cls, species, p: int = DEFAULT_EMBED_DIM) -> "EncoderWeights":
        """Select the first ``p`` species mass fractions as progress variables."""
        species = tuple(species)
        if p >= len(species):
            raise ConfigError("embedding dimension must be smaller than species count")
        return cls(np.eye(len(species), p), species)

    def fingerprint(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.w).tobytes()).hexdigest()[:16]


def save_encoder(weights: EncoderWeights, path) -> None:
    species = weights.species or tuple(f"species_{i}" for i in range(weights.w.shape[0]))
    lines = ["# species: " + ",".join(species)]
    lines += [",".join(_fmt(v) for v in row) for row in weights.w]
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_encoder(path) -> EncoderWeights:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text or not text[0].startswith("# species:"):
        raise SchemaError(f"{path}: first line must be '# species: name_1,...'")
    species = tuple(n.strip() for n in text[0].split(":", 1)[1].split(","))
    try:
        rows = [[float(c) for c in line.split(",")] for line in text[1:] if line.strip()]
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from None
    if len({len(r) for r in rows}) != 1:
        raise SchemaError(f"{path}: ragged weight rows")
    w = np.array(rows, dtype=float)
    if w.shape[0] != len(species):
        raise DimensionMismatch(f"{path}: {w.shape[0]} rows for {len(species)} species")
    return EncoderWeights(w, species)


@dataclass(frozen=True)
class EncodedPoint:
    input: np.ndarray
    targets: np.ndarray
    flamelet_key: float
    x_pos: float


@dataclass(frozen=True)
class EncodedSet:
    """Encoded points stored as aligned arrays.

    ``ids`` are positions in the full encoded dataset and stay attached to
    their rows through every subset, so partitions can be written as
    manifests and re-applied later.
    """

    inputs: np.ndarray  # (M, p + 1)
    targets: np.ndarray  # (M, k + 1)
    keys: np.ndarray  # (M,)
    x_pos: np.ndarray  # (M,)
    ids: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.ids is None:
            object.__setattr__(self, "ids", np.arange(len(self.inputs)))
        m = len(self.inputs)
        if not (len(self.targets) == len(self.keys) == len(self.x_pos) == len(self.ids) == m):
            raise DimensionMismatch("encoded arrays have different lengths")

    def __len__(self) -> int:
        return len(self.inputs)

    def __getitem__(self, i: int) -> EncodedPoint:
        return EncodedPoint(self.inputs[i], self.targets[i], float(self.keys[i]), float(self.x_pos[i]))

    def subset(self, rows) -> "EncodedSet":
        rows = np.asarray(rows, dtype=np.int64)
        return EncodedSet(self.inputs[rows], self.targets[rows], self.keys[rows],
                          self.x_pos[rows], self.ids[rows])

    def unique_keys(self) -> list[float]:
        return [float(k) for k in np.unique(self.keys)]

    def rows_for_keys(self, keys) -> np.ndarray:
        """Row indices of every point of each key, concatenated in ``keys`` order."""
        parts = [np.flatnonzero(self.keys == k) for k in keys]
        return np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)

    def rows_for_ids(self, ids) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64)
        order = np.argsort(self.ids, kind="stable")
        pos = np.searchsorted(self.ids, ids, sorter=order)
        pos = np.clip(pos, 0, len(self.ids) - 1)
        rows = order[pos]
        if len(ids) and not np.array_equal(self.ids[rows], ids):
            raise KeyError("point ids not present in this set")
        return rows

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for arr in (self.inputs, self.targets, self.keys, self.x_pos, self.ids):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()[:16]

    @property
    def input_dim(self) -> int:
        return self.inputs.shape[1]

    @property
    def target_dim(self) -> int:
        return self.targets.shape[1]


def encode(dataset: FlameletDataset, weights: EncoderWeights) -> EncodedSet:
    """Project mass fractions onto progress variables and append the mixture fraction."""
    s = dataset.species.size
    if weights.w.shape[0] != s:
        raise DimensionMismatch(f"encoder has {weights.w.shape[0]} rows, dataset has {s} species")
    if weights.species is not None and tuple(weights.species) != dataset.species.names:
        raise DimensionMismatch("encoder species order differs from dataset species")
    if not dataset.flamelets:
        raise EmptyDataset("nothing to encode")
    y = np.concatenate([f.mass_fractions for f in dataset.flamelets])
    z = np.concatenate([f.z_mix for f in dataset.flamelets])
    sdot = np.concatenate([f.source_terms for f in dataset.flamelets])
    se = np.concatenate([f.source_energy for f in dataset.flamelets])
    keys = np.concatenate([np.full(len(f), f.key) for f in dataset.flamelets])
    x = np.concatenate([f.x_pos for f in dataset.flamelets])
    inputs = np.column_stack([y @ weights.w, z])
    targets = np.column_stack([sdot, se])
    return EncodedSet(inputs, targets, keys, x)


def split_holdout(data: EncodedSet, strategy, fraction: float, seed: int) -> tuple[EncodedSet, EncodedSet]:
    """Partition into (train_val, holdout).

    Under the flamelets strategy whole flamelets are assigned to one side;
    under the points strategy individual points are.  The holdout receives
    ``round(fraction * units)`` units.  Both halves keep the input order.
    """
    strategy = EnsembleStrategy.parse(strategy)
    if not 0 < fraction < 1:
        raise ConfigError("holdout fraction must lie in (0, 1)")
    rng = SplitMix64(seed)
    if strategy is EnsembleStrategy.FLAMELETS:
        units = data.unique_keys()
    else:
        units = list(range(len(data)))
    n_hold = round_half_up(fraction * len(units))
    if n_hold == 0 or n_hold == len(units):
        raise ConfigError(f"holdout fraction {fraction} leaves one side empty ({len(units)} units)")
    held = rng.shuffle(units)[:n_hold]
    mask = np.zeros(len(data), dtype=bool)
    if strategy is EnsembleStrategy.FLAMELETS:
        mask[data.rows_for_keys(held)] = True
    else:
        mask[np.asarray(held, dtype=np.int64)] = True
    return data.subset(np.flatnonzero(~mask)), data.subset(np.flatnonzero(mask))
