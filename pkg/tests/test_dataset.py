import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from flamelet_ensemble.dataset import (
    KEY_SPECIES,
    EncodedSet,
    EncoderWeights,
    EnsembleStrategy,
    Flamelet,
    FlameletDataset,
    SpeciesTable,
    SyntheticConfig,
    csv_header,
    dataset_to_csv_text,
    encode,
    generate_synthetic,
    load_csv,
    load_encoder,
    mixture_fraction,
    save_csv,
    save_encoder,
    split_holdout,
    synthetic_source_terms,
)
from flamelet_ensemble.errors import (
    ConfigError,
    DimensionMismatch,
    EmptyDataset,
    MassFractionSum,
    SchemaError,
)

from conftest import SMALL

SPECIES = ("H2", "O2", "OH", "H2O", "CO", "CO2", "CH4", "N2")


def _row(key, x, y, flag=0, sdot=None, se=0.0):
    sdot = sdot if sdot is not None else [0.0] * 7
    return ",".join(repr(float(v)) for v in [key, x, 0.5]) + f",{flag}," + \
        ",".join(repr(float(v)) for v in [*y, *sdot, se])


def _write(tmp_path, rows, species=SPECIES):
    path = tmp_path / "data.csv"
    path.write_text(",".join(csv_header(species)) + "\n" + "\n".join(rows) + "\n")
    return path


def _unit_y(i, s=len(SPECIES)):
    y = np.zeros(s)
    y[i] = 1.0
    return y


# ---------------------------------------------------------------- load_csv

def test_load_csv_paper_scale(tmp_path, default_dataset):
    path = tmp_path / "flamelets.csv"
    save_csv(default_dataset, path)
    loaded = load_csv(path)
    assert len(loaded.flamelets) == 55
    assert loaded.n_points == 16445
    assert all(len(f) == 299 for f in loaded.flamelets)


def test_load_csv_header_only(tmp_path):
    with pytest.raises(EmptyDataset):
        load_csv(_write(tmp_path, []))


def test_load_csv_mass_fraction_sum(tmp_path):
    y = _unit_y(7) * 0.5
    with pytest.raises(MassFractionSum) as info:
        load_csv(_write(tmp_path, [_row(1e-4, 0.0, y)]))
    assert info.value.row == 1
    assert "row 1" in str(info.value)


def test_load_csv_reports_later_row(tmp_path):
    rows = [_row(1e-4, 0.0, _unit_y(7)), _row(1e-4, 0.5, _unit_y(7)), _row(1e-4, 1.0, _unit_y(7) * 0.9)]
    with pytest.raises(MassFractionSum) as info:
        load_csv(_write(tmp_path, rows))
    assert info.value.row == 3


def test_load_csv_missing_column(tmp_path):
    header = csv_header(SPECIES)[:-1]
    path = tmp_path / "bad.csv"
    path.write_text(",".join(header) + "\n")
    with pytest.raises(SchemaError, match="missing"):
        load_csv(path)


def test_load_csv_extra_column(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(",".join(csv_header(SPECIES) + ["T"]) + "\n")
    with pytest.raises(SchemaError, match="extra"):
        load_csv(path)


def test_load_csv_non_numeric(tmp_path):
    row = _row(1e-4, 0.0, _unit_y(7)).replace("0.5", "abc", 1)
    with pytest.raises(SchemaError, match="row 1.*abc"):
        load_csv(_write(tmp_path, [row]))


def test_load_csv_duplicate_point(tmp_path):
    rows = [_row(1e-4, 0.25, _unit_y(7)), _row(1e-4, 0.25, _unit_y(7))]
    with pytest.raises(SchemaError, match="duplicate"):
        load_csv(_write(tmp_path, rows))


def test_load_csv_drops_extinguished_and_sorts(tmp_path):
    rows = [
        _row(2e-4, 1.0, _unit_y(7)),
        _row(2e-4, 0.0, _unit_y(7)),
        _row(1e-4, 0.5, _unit_y(7)),
        _row(1e-4, 0.0, _unit_y(7)),
        _row(3e-4, 0.0, _unit_y(7), flag=1),
    ]
    ds = load_csv(_write(tmp_path, rows))
    assert ds.keys == [1e-4, 2e-4]
    assert ds.n_extinguished_dropped == 1
    assert list(ds.flamelet(2e-4).x_pos) == [0.0, 1.0]


def test_species_table_invariants():
    with pytest.raises(SchemaError):
        SpeciesTable.from_names(["A", "A", "B", "C", "D", "E", "F"])
    with pytest.raises(SchemaError):
        SpeciesTable.from_names(["A", "B"])
    table = SpeciesTable.from_names(SPECIES)
    assert table.heats_of_formation[SPECIES.index("H2O")] == pytest.approx(-241.826e6 / 18.015)


# ---------------------------------------------------------- synthetic data

def test_synthetic_defaults_survivors(default_dataset):
    assert 50 <= len(default_dataset.flamelets) <= 60
    assert all(len(f) == 299 for f in default_dataset.flamelets)
    assert default_dataset.n_extinguished_dropped == (100 - len(default_dataset.flamelets)) * 299


def test_synthetic_no_extinction():
    ds = generate_synthetic(SyntheticConfig(n_flamelets=2, extinction_threshold=0.0), seed=7)
    assert len(ds.flamelets) == 2


def test_synthetic_deterministic():
    cfg = SyntheticConfig(n_flamelets=5, grid_size=21)
    assert dataset_to_csv_text(generate_synthetic(cfg, 11)) == dataset_to_csv_text(generate_synthetic(cfg, 11))
    assert dataset_to_csv_text(generate_synthetic(cfg, 11)) != dataset_to_csv_text(generate_synthetic(cfg, 12))


def test_synthetic_keys_follow_strain_sequence(default_dataset):
    keys = np.array(default_dataset.keys)
    j = np.arange(len(keys))
    np.testing.assert_allclose(keys, 2.0e-4 / 0.99 ** j, rtol=1e-15)


@pytest.mark.parametrize("bad", [dict(n_flamelets=1), dict(grid_size=2), dict(strain_step=1.0),
                                 dict(key0=0.0), dict(species=("A", "B"))])
def test_synthetic_invalid_config(bad):
    with pytest.raises(ConfigError):
        generate_synthetic(SyntheticConfig(**bad))


def test_synthetic_physical_invariants(default_dataset):
    for f in default_dataset.flamelets:
        assert np.all(f.mass_fractions >= 0) and np.all(f.mass_fractions <= 1)
        np.testing.assert_allclose(f.mass_fractions.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(np.diff(f.x_pos) > 0)
        assert f.z_mix[0] == pytest.approx(1.0) and f.z_mix[-1] == pytest.approx(0.0, abs=1e-15)
        assert np.all(np.diff(f.z_mix) < 0)


def test_synthetic_source_energy_consistency(default_dataset):
    # oracle: explicit per-point sum over the key species
    h = {n: default_dataset.species.heats_of_formation[default_dataset.species.names.index(n)]
         for n in KEY_SPECIES}
    for f in default_dataset.flamelets[::9]:
        for i in range(0, len(f), 37):
            expected = math.fsum(f.source_terms[i, c] * h[n] for c, n in enumerate(KEY_SPECIES))
            assert f.source_energy[i] == pytest.approx(expected, rel=1e-9, abs=1e-6)


def test_synthetic_amplitude_decays_with_key(default_dataset):
    peaks = [f.mass_fractions[:, default_dataset.species.names.index("CO2")].max()
             for f in default_dataset.flamelets]
    assert np.all(np.diff(peaks) < 0)


def test_csv_round_trip_bit_exact(tmp_path, small_dataset):
    path = tmp_path / "rt.csv"
    save_csv(small_dataset, path)
    loaded = load_csv(path)
    assert loaded.species.names == small_dataset.species.names
    assert loaded.keys == small_dataset.keys
    for a, b in zip(small_dataset.flamelets, loaded.flamelets):
        for name in ("x_pos", "z_mix", "mass_fractions", "source_terms", "source_energy"):
            assert np.array_equal(getattr(a, name), getattr(b, name)), name


@given(hnp.arrays(np.float64, (4, 7), elements=st.floats(-1e12, 1e12, allow_subnormal=True)),
       hnp.arrays(np.float64, 4, elements=st.floats(-1e15, 1e15)),
       st.floats(1e-8, 1e3))
def test_csv_round_trip_arbitrary_values(sdot, se, key):
    import tempfile
    from pathlib import Path

    species = SpeciesTable.from_names(SPECIES)
    y = np.zeros((4, len(SPECIES)))
    y[:, -1] = 1.0
    f = Flamelet(key, np.array([0.0, 0.1, 0.7, 1.0]), np.array([1.0, 0.8, 0.1, 0.0]), y, sdot, se)
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "rt.csv"
        save_csv(FlameletDataset(species, (f,)), path)
        back = load_csv(path).flamelets[0]
    assert back.key == key
    assert np.array_equal(back.source_terms, sdot)
    assert np.array_equal(back.source_energy, se)


# ----------------------------------------------------------------- encoding

def test_encode_one_hot_selects_row(small_dataset):
    s = small_dataset.species.size
    f = small_dataset.flamelets[0]
    y = np.zeros((1, s))
    y[0, 2] = 1.0
    one = Flamelet(f.key, np.array([0.3]), np.array([0.4]), y, np.zeros((1, 7)), np.zeros(1))
    ds = FlameletDataset(small_dataset.species, (one,))
    w = np.zeros((s, 4))
    w[2] = [1, 2, 3, 4]
    enc = encode(ds, EncoderWeights(w))
    np.testing.assert_array_equal(enc.inputs[0], [1, 2, 3, 4, 0.4])


def test_encode_zero_weights(small_dataset):
    enc = encode(small_dataset, EncoderWeights(np.zeros((small_dataset.species.size, 4))))
    assert np.all(enc.inputs[:, :4] == 0)
    np.testing.assert_array_equal(enc.inputs[:, 4], np.concatenate([f.z_mix for f in small_dataset.flamelets]))


def test_encode_matches_dot_product_oracle():
    rng = np.random.default_rng(0)
    species = SpeciesTable.from_names(["A", "B", "C", "D", "E", "F", "G"])
    y = rng.dirichlet(np.ones(7), size=5)
    w = rng.normal(size=(7, 2))
    f = Flamelet(1e-4, np.linspace(0, 1, 5), rng.uniform(size=5), y, rng.normal(size=(5, 7)), rng.normal(size=5))
    enc = encode(FlameletDataset(species, (f,)), EncoderWeights(w))
    for i in range(5):
        for j in range(2):
            assert enc.inputs[i, j] == pytest.approx(sum(y[i, a] * w[a, j] for a in range(7)), rel=1e-12)
    np.testing.assert_array_equal(enc.targets[:, :7], f.source_terms)
    np.testing.assert_array_equal(enc.targets[:, 7], f.source_energy)


def test_encode_dimension_mismatch(small_dataset):
    with pytest.raises(DimensionMismatch):
        encode(small_dataset, EncoderWeights(np.zeros((3, 4))))


@given(st.floats(-10, 10), st.floats(-10, 10), st.integers(0, 2**32 - 1))
def test_encode_linearity(alpha, beta, seed):
    rng = np.random.default_rng(seed)
    w = rng.normal(size=(9, 4))
    y1, y2 = rng.uniform(size=(2, 9))
    combined = (alpha * y1 + beta * y2) @ w
    separate = alpha * (y1 @ w) + beta * (y2 @ w)
    scale = np.abs(alpha * (y1 @ w)) + np.abs(beta * (y2 @ w)) + 1e-300
    assert np.all(np.abs(combined - separate) <= 1e-12 * scale + 1e-300)


def test_encoder_file_round_trip(tmp_path):
    w = EncoderWeights(np.random.default_rng(1).normal(size=(8, 4)), SPECIES)
    save_encoder(w, tmp_path / "w.csv")
    assert (tmp_path / "w.csv").read_text().startswith("# species: H2,O2,")
    back = load_encoder(tmp_path / "w.csv")
    assert back.species == SPECIES
    assert np.array_equal(back.w, w.w)


def test_encoder_file_requires_sidecar(tmp_path):
    (tmp_path / "w.csv").write_text("1,2\n3,4\n")
    with pytest.raises(SchemaError):
        load_encoder(tmp_path / "w.csv")


# ---------------------------------------------------------- holdout split

def _fake_encoded(n_flamelets, grid):
    keys = np.repeat(np.arange(1, n_flamelets + 1) * 1e-4, grid)
    m = len(keys)
    return EncodedSet(np.zeros((m, 5)), np.zeros((m, 8)), keys, np.tile(np.linspace(0, 1, grid), n_flamelets))


def test_split_flamelets_paper_counts():
    data = _fake_encoded(55, 299)
    train_val, holdout = split_holdout(data, "flamelets", 0.2, 7)
    assert len(holdout.unique_keys()) == 11
    assert len(train_val.unique_keys()) == 44
    assert len(holdout) == 11 * 299


def test_split_points_paper_counts():
    data = _fake_encoded(55, 299)
    train_val, holdout = split_holdout(data, EnsembleStrategy.POINTS, 0.2, 7)
    assert len(holdout) == 3289
    assert len(train_val) == 16445 - 3289


@pytest.mark.parametrize("strategy", ["flamelets", "points"])
def test_split_deterministic(small_encoded, strategy):
    a = split_holdout(small_encoded, strategy, 0.25, 5)
    b = split_holdout(small_encoded, strategy, 0.25, 5)
    assert np.array_equal(a[1].ids, b[1].ids) and np.array_equal(a[0].ids, b[0].ids)


def test_split_rejects_empty_side(small_encoded):
    with pytest.raises(ConfigError):
        split_holdout(small_encoded, "flamelets", 0.01, 0)
    with pytest.raises(ConfigError):
        split_holdout(small_encoded, "flamelets", 1.0, 0)


@given(st.integers(2, 30), st.integers(1, 12), st.floats(0.05, 0.95), st.integers(0, 2**63),
       st.sampled_from(["flamelets", "points"]))
def test_split_invariants(n_flamelets, grid, fraction, seed, strategy):
    data = _fake_encoded(n_flamelets, grid)
    units = n_flamelets if strategy == "flamelets" else len(data)
    n_hold = int(fraction * units + 0.5 + 1e-9)
    if n_hold in (0, units):
        with pytest.raises(ConfigError):
            split_holdout(data, strategy, fraction, seed)
        return
    train_val, holdout = split_holdout(data, strategy, fraction, seed)
    assert len(train_val) + len(holdout) == len(data)
    assert set(train_val.ids).isdisjoint(holdout.ids)
    if strategy == "flamelets":
        assert len(holdout.unique_keys()) == n_hold
        assert set(train_val.unique_keys()).isdisjoint(holdout.unique_keys())
    else:
        assert len(holdout) == n_hold


def test_mixture_fraction_monotone():
    x = np.linspace(0, 1, 101)
    z = mixture_fraction(x)
    assert z[0] == pytest.approx(1.0) and abs(z[-1]) < 1e-15
    assert np.all(np.diff(z) < 0)


def test_source_terms_signs():
    x = np.linspace(0, 1, 299)
    sdot = synthetic_source_terms(x, 2e-4, SMALL)
    o2, ch4, co2, h2o = (KEY_SPECIES.index(n) for n in ("O2", "CH4", "CO2", "H2O"))
    assert sdot[:, o2].max() <= 0 and sdot[:, ch4].max() <= 0
    assert sdot[:, co2].min() >= 0 and sdot[:, h2o].min() >= 0
