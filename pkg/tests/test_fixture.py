import json

import numpy as np
import pytest

from geacarbon import carbon
from geacarbon.fixture import (
    PLANTED_COEFFICIENT,
    PROVINCES,
    TABLE2_TARGETS,
    calibrated_sample,
    make_fixture,
)
from geacarbon.panel import PanelDataset, describe
from geacarbon.text_index import KeywordDictionary, WhitespaceSegmenter, index_corpus, load_corpus


@pytest.fixture(scope="module")
def fx(tmp_path_factory):
    return make_fixture(tmp_path_factory.mktemp("fx"), seed=42)


def test_calibrated_sample_hits_all_four_moments():
    x = calibrated_sample(390, 0.592, 0.208, 0.122, 1.405)
    assert x.mean() == pytest.approx(0.592, rel=1e-9)
    assert x.std(ddof=1) == pytest.approx(0.208, rel=1e-9)
    assert (x.min(), x.max()) == (pytest.approx(0.122), pytest.approx(1.405))


def test_panel_shape_and_moments(fx):
    p = PanelDataset.read_csv(fx.panel)
    assert (p.n_entities, p.n_years) == (30, 13)
    assert p.entities == sorted(PROVINCES)
    d = describe(p, list(TABLE2_TARGETS)).set_index("variable")
    for var, target in TABLE2_TARGETS.items():
        for stat, t in zip(("mean", "std", "min", "max"), target):
            assert d.loc[var, stat] == pytest.approx(t, rel=0.02, abs=5e-4), (var, stat)


def test_moments_file_records_planted_coefficient(fx):
    m = json.loads(fx.moments.read_text(encoding="utf-8"))
    assert m["planted"]["coefficient"] == PLANTED_COEFFICIENT
    assert m["seed"] == 42
    assert set(m["targets"]) == set(TABLE2_TARGETS)


def test_corpus_reproduces_index_column(fx):
    p = PanelDataset.read_csv(fx.panel)
    idx = index_corpus(load_corpus(fx.corpus), KeywordDictionary.default(), WhitespaceSegmenter())
    assert len(idx) == 390
    np.testing.assert_allclose([ix.gea for ix in idx], p.column("GEA"), rtol=1e-12)
    counts = index_corpus(load_corpus(fx.corpus), KeywordDictionary.default(),
                          WhitespaceSegmenter(), variant="count")
    np.testing.assert_array_equal([ix.gea for ix in counts], p.column("NEW_GEA"))


def test_fuel_accounts_reproduce_co2(fx):
    p = PanelDataset.read_csv(fx.panel)
    res = carbon.compute_emissions(carbon.load_energy_file(fx.energy),
                                   carbon.load_factor_file(fx.factors),
                                   carbon.load_population_file(fx.population))
    np.testing.assert_allclose([r.per_capita for r in res], p.column("CO2"), rtol=1e-12)


def test_same_seed_same_bytes_different_seed_different_data(tmp_path):
    a = make_fixture(tmp_path / "a", seed=3)
    b = make_fixture(tmp_path / "b", seed=3)
    c = make_fixture(tmp_path / "c", seed=4)
    assert a.panel.read_bytes() == b.panel.read_bytes()
    assert a.panel.read_bytes() != c.panel.read_bytes()
    pc = PanelDataset.read_csv(c.panel)
    d = describe(pc, ["CO2", "GEA"]).set_index("variable")
    assert d.loc["CO2", "mean"] == pytest.approx(10.151, rel=0.02)
    assert d.loc["GEA", "std"] == pytest.approx(0.208, rel=0.02)


def test_custom_targets_override_defaults(tmp_path):
    out = make_fixture(tmp_path, seed=1, targets={"IT": (0.1, 0.05, 0.01, 0.4)})
    d = describe(PanelDataset.read_csv(out.panel), ["IT"]).iloc[0]
    assert d["mean"] == pytest.approx(0.1, rel=1e-6)
    assert d["max"] == pytest.approx(0.4)
