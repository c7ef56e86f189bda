import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from geacarbon.errors import DataError
from geacarbon.panel import (
    PanelDataset,
    absorbed_effects,
    correlation_matrix,
    demean,
    describe,
    within_transform,
)

from conftest import make_panel


def _frame(N=3, T=4):
    return pd.DataFrame({
        "id": np.repeat(["c", "a", "b"][:N], T),
        "t": np.tile(np.arange(2001, 2001 + T), N),
        "v": np.arange(N * T, dtype=float),
    })


def test_from_frame_renames_and_sorts_entity_major():
    p = PanelDataset.from_frame(_frame().sample(frac=1, random_state=1), "id", "t")
    assert list(p.frame.columns) == ["entity", "year", "v"]
    assert p.entities == ["a", "b", "c"]
    assert p.years == [2001, 2002, 2003, 2004]
    np.testing.assert_array_equal(p.column("v")[:4], [4, 5, 6, 7])


def test_unbalanced_rejected():
    with pytest.raises(DataError, match="unbalanced"):
        PanelDataset.from_frame(_frame().iloc[:-1], "id", "t")


def test_duplicates_and_non_finite_rejected():
    df = _frame()
    with pytest.raises(DataError):
        PanelDataset.from_frame(pd.concat([df, df.iloc[:1]]), "id", "t")
    df.loc[3, "v"] = np.nan
    with pytest.raises(DataError):
        PanelDataset.from_frame(df, "id", "t")


def test_unknown_column_and_role():
    p = PanelDataset.from_frame(_frame(), "id", "t")
    with pytest.raises(DataError):
        p.column("nope")
    with pytest.raises(DataError):
        PanelDataset.from_frame(_frame(), "id", "t", roles={"v": "boss"})


def test_csv_round_trip(tmp_path):
    p = PanelDataset.from_frame(_frame(), "id", "t")
    p.to_csv(tmp_path / "p.csv")
    q = PanelDataset.read_csv(tmp_path / "p.csv")
    pd.testing.assert_frame_equal(p.frame, q.frame)


def test_selection_keeps_balance():
    p = PanelDataset.from_frame(_frame(), "id", "t")
    assert len(p.select_entities(["a", "c"])) == 8
    assert p.select_years([2002, 2003]).n_years == 2
    assert len(p.filter(lambda e, y: e != "b")) == 8


def _loop_two_way(x, N, T):
    out = np.empty_like(x)
    cube = x.reshape(N, T)
    grand = cube.mean()
    for i in range(N):
        for t in range(T):
            out[i * T + t] = cube[i, t] - cube[i].mean() - cube[:, t].mean() + grand
    return out


def test_two_way_demean_matches_loop(rng):
    x = rng.standard_normal(5 * 7)
    np.testing.assert_allclose(demean(x, 5, 7, "both"), _loop_two_way(x, 5, 7), atol=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 8), st.integers(2, 8), st.sampled_from(["both", "entity", "time"]),
       st.data())
def test_demean_is_idempotent_and_sums_to_zero(N, T, effects, data):
    x = data.draw(arrays(float, N * T, elements=st.floats(-1e3, 1e3)))
    w = demean(x, N, T, effects)
    np.testing.assert_allclose(demean(w, N, T, effects), w, atol=1e-9)
    cube = w.reshape(N, T)
    if effects in ("both", "entity"):
        np.testing.assert_allclose(cube.sum(axis=1), 0, atol=1e-8)
    if effects in ("both", "time"):
        np.testing.assert_allclose(cube.sum(axis=0), 0, atol=1e-8)


def test_absorbed_counts():
    assert absorbed_effects(30, 13, "both") == 41
    assert absorbed_effects(30, 13, "entity") == 29
    assert absorbed_effects(30, 13, "time") == 12
    assert absorbed_effects(30, 13, "none") == 0


def test_within_transform_only_touches_named_columns(rng):
    p, _ = make_panel(rng, 4, 5, 2)
    w = within_transform(p, ["x1"])
    np.testing.assert_array_equal(w.column("x2"), p.column("x2"))
    assert abs(w.column("x1").sum()) < 1e-12


def test_describe_uses_sample_std(rng):
    p, _ = make_panel(rng, 4, 5, 1)
    d = describe(p, ["y"]).iloc[0]
    y = p.column("y")
    assert d["obs"] == 20
    assert d["std"] == pytest.approx(np.std(y, ddof=1))
    assert (d["min"], d["max"]) == (y.min(), y.max())


def test_correlation_matrix_symmetric_unit_diagonal(rng):
    p, _ = make_panel(rng, 5, 5, 3)
    c = correlation_matrix(p, ["x1", "x2", "x3"]).to_numpy()
    np.testing.assert_allclose(c, c.T)
    np.testing.assert_array_equal(np.diag(c), 1.0)
    assert np.all(np.abs(c) <= 1)


def test_correlation_rejects_constant_column(rng):
    p, _ = make_panel(rng, 3, 3, 1)
    p = p.with_columns(k=np.ones(9))
    with pytest.raises(DataError):
        correlation_matrix(p, ["x1", "k"])
