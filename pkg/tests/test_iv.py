import numpy as np
import pandas as pd
import pytest

from geacarbon.errors import DataError
from geacarbon.models import ModelSpec, fixed_effects, tsls
from geacarbon.panel import PanelDataset


def _iv_panel(rng, N=20, T=8, rho=0.6, strength=1.0):
    """x endogenous through u; z shifts x and is excluded from y."""
    a = rng.standard_normal(N)
    g = rng.standard_normal(T)
    z = rng.standard_normal((N, T))
    w = rng.standard_normal((N, T))
    u = rng.standard_normal((N, T))
    x = strength * z + 0.5 * w + rho * u + rng.standard_normal((N, T)) + a[:, None]
    y = 1.5 * x - 0.7 * w + a[:, None] + g[None, :] + u
    df = pd.DataFrame({
        "entity": np.repeat([f"e{i:02d}" for i in range(N)], T),
        "year": np.tile(np.arange(2000, 2000 + T), N),
        "y": y.ravel(), "x": x.ravel(), "w": w.ravel(), "z": z.ravel(),
    })
    return PanelDataset.from_frame(df)


def _dummies(p):
    ent = pd.get_dummies(p.frame["entity"], drop_first=True).to_numpy(dtype=float)
    yr = pd.get_dummies(p.frame["year"], drop_first=True).to_numpy(dtype=float)
    return np.column_stack([np.ones(len(p)), ent, yr])


def _closed_form(p, x, z, controls):
    """Just-identified IV on the full dummy design: b = (Z'X)^-1 Z'y."""
    D = _dummies(p)
    X = np.column_stack([p.matrix([x, *controls]), D])
    Z = np.column_stack([p.matrix([z, *controls]), D])
    b = np.linalg.solve(Z.T @ X, Z.T @ p.column("y"))
    return b, X, Z


SPEC = ModelSpec("y", "x", ("w",))


def test_tsls_matches_closed_form(rng):
    p = _iv_panel(rng)
    r = tsls(p, SPEC, "z")
    b, _, _ = _closed_form(p, "x", "z", ["w"])
    np.testing.assert_allclose(r.second_stage.params[1:], b[:2], rtol=1e-8)


def test_tsls_cluster_se_from_structural_residuals(rng):
    p = _iv_panel(rng)
    r = tsls(p, SPEC, "z")
    b, X, Z = _closed_form(p, "x", "z", ["w"])
    u = p.column("y") - X @ b
    A = np.linalg.inv(Z.T @ X)
    groups = p.frame["entity"].to_numpy()
    meat = np.zeros((Z.shape[1],) * 2)
    for gid in np.unique(groups):
        s = Z[groups == gid].T @ u[groups == gid]
        meat += np.outer(s, s)
    n, G, k = len(u), p.n_entities, 3
    V = G / (G - 1) * (n - 1) / (n - k) * A @ meat @ A.T
    np.testing.assert_allclose(r.second_stage.cov[1:, 1:], V[:2, :2], rtol=1e-7)


def test_instrument_equal_to_regressor_gives_fe(rng):
    p = _iv_panel(rng)
    p = p.with_columns(x_copy=p.column("x"))
    r = tsls(p, SPEC, "x_copy")
    fe = fixed_effects(p, SPEC)
    np.testing.assert_array_equal(r.second_stage.params, fe.params)
    np.testing.assert_array_equal(r.second_stage.cov, fe.cov)


def test_first_stage_f_is_squared_robust_t(rng):
    p = _iv_panel(rng)
    r = tsls(p, SPEC, "z")
    t = r.first_stage.tvalues[r.first_stage.index("z")]
    assert r.first_stage_F == pytest.approx(t**2, rel=1e-12)
    assert not r.weak_instrument


def test_weak_instrument_flag(rng):
    p = _iv_panel(rng, strength=0.0)
    r = tsls(p, SPEC, "z")
    assert r.first_stage_F < 10
    assert r.weak_instrument
    assert r.second_stage.diagnostics["weak_instrument"]


def test_instrument_already_in_model(rng):
    p = _iv_panel(rng)
    with pytest.raises(DataError):
        tsls(p, SPEC, "w")


def test_tsls_less_biased_than_fe_under_endogeneity(rng):
    wins = 0
    for _ in range(20):
        p = _iv_panel(rng, rho=1.0)
        b_iv = tsls(p, SPEC, "z").second_stage.coef("x")
        b_fe = fixed_effects(p, SPEC).coef("x")
        wins += abs(b_iv - 1.5) < abs(b_fe - 1.5)
    assert wins >= 17
