import numpy as np
import pytest

from geacarbon.errors import DataError, EstimationError
from geacarbon.models import (
    ModelSpec,
    center,
    fixed_effects,
    interaction_name,
    moderation_fit,
    simple_slopes,
)

from conftest import make_panel


def test_center_subtracts_grand_mean(rng):
    p, _ = make_panel(rng, 5, 4, 2)
    c = center(p, ["x1"])
    assert abs(c.column("C_x1").mean()) < 1e-14
    np.testing.assert_allclose(c.column("C_x1") + p.column("x1").mean(), p.column("x1"))


def test_moderation_equals_fe_with_hand_built_interaction(rng):
    p, _ = make_panel(rng, 10, 6, 3)
    r = moderation_fit(p, ModelSpec("y", "x1", ("x3",)), "x2")
    f, m = p.column("x1"), p.column("x2")
    q = p.with_columns(inter=(f - f.mean()) * (m - m.mean()))
    fe = fixed_effects(q, ModelSpec("y", "x1", ("inter", "x2", "x3")))
    np.testing.assert_allclose(r.params, fe.params, rtol=1e-10)
    np.testing.assert_allclose(r.cov, fe.cov, rtol=1e-10)
    assert r.names[2] == interaction_name("x1", "x2") == "C_x1 × C_x2"


def test_planted_interaction_recovered(rng):
    N, T = 30, 10
    p, _ = make_panel(rng, N, T, 2, beta=[0.0, 0.0], noise_sd=0.2)
    f, m = p.column("x1"), p.column("x2")
    y = p.column("y") - 1.0 * f + 0.8 * (f - f.mean()) * (m - m.mean())
    p = p.with_columns(y=y)
    r = moderation_fit(p, ModelSpec("y", "x1"), "x2")
    assert r.coef(interaction_name("x1", "x2")) == pytest.approx(0.8, abs=0.05)


def test_simple_slopes_delta_method(rng):
    p, _ = make_panel(rng, 10, 6, 2)
    r = moderation_fit(p, ModelSpec("y", "x1"), "x2")
    mbar, msd = p.column("x2").mean(), p.column("x2").std(ddof=1)
    slopes = simple_slopes(r)
    assert [s[0] for s in slopes] == pytest.approx([mbar - msd, mbar, mbar + msd])
    i, j = r.index("x1"), r.index(interaction_name("x1", "x2"))
    b, V = r.params, r.cov
    for level, slope, se in slopes:
        dm = level - mbar
        assert slope == pytest.approx(b[i] + b[j] * dm)
        g = np.zeros(len(b))
        g[i], g[j] = 1.0, dm
        assert se == pytest.approx(np.sqrt(g @ V @ g))
    # at the mean the simple slope is the focal coefficient itself
    assert slopes[1][1] == pytest.approx(r.coef("x1"))
    assert slopes[1][2] == pytest.approx(r.stderr("x1"))


def test_simple_slopes_custom_levels_and_guard(rng):
    p, _ = make_panel(rng, 8, 5, 2)
    r = moderation_fit(p, ModelSpec("y", "x1"), "x2")
    assert [s[0] for s in simple_slopes(r, [0.0, 1.0])] == [0.0, 1.0]
    with pytest.raises(EstimationError):
        simple_slopes(fixed_effects(p, ModelSpec("y", "x1")))


def test_moderator_cannot_be_regressor(rng):
    p, _ = make_panel(rng, 5, 4, 2)
    with pytest.raises(DataError):
        moderation_fit(p, ModelSpec("y", "x1", ("x2",)), "x2")
