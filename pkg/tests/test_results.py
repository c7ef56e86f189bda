import numpy as np
import pandas as pd
import pytest

from geacarbon.errors import DataError, EstimationError
from geacarbon.models import ModelSpec, fixed_effects
from geacarbon.models.results import RESULT_CSV_COLUMNS, EstimationResult, stars_for

from conftest import make_panel


@pytest.mark.parametrize("p,stars", [(0.005, "***"), (0.01, "**"), (0.03, "**"), (0.05, "*"),
                                     (0.09, "*"), (0.1, ""), (0.5, "")])
def test_star_thresholds(p, stars):
    assert stars_for(p) == stars


def test_spec_validation():
    with pytest.raises(DataError):
        ModelSpec("y", "x", ("x",))
    with pytest.raises(DataError):
        ModelSpec("y", "y")
    with pytest.raises(DataError):
        ModelSpec("y", "x", effects="random")
    with pytest.raises(DataError):
        ModelSpec("y", "x", se_flavor="hc3")


def test_csv_and_json_round_trip(rng, tmp_path):
    p, _ = make_panel(rng, 6, 5, 2)
    r = fixed_effects(p, ModelSpec("y", "x1", ("x2",)))
    r.to_csv(tmp_path / "r.csv")
    df = pd.read_csv(tmp_path / "r.csv", keep_default_na=False, float_precision="round_trip")
    assert list(df.columns) == RESULT_CSV_COLUMNS
    np.testing.assert_array_equal(df["estimate"].to_numpy(), r.params)
    r.to_json(tmp_path / "r.json")
    back = EstimationResult.read_json(tmp_path / "r.json")
    np.testing.assert_array_equal(back.params, r.params)
    np.testing.assert_array_equal(back.cov, r.cov)
    assert back.names == r.names and back.diagnostics == r.diagnostics


def test_unknown_coefficient(rng):
    p, _ = make_panel(rng, 4, 4, 1)
    r = fixed_effects(p, ModelSpec("y", "x1"))
    with pytest.raises(EstimationError):
        r.coef("nope")
