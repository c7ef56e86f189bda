import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geacarbon.errors import DataError
from geacarbon.models.results import EstimationResult
from geacarbon.tables import (
    MINUS,
    fmt_number,
    parse_cell,
    parse_table,
    render_cell,
    render_table,
)


def _result(params, se, names=None, df=29, kind="fe", effects="both", hidden=()):
    names = names or tuple(f"v{i}" for i in range(len(params)))
    return EstimationResult(kind, "y", tuple(names), np.asarray(params, float),
                            np.diag(np.asarray(se, float) ** 2), np.diag(np.asarray(se, float) ** 2),
                            df, 0.496, 390, effects, "cluster", {}, tuple(hidden))


def test_cell_uses_typographic_minus_and_stars():
    assert render_cell(-1.679, 0.771, 0.03) == "−1.679** (0.771)"
    assert render_cell(2.0, 0.5, 0.001) == "2.000*** (0.500)"
    assert render_cell(0.1, 0.5, 0.5) == "0.100 (0.500)"
    assert render_cell(-1.679, 0.771, 0.03, minus="-") == "-1.679** (0.771)"


def test_negative_zero_is_printed_without_sign():
    assert fmt_number(-0.0001) == "0.000"
    assert fmt_number(-0.0016) == MINUS + "0.002"


def test_parse_cell_accepts_both_minus_signs():
    assert parse_cell("−1.679** (0.771)") == (-1.679, "**", 0.771)
    assert parse_cell("-1.679** (0.771)") == (-1.679, "**", 0.771)
    with pytest.raises(DataError):
        parse_cell("n/a")


def test_table_layout_and_round_trip():
    fe = _result([10.0, -1.679, -23.063], [1.0, 0.771, 11.0], ("const", "GEA", "ER"))
    re = _result([9.0, -1.340, -20.0], [1.0, 0.6, 10.0], ("const", "GEA", "ER"), kind="re")
    text = render_table([re, fe], ["RE", "FE"], title="Baseline")
    lines = text.splitlines()
    assert lines[0] == "Baseline"
    assert lines[2] == "| Variable | RE | FE |"
    body = [ln for ln in lines if ln.startswith("| ")]
    assert [ln.split("|")[1].strip() for ln in body[2:]] == [
        "GEA", "ER", "Constant", "Entity effects", "Time effects", "R-squared", "Observations"]
    assert "* p<0.1, ** p<0.05, *** p<0.01" in lines[-1]
    parsed = parse_table(text)
    assert parsed.labels == ["RE", "FE"]
    assert parsed.cells["FE"]["GEA"][0] == -1.679
    assert parsed.cells["FE"]["GEA"][2] == 0.771
    assert parsed.footer["Observations"] == ["390", "390"]


def test_hidden_terms_not_rendered_and_missing_cells_blank():
    a = _result([1.0, 2.0, 3.0], [1, 1, 1], ("x", "year_2008", "const"), hidden=("year_2008",))
    b = _result([1.0, 2.0], [1, 1], ("z", "x"))
    text = render_table([a, b])
    assert "year_2008" not in text
    parsed = parse_table(text)
    assert "z" not in parsed.cells[parsed.labels[0]]


def test_empty_results_rejected():
    with pytest.raises(DataError):
        render_table([])
    with pytest.raises(DataError):
        render_table([_result([1.0], [1.0])], labels=["a", "b"])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(-1e4, 1e4), st.floats(1e-3, 1e3)), min_size=1, max_size=6))
def test_round_trip_recovers_printed_numbers(pairs):
    params = [b for b, _ in pairs]
    ses = [s for _, s in pairs]
    text = render_table([_result(params, ses)])
    parsed = parse_table(text)
    cells = parsed.cells[parsed.labels[0]]
    for i, (b, s) in enumerate(pairs):
        est, _, se = cells[f"v{i}"]
        assert est == float(f"{b:.3f}") or (est == 0.0 and abs(b) < 0.0005)
        assert se == float(f"{s:.3f}")
