"""Publication-style text tables and their parser.

Regression tables are pipe-delimited: one column per model, one row per
term, cells ``estimate<stars> (se)`` at three decimals, then footer rows for
absorbed effects, R-squared and observations, then a note line.  Negative
numbers use the typographic minus sign (U+2212) by default; the parser
accepts either minus.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import pandas as pd

from .errors import DataError
from .models.results import EstimationResult, stars_for
from .models.threshold import ThresholdFit

MINUS = "−"
TERM_LABELS = {"const": "Constant"}
FOOTER_ROWS = ("Entity effects", "Time effects", "R-squared", "Observations")
STAR_NOTE = "* p<0.1, ** p<0.05, *** p<0.01"

_CELL = re.compile(r"^(?P<est>[-−]?\d+(?:\.\d+)?)(?P<stars>\**)\s+\((?P<se>[-−]?\d+(?:\.\d+)?)\)$")


def fmt_number(x: float, digits: int = 3, minus: str = MINUS) -> str:
    s = f"{x:.{digits}f}"
    if s.startswith("-"):
        # avoid printing "-0.000"
        s = s[1:] if float(s) == 0 else minus + s[1:]
    return s


def render_cell(estimate: float, se: float, p: float, minus: str = MINUS) -> str:
    return f"{fmt_number(estimate, minus=minus)}{stars_for(p)} ({fmt_number(se, minus=minus)})"


def _num(s: str) -> float:
    return float(s.replace(MINUS, "-"))


def parse_cell(cell: str) -> tuple[float, str, float]:
    """Inverse of :func:`render_cell`: ``(estimate, stars, se)``."""
    m = _CELL.match(cell.strip())
    if m is None:
        raise DataError(f"not a coefficient cell: {cell!r}")
    return _num(m["est"]), m["stars"], _num(m["se"])


def _row(cells: Sequence[str]) -> str:
    return "| " + " | ".join(cells) + " |"


def _se_note(results: Sequence[EstimationResult]) -> str:
    flavors = {r.se_flavor for r in results}
    if flavors == {"cluster"}:
        kind = "Entity-clustered robust standard errors"
    elif flavors == {"hc1"}:
        kind = "Heteroskedasticity-robust (HC1) standard errors"
    else:
        kind = "Robust standard errors"
    return f"Note: {kind} in parentheses. {STAR_NOTE}."


def _term_order(results: Sequence[EstimationResult]) -> list[str]:
    """Row order: each model's leading term, then terms not shared by every
    model, then the shared ones (typically the controls), constant last."""
    shown = [[t for t in r.names if t not in r.hidden and t != "const"] for r in results]
    seen: list[str] = []
    for names in shown:
        seen += [t for t in names if t not in seen]
    leading = []
    for names in shown:
        if names and names[0] not in leading:
            leading.append(names[0])
    shared = [t for t in seen if all(t in names for names in shown)]
    rest = [t for t in seen if t not in leading and t not in shared]
    order = leading + rest + [t for t in shared if t not in leading]
    if any("const" in r.names for r in results):
        order.append("const")
    return order


def render_table(
    results: Sequence[EstimationResult],
    labels: Sequence[str] | None = None,
    title: str | None = None,
    minus: str = MINUS,
) -> str:
    if not results:
        raise DataError("no results to render")
    labels = list(labels) if labels else [f"{r.model_kind.upper()} ({i})" for i, r in enumerate(results, 1)]
    if len(labels) != len(results):
        raise DataError("one label per result required")
    terms = _term_order(results)

    lines = []
    if title:
        lines += [title, ""]
    lines.append(_row(["Variable", *labels]))
    lines.append(_row(["---"] * (len(labels) + 1)))
    for t in terms:
        cells = []
        for r in results:
            if t in r.names and t not in r.hidden:
                i = r.index(t)
                cells.append(render_cell(r.params[i], r.se[i], r.pvalues[i], minus))
            else:
                cells.append("")
        lines.append(_row([TERM_LABELS.get(t, t), *cells]))
    lines.append(_row(["Entity effects", *["Yes" if r.entity_effects else "No" for r in results]]))
    lines.append(_row(["Time effects", *["Yes" if r.time_effects else "No" for r in results]]))
    lines.append(_row(["R-squared", *[fmt_number(r.r_squared, minus=minus) for r in results]]))
    lines.append(_row(["Observations", *[str(r.n_obs) for r in results]]))
    lines.append("")
    lines.append(_se_note(results))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ParsedTable:
    labels: list[str]
    cells: dict[str, dict[str, tuple[float, str, float]]]  # label -> term -> (est, stars, se)
    footer: dict[str, list[str]]


def parse_table(text: str) -> ParsedTable:
    rows = [ln for ln in text.splitlines() if ln.startswith("|")]
    if len(rows) < 2:
        raise DataError("no table found")
    split = lambda ln: [c.strip() for c in ln.strip()[1:-1].split("|")]  # noqa: E731
    header = split(rows[0])
    labels = header[1:]
    cells: dict[str, dict] = {lab: {} for lab in labels}
    footer: dict[str, list[str]] = {}
    for ln in rows[2:]:
        parts = split(ln)
        name, values = parts[0], parts[1:]
        if name in FOOTER_ROWS:
            footer[name] = values
            continue
        for lab, v in zip(labels, values):
            if v:
                cells[lab][name] = parse_cell(v)
    return ParsedTable(labels, cells, footer)


def render_threshold_table(fit: ThresholdFit, minus: str = MINUS) -> str:
    r = fit.result
    lines = [_row(["Threshold variable", "Regression coefficient", "T value"]), _row(["---"] * 3)]
    for term in fit.regime_terms:
        i = r.index(term)
        lines.append(
            _row([term, fmt_number(r.params[i], minus=minus) + r.stars[i],
                  fmt_number(r.tvalues[i], digits=2, minus=minus)])
        )
    lines.append("")
    info = [f"thresholds: {', '.join(f'{t:.4f}' for t in fit.thresholds)}"]
    for j, (lo, hi) in enumerate(fit.confidence_sets, 1):
        info.append(f"95% set for threshold {j}: [{lo:.4f}, {hi:.4f}]")
    if fit.bootstrap_p:
        info.append("bootstrap p: " + ", ".join(f"{p:.3f}" for p in fit.bootstrap_p))
    lines += info
    lines.append(f"Note: {STAR_NOTE}.")
    return "\n".join(lines) + "\n"


def render_frame(df: pd.DataFrame, digits: int = 3, minus: str = MINUS) -> str:
    """Pipe table for descriptive statistics and correlation matrices."""
    cols = [str(c) for c in df.columns]
    out = [_row(cols), _row(["---"] * len(cols))]
    for _, row in df.iterrows():
        cells = []
        for v in row:
            if isinstance(v, float):
                cells.append(fmt_number(v, digits, minus))
            else:
                cells.append(str(v))
        out.append(_row(cells))
    return "\n".join(out) + "\n"
