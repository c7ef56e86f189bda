"""Shared helpers: random balanced panels and brute-force regression oracles."""

from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from geacarbon.panel import PanelDataset


def make_panel(rng: np.random.Generator, N: int, T: int, k: int, *, beta=None,
               entity_sd: float = 1.0, year_sd: float = 0.5, noise_sd: float = 1.0,
               first_year: int = 2000) -> tuple[PanelDataset, np.ndarray]:
    """Panel with columns y, x1..xk drawn from a two-way effects model.

    Regressors are correlated with the entity effects so pooled OLS is biased.
    Returns the panel and the true slopes.
    """
    if beta is None:
        beta = rng.uniform(-2.0, 2.0, size=k)
    a = rng.normal(0.0, entity_sd, size=N)
    g = rng.normal(0.0, year_sd, size=T)
    X = rng.standard_normal((N, T, k)) + 0.5 * a[:, None, None]
    y = X @ beta + a[:, None] + g[None, :] + noise_sd * rng.standard_normal((N, T))
    data = {
        "entity": np.repeat([f"e{i:02d}" for i in range(N)], T),
        "year": np.tile(np.arange(first_year, first_year + T), N),
        "y": y.ravel(),
    }
    for j in range(k):
        data[f"x{j + 1}"] = X[:, :, j].ravel()
    return PanelDataset.from_frame(pd.DataFrame(data)), np.asarray(beta)


def dummy_ols(p: PanelDataset, dependent: str, regressors, effects: str = "both"):
    """Least-squares dummy-variable regression: regressors, constant, entity and year dummies.

    Solved with ``numpy.linalg.lstsq`` on the full dummy design; returns
    (slopes, residuals, design).
    """
    n = len(p)
    X = p.matrix(list(regressors))
    cols = [X, np.ones((n, 1))]
    ent = pd.get_dummies(p.frame["entity"], drop_first=True).to_numpy(dtype=float)
    yr = pd.get_dummies(p.frame["year"], drop_first=True).to_numpy(dtype=float)
    if effects in ("both", "entity"):
        cols.append(ent)
    if effects in ("both", "time"):
        cols.append(yr)
    Z = np.hstack(cols)
    y = p.column(dependent)
    coef, *_ = np.linalg.lstsq(Z, y, rcond=None)
    return coef[: X.shape[1]], y - Z @ coef, Z


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# Acceptance reporting: tests marked ``acceptance(number, title)`` get one
# PASS/FAIL line each in the terminal summary.

def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")
    config.stash[_ACCEPTANCE] = []


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        number, title = marker.args
        item.config.stash[_ACCEPTANCE].append(
            (number, title, "PASS" if rep.passed else "FAIL", rep.duration))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = sorted(config.stash.get(_ACCEPTANCE, []))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, status, secs in rows:
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {title} ({secs:.1f} s)")
