"""Two-way fixed effects, random effects and the Hausman contrast."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from ..errors import EstimationError
from ..ols import DesignMatrix, ols_fit, robust_covariance
from ..panel import PanelDataset, absorbed_effects, demean
from .results import EstimationResult, ModelSpec

CONST = "const"


@dataclass(frozen=True)
class WithinDesign:
    design: DesignMatrix
    y_within: np.ndarray  # demeaned response, for the within R-squared
    omitted: tuple[str, ...]


def within_design(
    p: PanelDataset,
    dependent: str,
    regressors: Sequence[str],
    effects: str = "both",
    columns: dict[str, np.ndarray] | None = None,
    keep: Sequence[str] = (),
) -> WithinDesign:
    """Demeaned design with the grand means added back and a constant column.

    Adding the grand mean back leaves slopes and residuals untouched and lets the
    constant be reported the usual way (``ybar - xbar @ b``).  Regressors that
    the transformation wipes out entirely are dropped and reported in
    ``omitted``, except those listed in ``keep``, which raise instead.
    ``columns`` supplies extra regressor arrays not stored in the panel.
    """
    columns = columns or {}
    N, T = p.n_entities, p.n_years
    y = p.column(dependent)
    raw = np.column_stack(
        [columns[c] if c in columns else p.column(c) for c in regressors]
    ) if regressors else np.empty((len(y), 0))
    yw = demean(y, N, T, effects)
    Xw = demean(raw, N, T, effects)
    names, cols, omitted = [], [], []
    for j, name in enumerate(regressors):
        scale = np.linalg.norm(raw[:, j]) + 1.0
        if np.linalg.norm(Xw[:, j]) <= 1e-12 * scale:
            if name in keep:
                what = {"entity": "entity", "time": "year", "both": "entity and year"}[effects]
                raise EstimationError(f"{name!r} is absorbed by the {what} effects")
            omitted.append(name)
            continue
        names.append(name)
        cols.append(Xw[:, j] + (raw[:, j].mean() if effects != "none" else 0.0))
    X = np.column_stack([np.ones(len(y)), *cols]) if cols else np.ones((len(y), 1))
    yy = yw + (y.mean() if effects != "none" else 0.0)
    d = DesignMatrix(
        yy,
        X,
        (CONST, *names),
        cluster_ids=p.frame["entity"].to_numpy(),
        absorbed=absorbed_effects(N, T, effects),
    )
    yc = yw if effects != "none" else y - y.mean()
    return WithinDesign(d, yc, tuple(omitted))


def _df_for_p(flavor: str, n_clusters: int, dof: int) -> int:
    return n_clusters - 1 if flavor == "cluster" else dof


def fit_within(
    p: PanelDataset,
    dependent: str,
    regressors: Sequence[str],
    effects: str,
    se_flavor: str,
    kind: str,
    columns: dict[str, np.ndarray] | None = None,
    keep: Sequence[str] = (),
    diagnostics: dict | None = None,
) -> EstimationResult:
    wd = within_design(p, dependent, regressors, effects, columns, keep)
    d = wd.design
    fit = ols_fit(d)
    cov = robust_covariance(d.predictors, fit.residuals, fit.xtx_inv, se_flavor, d.cluster_ids, d.absorbed)
    tss = float(wd.y_within @ wd.y_within)
    r2 = 1.0 - fit.ssr / tss if tss > 0 else float("nan")
    diag = {
        "absorbed_entity_effects": p.n_entities - 1 if effects in ("both", "entity") else 0,
        "absorbed_time_effects": p.n_years - 1 if effects in ("both", "time") else 0,
        "n_entities": p.n_entities,
        "n_years": p.n_years,
        "dof": fit.dof,
        "ssr": fit.ssr,
        "sigma2": fit.sigma2,
        "omitted": list(wd.omitted),
        "r_squared_kind": "within" if effects != "none" else "centered",
    }
    diag.update(diagnostics or {})
    return EstimationResult(
        kind,
        dependent,
        fit.names,
        fit.coefficients,
        cov,
        fit.covariance,
        _df_for_p(se_flavor, p.n_entities, fit.dof),
        r2,
        fit.n,
        effects,
        se_flavor,
        diag,
    )


def fixed_effects(p: PanelDataset, spec: ModelSpec) -> EstimationResult:
    """Within estimator absorbing the effects named in ``spec.effects``."""
    sample = spec.sample(p)
    return fit_within(
        sample, spec.dependent, spec.regressors, spec.effects, spec.se_flavor, "fe",
        keep=[spec.focal],
    )


def _year_dummies(p: PanelDataset) -> tuple[list[str], np.ndarray]:
    years = p.years
    yr = p.frame["year"].to_numpy()
    names = [f"year_{y}" for y in years[1:]]
    mat = np.column_stack([(yr == y).astype(float) for y in years[1:]]) if names else np.empty((len(yr), 0))
    return names, mat


def random_effects(p: PanelDataset, spec: ModelSpec) -> EstimationResult:
    """Random entity effect by feasible GLS, Swamy-Arora variance components.

    Year effects enter as fixed indicators when ``spec.effects`` includes time.
    """
    sample = spec.sample(p)
    N, T = sample.n_entities, sample.n_years
    n = N * T
    y = sample.column(spec.dependent)
    X = sample.matrix(spec.regressors)
    names = list(spec.regressors)
    hidden: list[str] = []
    if spec.effects in ("both", "time"):
        dnames, D = _year_dummies(sample)
        X = np.column_stack([X, D])
        names += dnames
        hidden = dnames

    # within (entity) regression for the idiosyncratic variance
    yw = demean(y, N, T, "entity")
    Xw = demean(X, N, T, "entity")
    varying = np.linalg.norm(Xw, axis=0) > 1e-12 * (np.linalg.norm(X, axis=0) + 1.0)
    Xw = Xw[:, varying]
    fw = ols_fit(DesignMatrix(yw, Xw, [c for c, v in zip(names, varying) if v], absorbed=N))
    sigma2_e = fw.ssr / (n - N - Xw.shape[1])

    # between regression on entity means; year-dummy means are constant in a balanced panel
    k_slopes = len(spec.regressors)
    yb = y.reshape(N, T).mean(axis=1)
    Xb = X[:, :k_slopes].reshape(N, T, k_slopes).mean(axis=1)
    fb = ols_fit(DesignMatrix(yb, np.column_stack([np.ones(N), Xb]), [CONST, *spec.regressors]))
    sigma2_between = fb.ssr / (N - k_slopes - 1)
    sigma2_u = sigma2_between - sigma2_e / T
    floored = sigma2_u < 0
    if floored:
        sigma2_u = 0.0
    theta = 1.0 - np.sqrt(sigma2_e / (T * sigma2_u + sigma2_e))

    Xc = np.column_stack([np.ones(n), X])
    ys = y - theta * np.repeat(yb, T)
    Xs = Xc - theta * np.repeat(Xc.reshape(N, T, -1).mean(axis=1), T, axis=0)
    d = DesignMatrix(ys, Xs, [CONST, *names], cluster_ids=sample.frame["entity"].to_numpy())
    fit = ols_fit(d)
    cov = robust_covariance(Xs, fit.residuals, fit.xtx_inv, spec.se_flavor, d.cluster_ids)
    xb = Xc @ fit.coefficients
    r2 = float(np.corrcoef(y, xb)[0, 1] ** 2) if np.ptp(xb) > 0 else 0.0
    diag = {
        "sigma2_e": sigma2_e,
        "sigma2_u": sigma2_u,
        "theta": theta,
        "variance_floored": bool(floored),
        "n_entities": N,
        "n_years": T,
        "dof": fit.dof,
        "r_squared_kind": "overall",
    }
    return EstimationResult(
        "re",
        spec.dependent,
        fit.names,
        fit.coefficients,
        cov,
        fit.covariance,
        _df_for_p(spec.se_flavor, N, fit.dof),
        r2,
        n,
        spec.effects,
        spec.se_flavor,
        diag,
        tuple(hidden),
    )


@dataclass(frozen=True)
class HausmanResult:
    statistic: float
    dof: int
    p_value: float
    names: tuple[str, ...]
    non_psd: bool = False
    rank: int = 0


def hausman_test(fe: EstimationResult, re: EstimationResult, covariance: str = "classical") -> HausmanResult:
    """Contrast FE and RE slopes; ``covariance`` picks classical or reported (robust) matrices.

    A non-PSD covariance difference is inverted on its positive part and flagged.
    """
    if covariance not in ("classical", "reported"):
        raise ValueError(f"covariance must be 'classical' or 'reported', got {covariance!r}")
    fe_names = [n for n in fe.names if n != CONST and n not in fe.hidden]
    re_names = [n for n in re.names if n != CONST and n not in re.hidden]
    if sorted(fe_names) != sorted(re_names):
        raise EstimationError(f"coefficient sets differ: FE {fe_names} vs RE {re_names}")
    idx_fe = [fe.index(n) for n in fe_names]
    idx_re = [re.index(n) for n in fe_names]
    Vf = fe.cov_classical if covariance == "classical" else fe.cov
    Vr = re.cov_classical if covariance == "classical" else re.cov
    diff = fe.params[idx_fe] - re.params[idx_re]
    V = Vf[np.ix_(idx_fe, idx_fe)] - Vr[np.ix_(idx_re, idx_re)]
    V = (V + V.T) / 2
    w, U = np.linalg.eigh(V)
    tol = max(len(w), 1) * np.finfo(float).eps * max(np.abs(w).max(initial=0.0), 1e-300)
    pos = w > tol
    non_psd = bool(np.any(w < -tol))
    z = U[:, pos].T @ diff
    stat = float(np.sum(z**2 / w[pos])) if pos.any() else 0.0
    dof = len(fe_names)
    return HausmanResult(stat, dof, float(stats.chi2.sf(stat, dof)), tuple(fe_names), non_psd, int(pos.sum()))
