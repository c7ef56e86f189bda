"""Just-identified two-stage least squares with absorbed panel effects."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError, EstimationError
from ..ols import DesignMatrix, ols_fit, robust_covariance
from ..panel import PanelDataset
from .linear import _df_for_p, fit_within, within_design
from .results import EstimationResult, ModelSpec

WEAK_IV_RULE = 10.0


@dataclass(frozen=True)
class TslsResult:
    second_stage: EstimationResult
    first_stage: EstimationResult
    first_stage_F: float
    instrument: str

    @property
    def weak_instrument(self) -> bool:
        return self.first_stage_F <= WEAK_IV_RULE


def tsls(p: PanelDataset, spec: ModelSpec, instrument: str) -> TslsResult:
    """Instrument ``spec.focal`` with ``instrument``; controls and effects enter both stages.

    Second-stage standard errors come from the structural residuals
    ``y - X b`` (original focal values), not the residuals of the
    fitted-value regression.
    """
    if instrument in spec.regressors or instrument == spec.dependent:
        raise DataError(f"instrument {instrument!r} is already in the model")
    sample = spec.sample(p, extra=[instrument])

    first = fit_within(
        sample, spec.focal, [instrument, *spec.controls], spec.effects, spec.se_flavor,
        "tsls_first_stage", keep=[instrument],
    )
    j = first.index(instrument)
    b = first.params[j]
    v = first.cov[j, j]
    if not v > 0:
        raise EstimationError("first-stage covariance of the instrument is degenerate")
    F = float(b * b / v)

    # Same transformation for X (focal + controls) and Z (instrument + controls).
    xd = within_design(sample, spec.dependent, spec.regressors, spec.effects, keep=[spec.focal])
    zd = within_design(sample, spec.dependent, [instrument, *spec.controls], spec.effects,
                       keep=[instrument])
    if xd.omitted != zd.omitted:
        raise EstimationError("instrument and regressor designs drop different controls")
    X, Z, y = xd.design.predictors, zd.design.predictors, xd.design.response
    try:
        zfit_coef = np.linalg.lstsq(Z, X, rcond=None)[0]
    except np.linalg.LinAlgError as exc:
        raise EstimationError(f"first-stage projection failed: {exc}") from exc
    Xhat = Z @ zfit_coef
    # Columns that Z reproduces (the controls, or a focal variable that is its
    # own instrument) are taken verbatim so the fit matches plain FE bit for bit.
    exact = np.linalg.norm(X - Xhat, axis=0) <= 1e-10 * (np.linalg.norm(X, axis=0) + 1.0)
    Xhat[:, exact] = X[:, exact]
    d =DesignMatrix(y, Xhat, xd.design.names, xd.design.cluster_ids, xd.design.absorbed)
    fit = ols_fit(d)  # b = (Xhat'Xhat)^-1 Xhat'y
    u = y - X @ fit.coefficients
    sigma2 = float(u @ u) / fit.dof
    cov = robust_covariance(Xhat, u, fit.xtx_inv, spec.se_flavor, d.cluster_ids, d.absorbed)
    tss = float(xd.y_within @ xd.y_within)
    diag = {
        "instrument": instrument,
        "first_stage_F": F,
        "weak_instrument": F <= WEAK_IV_RULE,
        "n_entities": sample.n_entities,
        "n_years": sample.n_years,
        "dof": fit.dof,
        "ssr_structural": float(u @ u),
        "omitted": list(xd.omitted),
        "r_squared_kind": "within, structural residuals",
    }
    second = EstimationResult(
        "tsls",
        spec.dependent,
        fit.names,
        fit.coefficients,
        cov,
        sigma2 * fit.xtx_inv,
        _df_for_p(spec.se_flavor, sample.n_entities, fit.dof),
        1.0 - float(u @ u) / tss if tss > 0 else float("nan"),
        fit.n,
        spec.effects,
        spec.se_flavor,
        diag,
    )
    return TslsResult(second, first, F, instrument)

