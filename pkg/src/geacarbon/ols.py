"""Least-squares kernel: pivoted-QR OLS and sandwich covariances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd
import scipy.linalg

from .errors import EstimationError, RankDeficiencyError

SE_FLAVORS = ("cluster", "hc1")


@dataclass(frozen=True)
class DesignMatrix:
    response: np.ndarray
    predictors: np.ndarray
    names: tuple[str, ...]
    cluster_ids: np.ndarray | None = None
    absorbed: int = 0  # effect parameters swept out before this design was built

    def __post_init__(self):
        y = np.asarray(self.response, dtype=float)
        X = np.asarray(self.predictors, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        object.__setattr__(self, "response", y)
        object.__setattr__(self, "predictors", X)
        object.__setattr__(self, "names", tuple(self.names))
        if X.shape[0] != y.shape[0]:
            raise EstimationError("response and predictors have different row counts")
        if X.shape[1] != len(self.names):
            raise EstimationError("one name per predictor column required")
        if len(set(self.names)) != len(self.names):
            raise EstimationError("predictor names must be unique")
        if X.shape[0] < X.shape[1] + self.absorbed + 1:
            raise EstimationError(
                f"{X.shape[0]} observations cannot identify {X.shape[1] + self.absorbed} parameters"
            )

    @property
    def n(self) -> int:
        return self.predictors.shape[0]

    @property
    def k(self) -> int:
        return self.predictors.shape[1]


@dataclass(frozen=True)
class OlsFit:
    names: tuple[str, ...]
    coefficients: np.ndarray
    residuals: np.ndarray
    sigma2: float
    covariance: np.ndarray
    xtx_inv: np.ndarray
    n: int
    k: int
    dof: int

    @property
    def params(self) -> pd.Series:
        return pd.Series(self.coefficients, index=list(self.names))

    @property
    def ssr(self) -> float:
        return float(self.residuals @ self.residuals)


def _collinear_names(R: np.ndarray, piv: np.ndarray, rank: int, names) -> list[str]:
    involved: set[int] = set()
    R11 = R[:rank, :rank]
    for j in range(rank, R.shape[1]):
        involved.add(piv[j])
        if rank == 0:
            continue
        c = scipy.linalg.solve_triangular(R11, R[:rank, j])
        scale = max(np.abs(c).max(), 1e-300)
        involved.update(piv[i] for i in np.flatnonzero(np.abs(c) > 1e-8 * scale))
    return [names[i] for i in sorted(involved)]


def ols_fit(d: DesignMatrix) -> OlsFit:
    """Least squares by column-pivoted Householder QR; refuses rank-deficient designs."""
    X, y = d.predictors, d.response
    n, k = X.shape
    Q, R, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = max(n, k) * np.finfo(float).eps * (diag[0] if k else 0.0)
    # Scale-relative floor also catches near-exact collinearity from demeaning round-off.
    tol = max(tol, 1e-10 * diag[0]) if k else tol
    rank = int(np.sum(diag > tol))
    if rank < k:
        cols = _collinear_names(R, piv, rank, d.names)
        raise RankDeficiencyError(f"design is rank deficient; collinear columns: {cols}", cols)
    beta_p = scipy.linalg.solve_triangular(R, Q.T @ y)
    beta = np.empty(k)
    beta[piv] = beta_p
    resid = y - X @ beta
    dof = n - k - d.absorbed
    sigma2 = float(resid @ resid) / dof
    Rinv = scipy.linalg.solve_triangular(R, np.eye(k))
    inv_p = Rinv @ Rinv.T
    xtx_inv = np.empty_like(inv_p)
    xtx_inv[np.ix_(piv, piv)] = inv_p
    return OlsFit(tuple(d.names), beta, resid, sigma2, sigma2 * xtx_inv, xtx_inv, n, k, dof)


def robust_covariance(
    X: np.ndarray,
    resid: np.ndarray,
    bread: np.ndarray,
    flavor: str,
    cluster_ids: np.ndarray | None = None,
    absorbed: int = 0,
) -> np.ndarray:
    """Sandwich ``bread @ meat @ bread`` with small-sample scaling.

    ``hc1`` scales by n / (n - k - absorbed).  ``cluster`` scales by
    G/(G-1) * (n-1)/(n-k) with k the number of columns of ``X``.
    """
    n, k = X.shape
    if flavor == "hc1":
        scores = X * resid[:, None]
        meat = scores.T @ scores
        factor = n / (n - k - absorbed)
    elif flavor == "cluster":
        if cluster_ids is None:
            raise EstimationError("cluster covariance needs cluster ids")
        codes, uniq = pd.factorize(np.asarray(cluster_ids), sort=True)
        g = len(uniq)
        if g < 2:
            raise EstimationError(f"cluster covariance needs at least 2 clusters, got {g}")
        sums = np.zeros((g, k))
        np.add.at(sums, codes, X * resid[:, None])
        meat = sums.T @ sums
        factor = g / (g - 1) * (n - 1) / (n - k)
    else:
        raise EstimationError(f"unknown covariance flavor {flavor!r}")
    cov = factor * bread @ meat @ bread
    return (cov + cov.T) / 2


def sandwich_covariance(fit: OlsFit, d: DesignMatrix, flavor: str = "cluster") -> np.ndarray:
    """Robust covariance of a fitted design; ``cluster_by_entity`` is an alias of ``cluster``."""
    if flavor == "cluster_by_entity":
        flavor = "cluster"
    return robust_covariance(d.predictors, fit.residuals, fit.xtx_inv, flavor, d.cluster_ids, d.absorbed)
