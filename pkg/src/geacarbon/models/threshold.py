"""Fixed-effects panel threshold regression (Hansen, 1999).

The focal variable is also the threshold variable.  With thresholds
t1 < t2 the regime regressors are ``q * 1(q <= t1)``, ``q * 1(t1 < q <= t2)``
and ``q * 1(q > t2)``; controls and the absorbed effects are common to all
regimes unless ``switching_controls`` is set.

Candidate thresholds are the distinct observed values of ``q`` between the
``trim`` and ``1 - trim`` quantiles such that every regime keeps at least
``trim * n`` observations.  Thresholds are found by least-squares grid
search, the second one conditional on the first, after which both are
refined by alternating conditional searches until neither moves.

Significance of each added threshold uses Hansen's fixed-regressor
bootstrap: residuals of the model with one fewer threshold are resampled in
whole-entity blocks and the sup-LR statistic ``(S_{j-1} - S_j) * n / S_j``
is recomputed on every draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import EstimationError
from ..panel import PanelDataset, demean
from .linear import fit_within
from .results import EstimationResult, ModelSpec

# 95% asymptotic critical value of the threshold LR statistic (Hansen 2000, Table 1).
LR_CRITICAL_95 = 7.35


@dataclass(frozen=True)
class ThresholdFit:
    thresholds: tuple[float, ...]
    result: EstimationResult
    regime_terms: tuple[str, ...]
    lr_curves: tuple[tuple[np.ndarray, np.ndarray], ...]
    confidence_sets: tuple[tuple[float, float], ...]
    ssr: float
    ssr_path: tuple[float, ...]
    statistics: tuple[float, ...]
    trim: float
    bootstrap_p: tuple[float, ...] = ()
    diagnostics: dict = field(default_factory=dict)

    @property
    def lr_curve(self) -> list[tuple[float, float]]:
        """LR series of the last threshold added."""
        grid, lr = self.lr_curves[-1]
        return list(zip(grid.tolist(), lr.tolist()))

    @property
    def regime_coefficients(self) -> list[tuple[str, float, float, float]]:
        r = self.result
        return [
            (t, r.coef(t), r.stderr(t), float(r.tvalues[r.index(t)])) for t in self.regime_terms
        ]


@dataclass(frozen=True)
class ThresholdBootstrap:
    p_values: tuple[float, ...]
    statistics: tuple[float, ...]
    draws: tuple[np.ndarray, ...]
    reps: int
    seed: int | None


def regime_labels(focal: str, thresholds) -> list[str]:
    """Term names per regime; 4 decimals unless nearby thresholds need more to stay distinct."""
    if not thresholds:
        return [focal]
    for digits in range(4, 17):
        t = [f"{v:.{digits}f}" for v in thresholds]
        if len(set(t)) == len(t):
            break
    labels = [f"{focal} ({focal} <= {t[0]})"]
    labels += [f"{focal} ({a} < {focal} <= {b})" for a, b in zip(t, t[1:])]
    labels.append(f"{focal} ({focal} > {t[-1]})")
    return labels


def regime_masks(q: np.ndarray, thresholds) -> list[np.ndarray]:
    edges = [-np.inf, *sorted(thresholds), np.inf]
    return [(q > lo) & (q <= hi) for lo, hi in zip(edges, edges[1:])]


class _Problem:
    """Within-space arrays shared by the search and the bootstrap."""

    def __init__(self, sample: PanelDataset, spec: ModelSpec, trim: float, switching: bool):
        self.N, self.T = sample.n_entities, sample.n_years
        self.n = self.N * self.T
        self.effects = spec.effects
        q = sample.column(spec.focal)
        self.q = q
        controls = sample.matrix(spec.controls) if spec.controls else np.empty((self.n, 0))
        W = lambda a: demean(a, self.N, self.T, self.effects)  # noqa: E731
        self.W = W
        self.y = W(sample.column(spec.dependent))
        base = [W(q[:, None])[:, 0]]
        base += list(W(controls).T)
        if self.effects == "none":
            base.append(np.ones(self.n))
        self.base = np.column_stack(base)
        block_src = np.column_stack([q, controls]) if switching else q[:, None]

        self.min_count = math.ceil(trim * self.n - 1e-9)
        lo, hi = np.quantile(q, [trim, 1.0 - trim])
        uniq = np.unique(q)
        grid = uniq[(uniq >= lo) & (uniq <= hi)]
        cnt = np.searchsorted(np.sort(q), grid, side="right")
        ok = (cnt >= self.min_count) & (self.n - cnt >= self.min_count)
        self.grid = grid[ok]
        self.cnt_le = cnt[ok]
        if len(self.grid) == 0:
            raise EstimationError(
                f"no threshold candidate leaves {self.min_count} observations in each regime"
            )
        ind = (q[None, :] <= self.grid[:, None]).astype(float)  # (G, n)
        blocks = ind[:, :, None] * block_src[None, :, :]  # (G, n, m)
        G, n, m = blocks.shape
        self.blocks = W(blocks.transpose(1, 0, 2).reshape(n, G * m)).reshape(n, G, m).transpose(1, 0, 2)
        self.m = m
        self._cache: dict[tuple[int, ...], tuple] = {}

    def feasible(self, fixed: tuple[int, ...]) -> np.ndarray:
        """Candidates that keep every regime at ``min_count`` given the fixed thresholds."""
        ok = np.ones(len(self.grid), dtype=bool)
        for g in fixed:
            ok[g] = False
        counts_fixed = [self.cnt_le[g] for g in fixed]
        for g in range(len(self.grid)):
            if not ok[g]:
                continue
            c = np.sort([*counts_fixed, self.cnt_le[g]])
            sizes = np.diff(np.concatenate([[0], c, [self.n]]))
            ok[g] = bool(np.all(sizes >= self.min_count))
        return ok

    def _projector(self, fixed: tuple[int, ...]):
        if fixed in self._cache:
            return self._cache[fixed]
        A = np.column_stack([self.base, *[self.blocks[g] for g in fixed]])
        U, s, _ = np.linalg.svd(A, full_matrices=False)
        QA = U[:, s > 1e-10 * s.max()]
        B = self.blocks - np.einsum("nk,gkm->gnm", QA, np.einsum("nk,gnm->gkm", QA, self.blocks))
        scale = np.linalg.norm(self.blocks, axis=1) + 1e-300  # (G, m)
        if self.m == 1:
            norms = np.linalg.norm(B[:, :, 0], axis=1)
            valid = norms > 1e-9 * scale[:, 0]
            Ub = np.where(valid[:, None], B[:, :, 0] / np.where(valid, norms, 1.0)[:, None], 0.0)[:, :, None]
        else:
            Ub, sb, _ = np.linalg.svd(B, full_matrices=False)
            keep = sb > 1e-9 * scale.max(axis=1, keepdims=True)
            Ub = Ub * keep[:, None, :]
        feas = self.feasible(fixed)
        self._cache[fixed] = (QA, Ub, feas)
        return self._cache[fixed]

    def null_ssr(self, y: np.ndarray, fixed: tuple[int, ...]) -> float:
        QA = self._projector(fixed)[0]
        r = y - QA @ (QA.T @ y)
        return float(r @ r)

    def curve(self, y: np.ndarray, fixed: tuple[int, ...]) -> np.ndarray:
        """SSR for each candidate added to the fixed thresholds; infeasible -> inf."""
        QA, Ub, feas = self._projector(fixed)
        r = y - QA @ (QA.T @ y)
        proj = np.einsum("gnm,n->gm", Ub, r)
        ssr = float(r @ r) - np.sum(proj**2, axis=1)
        return np.where(feas, ssr, np.inf)

    def fitted(self, y: np.ndarray, fixed: tuple[int, ...]) -> np.ndarray:
        A = np.column_stack([self.base, *[self.blocks[g] for g in fixed]])
        coef = np.linalg.lstsq(A, y, rcond=None)[0]
        return A @ coef

    def search(self, y: np.ndarray, max_thresholds: int):
        """Sequential estimation. Returns (indices, ssr_path, stats, curves-by-threshold)."""
        S0 = self.null_ssr(y, ())
        c1 = self.curve(y, ())
        if not np.isfinite(c1).any():
            raise EstimationError("no feasible single threshold")
        g1 = int(np.argmin(c1))
        S1 = float(c1[g1])
        path, stats = [S0, S1], [(S0 - S1) * self.n / S1]
        if max_thresholds == 1:
            return (g1,), path, stats, {g1: c1}
        c2 = self.curve(y, (g1,))
        if not np.isfinite(c2).any():
            raise EstimationError("no feasible second threshold with the given trim")
        g2 = int(np.argmin(c2))
        S2 = float(c2[g2])
        path.append(S2)
        stats.append((S1 - S2) * self.n / S2)
        # refine: alternate conditional searches until neither threshold moves
        # SSR falls strictly with every move on a finite grid, so this terminates.
        for _ in range(len(self.grid) ** 2):
            r1 = self.curve(y, (g2,))
            g1_new = int(np.argmin(r1))
            r2 = self.curve(y, (g1_new,))
            g2_new = int(np.argmin(r2))
            if g1_new == g1 and g2_new == g2:
                return (g1, g2), path, stats, {g1: r1, g2: r2}
            g1, g2 = g1_new, g2_new
        raise EstimationError("threshold refinement did not converge")

    def statistic(self, y: np.ndarray, j: int) -> float:
        """sup-LR statistic for threshold ``j`` (1-based) from the unrefined sequential search."""
        c1 = self.curve(y, ())
        g1 = int(np.argmin(c1))
        S1 = float(c1[g1])
        if j == 1:
            S0 = self.null_ssr(y, ())
            return (S0 - S1) * self.n / S1
        c2 = self.curve(y, (g1,))
        S2 = float(np.min(c2))
        return (S1 - S2) * self.n / S2


def threshold_fit(
    p: PanelDataset,
    spec: ModelSpec,
    max_thresholds: int = 1,
    trim: float = 0.05,
    switching_controls: bool = False,
    reps: int = 0,
    seed: int | None = None,
) -> ThresholdFit:
    """Estimate up to two thresholds in the focal variable's slope.

    With ``reps > 0`` the bootstrap p-values are computed as well.
    """
    if max_thresholds not in (1, 2):
        raise EstimationError("max_thresholds must be 1 or 2")
    if not 0 < trim < 0.5:
        raise EstimationError("trim must lie in (0, 0.5)")
    sample = spec.sample(p)
    prob = _Problem(sample, spec, trim, switching_controls)
    idx, path, stats, curves = prob.search(prob.y, max_thresholds)
    order = sorted(idx, key=lambda g: prob.grid[g])
    thresholds = tuple(float(prob.grid[g]) for g in order)

    lr_curves, sets = [], []
    for g in order:
        c = curves[g]
        feas = np.isfinite(c)
        s_hat = c[g]
        lr = (c[feas] - s_hat) * prob.n / s_hat
        grid = prob.grid[feas]
        lr_curves.append((grid, lr))
        inside = grid[lr <= LR_CRITICAL_95]
        sets.append((float(inside.min()), float(inside.max())))

    q = sample.column(spec.focal)
    labels = regime_labels(spec.focal, thresholds)
    masks = regime_masks(q, thresholds)
    columns = {lab: q * mk for lab, mk in zip(labels, masks)}
    regressors = list(labels)
    if switching_controls:
        for c in spec.controls:
            x = sample.column(c)
            for r, mk in enumerate(masks, 1):
                columns[f"{c} [regime {r}]"] = x * mk
                regressors.append(f"{c} [regime {r}]")
    else:
        regressors += list(spec.controls)
    for lab, mk in zip(labels, masks):
        if mk.sum() < trim * prob.n:
            raise EstimationError(f"regime {lab!r} holds fewer than trim * n observations")
    diag = {
        "thresholds": list(thresholds),
        "grid_size": len(prob.grid),
        "min_regime_obs": prob.min_count,
        "regime_obs": [int(mk.sum()) for mk in masks],
        "switching_controls": switching_controls,
    }
    result = fit_within(
        sample, spec.dependent, regressors, spec.effects, spec.se_flavor, "threshold",
        columns=columns, keep=labels, diagnostics=diag,
    )
    fit = ThresholdFit(
        thresholds,
        result,
        tuple(labels),
        tuple(lr_curves),
        tuple(sets),
        float(result.diagnostics["ssr"]),
        tuple(path),
        tuple(stats),
        trim,
        diagnostics={"switching_controls": switching_controls, "n_obs": prob.n},
    )
    if reps:
        boot = threshold_bootstrap(p, spec, fit, reps=reps, seed=seed)
        fit = replace(fit, bootstrap_p=boot.p_values)
    return fit


def threshold_bootstrap(
    p: PanelDataset,
    spec: ModelSpec,
    fit: ThresholdFit,
    reps: int = 300,
    seed: int | None = None,
) -> ThresholdBootstrap:
    """Fixed-regressor bootstrap p-value for each threshold in ``fit``.

    For threshold j the null model carries the j-1 thresholds of the
    sequential search; its residuals are redrawn by entity with replacement.
    """
    if reps < 100:
        raise EstimationError("bootstrap needs at least 100 replications")
    sample = spec.sample(p)
    switching = bool(fit.diagnostics.get("switching_controls", False))
    prob = _Problem(sample, spec, fit.trim, switching)
    J = len(fit.thresholds)
    seq_idx = (int(np.argmin(prob.curve(prob.y, ()))),)
    observed = fit.statistics
    rng = np.random.default_rng(seed)
    p_values, draws = [], []
    for j in range(1, J + 1):
        null_fixed = tuple(seq_idx[: j - 1])
        yhat = prob.fitted(prob.y, null_fixed)
        resid = (prob.y - yhat).reshape(prob.N, prob.T)
        F = np.empty(reps)
        for b in range(reps):
            pick = rng.integers(0, prob.N, size=prob.N)
            e = prob.W(resid[pick].ravel())
            F[b] = prob.statistic(yhat + e, j)
        p_values.append(float(np.mean(F >= observed[j - 1])))
        draws.append(F)
    return ThresholdBootstrap(tuple(p_values), tuple(observed), tuple(draws), reps, seed)


def threshold_table(fit: ThresholdFit) -> list[dict]:
    """Rows shaped like a threshold-regression results table: term, estimate, t, stars."""
    r = fit.result
    rows = []
    for term in fit.regime_terms:
        i = r.index(term)
        rows.append(
            {
                "term": term,
                "estimate": float(r.params[i]),
                "se": float(r.se[i]),
                "t": float(r.tvalues[i]),
                "p": float(r.pvalues[i]),
                "stars": r.stars[i],
            }
        )
    return rows

