"""Centered-interaction moderation and simple slopes."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import DataError, EstimationError
from ..panel import PanelDataset
from .linear import fit_within
from .results import EstimationResult, ModelSpec


def center(p: PanelDataset, columns: Sequence[str], prefix: str = "C_") -> PanelDataset:
    """Add ``prefix + name`` columns holding each column minus its grand mean."""
    new = {}
    for c in columns:
        x = p.column(c)
        new[prefix + c] = x - x.mean()
    return p.with_columns(**new)


def interaction_name(focal: str, moderator: str) -> str:
    return f"C_{focal} × C_{moderator}"


def moderation_fit(p: PanelDataset, spec: ModelSpec, moderator: str) -> EstimationResult:
    """Regress on focal, C_focal x C_moderator, moderator and controls.

    Centering uses grand means over the estimation sample.
    """
    if moderator in spec.regressors or moderator == spec.dependent:
        raise DataError(f"moderator {moderator!r} is already in the model")
    sample = spec.sample(p, extra=[moderator])
    f = sample.column(spec.focal)
    m = sample.column(moderator)
    name = interaction_name(spec.focal, moderator)
    inter = (f - f.mean()) * (m - m.mean())
    diag = {
        "moderator": moderator,
        "interaction": name,
        "moderator_mean": float(m.mean()),
        "moderator_sd": float(m.std(ddof=1)),
        "focal": spec.focal,
    }
    return fit_within(
        sample,
        spec.dependent,
        [spec.focal, name, moderator, *spec.controls],
        spec.effects,
        spec.se_flavor,
        "moderation",
        columns={name: inter},
        keep=[spec.focal],
        diagnostics=diag,
    )


def simple_slopes(
    fit: EstimationResult, moderator_levels: Sequence[float] | None = None
) -> list[tuple[float, float, float]]:
    """Focal slope ``b1 + b2 * (m - mean)`` and its delta-method SE at each moderator level.

    Defaults to mean - sd, mean and mean + sd of the moderator.
    """
    try:
        focal = fit.diagnostics["focal"]
        inter = fit.diagnostics["interaction"]
        mbar = fit.diagnostics["moderator_mean"]
        msd = fit.diagnostics["moderator_sd"]
    except KeyError:
        raise EstimationError("simple slopes need a moderation fit") from None
    if moderator_levels is None:
        moderator_levels = (mbar - msd, mbar, mbar + msd)
    i = fit.index(focal)
    if inter in fit.names:
        j = fit.index(inter)
        b1, b2 = fit.params[i], fit.params[j]
        v11, v22, v12 = fit.cov[i, i], fit.cov[j, j], fit.cov[i, j]
    else:
        b1, b2 = fit.params[i], 0.0
        v11, v22, v12 = fit.cov[i, i], 0.0, 0.0
    out = []
    for level in moderator_levels:
        dm = level - mbar
        var = v11 + dm * dm * v22 + 2 * dm * v12
        out.append((float(level), float(b1 + b2 * dm), float(np.sqrt(max(var, 0.0)))))
    return out
