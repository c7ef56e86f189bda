"""Sample construction: within-entity lags and regional splits."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Mapping

import numpy as np

from ..errors import DataError
from ..panel import PanelDataset


def lag_name(column: str, k: int) -> str:
    return f"L_{column}" if k == 1 else f"L{k}_{column}"


def lag_variable(p: PanelDataset, column: str, k: int = 1, name: str | None = None) -> PanelDataset:
    """Add ``column`` lagged ``k`` periods within entity and drop each entity's first ``k`` years.

    Periods are the panel's ordered years, so a gap in the calendar is treated
    as one period.
    """
    if k < 0:
        raise DataError("lag must be non-negative")
    if k == 0:
        return PanelDataset(p.frame.copy(), dict(p.roles))
    N, T = p.n_entities, p.n_years
    if k >= T:
        raise DataError(f"lag {k} leaves no observations with {T} periods")
    x = p.column(column).reshape(N, T)
    lagged = np.full((N, T), np.nan)
    lagged[:, k:] = x[:, :-k]
    df = p.frame.copy()
    df[name or lag_name(column, k)] = lagged.ravel()
    df = df[df["year"].isin(p.years[k:])].reset_index(drop=True)
    return PanelDataset(df, dict(p.roles))


def split_sample(p: PanelDataset, region_map: Mapping[str, str]) -> dict[str, PanelDataset]:
    """Partition entities by region label; every entity must be mapped."""
    missing = [e for e in p.entities if e not in region_map]
    if missing:
        raise DataError(f"entities missing from region map: {missing}")
    regions: list[str] = []
    for e in p.entities:
        if region_map[e] not in regions:
            regions.append(region_map[e])
    return {
        r: p.select_entities([e for e in p.entities if region_map[e] == r]) for r in regions
    }


def load_region_map(path: str | Path) -> dict[str, str]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise DataError(f"cannot read region map {path}: {exc}") from exc
    if rows and not {"entity", "region"} <= set(rows[0]):
        raise DataError(f"{path}: expected header entity,region")
    out: dict[str, str] = {}
    for r in rows:
        if r["entity"] in out:
            raise DataError(f"{path}: entity {r['entity']!r} listed twice")
        out[r["entity"]] = r["region"]
    return out
