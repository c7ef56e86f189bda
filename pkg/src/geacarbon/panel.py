"""Balanced panel container, two-way within transformation, descriptive tables."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import DataError

ROLES = ("dependent", "regressor", "moderator", "control", "instrument", "id")
EFFECTS = ("both", "entity", "time", "none")


@dataclass(frozen=True)
class PanelDataset:
    """Long-format balanced panel sorted by ``(entity, year)``.

    ``frame`` always has ``entity`` and ``year`` as its first two columns and a
    RangeIndex; row ``i * T + t`` holds entity ``i`` in year ``t``.
    """

    frame: pd.DataFrame
    roles: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        df = self.frame
        if list(df.columns[:2]) != ["entity", "year"]:
            raise DataError("panel frame must start with 'entity', 'year' columns")
        if df.columns.duplicated().any():
            dup = list(df.columns[df.columns.duplicated()])
            raise DataError(f"duplicate column names {dup}")
        if df[["entity", "year"]].duplicated().any():
            raise DataError("duplicate (entity, year) rows")
        n_ent = df["entity"].nunique()
        n_year = df["year"].nunique()
        if len(df) != n_ent * n_year:
            raise DataError(
                f"unbalanced panel: {len(df)} rows for {n_ent} entities x {n_year} years"
            )
        values = df.iloc[:, 2:]
        if values.shape[1]:
            if not all(pd.api.types.is_numeric_dtype(t) for t in values.dtypes):
                bad = [c for c, t in values.dtypes.items() if not pd.api.types.is_numeric_dtype(t)]
                raise DataError(f"non-numeric panel columns {bad}")
            if not np.isfinite(values.to_numpy(dtype=float)).all():
                raise DataError("panel contains non-finite values")
        for col, role in self.roles.items():
            if role not in ROLES:
                raise DataError(f"unknown role {role!r} for column {col!r}")

    @classmethod
    def from_frame(
        cls,
        df: pd.DataFrame,
        entity: str = "entity",
        year: str = "year",
        roles: Mapping[str, str] | None = None,
    ) -> "PanelDataset":
        for c in (entity, year):
            if c not in df.columns:
                raise DataError(f"panel lacks id column {c!r}")
        df = df.rename(columns={entity: "entity", year: "year"})
        df["entity"] = df["entity"].astype(str)
        df["year"] = df["year"].astype(int)
        others = [c for c in df.columns if c not in ("entity", "year")]
        df = df[["entity", "year", *others]].sort_values(["entity", "year"], kind="stable")
        return cls(df.reset_index(drop=True), dict(roles or {}))

    @classmethod
    def read_csv(cls, path: str | Path, roles: Mapping[str, str] | None = None,
                 entity: str = "entity", year: str = "year") -> "PanelDataset":
        try:
            df = pd.read_csv(path, encoding="utf-8")
        except (OSError, UnicodeDecodeError, pd.errors.ParserError) as exc:
            raise DataError(f"cannot read panel file {path}: {exc}") from exc
        return cls.from_frame(df, entity, year, roles)

    def to_csv(self, path: str | Path) -> None:
        self.frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")

    # -- shape ------------------------------------------------------------

    @property
    def entities(self) -> list[str]:
        return list(pd.unique(self.frame["entity"]))

    @property
    def years(self) -> list[int]:
        return sorted(pd.unique(self.frame["year"]).tolist())

    @property
    def n_entities(self) -> int:
        return self.frame["entity"].nunique()

    @property
    def n_years(self) -> int:
        return self.frame["year"].nunique()

    @property
    def columns(self) -> list[str]:
        return list(self.frame.columns[2:])

    def __len__(self) -> int:
        return len(self.frame)

    def column(self, name: str) -> np.ndarray:
        self._require([name])
        return self.frame[name].to_numpy(dtype=float)

    def matrix(self, names: Sequence[str]) -> np.ndarray:
        self._require(names)
        return self.frame[list(names)].to_numpy(dtype=float).reshape(len(self.frame), len(names))

    def _require(self, names: Iterable[str]) -> None:
        missing = [c for c in names if c not in self.frame.columns[2:]]
        if missing:
            raise DataError(f"unknown panel column(s) {missing}")

    # -- derived panels -----------------------------------------------------

    def with_columns(self, **columns: np.ndarray) -> "PanelDataset":
        df = self.frame.copy()
        for name, values in columns.items():
            values = np.asarray(values, dtype=float)
            if values.shape != (len(df),):
                raise DataError(f"column {name!r} has shape {values.shape}, expected ({len(df)},)")
            df[name] = values
        return PanelDataset(df, dict(self.roles))

    def with_roles(self, roles: Mapping[str, str]) -> "PanelDataset":
        return PanelDataset(self.frame, {**self.roles, **roles})

    def select_entities(self, entities: Iterable[str]) -> "PanelDataset":
        keep = set(entities)
        df = self.frame[self.frame["entity"].isin(keep)].reset_index(drop=True)
        return PanelDataset(df, dict(self.roles))

    def select_years(self, years: Iterable[int]) -> "PanelDataset":
        keep = set(years)
        df = self.frame[self.frame["year"].isin(keep)].reset_index(drop=True)
        return PanelDataset(df, dict(self.roles))

    def filter(self, predicate: Callable[[str, int], bool]) -> "PanelDataset":
        mask = [bool(predicate(e, y)) for e, y in zip(self.frame["entity"], self.frame["year"])]
        df = self.frame[np.asarray(mask, dtype=bool)].reset_index(drop=True)
        return PanelDataset(df, dict(self.roles))


def demean(values: np.ndarray, n_entities: int, n_years: int, effects: str = "both") -> np.ndarray:
    """Remove entity and/or year means from an ``(N*T, m)`` or ``(N*T,)`` array.

    Rows must be ordered entity-major, as in :class:`PanelDataset`.
    """
    if effects not in EFFECTS:
        raise ValueError(f"effects must be one of {EFFECTS}")
    arr = np.asarray(values, dtype=float)
    flat = arr.ndim == 1
    cube = arr.reshape(n_entities, n_years, -1)
    if effects == "none":
        out = cube.copy()
    elif effects == "entity":
        out = cube - cube.mean(axis=1, keepdims=True)
    elif effects == "time":
        out = cube - cube.mean(axis=0, keepdims=True)
    else:
        out = (
            cube
            - cube.mean(axis=1, keepdims=True)
            - cube.mean(axis=0, keepdims=True)
            + cube.mean(axis=(0, 1), keepdims=True)
        )
    out = out.reshape(n_entities * n_years, -1)
    return out[:, 0] if flat else out


def absorbed_effects(n_entities: int, n_years: int, effects: str) -> int:
    """Number of effect parameters absorbed by the within transformation, besides the constant."""
    return {
        "both": (n_entities - 1) + (n_years - 1),
        "entity": n_entities - 1,
        "time": n_years - 1,
        "none": 0,
    }[effects]


def within_transform(p: PanelDataset, columns: Sequence[str], effects: str = "both") -> PanelDataset:
    """Two-way demean ``columns``: x - x_i. - x_.t + x_.. (one-way for ``effects``)."""
    columns = list(columns)
    x = p.matrix(columns)
    w = demean(x, p.n_entities, p.n_years, effects)
    return p.with_columns(**{c: w[:, j] for j, c in enumerate(columns)})


def describe(p: PanelDataset, columns: Sequence[str] | None = None) -> pd.DataFrame:
    columns = list(columns) if columns is not None else p.columns
    rows = []
    for c in columns:
        x = p.column(c)
        rows.append(
            {
                "variable": c,
                "obs": len(x),
                "mean": x.mean(),
                "std": x.std(ddof=1) if len(x) > 1 else 0.0,
                "min": x.min(),
                "max": x.max(),
            }
        )
    return pd.DataFrame(rows, columns=["variable", "obs", "mean", "std", "min", "max"])


def correlation_matrix(p: PanelDataset, columns: Sequence[str]) -> pd.DataFrame:
    columns = list(columns)
    x = p.matrix(columns)
    if x.shape[0] < 2:
        raise DataError("correlation needs at least two observations")
    const = [c for j, c in enumerate(columns) if np.ptp(x[:, j]) == 0]
    if const:
        raise DataError(f"constant column(s) {const} have no correlation")
    corr = np.corrcoef(x, rowvar=False)
    corr = np.atleast_2d(corr)
    np.fill_diagonal(corr, 1.0)
    return pd.DataFrame(corr, index=columns, columns=columns)
