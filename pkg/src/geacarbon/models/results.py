"""Model specification and estimation-result containers."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from ..errors import DataError, EstimationError
from ..ols import SE_FLAVORS
from ..panel import EFFECTS, PanelDataset

STAR_LEVELS = ((0.01, "***"), (0.05, "**"), (0.1, "*"))
RESULT_CSV_COLUMNS = ["term", "estimate", "se", "t", "p", "stars"]


def stars_for(p: float) -> str:
    for level, mark in STAR_LEVELS:
        if p < level:
            return mark
    return ""


def two_sided_p(t: np.ndarray, df: int) -> np.ndarray:
    return 2.0 * stats.t.sf(np.abs(t), df)


@dataclass(frozen=True)
class ModelSpec:
    dependent: str
    focal: str
    controls: tuple[str, ...] = ()
    effects: str = "both"
    se_flavor: str = "cluster"
    sample_filter: Callable[[str, int], bool] | None = None

    def __post_init__(self):
        object.__setattr__(self, "controls", tuple(self.controls))
        if self.focal in self.controls:
            raise DataError(f"focal variable {self.focal!r} also listed as a control")
        if self.dependent == self.focal or self.dependent in self.controls:
            raise DataError(f"dependent {self.dependent!r} cannot be a regressor")
        if len(set(self.controls)) != len(self.controls):
            raise DataError("duplicate control variables")
        if self.effects not in EFFECTS:
            raise DataError(f"effects must be one of {EFFECTS}")
        if self.se_flavor not in SE_FLAVORS:
            raise DataError(f"se_flavor must be one of {SE_FLAVORS}")

    @property
    def regressors(self) -> list[str]:
        return [self.focal, *self.controls]

    def sample(self, p: PanelDataset, extra: Sequence[str] = ()) -> PanelDataset:
        p._require([self.dependent, *self.regressors, *extra])
        return p.filter(self.sample_filter) if self.sample_filter is not None else p


@dataclass(frozen=True)
class EstimationResult:
    model_kind: str
    dependent: str
    names: tuple[str, ...]
    params: np.ndarray
    cov: np.ndarray
    cov_classical: np.ndarray
    df_resid: int
    r_squared: float
    n_obs: int
    effects: str = "both"
    se_flavor: str = "cluster"
    diagnostics: dict = field(default_factory=dict)
    hidden: tuple[str, ...] = ()

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.cov), 0.0, None))

    @property
    def tvalues(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.params / self.se

    @property
    def pvalues(self) -> np.ndarray:
        return two_sided_p(self.tvalues, self.df_resid)

    @property
    def stars(self) -> list[str]:
        return [stars_for(p) for p in self.pvalues]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise EstimationError(f"no coefficient named {name!r}") from None

    def coef(self, name: str) -> float:
        return float(self.params[self.index(name)])

    def stderr(self, name: str) -> float:
        return float(self.se[self.index(name)])

    @property
    def entity_effects(self) -> bool:
        return self.effects in ("both", "entity")

    @property
    def time_effects(self) -> bool:
        return self.effects in ("both", "time")

    def table(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "term": list(self.names),
                "estimate": self.params,
                "se": self.se,
                "t": self.tvalues,
                "p": self.pvalues,
                "stars": self.stars,
            },
            columns=RESULT_CSV_COLUMNS,
        )

    def to_csv(self, path: str | Path) -> None:
        self.table().to_csv(path, index=False, encoding="utf-8", lineterminator="\n")

    def to_dict(self) -> dict:
        return {
            "model_kind": self.model_kind,
            "dependent": self.dependent,
            "names": list(self.names),
            "params": self.params.tolist(),
            "cov": self.cov.tolist(),
            "cov_classical": self.cov_classical.tolist(),
            "df_resid": self.df_resid,
            "r_squared": self.r_squared,
            "n_obs": self.n_obs,
            "effects": self.effects,
            "se_flavor": self.se_flavor,
            "diagnostics": _jsonable(self.diagnostics),
            "hidden": list(self.hidden),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EstimationResult":
        return cls(
            d["model_kind"],
            d["dependent"],
            tuple(d["names"]),
            np.asarray(d["params"], dtype=float),
            np.asarray(d["cov"], dtype=float),
            np.asarray(d["cov_classical"], dtype=float),
            int(d["df_resid"]),
            float(d["r_squared"]),
            int(d["n_obs"]),
            d.get("effects", "both"),
            d.get("se_flavor", "cluster"),
            dict(d.get("diagnostics", {})),
            tuple(d.get("hidden", ())),
        )

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n",
                              encoding="utf-8")

    @classmethod
    def read_json(cls, path: str | Path) -> "EstimationResult":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj
