"""Fossil-fuel CO2 accounting.

Emission factor per fuel::

    CEF = H * CH * COR * 44/12 * 1e-6

with H the average low calorific value, CH the carbon content per unit of
calorific value and COR the carbon oxidation rate.  Regional emissions are
``sum(E_fuel * CEF_fuel)`` and per-capita emissions divide by population.

Factor values are data: ``data/factor_template.csv`` lists the eight fuels
with unit columns and empty values to be filled in from IPCC (2006) tables.
Units are carried as labels only.  The physical unit in the denominator of
``H_unit`` (``kJ/kg`` -> ``kg``) must equal the unit of the consumption
quantity it is multiplied with.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import pandas as pd

from .errors import DataError, UnitMismatchError

CO2_PER_C = 44.0 / 12.0
FUELS = ("coal", "coke", "crude_oil", "gasoline", "paraffin", "diesel", "fuel_oil", "natural_gas")

FACTOR_COLUMNS = ["fuel_id", "H", "H_unit", "CH", "CH_unit", "COR"]
ENERGY_COLUMNS = ["region_id", "year", "fuel_id", "quantity", "unit"]
POPULATION_COLUMNS = ["region_id", "year", "population"]


@dataclass(frozen=True)
class EmissionFactorParams:
    fuel_id: str
    H: float
    CH: float
    COR: float
    H_unit: str = ""
    CH_unit: str = ""

    def __post_init__(self):
        for name in ("H", "CH", "COR"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise DataError(f"{self.fuel_id}: {name} must be a finite number, got {v!r}")
        if self.H <= 0 or self.CH <= 0:
            raise DataError(f"{self.fuel_id}: H and CH must be positive")
        if not 0 < self.COR <= 1:
            raise DataError(f"{self.fuel_id}: COR must lie in (0, 1], got {self.COR}")

    @property
    def physical_unit(self) -> str:
        """Denominator of ``H_unit``, i.e. the unit consumption must be reported in."""
        if "/" not in self.H_unit:
            return ""
        return self.H_unit.split("/", 1)[1].strip()


@dataclass(frozen=True)
class FuelAccount:
    region_id: str
    year: int
    quantities: Mapping[str, float]
    units: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for fuel, q in self.quantities.items():
            if not math.isfinite(q) or q < 0:
                raise DataError(
                    f"{self.region_id}/{self.year}: quantity for {fuel} must be finite and >= 0"
                )


@dataclass(frozen=True)
class CarbonResult:
    region_id: str
    year: int
    factors: dict[str, float]
    total: float
    population: float
    per_capita: float


def emission_factor(p: EmissionFactorParams) -> float:
    return p.H * p.CH * p.COR * (44 / 12) * 1e-6


def total_emissions(account: FuelAccount, factors: Mapping[str, float]) -> float:
    total = 0.0
    for fuel, q in account.quantities.items():
        if q == 0:
            continue
        if fuel not in factors:
            raise DataError(f"{account.region_id}/{account.year}: no emission factor for {fuel!r}")
        total += q * factors[fuel]
    return total


def per_capita_emissions(total: float, population: float) -> float:
    if not population > 0:
        raise DataError(f"population must be positive, got {population}")
    return total / population


def check_units(account: FuelAccount, params: Mapping[str, EmissionFactorParams]) -> None:
    """Refuse accounts whose declared quantity units disagree with the factor file."""
    for fuel, unit in account.units.items():
        p = params.get(fuel)
        if p is None or not unit or not p.physical_unit:
            continue
        if unit.strip() != p.physical_unit:
            raise UnitMismatchError(
                f"{account.region_id}/{account.year}: {fuel} quantity in {unit!r} "
                f"but H is declared per {p.physical_unit!r} ({p.H_unit})"
            )


def compute_emissions(
    accounts: list[FuelAccount],
    params: Mapping[str, EmissionFactorParams],
    population: Mapping[tuple[str, int], float],
) -> list[CarbonResult]:
    factors = {fuel: emission_factor(p) for fuel, p in params.items()}
    out = []
    for acct in accounts:
        check_units(acct, params)
        key = (acct.region_id, acct.year)
        if key not in population:
            raise DataError(f"no population for {acct.region_id}/{acct.year}")
        c = total_emissions(acct, factors)
        used = {f: factors[f] for f in acct.quantities if f in factors}
        pop = population[key]
        out.append(CarbonResult(acct.region_id, acct.year, used, c, pop, per_capita_emissions(c, pop)))
    return out


# ---------------------------------------------------------------------------
# file readers


def _read_csv(path, columns, what) -> pd.DataFrame:
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except (OSError, UnicodeDecodeError, pd.errors.ParserError) as exc:
        raise DataError(f"cannot read {what} file {path}: {exc}") from exc
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise DataError(f"{what} file {path} lacks columns {missing}")
    return df


def _num(value: str, where: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise DataError(f"{where}: {value!r} is not a number") from None


def load_factor_file(path: str | Path) -> dict[str, EmissionFactorParams]:
    df = _read_csv(path, FACTOR_COLUMNS, "factor")
    out = {}
    for i, row in df.iterrows():
        where = f"{path} row {i + 2}"
        if not row["H"] or not row["CH"] or not row["COR"]:
            raise DataError(f"{where}: factor values for {row['fuel_id']} are not populated")
        fuel = row["fuel_id"].strip()
        if fuel in out:
            raise DataError(f"{where}: duplicate fuel {fuel!r}")
        out[fuel] = EmissionFactorParams(
            fuel,
            _num(row["H"], where),
            _num(row["CH"], where),
            _num(row["COR"], where),
            row["H_unit"].strip(),
            row["CH_unit"].strip(),
        )
    return out


def load_energy_file(path: str | Path) -> list[FuelAccount]:
    df = _read_csv(path, ENERGY_COLUMNS, "energy")
    grouped: dict[tuple[str, int], tuple[dict, dict]] = {}
    for i, row in df.iterrows():
        where = f"{path} row {i + 2}"
        key = (row["region_id"], int(_num(row["year"], where)))
        q, u = grouped.setdefault(key, ({}, {}))
        fuel = row["fuel_id"].strip()
        if fuel in q:
            raise DataError(f"{where}: duplicate {fuel} for {key}")
        q[fuel] = _num(row["quantity"], where)
        u[fuel] = row["unit"].strip()
    return [FuelAccount(r, y, q, u) for (r, y), (q, u) in sorted(grouped.items())]


def load_population_file(path: str | Path) -> dict[tuple[str, int], float]:
    df = _read_csv(path, POPULATION_COLUMNS, "population")
    out = {}
    for i, row in df.iterrows():
        where = f"{path} row {i + 2}"
        key = (row["region_id"], int(_num(row["year"], where)))
        if key in out:
            raise DataError(f"{where}: duplicate population for {key}")
        out[key] = _num(row["population"], where)
    return out


def results_frame(results: list[CarbonResult]) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "region_id": [r.region_id for r in results],
            "year": [r.year for r in results],
            "total": [r.total for r in results],
            "population": [r.population for r in results],
            "per_capita": [r.per_capita for r in results],
        }
    )
