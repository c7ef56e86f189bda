"""Synthetic 30-province panel, report corpus and fuel accounts.

The generator draws a balanced 30 x 13 panel whose summary moments are pinned
to supplied targets (mean, standard deviation, minimum and maximum of every
variable), with correlated regressors and a two-way fixed-effects outcome
carrying a planted slope on the attention index.  Alongside the panel it
writes the raw inputs the pipeline consumes, so that the corpus and carbon
stages reproduce the panel's ``GEA``, ``NEW_GEA`` and ``CO2`` columns:

* one whitespace-tokenized report per province-year whose keyword share is
  the panel's attention index,
* fuel consumption per province-year that, with the bundled synthetic factor
  values and population file, yields the panel's per-capita emissions.

The factor values written here are round illustrative numbers chosen for the
fixture only.  They are not reference emission factors.

Marginals are built with a scaled Beta quantile map.  For a target
``(mean, std, lo, hi)`` the sample is ``lo``, ``hi`` and the ``n - 2`` Beta
quantiles at plotting positions ``(i - 0.5) / (n - 2)`` scaled to
``[lo, hi]``; the Beta shape is solved so that the whole sample has the target
mean and sample standard deviation.  Those ``n`` values are then assigned to
observations by the rank of a latent Gaussian draw.  The outcome is built differently: its within-entity part
comes from the structural equation, and the entity levels are chosen so that
its four moments hit their targets (the levels are absorbed by the entity
effects, so the planted slope is untouched).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np
import pandas as pd
from scipy import optimize, stats

from . import carbon
from .errors import DataError
from .panel import PanelDataset, describe
from .text_index import KeywordDictionary

YEARS = tuple(range(2007, 2020))

REGIONS: dict[str, tuple[str, ...]] = {
    "east": ("beijing", "tianjin", "hebei", "liaoning", "shanghai", "jiangsu", "zhejiang",
             "fujian", "shandong", "guangdong", "hainan"),
    "central": ("shanxi", "jilin", "heilongjiang", "anhui", "jiangxi", "henan", "hubei", "hunan"),
    "west": ("neimenggu", "guangxi", "chongqing", "sichuan", "guizhou", "yunnan", "shaanxi",
             "gansu", "qinghai", "ningxia", "xinjiang"),
}
PROVINCES = tuple(sorted(e for members in REGIONS.values() for e in members))
MUNICIPALITIES = ("beijing", "chongqing", "shanghai", "tianjin")

# (mean, std, min, max) of each panel variable.
TABLE2_TARGETS: dict[str, tuple[float, float, float, float]] = {
    "CO2": (10.151, 7.054, 2.627, 43.601),
    "GEA": (0.592, 0.208, 0.122, 1.405),
    "IT": (0.059, 0.038, 0.014, 0.236),
    "ER": (0.003, 0.003, 0.000, 0.025),
    "ENE": (0.033, 0.023, 0.003, 0.104),
    "INDU": (1.082, 0.622, 0.500, 5.169),
    "FDI": (0.022, 0.017, 0.000, 0.082),
    "LNPE": (7.399, 1.825, 0.000, 10.713),
    "LNEXP": (4.482, 0.781, 1.671, 6.617),
}

REGRESSORS = ("GEA", "IT", "ER", "ENE", "INDU", "FDI", "LNPE", "LNEXP")

# Pairwise correlations of the regressors, in REGRESSORS order.
TABLE3_CORRELATION = np.array([
    [1.000, -0.163, 0.005, -0.009, -0.066, -0.053, -0.114, 0.112],
    [-0.163, 1.000, -0.093, -0.088, 0.170, -0.185, -0.002, -0.044],
    [0.005, -0.093, 1.000, -0.146, -0.188, -0.224, -0.269, -0.309],
    [-0.009, -0.088, -0.146, 1.000, -0.203, 0.081, 0.507, 0.436],
    [-0.066, 0.170, -0.188, -0.203, 1.000, 0.126, 0.008, 0.206],
    [-0.053, -0.185, -0.224, 0.081, 0.126, 1.000, 0.111, -0.213],
    [-0.114, -0.002, -0.269, 0.507, 0.008, 0.111, 1.000, 0.401],
    [0.112, -0.044, -0.309, 0.436, 0.206, -0.213, 0.401, 1.000],
])

# Share of each regressor's latent variance that is a persistent entity component.
ENTITY_SHARE = {"GEA": 0.5, "IT": 0.7, "ER": 0.5, "ENE": 0.98, "INDU": 0.95, "FDI": 0.8,
                "LNPE": 0.8, "LNEXP": 0.9}

# AR(1) coefficient of the idiosyncratic latent components.
PERSISTENCE = 0.7

PLANTED_FOCAL = "GEA"
PLANTED_COEFFICIENT = -1.679
PLANTED_CONTROLS = {"ER": -23.063, "ENE": 306.763, "INDU": -1.010, "FDI": -9.802,
                    "LNPE": -0.047, "LNEXP": -1.909}
NOISE_SD = 0.8
MAX_ATTEMPTS = 50
YEAR_EFFECT_SD = 0.3

# Whitespace-separated tokens that contain none of the default keywords.
FILLER_WORDS = ("发展", "经济", "建设", "改革", "人民", "推进", "工作", "城市", "农村", "服务",
                "创新", "产业", "社会", "教育", "增长", "投资", "项目", "政府", "完善", "加强")
BASE_REPORT_TOKENS = 1000
TOKENS_PER_LINE = 24

# Illustrative factor values for the fixture (not reference values).  H is in
# GJ/Gg (numerically kJ/kg) or GJ/Mm3, so consumption is in Gg or Mm3 and the
# factor comes out in Gg CO2 per Gg (or per Mm3) of fuel.
SYNTHETIC_FACTORS = {
    "coal": (20000.0, "GJ/Gg", 26.0, 0.94),
    "coke": (28000.0, "GJ/Gg", 29.0, 0.93),
    "crude_oil": (42000.0, "GJ/Gg", 20.0, 0.98),
    "gasoline": (43000.0, "GJ/Gg", 19.0, 0.98),
    "paraffin": (43000.0, "GJ/Gg", 19.5, 0.98),
    "diesel": (42500.0, "GJ/Gg", 20.0, 0.98),
    "fuel_oil": (41800.0, "GJ/Gg", 21.0, 0.98),
    "natural_gas": (38900.0, "GJ/Mm3", 15.0, 0.99),
}
FUEL_WEIGHTS = np.array([8.0, 1.5, 1.0, 1.0, 0.3, 1.2, 0.5, 1.0])


@dataclass(frozen=True)
class FixturePaths:
    out_dir: Path
    panel: Path
    corpus: Path
    factors: Path
    energy: Path
    population: Path
    region_map: Path
    moments: Path
    config: Path


def calibrated_sample(n: int, mean: float, std: float, lo: float, hi: float) -> np.ndarray:
    """``n`` sorted values on ``[lo, hi]`` (both attained) with the given mean and sample std."""
    if not lo < mean < hi or std <= 0:
        raise DataError(f"infeasible target mean={mean} std={std} on [{lo}, {hi}]")
    width = hi - lo
    m, s = (mean - lo) / width, std / width
    probs = (np.arange(1, n - 1) - 0.5) / (n - 2)

    def shape(log_ab):
        return np.concatenate([[0.0], stats.beta.ppf(probs, *np.exp(log_ab)), [1.0]])

    def residual(log_ab):
        u = shape(log_ab)
        return [u.mean() - m, u.std(ddof=1) - s]

    common = m * (1 - m) / s**2 - 1
    if common <= 0:
        raise DataError(f"target std {std} too large for mean {mean} on [{lo}, {hi}]")
    sol = optimize.least_squares(residual, np.log([m * common, (1 - m) * common]),
                                 xtol=1e-15, ftol=1e-15, gtol=1e-15)
    if max(abs(r) for r in sol.fun) > 1e-9:
        raise DataError(f"could not match moments mean={mean} std={std} on [{lo}, {hi}]")
    return lo + width * shape(sol.x)


def _assign_by_rank(values: np.ndarray, latent: np.ndarray) -> np.ndarray:
    out = np.empty_like(values)
    out[np.argsort(latent, kind="stable")] = np.sort(values)
    return out


class _Infeasible(DataError):
    pass


def _entity_levels(d: np.ndarray, target, rank_latent: np.ndarray) -> np.ndarray:
    """Entity levels ``L`` so that ``L[:, None] + d`` hits ``target`` moments exactly.

    ``d`` is ``(N, T)`` with zero row means.  The entity with the lowest
    (highest) ``rank_latent`` attains the minimum (maximum); the rest follow
    an affine map of a skewed transform of their latent ranks.
    """
    mean, std, lo, hi = target
    N, T = d.shape
    n = N * T
    V = ((n - 1) * std**2 - float((d**2).sum())) / T
    if V <= 0:
        raise _Infeasible("within-entity variation exceeds the target variance")
    i_lo, i_hi = int(np.argmin(rank_latent)), int(np.argmax(rank_latent))
    L_lo, L_hi = lo - d[i_lo].min(), hi - d[i_hi].max()
    rest = [i for i in range(N) if i not in (i_lo, i_hi)]
    S = N * mean - L_lo - L_hi
    Q = V - (L_lo - mean) ** 2 - (L_hi - mean) ** 2
    m_r = S / len(rest)
    spread = Q - len(rest) * (m_r - mean) ** 2
    if spread <= 0:
        raise _Infeasible("extreme entities leave no room for the remaining spread")
    z = stats.norm.ppf((stats.rankdata(rank_latent[rest]) - 0.5) / len(rest))
    for skew in np.linspace(0.0, 2.0, 81):
        v = z if skew == 0 else np.expm1(skew * z) / skew
        b = np.sqrt(spread / ((v - v.mean()) ** 2).sum())
        L_rest = m_r + b * (v - v.mean())
        lows = L_rest + d[rest].min(axis=1)
        highs = L_rest + d[rest].max(axis=1)
        if lows.min() > lo and highs.max() < hi:
            L = np.empty(N)
            L[i_lo], L[i_hi] = L_lo, L_hi
            L[rest] = L_rest
            return L
    raise _Infeasible("no entity-level configuration satisfies the outcome range")


def _report_text(hits: int, n_tokens: int, keywords, rng: np.random.Generator) -> str:
    words = list(rng.choice(keywords, size=hits)) + list(
        rng.choice(FILLER_WORDS, size=n_tokens - hits)
    )
    rng.shuffle(words)
    lines = [
        " ".join(words[i:i + TOKENS_PER_LINE]) + " 。"
        for i in range(0, len(words), TOKENS_PER_LINE)
    ]
    return "\n".join(lines) + "\n"


def _simulate(rng: np.random.Generator, targets: Mapping[str, tuple]) -> dict:
    N, T = len(PROVINCES), len(YEARS)
    n = N * T
    k = len(REGRESSORS)
    chol = np.linalg.cholesky(TABLE3_CORRELATION)
    e = rng.standard_normal((N, k)) @ chol.T
    # idiosyncratic part: stationary AR(1) over years, same cross-correlation
    shocks = rng.standard_normal((N, T, k)) @ chol.T
    u = np.empty_like(shocks)
    u[:, 0] = shocks[:, 0]
    for t in range(1, T):
        u[:, t] = PERSISTENCE * u[:, t - 1] + np.sqrt(1 - PERSISTENCE**2) * shocks[:, t]
    u = u.reshape(n, k)
    w = np.array([ENTITY_SHARE[v] for v in REGRESSORS])
    latent = np.sqrt(w) * np.repeat(e, T, axis=0) + np.sqrt(1 - w) * u
    cols = {}
    for j, v in enumerate(REGRESSORS):
        cols[v] = _assign_by_rank(calibrated_sample(n, *targets[v]), latent[:, j])

    # Attention index: integer hits over an integer token count.
    hits = np.maximum(1, np.rint(cols["GEA"] * BASE_REPORT_TOKENS / 100)).astype(int)
    n_tok = np.rint(hits * 100 / cols["GEA"]).astype(int)
    cols["GEA"] = hits / n_tok * 100.0

    s = PLANTED_COEFFICIENT * cols[PLANTED_FOCAL] + sum(
        b * cols[c] for c, b in PLANTED_CONTROLS.items()
    )
    s = s + NOISE_SD * rng.standard_normal(n)
    year_fx = YEAR_EFFECT_SD * rng.standard_normal(T)
    within = (s.reshape(N, T) + year_fx)
    d = within - within.mean(axis=1, keepdims=True)
    rank_latent = 0.6 * e[:, REGRESSORS.index("ENE")] + 0.8 * rng.standard_normal(N)
    L = _entity_levels(d, targets["CO2"], rank_latent)
    co2 = (L[:, None] + d).ravel()
    return {"columns": cols, "co2": co2, "hits": hits, "n_tokens": n_tok}


def _fuel_accounts(rng: np.random.Generator, co2: np.ndarray, out: FixturePaths) -> np.ndarray:
    """Write factor, energy and population files; return recomputed per-capita CO2."""
    N, T = len(PROVINCES), len(YEARS)
    fuels = list(SYNTHETIC_FACTORS)
    factor_rows = [
        {"fuel_id": f, "H": repr(H), "H_unit": hu, "CH": repr(CH), "CH_unit": "kgC/GJ",
         "COR": repr(COR)}
        for f, (H, hu, CH, COR) in SYNTHETIC_FACTORS.items()
    ]
    pd.DataFrame(factor_rows, columns=carbon.FACTOR_COLUMNS).to_csv(
        out.factors, index=False, lineterminator="\n")
    params = carbon.load_factor_file(out.factors)
    cef = np.array([carbon.emission_factor(params[f]) for f in fuels])

    base_pop = rng.uniform(600.0, 12000.0, size=N)  # thousand persons
    growth = rng.uniform(0.0, 0.015, size=N)
    pop = np.round(base_pop[:, None] * (1 + growth[:, None]) ** np.arange(T), 1)
    shares = rng.dirichlet(FUEL_WEIGHTS * 5, size=N * T)
    total = co2 * pop.ravel()  # Gg CO2
    qty = total[:, None] * shares / cef[None, :]

    energy_rows, pop_rows = [], []
    for i, ent in enumerate(PROVINCES):
        for t, yr in enumerate(YEARS):
            r = i * T + t
            pop_rows.append((ent, yr, repr(float(pop[i, t]))))
            for j, f in enumerate(fuels):
                unit = params[f].physical_unit
                energy_rows.append((ent, yr, f, repr(float(qty[r, j])), unit))
    pd.DataFrame(energy_rows, columns=carbon.ENERGY_COLUMNS).to_csv(
        out.energy, index=False, lineterminator="\n")
    pd.DataFrame(pop_rows, columns=carbon.POPULATION_COLUMNS).to_csv(
        out.population, index=False, lineterminator="\n")
    results = carbon.compute_emissions(
        carbon.load_energy_file(out.energy), params, carbon.load_population_file(out.population)
    )
    return np.array([r.per_capita for r in results])


def _config_text() -> str:
    controls = '["ER", "ENE", "INDU", "FDI", "LNPE", "LNEXP"]'
    return f"""\
# Run configuration for the synthetic fixture.  Paths are relative to this file.
version = 1
output_dir = "out"

[corpus]
directory = "corpus"
segmenter = "whitespace"
match = "substring"
variant = "percent"
column = "GEA"
count_column = "NEW_GEA"

[carbon]
factors = "factors.csv"
energy = "energy.csv"
population = "population.csv"
column = "CO2"

[panel]
path = "panel.csv"
region_map = "regions.csv"

[panel.roles]
CO2 = "dependent"
GEA = "regressor"
IT = "moderator"
ER = "control"
ENE = "control"
INDU = "control"
FDI = "control"
LNPE = "control"
LNEXP = "control"

[defaults]
dependent = "CO2"
focal = "GEA"
controls = {controls}
effects = "both"
se = "cluster"
seed = 2024
reps = 300
trim = 0.05

[[models]]
name = "summary"
kind = "describe"
columns = ["CO2", "GEA", "IT", "ER", "ENE", "INDU", "FDI", "LNPE", "LNEXP"]

[[models]]
name = "correlations"
kind = "correlate"
columns = ["GEA", "IT", "ER", "ENE", "INDU", "FDI", "LNPE", "LNEXP"]

[[models]]
name = "re_baseline"
kind = "re"

[[models]]
name = "fe_baseline"
kind = "fe"

[[models]]
name = "hausman"
kind = "hausman"
fe = "fe_baseline"
re = "re_baseline"

[[models]]
name = "iv_lag"
kind = "tsls"
lag = 1

[[models]]
name = "fe_no_municipalities"
kind = "fe"
exclude_entities = ["beijing", "tianjin", "shanghai", "chongqing"]

[[models]]
name = "fe_count"
kind = "fe"
focal = "NEW_GEA"

[[models]]
name = "regional"
kind = "split"

[[models]]
name = "moderation_it"
kind = "moderation"
moderator = "IT"

[[models]]
name = "threshold_gea"
kind = "threshold"
max_thresholds = 2

[tables.baseline]
title = "Baseline estimates"
models = ["re_baseline", "fe_baseline"]
labels = ["RE", "FE"]

[tables.robustness]
title = "Robustness checks"
models = ["iv_lag_first_stage", "iv_lag", "fe_no_municipalities", "fe_count"]
labels = ["2SLS first stage", "2SLS", "Excluding municipalities", "Keyword count"]

[tables.heterogeneity]
title = "Regional heterogeneity and moderation"
models = ["regional_east", "regional_central", "regional_west", "moderation_it"]
labels = ["East", "Central", "West", "Moderation"]
"""


def make_fixture(
    out_dir: str | Path,
    seed: int = 42,
    targets: Mapping[str, tuple[float, float, float, float]] | None = None,
) -> FixturePaths:
    """Write the synthetic panel, corpus, fuel accounts, region map, config and moments file.

    Parameters
    ----------
    out_dir
        Directory to populate; created if needed.
    seed
        Seed for every random draw.
    targets
        ``{variable: (mean, std, min, max)}`` overriding the defaults in
        :data:`TABLE2_TARGETS`; unspecified variables keep their defaults.

    Returns
    -------
    FixturePaths
        Locations of everything written.
    """
    tg = dict(TABLE2_TARGETS)
    tg.update(targets or {})
    out_dir = Path(out_dir)
    out = FixturePaths(
        out_dir, out_dir / "panel.csv", out_dir / "corpus", out_dir / "factors.csv",
        out_dir / "energy.csv", out_dir / "population.csv", out_dir / "regions.csv",
        out_dir / "expected_moments.json", out_dir / "fixture.toml",
    )
    out.corpus.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    # A draw whose within-entity spread cannot fit the outcome's range is
    # discarded; the sequence of draws is fixed by the seed.
    for _ in range(MAX_ATTEMPTS):
        try:
            sim = _simulate(rng, tg)
            break
        except _Infeasible:
            continue
    else:
        raise DataError(f"no feasible draw in {MAX_ATTEMPTS} attempts; targets too tight")

    keywords = KeywordDictionary.default().keywords
    N, T = len(PROVINCES), len(YEARS)
    for i, ent in enumerate(PROVINCES):
        for t, yr in enumerate(YEARS):
            r = i * T + t
            text = _report_text(int(sim["hits"][r]), int(sim["n_tokens"][r]), keywords, rng)
            (out.corpus / f"{ent}_{yr}.txt").write_text(text, encoding="utf-8")

    co2 = _fuel_accounts(rng, sim["co2"], out)
    frame = pd.DataFrame({
        "entity": np.repeat(PROVINCES, T),
        "year": np.tile(YEARS, N),
        "CO2": co2,
        "GEA": sim["columns"]["GEA"],
        "NEW_GEA": sim["hits"].astype(float),
        **{v: sim["columns"][v] for v in REGRESSORS if v != "GEA"},
    })
    panel = PanelDataset.from_frame(frame)
    panel.to_csv(out.panel)

    pd.DataFrame(
        [(e, reg) for reg, members in REGIONS.items() for e in members],
        columns=["entity", "region"],
    ).sort_values("entity").to_csv(out.region_map, index=False, lineterminator="\n")
    out.config.write_text(_config_text(), encoding="utf-8")

    realized = describe(panel, list(tg))
    moments = {
        "seed": seed,
        "n_entities": N,
        "n_years": T,
        "years": list(YEARS),
        "targets": {v: dict(zip(("mean", "std", "min", "max"), tg[v])) for v in tg},
        "realized": {
            row["variable"]: {s: float(row[s]) for s in ("mean", "std", "min", "max")}
            for _, row in realized.iterrows()
        },
        "planted": {
            "dependent": "CO2",
            "focal": PLANTED_FOCAL,
            "coefficient": PLANTED_COEFFICIENT,
            "controls": dict(PLANTED_CONTROLS),
            "effects": "both",
            "noise_sd": NOISE_SD,
        },
        "correlation_targets": {
            "columns": list(REGRESSORS),
            "matrix": TABLE3_CORRELATION.tolist(),
        },
    }
    out.moments.write_text(json.dumps(moments, indent=2) + "\n", encoding="utf-8")
    return out
