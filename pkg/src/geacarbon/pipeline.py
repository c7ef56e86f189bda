"""Stages run by the command line: corpus, carbon, panel assembly, model suite, tables.

Output tree (names depend only on the config, never on timing)::

    index/gea_index.csv          region_id,year,gea,variant,total_tokens
    index/gea_by_year.csv        year,gea
    index/gea_by_region.csv      region_id,gea
    carbon/carbon.csv            region_id,year,total,population,per_capita
    panel/panel_assembled.csv    the panel the models were fitted on
    models/<key>.csv             term,estimate,se,t,p,stars
    models/<key>.json            full result (covariances, diagnostics)
    models/<name>.json           hausman statistic; threshold summary (<name>_threshold.json)
    series/<name>_lr_curve_<j>.csv     theta,lr
    series/<name>_simple_slopes.csv    level,slope,se
    tables/<table>.txt           regression tables
    tables/<name>.txt/.csv       describe / correlate output, threshold tables
    errors.json                  only when something failed
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from . import carbon as carbon_mod
from . import text_index as ti
from .config import ModelConfig, RunConfig
from .errors import ConfigError, DataError, EstimationError, GeaCarbonError
from .models import (
    EstimationResult,
    ModelSpec,
    fixed_effects,
    hausman_test,
    lag_name,
    lag_variable,
    load_region_map,
    moderation_fit,
    random_effects,
    simple_slopes,
    split_sample,
    threshold_fit,
    tsls,
)
from .panel import PanelDataset, correlation_matrix, describe
from .tables import render_frame, render_table, render_threshold_table


@dataclass
class RunReport:
    """What a run produced and what went wrong, for the exit status and ``errors.json``."""

    results: dict[str, EstimationResult] = field(default_factory=dict)
    errors: list[dict[str, Any]] = field(default_factory=list)

    def fail(self, stage: str, exc: GeaCarbonError, model: str | None = None) -> None:
        entry = {"stage": stage, "type": type(exc).__name__, "exit_code": exc.exit_code,
                 "message": str(exc)}
        if model is not None:
            entry["model"] = model
        self.errors.append(entry)

    @property
    def exit_code(self) -> int:
        return self.errors[0]["exit_code"] if self.errors else 0

    def write_errors(self, out_dir: Path) -> None:
        if not self.errors:
            return
        out_dir.mkdir(parents=True, exist_ok=True)
        doc = {"status": "error", "exit_code": self.exit_code, "errors": self.errors}
        _write_json(out_dir / "errors.json", doc)


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def _write_frame(df: pd.DataFrame, path: Path, index: bool = False) -> None:
    df.to_csv(path, index=index, encoding="utf-8", lineterminator="\n")


def _subdir(out: Path, name: str) -> Path:
    d = out / name
    d.mkdir(parents=True, exist_ok=True)
    return d


# ---------------------------------------------------------------------------
# corpus and carbon


@dataclass(frozen=True)
class CorpusOutput:
    indices: list[ti.AttentionIndex]
    hits: dict[tuple[str, int], int]


def run_corpus(cfg: RunConfig, out: Path) -> CorpusOutput:
    c = cfg.corpus
    if c is None:
        raise ConfigError("the config has no [corpus] section")
    dictionary = (ti.KeywordDictionary.load(c.dictionary) if c.dictionary
                  else ti.KeywordDictionary.default())
    segmenter = ti.make_segmenter(c.segmenter, c.window)
    corpus = ti.load_corpus(c.directory, c.filename_pattern)
    if not len(corpus):
        raise DataError(f"corpus directory {c.directory} contains no documents")
    indices, hits = [], {}
    for doc in corpus:
        counts = ti.count_keywords(doc, dictionary, mode=c.match, segmenter=segmenter)
        total = ti.total_tokens(doc, segmenter)
        indices.append(ti.gea_index(counts, total, c.variant, doc.region_id, doc.year))
        hits[(doc.region_id, doc.year)] = counts.total_hits
    d = _subdir(out, "index")
    ti.write_index_csv(indices, d / "gea_index.csv")
    ti.write_series_csv(ti.aggregate_index(indices, "year"), d / "gea_by_year.csv", ("year", "gea"))
    ti.write_series_csv(ti.aggregate_index(indices, "region"), d / "gea_by_region.csv",
                        ("region_id", "gea"))
    return CorpusOutput(indices, hits)


def run_carbon(cfg: RunConfig, out: Path) -> list[carbon_mod.CarbonResult]:
    c = cfg.carbon
    if c is None:
        raise ConfigError("the config has no [carbon] section")
    params = carbon_mod.load_factor_file(c.factors)
    accounts = carbon_mod.load_energy_file(c.energy)
    population = carbon_mod.load_population_file(c.population)
    results = carbon_mod.compute_emissions(accounts, params, population)
    _write_frame(carbon_mod.results_frame(results), _subdir(out, "carbon") / "carbon.csv")
    return results


def _fill_column(p: PanelDataset, column: str, values: dict[tuple[str, int], float],
                 what: str) -> PanelDataset:
    keys = list(zip(p.frame["entity"], p.frame["year"]))
    missing = [k for k in keys if k not in values]
    if missing:
        raise DataError(f"{what} has no value for {len(missing)} panel rows, e.g. {missing[0]}")
    return p.with_columns(**{column: np.array([values[k] for k in keys], dtype=float)})


def load_panel(cfg: RunConfig) -> PanelDataset:
    pc = cfg.panel
    return PanelDataset.read_csv(pc.path, pc.roles, pc.entity, pc.year)


def assemble_panel(
    cfg: RunConfig,
    corpus: CorpusOutput | None,
    carbon: list[carbon_mod.CarbonResult] | None,
    out: Path,
) -> PanelDataset:
    """Panel file with the corpus index and per-capita CO2 columns replaced by computed values."""
    p = load_panel(cfg)
    if corpus is not None:
        c = cfg.corpus
        p = _fill_column(p, c.column, {(ix.region_id, ix.year): ix.gea for ix in corpus.indices},
                         "the corpus index")
        if c.count_column:
            p = _fill_column(p, c.count_column, {k: float(v) for k, v in corpus.hits.items()},
                             "the keyword counts")
    if carbon is not None:
        p = _fill_column(p, cfg.carbon.column,
                         {(r.region_id, r.year): r.per_capita for r in carbon}, "the carbon file")
    p.to_csv(_subdir(out, "panel") / "panel_assembled.csv")
    return p


# ---------------------------------------------------------------------------
# models


def _model_sample(p: PanelDataset, m: ModelConfig) -> PanelDataset:
    if m.exclude_entities:
        unknown = [e for e in m.exclude_entities if e not in p.entities]
        if unknown:
            raise DataError(f"exclude_entities names unknown entities {unknown}")
        p = p.select_entities([e for e in p.entities if e not in m.exclude_entities])
    if m.years is not None:
        p = p.select_years([y for y in p.years if m.years[0] <= y <= m.years[1]])
    if len(p) == 0:
        raise DataError("the model sample is empty")
    return p


def _spec(m: ModelConfig) -> ModelSpec:
    return ModelSpec(m.dependent, m.focal, m.controls, m.effects, m.se)


def _save_result(key: str, r: EstimationResult, dirs: dict[str, Path], report: RunReport) -> None:
    r.to_csv(dirs["models"] / f"{key}.csv")
    r.to_json(dirs["models"] / f"{key}.json")
    report.results[key] = r


def _run_model(m: ModelConfig, p: PanelDataset, cfg: RunConfig, dirs: dict[str, Path],
               report: RunReport) -> None:
    sample = _model_sample(p, m)
    if m.kind == "describe":
        cols = m.options.get("columns") or sample.columns
        df = describe(sample, cols)
        _write_frame(df, dirs["tables"] / f"{m.name}.csv")
        (dirs["tables"] / f"{m.name}.txt").write_text(render_frame(df), encoding="utf-8")
    elif m.kind == "correlate":
        cols = m.options.get("columns") or sample.columns
        df = correlation_matrix(sample, cols)
        _write_frame(df, dirs["tables"] / f"{m.name}.csv", index=True)
        shown = df.reset_index().rename(columns={"index": "variable"})
        (dirs["tables"] / f"{m.name}.txt").write_text(render_frame(shown), encoding="utf-8")
    elif m.kind == "fe":
        _save_result(m.name, fixed_effects(sample, _spec(m)), dirs, report)
    elif m.kind == "re":
        _save_result(m.name, random_effects(sample, _spec(m)), dirs, report)
    elif m.kind == "hausman":
        if "fe" in m.options:
            for ref in (m.options["fe"], m.options["re"]):
                if ref not in report.results:
                    raise EstimationError(f"referenced model {ref!r} did not produce a result")
            fe, re = report.results[m.options["fe"]], report.results[m.options["re"]]
        else:
            fe, re = fixed_effects(sample, _spec(m)), random_effects(sample, _spec(m))
        h = hausman_test(fe, re)
        _write_json(dirs["models"] / f"{m.name}.json", {
            "statistic": h.statistic, "dof": h.dof, "p_value": h.p_value,
            "names": list(h.names), "non_psd": h.non_psd, "rank": h.rank,
        })
    elif m.kind == "tsls":
        spec = _spec(m)
        if "lag" in m.options:
            k = m.options["lag"]
            sample = lag_variable(sample, m.focal, k)
            instrument = lag_name(m.focal, k)
        else:
            instrument = m.options["instrument"]
        r = tsls(sample, spec, instrument)
        _save_result(f"{m.name}_first_stage", r.first_stage, dirs, report)
        _save_result(m.name, r.second_stage, dirs, report)
    elif m.kind == "moderation":
        r = moderation_fit(sample, _spec(m), m.options["moderator"])
        _save_result(m.name, r, dirs, report)
        slopes = simple_slopes(r, m.options.get("levels"))
        _write_frame(pd.DataFrame(slopes, columns=["level", "slope", "se"]),
                     dirs["series"] / f"{m.name}_simple_slopes.csv")
    elif m.kind == "threshold":
        fit = threshold_fit(
            sample, _spec(m),
            max_thresholds=m.options.get("max_thresholds", 1),
            trim=m.trim,
            switching_controls=m.options.get("switching_controls", False),
            reps=m.reps,
            seed=m.seed,
        )
        _save_result(m.name, fit.result, dirs, report)
        for j, (grid, lr) in enumerate(fit.lr_curves, 1):
            _write_frame(pd.DataFrame({"theta": grid, "lr": lr}),
                         dirs["series"] / f"{m.name}_lr_curve_{j}.csv")
        (dirs["tables"] / f"{m.name}_threshold.txt").write_text(
            render_threshold_table(fit), encoding="utf-8")
        _write_json(dirs["models"] / f"{m.name}_threshold.json", {
            "thresholds": list(fit.thresholds),
            "confidence_sets": [list(s) for s in fit.confidence_sets],
            "statistics": list(fit.statistics),
            "bootstrap_p": list(fit.bootstrap_p),
            "reps": m.reps,
            "seed": m.seed,
            "trim": fit.trim,
            "ssr": fit.ssr,
            "ssr_path": list(fit.ssr_path),
        })
    elif m.kind == "split":
        if cfg.panel.region_map is None:
            raise ConfigError("split models need [panel] region_map")
        parts = split_sample(sample, load_region_map(cfg.panel.region_map))
        fitter = fixed_effects if m.options.get("inner", "fe") == "fe" else random_effects
        for region in cfg.regions:
            if region not in parts:
                raise DataError(f"region {region!r} has no entities in the model sample")
            _save_result(f"{m.name}_{region}", fitter(parts[region], _spec(m)), dirs, report)
    else:  # guarded by config validation
        raise ConfigError(f"unknown model kind {m.kind!r}")


def run_models(cfg: RunConfig, p: PanelDataset, out: Path, report: RunReport) -> None:
    """Fit every model in order, then render the configured tables.

    A failing model is recorded and the suite continues; tables that need a
    missing result are skipped and recorded too.
    """
    dirs = {name: _subdir(out, name) for name in ("models", "series", "tables")}
    for m in cfg.models:
        try:
            _run_model(m, p, cfg, dirs, report)
        except GeaCarbonError as exc:
            report.fail("models", exc, m.name)
    for t in cfg.tables:
        missing = [k for k in t.models if k not in report.results]
        if missing:
            report.fail("tables", EstimationError(
                f"table {t.name!r} skipped: no result for {', '.join(missing)}"))
            continue
        text = render_table([report.results[k] for k in t.models], t.labels, t.title)
        (dirs["tables"] / f"{t.name}.txt").write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# entry points used by the CLI


def _guarded(stage: str, report: RunReport, fn, *args):
    try:
        return fn(*args), True
    except GeaCarbonError as exc:
        report.fail(stage, exc)
        return None, False


def run_index(cfg: RunConfig) -> RunReport:
    report = RunReport()
    _guarded("corpus", report, run_corpus, cfg, cfg.output_dir)
    report.write_errors(cfg.output_dir)
    return report


def run_carbon_stage(cfg: RunConfig) -> RunReport:
    report = RunReport()
    _guarded("carbon", report, run_carbon, cfg, cfg.output_dir)
    report.write_errors(cfg.output_dir)
    return report


def run_estimate(cfg: RunConfig) -> RunReport:
    """Model suite on the panel file as it stands (no corpus or carbon stage)."""
    report = RunReport()
    out = cfg.output_dir
    p, ok = _guarded("panel", report, load_panel, cfg)
    if ok:
        run_models(cfg, p, out, report)
    report.write_errors(out)
    return report


def run_all(cfg: RunConfig) -> RunReport:
    """corpus -> carbon -> panel assembly -> model suite; stops at the first stage failure."""
    report = RunReport()
    out = cfg.output_dir
    corpus = carbon = None
    ok = True
    if cfg.corpus is not None:
        corpus, ok = _guarded("corpus", report, run_corpus, cfg, out)
    if ok and cfg.carbon is not None:
        carbon, ok = _guarded("carbon", report, run_carbon, cfg, out)
    if ok:
        p, ok = _guarded("panel", report, assemble_panel, cfg, corpus, carbon, out)
    if ok:
        run_models(cfg, p, out, report)
    report.write_errors(out)
    return report
