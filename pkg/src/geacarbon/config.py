"""Run configuration: a versioned TOML file validated before any work starts.

Schema (version 1); every path is relative to the config file's directory::

    version = 1
    output_dir = "out"                 # overridden by --out

    [corpus]                           # optional stage
    directory = "corpus"
    dictionary = "keywords.txt"        # optional; built-in dictionary otherwise
    filename_pattern = "..."           # optional regex with region/year groups
    segmenter = "whitespace"           # whitespace | window | presegmented
    window = 2                         # window segmenter only
    match = "substring"                # substring | token
    variant = "percent"                # percent | count
    column = "GEA"                     # panel column replaced by the index
    count_column = "NEW_GEA"           # optional: also store raw hit counts

    [carbon]                           # optional stage
    factors = "factors.csv"
    energy = "energy.csv"
    population = "population.csv"
    column = "CO2"                     # panel column replaced by per-capita CO2

    [panel]
    path = "panel.csv"
    entity = "entity"                  # id column names in the file
    year = "year"
    region_map = "regions.csv"         # needed by split models
    [panel.roles]                      # column -> dependent|regressor|moderator|control|...

    [defaults]                         # inherited by every model
    dependent, focal, controls, effects, se, seed, reps, trim

    [[models]]
    name = "fe_baseline"               # unique; names the output files
    kind = "fe"                        # see MODEL_KINDS
    ...                                # any default, plus kind-specific keys

    [tables.<name>]
    models = ["re_baseline", "fe_baseline"]   # result keys
    labels = ["RE", "FE"]                     # optional
    title = "..."                             # optional

Result keys are model names, except that a ``tsls`` model ``m`` yields
``m_first_stage`` and ``m`` and a ``split`` model ``m`` yields ``m_<region>``
for every region in the region map.
"""

from __future__ import annotations

import csv
import re
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .ols import SE_FLAVORS
from .panel import EFFECTS, ROLES
from .text_index import DEFAULT_FILENAME_PATTERN, VARIANTS

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

CONFIG_VERSION = 1
MODEL_KINDS = ("fe", "re", "hausman", "tsls", "moderation", "threshold", "describe",
               "correlate", "split")
MIN_BOOTSTRAP_REPS = 100
SEGMENTERS = ("whitespace", "window", "presegmented")
MATCH_MODES = ("substring", "token")
SPEC_KEYS = ("dependent", "focal", "controls", "effects", "se")
RUN_KEYS = ("seed", "reps", "trim")
KIND_KEYS = {
    "fe": (),
    "re": (),
    "hausman": ("fe", "re"),
    "tsls": ("instrument", "lag"),
    "moderation": ("moderator", "levels"),
    "threshold": ("max_thresholds", "switching_controls", "threshold"),
    "describe": ("columns",),
    "correlate": ("columns",),
    "split": ("inner",),
}
COMMON_MODEL_KEYS = ("name", "kind", "exclude_entities", "years", *SPEC_KEYS, *RUN_KEYS)
_NAME = re.compile(r"^[A-Za-z0-9_.-]+$")


@dataclass(frozen=True)
class CorpusConfig:
    directory: Path
    dictionary: Path | None = None
    filename_pattern: str = DEFAULT_FILENAME_PATTERN
    segmenter: str = "whitespace"
    window: int = 2
    match: str = "substring"
    variant: str = "percent"
    column: str = "GEA"
    count_column: str | None = None


@dataclass(frozen=True)
class CarbonConfig:
    factors: Path
    energy: Path
    population: Path
    column: str = "CO2"


@dataclass(frozen=True)
class PanelConfig:
    path: Path
    entity: str = "entity"
    year: str = "year"
    region_map: Path | None = None
    roles: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class ModelConfig:
    """One entry of the model suite with defaults already merged in."""

    name: str
    kind: str
    dependent: str | None = None
    focal: str | None = None
    controls: tuple[str, ...] = ()
    effects: str = "both"
    se: str = "cluster"
    seed: int = 0
    reps: int = 300
    trim: float = 0.05
    exclude_entities: tuple[str, ...] = ()
    years: tuple[int, int] | None = None
    options: dict[str, Any] = field(default_factory=dict)

    def result_keys(self, regions: list[str]) -> list[str]:
        if self.kind == "tsls":
            return [f"{self.name}_first_stage", self.name]
        if self.kind == "split":
            return [f"{self.name}_{r}" for r in regions]
        if self.kind in ("describe", "correlate", "hausman"):
            return []
        return [self.name]


@dataclass(frozen=True)
class TableConfig:
    name: str
    models: tuple[str, ...]
    labels: tuple[str, ...] | None = None
    title: str | None = None


@dataclass(frozen=True)
class RunConfig:
    path: Path
    output_dir: Path
    panel: PanelConfig
    models: tuple[ModelConfig, ...] = ()
    corpus: CorpusConfig | None = None
    carbon: CarbonConfig | None = None
    tables: tuple[TableConfig, ...] = ()
    regions: tuple[str, ...] = ()

    def with_overrides(
        self,
        out: str | Path | None = None,
        seed: int | None = None,
        reps: int | None = None,
        trim: float | None = None,
        se: str | None = None,
        variant: str | None = None,
    ) -> "RunConfig":
        """Apply command-line overrides to every model (and the corpus variant)."""
        cfg = self
        if out is not None:
            cfg = replace(cfg, output_dir=Path(out))
        changes: dict[str, Any] = {}
        if seed is not None:
            changes["seed"] = _int(seed, "--seed", minimum=0)
        if reps is not None:
            changes["reps"] = _reps(reps, "--reps")
        if trim is not None:
            changes["trim"] = _trim(trim, "--trim")
        if se is not None:
            changes["se"] = _choice(se, SE_FLAVORS, "--se")
        if changes:
            cfg = replace(cfg, models=tuple(replace(m, **changes) for m in cfg.models))
        if variant is not None:
            v = _choice(variant, VARIANTS, "--variant")
            if cfg.corpus is None:
                raise ConfigError("--variant given but the config has no [corpus] section")
            cfg = replace(cfg, corpus=replace(cfg.corpus, variant=v))
        return cfg


# ---------------------------------------------------------------------------
# validation helpers


def _choice(value, choices, where):
    if value not in choices:
        raise ConfigError(f"{where}: {value!r} is not one of {', '.join(choices)}")
    return value


def _int(value, where, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{where}: must be >= {minimum}, got {value}")
    return value


def _reps(value, where):
    _int(value, where, minimum=0)
    if 0 < value < MIN_BOOTSTRAP_REPS:
        raise ConfigError(f"{where}: use 0 (no bootstrap) or at least {MIN_BOOTSTRAP_REPS}")
    return value


def _trim(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not 0 < value < 0.5:
        raise ConfigError(f"{where}: trim must be a number in (0, 0.5), got {value!r}")
    return float(value)


def _str(value, where):
    if not isinstance(value, str) or not value:
        raise ConfigError(f"{where}: expected a non-empty string, got {value!r}")
    return value


def _str_list(value, where):
    if not isinstance(value, list) or not all(isinstance(v, str) and v for v in value):
        raise ConfigError(f"{where}: expected a list of strings")
    return tuple(value)


def _table(doc: dict, key: str, required: bool) -> dict | None:
    if key not in doc:
        if required:
            raise ConfigError(f"missing [{key}] section")
        return None
    if not isinstance(doc[key], dict):
        raise ConfigError(f"[{key}] must be a table")
    return doc[key]


def _unknown(section: dict, allowed, where):
    extra = sorted(set(section) - set(allowed))
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(extra)}")


def _path(base: Path, value, where, kind="file") -> Path:
    p = base / _str(value, where)
    ok = p.is_dir() if kind == "dir" else p.is_file()
    if not ok:
        raise ConfigError(f"{where}: {kind} {p} does not exist")
    return p


def _read_regions(path: Path) -> tuple[str, ...]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read region map {path}: {exc}") from exc
    if not rows or "region" not in rows[0]:
        raise ConfigError(f"region map {path} needs an entity,region header and rows")
    out: list[str] = []
    for r in rows:
        if r["region"] not in out:
            out.append(r["region"])
    return tuple(out)


# ---------------------------------------------------------------------------
# sections


def _corpus(sec: dict, base: Path) -> CorpusConfig:
    _unknown(sec, ("directory", "dictionary", "filename_pattern", "segmenter", "window",
                   "match", "variant", "column", "count_column"), "[corpus]")
    if "directory" not in sec:
        raise ConfigError("[corpus]: directory is required")
    pattern = sec.get("filename_pattern", DEFAULT_FILENAME_PATTERN)
    try:
        rx = re.compile(_str(pattern, "[corpus] filename_pattern"))
    except re.error as exc:
        raise ConfigError(f"[corpus] filename_pattern: {exc}") from exc
    if not {"region", "year"} <= set(rx.groupindex):
        raise ConfigError("[corpus] filename_pattern needs named groups region and year")
    return CorpusConfig(
        directory=_path(base, sec["directory"], "[corpus] directory", "dir"),
        dictionary=(_path(base, sec["dictionary"], "[corpus] dictionary")
                    if "dictionary" in sec else None),
        filename_pattern=pattern,
        segmenter=_choice(sec.get("segmenter", "whitespace"), SEGMENTERS, "[corpus] segmenter"),
        window=_int(sec.get("window", 2), "[corpus] window", minimum=1),
        match=_choice(sec.get("match", "substring"), MATCH_MODES, "[corpus] match"),
        variant=_choice(sec.get("variant", "percent"), VARIANTS, "[corpus] variant"),
        column=_str(sec.get("column", "GEA"), "[corpus] column"),
        count_column=(_str(sec["count_column"], "[corpus] count_column")
                      if "count_column" in sec else None),
    )


def _carbon(sec: dict, base: Path) -> CarbonConfig:
    _unknown(sec, ("factors", "energy", "population", "column"), "[carbon]")
    for key in ("factors", "energy", "population"):
        if key not in sec:
            raise ConfigError(f"[carbon]: {key} is required")
    return CarbonConfig(
        _path(base, sec["factors"], "[carbon] factors"),
        _path(base, sec["energy"], "[carbon] energy"),
        _path(base, sec["population"], "[carbon] population"),
        _str(sec.get("column", "CO2"), "[carbon] column"),
    )


def _panel(sec: dict, base: Path) -> PanelConfig:
    _unknown(sec, ("path", "entity", "year", "region_map", "roles"), "[panel]")
    if "path" not in sec:
        raise ConfigError("[panel]: path is required")
    roles = sec.get("roles", {})
    if not isinstance(roles, dict):
        raise ConfigError("[panel.roles] must be a table")
    for col, role in roles.items():
        _choice(role, ROLES, f"[panel.roles] {col}")
    deps = [c for c, r in roles.items() if r == "dependent"]
    if len(deps) > 1:
        raise ConfigError(f"[panel.roles]: more than one dependent ({', '.join(deps)})")
    return PanelConfig(
        _path(base, sec["path"], "[panel] path"),
        _str(sec.get("entity", "entity"), "[panel] entity"),
        _str(sec.get("year", "year"), "[panel] year"),
        _path(base, sec["region_map"], "[panel] region_map") if "region_map" in sec else None,
        dict(roles),
    )


def _model(entry: dict, i: int, defaults: dict, roles: dict) -> ModelConfig:
    where = f"[[models]] #{i + 1}"
    if not isinstance(entry, dict):
        raise ConfigError(f"{where}: must be a table")
    kind = _choice(entry.get("kind"), MODEL_KINDS, f"{where} kind")
    name = _str(entry.get("name"), f"{where} name")
    if not _NAME.match(name):
        raise ConfigError(f"{where}: name {name!r} may only use letters, digits, '_', '.', '-'")
    where = f"model {name!r}"
    _unknown(entry, (*COMMON_MODEL_KEYS, *KIND_KEYS[kind]), where)
    merged = {**defaults, **entry}

    dependent = merged.get("dependent")
    if dependent is None:
        deps = [c for c, r in roles.items() if r == "dependent"]
        dependent = deps[0] if len(deps) == 1 else None
    focal = merged.get("focal")
    if focal is None:
        regs = [c for c, r in roles.items() if r == "regressor"]
        focal = regs[0] if len(regs) == 1 else None
    if "controls" in merged:
        controls = _str_list(merged["controls"], f"{where} controls")
    else:
        controls = tuple(c for c, r in roles.items() if r == "control")
    needs_spec = kind not in ("describe", "correlate", "hausman")
    if needs_spec:
        if dependent is None:
            raise ConfigError(f"{where}: exactly one dependent variable is required")
        if focal is None:
            raise ConfigError(f"{where}: no focal variable (set focal or one regressor role)")
        if dependent == focal or dependent in controls:
            raise ConfigError(f"{where}: dependent {dependent!r} also appears as a regressor")
        if focal in controls:
            raise ConfigError(f"{where}: focal {focal!r} also listed as a control")

    years = None
    if "years" in entry:
        y = entry["years"]
        if (not isinstance(y, list) or len(y) != 2
                or not all(isinstance(v, int) and not isinstance(v, bool) for v in y)
                or y[0] > y[1]):
            raise ConfigError(f"{where}: years must be [first, last]")
        years = (y[0], y[1])

    options = {k: entry[k] for k in KIND_KEYS[kind] if k in entry}
    if kind == "tsls":
        if "lag" in options:
            _int(options["lag"], f"{where} lag", minimum=1)
        if "instrument" in options:
            _str(options["instrument"], f"{where} instrument")
        if not options:
            raise ConfigError(f"{where}: tsls needs an instrument column or a lag")
    elif kind == "moderation":
        if "moderator" not in options:
            mods = [c for c, r in roles.items() if r == "moderator"]
            if len(mods) != 1:
                raise ConfigError(f"{where}: moderation needs a moderator")
            options["moderator"] = mods[0]
        _str(options["moderator"], f"{where} moderator")
        if "levels" in options and not (
            isinstance(options["levels"], list)
            and all(isinstance(v, (int, float)) and not isinstance(v, bool)
                    for v in options["levels"])
        ):
            raise ConfigError(f"{where}: levels must be a list of numbers")
    elif kind == "threshold":
        mt = options.get("max_thresholds", 1)
        if mt not in (1, 2) or isinstance(mt, bool):
            raise ConfigError(f"{where}: max_thresholds must be 1 or 2")
        if "switching_controls" in options and not isinstance(options["switching_controls"], bool):
            raise ConfigError(f"{where}: switching_controls must be true or false")
        if options.get("threshold", focal) != focal:
            raise ConfigError(f"{where}: the threshold variable must be the focal variable")
    elif kind in ("describe", "correlate"):
        if "columns" in options:
            options["columns"] = list(_str_list(options["columns"], f"{where} columns"))
    elif kind == "split":
        options["inner"] = _choice(options.get("inner", "fe"), ("fe", "re"), f"{where} inner")

    return ModelConfig(
        name=name,
        kind=kind,
        dependent=dependent,
        focal=focal,
        controls=controls,
        effects=_choice(merged.get("effects", "both"), EFFECTS, f"{where} effects"),
        se=_choice(merged.get("se", "cluster"), SE_FLAVORS, f"{where} se"),
        seed=_int(merged.get("seed", 0), f"{where} seed", minimum=0),
        reps=_reps(merged.get("reps", 300), f"{where} reps"),
        trim=_trim(merged.get("trim", 0.05), f"{where} trim"),
        exclude_entities=_str_list(entry.get("exclude_entities", []), f"{where} exclude_entities"),
        years=years,
        options=options,
    )


def parse_config(doc: dict, path: str | Path) -> RunConfig:
    """Validate a decoded TOML document; ``path`` anchors relative paths."""
    path = Path(path)
    base = path.parent
    _unknown(doc, ("version", "output_dir", "corpus", "carbon", "panel", "defaults", "models",
                   "tables"), "config")
    if doc.get("version") != CONFIG_VERSION:
        raise ConfigError(f"config version must be {CONFIG_VERSION}, got {doc.get('version')!r}")
    output_dir = base / _str(doc.get("output_dir", "out"), "output_dir")

    corpus_sec = _table(doc, "corpus", required=False)
    carbon_sec = _table(doc, "carbon", required=False)
    corpus = _corpus(corpus_sec, base) if corpus_sec is not None else None
    carbon = _carbon(carbon_sec, base) if carbon_sec is not None else None
    panel = _panel(_table(doc, "panel", required=True), base)

    defaults = _table(doc, "defaults", required=False) or {}
    _unknown(defaults, (*SPEC_KEYS, *RUN_KEYS), "[defaults]")
    entries = doc.get("models", [])
    if not isinstance(entries, list):
        raise ConfigError("models must be an array of tables ([[models]])")
    models = [_model(e, i, defaults, panel.roles) for i, e in enumerate(entries)]

    names = [m.name for m in models]
    dup = sorted({n for n in names if names.count(n) > 1})
    if dup:
        raise ConfigError(f"duplicate model name(s) {', '.join(dup)}")
    regions: tuple[str, ...] = ()
    if any(m.kind == "split" for m in models):
        if panel.region_map is None:
            raise ConfigError("split models need [panel] region_map")
        regions = _read_regions(panel.region_map)
    for j, m in enumerate(models):
        if m.kind == "hausman":
            for key, kind in (("fe", "fe"), ("re", "re")):
                ref = m.options.get(key)
                if ref is None:
                    continue
                earlier = {x.name: x.kind for x in models[:j]}
                if earlier.get(ref) != kind:
                    raise ConfigError(
                        f"model {m.name!r}: {key} = {ref!r} must name an earlier {kind} model"
                    )
            if len([k for k in ("fe", "re") if k in m.options]) == 1:
                raise ConfigError(f"model {m.name!r}: give both fe and re, or neither")
            if "fe" not in m.options and (m.dependent is None or m.focal is None):
                raise ConfigError(f"model {m.name!r}: hausman without fe/re needs a model spec")

    keys = [k for m in models for k in m.result_keys(list(regions))]
    tables = []
    tsec = _table(doc, "tables", required=False) or {}
    for tname, t in tsec.items():
        where = f"[tables.{tname}]"
        if not isinstance(t, dict):
            raise ConfigError(f"{where} must be a table")
        _unknown(t, ("models", "labels", "title"), where)
        refs = _str_list(t.get("models"), f"{where} models")
        if not refs:
            raise ConfigError(f"{where}: models is empty")
        missing = [r for r in refs if r not in keys]
        if missing:
            raise ConfigError(f"{where}: unknown result key(s) {', '.join(missing)}")
        labels = _str_list(t["labels"], f"{where} labels") if "labels" in t else None
        if labels is not None and len(labels) != len(refs):
            raise ConfigError(f"{where}: one label per model required")
        title = _str(t["title"], f"{where} title") if "title" in t else None
        tables.append(TableConfig(_str(tname, where), refs, labels, title))

    return RunConfig(path, output_dir, panel, tuple(models), corpus, carbon, tuple(tables),
                     regions)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}") from exc
    return parse_config(doc, path)
