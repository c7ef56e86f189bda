"""Command line: ``geacarbon {index,carbon,fixture,estimate,run,render}``.

Exit codes: 0 ok, 2 config error, 3 data error, 4 estimation error.  Config
errors are reported before anything is written; data and estimation errors
also leave ``errors.json`` in the output directory.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from . import __version__, pipeline
from .config import RunConfig, load_config
from .errors import ConfigError, GeaCarbonError
from .fixture import make_fixture
from .models import EstimationResult
from .ols import SE_FLAVORS
from .tables import render_table
from .text_index import VARIANTS


def _add_config(sp: argparse.ArgumentParser, model_flags: bool = False,
                variant: bool = False) -> None:
    sp.add_argument("--config", required=True, metavar="PATH", help="run configuration (TOML)")
    sp.add_argument("--out", metavar="DIR", help="output directory (default: from the config)")
    if model_flags:
        sp.add_argument("--seed", type=int, metavar="N", help="seed for every model")
        sp.add_argument("--reps", type=int, metavar="N", help="bootstrap replications")
        sp.add_argument("--trim", type=float, metavar="F", help="threshold trimming fraction")
        sp.add_argument("--se", choices=SE_FLAVORS, help="standard-error flavor")
    if variant:
        sp.add_argument("--variant", choices=VARIANTS, help="attention index variant")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="geacarbon",
        description="Environmental attention index, carbon accounting and panel models.",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("index", help="compute the attention index of a report corpus")
    _add_config(sp, variant=True)
    sp = sub.add_parser("carbon", help="compute per-capita CO2 from fuel accounts")
    _add_config(sp)
    sp = sub.add_parser("estimate", help="fit the model suite on the panel file")
    _add_config(sp, model_flags=True)
    sp = sub.add_parser("run", help="corpus, carbon, panel assembly and model suite")
    _add_config(sp, model_flags=True, variant=True)

    sp = sub.add_parser("fixture", help="write the synthetic panel, corpus and config")
    sp.add_argument("--out", required=True, metavar="DIR")
    sp.add_argument("--seed", type=int, default=42, metavar="N")

    sp = sub.add_parser("render", help="render saved result JSON files as a regression table")
    sp.add_argument("results", nargs="+", metavar="RESULT_JSON")
    sp.add_argument("--labels", nargs="+", metavar="LABEL")
    sp.add_argument("--title")
    sp.add_argument("--out", metavar="DIR", help="write DIR/table.txt instead of stdout")
    return ap


def _load(args) -> RunConfig:
    cfg = load_config(args.config)
    return cfg.with_overrides(
        out=args.out,
        seed=getattr(args, "seed", None),
        reps=getattr(args, "reps", None),
        trim=getattr(args, "trim", None),
        se=getattr(args, "se", None),
        variant=getattr(args, "variant", None),
    )


def _render(args) -> int:
    results = [EstimationResult.read_json(p) for p in args.results]
    text = render_table(results, args.labels, args.title)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "table.txt").write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _report(report: "pipeline.RunReport") -> int:
    for e in report.errors:
        where = e["stage"] + (f"/{e['model']}" if "model" in e else "")
        print(f"error [{where}] {e['type']}: {e['message']}", file=sys.stderr)
    return report.exit_code


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "fixture":
            paths = make_fixture(args.out, seed=args.seed)
            print(f"fixture written to {paths.out_dir}; config {paths.config}")
            return 0
        if args.command == "render":
            return _render(args)
        cfg = _load(args)
        runner = {
            "index": pipeline.run_index,
            "carbon": pipeline.run_carbon_stage,
            "estimate": pipeline.run_estimate,
            "run": pipeline.run_all,
        }[args.command]
        return _report(runner(cfg))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (GeaCarbonError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return getattr(exc, "exit_code", 3)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
