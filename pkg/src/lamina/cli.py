"""Command-line experiment runner: ``lamina <subcommand> [options]``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import ConfigError, ExperimentConfig, template_text
from .experiments import PIPELINES, Outcome

TABLE_OUTPUTS = {"contraction", "central", "conjugate", "holder-fit", "atypical", "nu-curve", "cover-volume",
                 "box-dim", "weak-ergodic"}


def fmt(value):
    """Serialize a value losslessly: floats with 17 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(value)


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        # JSON has no inf/nan; keep them as strings
        return float(fmt(v)) if math.isfinite(v) else fmt(v)
    return value


def metadata(cfg: ExperimentConfig, subcommand: str) -> dict:
    return {
        "subcommand": subcommand,
        "config_sha256": cfg.digest(),
        "seed": cfg.seed,
        "perturbation_seed": cfg.perturbation_seed,
        "lamina": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def write_csv(path: Path, outcome: Outcome, meta: dict) -> None:
    with open(path, "w", newline="") as fh:
        for k, v in meta.items():
            fh.write(f"# {k}: {v}\n")
        for k, v in outcome.summary.items():
            fh.write(f"# {k}: {fmt(v)}\n")
        for k, v in outcome.checks.items():
            fh.write(f"# check {k}: {'pass' if v else 'fail'}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(outcome.columns)
        for row in outcome.rows:
            w.writerow([fmt(x) for x in row])


def write_json(path: Path, outcome: Outcome, meta: dict) -> None:
    doc = {"metadata": meta, "report": _jsonable(outcome.report or {}), "summary": _jsonable(outcome.summary),
           "checks": {k: bool(v) for k, v in outcome.checks.items()}, "passed": outcome.passed}
    path.write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n")


def resolve_threads(arg, cfg: ExperimentConfig) -> int:
    if arg is not None:
        return max(1, int(arg))
    env = os.environ.get("LAMINA_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"LAMINA_THREADS must be an integer, got {env!r}") from None
    return cfg.threads or 1


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    data = cfg.to_dict()
    top = {"epsilon": args.epsilon, "depth": args.depth, "seed": args.seed, "n_points": args.n_points,
           "kind": args.kind, "delta": args.delta}
    for k, v in top.items():
        if v is not None:
            data[k] = v
    sym = {"w": args.w, "kappa": args.kappa, "N": args.N}
    for k, v in sym.items():
        if v is not None:
            data["symbolic"][k] = v
    if args.base is not None:
        data["base"]["kind"] = args.base
    return ExperimentConfig.from_dict(data)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lamina", description=__doc__)
    p.add_argument("--version", action="version", version=f"lamina {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("config-template", help="print the commented default configuration")
    for name in PIPELINES:
        sp = sub.add_parser(name, help=f"run the {name} pipeline")
        sp.add_argument("--config", type=Path, help="YAML configuration file")
        sp.add_argument("--out", type=Path, help="output file (default: <output_dir>/<subcommand>.csv|json)")
        sp.add_argument("--threads", type=int, help="worker cap (fallback: LAMINA_THREADS, then config)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--epsilon", type=float, help="perturbation amplitude")
        sp.add_argument("--delta", type=float)
        sp.add_argument("--depth", type=int)
        sp.add_argument("--n-points", dest="n_points", type=int)
        sp.add_argument("--kind", choices=["s", "u"])
        sp.add_argument("--base", choices=["solenoid", "anosov"])
        sp.add_argument("--w", type=str, help="binary pattern")
        sp.add_argument("--kappa", type=float)
        sp.add_argument("--N", type=int, help="word length")
    return p


def _error(command, exc) -> int:
    record = {"error": type(exc).__name__, "message": str(exc), "subcommand": command}
    print(json.dumps(record), file=sys.stderr)
    return 2


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "config-template":
        sys.stdout.write(template_text())
        return 0
    try:
        cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
        cfg = _apply_overrides(cfg, args)
        threads = resolve_threads(args.threads, cfg)
        outcome = PIPELINES[args.command](cfg, threads=threads)
    except Exception as exc:  # every module error becomes an error record
        return _error(args.command, exc)
    table = args.command in TABLE_OUTPUTS
    out = args.out or Path(cfg.output_dir) / f"{args.command}.{'csv' if table else 'json'}"
    out.parent.mkdir(parents=True, exist_ok=True)
    meta = metadata(cfg, args.command)
    if table:
        write_csv(out, outcome, meta)
    else:
        write_json(out, outcome, meta)
    status = "pass" if outcome.passed else "fail"
    summary = ", ".join(f"{k}={fmt(v)}" for k, v in outcome.summary.items() if not isinstance(v, (list, dict)))
    print(f"{args.command}: {status} -> {out}" + (f" ({summary})" if summary else ""))
    for k, v in outcome.checks.items():
        if not v:
            print(f"  check {k}: fail", file=sys.stderr)
    return 0 if outcome.passed else 1


if __name__ == "__main__":
    sys.exit(main())
