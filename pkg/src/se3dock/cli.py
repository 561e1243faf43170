"""Command line: ``se3dock run | train | compare``.

Exit codes: 0 ok, 2 configuration error, 3 run error, 4 training error,
5 comparison grid mismatch.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from pathlib import Path

from . import adapt, config, export, sim
from .dynamics import NonPhysicalInertia

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUN = 3
EXIT_TRAIN = 4
EXIT_GRID = 5


def _err(msg: str) -> None:
    print(f"se3dock: {msg}", file=sys.stderr)


def _load(path, overrides) -> config.RunConfig:
    ov = dict(config.parse_override(o) for o in overrides or [])
    return config.load(path, ov)


def _weights(cfg: config.RunConfig, required: bool) -> adapt.TrainedModels | None:
    p = cfg.weights
    if p is None:
        if required:
            raise config.ConfigError("the adaptive variant needs [adaptation] weights")
        return None
    if not p.exists():
        if required:
            raise config.ConfigError(f"weights file not found: {p}")
        return None
    try:
        return adapt.load_weights(p)
    except (adapt.WeightFileError, OSError) as exc:
        raise config.ConfigError(str(exc)) from exc


def cmd_run(args) -> int:
    try:
        cfg = config.with_variant(_load(args.config, args.set), args.variant, args.seed)
        models = _weights(cfg, cfg.scenario.variant == "adaptive")
    except config.ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    out = Path(args.out) if args.out else cfg.csv
    try:
        log = sim.run(cfg.scenario, models)
    except (ArithmeticError, ValueError) as exc:
        _err(f"run failed at {exc}")
        return EXIT_RUN
    out.parent.mkdir(parents=True, exist_ok=True)
    export.write_log(out, log)
    m = sim.metrics(log, sim.bound_for(cfg.scenario))
    out.with_suffix(".json").write_text(export.dumps(export.metrics_doc(m)), encoding="utf-8")
    print(f"wrote {out} ({len(log.t)} steps)")
    return EXIT_OK


def cmd_train(args) -> int:
    try:
        cfg = _load(args.config, args.set)
        paths = [Path(p) for p in args.scenarios] if args.scenarios else cfg.training_scenarios
        if len(paths) < 2:
            raise config.ConfigError(
                f"offline training needs at least two scenario configs (two different manoeuvres), got {len(paths)}"
            )
        scenarios = [config.with_variant(config.load(p), "conventional").scenario for p in paths]
    except config.ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    out = Path(args.out_weights) if args.out_weights else (cfg.weights or Path("weights.bin"))
    try:
        ds = sim.generate_training_dataset(scenarios)
        a = cfg.scenario.adaptation
        models = adapt.offline_train(ds, cfg.scenario.controller.sliding, cfg.training, a.discount, a.r1, a.r2)
    except adapt.TrainingDiverged as exc:
        _err(f"training diverged: {exc}")
        return EXIT_TRAIN
    except (ArithmeticError, ValueError) as exc:
        _err(f"training failed: {exc}")
        return EXIT_TRAIN
    out.parent.mkdir(parents=True, exist_ok=True)
    adapt.save_weights(out, models)
    curves = out.with_name(out.stem + "_losses.csv")
    curves.write_bytes(export.loss_curves_csv(models.curves).encode("utf-8"))
    for k in sorted(models.curves):
        c = models.curves[k]
        print(f"{k}: holdout loss {c[0]:.4g} -> {c[-1]:.4g}")
    print(f"wrote {out} and {curves}")
    return EXIT_OK


def cmd_compare(args) -> int:
    t_max = math.nan
    try:
        a = export.read_log(args.log_a)
        b = export.read_log(args.log_b)
        if args.config:
            t_max = sim.bound_for(_load(args.config, None).scenario)
    except (config.ConfigError, export.CsvFormatError, OSError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    try:
        c = sim.compare(a, b, t_max, args.threshold)
    except sim.GridMismatch as exc:
        _err(str(exc))
        return EXIT_GRID
    table = export.comparison_table(c)
    sys.stdout.write(table)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(export.dumps(export.comparison_doc(c)), encoding="utf-8")
        out.with_suffix(".txt").write_text(table, encoding="utf-8")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="se3dock", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one scenario and write a CSV log plus JSON metrics")
    r.add_argument("config")
    r.add_argument("--variant", choices=["conventional", "adaptive"])
    r.add_argument("--seed", type=int, help="noise seed (overrides [noise] seed)")
    r.add_argument("--out", help="CSV path (metrics go next to it as .json)")
    r.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override a config value")
    r.set_defaults(func=cmd_run)

    t = sub.add_parser("train", help="generate training data from scenarios and fit the networks")
    t.add_argument("config")
    t.add_argument("--scenarios", nargs="+", help="scenario configs (overrides [training] scenarios)")
    t.add_argument("--out-weights", help="weight file path (overrides [adaptation] weights)")
    t.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE")
    t.set_defaults(func=cmd_train)

    c = sub.add_parser("compare", help="metrics and claims for candidate log A against baseline log B")
    c.add_argument("log_a")
    c.add_argument("log_b")
    c.add_argument("--out", help="JSON path (the text table is also written next to it as .txt)")
    c.add_argument("--config", help="scenario config used to report the settling-time bound")
    c.add_argument("--threshold", type=float, default=sim.SETTLING_THRESHOLD)
    c.set_defaults(func=cmd_compare)
    return p


def _show_warning(message, category, filename, lineno, file=None, line=None):
    _err(f"warning: {message}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    with warnings.catch_warnings():
        # the default target inertia violates the triangle inequality; say so once
        warnings.simplefilter("once", NonPhysicalInertia)
        warnings.showwarning = _show_warning
        return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
