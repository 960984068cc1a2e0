"""Command-line interface: ``randnn <verb> [options]``.

Every run prints the fully resolved configuration to stderr. Exit status is
0 on success, 1 on any error, 2 on usage errors and 3 when
``fatal_unstable`` is set and the model fails a stability check.
"""

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import experiment
from .config import ExperimentConfig, load_config
from .exceptions import ConfigError, RandNNError
from .io import load_model, load_structures, load_timeseries, save_model
from .models import STRUCTURE_KINDS, init_model

EXIT_OK, EXIT_ERROR, EXIT_UNSTABLE = 0, 1, 3


def _format_value(v):
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.6g}"
    return str(v)


def write_table(rows, fmt, out):
    """Write a list of dicts as CSV or as an aligned text table."""
    if not rows:
        return
    columns = []
    for row in rows:
        columns += [k for k in row if k not in columns]
    if fmt == "csv":
        writer = csv.DictWriter(out, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _format_value(row.get(k, "")) for k in columns})
        return
    cells = [[_format_value(row.get(k, "")) for k in columns] for row in rows]
    widths = [max(len(c), *(len(r[i]) for r in cells)) for i, c in enumerate(columns)]
    out.write("  ".join(c.rjust(w) for c, w in zip(columns, widths)).rstrip() + "\n")
    for r in cells:
        out.write("  ".join(v.rjust(w) for v, w in zip(r, widths)).rstrip() + "\n")


def write_mapping(mapping, fmt, out):
    if fmt == "csv":
        write_table([mapping], fmt, out)
        return
    width = max(len(k) for k in mapping)
    for k, v in mapping.items():
        out.write(f"{k.ljust(width)}  {_format_value(v)}\n")


class _Output:
    """Context manager yielding ``--out`` opened for writing, or stdout."""

    def __init__(self, path):
        self.path = path
        self.fh = None

    def __enter__(self):
        if self.path is None:
            return sys.stdout
        self.fh = open(self.path, "w", encoding="utf-8", newline="")
        return self.fh

    def __exit__(self, *exc):
        if self.fh is not None:
            self.fh.close()


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.workers is not None:
        changes["workers"] = args.workers
    return cfg.replace(**changes) if changes else cfg


def load_dataset(cfg, path) -> experiment.Dataset:
    if cfg.model in STRUCTURE_KINDS:
        return experiment.Dataset(structures=load_structures(path))
    X, Y = load_timeseries(path)
    return experiment.Dataset(X=X, Y=Y)


def _model_for(args):
    """Model from ``--model`` if given, else a fresh one from the config."""
    if args.model:
        model = load_model(args.model)
        _announce(model.config)
        return model
    cfg = resolve_config(args)
    _announce(cfg)
    input_dim = cfg.input_dim
    if args.data:
        input_dim = load_dataset(cfg, args.data).input_dim
    if input_dim is None:
        input_dim = 1
    return init_model(cfg, input_dim)


def _announce(cfg):
    sys.stderr.write("# resolved config\n" + cfg.to_json() + "\n")


def _series(args, model):
    if not args.data or model.kind in STRUCTURE_KINDS:
        return None
    X, _ = load_timeseries(args.data)
    return X


def _unstable_exit(cfg, stable):
    return EXIT_UNSTABLE if (cfg.fatal_unstable and not stable) else EXIT_OK


def cmd_init(args):
    cfg = resolve_config(args)
    _announce(cfg)
    if cfg.model == "deep_rvfl":
        raise ConfigError("deep_rvfl encoders are fitted from data; use the train verb")
    input_dim = cfg.input_dim
    if args.data:
        input_dim = load_dataset(cfg, args.data).input_dim
    if input_dim is None:
        raise ConfigError("set input_dim in the config or pass --data to infer it")
    model = init_model(cfg, input_dim)
    if args.out:
        save_model(model, args.out, materialize=False if args.seed_only else None)
    info = {"model": cfg.model, "input_dim": input_dim, **model.stability()}
    write_mapping(info, args.format, sys.stdout)
    return _unstable_exit(cfg, info.get("necessary_holds", True))


def _require_data(args):
    if not args.data:
        raise ConfigError(f"{args.verb} needs --data")


def cmd_train(args):
    _require_data(args)
    cfg = resolve_config(args)
    _announce(cfg)
    model, metrics = experiment.train(cfg, load_dataset(cfg, args.data))
    if args.out:
        save_model(model, args.out, materialize=False if args.seed_only else None)
    metrics.pop("val_scores", None)
    write_mapping(metrics, args.format, sys.stdout)
    return _unstable_exit(cfg, metrics.get("necessary_holds", True))


def cmd_eval(args):
    _require_data(args)
    if not args.model:
        raise ConfigError("eval needs --model (a trained artifact)")
    model = load_model(args.model)
    _announce(model.config)
    metrics = experiment.evaluate(model, load_dataset(model.config, args.data))
    with _Output(args.out) as out:
        write_mapping(metrics, args.format, out)
    return EXIT_OK


def cmd_esp_check(args):
    model = _model_for(args)
    result = experiment.esp_check(model, _series(args, model))
    with _Output(args.out) as out:
        write_mapping(result, args.format, out)
    return _unstable_exit(model.config, result["stable"])


def cmd_mc(args):
    model = _model_for(args)
    report, notes = experiment.memory_capacity(model, args.activation)
    for note in notes:
        sys.stderr.write(f"warning: {note}\n")
    rows = [{"delay": int(k), "r2": float(r)} for k, r in zip(report.delays, report.r2)]
    with _Output(args.out) as out:
        write_table(rows, args.format, out)
        if args.format == "text":
            out.write(f"total  {report.total:.6g}\n")
    return EXIT_OK


def cmd_diagnose(args):
    model = _model_for(args)
    report = experiment.diagnose(model, _series(args, model))
    for note in report["notes"]:
        sys.stderr.write(f"note: {note}\n")
    with _Output(args.out) as out:
        if args.format == "text":
            write_mapping(report["summary"], "text", out)
            if report["layers"]:
                out.write("\n")
        else:
            write_table([report["summary"]], "csv", out)
        write_table(report["layers"], args.format, out)
    return _unstable_exit(model.config, report["summary"]["stable"])


def cmd_embed(args):
    _require_data(args)
    model = _model_for(args)
    structures = load_structures(args.data)
    features = experiment.embed(model, structures)
    rows = [{"index": i, **{f"f{j}": float(v) for j, v in enumerate(row)}} for i, row in enumerate(features)]
    with _Output(args.out) as out:
        write_table(rows, args.format, out)
    return EXIT_OK


def cmd_sweep(args):
    _require_data(args)
    if not args.sweep:
        raise ConfigError("sweep needs --sweep PATH (JSON object: field -> list of values)")
    cfg = resolve_config(args)
    _announce(cfg)
    with open(args.sweep, encoding="utf-8") as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.sweep}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    rows = experiment.sweep(cfg, spec, load_dataset(cfg, args.data), workers=cfg.workers)
    with _Output(args.out) as out:
        write_table(rows, args.format, out)
    failed = any(row["error"] for row in rows)
    unstable = any(row.get("necessary_holds") is False for row in rows)
    if failed:
        return EXIT_ERROR
    return _unstable_exit(cfg, not unstable)


COMMANDS = {
    "init": cmd_init,
    "train": cmd_train,
    "eval": cmd_eval,
    "diagnose": cmd_diagnose,
    "sweep": cmd_sweep,
    "embed": cmd_embed,
    "mc": cmd_mc,
    "esp-check": cmd_esp_check,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="randnn", description="Randomized neural networks toolkit.")
    parser.add_argument("verb", choices=sorted(COMMANDS))
    parser.add_argument("--config", metavar="PATH", help="JSON experiment config")
    parser.add_argument("--data", metavar="PATH", help="delimited time series or JSONL structures")
    parser.add_argument("--out", metavar="PATH", help="artifact (init/train) or report destination")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--workers", type=int, help="parallel sweep workers")
    parser.add_argument("--format", choices=("text", "csv"), default="text")
    parser.add_argument("--model", metavar="PATH", help="saved model artifact")
    parser.add_argument("--sweep", metavar="PATH", help="sweep spec for the sweep verb")
    parser.add_argument("--activation", choices=("tanh", "linear"), default="tanh", help="mc activation")
    parser.add_argument("--seed-only", action="store_true", help="store weights as seed only")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with np.errstate(over="ignore"):
            return COMMANDS[args.verb](args)
    except (RandNNError, ValueError, ArithmeticError, OSError, KeyError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
