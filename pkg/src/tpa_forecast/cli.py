"""Command-line entry point: ``tpa-forecast {toy,train,eval,analyze,ablate}``."""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import hashlib
import itertools
import json
import logging
import os
import sys
from dataclasses import fields
from pathlib import Path

from . import __version__, kernels
from .analysis import avg_dft, spectrum_alignment, window_rows
from .attention import export_filters
from .data import load_mts_csv, load_pianoroll_dir, split_manifest
from .errors import DataError, ShapeError, TrainingDiverged
from .experiments import (
    ABLATION_COLUMNS,
    COLUMN_LABELS,
    TOY_DEFAULTS,
    TOY_VARIANTS,
    ablation_grid,
    ablation_table,
    all_cells,
    parse_cell,
    toy_table,
)
from .layers import INIT_SCHEME, load_checkpoint, save_checkpoint
from .training import (
    TrainConfig,
    fit,
    grid_search,
    predict,
    prepare,
    report_predictions,
)

log = logging.getLogger("tpa_forecast")

RUN_ROOT_ENV = "TPA_FORECAST_RUNS"
DEFAULT_TOY_D = "1,6,11,16,21,26,31,36,41,46,51,56"
HELP_WIDTH = 88

# Defaults applied to binary (piano-roll) data for keys the user left unset.
BINARY_PRESET = {"window": 16, "ar_window": 0, "layers": 3, "loss": "cross-entropy", "normalize": "none"}

# (flag, TrainConfig field, help)
TRAIN_FLAGS = [
    ("--model", "model", "forecaster: lstm, luong or tpa"),
    ("--attention", "attention", "attention mode <activation>/<axis> or concat"),
    ("--window", "window", "input window length"),
    ("--horizon", "horizon", "steps ahead of the window to forecast"),
    ("--hidden", "hidden", "LSTM hidden size"),
    ("--layers", "layers", "stacked LSTM layers"),
    ("--filters", "filters", "number of CNN filters"),
    ("--filter-len", "filter_len", "filter length; 0 means the window length"),
    ("--ar-window", "ar_window", "autoregressive highway window; 0 disables it"),
    ("--lr", "lr", "Adam learning rate"),
    ("--decay-every", "decay_every", "optimizer steps between learning-rate decays"),
    ("--decay-rate", "decay_rate", "multiplicative learning-rate decay"),
    ("--epochs", "epochs", "training epochs"),
    ("--batch-size", "batch_size", "mini-batch size"),
    ("--clip", "clip", "global gradient-norm clip"),
    ("--seed", "seed", "random seed for init and batching"),
    ("--loss", "loss", "training loss: l1 or cross-entropy"),
    ("--normalize", "normalize", "scaling: per-series, global or none"),
    ("--select", "select", "checkpoint selection metric (auto: rse or nll)"),
]
TOY_FLAGS = ("hidden", "filters", "lr", "decay_every", "decay_rate", "epochs", "batch_size", "clip", "seed")

_CASTS = {"int": int, "float": float, "str": str}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _formatter(prog):
    return argparse.HelpFormatter(prog, width=HELP_WIDTH, max_help_position=32)


# ---------------------------------------------------------------------------
# configuration


def _field_types() -> dict:
    return {f.name: f.type for f in fields(TrainConfig)}


def coerce(name: str, text: str):
    """Parse ``text`` as the type of TrainConfig field ``name``."""
    types = _field_types()
    key = name.strip().replace("-", "_")
    if key not in types:
        raise UsageError(f"unknown config key {name!r}")
    kind = types[key]
    text = text.strip()
    if kind == "bool":
        lowered = text.lower()
        if lowered in ("1", "true", "yes", "on"):
            return key, True
        if lowered in ("0", "false", "no", "off"):
            return key, False
        raise UsageError(f"{name}: expected a boolean, got {text!r}")
    try:
        return key, _CASTS[kind](text)
    except ValueError:
        raise UsageError(f"{name}: expected {kind}, got {text!r}") from None


def read_config_file(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment; keys are TrainConfig fields."""
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"config file not found: {path}")
    values = {}
    for number, line in enumerate(path.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{number}: expected key = value, got {line!r}")
        key, value = coerce(*line.split("=", 1))
        values[key] = value
    return values


def explicit_settings(args, allowed=None) -> dict:
    """Config values from ``--config`` overridden by explicit flags."""
    values = read_config_file(args.config) if getattr(args, "config", None) else {}
    for _, name, _ in TRAIN_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            values[name] = value
    if getattr(args, "no_bias", False):
        values["bias"] = False
    if allowed is not None:
        unknown = set(values) - set(allowed)
        if unknown:
            raise UsageError(f"settings not supported by this command: {sorted(unknown)}")
    return values


def resolve_config(settings: dict, kind: str, defaults: TrainConfig = TrainConfig()) -> TrainConfig:
    values = dict(settings)
    if kind == "binary":
        for key, value in BINARY_PRESET.items():
            values.setdefault(key, value)
    config = defaults.replace(**values)
    expected = "cross-entropy" if kind == "binary" else "l1"
    if config.loss != expected:
        raise DataError(f"config/dataset mismatch: loss {config.loss!r} cannot train on {kind} data")
    return config


def parse_grid(items) -> list:
    """``["hidden=16,32", "window=24,48"]`` -> list of override dicts (cartesian product)."""
    axes = []
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--grid expects key=v1,v2,..., got {item!r}")
        key, values = item.split("=", 1)
        choices = [coerce(key, v) for v in values.split(",") if v.strip()]
        if not choices:
            raise UsageError(f"--grid {key}: no values given")
        axes.append(choices)
    return [dict(combo) for combo in itertools.product(*axes)] if axes else [{}]


def parse_int_list(text: str, name: str) -> list:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{name}: expected comma-separated integers, got {text!r}") from None
    if not values or any(v < 1 for v in values):
        raise UsageError(f"{name}: expected positive integers, got {text!r}")
    return values


def parse_choices(text: str, name: str, allowed) -> list:
    values = [v.strip() for v in text.split(",") if v.strip()]
    bad = [v for v in values if v not in allowed]
    if not values or bad:
        raise UsageError(f"{name}: unknown value(s) {bad or text!r}; expected some of {list(allowed)}")
    return values


# ---------------------------------------------------------------------------
# run directories and manifests


def file_digest(path) -> str:
    path = Path(path)
    digest = hashlib.sha256()
    if path.is_dir():
        for child in sorted(path.glob("*.csv")):
            digest.update(child.name.encode())
            digest.update(file_digest(child).encode())
    else:
        digest.update(path.read_bytes())
    return digest.hexdigest()


def run_root() -> Path:
    return Path(os.environ.get(RUN_ROOT_ENV, "runs"))


class Run:
    """A run directory named by the hash of its command, settings and inputs."""

    def __init__(self, command: str, settings: dict, inputs: dict, root=None):
        self.command = command
        self.settings = settings
        self.inputs = {name: {"path": str(path), "sha256": file_digest(path)} for name, path in inputs.items()}
        payload = {
            "command": command,
            "settings": settings,
            "inputs": {k: v["sha256"] for k, v in self.inputs.items()},
            "version": __version__,
        }
        self.hash = hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:12]
        self.dir = Path(root or run_root()) / f"{command}-{self.hash}"
        self.dir.mkdir(parents=True, exist_ok=True)
        self.outputs = []
        self.started = dt.datetime.now(dt.timezone.utc).isoformat()

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        return self.dir / name

    def finish(self, seed=None, config=None) -> Path:
        doc = {
            "command": self.command,
            "hash": self.hash,
            "version": __version__,
            "backend": kernels.BACKEND,
            "init_scheme": INIT_SCHEME,
            "settings": self.settings,
            "config": config,
            "seed": seed,
            "inputs": self.inputs,
            "outputs": sorted(set(self.outputs)),
            "started": self.started,
            "finished": dt.datetime.now(dt.timezone.utc).isoformat(),
        }
        (self.dir / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True))
        print(self.dir)
        return self.dir


def load_data(args):
    """The dataset named by ``--data`` or ``--pianoroll-dir``, plus its input map."""
    data_path = getattr(args, "data", None)
    roll_dir = getattr(args, "pianoroll_dir", None)
    if data_path and roll_dir:
        raise UsageError("give either --data or --pianoroll-dir, not both")
    if data_path:
        if not Path(data_path).is_file():
            raise DataError(f"dataset not found: {data_path}")
        return load_mts_csv(data_path), {"data": Path(data_path)}
    if roll_dir:
        if not Path(roll_dir).is_dir():
            raise DataError(f"piano-roll directory not found: {roll_dir}")
        return load_pianoroll_dir(roll_dir), {"pianoroll_dir": Path(roll_dir)}
    raise UsageError("a dataset is required: pass --data FILE or --pianoroll-dir DIR")


def data_kind(data) -> str:
    return data.kind if hasattr(data, "kind") else data[0].kind


def data_from_checkpoint(args, extra: dict):
    """Use explicit data flags, else the dataset recorded in the checkpoint."""
    if getattr(args, "data", None) or getattr(args, "pianoroll_dir", None):
        return load_data(args)
    recorded = extra.get("inputs", {})
    if "data" in recorded:
        args.data = recorded["data"]
    elif "pianoroll_dir" in recorded:
        args.pianoroll_dir = recorded["pianoroll_dir"]
    else:
        raise UsageError("checkpoint records no dataset; pass --data or --pianoroll-dir")
    return load_data(args)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# subcommands


def cmd_toy(args) -> int:
    Ds = parse_int_list(args.d, "--d")
    families = parse_choices(args.family, "--family", ("independent", "mixed"))
    variants = parse_choices(args.variants, "--variants", tuple(TOY_VARIANTS))
    if args.runs < 1:
        raise UsageError("--runs must be positive")
    settings = explicit_settings(args, TOY_FLAGS)
    base = TOY_DEFAULTS.replace(**settings)
    seeds = [base.seed + r for r in range(args.runs)]
    run = Run("toy", {"d": Ds, "family": families, "variants": variants, "runs": args.runs, **settings}, {})
    rows, runs = toy_table(Ds, families, variants, seeds, base)
    header = ["D", "family", "variant", "hidden", "params", "runs", "mean_loss", "std_loss"]
    _write_csv(
        run.path("toy_loss.csv"),
        header,
        [[r[h] if h not in ("mean_loss", "std_loss") else _fmt(r[h]) for h in header] for r in rows],
    )
    _write_csv(
        run.path("toy_runs.csv"),
        ["D", "family", "variant", "seed", "hidden", "params", "loss"],
        [[r.D, r.family, r.variant, r.seed, r.hidden, r.params, _fmt(r.loss)] for r in runs],
    )
    run.finish(base.seed, base.to_dict())
    return 0


def _train_one(args):
    data, inputs = load_data(args)
    kind = data_kind(data)
    settings = explicit_settings(args)
    overrides = parse_grid(args.grid)
    space = [resolve_config({**settings, **o}, kind) for o in overrides]
    return data, inputs, kind, settings, overrides, space


def cmd_train(args) -> int:
    data, inputs, kind, settings, overrides, space = _train_one(args)
    run = Run(
        "train", {"settings": settings, "grid": args.grid or [], "split_seed": args.split_seed}, inputs
    )
    if len(space) > 1:
        best_config, results = grid_search(space, data, args.split_seed)
        keys = sorted({k for o in overrides for k in o})
        _write_csv(
            run.path("grid.csv"),
            ["index"] + keys + ["best_val", "best_epoch"],
            [
                [i] + [o.get(k, "") for k in keys] + [_fmt(r["val"]), r["result"].best_epoch]
                for i, (o, r) in enumerate(zip(overrides, results))
            ],
        )
        winner = next(r for r in results if r["config"] is best_config)
        result, prepared = winner["result"], winner["prepared"]
        print(f"grid winner: {json.dumps({k: getattr(best_config, k) for k in keys})}", file=sys.stderr)
    else:
        result, prepared = fit(data, space[0], args.split_seed)
    config = result.config
    extra = {
        "train_config": config.to_dict(),
        "normalization": prepared.norm.to_dict(),
        "kind": prepared.kind,
        "split_seed": args.split_seed,
        "best_epoch": result.best_epoch,
        "inputs": {k: str(Path(v).resolve()) for k, v in inputs.items()},
    }
    save_checkpoint(run.path("checkpoint.json"), result.params, result.model_config, extra)
    result.write_history(run.path("history.jsonl"))
    if prepared.bounds is not None:
        split_manifest(getattr(data, "name", "pieces"), prepared.bounds, prepared.norm, args.split_seed,
                       run.path("split.json"))
    run.finish(config.seed, config.to_dict())
    return 0


def _restore(args):
    params, model_config, extra = load_checkpoint(args.checkpoint)
    if "train_config" not in extra:
        raise DataError(f"{args.checkpoint}: checkpoint carries no training config")
    config = TrainConfig.from_dict(extra["train_config"])
    return params, model_config, extra, config


def run_eval(args, predictor=None) -> int:
    """Score a checkpoint on a split; ``predictor(windows)`` replaces the model if given."""
    params, model_config, extra, config = _restore(args)
    data, inputs = data_from_checkpoint(args, extra)
    width = data.width if hasattr(data, "width") else data[0].width
    if width != model_config.n_series:
        raise ShapeError(f"checkpoint expects {model_config.n_series} series but the dataset has {width}")
    prepared = prepare(data, config, split_seed=extra.get("split_seed", 0))
    windows = getattr(prepared, args.split)
    if windows is None or not len(windows):
        raise DataError(f"the {args.split} split has no windows")
    inputs["checkpoint"] = Path(args.checkpoint)
    run = Run(
        "eval", {"split": args.split, "threshold": args.threshold, "average": args.average}, inputs
    )
    pred = predictor(windows) if predictor else predict(params, model_config, windows.inputs)
    report, shown = report_predictions(
        pred, windows, prepared, args.threshold, args.average,
        dataset=getattr(data, "name", "pieces"), horizon=config.horizon, seed=config.seed,
        config_hash=run.hash,
    )
    report.meta["split"] = args.split
    report.write_json(run.path("metrics.json"))
    report.write_csv(run.path("metrics.csv"))
    truth = prepared.norm.invert(windows.targets) if prepared.kind == "continuous" else windows.targets
    offset = {"val": 1, "test": 2}[args.split]
    start = prepared.bounds[offset] if prepared.bounds is not None else 0
    stamps = start + windows.origins - 1 + config.horizon
    _write_csv(
        run.path("predictions.csv"),
        ["timestamp", "series", "truth", "prediction"],
        (
            [int(stamps[j]), s, _fmt(truth[j, s]), _fmt(shown[j, s])]
            for j in range(len(stamps))
            for s in range(truth.shape[1])
        ),
    )
    for name, value in report.metrics.items():
        print(f"{name}\t{value:.6g}", file=sys.stderr)
    run.finish(config.seed, config.to_dict())
    return 0


def cmd_eval(args) -> int:
    return run_eval(args)


def cmd_analyze(args) -> int:
    params, model_config, extra, config = _restore(args)
    if "attn/filters" not in params:
        mode = model_config.mode.name if model_config.model == "tpa" else model_config.model
        raise DataError(f"checkpoint has no CNN filters (model {model_config.model!r}, attention {mode!r})")
    if args.top_j < 1:
        raise UsageError("--top-j must be positive")
    filters = avg_dft(params["attn/filters"], "filters", length=model_config.window)
    inputs = {"checkpoint": Path(args.checkpoint)}
    if args.filters_only:
        run = Run("analyze", {"filters_only": True}, inputs)
        export_filters(run.path("filters.csv"), params["attn/filters"])
        filters.write_csv(run.path("spectrum_filters.csv"))
        run.finish(config.seed, config.to_dict())
        return 0
    data, data_inputs = data_from_checkpoint(args, extra)
    inputs.update(data_inputs)
    run = Run("analyze", {"filters_only": False, "top_j": args.top_j, "tolerance": args.tolerance}, inputs)
    prepared = prepare(data, config, split_seed=extra.get("split_seed", 0))
    spectrum = avg_dft(window_rows(prepared.train.inputs), "dataset")
    spectrum.write_csv(run.path("spectrum_data.csv"))
    export_filters(run.path("filters.csv"), params["attn/filters"])
    filters.write_csv(run.path("spectrum_filters.csv"))
    report = spectrum_alignment(spectrum, filters, args.top_j, args.tolerance)
    run.path("alignment.json").write_text(json.dumps(report, indent=2))
    run.finish(config.seed, config.to_dict())
    return 0


def cmd_ablate(args) -> int:
    cells = [c.strip() for c in args.cells.split(",") if c.strip()] if args.cells else all_cells()
    for cell in cells:
        try:
            parse_cell(cell)
        except ValueError as exc:
            raise UsageError(f"unknown ablation cell {cell!r}: {exc}") from None
    if args.runs < 1:
        raise UsageError("--runs must be positive")
    data, inputs = load_data(args)
    settings = explicit_settings(args)
    settings.pop("attention", None)
    base = resolve_config(settings, data_kind(data))
    run = Run("ablate", {"cells": cells, "runs": args.runs, "split_seed": args.split_seed, **settings}, inputs)
    rows = ablation_grid(data, cells, args.runs, base, args.split_seed)
    _write_csv(
        run.path("ablation.csv"),
        ["cell", "row", "column", "runs", "mean", "std", "values"],
        [[r["cell"], r["row"], r["column"], r["runs"], _fmt(r["mean"]), _fmt(r["std"]),
          " ".join(_fmt(v) for v in r["values"])] for r in rows],
    )
    _write_csv(
        run.path("ablation_table.csv"),
        [""] + [COLUMN_LABELS[c] for c in ABLATION_COLUMNS],
        ablation_table(rows),
    )
    run.finish(base.seed, base.to_dict())
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_train_flags(parser, defaults: TrainConfig, only=None, texts=None):
    group = parser.add_argument_group("model and optimizer")
    types = _field_types()
    for flag, name, text in TRAIN_FLAGS:
        if only is not None and name not in only:
            continue
        text = (texts or {}).get(name, text)
        group.add_argument(
            flag, dest=name, type=_CASTS[types[name]], default=None, metavar=name.upper(),
            help=f"{text} (default: {getattr(defaults, name)})",
        )
    if only is None:
        group.add_argument("--no-bias", action="store_true", help="drop bias vectors (default: biases on)")


def _add_data_flags(parser, required: bool):
    hint = "" if required else " (default: the dataset recorded in the checkpoint)"
    parser.add_argument("--data", metavar="FILE", help=f"comma-separated MTS matrix{hint}")
    parser.add_argument("--pianoroll-dir", metavar="DIR", help=f"directory of piano-roll CSV pieces{hint}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="tpa-forecast",
        description="Temporal pattern attention forecasting: toy runs, training, evaluation, "
        "ablations and filter spectra.",
        epilog=f"Runs are written under ${RUN_ROOT_ENV} (default: ./runs). "
        "Exit codes: 0 ok, 1 usage, 2 data, 3 divergence.",
        formatter_class=_formatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    toy = sub.add_parser(
        "toy", help="sine-wave toy comparison", formatter_class=_formatter,
        description="Train parameter-matched variants on sine-wave toys and write final training MAE per D.",
    )
    toy.add_argument("--d", default=DEFAULT_TOY_D, metavar="LIST", help=f"series counts (default: {DEFAULT_TOY_D})")
    toy.add_argument("--family", default="independent", metavar="LIST",
                     help="independent and/or mixed (default: independent)")
    toy.add_argument("--variants", default="lstm,luong,tpa", metavar="LIST",
                     help=f"from {','.join(TOY_VARIANTS)} (default: lstm,luong,tpa)")
    toy.add_argument("--runs", type=int, default=1, help="seeds per cell, starting at --seed (default: 1)")
    _add_train_flags(toy, TOY_DEFAULTS, TOY_FLAGS, {"hidden": "reference TPA hidden size floor; grows as 1.2*D"})
    toy.set_defaults(handler=cmd_toy)

    train = sub.add_parser(
        "train", help="train one config or a grid", formatter_class=_formatter,
        description="Train on a dataset and write checkpoint.json, history.jsonl and manifest.json.",
        epilog="Binary piano-roll data defaults to: "
        + ", ".join(f"{k}={v}" for k, v in BINARY_PRESET.items()) + ".",
    )
    _add_data_flags(train, True)
    train.add_argument("--config", metavar="FILE", help="key = value settings, overridden by flags")
    train.add_argument("--grid", action="append", metavar="KEY=V1,V2",
                       help="grid axis; repeat for a cartesian product (default: none)")
    train.add_argument("--split-seed", type=int, default=0, help="piece shuffle seed (default: 0)")
    _add_train_flags(train, TrainConfig())
    train.set_defaults(handler=cmd_train)

    ev = sub.add_parser(
        "eval", help="score a checkpoint", formatter_class=_formatter,
        description="Score a checkpoint and write metrics.json, metrics.csv and predictions.csv.",
    )
    ev.add_argument("--checkpoint", required=True, metavar="FILE", help="checkpoint.json from train")
    _add_data_flags(ev, False)
    ev.add_argument("--split", choices=("val", "test"), default="test", help="split to score (default: test)")
    ev.add_argument("--threshold", type=float, default=0.5, help="binary decision threshold (default: 0.5)")
    ev.add_argument("--average", choices=("micro", "macro"), default="micro",
                    help="binary precision/recall averaging (default: micro)")
    ev.set_defaults(handler=cmd_eval)

    an = sub.add_parser(
        "analyze", help="filter and data spectra", formatter_class=_formatter,
        description="Average-DFT spectra of training windows and CNN filters plus their peak alignment.",
    )
    an.add_argument("--checkpoint", required=True, metavar="FILE", help="checkpoint.json from train")
    _add_data_flags(an, False)
    an.add_argument("--filters-only", action="store_true", help="only the filter spectrum (default: off)")
    an.add_argument("--top-j", type=int, default=3, help="peaks compared per spectrum (default: 3)")
    an.add_argument("--tolerance", type=int, default=1, help="peak match tolerance in bins (default: 1)")
    an.set_defaults(handler=cmd_analyze)

    ab = sub.add_parser(
        "ablate", help="attention ablation grid", formatter_class=_formatter,
        description="Train each attention cell and tabulate test RSE (NLL for binary data) as mean +- std.",
    )
    _add_data_flags(ab, True)
    ab.add_argument("--cells", metavar="LIST",
                    help="cells such as sigmoid/position or concat (default: all seven)")
    ab.add_argument("--runs", type=int, default=1, help="seeded runs per cell (default: 1)")
    ab.add_argument("--config", metavar="FILE", help="key = value settings, overridden by flags")
    ab.add_argument("--split-seed", type=int, default=0, help="piece shuffle seed (default: 0)")
    _add_train_flags(ab, TrainConfig())
    ab.set_defaults(handler=cmd_ablate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.handler(args)
    except TrainingDiverged as exc:
        print(f"{parser.prog}: numeric failure: {exc}", file=sys.stderr)
        return 3
    except (DataError, ShapeError) as exc:
        print(f"{parser.prog}: data error: {exc}", file=sys.stderr)
        return 2
    except (UsageError, ValueError) as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
