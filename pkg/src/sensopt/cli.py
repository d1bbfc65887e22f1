"""Command-line pipeline: generate, train, evaluate, optimize.

Every subcommand reads an optional JSON config file (one section per
subcommand), lets explicit flags override it, writes its outputs under
--out only, and records a manifest with the fully resolved configuration
and SHA-256 digests of its file inputs, so any run can be reproduced.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys

from . import __version__
from .curves import write_curve_csv
from .data import TEST, TRAIN, VALIDATION, read_csv, split, write_csv
from .errors import ConfigurationError, SensoptError
from .network import Model, NetworkConfig, load_model, save_model
from .oracle import TABLE1, SensorOracle, generate_dataset
from .sweep import (
    ALL_CRITERIA,
    AxisSpec,
    InterpolationSpec,
    DEFAULT_POINTS_PER_AXIS,
    DEFAULT_ROW_BUDGET,
    default_sweep_spec,
    predict_curves,
    run_sweep,
    subset_label,
    write_report_csv,
)
from .training import (
    TrainConfig,
    evaluate,
    prepare_training_data,
    train,
    write_prediction_csvs,
)

_PARTITIONS = {"train": TRAIN, "validation": VALIDATION, "test": TEST}


class _Parser(argparse.ArgumentParser):
    # Usage errors exit 1, not argparse's default 2.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _scaled_count(full: int, scale: float) -> int:
    """Values kept per input at a given scale; 1.0 keeps all `full` values."""
    if not 0 < scale <= 1:
        raise ConfigurationError(f"--scale must be in (0, 1], got {scale!r}")
    return min(full, int(math.floor(full * scale)) + 1)


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            config = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file {path}: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigurationError("config file must hold a JSON object")
    return config


def _resolve(defaults: dict, section: dict, flags: dict) -> dict:
    unknown = set(section) - set(defaults)
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    resolved = dict(defaults)
    resolved.update(section)
    resolved.update({k: v for k, v in flags.items() if v is not None})
    return resolved


def _write_manifest(
    out_dir: str, command: str, resolved: dict, inputs: dict[str, str], outputs: list[str]
) -> None:
    manifest = {
        "tool": "sensopt",
        "version": __version__,
        "command": command,
        "resolved_config": resolved,
        "inputs": {path: _sha256(path) for path in inputs.values()},
        "outputs": sorted(os.path.basename(p) for p in outputs),
    }
    path = os.path.join(out_dir, f"{command}_manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_generate(args: argparse.Namespace) -> int:
    defaults = {
        "seed": 0,
        "scale": 1.0,
        "noise_db": 0.0,
        "dip_center": 5.5e3,
        "dip_depth": 5.0,
        "dip_width": 0.12,
    }
    section = _load_config(args.config).get("generate", {})
    resolved = _resolve(
        defaults,
        section,
        {"seed": args.seed, "scale": args.scale, "noise_db": args.noise},
    )
    grid = TABLE1.subsample(_scaled_count(5, resolved["scale"]))
    oracle = SensorOracle(
        seed=resolved["seed"],
        dip_center=resolved["dip_center"],
        dip_depth=resolved["dip_depth"],
        dip_width=resolved["dip_width"],
        noise_db=resolved["noise_db"],
    )
    os.makedirs(args.out, exist_ok=True)
    table = generate_dataset(oracle, grid)
    dataset_path = os.path.join(args.out, "dataset.csv")
    write_csv(table, dataset_path)
    oracle_path = os.path.join(args.out, "oracle_config.json")
    with open(oracle_path, "w") as fh:
        json.dump(oracle.to_config(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest(args.out, "generate", resolved, {}, [dataset_path, oracle_path])
    print(
        f"generated {len(table)} rows ({grid.combination_count} combinations) "
        f"-> {dataset_path}"
    )
    return 0


def _parse_hidden(value) -> tuple[int, ...]:
    if isinstance(value, str):
        parts = [p for p in value.split(",") if p.strip()]
        try:
            value = [int(p) for p in parts]
        except ValueError:
            raise ConfigurationError(f"--hidden must be comma-separated integers, got {value!r}")
    hidden = tuple(int(v) for v in value)
    if len(hidden) < 2:
        raise ConfigurationError("at least two hidden layers are required")
    return hidden


def cmd_train(args: argparse.Namespace) -> int:
    defaults = {
        "seed": 0,
        "epochs": 100,
        "batch_size": 20,
        "learning_rate": 5e-4,
        "plateau_patience": 5,
        "plateau_factor": 2.0,
        "optimizer": "adam",
        "hidden": [64, 64, 64],
        "alpha": 0.3,
    }
    section = _load_config(args.config).get("train", {})
    resolved = _resolve(
        defaults,
        section,
        {
            "seed": args.seed,
            "epochs": args.epochs,
            "batch_size": args.batch_size,
            "learning_rate": args.learning_rate,
            "optimizer": args.optimizer,
            "hidden": args.hidden,
        },
    )
    resolved["hidden"] = list(_parse_hidden(resolved["hidden"]))
    dataset_path = args.dataset or os.path.join(args.out, "dataset.csv")

    table = read_csv(dataset_path)
    arrays, norm, _ = prepare_training_data(table, resolved["seed"])
    net_config = NetworkConfig(
        hidden=tuple(resolved["hidden"]), alpha=resolved["alpha"]
    )
    train_cfg = TrainConfig(
        epochs=resolved["epochs"],
        batch_size=resolved["batch_size"],
        learning_rate=resolved["learning_rate"],
        plateau_patience=resolved["plateau_patience"],
        plateau_factor=resolved["plateau_factor"],
        optimizer=resolved["optimizer"],
        seed=resolved["seed"],
    )
    params, history = train(
        net_config,
        arrays["x_train"],
        arrays["y_train"],
        arrays["x_val"],
        arrays["y_val"],
        train_cfg,
    )
    os.makedirs(args.out, exist_ok=True)
    model_path = os.path.join(args.out, "model.bin")
    save_model(Model(config=net_config, params=params, normalization=norm), model_path)
    history_path = os.path.join(args.out, "history.csv")
    history.write_csv(history_path)
    _write_manifest(
        args.out, "train", resolved, {"dataset": dataset_path}, [model_path, history_path]
    )
    print(
        f"trained {len(history)} epochs: final train MSE {history.train_mse[-1]:.6g}, "
        f"validation MSE {history.val_mse[-1]:.6g} -> {model_path}"
    )
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    defaults = {"seed": 0, "partition": "test"}
    section = _load_config(args.config).get("evaluate", {})
    resolved = _resolve(
        defaults, section, {"seed": args.seed, "partition": args.partition}
    )
    if resolved["partition"] not in _PARTITIONS:
        raise ConfigurationError(
            f"partition must be one of {sorted(_PARTITIONS)}, got {resolved['partition']!r}"
        )
    model = load_model(args.model)
    table = read_csv(args.dataset)
    assignment = split(len(table), resolved["seed"])
    rows = table.select(assignment.indices(_PARTITIONS[resolved["partition"]]))
    report = evaluate(model, rows)
    os.makedirs(args.out, exist_ok=True)
    metrics = {
        m.name: {
            "mse": m.mse,
            "r_squared": None if math.isnan(m.r_squared) else m.r_squared,
        }
        for m in report.metrics
    }
    metrics_path = os.path.join(args.out, "metrics.json")
    with open(metrics_path, "w") as fh:
        json.dump({"partition": resolved["partition"], "outputs": metrics}, fh, indent=2)
        fh.write("\n")
    pair_paths = write_prediction_csvs(report, args.out)
    _write_manifest(
        args.out,
        "evaluate",
        resolved,
        {"model": args.model, "dataset": args.dataset},
        [metrics_path, *pair_paths],
    )
    for m in report.metrics:
        print(f"{m.name}: MSE {m.mse:.6g}, R^2 {m.r_squared:.6g}")
    return 0


def _axes_from_config(axes_config) -> list[AxisSpec] | None:
    if axes_config is None:
        return None
    if not isinstance(axes_config, list) or len(axes_config) != 5:
        raise ConfigurationError("optimize.axes must list exactly 5 axis objects")
    axes = []
    for entry in axes_config:
        try:
            axes.append(
                AxisSpec(
                    minimum=float(entry["minimum"]),
                    maximum=float(entry["maximum"]),
                    step=float(entry["step"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"malformed axis entry {entry!r}: {exc}") from exc
    return axes


def cmd_optimize(args: argparse.Namespace) -> int:
    defaults = {
        "seed": 0,
        "scale": 1.0,
        "points_per_axis": DEFAULT_POINTS_PER_AXIS,
        "row_budget": DEFAULT_ROW_BUDGET,
        "chunk_combinations": 64,
        "axes": None,
    }
    section = _load_config(args.config).get("optimize", {})
    resolved = _resolve(defaults, section, {"seed": args.seed, "scale": args.scale})
    model = load_model(args.model)
    axes = _axes_from_config(resolved["axes"])
    if axes is not None:
        spec = InterpolationSpec(axes=tuple(axes), row_budget=resolved["row_budget"])
    else:
        points = _scaled_count(resolved["points_per_axis"], resolved["scale"])
        spec = default_sweep_spec(max(points, 2), row_budget=resolved["row_budget"])
    result = run_sweep(
        model, spec, subsets=(ALL_CRITERIA, (1, 2, 3)),
        chunk_combinations=resolved["chunk_combinations"],
    )
    os.makedirs(args.out, exist_ok=True)
    report_path = os.path.join(args.out, "sweep_report.csv")
    write_report_csv(result, report_path)
    summary_path = os.path.join(args.out, "selection_summary.json")
    with open(summary_path, "w") as fh:
        json.dump(result.summary(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs = [report_path, summary_path]
    for subset, selection in result.selections.items():
        curve = next(predict_curves(model, iter([selection.settings])))
        curve_path = os.path.join(args.out, f"selected_curve_{subset_label(subset)}.csv")
        write_curve_csv(curve, curve_path)
        outputs.append(curve_path)
        values = ", ".join(f"{v:g}" for v in selection.settings)
        print(
            f"criteria {subset_label(subset)}: K={selection.k}, settings ({values}), "
            f"c4={selection.criteria.c4:.4g}"
        )
    resolved["axes"] = None if axes is None else [
        {"minimum": a.minimum, "maximum": a.maximum, "step": a.step} for a in axes
    ]
    _write_manifest(
        args.out, "optimize", resolved, {"model": args.model}, outputs
    )
    print(f"scored {spec.combination_count} combinations -> {report_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sensopt", description=__doc__)
    parser.add_argument("--version", action="version", version=f"sensopt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scale: bool):
        p.add_argument("--config", help="JSON config file with per-command sections")
        p.add_argument("--seed", type=int, help="random seed (default 0)")
        p.add_argument("--out", default="sensopt_out", help="output directory")
        if scale:
            p.add_argument(
                "--scale", type=float, help="shrink dataset/search scale into (0, 1]"
            )

    p = sub.add_parser("generate", help="simulate a factorial dataset from the oracle")
    common(p, scale=True)
    p.add_argument("--noise", type=float, help="Gaussian SNR noise sigma in dB (default 0)")
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("train", help="train a surrogate on a generated dataset")
    common(p, scale=False)
    p.add_argument("--dataset", help="dataset CSV (default <out>/dataset.csv)")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.add_argument("--optimizer", choices=("adam", "sgd"))
    p.add_argument("--hidden", help="comma-separated hidden layer sizes, e.g. 64,64,64")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("evaluate", help="score a trained model on a dataset partition")
    common(p, scale=False)
    p.add_argument("--model", required=True, help="model file from `sensopt train`")
    p.add_argument("--dataset", required=True, help="dataset CSV")
    p.add_argument("--partition", choices=sorted(_PARTITIONS))
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("optimize", help="sweep interpolated settings through a model")
    common(p, scale=True)
    p.add_argument("--model", required=True, help="model file from `sensopt train`")
    p.set_defaults(handler=cmd_optimize)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except ConfigurationError as exc:
        print(f"sensopt {args.command}: configuration error: {exc}", file=sys.stderr)
        return 1
    except SensoptError as exc:
        print(f"sensopt {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"sensopt {args.command}: error: {exc}", file=sys.stderr)
        return 2


def run() -> None:
    sys.exit(main())
