"""Command-line front end.

Commands: ``stats``, ``mine-dfg``, ``train``, ``evaluate``, ``report`` and
``reproduce``. Option values are resolved as: command-line flag, then the
``--config`` file (``key=value`` lines), then built-in defaults. Exit codes:
0 success, 1 usage error, 2 data error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .dfg import PropagationKind, export_dot, matrix_to_csv, mine_dfg, propagation_matrix
from .errors import ConfigError, PPMError, UsageError
from .evaluation import evaluate, read_report_csv, render_report
from .eventlog import EventLog, chronological_case_split, log_statistics, parse_event_log
from .features import build_samples
from .models import Head, Variant, load_checkpoint
from .training import TrainConfig, run_experiment

OUTPUT_ROOT_ENV = "PPMGCN_OUTPUT_ROOT"
DATASETS = ("helpdesk", "bpi12w", "custom")

DEFAULTS = {
    "dataset": "custom",
    "delimiter": ",",
    "case_column": "CaseID",
    "activity_column": "ActivityID",
    "timestamp_column": "CompleteTimestamp",
    "timestamp_format": "%Y-%m-%d %H:%M:%S",
    "runs": 5,
    "seed": 0,
    "epochs": 150,
    "patience": 20,
    "dropout": 0.2,
    "hidden": "64,32",
    "dfg_scope": "all",
    "train_fraction": 2 / 3,
    "validation_fraction": 0.2,
    "jobs": 1,
}
_INT = {"runs", "seed", "epochs", "patience", "jobs"}
_FLOAT = {"dropout", "train_fraction", "validation_fraction", "learning_rate"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def read_config_file(path: str) -> dict[str, str]:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{n}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


def _data_opts(p):
    p.add_argument("--data", help="event log (delimited text with a header row)")
    p.add_argument("--dataset", choices=DATASETS, help="dataset tag, selects learning-rate presets")
    p.add_argument("--delimiter")
    p.add_argument("--case-column")
    p.add_argument("--activity-column")
    p.add_argument("--timestamp-column")
    p.add_argument("--timestamp-format")


def _train_opts(p):
    p.add_argument("--learning-rate", type=float, help="override the preset learning rate")
    p.add_argument("--epochs", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--dropout", type=float)
    p.add_argument("--hidden", help="two hidden widths, e.g. 64,32")
    p.add_argument("--seed", type=int, help="base seed; run r uses seed + r")
    p.add_argument("--runs", type=int)
    p.add_argument("--dfg-scope", choices=("all", "train"))
    p.add_argument("--train-fraction", type=float)
    p.add_argument("--validation-fraction", type=float)
    p.add_argument("--end-time", choices=("exclude", "zero"),
                   help="time head at case end: drop the sample or use target 0 (default: dataset preset)")
    p.add_argument("--jobs", type=int, help="parallel runs")
    p.add_argument("--out-dir", help=f"output root (default ${OUTPUT_ROOT_ENV} or ./runs)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ppmgcn", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="key=value file with option defaults")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("stats", help="dataset statistics")
    _data_opts(p)
    p.add_argument("--csv", help="also write the statistics as CSV")

    p = sub.add_parser("mine-dfg", help="directly-follows graph as DOT plus propagation matrices")
    _data_opts(p)
    p.add_argument("--out", help="DOT output file (default: stdout)")
    p.add_argument("--matrices-dir", help="directory for the adjacency/propagation CSVs")
    p.add_argument("--dfg-scope", choices=("all", "train"))
    p.add_argument("--train-fraction", type=float)

    p = sub.add_parser("train", help="train and test one variant/head over several runs")
    _data_opts(p)
    p.add_argument("--variant", choices=[v.value for v in Variant])
    p.add_argument("--head", choices=[h.value for h in Head])
    _train_opts(p)

    p = sub.add_parser("evaluate", help="score a checkpoint on the test split of a log")
    _data_opts(p)
    p.add_argument("--checkpoint")
    p.add_argument("--train-fraction", type=float)
    p.add_argument("--csv", help="write metrics CSV here")

    p = sub.add_parser("report", help="render result tables from stored summaries")
    p.add_argument("--runs-dir")
    p.add_argument("--dataset", choices=DATASETS)
    p.add_argument("--out-dir", help="where report files go (default: the dataset's run directory)")

    p = sub.add_parser("reproduce", help="all variants x both heads x N runs, then report")
    p.add_argument("target", choices=DATASETS, help="dataset tag")
    _data_opts(p)
    _train_opts(p)
    return parser


def resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset options from the config file, then from DEFAULTS."""
    file_values = read_config_file(args.config) if args.config else {}
    for key, value in file_values.items():
        if getattr(args, key, None) is None and hasattr(args, key):
            if key in _INT:
                value = int(value)
            elif key in _FLOAT:
                value = float(value)
            setattr(args, key, value)
    for key, value in DEFAULTS.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, value)
    if getattr(args, "target", None) and args.dataset in (None, "custom"):
        args.dataset = args.target
    return args


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) in (None, "")]
    if missing:
        raise UsageError(f"{args.command} requires " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _load(args) -> EventLog:
    _require(args, "data")
    if not Path(args.data).is_file():
        raise FileNotFoundError(f"no such file: {args.data}")
    cols = (args.case_column, args.activity_column, args.timestamp_column)
    return parse_event_log(args.data, cols, args.timestamp_format, args.delimiter)


def _output_root(args) -> Path:
    return Path(args.out_dir or os.environ.get(OUTPUT_ROOT_ENV) or "runs")


def _train_config(args, variant, head) -> TrainConfig:
    try:
        hidden = tuple(int(h) for h in str(args.hidden).split(","))
    except ValueError:
        raise UsageError(f"--hidden expects two comma-separated ints, got {args.hidden!r}") from None
    return TrainConfig(variant=variant, head=head, learning_rate=args.learning_rate,
                       max_epochs=args.epochs, patience=args.patience, seed=args.seed,
                       dataset=args.dataset, hidden_dims=hidden, dropout_rate=args.dropout,
                       train_fraction=args.train_fraction, validation_fraction=args.validation_fraction,
                       dfg_scope=args.dfg_scope, end_time_target=args.end_time)


def cmd_stats(args, out) -> None:
    stats = log_statistics(_load(args))
    out.write(stats.to_text(f"Dataset: {args.data}"))
    if args.csv:
        Path(args.csv).write_text(stats.to_csv())


def cmd_mine_dfg(args, out) -> None:
    log_ = _load(args)
    if args.dfg_scope == "train":
        log_ = chronological_case_split(log_, args.train_fraction)[0]
    dfg = mine_dfg(log_)
    dot = export_dot(dfg, Path(args.data).stem)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(dot)
    else:
        out.write(dot)
    mdir = Path(args.matrices_dir) if args.matrices_dir else (Path(args.out).parent if args.out else None)
    if mdir is not None:
        mdir.mkdir(parents=True, exist_ok=True)
        stem = Path(args.out).stem if args.out else "dfg"
        (mdir / f"{stem}_counts.csv").write_text(matrix_to_csv(dfg.edge_counts, dfg.labels))
        (mdir / f"{stem}_binary.csv").write_text(matrix_to_csv(dfg.binary(), dfg.labels))
        for kind in PropagationKind:
            m = propagation_matrix(dfg, kind).matrix
            (mdir / f"{stem}_{kind.value}.csv").write_text(matrix_to_csv(m, dfg.labels))


def cmd_train(args, out) -> None:
    _require(args, "data", "variant", "head")
    config = _train_config(args, args.variant, args.head)
    root = _output_root(args)
    res = run_experiment(_load(args), config, args.runs, root, args.jobs)
    text, _ = render_report({config.variant.value: res.summary}, config.dataset, config.head.value,
                            with_sd=args.runs > 1)
    out.write(text)


def cmd_evaluate(args, out) -> None:
    _require(args, "data", "checkpoint")
    trained = load_checkpoint(args.checkpoint)
    log_ = _load(args)
    if log_.num_nodes != trained.model.config.num_nodes:
        raise ConfigError(f"log has {log_.num_nodes} activities, checkpoint expects "
                          f"{trained.model.config.num_nodes}")
    _, test = chronological_case_split(log_, args.train_fraction)
    metrics = evaluate(trained, build_samples(test, trained.model.scaling))
    name = trained.model.config.variant.value
    text, csv_text = render_report({name: metrics}, args.dataset, trained.model.config.head.value)
    out.write(text)
    if args.csv:
        Path(args.csv).write_text(csv_text)


def write_reports(dataset_dir: Path, dataset: str, out_dir: Path | None = None) -> list[Path]:
    """Collect ``<variant>-<head>/summary.csv`` files into per-head report tables."""
    by_head: dict[str, dict] = {}
    variant_order = [v.value for v in Variant]
    for summary in sorted(dataset_dir.glob("*/summary.csv")):
        variant, head = summary.parent.name.rsplit("-", 1)
        for name, m in read_report_csv(summary.read_text()).items():
            by_head.setdefault(head, {})[name] = m
    if not by_head:
        raise FileNotFoundError(f"no summary.csv files under {dataset_dir}")
    out_dir = out_dir or dataset_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for head, metrics in sorted(by_head.items()):
        ordered = {k: metrics[k] for k in sorted(metrics, key=lambda k: (variant_order.index(k)
                                                                          if k in variant_order else 99, k))}
        text, csv_text = render_report(ordered, dataset, head, with_sd=True)
        for suffix, content in (("txt", text), ("csv", csv_text)):
            path = out_dir / f"report_{dataset}_{head}.{suffix}"
            path.write_text(content)
            written.append(path)
    return written


def cmd_report(args, out) -> None:
    _require(args, "dataset")
    root = Path(args.runs_dir) if args.runs_dir else _output_root(args)
    for path in write_reports(root / args.dataset, args.dataset, Path(args.out_dir) if args.out_dir else None):
        if path.suffix == ".txt":
            out.write(path.read_text() + "\n")


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def cmd_reproduce(args, out, argv) -> None:
    log_ = _load(args)
    root = _output_root(args)
    dataset_dir = root / args.dataset
    dataset_dir.mkdir(parents=True, exist_ok=True)
    experiments = []
    for head in Head:
        for variant in Variant:
            config = _train_config(args, variant, head)
            res = run_experiment(log_, config, args.runs, root, args.jobs)
            experiments.append({"variant": variant.value, "head": head.value, "learning_rate": config.lr,
                                "seeds": [r.seed for r in res.runs], "overall": res.summary.overall})
            out.write(f"{variant.value:7s} {head.value:5s} lr={config.lr:g} "
                      f"overall={res.summary.overall:.4f} (sd {res.summary.overall_sd:.4f})\n")
    manifest = {
        "version": __version__,
        "argv": list(argv),
        "data": str(args.data),
        "data_sha256": _sha256(args.data),
        "options": {k: v for k, v in sorted(vars(args).items()) if k not in ("config",)},
        "experiments": experiments,
    }
    (dataset_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, default=str) + "\n")
    for path in write_reports(dataset_dir, args.dataset):
        if path.suffix == ".txt":
            out.write("\n" + path.read_text())


def main(argv: list[str] | None = None, out=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        if not args.command:
            raise UsageError("ppmgcn: a command is required (stats, mine-dfg, train, evaluate, report, reproduce)")
        args = resolve(args)
        logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                            format="%(levelname)s %(name)s: %(message)s")
        handler = {
            "stats": cmd_stats, "mine-dfg": cmd_mine_dfg, "train": cmd_train,
            "evaluate": cmd_evaluate, "report": cmd_report,
        }.get(args.command)
        if handler is not None:
            handler(args, out)
        else:
            cmd_reproduce(args, out, argv)
        return 0
    except PPMError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (FileNotFoundError, IsADirectoryError, PermissionError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
