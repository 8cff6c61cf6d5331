"""forestmap command line: experiment, sweep, visualize, train, predict.

Any option can also come from a JSON file given with ``--config``; options
on the command line win. Relative ``data`` paths in a config file are
resolved against the file's directory.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .dataset import DatasetError
from .experiment import (DEFAULT_TREE_COUNTS, ExperimentConfig, predict_file, run_experiment,
                         run_tree_sweep, sweep_text, train_model, visualize)
from .rfsom import RfSomModel
from .som import SomHyperParams

SOM_KEYS = ("e_stop", "eta0", "lambda_eta", "alpha0", "lambda_alpha")


def parse_grid(text: str) -> tuple[int, int]:
    try:
        p, q = (int(v) for v in str(text).lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 7x7, got {text!r}") from None
    return p, q


def _int_list(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(v) for v in str(text).replace(",", " ").split()]


def _label_col(text):
    try:
        return int(text)
    except (TypeError, ValueError):
        return text


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file supplying defaults for any option")
    common.add_argument("--data", help="CSV dataset")
    common.add_argument("--label-col", type=_label_col, help="label column index or name (default: last)")
    common.add_argument("--no-header", action="store_true", default=None,
                        help="the CSV has no header line")
    common.add_argument("--grid", type=parse_grid, help="SOM grid, e.g. 7x7")
    common.add_argument("--trees", type=int, help="trees in the forest (default 100)")
    common.add_argument("--m", type=int, help="attributes tried per split (default floor(sqrt(M)))")
    common.add_argument("--folds", type=int, help="cross-validation folds (default 10)")
    common.add_argument("--seed", type=int, help="single seed")
    common.add_argument("--seeds", type=_int_list, help="comma-separated seeds, one CV run each")
    common.add_argument("--no-normalize", action="store_true", default=None,
                        help="skip min-max scaling of attributes")
    common.add_argument("--out", help="output directory")
    common.add_argument("--name", help="dataset name used in output file names")
    common.add_argument("--jobs", type=int, help="worker processes for folds (default 1)")
    for key in SOM_KEYS:
        common.add_argument(f"--{key.replace('_', '-')}", dest=key,
                            type=int if key == "e_stop" else float)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="forestmap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("experiment", parents=[common], help="cross-validated RF / SOM / RF-SOM accuracy")
    sweep = sub.add_parser("sweep", parents=[common], help="accuracy against the number of trees")
    sweep.add_argument("--tree-counts", type=_int_list,
                       help=f"default {','.join(map(str, DEFAULT_TREE_COUNTS))}")
    sub.add_parser("visualize", parents=[common], help="SOM, RF-SOM, MDS and RF-MDS figures")
    train = sub.add_parser("train", parents=[common], help="fit an RF-SOM model bundle")
    train.add_argument("--model", required=True, help="output JSON model file")
    predict = sub.add_parser("predict", parents=[common], help="classify rows with a model bundle")
    predict.add_argument("--model", required=True, help="JSON model file from `train`")
    predict.add_argument("--no-label", action="store_true",
                         help="the input file has no label column")
    return parser


def merged_options(args: argparse.Namespace) -> dict:
    """Config-file values overlaid with the options given on the command line."""
    opts = {}
    if args.config:
        path = Path(args.config)
        opts = json.loads(path.read_text())
        for key in ("data", "out"):
            if key in opts and not Path(opts[key]).is_absolute():
                opts[key] = str(path.parent / opts[key])
    for key, value in vars(args).items():
        if value is not None and key not in ("config", "command"):
            opts[key] = value
    return opts


def config_from_options(opts: dict) -> ExperimentConfig:
    if not opts.get("data"):
        raise ValueError("no dataset given (use --data or a config file)")
    if "seeds" in opts:
        seeds = _int_list(opts["seeds"])
    elif "seed" in opts:
        seeds = [int(opts["seed"])]
    else:
        seeds = [0]
    grid = opts.get("grid", (5, 5))
    som = SomHyperParams(**{k: opts[k] for k in SOM_KEYS if k in opts})
    return ExperimentConfig(
        data=str(opts["data"]),
        grid=parse_grid(grid) if isinstance(grid, str) else tuple(grid),
        label_col=_label_col(opts.get("label_col", -1)),
        has_header=not opts.get("no_header", False),
        trees=int(opts.get("trees", 100)),
        m=opts.get("m"),
        folds=int(opts.get("folds", 10)),
        seeds=tuple(seeds),
        normalize=not opts.get("no_normalize", not opts.get("normalize", True)),
        som=som,
        out=opts.get("out"),
        name=opts.get("name"),
        jobs=int(opts.get("jobs", 1)),
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(message)s")
    try:
        opts = merged_options(args)
        config = config_from_options(opts)
        if args.command == "experiment":
            report = run_experiment(config)
            sys.stdout.write(report.to_text())
        elif args.command == "sweep":
            counts = _int_list(opts.get("tree_counts", DEFAULT_TREE_COUNTS))
            sys.stdout.write(sweep_text(run_tree_sweep(config, counts)))
        elif args.command == "visualize":
            if not config.out:
                raise ValueError("visualize needs --out")
            for path in visualize(config).files.values():
                print(path)
        elif args.command == "train":
            train_model(config).save(args.model)
            print(args.model)
        elif args.command == "predict":
            model = RfSomModel.load(args.model)
            out = Path(config.out or ".") / f"{config.dataset_name}_predictions.csv"
            out.parent.mkdir(parents=True, exist_ok=True)
            predict_file(model, config.data, out, config.label_col, config.has_header,
                         not args.no_label)
            print(out)
    except (OSError, ValueError, DatasetError, KeyError) as exc:
        print(f"forestmap {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
