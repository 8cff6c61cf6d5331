"""Cross-validated comparisons of RF, SOM and RF-SOM, plus figure output.

Everything here is a deterministic function of the config and its seeds.
Folds can run in a process pool; results are sorted before they are
reported, so scheduling never changes the output.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .dataset import (Dataset, NormalizationParams, apply_normalization, fit_minmax,
                      load_csv, stratified_folds)
from .forest import default_m, proximity_matrix, train_forest
from .mds import Embedding2D, classical_mds, euclidean_distance_matrix
from .rfsom import RfSomModel, rf_bmu_finder, train_rfsom
from .som import (LabeledSom, SomGrid, SomHyperParams, classify, init_grid, label_som,
                  train_som)
from .viz import (CoxcombSpec, LineChartSpec, ScatterSpec, render_line_chart,
                  render_scatter, render_som_grid)

log = logging.getLogger(__name__)

REPORT_FORMAT = "forestmap.experiment-report"
SWEEP_FORMAT = "forestmap.tree-sweep"
METHODS = ("RF", "SOM", "RF-SOM")
DEFAULT_TREE_COUNTS = (10, 20, 50, 100, 200, 500)
STD_DEFINITION = "population standard deviation of the fold accuracies within one seed"


@dataclass(frozen=True)
class ExperimentConfig:
    data: str
    grid: tuple[int, int] = (5, 5)
    label_col: int | str = -1
    has_header: bool = True
    trees: int = 100
    m: int | None = None
    folds: int = 10
    seeds: tuple[int, ...] = (0,)
    normalize: bool = True
    som: SomHyperParams = field(default_factory=SomHyperParams)
    out: str | None = None
    name: str | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("need at least 2 folds")
        if not self.seeds:
            raise ValueError("need at least one seed")
        if self.trees < 1:
            raise ValueError("need at least one tree")
        if len(self.grid) != 2 or min(self.grid) < 1:
            raise ValueError(f"bad grid shape {self.grid}")
        object.__setattr__(self, "grid", tuple(int(v) for v in self.grid))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))

    @property
    def dataset_name(self) -> str:
        return (self.name or Path(self.data).stem).lower()

    def echo(self) -> dict:
        d = asdict(self)
        for k in ("out", "jobs"):
            d.pop(k)
        d["grid"] = f"{self.grid[0]}x{self.grid[1]}"
        d["seeds"] = list(self.seeds)
        d["name"] = self.dataset_name
        return d


def component_seeds(fold_seed: int) -> tuple[int, int, int]:
    """Independent (forest, grid init, sample order) seeds for one fold."""
    children = np.random.SeedSequence(fold_seed).spawn(3)
    return tuple(int(c.generate_state(1)[0]) for c in children)


def load_dataset(config: ExperimentConfig) -> Dataset:
    return load_csv(config.data, config.label_col, config.has_header)


def _accuracy(pred, truth) -> float:
    return 100.0 * float(np.mean(np.asarray(pred) == np.asarray(truth)))


def run_fold(data: Dataset, config: ExperimentConfig, seed: int, fold: int,
             assignment: np.ndarray, methods=METHODS, on_init=None) -> dict:
    """Train and score the requested methods on one train/test split.

    The Euclidean SOM and the RF-SOM start from the same initial grid and
    see samples in the same order. ``on_init(som_start, rfsom_start)`` is
    called with the two starting grids just before training.
    """
    train_idx = np.flatnonzero(assignment != fold)
    test_idx = np.flatnonzero(assignment == fold)
    train, test = data.subset(train_idx), data.subset(test_idx)
    norm = fit_minmax(train) if config.normalize else NormalizationParams.identity(data.n_attributes)
    train, test = apply_normalization(train, norm), apply_normalization(test, norm)
    forest_seed, init_seed, order_seed = component_seeds(seed + fold)

    acc, timing = {}, {}
    t0 = time.perf_counter()
    forest = None
    if "RF" in methods or "RF-SOM" in methods:
        forest = train_forest(train, config.trees, config.m, forest_seed)
        timing["forest"] = time.perf_counter() - t0
        if "RF" in methods:
            acc["RF"] = _accuracy(forest.predict(test.attributes), test.labels)
    grid = init_grid(*config.grid, train, init_seed)
    som_start, rfsom_start = grid.copy(), grid.copy()
    if on_init is not None:
        on_init(som_start, rfsom_start)
    if "SOM" in methods:
        t0 = time.perf_counter()
        labeled = label_som(train_som(som_start, train, config.som, order_seed), train,
                            params=config.som)
        acc["SOM"] = _accuracy([classify(labeled, x) for x in test.attributes], test.labels)
        timing["SOM"] = time.perf_counter() - t0
    if "RF-SOM" in methods:
        t0 = time.perf_counter()
        finder = rf_bmu_finder(forest)
        trained = train_rfsom(rfsom_start, forest, train, config.som, order_seed)
        labeled = label_som(trained, train, finder, params=config.som)
        acc["RF-SOM"] = _accuracy([classify(labeled, x, finder) for x in test.attributes],
                                  test.labels)
        timing["RF-SOM"] = time.perf_counter() - t0
    return {"seed": seed, "fold": fold, "test_size": int(test_idx.size),
            "accuracy": acc, "seconds": timing}


def _fold_task(args):
    data, config, seed, fold, assignment, methods = args
    return run_fold(data, config, seed, fold, assignment, methods)


@dataclass
class ExperimentReport:
    config: dict
    folds: list[dict]
    methods: tuple[str, ...] = METHODS
    timings: dict = field(default_factory=dict)

    def per_seed(self, method: str) -> list[dict]:
        out = []
        for seed in sorted({f["seed"] for f in self.folds}):
            accs = [f["accuracy"][method] for f in self.folds if f["seed"] == seed]
            out.append({"seed": seed, "fold_accuracies": accs,
                        "mean": float(np.mean(accs)), "std": float(np.std(accs))})
        return out

    def summary(self, method: str) -> tuple[float, float]:
        """Mean over seeds of the per-seed mean and of the per-seed std."""
        rows = self.per_seed(method)
        return (float(np.mean([r["mean"] for r in rows])),
                float(np.mean([r["std"] for r in rows])))

    def mean(self, method: str) -> float:
        return self.summary(method)[0]

    def to_dict(self) -> dict:
        methods = {}
        for m in self.methods:
            mean, std = self.summary(m)
            methods[m] = {"mean": mean, "std": std, "per_seed": self.per_seed(m)}
        return {"format": REPORT_FORMAT, "version": 1, "config": self.config,
                "std_definition": STD_DEFINITION, "methods": methods}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    def to_text(self) -> str:
        name = self.config.get("name", "")
        k = self.config.get("folds")
        lines = [f"{name}: {k}-fold CV, seeds {self.config.get('seeds')}, "
                 f"grid {self.config.get('grid')}, T={self.config.get('trees')}",
                 f"{'method':<8} {'mean':>7} {'std':>7}"]
        for m in self.methods:
            mean, std = self.summary(m)
            lines.append(f"{m:<8} {mean:7.2f} {std:7.2f}")
        return "\n".join(lines) + "\n"


def run_experiment(config: ExperimentConfig, data: Dataset | None = None,
                   methods=METHODS, write: bool = True) -> ExperimentReport:
    """K-fold comparison of the requested methods, repeated for every seed."""
    data = data if data is not None else load_dataset(config)
    if config.m is None:
        config = replace(config, m=default_m(data.n_attributes))
    tasks = []
    for seed in config.seeds:
        assignment = stratified_folds(data, config.folds, seed).assignment
        tasks += [(data, config, seed, k, assignment, methods) for k in range(config.folds)]
    t0 = time.perf_counter()
    if config.jobs > 1:
        with ProcessPoolExecutor(config.jobs) as pool:
            results = list(pool.map(_fold_task, tasks))
    else:
        results = []
        for task in tasks:
            results.append(_fold_task(task))
            log.info("%s seed %d fold %d: %s", config.dataset_name, task[2], task[3],
                     results[-1]["accuracy"])
    results.sort(key=lambda r: (r["seed"], r["fold"]))
    timings = {"total_seconds": time.perf_counter() - t0,
               "folds": [{"seed": r["seed"], "fold": r["fold"], **r["seconds"]} for r in results]}
    folds = [{k: r[k] for k in ("seed", "fold", "test_size", "accuracy")} for r in results]
    report = ExperimentReport(config.echo(), folds, tuple(methods), timings)
    if write and config.out:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        stem = f"{config.dataset_name}_experiment"
        (out / f"{stem}.json").write_text(report.to_json())
        (out / f"{stem}.txt").write_text(report.to_text())
        (out / f"{stem}_timings.json").write_text(json.dumps(timings, indent=1) + "\n")
    return report


def run_tree_sweep(config: ExperimentConfig, tree_counts=DEFAULT_TREE_COUNTS,
                   data: Dataset | None = None, write: bool = True) -> dict:
    """RF and RF-SOM accuracy as a function of the number of trees."""
    tree_counts = [int(t) for t in tree_counts]
    if not tree_counts:
        raise ValueError("tree_counts must not be empty")
    data = data if data is not None else load_dataset(config)
    rows = []
    for T in tree_counts:
        report = run_experiment(replace(config, trees=T), data, ("RF", "RF-SOM"), write=False)
        for method in ("RF", "RF-SOM"):
            mean, std = report.summary(method)
            rows.append({"trees": T, "method": method, "mean": mean, "std": std,
                         "per_seed": report.per_seed(method)})
    sweep = {"format": SWEEP_FORMAT, "version": 1, "config": config.echo(),
             "tree_counts": tree_counts, "std_definition": STD_DEFINITION, "rows": rows}
    if write and config.out:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        stem = f"{config.dataset_name}_sweep"
        (out / f"{stem}.json").write_text(json.dumps(sweep, indent=1) + "\n")
        (out / f"{stem}.txt").write_text(sweep_text(sweep))
        (out / f"{stem}.svg").write_text(sweep_chart(sweep))
    return sweep


def sweep_text(sweep: dict) -> str:
    lines = [f"{'trees':>6} {'method':<8} {'mean':>7} {'std':>7}"]
    lines += [f"{r['trees']:>6} {r['method']:<8} {r['mean']:7.2f} {r['std']:7.2f}"
              for r in sweep["rows"]]
    return "\n".join(lines) + "\n"


def sweep_chart(sweep: dict) -> str:
    series = {m: [r["mean"] for r in sweep["rows"] if r["method"] == m] for m in ("RF", "RF-SOM")}
    return render_line_chart(LineChartSpec(
        sweep["tree_counts"], series, title=f"{sweep['config']['name']}: accuracy vs trees",
        x_label="number of trees", y_label="accuracy [%]"))


@dataclass
class Visualization:
    som: LabeledSom
    rfsom: LabeledSom
    initial: SomGrid
    mds: Embedding2D
    rf_mds: Embedding2D
    labels: np.ndarray
    files: dict[str, str]


def visualize(config: ExperimentConfig, data: Dataset | None = None,
              write: bool = True) -> Visualization:
    """The four whole-dataset panels: SOM, RF-SOM, MDS and RF-MDS."""
    data = data if data is not None else load_dataset(config)
    norm = fit_minmax(data) if config.normalize else NormalizationParams.identity(data.n_attributes)
    train = apply_normalization(data, norm)
    forest_seed, init_seed, order_seed = component_seeds(config.seeds[0])
    forest = train_forest(train, config.trees, config.m, forest_seed)
    start = init_grid(*config.grid, train, init_seed)
    som = label_som(train_som(start, train, config.som, order_seed), train, params=config.som)
    finder = rf_bmu_finder(forest)
    rfsom = label_som(train_rfsom(start, forest, train, config.som, order_seed), train, finder,
                      params=config.som)
    mds = classical_mds(euclidean_distance_matrix(train.attributes))
    rf_mds = classical_mds(proximity_matrix(forest, train.attributes).dissimilarity())

    name = config.dataset_name
    title = name.capitalize()
    names = list(data.attribute_names) if data.n_attributes <= 12 else None
    svgs = {
        f"{name}_som.svg": render_som_grid(CoxcombSpec(som, attribute_names=names,
                                                       title=f"{title}: SOM")),
        f"{name}_rfsom.svg": render_som_grid(CoxcombSpec(rfsom, attribute_names=names,
                                                         title=f"{title}: RF-SOM")),
        f"{name}_mds.svg": render_scatter(ScatterSpec(mds, train.labels, title=f"{title}: MDS",
                                                      class_count=data.class_count)),
        f"{name}_rfmds.svg": render_scatter(ScatterSpec(rf_mds, train.labels,
                                                        title=f"{title}: RF-MDS",
                                                        class_count=data.class_count)),
    }
    files = {}
    if write and config.out:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        for fname, text in svgs.items():
            (out / fname).write_text(text)
            files[fname] = str(out / fname)
        mds.to_csv(out / f"{name}_mds.csv", train.labels)
        rf_mds.to_csv(out / f"{name}_rfmds.csv", train.labels)
    else:
        files = dict(svgs)
    return Visualization(som, rfsom, start, mds, rf_mds, train.labels, files)


def train_model(config: ExperimentConfig, data: Dataset | None = None) -> RfSomModel:
    """RF-SOM classifier on the whole dataset, seeded like fold 0 of seed[0]."""
    data = data if data is not None else load_dataset(config)
    norm = fit_minmax(data) if config.normalize else NormalizationParams.identity(data.n_attributes)
    train = apply_normalization(data, norm)
    forest_seed, init_seed, order_seed = component_seeds(config.seeds[0])
    forest = train_forest(train, config.trees, config.m, forest_seed)
    grid = train_rfsom(init_grid(*config.grid, train, init_seed), forest, train, config.som,
                       order_seed)
    labeled = label_som(grid, train, rf_bmu_finder(forest), params=config.som)
    return RfSomModel(forest, labeled, norm)


def read_attributes(path, n_attributes: int, label_col: int | str = -1,
                    has_header: bool = True, has_label: bool = True) -> np.ndarray:
    """Numeric attribute rows of a CSV, optionally dropping its label column."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(v.strip() for v in r)]
    header = rows[0] if has_header else None
    body = rows[1:] if has_header else rows
    if not body:
        raise ValueError(f"{path}: no data rows")
    width = len(body[0])
    drop = None
    if has_label:
        if isinstance(label_col, str):
            if header is None or label_col not in header:
                raise ValueError(f"{path}: no column named {label_col!r}")
            drop = header.index(label_col)
        else:
            drop = label_col % width
    X = []
    for r, row in enumerate(body):
        if len(row) != width:
            raise ValueError(f"{path}: row {r + 1 + bool(has_header)} has {len(row)} fields, "
                             f"expected {width}")
        fields = [v for j, v in enumerate(row) if j != drop]
        try:
            X.append([float(v) for v in fields])
        except ValueError as exc:
            raise ValueError(f"{path}: row {r + 1 + bool(has_header)}: {exc}") from None
    X = np.asarray(X, dtype=float)
    if X.shape[1] != n_attributes:
        raise ValueError(f"{path}: model expects {n_attributes} attributes, file has {X.shape[1]}")
    return X


def predict_file(model: RfSomModel, path, out_path, label_col: int | str = -1,
                 has_header: bool = True, has_label: bool = True) -> np.ndarray:
    X = read_attributes(path, model.forest.attribute_count, label_col, has_header, has_label)
    pred = model.predict(X)
    with open(out_path, "w") as fh:
        fh.write("predicted_class\n")
        fh.writelines(f"{int(p)}\n" for p in pred)
    return pred
