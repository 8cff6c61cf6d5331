"""Euclidean SOM against RF-SOM on Pima, from the same starting grid.

Both maps start from identical weights and see samples in the same order;
only the best-matching-unit rule differs. We hold out a stratified tenth
of the data, report accuracies, and draw both maps as coxcomb grids.

    python3 demos/som_vs_rfsom.py [out_dir]
"""

import sys
from pathlib import Path

import numpy as np

from forestmap import (SomHyperParams, apply_normalization, classify, fit_minmax, init_grid,
                       label_som, load_csv, stratified_folds, train_forest, train_rfsom,
                       train_som)
from forestmap.rfsom import rf_bmu_finder
from forestmap.viz import CoxcombSpec, render_som_grid

ROOT = Path(__file__).resolve().parents[1]
out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output")
out.mkdir(parents=True, exist_ok=True)

pima = load_csv(ROOT / "data" / "pima.csv")
train_idx, test_idx = stratified_folds(pima, 10, seed=0).train_test(0)
norm = fit_minmax(pima.subset(train_idx))
train = apply_normalization(pima.subset(train_idx), norm)
test = apply_normalization(pima.subset(test_idx), norm)

params = SomHyperParams()
start = init_grid(7, 7, train, seed=1)
forest = train_forest(train, tree_count=100, seed=0)
print(f"{train.n_samples} training rows, {test.n_samples} held out, "
      f"{params.e_stop} epochs on a 7x7 grid")

som = label_som(train_som(start, train, params, seed=2), train, params=params)

forest.traversals = 0
finder = rf_bmu_finder(forest)
rfsom = label_som(train_rfsom(start, forest, train, params, seed=2), train, finder,
                  params=params)
searches = params.e_stop * train.n_samples + train.n_samples
print(f"RF-SOM routed {forest.traversals:,} vectors through trees "
      f"= {searches:,} searches x (49 + 1) x 100")

acc = lambda lab, f=None: 100 * np.mean(
    [classify(lab, x, *(f,) if f else ()) == c for x, c in zip(test.attributes, test.labels)])
print(f"hold-out accuracy: RF {100 * np.mean(forest.predict(test.attributes) == test.labels):.1f}%, "
      f"SOM {acc(som):.1f}%, RF-SOM {acc(rfsom, finder):.1f}%")

# Same start, different end: the forest reshapes which neurons win.
print(f"mean |W_som - W_rfsom| = {np.abs(som.grid.weights - rfsom.grid.weights).mean():.3f}")

names = list(pima.attribute_names)
for name, lab in (("pima_som", som), ("pima_rfsom", rfsom)):
    svg = render_som_grid(CoxcombSpec(lab, attribute_names=names, title=name))
    (out / f"{name}.svg").write_text(svg)
    print("wrote", out / f"{name}.svg")
