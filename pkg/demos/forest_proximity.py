"""Random Forest proximities on Iris, and what classical MDS makes of them.

Two flowers are close when many trees send them to the same leaf. This
script trains a forest, builds the proximity matrix, and compares the
Euclidean MDS embedding with the RF-MDS one.

    python3 demos/forest_proximity.py [out_dir]
"""

import sys
from pathlib import Path

import numpy as np

from forestmap import (apply_normalization, classical_mds, euclidean_distance_matrix,
                       fit_minmax, load_csv, proximity_matrix, train_forest)
from forestmap.viz import ScatterSpec, render_scatter

ROOT = Path(__file__).resolve().parents[1]
out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output")
out.mkdir(parents=True, exist_ok=True)

iris = load_csv(ROOT / "data" / "iris.csv")
data = apply_normalization(iris, fit_minmax(iris))
forest = train_forest(data, tree_count=100, seed=0)
print(f"forest: {forest.tree_count} trees, m={forest.m}, "
      f"mean leaves per tree {np.mean([t.leaf_count for t in forest.trees]):.1f}")

prox = proximity_matrix(forest, data.attributes).values
same = data.labels[:, None] == data.labels[None, :]
off = ~np.eye(data.n_samples, dtype=bool)
print(f"mean proximity within a class {prox[same & off].mean():.3f}, "
      f"across classes {prox[~same].mean():.3f}")

# The forest sees setosa as one tight block: most of its pairs share a
# leaf in nearly every tree.
setosa = data.labels == 0
print(f"setosa pairs with proximity > 0.9: "
      f"{np.mean(prox[np.ix_(setosa, setosa)][off[np.ix_(setosa, setosa)]] > 0.9):.0%}")

euclid = classical_mds(euclidean_distance_matrix(data.attributes))
rf = classical_mds(1.0 - prox)
print(f"negative eigenvalue mass: Euclidean {euclid.negative_mass:.3f}, RF {rf.negative_mass:.3f}")

for name, emb in (("iris_mds", euclid), ("iris_rfmds", rf)):
    (out / f"{name}.svg").write_text(render_scatter(ScatterSpec(emb, data.labels, title=name)))
    print("wrote", out / f"{name}.svg")
