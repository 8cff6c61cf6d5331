import tracemalloc
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from forestmap import forest as forest_mod
from forestmap.dataset import Dataset, load_csv
from forestmap.forest import (DecisionTree, Internal, Leaf, RandomForest, proximity_matrix,
                              train_forest)
from forestmap.rfsom import (RfSomModel, build_rfsom_classifier, find_bmu_rf, rf_bmu_finder,
                             train_rfsom)
from forestmap.som import (SomGrid, SomHyperParams, init_grid, label_som, learning_rate,
                           neighbourhood_width, train_som, update_weights)


def make(X, y, C=None):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    return Dataset(X, y, tuple(f"a{j}" for j in range(X.shape[1])), C or int(y.max()) + 1)


def random_case(seed, L=None, T=None, N=None, M=3):
    rng = np.random.default_rng(seed)
    N = N or int(rng.integers(4, 31))
    T = T or int(rng.integers(1, 21))
    L = L or int(rng.integers(1, 17))
    d = make(rng.random((N, M)), np.arange(N) % 2, 2)
    forest = train_forest(d, T, seed=seed)
    # neurons partly copied from samples so exact leaf sharing is common
    W = rng.random((L, M)) * 1.2 - 0.1
    copies = rng.random(L) < 0.4
    W[copies] = d.attributes[rng.integers(0, N, copies.sum())]
    return forest, SomGrid(1, L, W), rng.random(M), d


def oracle_bmu(forest, grid, x):
    """argmin of x's row in the dissimilarity matrix of H = W plus x."""
    H = np.vstack([grid.weights, x])
    dis = proximity_matrix(forest, H).dissimilarity()
    row = dis[grid.size, :grid.size]
    return int(np.flatnonzero(row == row.min())[0])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_find_bmu_rf_matches_full_matrix(seed):
    forest, grid, x, _ = random_case(seed)
    assert find_bmu_rf(forest, grid, x) == oracle_bmu(forest, grid, x)


def test_identical_neuron_is_returned():
    forest, grid, _, _ = random_case(1, L=8, T=10)
    x = grid.weights[5].copy()
    bmu = find_bmu_rf(forest, grid, x)
    assert proximity_matrix(forest, [x, grid.weights[bmu]]).values[0, 1] == 1.0
    assert bmu <= 5


def test_no_shared_leaves_gives_index_zero():
    tree = DecisionTree.from_root(Internal(0, 0.5, Leaf(0, 0), Leaf(1, 1)))
    forest = RandomForest([tree, tree], 1, 2, 1)
    grid = SomGrid(1, 3, np.array([[0.9], [0.7], [0.6]]))
    assert find_bmu_rf(forest, grid, [0.1]) == 0
    assert find_bmu_rf(forest, grid, [0.8]) == 0
    grid = SomGrid(1, 3, np.array([[0.9], [0.1], [0.2]]))
    assert find_bmu_rf(forest, grid, [0.3]) == 1


@pytest.mark.parametrize("L, T", [(1, 1), (9, 7), (16, 20), (49, 100)])
def test_cost_contract(L, T):
    forest, grid, x, _ = random_case(L * 100 + T, L=L, T=T, N=30)
    forest.traversals = 0
    find_bmu_rf(forest, grid, x)
    assert forest.traversals == (L + 1) * T


def test_dimension_mismatch():
    forest, grid, x, _ = random_case(2, M=3)
    with pytest.raises(ValueError):
        find_bmu_rf(forest, grid, np.zeros(4))


def test_train_rfsom_matches_reference_loop():
    forest, _, _, d = random_case(3, T=8, N=20)
    p = SomHyperParams(e_stop=6)
    g = init_grid(2, 3, d, 4)
    ref = g.copy()
    order_rng = np.random.default_rng(11)
    for e in range(p.e_stop):
        for i in order_rng.permutation(d.n_samples):
            b = oracle_bmu(forest, ref, d.attributes[i])
            update_weights(ref, d.attributes[i], b, learning_rate(p, e), neighbourhood_width(p, e))
    out = train_rfsom(g, forest, d, p, 11)
    assert np.allclose(out.weights, ref.weights, rtol=0, atol=1e-12)


def test_train_rfsom_counts_traversals():
    forest, _, _, d = random_case(4, T=5, N=12)
    g = init_grid(2, 2, d, 0)
    forest.traversals = 0
    train_rfsom(g, forest, d, SomHyperParams(e_stop=3), 0)
    assert forest.traversals == 3 * 12 * (4 + 1) * 5


def test_train_rfsom_zero_epochs_and_determinism():
    forest, _, _, d = random_case(5, T=6, N=20)
    g = init_grid(3, 3, d, 2)
    assert np.array_equal(train_rfsom(g, forest, d, SomHyperParams(e_stop=0), 1).weights,
                          g.weights)
    p = SomHyperParams(e_stop=15)
    a = train_rfsom(g, forest, d, p, 1)
    b = train_rfsom(g, forest, d, p, 1)
    assert np.array_equal(a.weights, b.weights)


def test_same_start_different_end():
    forest, _, _, d = random_case(6, T=20, N=30)
    start_a, start_b = init_grid(3, 3, d, 7), init_grid(3, 3, d, 7)
    assert np.array_equal(start_a.weights, start_b.weights)
    p = SomHyperParams(e_stop=20)
    som = train_som(start_a, d, p, 3)
    rfsom = train_rfsom(start_b, forest, d, p, 3)
    assert not np.array_equal(som.weights, rfsom.weights)


def test_training_keeps_dissimilarity_storage_small(monkeypatch):
    forest, _, _, d = random_case(7, T=20, N=30)
    X = np.repeat(d.attributes, 20, axis=0)
    big = make(X, np.arange(X.shape[0]) % 2, 2)
    boom = lambda *a, **k: pytest.fail("full proximity matrix built during training")
    monkeypatch.setattr(forest_mod, "proximity_matrix", boom)
    g = init_grid(4, 4, big, 0)
    train_rfsom(g, forest, big, SomHyperParams(e_stop=1), 0)  # warm up compiled code
    tracemalloc.start()
    train_rfsom(g, forest, big, SomHyperParams(e_stop=2), 0)
    peak = tracemalloc.get_traced_memory()[1]
    tracemalloc.stop()
    n = big.n_samples
    assert peak < n * n * 8 / 10  # far below one N x N float matrix


def test_build_and_classify():
    rng = np.random.default_rng(8)
    X = rng.random((40, 5))
    d = make(X, (X[:, 0] > 0.5).astype(int), 2)
    model = build_rfsom_classifier(d, (3, 3), tree_count=15,
                                   som_params=SomHyperParams(e_stop=20))
    assert model.forest.m == 2
    pred = model.predict(d.attributes)
    assert pred.shape == (40,) and set(pred.tolist()) <= {0, 1}
    again = build_rfsom_classifier(d, (3, 3), tree_count=15,
                                   som_params=SomHyperParams(e_stop=20))
    assert np.array_equal(again.labeled.grid.weights, model.labeled.grid.weights)
    with pytest.raises(ValueError):
        model.predict(np.zeros((2, 4)))


def test_sonar_classifier_shape():
    sonar = load_csv(Path(__file__).resolve().parents[1] / "data" / "sonar.csv")
    model = build_rfsom_classifier(sonar, (8, 8), tree_count=100,
                                   som_params=SomHyperParams(e_stop=1))
    assert model.labeled.grid.size == 64 and model.forest.m == 7
    assert model.forest.tree_count == 100


def test_model_round_trip(tmp_path):
    rng = np.random.default_rng(9)
    d = make(rng.random((30, 3)), np.arange(30) % 3, 3)
    model = build_rfsom_classifier(d, (2, 2), tree_count=5,
                                   som_params=SomHyperParams(e_stop=5))
    model.save(tmp_path / "m.json")
    back = RfSomModel.load(tmp_path / "m.json")
    assert np.array_equal(back.predict(d.attributes), model.predict(d.attributes))
    doc = model.to_dict()
    doc["version"] = 2
    with pytest.raises(ValueError, match="version"):
        RfSomModel.from_dict(doc)


def test_rf_finder_labels_with_rf_bmus():
    forest, grid, _, d = random_case(10, L=6, T=12, N=25)
    lab = label_som(grid, d, rf_bmu_finder(forest))
    manual = np.zeros((6, 2))
    for x, c in zip(d.attributes, d.labels):
        b = oracle_bmu(forest, grid, x)
        manual[:, c] += np.exp(-0.1 * grid.grid_sq_distances()[b])
    assert np.allclose(lab.class_mass, manual, atol=1e-12)
