"""Compiled inner loops shared by the forest, SOM and MDS modules.

Trees are stored flat: ``feature[k] < 0`` marks a leaf, ``left``/``right``
hold absolute node positions, and ``roots[t]`` is the first node of tree t.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def route(x, root, feature, threshold, left, right):
    node = root
    while feature[node] >= 0:
        if x[feature[node]] <= threshold[node]:
            node = left[node]
        else:
            node = right[node]
    return node


@njit(cache=True)
def leaf_matrix(X, roots, feature, threshold, left, right, leaf_id):
    n = X.shape[0]
    T = roots.shape[0]
    out = np.empty((n, T), dtype=np.int64)
    for i in range(n):
        for t in range(T):
            out[i, t] = leaf_id[route(X[i], roots[t], feature, threshold, left, right)]
    return out


@njit(cache=True)
def shared_leaf_counts(X_leaves, Y_leaves):
    """``out[i, j]`` = number of trees where row i of X and row j of Y agree."""
    n, T = X_leaves.shape
    m = Y_leaves.shape[0]
    out = np.zeros((n, m), dtype=np.int64)
    for i in range(n):
        for j in range(m):
            c = 0
            for t in range(T):
                if X_leaves[i, t] == Y_leaves[j, t]:
                    c += 1
            out[i, j] = c
    return out


@njit(cache=True)
def _rf_bmu(W, x, roots, feature, threshold, left, right, alive):
    """Neuron sharing a leaf with ``x`` in the most trees; first index on ties.

    A neuron only ends in ``x``'s leaf if it turns the same way at every node
    on ``x``'s path, so each tree is walked once along that path while the
    set of neurons still following it shrinks. A neuron's routing stops at
    the first node where it diverges.
    """
    L = W.shape[0]
    counts = np.zeros(L, dtype=np.int64)
    for t in range(roots.shape[0]):
        n_alive = L
        for ell in range(L):
            alive[ell] = ell
        node = roots[t]
        while feature[node] >= 0 and n_alive > 0:
            f = feature[node]
            thr = threshold[node]
            goes_left = x[f] <= thr
            kept = 0
            for a in range(n_alive):
                ell = alive[a]
                if (W[ell, f] <= thr) == goes_left:
                    alive[kept] = ell
                    kept += 1
            n_alive = kept
            node = left[node] if goes_left else right[node]
        for a in range(n_alive):
            counts[alive[a]] += 1
    best = 0
    for ell in range(1, L):
        if counts[ell] > counts[best]:
            best = ell
    return best


@njit(cache=True)
def rf_bmu(W, x, roots, feature, threshold, left, right):
    alive = np.empty(W.shape[0], dtype=np.int64)
    return _rf_bmu(W, x, roots, feature, threshold, left, right, alive)


@njit(cache=True)
def _euclidean_bmu(W, x):
    best = 0
    best_d = np.inf
    for ell in range(W.shape[0]):
        d = 0.0
        for j in range(W.shape[1]):
            diff = x[j] - W[ell, j]
            d += diff * diff
        if d < best_d:
            best_d = d
            best = ell
    return best


@njit(cache=True)
def _update(W, x, bmu, eta, alpha, grid_d2):
    for ell in range(W.shape[0]):
        g = eta * math.exp(-alpha * grid_d2[bmu, ell])
        for j in range(W.shape[1]):
            W[ell, j] += g * (x[j] - W[ell, j])


@njit(cache=True)
def som_epoch_euclidean(W, X, order, eta, alpha, grid_d2):
    for i in order:
        _update(W, X[i], _euclidean_bmu(W, X[i]), eta, alpha, grid_d2)


@njit(cache=True)
def som_epoch_rf(W, X, order, eta, alpha, grid_d2, roots, feature, threshold, left, right):
    """One RF-SOM epoch; returns the number of tree traversals performed."""
    alive = np.empty(W.shape[0], dtype=np.int64)
    for i in order:
        bmu = _rf_bmu(W, X[i], roots, feature, threshold, left, right, alive)
        _update(W, X[i], bmu, eta, alpha, grid_d2)
    return order.shape[0] * (W.shape[0] + 1) * roots.shape[0]


@njit(cache=True)
def _entropy(counts, n):
    h = 0.0
    for c in counts:
        if c > 0:
            p = c / n
            h -= p * math.log2(p)
    return h


@njit(cache=True)
def best_split(X, y, idx, features, n_classes):
    """Best information-gain split of the samples ``idx`` over ``features``.

    ``features`` must be sorted ascending; ties keep the first candidate met,
    i.e. the lower attribute, then the lower threshold.
    Returns ``(feature, threshold, gain)`` with feature -1 if no split exists.
    """
    n = idx.shape[0]
    parent = np.zeros(n_classes, dtype=np.int64)
    for i in idx:
        parent[y[i]] += 1
    h_parent = _entropy(parent, n)
    best_f = -1
    best_thr = 0.0
    best_gain = -1.0
    vals = np.empty(n)
    lab = np.empty(n, dtype=np.int64)
    left = np.zeros(n_classes, dtype=np.int64)
    right = np.zeros(n_classes, dtype=np.int64)
    for f in features:
        for k in range(n):
            vals[k] = X[idx[k], f]
        order = np.argsort(vals, kind="mergesort")
        for k in range(n):
            lab[k] = y[idx[order[k]]]
        left[:] = 0
        right[:] = parent
        for k in range(n - 1):
            left[lab[k]] += 1
            right[lab[k]] -= 1
            a = vals[order[k]]
            b = vals[order[k + 1]]
            if a == b:
                continue
            nl = k + 1
            nr = n - nl
            gain = h_parent - (nl / n) * _entropy(left, nl) - (nr / n) * _entropy(right, nr)
            if gain > best_gain:
                thr = 0.5 * (a + b)
                if thr >= b:
                    thr = a
                best_gain = gain
                best_f = f
                best_thr = thr
    return best_f, best_thr, best_gain


@njit(cache=True)
def jacobi_eigen(A, tol, max_sweeps):
    """Cyclic Jacobi rotations on a symmetric matrix (overwritten in place).

    Returns ``(diag, V, sweeps)`` with eigenvectors in the columns of ``V``;
    ``sweeps == -1`` signals non-convergence.
    """
    n = A.shape[0]
    Vt = np.eye(n)  # eigenvectors as rows while rotating: contiguous updates
    total = 0.0
    for i in range(n):
        for j in range(n):
            total += A[i, j] * A[i, j]
    limit = tol * math.sqrt(total)
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += 2.0 * A[p, q] * A[p, q]
        if off == 0.0 or math.sqrt(off) <= limit:
            d = np.empty(n)
            for i in range(n):
                d[i] = A[i, i]
            return d, Vt.T.copy(), sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if theta >= 0:
                    t = 1.0 / (theta + math.sqrt(1.0 + theta * theta))
                else:
                    t = -1.0 / (-theta + math.sqrt(1.0 + theta * theta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    if k == p or k == q:
                        continue
                    akp = A[p, k]
                    akq = A[q, k]
                    A[p, k] = c * akp - s * akq
                    A[q, k] = s * akp + c * akq
                    A[k, p] = A[p, k]
                    A[k, q] = A[q, k]
                A[p, p] -= t * apq
                A[q, q] += t * apq
                A[p, q] = 0.0
                A[q, p] = 0.0
                for k in range(n):
                    vp = Vt[p, k]
                    vq = Vt[q, k]
                    Vt[p, k] = c * vp - s * vq
                    Vt[q, k] = s * vp + c * vq
    d = np.empty(n)
    for i in range(n):
        d[i] = A[i, i]
    return d, Vt.T.copy(), -1
