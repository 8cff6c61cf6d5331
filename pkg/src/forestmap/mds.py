"""Classical (Torgerson) multidimensional scaling.

Works for both Euclidean distances and forest dissimilarities. The latter
are not Euclidean, so the centred Gram matrix can have negative eigenvalues;
they are clamped to zero and their share is reported.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class Embedding2D:
    coordinates: np.ndarray
    eigenvalues_used: np.ndarray
    negative_mass: float = 0.0

    def to_csv(self, path, labels=None) -> None:
        """Write ``x,y[,class]`` rows with a header line."""
        n = self.coordinates.shape[0]
        with open(path, "w") as fh:
            fh.write("x,y,class\n" if labels is not None else "x,y\n")
            for i in range(n):
                x, y = self.coordinates[i]
                tail = f",{int(labels[i])}" if labels is not None else ""
                fh.write(f"{x:.17g},{y:.17g}{tail}\n")


def symmetric_eigen(a, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    a : (n, n) array_like
        Symmetric within 1e-9 (relative to its largest entry).
    tol : float
        Stop once the off-diagonal Frobenius norm is below ``tol * ||a||_F``.
    max_sweeps : int
        Upper bound on full sweeps over all ``(p, q)`` pairs.

    Returns
    -------
    eigenvalues : (n,) array
        Sorted in descending order.
    eigenvectors : (n, n) array
        Orthonormal columns matching ``eigenvalues``.
    """
    a = np.array(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"need a square matrix, got shape {a.shape}")
    scale = max(np.abs(a).max(initial=0.0), 1.0)
    if np.abs(a - a.T).max(initial=0.0) > 1e-9 * scale:
        raise ValueError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    values, vectors, sweeps = _kernels.jacobi_eigen(a, tol, max_sweeps)
    if sweeps < 0:
        raise ConvergenceError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
    order = np.argsort(-values, kind="stable")
    return values[order], vectors[:, order]


def euclidean_distance_matrix(rows) -> np.ndarray:
    X = np.asarray(rows, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("need a non-empty list of equal-length vectors")
    sq = np.sum(X * X, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * X @ X.T, 0.0)
    d = np.sqrt(d2)
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    return d


def double_center(d) -> np.ndarray:
    """``-1/2 J D^2 J`` with ``J`` the centring matrix."""
    d2 = np.asarray(d, dtype=float) ** 2
    row = d2.mean(axis=1, keepdims=True)
    col = d2.mean(axis=0, keepdims=True)
    return -0.5 * (d2 - row - col + d2.mean())


def classical_mds(d, target_dim: int = 2) -> Embedding2D:
    """Embed points given their pairwise distances.

    Coordinates are the top eigenvectors of the double-centred squared
    distances, scaled by the root of their (clamped) eigenvalues. Each axis
    is oriented so its largest-magnitude eigenvector entry is positive.
    """
    d = np.asarray(d, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError(f"need a square distance matrix, got shape {d.shape}")
    n = d.shape[0]
    if n < 3:
        raise ValueError(f"classical MDS needs at least 3 points, got {n}")
    if np.abs(d - d.T).max() > 1e-9 * max(np.abs(d).max(), 1.0):
        raise ValueError("distance matrix is not symmetric")
    values, vectors = symmetric_eigen(double_center(d))
    vecs = vectors[:, :target_dim].copy()
    for k in range(target_dim):
        if vecs[np.argmax(np.abs(vecs[:, k])), k] < 0:
            vecs[:, k] *= -1
    used = values[:target_dim]
    coords = vecs * np.sqrt(np.maximum(used, 0.0))
    total = np.abs(values).sum()
    negative = float(-values[values < 0].sum() / total) if total > 0 else 0.0
    return Embedding2D(coords, used, negative)
