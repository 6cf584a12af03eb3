"""RBF kernel evaluation and dense Gram matrices.

Sample matrices are row-major: one sample per row, shape ``(n, d)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class KernelParams:
    """Bandwidth of ``k(x, y) = exp(-gamma * ||x - y||^2)``."""

    gamma: float

    def __post_init__(self):
        gamma = float(self.gamma)
        if not np.isfinite(gamma) or gamma <= 0:
            raise ValueError(f"gamma must be positive and finite, got {self.gamma!r}")
        object.__setattr__(self, "gamma", gamma)


def _as_samples(X, name: str) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] < 1:
        raise ValueError(f"{name} must be a (n, d) matrix with d >= 1, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite values")
    return X


def squared_distances(X, Y) -> np.ndarray:
    """Pairwise squared Euclidean distances by direct per-coordinate summation.

    Coordinates are accumulated in a fixed order, so entry ``(i, j)`` of
    ``squared_distances(X, Y)`` is bitwise equal to entry ``(j, i)`` of
    ``squared_distances(Y, X)``.
    """
    X = _as_samples(X, "X")
    Y = _as_samples(Y, "Y")
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    out = np.zeros((X.shape[0], Y.shape[0]))
    for k in range(X.shape[1]):
        diff = X[:, k, None] - Y[None, :, k]
        out += diff * diff
    return out


def gram(X, Y, params: KernelParams) -> np.ndarray:
    """Kernel matrix with entry ``(i, j) = k(X[i], Y[j])``, shape ``(n, m)``."""
    return np.exp(-params.gamma * squared_distances(X, Y))


def rbf(x, y, params: KernelParams) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1:
        raise ValueError("rbf expects two vectors")
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    return float(gram(x, y, params)[0, 0])


def median_heuristic(X, seed: int = 0, subsample: int = 256) -> KernelParams:
    """gamma = 1 / (2 * median^2) over pairwise distances of a random subsample."""
    X = _as_samples(X, "X")
    if X.shape[0] < 2:
        raise ValueError("median heuristic needs at least 2 samples")
    if X.shape[0] > subsample:
        idx = np.random.default_rng(seed).choice(X.shape[0], size=subsample, replace=False)
        X = X[np.sort(idx)]
    iu = np.triu_indices(X.shape[0], k=1)
    med = float(np.median(np.sqrt(squared_distances(X, X)[iu])))
    if med <= 0:
        raise ValueError("median pairwise distance is zero; set gamma explicitly")
    return KernelParams(1.0 / (2.0 * med * med))


def kernel_expansion(coeffs, points, X, params: KernelParams) -> np.ndarray:
    """``sum_j coeffs[j] * k(points[j], x)`` for every row ``x`` of ``X``.

    Terms are accumulated one support point at a time, so each output value
    does not depend on which other rows are in the batch (unlike a BLAS
    matrix-vector product).
    """
    K = gram(points, X, params)
    out = np.zeros(K.shape[1])
    for c, row in zip(np.asarray(coeffs, dtype=np.float64).tolist(), K):
        out += c * row
    return out
