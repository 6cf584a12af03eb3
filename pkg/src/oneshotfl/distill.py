"""Compression of an ensemble into a single kernel expansion over proxy points.

The student is ``f'(x) = sum_j coeffs[j] k(proxy[j], x)``, fitted to the
ensemble's decision values on the proxy points by least squares.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ._util import SCHEMA_VERSION, decode_record, derive_rng, encode_record
from .feddata import FederatedDataset, pool_validation
from .kernel import KernelParams, gram, kernel_expansion

PROVENANCES = ("validation-sample", "external-file")


@dataclass(frozen=True, eq=False)
class ProxySet:
    points: np.ndarray
    provenance: str = "validation-sample"

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64)
        if points.ndim != 2 or points.shape[0] < 1:
            raise ValueError("proxy set needs at least one (d,) point")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        object.__setattr__(self, "points", points)

    def __len__(self) -> int:
        return int(self.points.shape[0])

    @property
    def d(self) -> int:
        return int(self.points.shape[1])


@dataclass(frozen=True, eq=False)
class DistilledModel:
    proxy_points: np.ndarray
    coeffs: np.ndarray
    kernel: KernelParams
    ridge: float
    residual: np.ndarray | None = None  # targets - K @ coeffs at fit time

    def decision_function(self, X) -> np.ndarray:
        return kernel_expansion(self.coeffs, self.proxy_points, X, self.kernel)

    def to_record(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "distilled",
            "kernel": {"type": "rbf", "gamma": self.kernel.gamma},
            "ridge": self.ridge,
            "coeffs": self.coeffs.tolist(),
            "proxy_points": self.proxy_points.tolist(),
        }


def sample_proxy(dataset: FederatedDataset, l: int, seed: int) -> ProxySet:
    """Unlabeled sample of ``min(l, pool)`` points from all validation splits."""
    if l < 1:
        raise ValueError("l must be >= 1")
    pool = pool_validation(dataset)
    if len(pool) == 0:
        raise ValueError("validation pool is empty")
    perm = derive_rng(seed, "proxy").permutation(len(pool))
    return ProxySet(pool.X[perm[:l]], "validation-sample")


def soft_labels(ensemble, proxy: ProxySet) -> np.ndarray:
    return np.asarray(ensemble.decision_function(proxy.points), dtype=np.float64)


def distill(proxy: ProxySet, targets, kernel: KernelParams, ridge: float = 1e-8) -> DistilledModel:
    """Minimize ``(1/l) ||targets - K a||^2 + ridge ||a||^2`` with K the proxy Gram.

    Solved from the normal equations ``(K^T K / l + ridge I) a = K^T targets / l``
    by Cholesky.
    """
    targets = np.asarray(targets, dtype=np.float64).ravel()
    l = len(proxy)
    if targets.shape[0] != l:
        raise ValueError(f"{targets.shape[0]} targets for {l} proxy points")
    if not np.all(np.isfinite(targets)):
        raise ValueError("targets must be finite")
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    K = gram(proxy.points, proxy.points, kernel)
    A = K.T @ K / l + ridge * np.eye(l)
    b = K.T @ targets / l
    singular_msg = "proxy Gram matrix is singular; use ridge > 0"
    if ridge == 0:
        # K^T K is only semidefinite; reject numerically singular systems up front
        eig = np.linalg.eigvalsh(A)
        if eig[0] <= eig[-1] * l * np.finfo(np.float64).eps:
            raise ValueError(singular_msg)
    try:
        coeffs = linalg.cho_solve(linalg.cho_factor(A, lower=True), b)
    except linalg.LinAlgError:
        raise ValueError(singular_msg) from None
    if not np.all(np.isfinite(coeffs)):
        raise ValueError("distillation solve produced non-finite coefficients")
    return DistilledModel(
        proxy_points=proxy.points.copy(),
        coeffs=coeffs,
        kernel=kernel,
        ridge=float(ridge),
        residual=targets - K @ coeffs,
    )


def distill_objective(model: DistilledModel, proxy: ProxySet, targets) -> float:
    """``(1/l) sum_i (targets[i] - f'(proxy[i]))^2``, without the ridge term."""
    targets = np.asarray(targets, dtype=np.float64).ravel()
    if targets.shape[0] != len(proxy):
        raise ValueError(f"{targets.shape[0]} targets for {len(proxy)} proxy points")
    r = targets - model.decision_function(proxy.points)
    return float(r @ r / len(proxy))


def serialize_distilled(model: DistilledModel) -> bytes:
    return encode_record(model.to_record())


def deserialize_distilled(blob: bytes) -> DistilledModel:
    rec = decode_record(blob)
    if rec.get("kind") != "distilled":
        raise ValueError("not a distilled-model record")
    return DistilledModel(
        proxy_points=np.asarray(rec["proxy_points"], dtype=np.float64),
        coeffs=np.asarray(rec["coeffs"], dtype=np.float64),
        kernel=KernelParams(rec["kernel"]["gamma"]),
        ridge=float(rec["ridge"]),
    )
