"""Per-device models: dual kernel SVM trained to completion, or a constant.

The SVM solves the regularized hinge-loss problem without intercept,

    P(w) = (1/n) sum_i max(0, 1 - y_i <w, phi(x_i)>) + (lam/2) ||w||^2,

through its dual

    D(alpha) = (1/n) sum_i alpha_i y_i - (1/(2 lam n^2)) alpha^T K alpha,
    subject to 0 <= alpha_i y_i <= 1,

with ``w(alpha) = (1/(lam n)) sum_i alpha_i phi(x_i)``.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from ._util import SCHEMA_VERSION, decode_record, derive_seed, encode_record
from .kernel import KernelParams, gram, kernel_expansion
from .metrics import auc


@dataclass(frozen=True, eq=False)
class SvmModel:
    """Trained dual SVM.

    ``decision_function(x) = (1/(lam n)) sum_i dual_coeffs[i] k(support_points[i], x)``.
    The solver diagnostics (``converged``, ``epochs``, ``gap``) are not
    part of the serialized record.
    """

    support_points: np.ndarray
    labels: np.ndarray
    dual_coeffs: np.ndarray
    lam: float
    kernel: KernelParams
    converged: bool = True
    epochs: int = 0
    gap: float = float("nan")

    @property
    def n_train(self) -> int:
        return int(self.labels.shape[0])

    @property
    def d(self) -> int:
        return int(self.support_points.shape[1])

    def decision_function(self, X) -> np.ndarray:
        return kernel_expansion(self.dual_coeffs, self.support_points, X, self.kernel) / (self.lam * self.n_train)

    def to_record(self) -> dict:
        return {
            "kind": "svm",
            "kernel": {"type": "rbf", "gamma": self.kernel.gamma},
            "lambda": self.lam,
            "n_train": self.n_train,
            "labels": [int(v) for v in self.labels],
            "dual_coeffs": self.dual_coeffs.tolist(),
            "support_points": self.support_points.tolist(),
        }


@dataclass(frozen=True)
class ConstantModel:
    score: float = 0.0

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X)
        n = 1 if X.ndim <= 1 else X.shape[0]
        return np.full(n, float(self.score))

    def to_record(self) -> dict:
        return {"kind": "constant", "score": self.score}


@dataclass(frozen=True, eq=False)
class LocalModel:
    """A device's model plus the metadata it shares with the server."""

    body: SvmModel | ConstantModel
    device_id: str
    n_train: int
    validation_auc: float | None = None

    @property
    def is_svm(self) -> bool:
        return isinstance(self.body, SvmModel)

    def decision_function(self, X) -> np.ndarray:
        return self.body.decision_function(X)

    def to_record(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "device_id": self.device_id,
            "n_train": self.n_train,
            "validation_auc": self.validation_auc,
            "model": self.body.to_record(),
        }


def decision(model, x) -> float:
    """Decision value of any model for a single input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("decision expects a single input vector")
    return float(model.decision_function(x[None, :])[0])


def _check_training_data(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError(f"expected X of shape (n, d) and y of shape (n,), got {X.shape} and {y.shape}")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 samples to train an SVM")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite feature values")
    if not np.all((y == 1) | (y == -1)):
        raise ValueError("labels must be -1 or +1")
    if np.all(y == y[0]):
        raise ValueError("single-class data: use train_constant")
    return X, y.astype(np.float64)


def dual_objective(alpha, K, y, lam: float) -> float:
    alpha = np.asarray(alpha, dtype=np.float64)
    n = alpha.shape[0]
    return float(np.mean(alpha * y) - (alpha @ (K @ alpha)) / (2.0 * lam * n * n))


def _objectives(alpha, K, y, lam: float) -> tuple[float, float]:
    n = alpha.shape[0]
    Ka = K @ alpha
    quad = float(alpha @ Ka)
    margins = y * Ka / (lam * n)
    hinge = np.maximum(0.0, 1.0 - margins)
    primal = hinge.mean() + quad / (2.0 * lam * n * n)
    dual = np.mean(alpha * y) - quad / (2.0 * lam * n * n)
    return float(primal), float(dual)


def duality_gap(model: SvmModel, X, y) -> float:
    """P(w(alpha)) - D(alpha) on the model's training set."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] != model.n_train or y.shape[0] != model.n_train:
        raise ValueError(f"model has {model.n_train} training points, data has {X.shape[0]}")
    K = gram(X, X, model.kernel)
    primal, dual = _objectives(model.dual_coeffs, K, y, model.lam)
    return primal - dual


def train_svm(
    X,
    y,
    lam: float | None = None,
    kernel: KernelParams = KernelParams(1.0),
    tol: float = 1e-6,
    max_epochs: int = 1000,
    seed: int = 0,
    on_epoch: Callable[[int, float, float], None] | None = None,
) -> SvmModel:
    """Dual coordinate ascent to a duality gap of ``tol``.

    Each epoch sweeps every coordinate once in a seeded random permutation,
    maximizing the dual exactly in that coordinate (closed form for hinge
    loss, then clipped to the box). ``lam`` defaults to ``1/n``.
    ``on_epoch(epoch, primal, dual)`` is called after every epoch; the dual
    value never decreases between epochs, the gap itself need not shrink
    monotonically. Hitting ``max_epochs`` is not an error; the model comes
    back with ``converged=False``.
    """
    X, y = _check_training_data(X, y)
    n = X.shape[0]
    if lam is None:
        lam = 1.0 / n
    if not lam > 0:
        raise ValueError("lam must be positive")
    if not tol > 0 or max_epochs < 1:
        raise ValueError("tol must be positive and max_epochs >= 1")

    K = gram(X, X, kernel)
    lam_n = lam * n
    # work in beta_i = alpha_i * y_i, boxed in [0, 1]
    beta = np.zeros(n)
    Ka = np.zeros(n)
    ys = y.tolist()
    diag = K.diagonal().tolist()
    rng = np.random.default_rng(seed)

    gap = 1.0
    converged = False
    epoch = 0
    while epoch < max_epochs:
        epoch += 1
        for i in rng.permutation(n).tolist():
            b_old = beta[i]
            b_new = b_old + lam_n * (1.0 - ys[i] * Ka[i] / lam_n) / diag[i]
            b_new = min(1.0, max(0.0, b_new))
            if b_new != b_old:
                beta[i] = b_new
                Ka += ((b_new - b_old) * ys[i]) * K[i]
        alpha = beta * y
        Ka = K @ alpha  # resync accumulated drift
        primal, dual = _objectives(alpha, K, y, lam)
        gap = primal - dual
        if on_epoch is not None:
            on_epoch(epoch, primal, dual)
        if gap <= tol:
            converged = True
            break

    return SvmModel(
        support_points=X.copy(),
        labels=y.astype(np.int64),
        dual_coeffs=beta * y,
        lam=float(lam),
        kernel=kernel,
        converged=converged,
        epochs=epoch,
        gap=gap,
    )


def train_constant(X=None, y=None) -> ConstantModel:
    """Label-independent constant classifier (AUC 0.5 under the tie convention)."""
    return ConstantModel(0.0)


@dataclass(frozen=True)
class TrainingConfig:
    min_samples: int = 30
    lam: float | None = None
    kernel: KernelParams = field(default_factory=lambda: KernelParams(1.0))
    tol: float = 1e-6
    max_epochs: int = 1000
    seed: int = 0


def train_local(device, config: TrainingConfig) -> LocalModel:
    """Train one device: SVM when the train split is large enough and has both
    classes, constant classifier otherwise."""
    if not device.is_split:
        raise ValueError(f"device {device.device_id} is not split")
    train = device.train
    n = len(train)
    if n >= config.min_samples and np.unique(train.y).size == 2:
        body = train_svm(
            train.X,
            train.y,
            lam=config.lam,
            kernel=config.kernel,
            tol=config.tol,
            max_epochs=config.max_epochs,
            seed=derive_seed(config.seed, "train", device.device_id),
        )
    else:
        body = train_constant(train.X, train.y)

    val = device.validation
    val_auc = None
    if len(val):
        val_auc = auc(body.decision_function(val.X), val.y)
    return LocalModel(body=body, device_id=device.device_id, n_train=n, validation_auc=val_auc)


def serialize(model: LocalModel) -> bytes:
    return encode_record(model.to_record())


def _body_from_record(rec: dict) -> SvmModel | ConstantModel:
    if rec["kind"] == "constant":
        return ConstantModel(float(rec["score"]))
    if rec["kind"] != "svm":
        raise ValueError(f"unknown model kind {rec['kind']!r}")
    return SvmModel(
        support_points=np.asarray(rec["support_points"], dtype=np.float64),
        labels=np.asarray(rec["labels"], dtype=np.int64),
        dual_coeffs=np.asarray(rec["dual_coeffs"], dtype=np.float64),
        lam=float(rec["lambda"]),
        kernel=KernelParams(rec["kernel"]["gamma"]),
    )


def local_model_from_record(rec: dict) -> LocalModel:
    return LocalModel(
        body=_body_from_record(rec["model"]),
        device_id=rec["device_id"],
        n_train=int(rec["n_train"]),
        validation_auc=rec["validation_auc"],
    )


def deserialize(blob: bytes) -> LocalModel:
    return local_model_from_record(decode_record(blob))
