"""Server-side ensemble curation, averaged prediction, and communication accounting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._util import SCHEMA_VERSION, decode_record, device_sort_key, encode_record
from .localmodel import LocalModel, local_model_from_record, serialize

AGGREGATIONS = ("mean-decision", "mean-sign")
POLICIES = ("CV", "Data", "Random", "Full")


class EmptyEnsembleError(ValueError):
    pass


@dataclass(frozen=True)
class SelectionPolicy:
    kind: str
    k: int | None = None
    cv_baseline_auc: float = 0.5
    data_baseline_n: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.kind not in POLICIES:
            raise ValueError(f"unknown policy {self.kind!r}")
        if self.kind != "Full" and (self.k is None or self.k < 1):
            raise ValueError("k must be >= 1")

    def select(self, eligible: list[LocalModel]) -> Ensemble:
        if self.kind == "CV":
            return select_cv(eligible, self.cv_baseline_auc, self.k)
        if self.kind == "Data":
            return select_data(eligible, self.data_baseline_n, self.k)
        if self.kind == "Random":
            return select_random(eligible, self.k, self.seed)
        return select_full(eligible)


def aggregate(values, aggregation: str = "mean-decision") -> np.ndarray:
    """Average per-member decision arrays, summing in member order.

    The running sum starts from the first member's values (not from zero),
    so a singleton ensemble reproduces its member bit for bit.
    """
    if aggregation not in AGGREGATIONS:
        raise ValueError(f"unknown aggregation {aggregation!r}")
    total = None
    count = 0
    for v in values:
        v = np.asarray(v, dtype=np.float64)
        if aggregation == "mean-sign":
            v = np.sign(v)
        total = v.copy() if total is None else total + v
        count += 1
    if total is None:
        raise EmptyEnsembleError("empty ensemble")
    return total / count


@dataclass(frozen=True, eq=False)
class Ensemble:
    members: tuple[LocalModel, ...]
    aggregation: str = "mean-decision"

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise EmptyEnsembleError("empty ensemble")
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"unknown aggregation {self.aggregation!r}")

    @property
    def k(self) -> int:
        return len(self.members)

    @property
    def device_ids(self) -> list[str]:
        return [m.device_id for m in self.members]

    def decision_function(self, X) -> np.ndarray:
        return aggregate((m.decision_function(X) for m in self.members), self.aggregation)

    def to_record(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "ensemble",
            "aggregation": self.aggregation,
            "members": [m.to_record() for m in self.members],
        }


def ensemble_predict(ensemble: Ensemble, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("ensemble_predict expects a single input vector")
    return float(ensemble.decision_function(x[None, :])[0])


def eligible(models, min_samples: int) -> list[LocalModel]:
    """SVM models from devices with at least ``min_samples`` training points."""
    return [m for m in models if m.is_svm and m.n_train >= min_samples]


def _take_top(candidates, key, k: int, aggregation: str) -> Ensemble:
    if not candidates:
        raise EmptyEnsembleError("empty ensemble")
    ranked = sorted(candidates, key=lambda m: (-key(m), device_sort_key(m.device_id)))
    return Ensemble(tuple(ranked[:k]), aggregation)


def select_cv(models, baseline_auc: float, k: int, aggregation: str = "mean-decision") -> Ensemble:
    """The k best validation AUCs among models reaching ``baseline_auc``."""
    passing = [m for m in models if m.validation_auc is not None and m.validation_auc >= baseline_auc]
    return _take_top(passing, lambda m: m.validation_auc, k, aggregation)


def select_data(models, baseline_n: int, k: int, aggregation: str = "mean-decision") -> Ensemble:
    """The k largest training sets among models with at least ``baseline_n`` points."""
    passing = [m for m in models if m.n_train >= baseline_n]
    return _take_top(passing, lambda m: m.n_train, k, aggregation)


def select_random(models, k: int, seed: int, aggregation: str = "mean-decision") -> Ensemble:
    """Uniform sample of ``min(k, len(models))`` without replacement.

    A seeded Fisher-Yates shuffle of the id-sorted models; the first k of the
    shuffled order are the members.
    """
    if not models:
        raise EmptyEnsembleError("no eligible models to sample from")
    pool = sorted(models, key=lambda m: device_sort_key(m.device_id))
    rng = np.random.default_rng(seed)
    for i in range(len(pool) - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        pool[i], pool[j] = pool[j], pool[i]
    return Ensemble(tuple(pool[:k]), aggregation)


def select_full(models, aggregation: str = "mean-decision") -> Ensemble:
    if not models:
        raise EmptyEnsembleError("empty ensemble")
    return Ensemble(tuple(sorted(models, key=lambda m: device_sort_key(m.device_id))), aggregation)


def serialize_ensemble(ensemble: Ensemble) -> bytes:
    return encode_record(ensemble.to_record())


def deserialize_ensemble(blob: bytes) -> Ensemble:
    rec = decode_record(blob)
    if rec.get("kind") != "ensemble":
        raise ValueError("not an ensemble record")
    return Ensemble(tuple(local_model_from_record(r) for r in rec["members"]), rec["aggregation"])


@dataclass(frozen=True)
class CommCost:
    up_bytes: int
    down_bytes: int
    up_models: int
    down_models: int

    def to_dict(self) -> dict:
        return {
            "up_bytes": self.up_bytes,
            "down_bytes": self.down_bytes,
            "up_models": self.up_models,
            "down_models": self.down_models,
        }


def comm_cost(ensemble: Ensemble, distilled=None) -> CommCost:
    """Bytes sent device->server (member records) and server->device.

    Downlink is the ensemble record, or the distilled model record when one
    is given.
    """
    up = sum(len(serialize(m)) for m in ensemble.members)
    if distilled is None:
        down, down_models = len(serialize_ensemble(ensemble)), ensemble.k
    else:
        from .distill import serialize_distilled

        down, down_models = len(serialize_distilled(distilled)), 1
    return CommCost(up_bytes=up, down_bytes=down, up_models=ensemble.k, down_models=down_models)
