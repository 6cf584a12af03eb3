"""ROC-AUC and per-device summary statistics."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

PERCENTILES = (5, 25, 50, 75, 95)


def _check_inputs(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise ValueError(f"length mismatch: {scores.size} scores vs {labels.size} labels")
    if np.any(np.isnan(scores)):
        raise ValueError("NaN score")
    if not np.all((labels == 1) | (labels == -1)):
        raise ValueError("labels must be -1 or +1")
    return scores, labels


def auc(scores, labels) -> float | None:
    """Mann-Whitney ROC-AUC with ties counted 1/2.

    Returns None when either class is absent.
    """
    scores, labels = _check_inputs(scores, labels)
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(scores, method="average")
    u = float(ranks[pos].sum()) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def auc_bruteforce(scores, labels) -> float | None:
    """O(n^2) pairwise count, used as the oracle for :func:`auc`."""
    scores, labels = _check_inputs(scores, labels)
    pos = scores[labels == 1]
    neg = scores[labels == -1]
    if pos.size == 0 or neg.size == 0:
        return None
    wins = 0
    ties = 0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1
            elif p == q:
                ties += 1
    return (wins + 0.5 * ties) / (pos.size * neg.size)


@dataclass(frozen=True)
class DeviceScorecard:
    device_id: str
    auc: float | None
    n_test: int


@dataclass(frozen=True)
class SummaryMetrics:
    mean_auc: float
    evaluated_devices: int
    skipped_devices: int
    percentiles: dict[int, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "mean_auc": self.mean_auc,
            "evaluated_devices": self.evaluated_devices,
            "skipped_devices": self.skipped_devices,
            "percentiles": {str(p): v for p, v in self.percentiles.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> SummaryMetrics:
        return cls(
            mean_auc=d["mean_auc"],
            evaluated_devices=d["evaluated_devices"],
            skipped_devices=d["skipped_devices"],
            percentiles={int(p): v for p, v in d["percentiles"].items()},
        )


def evaluate_scores(scores_by_device: Mapping[str, np.ndarray], dataset) -> list[DeviceScorecard]:
    """Scorecards from precomputed test-split scores, one per device in dataset order."""
    cards = []
    for dev in dataset.devices:
        test = dev.test
        cards.append(DeviceScorecard(dev.device_id, auc(scores_by_device[dev.device_id], test.y), len(test)))
    return cards


def evaluate_per_device(predictor, dataset) -> list[DeviceScorecard]:
    """AUC of ``predictor`` on every device's test split.

    ``predictor`` is any object with ``decision_function(X)``, or a mapping
    from device_id to such an object (the fully-local baseline, where each
    device is scored by its own model).
    """
    if not dataset.is_split:
        raise ValueError("dataset must be split before evaluation")
    scores = {}
    for dev in dataset.devices:
        model = predictor[dev.device_id] if isinstance(predictor, Mapping) else predictor
        X = dev.test.X
        scores[dev.device_id] = model.decision_function(X) if len(X) else np.empty(0)
    return evaluate_scores(scores, dataset)


def summarize(cards) -> SummaryMetrics:
    values = np.array([c.auc for c in cards if c.auc is not None], dtype=np.float64)
    if values.size == 0:
        raise ValueError("no device has a defined AUC")
    values.sort()
    pct = np.percentile(values, PERCENTILES)  # linear interpolation
    return SummaryMetrics(
        mean_auc=float(values.mean()),
        evaluated_devices=int(values.size),
        skipped_devices=len(cards) - int(values.size),
        percentiles={p: float(v) for p, v in zip(PERCENTILES, pct)},
    )


def relative_gain(method: SummaryMetrics, local: SummaryMetrics) -> float:
    if local.mean_auc == 0:
        raise ValueError("local mean AUC is zero")
    return (method.mean_auc - local.mean_auc) / local.mean_auc


def fraction_of_ideal(method: SummaryMetrics, ideal: SummaryMetrics) -> float:
    if ideal.mean_auc == 0:
        raise ValueError("ideal mean AUC is zero")
    return method.mean_auc / ideal.mean_auc


def mean_device_relative_gain(method_cards, local_cards) -> float | None:
    """Mean of per-device relative gains; devices where either AUC is undefined
    or the local AUC is zero are skipped."""
    local = {c.device_id: c.auc for c in local_cards}
    gains = []
    for c in method_cards:
        base = local.get(c.device_id)
        if c.auc is None or base is None or base == 0:
            continue
        gains.append((c.auc - base) / base)
    return float(np.mean(gains)) if gains else None
