"""Federated datasets: CSV ingestion, synthetic non-IID generation, splits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ._util import derive_rng, device_sort_key

DEFAULT_RATIOS = (0.5, 0.4, 0.1)  # train, test, validation


@dataclass(frozen=True, eq=False)
class LabeledSet:
    """Row-major samples ``X`` (n, d) with labels ``y`` in {-1, +1}."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.int64)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise ValueError(f"bad sample shapes {X.shape} / {y.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("non-finite features")
        if not np.all((y == 1) | (y == -1)):
            raise ValueError("labels must be -1 or +1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return int(self.y.shape[0])

    @property
    def d(self) -> int:
        return int(self.X.shape[1])

    @classmethod
    def empty(cls, d: int) -> LabeledSet:
        return cls(np.empty((0, d)), np.empty(0, dtype=np.int64))

    @classmethod
    def concat(cls, parts, d: int) -> LabeledSet:
        parts = list(parts)
        if not parts:
            return cls.empty(d)
        return cls(np.vstack([p.X for p in parts]), np.concatenate([p.y for p in parts]))

    def take(self, idx) -> LabeledSet:
        idx = np.asarray(idx, dtype=np.int64)
        return LabeledSet(self.X[idx], self.y[idx])


@dataclass(frozen=True, eq=False)
class DeviceDataset:
    """One device's samples and, once split, its train/validation/test parts."""

    device_id: str
    samples: LabeledSet
    train: LabeledSet | None = None
    validation: LabeledSet | None = None
    test: LabeledSet | None = None

    @property
    def d(self) -> int:
        return self.samples.d

    @property
    def is_split(self) -> bool:
        return self.train is not None


@dataclass(frozen=True, eq=False)
class FederatedDataset:
    devices: tuple[DeviceDataset, ...]
    d: int
    name: str = "federated"

    def __post_init__(self):
        devices = tuple(self.devices)
        if not devices:
            raise ValueError("federated dataset has no devices")
        ids = [dev.device_id for dev in devices]
        if len(set(ids)) != len(ids):
            raise ValueError("device ids must be unique")
        for dev in devices:
            if dev.d != self.d:
                raise ValueError(f"device {dev.device_id} has dimension {dev.d}, expected {self.d}")
        object.__setattr__(self, "devices", devices)

    @property
    def m(self) -> int:
        return len(self.devices)

    @property
    def is_split(self) -> bool:
        return all(dev.is_split for dev in self.devices)

    @property
    def n_samples(self) -> int:
        return sum(len(dev.samples) for dev in self.devices)

    def device(self, device_id: str) -> DeviceDataset:
        for dev in self.devices:
            if dev.device_id == device_id:
                return dev
        raise KeyError(device_id)


_LABELS = {"-1": -1, "1": 1, "+1": 1, "0": -1}


def load_csv(path) -> FederatedDataset:
    """Read ``device_id,label,f0,...,f{d-1}`` rows into an unsplit dataset.

    Labels 0/1 are remapped to -1/+1. Devices are ordered by device id;
    samples keep file order within a device.
    """
    path = Path(path)
    rows: dict[str, tuple[list, list]] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: no samples")
        header = [h.strip() for h in header]
        d = len(header) - 2
        if header[:2] != ["device_id", "label"] or d < 1 or header[2:] != [f"f{j}" for j in range(d)]:
            raise ValueError(f"{path}:1: expected header device_id,label,f0,...; got {','.join(header)}")
        for row in reader:
            lineno = reader.line_num
            if not row:
                continue
            if len(row) != d + 2:
                raise ValueError(f"{path}:{lineno}: expected {d + 2} fields, got {len(row)}")
            label = _LABELS.get(row[1].strip())
            if label is None:
                raise ValueError(f"{path}:{lineno}: invalid label {row[1]!r}")
            try:
                feats = [float(v) for v in row[2:]]
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric feature") from None
            if not all(math.isfinite(v) for v in feats):
                raise ValueError(f"{path}:{lineno}: non-finite feature")
            xs, ys = rows.setdefault(row[0].strip(), ([], []))
            xs.append(feats)
            ys.append(label)
    if not rows:
        raise ValueError(f"{path}: no samples")
    devices = [
        DeviceDataset(dev_id, LabeledSet(np.array(xs, dtype=np.float64).reshape(-1, d), np.array(ys)))
        for dev_id, (xs, ys) in sorted(rows.items(), key=lambda kv: device_sort_key(kv[0]))
    ]
    return FederatedDataset(tuple(devices), d, name=path.stem)


def write_csv(dataset: FederatedDataset, path) -> None:
    """Write every device's samples (original order) in the ``load_csv`` schema."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["device_id", "label"] + [f"f{j}" for j in range(dataset.d)])
        for dev in dataset.devices:
            for x, label in zip(dev.samples.X, dev.samples.y):
                writer.writerow([dev.device_id, int(label)] + [f"{v:.17g}" for v in x])


def synth_federated(
    m: int,
    size_range: tuple[int, int],
    d: int,
    heterogeneity: float,
    seed: int,
    separation: float = 1.0,
    max_rotation: float = math.pi / 2,
    shift_scale: float = 1.0,
    positive_scale: float = 0.5,
    name: str = "synthetic",
) -> FederatedDataset:
    """Generate ``m`` devices of two-Gaussian binary data with device-level shifts.

    Globally, class +1 is N(+mu, positive_scale^2 I) and class -1 is
    N(-mu, I) with ``mu = (separation / 2) * e_0``; the unequal spreads give
    a curved Bayes boundary that small local samples resolve poorly. Each
    device then rotates its samples in the (f0, f1) plane by an angle drawn
    uniformly in ``heterogeneity * [-max_rotation, max_rotation]``,
    translates them by ``heterogeneity * shift_scale * N(0, I)`` and skews
    its positive-class prior to ``0.5 + heterogeneity * U(-0.25, 0.25)``.
    ``heterogeneity = 0`` makes all devices IID draws from the global mixture.
    """
    n_min, n_max = size_range
    if m < 1 or n_min < 1 or n_max < n_min or d < 2:
        raise ValueError("need m >= 1, 1 <= n_min <= n_max, d >= 2")
    if not 0.0 <= heterogeneity <= 1.0:
        raise ValueError("heterogeneity must lie in [0, 1]")
    mu = np.zeros(d)
    mu[0] = separation / 2.0
    width = max(4, len(str(m - 1)))
    devices = []
    for t in range(m):
        dev_id = f"dev{t:0{width}d}"
        rng = derive_rng(seed, "synth", dev_id)
        n = int(rng.integers(n_min, n_max + 1))
        theta = heterogeneity * max_rotation * rng.uniform(-1.0, 1.0)
        shift = heterogeneity * shift_scale * rng.standard_normal(d)
        prior = 0.5 + heterogeneity * rng.uniform(-0.25, 0.25)
        y = np.where(rng.random(n) < prior, 1, -1)
        noise = rng.standard_normal((n, d))
        X = y[:, None] * mu[None, :] + np.where(y[:, None] == 1, positive_scale, 1.0) * noise
        c, s = math.cos(theta), math.sin(theta)
        x0, x1 = X[:, 0].copy(), X[:, 1].copy()
        X[:, 0] = c * x0 - s * x1
        X[:, 1] = s * x0 + c * x1
        X += shift
        devices.append(DeviceDataset(dev_id, LabeledSet(X, y)))
    return FederatedDataset(tuple(devices), d, name=name)


def split_sizes(n: int, ratios=DEFAULT_RATIOS) -> tuple[int, int, int]:
    """(train, test, validation) sizes: floors of n * ratio, remainder to train."""
    # tiny epsilon so e.g. 100 * 0.29 floors to 29, not 28
    n_test = int(math.floor(n * ratios[1] + 1e-9))
    n_val = int(math.floor(n * ratios[2] + 1e-9))
    return n - n_test - n_val, n_test, n_val


def split(dataset: FederatedDataset, ratios=DEFAULT_RATIOS, seed: int = 0) -> FederatedDataset:
    """Per-device seeded shuffle, then contiguous train / test / validation blocks."""
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must be three positive numbers summing to 1, got {ratios}")
    devices = []
    for dev in dataset.devices:
        n = len(dev.samples)
        n_train, n_test, _ = split_sizes(n, ratios)
        perm = derive_rng(seed, "split", dev.device_id).permutation(n)
        devices.append(
            replace(
                dev,
                train=dev.samples.take(perm[:n_train]),
                test=dev.samples.take(perm[n_train : n_train + n_test]),
                validation=dev.samples.take(perm[n_train + n_test :]),
            )
        )
    return FederatedDataset(tuple(devices), dataset.d, dataset.name)


def _require_split(dataset: FederatedDataset) -> None:
    if not dataset.is_split:
        raise ValueError("dataset must be split first")


def pool_train(dataset: FederatedDataset, cap: int | None = None, seed: int = 0) -> LabeledSet:
    """All devices' train splits, concatenated in device order.

    With ``cap`` set and exceeded, a seeded subsample of ``cap`` points is
    returned (kept in pooled order).
    """
    _require_split(dataset)
    pooled = LabeledSet.concat((dev.train for dev in dataset.devices), dataset.d)
    if cap is not None and len(pooled) > cap:
        idx = np.sort(derive_rng(seed, "pool-cap").choice(len(pooled), size=cap, replace=False))
        pooled = pooled.take(idx)
    return pooled


def pool_validation(dataset: FederatedDataset) -> LabeledSet:
    _require_split(dataset)
    return LabeledSet.concat((dev.validation for dev in dataset.devices), dataset.d)


def pool_test(dataset: FederatedDataset) -> LabeledSet:
    _require_split(dataset)
    return LabeledSet.concat((dev.test for dev in dataset.devices), dataset.d)
