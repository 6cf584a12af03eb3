import itertools

import numpy as np
import pytest
from scipy import stats

from oneshotfl.feddata import (
    DeviceDataset,
    FederatedDataset,
    LabeledSet,
    load_csv,
    pool_train,
    pool_validation,
    split,
    split_sizes,
    synth_federated,
    write_csv,
)


def _multiset(X, y=None):
    rows = [tuple(r) for r in np.asarray(X)]
    if y is not None:
        rows = [r + (int(l),) for r, l in zip(rows, y)]
    return sorted(rows)


def test_load_csv_small(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("device_id,label,f0,f1\na,1,0.5,1.5\nb,0,2,3\na,-1,-1e-3,4\n")
    ds = load_csv(path)
    assert ds.m == 2 and ds.d == 2
    a, b = ds.device("a"), ds.device("b")
    assert len(a.samples) == 2 and len(b.samples) == 1
    assert a.samples.y.tolist() == [1, -1]
    assert b.samples.y.tolist() == [-1]  # 0 remapped
    np.testing.assert_array_equal(a.samples.X, [[0.5, 1.5], [-1e-3, 4.0]])


def test_load_csv_crlf(tmp_path):
    path = tmp_path / "d.csv"
    path.write_bytes(b"device_id,label,f0\r\n1,1,0.25\r\n1,-1,0.5\r\n")
    assert len(load_csv(path).devices[0].samples) == 2


def test_load_csv_numeric_ids_sorted_numerically(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("device_id,label,f0\n10,1,0\n2,1,0\n1,-1,0\n")
    assert [d.device_id for d in load_csv(path).devices] == ["1", "2", "10"]


@pytest.mark.parametrize(
    "body,match",
    [
        ("", "no samples"),
        ("device_id,label,f0\n", "no samples"),
        ("device_id,label,f0\na,1,0.5,2\n", ":2:"),
        ("device_id,label,f0\na,1,0.5\na,1,abc\n", ":3:"),
        ("device_id,label,f0\na,2,0.5\n", ":2:"),
        ("device_id,lbl,f0\na,1,0.5\n", ":1:"),
    ],
)
def test_load_csv_errors(tmp_path, body, match):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(ValueError, match=match):
        load_csv(path)


def test_csv_round_trip(tmp_path):
    ds = synth_federated(6, (3, 15), 4, 0.8, seed=5)
    write_csv(ds, tmp_path / "s.csv")
    back = load_csv(tmp_path / "s.csv")
    assert [d.device_id for d in back.devices] == [d.device_id for d in ds.devices]
    for a, b in zip(ds.devices, back.devices):
        assert a.samples.X.tobytes() == b.samples.X.tobytes()
        assert np.array_equal(a.samples.y, b.samples.y)


def test_synth_determinism_and_ranges():
    a = synth_federated(8, (5, 30), 3, 0.5, seed=1)
    b = synth_federated(8, (5, 30), 3, 0.5, seed=1)
    for da, db in zip(a.devices, b.devices):
        assert da.samples.X.tobytes() == db.samples.X.tobytes()
        assert np.array_equal(da.samples.y, db.samples.y)
        assert 5 <= len(da.samples) <= 30
    one = synth_federated(1, (10, 20), 2, 0.3, seed=0)
    assert one.m == 1 and 10 <= len(one.devices[0].samples) <= 20


@pytest.mark.parametrize("args", [(0, (1, 2), 2, 0.5), (3, (0, 2), 2, 0.5), (3, (5, 2), 2, 0.5), (3, (1, 2), 1, 0.5), (3, (1, 2), 2, 1.5)])
def test_synth_invalid(args):
    with pytest.raises(ValueError):
        synth_federated(*args, seed=0)


def test_synth_iid_at_zero_heterogeneity():
    ds = synth_federated(40, (50, 100), 4, 0.0, seed=3)
    first = LabeledSet.concat((d.samples for d in ds.devices[:20]), 4)
    second = LabeledSet.concat((d.samples for d in ds.devices[20:]), 4)
    n_tests = 2 * 4
    for label in (-1, 1):
        a = first.X[first.y == label]
        b = second.X[second.y == label]
        p = stats.ttest_ind(a, b, equal_var=False).pvalue
        assert np.all(p > 0.01 / n_tests), p  # Bonferroni, family-wise alpha = 0.01


def _mean_spread(ds):
    dists = []
    for label in (-1, 1):
        means = [d.samples.X[d.samples.y == label].mean(axis=0) for d in ds.devices if np.sum(d.samples.y == label) > 0]
        dists += [np.linalg.norm(a - b) for a, b in itertools.combinations(means, 2)]
    return float(np.mean(dists))


def test_heterogeneity_spreads_class_means():
    spread = {h: np.mean([_mean_spread(synth_federated(20, (40, 80), 5, h, seed=s)) for s in range(5)]) for h in (0.0, 0.5, 1.0)}
    assert spread[0.0] < spread[0.5] < spread[1.0]


def test_split_sizes_rule():
    assert split_sizes(10, (0.5, 0.4, 0.1)) == (5, 4, 1)
    assert split_sizes(3, (0.5, 0.4, 0.1)) == (2, 1, 0)
    assert split_sizes(100, (0.42, 0.29, 0.29)) == (42, 29, 29)


def test_split_partitions_each_device():
    ds = synth_federated(10, (1, 40), 3, 0.5, seed=2)
    sp = split(ds, seed=9)
    assert sp.is_split and not ds.is_split
    for raw, dev in zip(ds.devices, sp.devices):
        n = len(raw.samples)
        assert (len(dev.train), len(dev.test), len(dev.validation)) == split_sizes(n)
        union = _multiset(np.vstack([dev.train.X, dev.test.X, dev.validation.X]), np.concatenate([dev.train.y, dev.test.y, dev.validation.y]))
        assert union == _multiset(raw.samples.X, raw.samples.y)


def test_split_is_seeded():
    ds = synth_federated(4, (10, 20), 2, 0.5, seed=2)
    a, b, c = split(ds, seed=1), split(ds, seed=1), split(ds, seed=2)
    assert all(np.array_equal(x.train.X, y.train.X) for x, y in zip(a.devices, b.devices))
    assert not all(np.array_equal(x.train.X, y.train.X) for x, y in zip(a.devices, c.devices))


def test_split_rejects_bad_ratios():
    ds = synth_federated(2, (10, 20), 2, 0.5, seed=2)
    with pytest.raises(ValueError):
        split(ds, (0.5, 0.5, 0.1))
    with pytest.raises(ValueError):
        split(ds, (0.6, 0.4, 0.0))


def _two_devices():
    r = np.random.default_rng(0)
    devs = []
    for dev_id, n in (("a", 10), ("b", 13)):
        devs.append(DeviceDataset(dev_id, LabeledSet(r.normal(size=(n, 2)), np.where(r.random(n) < 0.5, 1, -1))))
    return split(FederatedDataset(tuple(devs), 2), seed=0)


def test_pool_train():
    ds = _two_devices()
    assert [len(d.train) for d in ds.devices] == [5, 7]
    pooled = pool_train(ds)
    assert len(pooled) == 12
    assert sorted(pooled.y.tolist()) == sorted(ds.devices[0].train.y.tolist() + ds.devices[1].train.y.tolist())
    capped = pool_train(ds, cap=10, seed=4)
    assert len(capped) == 10
    assert np.array_equal(capped.X, pool_train(ds, cap=10, seed=4).X)
    assert set(map(tuple, capped.X)) <= set(map(tuple, pooled.X))


def test_pool_requires_split():
    with pytest.raises(ValueError):
        pool_train(synth_federated(2, (4, 5), 2, 0.1, seed=0))
    assert len(pool_validation(_two_devices())) == 1 + 1


def test_dataset_invariants():
    X = LabeledSet(np.zeros((2, 2)), np.array([1, -1]))
    with pytest.raises(ValueError):
        FederatedDataset((), 2)
    with pytest.raises(ValueError):
        FederatedDataset((DeviceDataset("a", X), DeviceDataset("a", X)), 2)
    with pytest.raises(ValueError):
        FederatedDataset((DeviceDataset("a", X),), 3)
    with pytest.raises(ValueError):
        LabeledSet(np.zeros((2, 2)), np.array([1, 0]))
