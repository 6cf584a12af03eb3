import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oneshotfl.feddata import pool_test, pool_train, split, synth_federated
from oneshotfl.kernel import median_heuristic
from oneshotfl.localmodel import ConstantModel, train_svm
from oneshotfl.metrics import (
    DeviceScorecard,
    SummaryMetrics,
    auc,
    auc_bruteforce,
    evaluate_per_device,
    fraction_of_ideal,
    mean_device_relative_gain,
    relative_gain,
    summarize,
)
from oracles import auc_by_pairs


def test_auc_example():
    scores, labels = [0.1, 0.4, 0.35, 0.8], [-1, -1, 1, 1]
    assert auc_by_pairs(scores, labels) == 0.75
    assert auc(scores, labels) == 0.75
    assert auc_bruteforce(scores, labels) == 0.75


def test_auc_degenerate_cases():
    assert auc([0.3] * 6, [1, -1, 1, -1, 1, 1]) == 0.5
    assert auc([0.1, 0.2], [1, 1]) is None
    assert auc_bruteforce([0.1, 0.2], [-1, -1]) is None
    assert auc([], []) is None
    assert auc_bruteforce([1, 2, 3], [-1, 1, 1]) == 1.0
    assert auc_bruteforce([3, 2, 1], [-1, 1, 1]) == 0.0


def test_auc_errors():
    with pytest.raises(ValueError):
        auc([0.1, 0.2], [1])
    with pytest.raises(ValueError):
        auc([0.1, float("nan")], [1, -1])
    with pytest.raises(ValueError):
        auc_bruteforce([0.1, 0.2], [1, 0])


scores_labels = st.integers(2, 60).flatmap(
    lambda n: st.tuples(
        st.lists(st.integers(-8, 8).map(lambda v: v / 4), min_size=n, max_size=n),
        st.lists(st.sampled_from([-1, 1]), min_size=n, max_size=n),
    )
)


@settings(max_examples=200, deadline=None)
@given(scores_labels)
def test_fast_matches_bruteforce(sl):
    s, l = sl
    a, b = auc(s, l), auc_bruteforce(s, l)
    if a is None:
        assert b is None
    else:
        assert abs(a - b) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(scores_labels)
def test_auc_invariant_to_increasing_transforms(sl):
    s, l = sl
    s = np.asarray(s)
    base = auc(s, l)
    for g in (lambda v: 3 * v - 7, lambda v: v**3, np.exp):
        assert auc(g(s), l) == base


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 60), st.integers(0, 2**32 - 1))
def test_auc_complement(n, seed):
    r = np.random.default_rng(seed)
    s = r.normal(size=n)
    l = np.where(r.random(n) < 0.5, 1, -1)
    a = auc(s, l)
    if a is not None:
        assert abs(auc(-s, l) - (1 - a)) <= 1e-12


def test_summarize_examples():
    one = summarize([DeviceScorecard("a", 0.8, 5)])
    assert one.mean_auc == 0.8 and all(v == 0.8 for v in one.percentiles.values())
    two = summarize([DeviceScorecard("a", 0.0, 5), DeviceScorecard("b", 1.0, 5), DeviceScorecard("c", None, 5)])
    assert two.mean_auc == 0.5 and two.percentiles[50] == 0.5
    assert (two.evaluated_devices, two.skipped_devices) == (2, 1)
    grid = summarize([DeviceScorecard(str(i), i / 99, 1) for i in range(100)])
    assert grid.percentiles[25] == pytest.approx(0.25, abs=1e-12)
    with pytest.raises(ValueError):
        summarize([DeviceScorecard("a", None, 3)])


def test_summarize_permutation_invariant(rng):
    cards = [DeviceScorecard(str(i), float(v), 3) for i, v in enumerate(rng.random(30))]
    a = summarize(cards)
    b = summarize([cards[i] for i in rng.permutation(30)])
    assert a.percentiles == b.percentiles
    assert a.mean_auc == pytest.approx(b.mean_auc, abs=1e-15)
    ps = [a.percentiles[p] for p in sorted(a.percentiles)]
    assert ps == sorted(ps)


def test_summary_dict_round_trip():
    s = SummaryMetrics(0.7, 3, 1, {5: 0.1, 25: 0.2, 50: 0.3, 75: 0.4, 95: 0.5})
    assert SummaryMetrics.from_dict(s.to_dict()) == s


def test_gain_and_fraction():
    local = SummaryMetrics(0.6, 1, 0, {})
    method = SummaryMetrics(0.75, 1, 0, {})
    ideal = SummaryMetrics(0.8, 1, 0, {})
    assert relative_gain(local, local) == 0.0
    assert fraction_of_ideal(ideal, ideal) == 1.0
    assert relative_gain(method, local) == pytest.approx(0.25, abs=1e-15)
    assert fraction_of_ideal(method, ideal) == pytest.approx(0.9375, abs=1e-15)
    with pytest.raises(ValueError):
        relative_gain(method, SummaryMetrics(0.0, 1, 0, {}))
    with pytest.raises(ValueError):
        fraction_of_ideal(method, SummaryMetrics(0.0, 1, 0, {}))


def test_mean_device_relative_gain():
    local = [DeviceScorecard("a", 0.5, 4), DeviceScorecard("b", 0.8, 4), DeviceScorecard("c", None, 4)]
    method = [DeviceScorecard("a", 0.75, 4), DeviceScorecard("b", 0.8, 4), DeviceScorecard("c", 0.9, 4)]
    assert mean_device_relative_gain(method, local) == pytest.approx(0.25)


def test_evaluate_constant_predictor():
    ds = split(synth_federated(12, (10, 40), 3, 0.5, seed=0), seed=0)
    cards = evaluate_per_device(ConstantModel(0.0), ds)
    assert len(cards) == 12
    assert all(c.auc == 0.5 for c in cards if c.auc is not None)
    for c, dev in zip(cards, ds.devices):
        assert (c.auc is None) == (len(set(dev.test.y.tolist())) < 2)


def test_single_class_test_split_is_skipped():
    ds = split(synth_federated(30, (4, 8), 3, 0.5, seed=0), seed=0)
    cards = evaluate_per_device(ConstantModel(0.0), ds)
    undefined = sum(c.auc is None for c in cards)
    assert 0 < undefined < len(cards)
    assert summarize(cards).skipped_devices == undefined


def test_per_device_matches_pooled_in_iid_case():
    ds = split(synth_federated(40, (60, 120), 4, 0.0, seed=1), seed=1)
    pooled = pool_train(ds)
    model = train_svm(pooled.X, pooled.y, kernel=median_heuristic(pooled.X))
    per_device = summarize(evaluate_per_device(model, ds)).mean_auc
    test = pool_test(ds)
    assert abs(per_device - auc(model.decision_function(test.X), test.y)) <= 0.02


def test_evaluate_requires_split():
    with pytest.raises(ValueError):
        evaluate_per_device(ConstantModel(0.0), synth_federated(2, (4, 6), 2, 0.0, seed=0))
