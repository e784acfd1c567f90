import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from symsyncmap.metrics import contingency, nmi, nmi_over_time

labelings = st.integers(1, 40).flatmap(
    lambda n: st.tuples(st.lists(st.integers(0, 5), min_size=n, max_size=n),
                        st.lists(st.integers(0, 5), min_size=n, max_size=n)))


def nmi_by_hand(pred, truth, log=math.log):
    """Straight from the definitions, summing over label pairs."""
    n = len(pred)
    pa = {a: pred.count(a) / n for a in set(pred)}
    pb = {b: truth.count(b) / n for b in set(truth)}
    mi = 0.0
    for a in pa:
        for b in pb:
            joint = sum(1 for x, y in zip(pred, truth) if x == a and y == b) / n
            if joint:
                mi += joint * log(joint / (pa[a] * pb[b]))
    ha = -sum(p * log(p) for p in pa.values())
    hb = -sum(p * log(p) for p in pb.values())
    if ha == 0 and hb == 0:
        return 1.0
    if ha == 0 or hb == 0:
        return 0.0
    return mi / (0.5 * (ha + hb))


def test_examples():
    assert nmi([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0
    assert nmi([0, 0, 0, 0], [0, 0, 1, 1]) == 0.0
    assert nmi([0, 0, 1, 1], [0, 1, 0, 1]) == 0.0
    # hand-built contingency table [[2, 0, 0], [0, 1, 1]]
    mi = 0.5 * math.log(2) + 2 * 0.25 * math.log(2)
    h_pred = math.log(2)
    h_true = -(0.5 * math.log(0.5) + 2 * 0.25 * math.log(0.25))
    assert nmi([0, 0, 1, 1], [0, 0, 1, 2]) == pytest.approx(mi / (0.5 * (h_pred + h_true)),
                                                            abs=1e-12)
    assert nmi([3, 3, 3], [7, 7, 7]) == 1.0


def test_errors():
    with pytest.raises(ValueError):
        nmi([0, 1], [0])
    with pytest.raises(ValueError):
        nmi([], [])


@settings(max_examples=200, deadline=None)
@given(labelings)
def test_properties(pair):
    a, b = pair
    s = nmi(a, b)
    assert 0.0 <= s <= 1.0
    assert s == nmi(b, a)
    assert s == pytest.approx(nmi_by_hand(a, b), abs=1e-12)
    assert s == pytest.approx(nmi_by_hand(a, b, log=math.log2), abs=1e-12)
    assert nmi(a, a) == 1.0


@settings(max_examples=100, deadline=None)
@given(labelings, st.permutations(range(6)))
def test_relabeling_invariance(pair, perm):
    a, b = pair
    renamed = [perm[x] * 10 + 3 for x in a]
    assert nmi(renamed, b) == pytest.approx(nmi(a, b), abs=1e-12)
    assert nmi(a, [perm[x] for x in b]) == pytest.approx(nmi(a, b), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(labelings)
def test_contingency_and_sklearn(pair):
    a, b = pair
    table = contingency(a, b)
    ua, ub = sorted(set(a)), sorted(set(b))
    for i, x in enumerate(ua):
        for j, y in enumerate(ub):
            assert table[i, j] == sum(1 for p, q in zip(a, b) if p == x and q == y)
    metrics = pytest.importorskip("sklearn.metrics")
    if len(set(a)) > 1 and len(set(b)) > 1:
        ref = metrics.normalized_mutual_info_score(b, a, average_method="arithmetic")
        assert nmi(a, b) == pytest.approx(ref, abs=1e-10)


def test_over_time():
    truth = np.array([0, 0, 1, 1])
    pos = np.array([[0.0], [0.1], [5], [5.1]])
    cluster = lambda p: (p[:, 0] > 1).astype(int)  # noqa: E731
    trace = nmi_over_time([(10, pos), (20, pos), (30, pos)], cluster, truth)
    assert trace == [(10, 1.0), (20, 1.0), (30, 1.0)]
    single = nmi_over_time([(5, pos)], lambda p: np.zeros(4, int), np.zeros(4, int))
    assert single == [(5, 1.0)]
