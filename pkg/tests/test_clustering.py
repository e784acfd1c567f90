import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from symsyncmap.clustering import (cut, dbscan, export_dendrogram, parse_dendrogram, relabel,
                                   ward_cluster, ward_linkage)


def canon(labels):
    return tuple(relabel(labels).tolist())


def brute_dbscan(x, eps, mc):
    """Exhaustive neighbour lists, BFS over core points, lowest-index border claim."""
    n = len(x)
    nb = [[j for j in range(n) if np.sqrt(((x[i] - x[j]) ** 2).sum()) <= eps] for i in range(n)]
    core = [len(nb[i]) >= mc for i in range(n)]
    lab = [None] * n
    c = 0
    for i in range(n):
        if core[i] and lab[i] is None:
            queue = [i]
            lab[i] = c
            while queue:
                p = queue.pop(0)
                for q in nb[p]:
                    if core[q] and lab[q] is None:
                        lab[q] = c
                        queue.append(q)
            c += 1
    for i in range(n):
        if not core[i]:
            owners = [j for j in nb[i] if core[j]]
            if owners:
                lab[i] = lab[min(owners)]
    for i in range(n):
        if lab[i] is None:
            lab[i] = c
            c += 1
    return lab


def naive_ward(x):
    """O(n^3) Ward: recompute every pairwise merge cost from raw cluster members."""
    clusters = {i: [i] for i in range(len(x))}
    merges = []
    nxt = len(x)
    while len(clusters) > 1:
        best = None
        keys = sorted(clusters)
        for ai, a in enumerate(keys):
            for b in keys[ai + 1:]:
                pa, pb = x[clusters[a]], x[clusters[b]]
                na, nb = len(pa), len(pb)
                d = np.sqrt(2 * na * nb / (na + nb)) * np.linalg.norm(pa.mean(0) - pb.mean(0))
                if best is None or d < best[0] - 1e-12:
                    best = (d, a, b)
        d, a, b = best
        clusters[nxt] = clusters.pop(a) + clusters.pop(b)
        merges.append((a, b, d, len(clusters[nxt])))
        nxt += 1
    return merges


points = st.integers(2, 25).flatmap(
    lambda n: st.lists(st.tuples(*[st.floats(-10, 10, allow_nan=False)] * 3), min_size=n,
                       max_size=n))


@settings(max_examples=150, deadline=None)
@given(points, st.floats(0.5, 8.0), st.integers(1, 4))
def test_dbscan_matches_bruteforce(pts, eps, mc):
    x = np.array(pts)
    got = dbscan(x, eps, mc)
    assert canon(got.labels) == canon(brute_dbscan(x, eps, mc))
    assert got.labels.min() >= 0
    assert sorted(set(got.labels.tolist())) == list(range(got.num_clusters))


def test_dbscan_examples():
    rng = np.random.default_rng(0)
    a = rng.normal(0, 0.2, (6, 3))
    b = rng.normal(0, 0.2, (6, 3)) + [15, 0, 0]
    res = dbscan(np.vstack([a, b]), 4.5, 2)
    assert res.num_clusters == 2
    assert dbscan(np.ones((5, 2)), 1.0, 2).num_clusters == 1
    # a lone point is noise, then its own cluster
    res = dbscan(np.array([[0.0, 0], [0.1, 0], [50, 50]]), 1.0, 2)
    assert res.labels.tolist() == [0, 0, 1] and res.noise.tolist() == [False, False, True]
    raw = dbscan(np.array([[0.0, 0], [0.1, 0], [50, 50]]), 1.0, 2, promote_noise=False)
    assert raw.labels.tolist() == [0, 0, -1]
    with pytest.raises(ValueError):
        dbscan(np.zeros((3, 2)), 0.0, 2)


def test_dbscan_border_tie_goes_to_lowest_core():
    # point 4 is a border point of both groups; their cores are 1.8 apart
    a = [[0, 0], [0, 0.1], [0.1, 0], [0.9, 0]]
    b = [[2.7, 0], [3.6, 0], [3.6, 0.1], [3.5, 0]]
    x = np.array(a + [[1.8, 0]] + b)
    res = dbscan(x, 1.0, 4)
    assert not res.noise.any()
    assert res.num_clusters == 2
    assert res.labels[4] == res.labels[3] != res.labels[5]
    # listed the other way round, the tie goes to the other group
    res = dbscan(np.array(b + [[1.8, 0]] + a), 1.0, 4)
    assert res.labels[4] == res.labels[3] != res.labels[5]


@settings(max_examples=60, deadline=None)
@given(points, st.floats(0.5, 6.0), st.integers(1, 4), st.randoms(use_true_random=False))
def test_dbscan_permutation_stable(pts, eps, mc, rnd):
    x = np.array(pts)
    n = len(x)
    d = np.sqrt(((x[:, None] - x[None]) ** 2).sum(-1)) <= eps
    core = d.sum(1) >= mc
    base = dbscan(x, eps, mc).labels
    # only meaningful when no border point is claimed by two clusters
    for i in np.flatnonzero(~core):
        if len(set(base[np.flatnonzero(d[i] & core)].tolist())) > 1:
            return
    perm = list(range(n))
    rnd.shuffle(perm)
    again = dbscan(x[perm], eps, mc).labels
    back = np.empty(n, dtype=int)
    back[perm] = again
    assert canon(back) == canon(base)


@settings(max_examples=80, deadline=None)
@given(points)
def test_ward_matches_naive(pts):
    # random jitter so that no two candidate merges tie exactly
    x = np.array(pts) + np.random.default_rng(len(pts)).uniform(-1e-3, 1e-3, (len(pts), 3))
    d = ward_linkage(x)
    ref = naive_ward(x)
    assert len(d.merges) == len(x) - 1
    for (a, b, dist, s), (ra, rb, rdist, rs) in zip(d.merges, ref):
        assert (a, b, s) == (ra, rb, rs)
        assert dist == pytest.approx(rdist, rel=1e-9, abs=1e-9)
    heights = [m[2] for m in d.merges]
    assert all(h2 >= h1 - 1e-9 for h1, h2 in zip(heights, heights[1:]))


def test_ward_matches_scipy():
    hierarchy = pytest.importorskip("scipy.cluster.hierarchy")
    x = np.random.default_rng(3).normal(size=(30, 3))
    ours = ward_linkage(x).linkage_matrix()
    ref = hierarchy.linkage(x, method="ward")
    assert np.allclose(ours[:, 2], ref[:, 2])
    assert np.array_equal(ours[:, 3], ref[:, 3])
    for k in (2, 3, 5):
        theirs = hierarchy.fcluster(ref, k, criterion="maxclust")
        assert canon(cut(ward_linkage(x), k)) == canon(theirs)


def test_ward_triads_and_cut_extremes():
    x = np.array([[0, 0], [0.1, 0], [0, 0.1], [5, 5], [5.1, 5], [5, 5.1]])
    a, d = ward_cluster(x, 2)
    assert canon(a.labels) == (0, 0, 0, 1, 1, 1)
    assert canon(cut(d, 6)) == tuple(range(6))
    assert canon(cut(d, 1)) == (0,) * 6
    with pytest.raises(ValueError):
        cut(d, 0)


@settings(max_examples=40, deadline=None)
@given(points)
def test_ward_cuts_coarsen(pts):
    x = np.array(pts)
    d = ward_linkage(x)
    for k in range(len(x), 1, -1):
        fine, coarse = cut(d, k), cut(d, k - 1)
        assert len(set(fine.tolist())) == k and len(set(coarse.tolist())) == k - 1
        # every fine cluster sits inside one coarse cluster
        for c in set(fine.tolist()):
            assert len(set(coarse[fine == c].tolist())) == 1


def test_dendrogram_round_trip():
    x = np.random.default_rng(1).normal(size=(34, 2))
    d = ward_linkage(x)
    text = export_dendrogram(d)
    assert len(text.splitlines()) == 33
    back = parse_dendrogram(text)
    assert back.n == 34 and back.merges == d.merges
    assert export_dendrogram(ward_linkage(x[:2])).count("\n") == 1
