"""Chunk readout from a learned map: DBSCAN and Ward agglomerative clustering."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NOISE = -1


@dataclass
class ClusterAssignment:
    labels: np.ndarray
    num_clusters: int
    # DBSCAN only: True where the point was noise before singleton promotion
    noise: np.ndarray | None = None


@dataclass
class Dendrogram:
    n: int
    merges: list  # (cluster_a, cluster_b, distance, merged_size)

    def linkage_matrix(self) -> np.ndarray:
        """Merges in the ``(n-1, 4)`` float layout used by scipy's plotting helpers."""
        return np.array([[a, b, d, s] for a, b, d, s in self.merges], dtype=float)


def relabel(labels) -> np.ndarray:
    """Contiguous labels ``0..c-1`` numbered by first appearance."""
    labels = np.asarray(labels)
    mapping: dict = {}
    out = np.empty(len(labels), dtype=np.int64)
    for i, lab in enumerate(labels.tolist()):
        out[i] = mapping.setdefault(lab, len(mapping))
    return out


def pairwise_distances(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    diff = x[:, None, :] - x[None, :, :]
    return np.sqrt((diff * diff).sum(axis=-1))


def dbscan(positions, eps: float, mc: int, promote_noise: bool = True) -> ClusterAssignment:
    """Density-based clustering with deterministic border assignment.

    A point is core when at least ``mc`` points (itself included) lie within
    ``eps``.  Core points within ``eps`` of each other share a cluster; a
    border point joins the cluster of the lowest-indexed core point in its
    neighborhood.  Remaining noise points become singleton clusters unless
    ``promote_noise`` is False, in which case they keep the label -1.
    """
    x = np.asarray(positions, dtype=float)
    if x.ndim != 2 or len(x) == 0:
        raise ValueError("positions must be a non-empty (n, k) array")
    if eps <= 0 or mc < 1:
        raise ValueError("eps must be > 0 and mc >= 1")
    n = len(x)
    near = pairwise_distances(x) <= eps
    core = near.sum(axis=1) >= mc
    raw = np.full(n, NOISE, dtype=np.int64)
    cluster = 0
    for seed in range(n):
        if not core[seed] or raw[seed] != NOISE:
            continue
        raw[seed] = cluster
        stack = [seed]
        while stack:
            p = stack.pop()
            for q in np.flatnonzero(near[p] & core & (raw == NOISE)):
                raw[q] = cluster
                stack.append(q)
        cluster += 1
    noise = np.zeros(n, dtype=bool)
    for p in range(n):
        if core[p]:
            continue
        claim = np.flatnonzero(near[p] & core)
        if len(claim):
            raw[p] = raw[claim[0]]
        else:
            noise[p] = True
    if promote_noise:
        for p in np.flatnonzero(noise):
            raw[p] = cluster
            cluster += 1
        labels = relabel(raw)
        return ClusterAssignment(labels, int(labels.max()) + 1, noise)
    return ClusterAssignment(raw, cluster, noise)


def ward_linkage(positions) -> Dendrogram:
    """Ward agglomeration through the Lance-Williams recurrence on squared distances.

    Merge heights use the same scale as ``scipy.cluster.hierarchy.ward``.
    Ties go to the lexicographically smallest slot pair.
    """
    x = np.asarray(positions, dtype=float)
    n = len(x)
    d2 = pairwise_distances(x) ** 2
    size = np.ones(n)
    ids = list(range(n))
    active = np.ones(n, dtype=bool)
    merges = []
    big = np.inf
    for step in range(n - 1):
        masked = np.where(np.triu(np.outer(active, active), 1), d2, big)
        flat = int(np.argmin(masked))
        i, j = divmod(flat, n)
        dij = d2[i, j]
        ni, nj = size[i], size[j]
        nk = size
        upd = ((nk + ni) * d2[i] + (nk + nj) * d2[j] - nk * dij) / (nk + ni + nj)
        d2[i, :] = upd
        d2[:, i] = upd
        d2[i, i] = 0.0
        active[j] = False
        d2[j, :] = big
        d2[:, j] = big
        merges.append((min(ids[i], ids[j]), max(ids[i], ids[j]), float(np.sqrt(max(dij, 0.0))),
                       int(ni + nj)))
        size[i] = ni + nj
        ids[i] = n + step
    return Dendrogram(n, merges)


def cut(d: Dendrogram, num_clusters: int) -> np.ndarray:
    n = d.n
    if not 1 <= num_clusters <= n:
        raise ValueError(f"num_clusters must lie in 1..{n}")
    parent = list(range(2 * n - 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for step, (a, b, _, _) in enumerate(d.merges[: n - num_clusters]):
        parent[find(a)] = n + step
        parent[find(b)] = n + step
    return relabel([find(i) for i in range(n)])


def ward_cluster(positions, num_clusters: int):
    """Ward clustering cut at ``num_clusters``; returns ``(assignment, dendrogram)``."""
    d = ward_linkage(positions)
    labels = cut(d, num_clusters)
    return ClusterAssignment(labels, num_clusters), d


def export_dendrogram(d: Dendrogram) -> str:
    """One merge per line: ``a b dist size``; new clusters are numbered n..2n-2."""
    return "".join(f"{a} {b} {float(dist)!r} {s}\n" for a, b, dist, s in d.merges)


def parse_dendrogram(text: str) -> Dendrogram:
    merges = []
    for line in text.splitlines():
        if line.strip() and not line.startswith("#"):
            a, b, dist, s = line.split()
            merges.append((int(a), int(b), float(dist), int(s)))
    return Dendrogram(len(merges) + 1, merges)
