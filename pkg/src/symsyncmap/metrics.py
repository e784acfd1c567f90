"""Normalized mutual information between two labelings."""

from __future__ import annotations

import numpy as np


def _entropy(counts: np.ndarray, total: int) -> float:
    p = counts[counts > 0] / total
    return float(-(p * np.log(p)).sum())


def contingency(predicted, truth) -> np.ndarray:
    _, pi = np.unique(np.asarray(predicted), return_inverse=True)
    _, ti = np.unique(np.asarray(truth), return_inverse=True)
    table = np.zeros((pi.max() + 1, ti.max() + 1), dtype=np.int64)
    np.add.at(table, (pi, ti), 1)
    return table


def nmi(predicted, truth) -> float:
    """Mutual information over the arithmetic mean of the two entropies (nats).

    Two single-cluster labelings score 1; a single-cluster labeling against
    a non-trivial one scores 0.
    """
    predicted = np.asarray(predicted).ravel()
    truth = np.asarray(truth).ravel()
    if len(predicted) != len(truth):
        raise ValueError(f"length mismatch: {len(predicted)} vs {len(truth)}")
    if len(predicted) == 0:
        raise ValueError("empty labelings")
    table = contingency(predicted, truth)
    total = len(predicted)
    h_pred = _entropy(table.sum(axis=1), total)
    h_true = _entropy(table.sum(axis=0), total)
    if table.shape[0] == 1 and table.shape[1] == 1:
        return 1.0
    if table.shape[0] == 1 or table.shape[1] == 1:
        return 0.0
    nz = table > 0
    if (nz.sum(axis=0) == 1).all() and (nz.sum(axis=1) == 1).all():
        return 1.0  # same partition under different names
    joint = table[nz] / total
    outer = np.outer(table.sum(axis=1), table.sum(axis=0))[nz] / total**2
    # sorted summation makes the result exactly symmetric in its arguments
    mi = float(np.sort(joint * np.log(joint / outer)).sum())
    score = mi / (0.5 * (h_pred + h_true))
    return min(1.0, max(0.0, score))


def nmi_over_time(snapshots, cluster, truth):
    """Score each ``(step, positions)`` pair: returns ``[(step, nmi), ...]``.

    ``cluster`` maps a position array to integer labels.
    """
    out = []
    for step, positions in snapshots:
        out.append((int(step), nmi(cluster(positions), truth)))
    return out
