"""Regenerate the graph fixtures under src/symsyncmap/data.

Karate comes from networkx (unweighted); the rest are seeded synthetic
graphs.  Run from the repository root: ``python3 scripts/make_fixtures.py``.
Needs networkx, which is not a runtime dependency.
"""

from itertools import combinations
from pathlib import Path

import networkx as nx
import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "symsyncmap" / "data"

# modularity-optimal 4-way split of the karate club (Q = 0.4198), 1-indexed
KARATE_FOUR = [
    {1, 2, 3, 4, 8, 12, 13, 14, 18, 20, 22},
    {5, 6, 7, 11, 17},
    {9, 10, 15, 16, 19, 21, 23, 27, 30, 31, 33, 34},
    {24, 25, 26, 28, 29, 32},
]


def write_edges(name, edges, header):
    lines = [f"# {h}\n" for h in header] + [f"{u} {v}\n" for u, v in sorted(edges)]
    (OUT / name).write_text("".join(lines))


def write_labels(name, labels, header):
    lines = [f"# {h}\n" for h in header] + [f"{int(x)}\n" for x in labels]
    (OUT / name).write_text("".join(lines))


def exact_sbm(sizes, within, between, seed):
    """Block graph with an exact edge count per block pair.

    ``within[i]`` edges inside block i, ``between[(i, j)]`` across i and j,
    drawn uniformly without replacement.  Redraws until no node is isolated
    and the graph is connected.
    """
    rng = np.random.default_rng(seed)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    blocks = [list(range(offsets[i], offsets[i + 1])) for i in range(len(sizes))]
    while True:
        edges = []
        for i, count in enumerate(within):
            pairs = list(combinations(blocks[i], 2))
            pick = rng.choice(len(pairs), count, replace=False)
            edges += [pairs[p] for p in pick]
        for (i, j), count in between.items():
            pairs = [(u, v) for u in blocks[i] for v in blocks[j]]
            pick = rng.choice(len(pairs), count, replace=False)
            edges += [pairs[p] for p in pick]
        g = nx.Graph(edges)
        if g.number_of_nodes() == offsets[-1] and nx.is_connected(g):
            labels = np.repeat(np.arange(len(sizes)), sizes)
            return sorted(tuple(sorted(e)) for e in edges), labels


def karate():
    g = nx.karate_club_graph()
    edges = sorted(tuple(sorted(e)) for e in g.edges())
    club = [0 if g.nodes[i]["club"] == "Mr. Hi" else 1 for i in range(34)]
    four = [next(c for c, s in enumerate(KARATE_FOUR) if i + 1 in s) for i in range(34)]
    write_edges("karate.edges", edges, ["Zachary karate club, 34 nodes, 78 undirected edges",
                                       "source: networkx.karate_club_graph(), weights dropped"])
    write_labels("karate_club2.labels", club, ["two factions after the split (networkx 'club')"])
    write_labels("karate_club4.labels", four,
                 ["modularity-optimal four-community split, Q = 0.4198"])


def sbm():
    # 1330 within-block pairs, 2675 across; 1064 + 128 = 1192 edges
    edges, labels = exact_sbm((25, 30, 35), (240, 348, 476),
                              {(0, 1): 36, (0, 2): 42, (1, 2): 50}, seed=90)
    write_edges("sbm90.edges", edges, ["seeded block graph, 90 nodes, 1192 edges",
                                       "groups of 25, 30 and 35 nodes"])
    write_labels("sbm90.labels", labels, ["block index"])


def dolphins():
    # 159 edges like the Lusseau network; 6 cross-community ties
    edges, labels = exact_sbm((20, 42), (28, 125), {(0, 1): 6}, seed=62)
    header = ["SYNTHETIC STAND-IN for the Lusseau dolphin network (real edge list not bundled)",
              "62 nodes, 159 edges, communities of 20 and 42"]
    write_edges("dolphins.edges", edges, header)
    write_labels("dolphins.labels", labels, header[:1])


def whales():
    # 22 song themes in groups of 8, 8 and 6 with a few shared transitions
    edges, labels = exact_sbm((8, 8, 6), (12, 12, 9), {(0, 1): 3, (1, 2): 3, (0, 2): 2}, seed=22)
    header = ["SYNTHETIC STAND-IN for the humpback song theme graph (not transcribed)",
              "22 themes, ground truth 8-8-6"]
    write_edges("whales.edges", edges, header)
    write_labels("whales.labels", labels, header[:1])


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    karate()
    sbm()
    dolphins()
    whales()
