"""Chunking problem structures, Markov random walks and benchmark graphs.

A problem is a set of chunks over the states ``0..n-1``.  Fixed chunks are
deterministic chains, probabilistic chunks are dense undirected communities.
Chunks are linked by directed wiring edges (exit state -> entry state); the
resulting adjacency matrix is turned into a uniform-choice transition matrix
and sampled by a first-order random walk.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from itertools import combinations
from pathlib import Path

import numpy as np


class ProblemError(ValueError):
    """Raised for malformed or illegal problem structures."""


class ChunkKind(str, Enum):
    FIXED = "fixed"
    PROBABILISTIC = "probabilistic"


@dataclass(frozen=True)
class ChunkSpec:
    kind: ChunkKind
    states: tuple[int, ...]
    # undirected pairs; only meaningful for probabilistic chunks
    internal_edges: tuple[tuple[int, int], ...] = ()

    @property
    def entry(self) -> int:
        return self.states[0]

    @property
    def exit(self) -> int:
        return self.states[-1]


@dataclass(frozen=True)
class ProblemStructure:
    chunks: tuple[ChunkSpec, ...]
    n_states: int
    wiring: tuple[tuple[int, int], ...]
    name: str = ""

    def labels(self) -> np.ndarray:
        """Ground-truth chunk index of every state."""
        truth = np.full(self.n_states, -1, dtype=np.int64)
        for c, chunk in enumerate(self.chunks):
            truth[list(chunk.states)] = c
        return truth

    def validate(self) -> None:
        seen: list[int] = []
        for chunk in self.chunks:
            if not chunk.states:
                raise ProblemError("empty chunk")
            seen.extend(chunk.states)
        if sorted(seen) != list(range(self.n_states)):
            raise ProblemError("chunk state sets must partition 0..n_states-1")
        owner = self.labels()
        for u, v in self.wiring:
            if not (0 <= u < self.n_states and 0 <= v < self.n_states):
                raise ProblemError(f"wiring link {u}->{v} out of range")
            if owner[u] == owner[v] and self.chunks[owner[u]].kind is ChunkKind.PROBABILISTIC:
                raise ProblemError(f"wiring link {u}->{v} stays inside one chunk")
        for chunk in self.chunks:
            if chunk.kind is ChunkKind.PROBABILISTIC:
                members = set(chunk.states)
                for u, v in chunk.internal_edges:
                    if u == v or u not in members or v not in members:
                        raise ProblemError(f"bad internal edge ({u}, {v})")
        # chunk-level strong connectivity
        c = len(self.chunks)
        reach = np.eye(c, dtype=bool)
        for u, v in self.wiring:
            reach[owner[u], owner[v]] = True
        for k in range(c):
            reach |= reach[:, [k]] & reach[[k], :]
        if not reach.all():
            raise ProblemError("chunks are not strongly connected through the wiring")


@dataclass(frozen=True)
class StateSequence:
    states: np.ndarray
    tau: int
    seed: int | None = None


@dataclass(frozen=True)
class ContinualProblem:
    phase_a: ProblemStructure
    phase_b: ProblemStructure
    switch_step: int

    def __post_init__(self):
        if self.phase_a.n_states != self.phase_b.n_states:
            raise ProblemError(
                f"phases have different alphabets: {self.phase_a.n_states} vs "
                f"{self.phase_b.n_states}"
            )
        if self.switch_step < 0:
            raise ProblemError("switch_step must be non-negative")


@dataclass(frozen=True)
class LabeledGraph:
    adjacency: np.ndarray
    truth: np.ndarray
    name: str
    alt_truth: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def n_edges(self) -> int:
        return int(np.triu(self.adjacency).sum())


# ---------------------------------------------------------------------------
# matrices


def chunk_degrees(a: np.ndarray, states) -> tuple[float, int]:
    """Internal and external degree of a chunk by exhaustive edge counting.

    ``d_in`` counts every internal undirected edge once (half the sum of the
    sub-matrix); ``d_ex`` counts outgoing edges that leave the chunk.
    """
    members = np.zeros(a.shape[0], dtype=bool)
    members[list(states)] = True
    d_in = 0.5 * a[np.ix_(members, members)].sum()
    d_ex = int(a[np.ix_(members, ~members)].sum())
    return float(d_in), d_ex


def build_adjacency(structure: ProblemStructure) -> np.ndarray:
    structure.validate()
    n = structure.n_states
    a = np.zeros((n, n), dtype=np.int8)
    for chunk in structure.chunks:
        if chunk.kind is ChunkKind.FIXED:
            for u, v in zip(chunk.states, chunk.states[1:]):
                a[u, v] = 1
        else:
            for u, v in chunk.internal_edges:
                a[u, v] = a[v, u] = 1
    for u, v in structure.wiring:
        a[u, v] = 1
    for chunk in structure.chunks:
        if chunk.kind is ChunkKind.PROBABILISTIC:
            d_in, d_ex = chunk_degrees(a, chunk.states)
            if not d_in > d_ex:
                raise ProblemError(
                    f"probabilistic chunk {chunk.states[:3]}... has d_in={d_in} "
                    f"<= d_ex={d_ex}"
                )
    if (a.sum(axis=1) == 0).any():
        dead = np.flatnonzero(a.sum(axis=1) == 0).tolist()
        raise ProblemError(f"absorbing states without out-edges: {dead}")
    return a


def adjacency_to_transition(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    d = a.sum(axis=1)
    if (d == 0).any():
        raise ProblemError(f"zero-degree rows: {np.flatnonzero(d == 0).tolist()}")
    return a / d[:, None]


def stationary_distribution(p: np.ndarray, tol: float = 1e-13, max_iter: int = 1_000_000):
    """Power iteration on a lazy copy of ``p`` (the lazy chain is aperiodic)."""
    n = p.shape[0]
    lazy = 0.5 * (np.eye(n) + p)
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = pi @ lazy
        if np.abs(nxt - pi).sum() < tol:
            return nxt
        pi = nxt
    return pi


# ---------------------------------------------------------------------------
# random walks


class _RowSampler:
    """Inverse-CDF lookup per row, kept in plain lists for a fast scalar loop."""

    def __init__(self, p: np.ndarray):
        p = np.asarray(p, dtype=float)
        self.targets = []
        self.cdf = []
        for row in p:
            idx = np.flatnonzero(row > 0)
            c = np.cumsum(row[idx])
            c[-1] = 1.0
            self.targets.append(idx.tolist())
            self.cdf.append(c.tolist())

    def step(self, state: int, u: float) -> int:
        row = self.cdf[state]
        return self.targets[state][bisect.bisect_right(row, u)]


def _check_walk_args(n: int, tau: int, start):
    if tau < 1:
        raise ValueError("tau must be >= 1")
    if start is not None and not 0 <= start < n:
        raise ValueError(f"start state {start} out of range")


def random_walk(p: np.ndarray, tau: int, seed: int | None = None, start: int | None = None,
                rng: np.random.Generator | None = None) -> StateSequence:
    """Sample ``tau`` states from the Markov chain ``p``.

    The start state is uniform over all states unless given.  Pass either an
    integer ``seed`` or an existing generator ``rng``.
    """
    n = p.shape[0]
    _check_walk_args(n, tau, start)
    rng = rng if rng is not None else np.random.default_rng(seed)
    sampler = _RowSampler(p)
    if start is None:
        start = int(rng.integers(n))
    u = rng.random(tau - 1).tolist()
    out = [start]
    cur = start
    for x in u:
        cur = sampler.step(cur, x)
        out.append(cur)
    return StateSequence(np.asarray(out, dtype=np.int64), tau, seed)


def continual_walk(problem: ContinualProblem, tau: int, seed: int | None = None,
                   start: int | None = None, rng: np.random.Generator | None = None
                   ) -> StateSequence:
    """Walk that uses phase A's matrix before ``switch_step`` and phase B's after.

    The state at index ``t`` is drawn from the row of the previous state using
    phase A when ``t < switch_step`` and phase B otherwise; the walker is never
    reset at the boundary.
    """
    pa = adjacency_to_transition(build_adjacency(problem.phase_a))
    pb = adjacency_to_transition(build_adjacency(problem.phase_b))
    n = pa.shape[0]
    _check_walk_args(n, tau, start)
    rng = rng if rng is not None else np.random.default_rng(seed)
    sa, sb = _RowSampler(pa), _RowSampler(pb)
    if start is None:
        start = int(rng.integers(n))
    u = rng.random(tau - 1).tolist()
    out = [start]
    cur = start
    switch = problem.switch_step
    for t, x in enumerate(u, start=1):
        cur = (sa if t < switch else sb).step(cur, x)
        out.append(cur)
    return StateSequence(np.asarray(out, dtype=np.int64), tau, seed)


# ---------------------------------------------------------------------------
# presets

KIND_ALIASES = {"fixed": ChunkKind.FIXED, "probabilistic": ChunkKind.PROBABILISTIC,
                "prob": ChunkKind.PROBABILISTIC}
SIZE_SETS = {"20-20-5": (20, 20, 5), "20-10-5": (20, 10, 5), "20-5-5": (20, 5, 5),
             "15-15-5": (15, 15, 5)}


def _chunk(kind: ChunkKind, states) -> ChunkSpec:
    states = tuple(int(s) for s in states)
    if kind is ChunkKind.FIXED:
        return ChunkSpec(kind, states)
    return ChunkSpec(kind, states, tuple(combinations(states, 2)))


def _split(sizes, order=None):
    order = np.arange(sum(sizes)) if order is None else np.asarray(order)
    out, start = [], 0
    for s in sizes:
        out.append(order[start:start + s])
        start += s
    return out


def fixed_problem(sizes, order=None, name="", restart=True) -> ProblemStructure:
    """Fixed chains whose tails jump uniformly to a chain head.

    With ``restart`` (the default) the own head is one of the targets, so a
    chain can repeat; without it only the other chains' heads are reachable.
    """
    chunks = tuple(_chunk(ChunkKind.FIXED, s) for s in _split(sizes, order))
    wiring = tuple((a.exit, b.entry) for a in chunks for b in chunks if a is not b)
    if restart:
        wiring += tuple((c.exit, c.entry) for c in chunks)
    return ProblemStructure(chunks, sum(sizes), wiring, name)


def probabilistic_problem(sizes, order=None, name="") -> ProblemStructure:
    """Complete communities joined in a ring by bidirectional exit/entry links."""
    chunks = tuple(_chunk(ChunkKind.PROBABILISTIC, s) for s in _split(sizes, order))
    wiring = []
    c = len(chunks)
    for i in range(c):
        a, b = chunks[i], chunks[(i + 1) % c]
        for link in ((a.exit, b.entry), (b.entry, a.exit)):
            if link not in wiring:
                wiring.append(link)
    return ProblemStructure(chunks, sum(sizes), tuple(wiring), name)


def mixed_problem(sizes, order=None, name="") -> ProblemStructure:
    """1st probabilistic -> fixed -> 2nd probabilistic -> back to the 1st.

    ``sizes`` follows the preset naming (big, moderate, small): the first
    and last entries become the probabilistic chunks and the middle entry
    the fixed chain placed between them.
    """
    if len(sizes) != 3:
        raise ProblemError("mixed problems have exactly three chunks")
    p1, fx, p2 = _split(sizes, order)
    c1 = _chunk(ChunkKind.PROBABILISTIC, p1)
    cf = _chunk(ChunkKind.FIXED, fx)
    c2 = _chunk(ChunkKind.PROBABILISTIC, p2)
    wiring = ((c1.exit, cf.entry), (cf.exit, c2.entry), (c2.exit, c1.entry))
    return ProblemStructure((c1, cf, c2), sum(sizes), wiring, name)


def longterm_problem(order=None, n_chunks=10, size=6, name="longterm-10x6") -> ProblemStructure:
    # after a chunk ends the walk moves on to one of the other chunks
    return fixed_problem([size] * n_chunks, order, name, restart=False)


def toy_problem() -> ProblemStructure:
    """Nine-state toy: probabilistic {0,1,2}, fixed 3->4->5, probabilistic {6,7,8}."""
    return mixed_problem((3, 3, 3), name="toy-3-3-3")


PRESET_IDS = tuple(
    [f"{kind}-{sizes}" for kind in ("fixed", "probabilistic", "mixed") for sizes in SIZE_SETS]
    + ["longterm-10x6", "toy-3-3-3"]
)


def make_preset(name: str, order=None) -> ProblemStructure:
    """Build a named preset, optionally with states re-assigned by ``order``.

    ``order`` is a permutation of ``0..n-1``; chunk ``j`` takes the next block
    of states from it.  The identity gives contiguous chunk blocks.
    """
    if name == "longterm-10x6":
        return longterm_problem(order)
    if name == "toy-3-3-3":
        return toy_problem() if order is None else mixed_problem((3, 3, 3), order, name)
    kind, _, sizes_id = name.partition("-")
    if kind not in ("fixed", "probabilistic", "mixed") or sizes_id not in SIZE_SETS:
        raise ProblemError(f"unknown preset {name!r}; known: {', '.join(PRESET_IDS)}")
    sizes = SIZE_SETS[sizes_id]
    builder = {"fixed": fixed_problem, "probabilistic": probabilistic_problem,
               "mixed": mixed_problem}[kind]
    return builder(sizes, order, name)


def make_continual(a: ProblemStructure, b: ProblemStructure, switch_step: int) -> ContinualProblem:
    return ContinualProblem(a, b, int(switch_step))


def continual_preset(kind: str, switch_step: int, rng: np.random.Generator,
                     before: str = "15-15-5", after: str = "20-10-5") -> ContinualProblem:
    """Continual problem whose second phase re-assigns states by a random permutation."""
    if kind == "longterm":
        a = make_preset("longterm-10x6")
        b = make_preset("longterm-10x6", order=rng.permutation(a.n_states))
    else:
        a = make_preset(f"{kind}-{before}")
        b = make_preset(f"{kind}-{after}", order=rng.permutation(a.n_states))
    return make_continual(a, b, switch_step)


# ---------------------------------------------------------------------------
# graph fixtures


def read_edge_list(text: str) -> list[tuple[int, int]]:
    edges = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ProblemError(f"line {lineno}: expected 'u v', got {line!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return edges


def read_labels(text: str) -> np.ndarray:
    vals = [int(ln.split("#", 1)[0]) for ln in text.splitlines() if ln.split("#", 1)[0].strip()]
    return np.asarray(vals, dtype=np.int64)


def _contiguous(labels: np.ndarray) -> np.ndarray:
    _, inv = np.unique(labels, return_inverse=True)
    return inv.astype(np.int64)


def load_graph(edges, truth, name: str = "graph", n_nodes: int | None = None,
               alt_truth: dict | None = None) -> LabeledGraph:
    """Symmetrize an undirected edge list into a labeled adjacency matrix.

    Duplicate edges collapse silently; self-loops and node ids outside
    ``0..n-1`` are rejected, where ``n`` defaults to the number of labels.
    """
    truth = np.asarray(truth, dtype=np.int64)
    n = len(truth) if n_nodes is None else n_nodes
    if len(truth) != n:
        raise ProblemError(f"{len(truth)} labels for {n} nodes")
    a = np.zeros((n, n), dtype=np.int8)
    for u, v in edges:
        if not (0 <= u < n and 0 <= v < n):
            raise ProblemError(f"edge ({u}, {v}) references a node outside 0..{n - 1}")
        if u == v:
            raise ProblemError(f"self-loop on node {u}")
        a[u, v] = a[v, u] = 1
    if (a.sum(axis=1) == 0).any():
        raise ProblemError("isolated nodes cannot be visited by a random walk")
    alts = {k: _contiguous(np.asarray(v)) for k, v in (alt_truth or {}).items()}
    return LabeledGraph(a, _contiguous(truth), name, alts)


def load_graph_files(edge_path, label_path, name: str | None = None) -> LabeledGraph:
    edges = read_edge_list(Path(edge_path).read_text())
    truth = read_labels(Path(label_path).read_text())
    return load_graph(edges, truth, name or Path(edge_path).stem)


# fixture name -> (edge file, {truth name: label file}); the first truth is the default
FIXTURES = {
    "karate": ("karate.edges", {"club2": "karate_club2.labels",
                                "club4": "karate_club4.labels"}),
    "dolphins": ("dolphins.edges", {"split2": "dolphins.labels"}),
    "sbm": ("sbm90.edges", {"groups3": "sbm90.labels"}),
    "whales": ("whales.edges", {"themes3": "whales.labels"}),
}


def load_fixture(name: str, truth: str | None = None) -> LabeledGraph:
    if name not in FIXTURES:
        raise ProblemError(f"unknown graph fixture {name!r}; known: {', '.join(FIXTURES)}")
    edge_file, label_files = FIXTURES[name]
    data = resources.files("symsyncmap") / "data"
    edges = read_edge_list((data / edge_file).read_text())
    truths = {k: read_labels((data / f).read_text()) for k, f in label_files.items()}
    key = truth or next(iter(label_files))
    if key not in truths:
        raise ProblemError(f"fixture {name!r} has no truth {key!r}; has {list(truths)}")
    return load_graph(edges, truths[key], name, alt_truth=truths)
