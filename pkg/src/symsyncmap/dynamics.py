"""Self-organizing map dynamics for the original and symmetrical SyncMap.

Every state owns a weight node in a ``k``-dimensional space.  At each encoded
step the recently active states form the positive set and the rest the
negative set; positives move a fixed distance ``alpha`` toward their centroid
and negatives move ``alpha`` away from theirs.  The symmetrical variants
subsample both sets so that equal numbers of nodes are pulled and pushed.

The step loop runs either in the compiled kernel (``symsyncmap._kernel``) or
in the numpy reference implementation in this module.  Both consume the same
block of pre-drawn uniforms, so for a given seed they make identical discrete
choices and agree on positions up to floating point rounding.
"""

from __future__ import annotations

import bisect
import copy
import logging
import os
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .encoder import EncodedStream

log = logging.getLogger(__name__)

try:  # pragma: no cover - depends on the build
    from . import _kernel
except ImportError:  # pragma: no cover
    _kernel = None

SINGULAR_EPS = 1e-12


class Variant(str, Enum):
    ORIGINAL = "original"
    SYMMETRICAL = "symmetrical"
    # ablations: symmetrical activation with m=2, memory window (m=3) without it
    SYMMETRICAL_ONLY = "symmetrical-only"
    WINDOW_ONLY = "window-only"

    @property
    def symmetrical(self) -> bool:
        return self in (Variant.SYMMETRICAL, Variant.SYMMETRICAL_ONLY)

    def state_memory(self, m: int) -> int:
        """State memory the variant actually runs with."""
        return {Variant.ORIGINAL: 2, Variant.SYMMETRICAL_ONLY: 2,
                Variant.WINDOW_ONLY: 3}.get(self, m)


class Normalization(str, Enum):
    RESCALE = "rescale"   # center, then shrink the whole map if it overflows
    PROJECT = "project"   # center, then pull each overflowing node onto the sphere


@dataclass(frozen=True)
class DynamicsConfig:
    k: int = 3
    alpha_base: float = 0.001
    variant: Variant = Variant.SYMMETRICAL
    m: int = 3
    pr: float = 0.3
    radius: float = 10.0
    ma_window: int = 10000
    # fold the moving average every encoded step, or once per transition
    ma_fold: str = "step"
    normalization: Normalization = Normalization.RESCALE
    init_scale: float = 0.1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "normalization", Normalization(self.normalization))
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.alpha_base <= 0:
            raise ValueError("alpha_base must be > 0")
        if not 0.0 <= self.pr <= 1.0:
            raise ValueError("pr must lie in [0, 1]")
        if self.radius <= 0:
            raise ValueError("radius must be > 0")
        if self.ma_window < 1:
            raise ValueError("ma_window must be >= 1")
        if self.ma_fold not in ("step", "transition"):
            raise ValueError("ma_fold must be 'step' or 'transition'")
        if self.m < 2:
            raise ValueError("m must be >= 2")

    @property
    def effective_m(self) -> int:
        return self.variant.state_memory(self.m)

    def alpha(self, n: int) -> float:
        return self.alpha_base * n

    def fold_every(self, tstep: int) -> int:
        return 1 if self.ma_fold == "step" else tstep

    @property
    def draws_per_step(self) -> int:
        return 3 + self.effective_m if self.variant.symmetrical else 0


@dataclass
class MapState:
    w: np.ndarray
    t: int
    ring: np.ndarray
    ring_pos: int
    ring_count: int
    rng: np.random.Generator = field(repr=False)

    @property
    def n(self) -> int:
        return self.w.shape[0]

    @property
    def ma(self) -> np.ndarray:
        """Mean position over the last ``ma_window`` folded steps."""
        return self.ring[:self.ring_count].mean(axis=0)

    def copy(self) -> "MapState":
        return copy.deepcopy(self)


@dataclass
class ActivationSets:
    ps: list
    ns: list

    def __post_init__(self):
        if set(self.ps) & set(self.ns):
            raise ValueError("positive and negative sets overlap")


@dataclass
class Snapshot:
    step: int
    positions: np.ndarray
    ma: np.ndarray


@dataclass
class TrainResult:
    state: MapState
    snapshots: list
    updates: int = 0
    skipped: int = 0
    backend: str = ""


# ---------------------------------------------------------------------------
# single-step building blocks


def normalize(w: np.ndarray, radius: float, mode: Normalization = Normalization.RESCALE
              ) -> np.ndarray:
    """Center the map on the origin and keep every node within ``radius``."""
    w = w - w.mean(axis=0)
    norms = np.sqrt((w * w).sum(axis=1))
    if Normalization(mode) is Normalization.RESCALE:
        biggest = norms.max()
        if biggest > radius:
            w = w * (radius / biggest)
    else:
        over = norms > radius
        w[over] *= (radius / norms[over])[:, None]
    return w


def init_map(n: int, cfg: DynamicsConfig) -> MapState:
    """Uniform start in a small cube around the origin, then one normalization pass."""
    if n < 2:
        raise ValueError("need at least two states")
    rng = np.random.default_rng(cfg.seed)
    half = cfg.radius * cfg.init_scale
    w = rng.uniform(-half, half, size=(n, cfg.k))
    w = normalize(w, cfg.radius, cfg.normalization)
    ring = np.empty((cfg.ma_window, n, cfg.k))
    ring[0] = w
    return MapState(w, 0, ring, 1 % cfg.ma_window, 1, rng)


def partition(x: np.ndarray, a: float):
    """Split node indices by ``x > a`` (strict): ``(ps_temp, ns_temp)``."""
    pos = x > a
    return np.flatnonzero(pos).tolist(), np.flatnonzero(~pos).tolist()


def _pick(r: float, size: int) -> int:
    return min(int(r * size), size - 1)


def select_from_draws(ps_temp, n: int, m: int, pr: float, u) -> ActivationSets:
    """Symmetrical stochastic selection driven by the uniform row ``u``.

    ``u[0]`` decides whether only two positives are kept, ``u[1:3]`` pick
    them, and ``u[3:]`` pick the negatives one by one from the nodes not in
    the positive set.  ``ps_temp`` must be sorted.
    """
    size = len(ps_temp)
    if size < 2:
        return ActivationSets([], [])
    if m > 2 and u[0] < pr:
        cand = list(ps_temp)
        first = cand.pop(_pick(u[1], size))
        second = cand.pop(_pick(u[2], size - 1))
        ps = sorted((first, second))
        m_neg = 2
    else:
        ps = list(ps_temp)
        m_neg = size
    m_neg = min(m_neg, n - len(ps))
    excluded = list(ps)
    ns = []
    for q in range(m_neg):
        node = _pick(u[3 + q], n - len(ps) - q)
        for e in excluded:
            if e <= node:
                node += 1
            else:
                break
        ns.append(node)
        bisect.insort(excluded, node)
    return ActivationSets(ps, ns)


def symmetrical_select(ps_temp, ns_temp, m: int, pr: float, rng: np.random.Generator
                       ) -> ActivationSets:
    """Sample equally sized positive and negative sets (Symmetrical variants).

    With ``m > 2`` and probability ``pr`` two positives are kept out of
    ``ps_temp``; otherwise all of them.  Negatives are sampled from every node
    outside the kept positives, so inhibited positives can become negatives.
    """
    ps_temp = sorted(ps_temp)
    n = len(ps_temp) + len(ns_temp)
    return select_from_draws(ps_temp, n, m, pr, rng.random(3 + m))


def centroids(w: np.ndarray, sets: ActivationSets):
    """Centroids of the positive and negative sets, or ``None`` if the update must be skipped."""
    if len(sets.ps) <= 1 or len(sets.ns) <= 1:
        return None
    return w[sets.ps].mean(axis=0), w[sets.ns].mean(axis=0)


def update_step(w: np.ndarray, sets: ActivationSets, cp, cn, alpha: float) -> np.ndarray:
    """Move positives ``alpha`` toward ``cp`` and negatives ``alpha`` away from ``cn``.

    Returns the un-normalized new positions.  Nodes that sit on their
    centroid (distance below ``SINGULAR_EPS``) are left where they are.
    """
    w = w.copy()
    for idx, c, sign in ((sets.ps, cp, 1.0), (sets.ns, cn, -1.0)):
        if not len(idx):
            continue
        d = sign * (c - w[idx])
        dist = np.sqrt((d * d).sum(axis=1))
        ok = dist >= SINGULAR_EPS
        rows = np.asarray(idx)[ok]
        w[rows] += alpha * d[ok] / dist[ok, None]
    return w


def fold(state: MapState) -> None:
    state.ring[state.ring_pos] = state.w
    state.ring_pos = (state.ring_pos + 1) % state.ring.shape[0]
    state.ring_count = min(state.ring_count + 1, state.ring.shape[0])


def readout_positions(state: MapState, cfg: DynamicsConfig) -> np.ndarray:
    """Moving average for the symmetrical family, the raw map for the others."""
    return state.ma if cfg.variant.symmetrical else state.w.copy()


# ---------------------------------------------------------------------------
# reference step loop


def _python_block(state: MapState, stream: EncodedStream, cfg: DynamicsConfig, start: int,
                  stop: int, draws, callback=None) -> tuple[int, int]:
    n = state.n
    a = stream.config.threshold
    m = cfg.effective_m
    alpha = cfg.alpha(n)
    updates = skipped = 0
    every = cfg.fold_every(stream.config.tstep)
    for enc in stream.iter_range(start, stop):
        ps_temp, ns_temp = partition(enc.x, a)
        if cfg.variant.symmetrical:
            sets = select_from_draws(ps_temp, n, m, cfg.pr, draws[enc.step - start])
        else:
            sets = ActivationSets(ps_temp, ns_temp)
        cents = centroids(state.w, sets)
        if cents is None:
            skipped += 1
        else:
            moved = update_step(state.w, sets, cents[0], cents[1], alpha)
            if callback is not None:
                callback(enc.step, sets, state.w, moved)
            state.w = normalize(moved, cfg.radius, cfg.normalization)
            updates += 1
        if (enc.step + 1) % every == 0:
            fold(state)
    return updates, skipped


def _kernel_block(state: MapState, stream: EncodedStream, cfg: DynamicsConfig, start: int,
                  stop: int, draws) -> tuple[int, int]:
    stats = np.zeros(2, dtype=np.int64)
    if draws is None:
        draws = np.zeros((0, 1))
    state.ring_pos, state.ring_count = _kernel.run_block(
        state.w, state.ring, state.ring_pos, state.ring_count, stream.states,
        stream.config.tstep, stream.config.active_span, start, stop - start,
        int(cfg.variant.symmetrical), cfg.effective_m, cfg.pr, cfg.alpha(state.n), cfg.radius,
        int(cfg.normalization is Normalization.PROJECT), np.ascontiguousarray(draws), stats,
        cfg.fold_every(stream.config.tstep))
    return int(stats[0]), int(stats[1])


def available_backends() -> list[str]:
    return (["kernel"] if _kernel is not None else []) + ["python"]


def default_backend() -> str:
    forced = os.environ.get("SYMSYNCMAP_BACKEND")
    if forced:
        return forced
    return "kernel" if _kernel is not None else "python"


def train(encoded: EncodedStream, cfg: DynamicsConfig, state: MapState | None = None,
          snapshot_every: int | None = None, backend: str | None = None,
          callback=None, block: int = 10000) -> TrainResult:
    """Run the dynamics over an encoded stream.

    ``state`` resumes a previous run (its ``t`` is the next encoded step to
    process); by default a fresh map is drawn from ``cfg.seed``.  Snapshots
    of the raw and moving-average positions are taken after every
    ``snapshot_every`` steps.  ``callback(step, sets, before, moved)`` sees
    every fired update before normalization and forces the python backend.
    """
    if encoded.n_states < 2:
        raise ValueError("need at least two states")
    state = init_map(encoded.n_states, cfg) if state is None else state
    if state.w.shape != (encoded.n_states, cfg.k):
        raise ValueError("map shape does not match the stream and config")
    if state.ring.shape[0] != cfg.ma_window:
        raise ValueError("moving-average ring does not match cfg.ma_window")
    backend = "python" if callback is not None else (backend or default_backend())
    if backend == "kernel" and _kernel is None:
        raise RuntimeError("compiled kernel is not available")
    if backend not in ("kernel", "python"):
        raise ValueError(f"unknown backend {backend!r}")
    if encoded.config.m != cfg.effective_m:
        log.debug("encoder m=%d differs from dynamics m=%d", encoded.config.m, cfg.effective_m)

    total = len(encoded)
    snaps = []
    updates = skipped = 0
    width = cfg.draws_per_step
    t = state.t
    while t < total:
        stop = min(total, t + block)
        if snapshot_every:
            stop = min(stop, (t // snapshot_every + 1) * snapshot_every)
        draws = state.rng.random((stop - t, width)) if width else None
        if backend == "kernel":
            u, s = _kernel_block(state, encoded, cfg, t, stop, draws)
        else:
            u, s = _python_block(state, encoded, cfg, t, stop, draws, callback)
        updates += u
        skipped += s
        t = state.t = stop
        if snapshot_every and t % snapshot_every == 0:
            snaps.append(Snapshot(t, state.w.copy(), state.ma))
    return TrainResult(state, snaps, updates, skipped, backend)


def with_seed(cfg: DynamicsConfig, seed: int) -> DynamicsConfig:
    return replace(cfg, seed=seed)
