"""Exponentially decaying input encoding with a memory-window threshold.

Each state transition lasts ``tstep`` encoded steps.  When state ``i`` is
entered at step ``t_a`` its entry is set to 1 and decays as
``exp(-0.1 * (t - t_a))`` until ``m * tstep`` steps have passed, after which it
is zeroed.  States whose entry is above the threshold ``a`` form the positive
set used by the dynamics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

DECAY_RATE = 0.1


def threshold_from_memory(m: int, tstep: int) -> float:
    """Threshold that keeps a state active for ``m`` transitions of ``tstep`` steps."""
    if m < 2:
        raise ValueError(f"state memory m must be >= 2, got {m}")
    if tstep < 1:
        raise ValueError(f"tstep must be >= 1, got {tstep}")
    return math.exp(-DECAY_RATE * m * tstep)


@dataclass(frozen=True)
class EncoderConfig:
    tstep: int = 10
    m: int = 3
    # None derives the threshold from (m, tstep)
    a: float | None = None

    def __post_init__(self):
        if self.tstep < 1:
            raise ValueError(f"tstep must be >= 1, got {self.tstep}")
        if self.m < 2:
            raise ValueError(f"state memory m must be >= 2, got {self.m}")
        if self.a is not None and not 0.0 <= self.a <= 1.0:
            raise ValueError(f"threshold a must lie in [0, 1], got {self.a}")

    @property
    def threshold(self) -> float:
        return threshold_from_memory(self.m, self.tstep) if self.a is None else float(self.a)

    @property
    def active_span(self) -> int:
        """Number of steps since activation during which an entry stays above threshold.

        Evaluated with the same expression as the encoded values so the fast
        path and the literal thresholding never disagree.
        """
        a = self.threshold
        span = 0
        while span < self.m * self.tstep and math.exp(-DECAY_RATE * span) > a:
            span += 1
        return span


@dataclass
class EncodedInput:
    step: int
    state: int
    x: np.ndarray
    t_last: np.ndarray


class EncodedStream:
    """Lazy stream of encoded vectors for a state sequence.

    Iterating yields one :class:`EncodedInput` per encoded step
    (``len(states) * tstep`` in total).  The vectors are fresh arrays; the
    trainer's compiled path never materialises them and works from
    ``states`` and ``config.active_span`` instead.
    """

    def __init__(self, states, config: EncoderConfig, n_states: int | None = None):
        self.states = np.ascontiguousarray(states, dtype=np.int64)
        self.config = config
        if n_states is None:
            n_states = int(self.states.max()) + 1 if len(self.states) else 0
        self.n_states = n_states

    def __len__(self):
        return len(self.states) * self.config.tstep

    def __iter__(self) -> Iterator[EncodedInput]:
        return self.iter_range(0, len(self))

    def iter_range(self, start: int, stop: int) -> Iterator[EncodedInput]:
        tstep, m = self.config.tstep, self.config.m
        horizon = m * tstep
        n = self.n_states
        t_last = np.full(n, -(1 << 40), dtype=np.int64)
        # replay activations that precede `start`
        first = max(0, start // tstep - m)
        for j in range(first, min(start // tstep + 1, len(self.states))):
            if j * tstep <= start:
                t_last[self.states[j]] = j * tstep
        for t in range(start, stop):
            j, r = divmod(t, tstep)
            s = int(self.states[j])
            if r == 0:
                t_last[s] = t
            age = t - t_last
            x = np.where(age < horizon, np.exp(-DECAY_RATE * age.clip(0, horizon)), 0.0)
            yield EncodedInput(t, s, x, t_last.copy())


def encode(seq, cfg: EncoderConfig, n_states: int | None = None) -> EncodedStream:
    """Encode a state sequence (a :class:`StateSequence` or an int array)."""
    states = getattr(seq, "states", seq)
    return EncodedStream(states, cfg, n_states)


def dump_csv(stream: EncodedStream, fh, start: int = 0, stop: int | None = None) -> None:
    """Write nonzero encoded entries as ``step,state,value`` rows."""
    stop = len(stream) if stop is None else min(stop, len(stream))
    fh.write("step,state,value\n")
    for enc in stream.iter_range(start, stop):
        for i in np.flatnonzero(enc.x):
            fh.write(f"{enc.step},{i},{float(enc.x[i])!r}\n")
