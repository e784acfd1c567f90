"""Seeded multi-trial experiments: config files, trial runner, result artifacts.

A trial with seed ``s`` spawns three independent streams from
``numpy.random.SeedSequence(s)``: one for the problem structure (state
permutations of continual problems), one for the random walk and one for
the map initialisation and stochastic selection.  Trial ``i`` of an
experiment uses ``s = base_seed + i``, so trials can run in any order or in
parallel and still produce the same numbers.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import problems
from .clustering import dbscan, export_dendrogram, ward_cluster
from .dynamics import DynamicsConfig, Variant, readout_positions, train
from .encoder import EncoderConfig, encode
from .metrics import nmi

log = logging.getLogger(__name__)

# the original model thresholds the encoding at a fixed 0.1
ORIGINAL_THRESHOLD = 0.1


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


class TrialError(RuntimeError):
    def __init__(self, trial: int, cause: Exception):
        super().__init__(f"trial {trial}: {cause}")
        self.trial = trial
        self.cause = cause


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat experiment description; every field maps to one config-file key.

    ``problem`` is a preset id (``fixed-20-10-5``), ``graph:<fixture>``, or
    ``continual:<kind>`` with kind fixed, probabilistic, mixed or longterm.
    ``tau`` counts transitions; ``snapshot_every`` counts encoded steps.
    For continual problems ``switch`` is the transition index at which the
    second structure takes over (0 means ``tau // 2``).
    """

    name: str = "custom"
    problem: str = "fixed-20-20-5"
    tau: int = 200000
    switch: int = 0
    truth: str = ""
    variant: str = "symmetrical"
    k: int = 3
    m: int = 3
    pr: float = 0.3
    alpha_base: float = 0.001
    radius: float = 10.0
    ma_window: int = 10000
    ma_fold: str = "step"
    normalization: str = "rescale"
    init_scale: float = 0.1
    tstep: int = 10
    threshold: float = -1.0  # < 0 derives it from the variant's state memory
    clusterer: str = "dbscan"
    eps: float = 4.5
    mc: int = 2
    num_clusters: int = 0  # ward only; 0 uses the number of true groups
    trials: int = 10
    base_seed: int = 0
    snapshot_every: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.tau < 2:
            raise ConfigError("tau must be >= 2")
        if self.base_seed < 0:
            raise ConfigError("base_seed must be non-negative")
        if self.clusterer not in ("dbscan", "ward"):
            raise ConfigError(f"clusterer must be dbscan or ward, not {self.clusterer!r}")
        if self.snapshot_every < 0 or self.num_clusters < 0:
            raise ConfigError("snapshot_every and num_clusters must be >= 0")
        try:
            Variant(self.variant)
            self.dynamics(0)
            self.encoder()
        except ValueError as e:
            raise ConfigError(str(e)) from None
        kind, _, rest = self.problem.partition(":")
        if kind == "graph":
            if rest not in problems.FIXTURES:
                raise ConfigError(f"unknown graph fixture {rest!r}")
        elif kind == "continual":
            if rest not in ("fixed", "probabilistic", "mixed", "longterm"):
                raise ConfigError(f"unknown continual kind {rest!r}")
            if not 0 <= self.switch < self.tau:
                raise ConfigError("switch must lie in [0, tau)")
        elif self.problem not in problems.PRESET_IDS:
            raise ConfigError(f"unknown problem {self.problem!r}")

    def encoder(self) -> EncoderConfig:
        v = Variant(self.variant)
        a = self.threshold if self.threshold >= 0 else (
            ORIGINAL_THRESHOLD if v is Variant.ORIGINAL else None)
        return EncoderConfig(self.tstep, v.state_memory(self.m), a)

    def dynamics(self, seed: int) -> DynamicsConfig:
        return DynamicsConfig(k=self.k, alpha_base=self.alpha_base, variant=self.variant,
                              m=self.m, pr=self.pr, radius=self.radius,
                              ma_window=self.ma_window, ma_fold=self.ma_fold,
                              normalization=self.normalization,
                              init_scale=self.init_scale, seed=seed)

    @property
    def switch_at(self) -> int:
        return self.switch or self.tau // 2

    def to_text(self) -> str:
        return "".join(f"{f.name} = {getattr(self, f.name)}\n" for f in fields(self))


_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}
_CASTS = {"int": int, "float": float, "str": str}


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse ``key = value`` lines (``#`` starts a comment) over ``base``."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (p.strip() for p in line.partition("="))
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if key not in _TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _CASTS[_TYPES[key]](value)
        except ValueError:
            raise ConfigError(f"line {lineno}: bad {_TYPES[key]} for {key}: {value!r}") from None
    return replace(base or ExperimentConfig(), **values)


# ---------------------------------------------------------------------------
# named configs


def _named() -> dict[str, ExperimentConfig]:
    out = {}
    sizes = ("20-20-5", "20-10-5", "20-5-5")
    for kind in ("fixed", "probabilistic", "mixed"):
        for s in sizes:
            base = f"imbalanced_{kind}_{s.replace('-', '_')}"
            out[base] = ExperimentConfig(name=base, problem=f"{kind}-{s}")
            out[base + "_original"] = ExperimentConfig(name=base + "_original",
                                                       problem=f"{kind}-{s}", variant="original")
        # sequence length 2 tau with the switch at tau
        name = f"continual_{kind}"
        out[name] = ExperimentConfig(name=name, problem=f"continual:{kind}", tau=400000,
                                     switch=200000)
        out[name + "_original"] = replace(out[name], name=name + "_original", variant="original")
    for v in ("symmetrical", "original"):
        suffix = "" if v == "symmetrical" else "_original"
        out["longterm" + suffix] = ExperimentConfig(
            name="longterm" + suffix, problem="continual:longterm", tau=600000, switch=300000,
            k=2, eps=1.0, variant=v, snapshot_every=10000)
        out["sbm" + suffix] = ExperimentConfig(name="sbm" + suffix, problem="graph:sbm", variant=v)
        out["whales" + suffix] = ExperimentConfig(name="whales" + suffix, problem="graph:whales",
                                                  variant=v)
        for truth in ("club2", "club4"):
            name = f"karate_{truth}{suffix}"
            out[name] = ExperimentConfig(name=name, problem="graph:karate", truth=truth, k=2,
                                         clusterer="ward", variant=v)
        out["dolphins" + suffix] = ExperimentConfig(name="dolphins" + suffix,
                                                    problem="graph:dolphins", k=2,
                                                    clusterer="ward", variant=v)
    for v, m in ABLATION_VARIANTS:
        name = f"ablation_{v.replace('-', '_')}"
        out[name] = ExperimentConfig(name=name, problem="mixed-20-10-5", variant=v, m=m)
    for k, m, pr in SWEEP_SETTINGS:
        for kind in ("fixed", "probabilistic", "mixed"):
            name = f"sweep_k{k}_m{m}_pr{round(pr * 100)}_{kind}"
            out[name] = ExperimentConfig(name=name, problem=f"{kind}-20-10-5", k=k, m=m, pr=pr)
    return out


ABLATION_VARIANTS = (("original", 2), ("window-only", 3), ("symmetrical-only", 2),
                     ("symmetrical", 3))
SWEEP_SETTINGS = ((3, 3, 0.3), (3, 2, 1.0), (3, 3, 1.0), (3, 4, 0.3), (2, 2, 1.0), (2, 3, 0.3),
                  (2, 4, 0.3))
NAMED_CONFIGS = _named()


def load_config(ref: str) -> ExperimentConfig:
    """A named config or a path to a config file."""
    if ref in NAMED_CONFIGS:
        return NAMED_CONFIGS[ref]
    path = Path(ref)
    if not path.is_file():
        raise ConfigError(f"{ref!r} is neither a named config nor a file")
    cfg = parse_config(path.read_text())
    return cfg if cfg.name != "custom" else replace(cfg, name=path.stem)


# ---------------------------------------------------------------------------
# trials


@dataclass
class Instance:
    """Everything a trial trains on."""

    states: np.ndarray
    n_states: int
    truth: np.ndarray
    # truth before the switch, for continual problems
    truth_before: np.ndarray | None = None
    switch: int = 0


@dataclass
class TrialResult:
    trial: int
    seed: int
    final_nmi: float
    trace: list = field(default_factory=list)
    runtime_s: float = 0.0
    seeds: dict = field(default_factory=dict)
    positions: np.ndarray | None = None
    snapshots: list = field(default_factory=list)
    dendrogram: str = ""


def trial_streams(seed: int) -> dict[str, int]:
    """Entropy words for the structure, walk and map streams of one trial."""
    children = np.random.SeedSequence(seed).spawn(3)
    words = [int(c.generate_state(1, np.uint64)[0]) for c in children]
    return dict(zip(("structure", "walk", "map"), words))


def build_instance(cfg: ExperimentConfig, seeds: dict[str, int]) -> Instance:
    walk_rng = np.random.default_rng(seeds["walk"])
    kind, _, rest = cfg.problem.partition(":")
    if kind == "graph":
        g = problems.load_fixture(rest, cfg.truth or None)
        seq = problems.random_walk(problems.adjacency_to_transition(g.adjacency), cfg.tau,
                                   rng=walk_rng)
        return Instance(seq.states, len(g.truth), g.truth)
    if kind == "continual":
        cp = problems.continual_preset(rest, cfg.switch_at,
                                       np.random.default_rng(seeds["structure"]))
        seq = problems.continual_walk(cp, cfg.tau, rng=walk_rng)
        return Instance(seq.states, cp.phase_a.n_states, cp.phase_b.labels(),
                        cp.phase_a.labels(), cfg.switch_at)
    s = problems.make_preset(cfg.problem)
    p = problems.adjacency_to_transition(problems.build_adjacency(s))
    seq = problems.random_walk(p, cfg.tau, rng=walk_rng)
    return Instance(seq.states, s.n_states, s.labels())


def cluster_labels(cfg: ExperimentConfig, positions, n_true: int):
    """Labels for a readout; also returns the dendrogram text for Ward."""
    if cfg.clusterer == "ward":
        assignment, dend = ward_cluster(positions, cfg.num_clusters or n_true)
        return assignment.labels, export_dendrogram(dend)
    return dbscan(positions, cfg.eps, cfg.mc).labels, ""


def truth_at(inst: Instance, step: int, tstep: int) -> np.ndarray:
    if inst.truth_before is not None and step <= inst.switch * tstep:
        return inst.truth_before
    return inst.truth


def run_trial(cfg: ExperimentConfig, trial: int, backend: str | None = None) -> TrialResult:
    seed = cfg.base_seed + trial
    t0 = time.perf_counter()
    seeds = trial_streams(seed)
    inst = build_instance(cfg, seeds)
    dyn = cfg.dynamics(seeds["map"])
    stream = encode(inst.states, cfg.encoder(), inst.n_states)
    result = train(stream, dyn, snapshot_every=cfg.snapshot_every or None, backend=backend)
    n_true = len(np.unique(inst.truth))
    symmetrical = dyn.variant.symmetrical
    trace, snaps = [], []
    for snap in result.snapshots:
        pos = snap.ma if symmetrical else snap.positions
        labels, _ = cluster_labels(cfg, pos, n_true)
        trace.append((snap.step, nmi(labels, truth_at(inst, snap.step, cfg.tstep))))
        snaps.append((snap.step, pos))
    final = readout_positions(result.state, dyn)
    labels, dend = cluster_labels(cfg, final, n_true)
    score = nmi(labels, inst.truth)
    return TrialResult(trial, seed, score, trace, time.perf_counter() - t0,
                       dict(trial=seed, **seeds), final, snaps, dend)


def _run_trial_safe(args):
    cfg, trial, backend = args
    try:
        return run_trial(cfg, trial, backend)
    except Exception as e:
        raise TrialError(trial, e) from e


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    trials: list

    @property
    def scores(self) -> np.ndarray:
        return np.array([t.final_nmi for t in self.trials])

    @property
    def mean(self) -> float:
        return float(self.scores.mean())

    @property
    def std(self) -> float:
        return float(self.scores.std())

    def window_mean(self, lo: int, hi: int) -> float:
        """Mean trace NMI over snapshots with ``lo <= transition <= hi``."""
        vals = [v for t in self.trials for step, v in t.trace
                if lo <= step // self.config.tstep <= hi]
        if not vals:
            raise ValueError(f"no snapshots in [{lo}, {hi}]")
        return float(np.mean(vals))


def run_experiment(cfg: ExperimentConfig, jobs: int = 1, backend: str | None = None,
                   trials: list[int] | None = None) -> ExperimentResult:
    """Run every trial (or the given subset) and collect the results in trial order."""
    todo = list(range(cfg.trials)) if trials is None else list(trials)
    args = [(cfg, i, backend) for i in todo]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_trial_safe, args))
    else:
        results = [_run_trial_safe(a) for a in args]
    for r in results:
        log.info("%s trial %d seed %d nmi %.4f (%.1fs)", cfg.name, r.trial, r.seed,
                 r.final_nmi, r.runtime_s)
    return ExperimentResult(cfg, results)


# ---------------------------------------------------------------------------
# artifacts


def results_json(res: ExperimentResult, timing: bool = True) -> str:
    trials = []
    for t in res.trials:
        row = {"trial": t.trial, "seed": t.seed, "final_nmi": t.final_nmi, "seeds": t.seeds}
        if timing:
            row["runtime_s"] = t.runtime_s
        trials.append(row)
    readout = ("ward cut" if res.config.clusterer == "ward"
               else "dbscan, noise points promoted to singleton clusters")
    doc = {"config": asdict(res.config), "readout": readout, "trials": trials,
           "aggregate": {"mean": res.mean, "std": res.std, "trials": len(res.trials)}}
    return json.dumps(doc, indent=2) + "\n"


def trace_csv(results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["experiment", "step", "trial", "nmi"])
    for res in results:
        for t in res.trials:
            for step, v in t.trace:
                w.writerow([res.config.name, step, t.trial, repr(float(v))])
    return buf.getvalue()


def aggregate_csv(results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["experiment", "problem", "variant", "m", "trials", "mean", "std"])
    for res in results:
        c = res.config
        w.writerow([c.name, c.problem, c.variant, Variant(c.variant).state_memory(c.m),
                    len(res.trials), repr(float(res.mean)), repr(float(res.std))])
    return buf.getvalue()


def map_csv(rows) -> str:
    """``rows`` is a list of ``(step, positions)``; emits ``step,node_id,x0,x1,...``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    k = rows[0][1].shape[1] if rows else 0
    w.writerow(["step", "node_id"] + [f"x{j}" for j in range(k)])
    for step, pos in rows:
        for i, p in enumerate(pos):
            w.writerow([step, i] + [repr(float(v)) for v in p])
    return buf.getvalue()


def read_map_csv(text: str) -> dict[int, np.ndarray]:
    """Inverse of :func:`map_csv`: ``{step: positions}``."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header[:2] != ["step", "node_id"]:
        raise ValueError("map CSV must start with step,node_id")
    by_step: dict[int, list] = {}
    for row in reader:
        if row:
            by_step.setdefault(int(row[0]), []).append((int(row[1]), [float(v) for v in row[2:]]))
    out = {}
    for step, items in by_step.items():
        items.sort()
        out[step] = np.array([p for _, p in items])
    return out


def write_artifacts(res: ExperimentResult, out: Path, timing: bool = True) -> Path:
    """results.json, aggregate.csv, trace.csv and per-trial final maps under ``out/name``."""
    d = Path(out) / res.config.name
    (d / "maps").mkdir(parents=True, exist_ok=True)
    (d / "config.txt").write_text(res.config.to_text())
    (d / "results.json").write_text(results_json(res, timing))
    (d / "aggregate.csv").write_text(aggregate_csv([res]))
    (d / "trace.csv").write_text(trace_csv([res]))
    for t in res.trials:
        final_step = res.config.tau * res.config.tstep
        (d / "maps" / f"trial{t.trial:03d}.csv").write_text(map_csv([(final_step, t.positions)]))
        if t.dendrogram:
            (d / "maps" / f"trial{t.trial:03d}.dendrogram").write_text(t.dendrogram)
    return d


def ablation_suite(trials: int = 10, jobs: int = 1, base_seed: int = 0, tau: int = 200000,
                   backend: str | None = None) -> list[ExperimentResult]:
    """Mixed 20-10-5 under the original, window-only, symmetrical-only and full models."""
    out = []
    for v, _ in ABLATION_VARIANTS:
        cfg = replace(NAMED_CONFIGS[f"ablation_{v.replace('-', '_')}"], trials=trials,
                      base_seed=base_seed, tau=tau)
        out.append(run_experiment(cfg, jobs, backend))
    return out


def ablation_table(results) -> str:
    """Table with one row per model: model, m, mean, std."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "m", "trials", "mean", "std"])
    for res in results:
        c = res.config
        w.writerow([c.variant, Variant(c.variant).state_memory(c.m), len(res.trials),
                    repr(float(res.mean)), repr(float(res.std))])
    return buf.getvalue()
