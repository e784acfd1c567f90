"""Command line entry point: ``symsyncmap <command> ...``.

Commands: presets, generate, train, eval, run, ablation, plot.  Usage and
configuration errors exit with status 2, runtime failures with 1.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import harness, problems
from .clustering import dbscan, export_dendrogram, parse_dendrogram, ward_cluster
from .dynamics import readout_positions, train
from .encoder import EncoderConfig, dump_csv, encode
from .metrics import nmi


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(p, trials=True):
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--seed", type=int, help="base seed (trial i uses seed + i)")
    if trials:
        p.add_argument("--trials", type=int, help="number of trials")
        p.add_argument("--jobs", type=int, default=1, help="parallel trial workers")
    p.add_argument("--backend", choices=("kernel", "python"), help="force a step-loop backend")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="symsyncmap", description="Chunk discovery with (Symmetrical) SyncMap.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("presets", help="list problem presets, graph fixtures and named configs")
    p.add_argument("--configs", action="store_true", help="list named configs only")

    p = sub.add_parser("generate", help="write a state sequence, adjacency and labels")
    p.add_argument("--preset", required=True, help="preset id or graph:<fixture>")
    p.add_argument("--tau", type=int, required=True, help="number of transitions")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="generated")
    p.add_argument("--dump-encoded", action="store_true",
                   help="also write the nonzero encoded entries to encoded.csv")
    p.add_argument("--m", type=int, default=3, help="state memory for --dump-encoded")
    p.add_argument("--tstep", type=int, default=10)

    p = sub.add_parser("train", help="train one trial and dump map snapshots")
    p.add_argument("--config", required=True, help="named config or config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key")
    p.add_argument("--trial", type=int, default=0)
    _add_common(p, trials=False)

    p = sub.add_parser("eval", help="cluster a dumped map and score it against labels")
    p.add_argument("--map", required=True)
    p.add_argument("--truth", required=True, help="label file, one integer per line")
    p.add_argument("--step", type=int, help="snapshot step (default: last)")
    p.add_argument("--clusterer", choices=("dbscan", "ward"), default="dbscan")
    p.add_argument("--eps", type=float, default=4.5)
    p.add_argument("--mc", type=int, default=2)
    p.add_argument("--clusters", type=int, default=0, help="ward cut (default: true count)")
    p.add_argument("--dendrogram", help="write the ward merge list here")
    p.add_argument("--assignment", help="write node_id,label rows here")

    p = sub.add_parser("run", help="run a full experiment")
    p.add_argument("--config", required=True, action="append",
                   help="named config or config file; repeatable")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--no-timing", action="store_true",
                   help="leave runtimes out of results.json so reruns are byte-identical")
    _add_common(p)

    p = sub.add_parser("ablation", help="mixed 20-10-5 under the four model variants")
    p.add_argument("--tau", type=int, default=200000)
    _add_common(p)

    p = sub.add_parser("plot", help="SVG of a map dump or a dendrogram merge file")
    p.add_argument("--map", help="map CSV")
    p.add_argument("--truth", help="label file used for colors")
    p.add_argument("--step", type=int)
    p.add_argument("--dendrogram", help="merge file written by eval or run")
    p.add_argument("--trace", help="trace CSV to plot as mean +- std over trials")
    p.add_argument("--out", required=True, help="SVG path")
    p.add_argument("--title", default="")
    return ap


def _configure(args) -> harness.ExperimentConfig:
    cfg = harness.load_config(args.config if isinstance(args.config, str) else args.config[0])
    return _override(cfg, args)


def _override(cfg, args):
    text = "\n".join(args.set)
    cfg = harness.parse_config(text, cfg)
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["base_seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        updates["trials"] = args.trials
    return replace(cfg, **updates) if updates else cfg


def _read_labels(path) -> np.ndarray:
    return problems.read_labels(Path(path).read_text())


def _pick_step(maps: dict, step):
    if not maps:
        raise harness.ConfigError("map file has no rows")
    if step is None:
        step = max(maps)
    if step not in maps:
        raise harness.ConfigError(f"step {step} not in map file")
    return step, maps[step]


def cmd_presets(args):
    if not args.configs:
        print("presets:")
        for p in problems.PRESET_IDS:
            print("  " + p)
        print("graph fixtures:")
        for g in problems.FIXTURES:
            print("  graph:" + g)
        print("continual: continual:fixed continual:probabilistic continual:mixed "
              "continual:longterm")
        print("named configs:")
    for name in harness.NAMED_CONFIGS:
        print(("  " if not args.configs else "") + name)
    return 0


def cmd_generate(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    if args.preset.startswith("graph:"):
        g = problems.load_fixture(args.preset[6:])
        a, truth = g.adjacency, g.truth
    else:
        s = problems.make_preset(args.preset)
        a, truth = problems.build_adjacency(s), s.labels()
    p = problems.adjacency_to_transition(a)
    seq = problems.random_walk(p, args.tau, rng=rng)
    np.savetxt(out / "sequence.txt", seq.states, fmt="%d")
    np.savetxt(out / "adjacency.txt", a, fmt="%d")
    np.savetxt(out / "transition.txt", p, fmt="%.17g")
    (out / "labels.txt").write_text("".join(f"{int(x)}\n" for x in truth))
    if args.dump_encoded:
        with open(out / "encoded.csv", "w") as fh:
            dump_csv(encode(seq, EncoderConfig(args.tstep, args.m), len(truth)), fh)
    print(f"wrote {len(seq.states)} states to {out / 'sequence.txt'}")
    return 0


def cmd_train(args):
    cfg = _configure(args)
    seeds = harness.trial_streams(cfg.base_seed + args.trial)
    inst = harness.build_instance(cfg, seeds)
    dyn = cfg.dynamics(seeds["map"])
    result = train(encode(inst.states, cfg.encoder(), inst.n_states), dyn,
                   snapshot_every=cfg.snapshot_every or None, backend=args.backend)
    sym = dyn.variant.symmetrical
    rows = [(s.step, s.ma if sym else s.positions) for s in result.snapshots]
    final_step = cfg.tau * cfg.tstep
    if not rows or rows[-1][0] != final_step:
        rows.append((final_step, readout_positions(result.state, dyn)))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "map.csv").write_text(harness.map_csv(rows))
    (out / "labels.txt").write_text("".join(f"{int(x)}\n" for x in inst.truth))
    (out / "config.txt").write_text(cfg.to_text())
    (out / "seeds.json").write_text(json.dumps(seeds, indent=2) + "\n")
    print(f"trained {cfg.name} trial {args.trial}: {len(rows)} snapshots in {out / 'map.csv'}")
    return 0


def cmd_eval(args):
    step, pos = _pick_step(harness.read_map_csv(Path(args.map).read_text()), args.step)
    truth = _read_labels(args.truth)
    if len(truth) != len(pos):
        raise harness.ConfigError(f"{len(truth)} labels for {len(pos)} map nodes")
    if args.clusterer == "ward":
        assignment, dend = ward_cluster(pos, args.clusters or len(np.unique(truth)))
        if args.dendrogram:
            Path(args.dendrogram).write_text(export_dendrogram(dend))
    else:
        assignment = dbscan(pos, args.eps, args.mc)
    if args.assignment:
        Path(args.assignment).write_text(
            "node_id,label\n" + "".join(f"{i},{int(x)}\n" for i, x in enumerate(assignment.labels)))
    print(json.dumps({"step": step, "clusters": assignment.num_clusters,
                      "nmi": nmi(assignment.labels, truth),
                      "labels": assignment.labels.tolist()}))
    return 0


def cmd_run(args):
    results = []
    for ref in args.config:
        cfg = _override(harness.load_config(ref), args)
        res = harness.run_experiment(cfg, args.jobs, args.backend)
        d = harness.write_artifacts(res, Path(args.out), timing=not args.no_timing)
        print(f"{cfg.name}: NMI {res.mean:.3f} +- {res.std:.3f} over {len(res.trials)} trials "
              f"-> {d}")
        results.append(res)
    if len(results) > 1:
        (Path(args.out) / "aggregate.csv").write_text(harness.aggregate_csv(results))
    return 0


def cmd_ablation(args):
    kw = {} if args.trials is None else {"trials": args.trials}
    results = harness.ablation_suite(jobs=args.jobs, base_seed=args.seed or 0, tau=args.tau,
                                     backend=args.backend, **kw)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table = harness.ablation_table(results)
    (out / "ablation.csv").write_text(table)
    for res in results:
        harness.write_artifacts(res, out)
    sys.stdout.write(table)
    return 0


def cmd_plot(args):
    from . import plotting

    if args.map:
        step, pos = _pick_step(harness.read_map_csv(Path(args.map).read_text()), args.step)
        labels = _read_labels(args.truth) if args.truth else None
        if labels is not None and len(labels) != len(pos):
            raise harness.ConfigError(f"{len(labels)} labels for {len(pos)} map nodes")
        plotting.scatter_svg(pos, labels, args.out, args.title or f"step {step}")
    elif args.dendrogram:
        d = parse_dendrogram(Path(args.dendrogram).read_text())
        labels = _read_labels(args.truth) if args.truth else None
        plotting.dendrogram_svg(d, labels, args.out, args.title or "Ward dendrogram")
    elif args.trace:
        import csv

        series: dict = {}
        with open(args.trace) as fh:
            for row in csv.DictReader(fh):
                series.setdefault(row["experiment"], {}).setdefault(
                    int(row["step"]), []).append(float(row["nmi"]))
        traces = {}
        for name, by_step in series.items():
            steps = sorted(by_step)
            vals = [by_step[s] for s in steps]
            traces[name] = (steps, [np.mean(v) for v in vals],
                            [np.std(v) for v in vals])
        plotting.trace_svg(traces, args.out, args.title or "NMI over time")
    else:
        raise UsageError("plot needs --map, --dendrogram or --trace")
    print(f"wrote {args.out}")
    return 0


COMMANDS = {"presets": cmd_presets, "generate": cmd_generate, "train": cmd_train,
            "eval": cmd_eval, "run": cmd_run, "ablation": cmd_ablation, "plot": cmd_plot}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing command")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"{parser.prog}: error: {e}", file=sys.stderr)
        print(parser.format_usage().rstrip(), file=sys.stderr)
        return 2
    except (harness.ConfigError, problems.ProblemError, FileNotFoundError) as e:
        print(f"{parser.prog}: error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001 - one-line diagnostic for the shell
        print(f"{parser.prog}: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
