"""Compare the compiled step loop with the numpy reference on the same runs.

    python3 benchmarks/bench_kernel.py [--tau 2000] [--repeat 3]

Both backends consume identical uniform draws, so the final maps are also
compared; the reported max deviation should sit at rounding level.
"""

import argparse
import time

import numpy as np

from symsyncmap.dynamics import DynamicsConfig, Variant, available_backends, train
from symsyncmap.encoder import EncoderConfig, encode
from symsyncmap.problems import adjacency_to_transition, build_adjacency, make_preset, random_walk


def timed(stream, cfg, backend, repeat):
    best, result = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = train(stream, cfg, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--tau", type=int, default=2000, help="transitions per run")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--preset", default="mixed-20-10-5")
    args = ap.parse_args()

    if "kernel" not in available_backends():
        raise SystemExit("compiled kernel not built; reinstall with Cython available")
    s = make_preset(args.preset)
    seq = random_walk(adjacency_to_transition(build_adjacency(s)), args.tau, seed=0)
    print(f"{args.preset}, {args.tau} transitions ({args.tau * 10} encoded steps), "
          f"best of {args.repeat}")
    print(f"{'variant':<18}{'kernel s':>10}{'python s':>10}{'speedup':>9}{'us/step k':>11}"
          f"{'max |dw|':>11}")
    for variant in Variant:
        m = variant.state_memory(3)
        a = 0.1 if variant is Variant.ORIGINAL else None
        stream = encode(seq, EncoderConfig(10, m, a), s.n_states)
        cfg = DynamicsConfig(variant=variant, seed=1)
        tk, rk = timed(stream, cfg, "kernel", args.repeat)
        tp, rp = timed(stream, cfg, "python", args.repeat)
        dev = float(np.abs(rk.state.w - rp.state.w).max())
        print(f"{variant.value:<18}{tk:>10.3f}{tp:>10.3f}{tp / tk:>9.0f}"
              f"{1e6 * tk / len(stream):>11.2f}{dev:>11.1e}")


if __name__ == "__main__":
    main()
