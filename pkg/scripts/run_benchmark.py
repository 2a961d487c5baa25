"""Full phantom benchmark over several seeds: tables plus report directories.

    python3 scripts/run_benchmark.py --seeds 1,2,3 --out reports
"""
import argparse
import time
import warnings
from pathlib import Path

from graphla.bench import BenchConfig, run_benchmark
from graphla.phantom import PhantomSpec


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", default="0")
    p.add_argument("--out", default=None, help="write one report directory per seed here")
    p.add_argument("--threads", type=int, default=None)
    args = p.parse_args()
    warnings.simplefilter("ignore", RuntimeWarning)

    for seed in (int(s) for s in args.seeds.split(",")):
        t = time.perf_counter()
        cfg = BenchConfig(phantom=PhantomSpec(seed=seed), noise_seed=seed, threads=args.threads)
        out = Path(args.out) / f"seed{seed}" if args.out else None
        report = run_benchmark(cfg, out_dir=out)
        print(f"# seed {seed} ({time.perf_counter() - t:.0f}s)")
        print(report.table(), flush=True)


if __name__ == "__main__":
    main()
