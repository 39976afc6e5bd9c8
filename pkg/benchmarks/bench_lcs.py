"""Compare the compiled token-LCS kernel against the pure-Python fallback.

Backend selection happens once at import, so each measurement runs in a
fresh interpreter: one with the default selection (the extension when it
built) and one forced to the fallback via SUMATTACK_PURE=1. The driver
also cross-checks that both backends produce identical LCS lengths.

    python3 benchmarks/bench_lcs.py
    python3 benchmarks/bench_lcs.py --sizes 32,128,512 --repeats 100
"""

import argparse
import json
import os
import random
import subprocess
import sys
import time


def make_pairs(size, repeats, seed):
    rng = random.Random(seed)
    vocab = max(4, size // 2)
    return [
        (
            [rng.randrange(vocab) for _ in range(size)],
            [rng.randrange(vocab) for _ in range(size)],
        )
        for _ in range(repeats)
    ]


def measure(sizes, repeats, seed):
    from sumattack._kernels import KERNEL_BACKEND, lcs_ids

    result = {"backend": KERNEL_BACKEND, "seconds": {}, "checksums": {}}
    for size in sizes:
        pairs = make_pairs(size, repeats, seed)
        for a, b in pairs[:10]:
            lcs_ids(a, b)
        start = time.perf_counter()
        checksum = 0
        for a, b in pairs:
            checksum += lcs_ids(a, b)
        result["seconds"][str(size)] = (time.perf_counter() - start) / repeats
        result["checksums"][str(size)] = checksum
    return result


def run_child(force_pure, args):
    env = dict(os.environ)
    env.pop("SUMATTACK_PURE", None)
    if force_pure:
        env["SUMATTACK_PURE"] = "1"
    cmd = [
        sys.executable,
        os.path.abspath(__file__),
        "--measure",
        "--sizes",
        ",".join(str(s) for s in args.sizes),
        "--repeats",
        str(args.repeats),
        "--seed",
        str(args.seed),
    ]
    proc = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


def parse_args(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="16,64,256", type=lambda s: [int(x) for x in s.split(",")])
    parser.add_argument("--repeats", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--measure", action="store_true", help=argparse.SUPPRESS)
    return parser.parse_args(argv)


def main(argv=None):
    args = parse_args(argv)
    if args.measure:
        json.dump(measure(args.sizes, args.repeats, args.seed), sys.stdout)
        return 0

    default = run_child(force_pure=False, args=args)
    pure = run_child(force_pure=True, args=args)
    if default["checksums"] != pure["checksums"]:
        print("backends disagree on LCS lengths", file=sys.stderr)
        return 1

    print(f"default backend: {default['backend']}, fallback backend: {pure['backend']}")
    if default["backend"] == pure["backend"]:
        print("extension not built; both runs used the fallback")
    print(f"{'tokens':>8}  {'default (us)':>14}  {'fallback (us)':>14}  {'speedup':>8}")
    for size in args.sizes:
        fast = default["seconds"][str(size)] * 1e6
        slow = pure["seconds"][str(size)] * 1e6
        print(f"{size:>8}  {fast:>14.1f}  {slow:>14.1f}  {slow / fast:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
