#!/usr/bin/env python3
"""M-UCB against D-UCB, SW-UCB, EXP3 and EXP3.S on the level-shift instance.

Prints final regrets and the M-UCB/baseline ratios; ``--json`` writes them too.
"""

import argparse
import json

from mucb.comparison import compare, level_shift_instance


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--parallelism", type=int, default=1)
    ap.add_argument("--segment-length", type=int, default=4_800)
    ap.add_argument("--variant", choices=["capped", "empirical"], default="capped")
    ap.add_argument("--json", default=None, help="write the summary here")
    args = ap.parse_args()

    env = level_shift_instance(segment_length=args.segment_length)
    cmp = compare(env, args.reps, args.seed, args.parallelism, args.variant)
    tp = cmp.tuned
    print(f"K={env.K} M={env.M} T={env.T}  w={tp.w} b={tp.b:.3f} gamma={tp.gamma:.4f}")
    for name, res in cmp.results.items():
        ratio = "" if name == "m_ucb" else f"  ratio {cmp.ratio(name):.3f}"
        print(f"{name:8s} {res.final_mean:10.1f} +- {res.final_stderr:6.1f}{ratio}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(cmp.to_dict(), fh, indent=2)


if __name__ == "__main__":
    main()
