#!/usr/bin/env python3
"""False-alarm, detection-rate and delay checks against their closed-form bounds."""

import argparse

from mucb.cli import lemma_presets
from mucb.lemmas import detection_experiment, false_alarm_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--parallelism", type=int, default=1)
    args = ap.parse_args()

    for name, (kind, p) in lemma_presets().items():
        if kind == "false_alarm":
            r = false_alarm_experiment(p["K"], p["T"], p["w"], p["b"], p["gamma"], args.reps,
                                       master_seed=args.seed, parallelism=args.parallelism)
            ok = r.rate <= r.bound + 3 * r.stderr
            print(f"{name}: rate {r.rate:.5f} +- {r.stderr:.5f}  bound {r.bound:.3g}  {'ok' if ok else 'VIOLATED'}")
        else:
            r = detection_experiment(p["env"], p["w"], p["b"], p["gamma"], args.reps,
                                     master_seed=args.seed, parallelism=args.parallelism)
            print(f"{name}: success {r.success_rate:.4f} (bound {r.probability_bound:.4f}), "
                  f"delay {r.mean_delay:.1f} (bound {r.delay_bound:.1f}), premise "
                  f"{'holds' if r.premise_holds else 'unmet'}")


if __name__ == "__main__":
    main()
