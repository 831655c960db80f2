#!/usr/bin/env python3
"""Regret scaling in M and K with the power-law fit, at desk or full scale."""

import argparse

from mucb.scaling import PRESETS, fit_power_law, scaling_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--axis", choices=["M", "K", "both"], default="both")
    ap.add_argument("--scale", choices=sorted(PRESETS), default="desk")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--parallelism", type=int, default=1)
    args = ap.parse_args()

    preset = PRESETS[args.scale]
    for axis in (["M", "K"] if args.axis == "both" else [args.axis]):
        grid = preset.M_grid if axis == "M" else preset.K_grid
        pts = scaling_study(axis, grid, preset, args.seed, args.parallelism)
        for p in pts:
            print(f"{axis}={p.x:3d}  y={p.y:.4f} +- {p.stderr:.4f}")
        fit = fit_power_law(pts)
        print(f"{axis}: y = {fit.c:.4f} + {fit.a:.4f} * {axis}^{fit.b:.3f}  (sse {fit.sse:.3g})\n")


if __name__ == "__main__":
    main()
