"""Command-line front end: ``run``, ``tune``, ``scaling`` and ``lemmas``.

Exit codes: 0 success, 1 configuration or input error, 2 runtime error.
Floats are written with ``repr`` so reruns with the same seed produce
byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .detect import calibrate_threshold
from .env import make_piecewise_env
from .lemmas import detection_experiment, false_alarm_experiment
from .scaling import AXES, PRESETS, fit_power_law, scaling_study
from .sim import monte_carlo
from .tuning import GAMMA_VARIANTS, TuningError, check_feasibility, tune

log = logging.getLogger("mucb")


class InputError(Exception):
    """Bad command-line input; maps to exit code 1."""


def _num(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_num(v) for v in row])


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _plot_script(path: Path, body: str) -> None:
    path.write_text(_PLOT_HEADER + body)


_PLOT_HEADER = '''"""Regenerate figures from the CSV files next to this script (matplotlib required)."""
import csv
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent


def read(name):
    with open(HERE / name, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {k: [float(r[k]) for r in rows] for k in rows[0]}

'''

_RUN_PLOT = '''
fig, ax = plt.subplots()
for label in {labels!r}:
    d = read(f"regret_{{label}}.csv")
    lo = [m - 2 * s for m, s in zip(d["mean_regret"], d["stderr"])]
    hi = [m + 2 * s for m, s in zip(d["mean_regret"], d["stderr"])]
    ax.plot(d["t"], d["mean_regret"], label=label)
    ax.fill_between(d["t"], lo, hi, alpha=0.2)
ax.set_xlabel("t")
ax.set_ylabel("cumulative pseudo-regret")
ax.legend()
fig.savefig(HERE / "regret.png", dpi=150)
'''

_SCALING_PLOT = '''
import json
d = read("scaling_{axis}.csv")
fit = json.loads((HERE / "fit.json").read_text()) if (HERE / "fit.json").exists() else None
fig, ax = plt.subplots()
ax.errorbar(d["x"], d["y"], yerr=[2 * s for s in d["stderr"]], fmt="o", label="M-UCB")
if fit:
    xs = [min(d["x"]) + i * (max(d["x"]) - min(d["x"])) / 200 for i in range(201)]
    ax.plot(xs, [fit["c"] + fit["a"] * x ** fit["b"] for x in xs], label=f"fit b={{fit['b']:.3f}}")
ax.set_xlabel("{axis}")
ax.set_ylabel("regret / sqrt(T)")
ax.legend()
fig.savefig(HERE / "scaling_{axis}.png", dpi=150)
'''


# -- run ---------------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = load_config(args.config)
    reps = args.reps if args.reps is not None else cfg.reps
    seed = args.seed if args.seed is not None else cfg.seed
    par = args.parallelism if args.parallelism is not None else cfg.parallelism
    out = Path(args.out) if args.out else cfg.output
    out.mkdir(parents=True, exist_ok=True)
    env = cfg.env
    summary = {"K": env.K, "T": env.T, "M": env.M, "change_points": list(env.change_points),
               "reward_family": env.family.value, "reps": reps, "seed": seed, "policies": {}}
    for spec in cfg.policies:
        if spec.name == "m_ucb":
            report = check_feasibility(env, int(spec.params["w"]), float(spec.params["gamma"]))
            print(f"[{spec.label}] " + report.format())
        res = monte_carlo(env, spec, reps, seed, par)
        log.info("%s: %d replications in %.2fs", spec.label, reps, res.wall_seconds)
        _write_csv(out / f"regret_{spec.label}.csv", ["t", "mean_regret", "stderr"],
                   ((t, float(m), float(s)) for t, (m, s) in enumerate(zip(res.mean, res.stderr), start=1)))
        _write_csv(out / f"restarts_{spec.label}.csv", ["t", "restarts"],
                   ((t, int(h)) for t, h in enumerate(res.restart_histogram, start=1)))
        entry = {"policy": spec.name, "params": {k: v for k, v in spec.params.items() if k != "label"},
                 "final_mean_regret": res.final_mean, "final_stderr": res.final_stderr,
                 "mean_restarts": float(res.restart_counts.mean())}
        if spec.name == "m_ucb":
            entry["feasibility"] = report.to_dict()
        if spec.label in cfg.tuned:
            entry["tuning"] = cfg.tuned[spec.label].to_dict()
        summary["policies"][spec.label] = entry
        print(f"{spec.label}: final regret {res.final_mean:.2f} +/- {res.final_stderr:.2f}")
    _write_json(out / "summary.json", summary)
    _plot_script(out / "plot_regret.py", _RUN_PLOT.format(labels=[s.label for s in cfg.policies]))
    return 0


# -- tune --------------------------------------------------------------------

def cmd_tune(args) -> int:
    try:
        tp = tune(args.T, args.K, args.M, args.delta, args.variant, args.w)
    except TuningError as exc:
        raise InputError(str(exc)) from None
    d = tp.to_dict()
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        _write_json(Path(args.out), d)
    if args.json:
        print(json.dumps(d, indent=2, sort_keys=True))
        return 0
    print(f"inputs: T={args.T} K={args.K} M={args.M} delta={args.delta}")
    print(f"w     = {tp.w}")
    print(f"b     = {tp.b!r}")
    print(f"gamma = {tp.gamma!r} ({tp.gamma_variant})")
    for k, v in tp.alternatives.items():
        print(f"{k} = {v!r}" if isinstance(v, float) else f"{k}: unavailable ({v})")
    print(f"L     = {tp.L}")
    return 0


# -- scaling -----------------------------------------------------------------

def _parse_grid(text: str) -> list[int]:
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"bad grid {text!r}; use 2..10 or 2,4,6") from None


def cmd_scaling(args) -> int:
    preset = PRESETS["full" if args.paper_scale else "desk"]
    grid = _parse_grid(args.grid) if args.grid else list(preset.M_grid if args.axis == "M" else preset.K_grid)
    if any(x < 1 for x in grid) or len(set(grid)) != len(grid):
        raise InputError("grid values must be distinct positive integers")
    out = Path(args.out or "results")
    out.mkdir(parents=True, exist_ok=True)
    pts = scaling_study(args.axis, grid, preset, master_seed=args.seed or 0,
                        parallelism=args.parallelism or 1, instances=args.instances, runs=args.runs)
    _write_csv(out / f"scaling_{args.axis}.csv", ["x", "y", "stderr", "runs"],
               ((p.x, p.y, p.stderr, p.runs) for p in pts))
    _plot_script(out / f"plot_scaling_{args.axis}.py", _SCALING_PLOT.format(axis=args.axis))
    for p in pts:
        print(f"{args.axis}={p.x}: regret/sqrt(T) = {p.y:.4f} +/- {p.stderr:.4f}")
    if len(pts) < 3:
        print(f"error: a power-law fit needs at least 3 grid points, got {len(pts)}; points written",
              file=sys.stderr)
        return 1
    fit = fit_power_law(pts)
    _write_json(out / "fit.json", {"axis": args.axis, "c": fit.c, "a": fit.a, "b": fit.b, "sse": fit.sse})
    print(f"fit: y = {fit.c:.4f} + {fit.a:.4f} x^{fit.b:.3f}  (sse {fit.sse:.4g})")
    return 0


# -- lemmas ------------------------------------------------------------------

def lemma_presets():
    """Name -> (kind, arguments) for the three built-in validation setups."""
    fa = {"K": 3, "T": 5000, "w": 100, "gamma": 0.1}
    large = make_piecewise_env(2, [2500, 2500], [[0.9, 0.1], [0.1, 0.9]])
    near = make_piecewise_env(2, [3000, 7000], [[0.9, 0.5], [0.1, 0.5]])
    return {
        "false_alarm": ("false_alarm", {**fa, "b": calibrate_threshold(fa["w"], fa["K"], fa["T"])}),
        "large_change": ("detection", {"env": large, "w": 100, "gamma": 0.1,
                                       "b": calibrate_threshold(100, 2, large.T)}),
        "near_threshold": ("detection", {"env": near, "w": 400, "gamma": 0.1,
                                         "b": calibrate_threshold(400, 2, near.T)}),
    }


_ALARM_COLS = ["preset", "K", "T", "w", "b", "gamma", "reps", "alarms", "rate", "stderr", "bound"]
_DETECTION_COLS = ["preset", "delta", "w", "b", "gamma", "L", "reps", "conditioned", "successes", "success_rate",
             "success_stderr", "probability_bound", "mean_delay", "delay_stderr", "max_delay", "delay_bound",
             "premise_holds"]


def cmd_lemmas(args) -> int:
    reps = args.reps or (20_000 if args.paper_scale else 2000)
    seed = args.seed or 0
    par = args.parallelism or 1
    names = args.preset or list(lemma_presets())
    out = Path(args.out or "results")
    out.mkdir(parents=True, exist_ok=True)
    fa, det = [], []
    for name in names:
        kind, kw = lemma_presets()[name]
        if kind == "false_alarm":
            r = false_alarm_experiment(kw["K"], kw["T"], kw["w"], kw["b"], kw["gamma"], reps,
                                       master_seed=seed, parallelism=par)
            fa.append([name] + [getattr(r, c) for c in _ALARM_COLS[1:]])
            print(f"{name}: false-alarm rate {r.rate:.5f} +/- {r.stderr:.5f}, bound {r.bound:.3g}")
        else:
            r = detection_experiment(kw["env"], kw["w"], kw["b"], kw["gamma"], reps,
                                     master_seed=seed, parallelism=par)
            det.append([name] + [getattr(r, c) for c in _DETECTION_COLS[1:]])
            print(f"{name}: detection rate {r.success_rate:.4f} (bound {r.probability_bound:.4f}), "
                  f"mean delay {r.mean_delay:.1f} (bound {r.delay_bound:.1f})")
    _write_csv(out / "false_alarms.csv", _ALARM_COLS, fa)
    _write_csv(out / "detection.csv", _DETECTION_COLS, det)
    return 0


# -- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed")
    common.add_argument("--reps", type=int, default=None, help="Monte-Carlo replications")
    common.add_argument("--out", default=None, help="output directory (tune: JSON file)")
    common.add_argument("--parallelism", type=int, default=None, help="worker threads")
    common.add_argument("--paper-scale", action="store_true", help="full-size scaling/lemma runs")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="mucb", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", parents=[common], help="simulate the policies of a JSON config")
    r.add_argument("config")
    r.set_defaults(func=cmd_run)

    t = sub.add_parser("tune", parents=[common], help="M-UCB parameters from T, K, M and delta")
    t.add_argument("--K", type=int, required=True)
    t.add_argument("--T", type=int, required=True)
    t.add_argument("--M", type=int, required=True)
    t.add_argument("--delta", type=float, required=True)
    t.add_argument("--variant", choices=GAMMA_VARIANTS, default="capped")
    t.add_argument("--w", type=int, default=None, help="fix the window instead of deriving it")
    t.add_argument("--json", action="store_true", help="print JSON instead of text")
    t.set_defaults(func=cmd_tune)

    s = sub.add_parser("scaling", parents=[common], help="regret scaling in M or K with a power-law fit")
    s.add_argument("--axis", choices=AXES, required=True)
    s.add_argument("--grid", default=None, help="e.g. 2..10 or 2,4,6,8,10")
    s.add_argument("--instances", type=int, default=None)
    s.add_argument("--runs", type=int, default=None)
    s.set_defaults(func=cmd_scaling)

    m = sub.add_parser("lemmas", parents=[common], help="false-alarm and detection checks against bounds")
    m.add_argument("--preset", action="append", choices=sorted(lemma_presets()),
                   help="repeatable; default all")
    m.set_defaults(func=cmd_lemmas)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with code 2
        return 0 if exc.code == 0 else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    for name in ("reps", "parallelism"):
        v = getattr(args, name, None)
        if v is not None and v < 1:
            print(f"error: --{name} must be >= 1", file=sys.stderr)
            return 1
    try:
        return args.func(args)
    except (ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - top-level boundary
        log.debug("runtime failure", exc_info=True)
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
