"""JSON experiment configs with line-numbered diagnostics.

Schema (keys not listed are rejected)::

    {
      "environment": {
        "segments": [{"length": 2500, "means": [0.9, 0.1]}, ...],   # or
        "csv": "segments.csv",                                     # path, relative to the config
        "reward_family": "bernoulli",                              # optional
        "noise_scale": 0.1                                         # optional, gaussian/uniform only
      },
      "tuning": {"delta": 0.6, "M": 5, "T": 100000, "variant": "capped", "w": 800},
      "policies": [
        {"name": "m_ucb", "params": {"w": 800, "b": 108.1, "gamma": 0.2}},
        {"name": "m_ucb", "params": "auto"},
        {"name": "m_ucb", "params": {"from": "tune.json"}},
        {"name": "sw_ucb", "params": "auto", "label": "sw"}
      ],
      "reps": 100, "seed": 0, "output": "results", "parallelism": 1
    }

``"auto"`` derives parameters from the ``tuning`` block (top level, or a
per-policy ``"tuning"`` that overrides it). M-UCB needs ``delta``, ``M`` and
``T``; the baselines need ``M`` and ``T``. ``w`` and ``variant`` are optional.
"""

from __future__ import annotations

import json
import json.decoder
import json.scanner
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .env import Environment, RewardFamily, load_env_csv, make_piecewise_env
from .policies import POLICY_NAMES, PolicySpec, default_params, make_policy
from .tuning import GAMMA_VARIANTS, TunedParams, TuningError, tune


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = "config"):
        self.line = line
        loc = f"{source}:{line}" if line else source
        super().__init__(f"{loc}: {message}")


class _Obj(dict):
    """A decoded JSON object that remembers where it and its keys start."""

    line: int = 0
    key_lines: dict

    def line_of(self, key: str) -> int:
        return self.key_lines.get(key, self.line)


class _LineDecoder(json.JSONDecoder):
    def __init__(self):
        super().__init__()

        def parse_object(s_and_end, strict, scan_once, object_hook, object_pairs_hook, memo=None):
            s, start = s_and_end
            obj, end = json.decoder.JSONObject(s_and_end, strict, scan_once, None, None, memo)
            out = _Obj(obj)
            out.line = s.count("\n", 0, start) + 1
            out.key_lines = {}
            for key in obj:
                m = re.compile(re.escape(json.dumps(key)) + r"\s*:").search(s, start, end)
                if m:
                    out.key_lines[key] = s.count("\n", 0, m.start()) + 1
            return out, end

        self.parse_object = parse_object
        self.scan_once = json.scanner.py_make_scanner(self)


def parse_json(text: str, source: str = "config"):
    try:
        return _LineDecoder().decode(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", exc.lineno, source) from None


@dataclass
class ExperimentConfig:
    env: Environment
    policies: list[PolicySpec]
    reps: int = 100
    seed: int = 0
    output: Path = Path("results")
    parallelism: int = 1
    tuned: dict[str, TunedParams] = field(default_factory=dict)  # label -> params, M-UCB only


_TOP_KEYS = {"environment", "tuning", "policies", "reps", "seed", "output", "parallelism"}
_ENV_KEYS = {"segments", "csv", "reward_family", "noise_scale"}
_TUNING_KEYS = {"delta", "M", "T", "variant", "w"}
_POLICY_KEYS = {"name", "params", "label", "tuning"}


class _Ctx:
    def __init__(self, source: str, base: Path):
        self.source = source
        self.base = base

    def fail(self, msg: str, line: int | None) -> ConfigError:
        return ConfigError(msg, line, self.source)

    def obj(self, value, where: str, line: int) -> _Obj:
        if not isinstance(value, _Obj):
            raise self.fail(f"{where} must be an object", line)
        return value

    def keys(self, obj: _Obj, allowed: set, where: str) -> None:
        for key in obj:
            if key not in allowed:
                raise self.fail(f"unknown key {where}.{key}; allowed: {', '.join(sorted(allowed))}",
                                obj.line_of(key))

    def require(self, obj: _Obj, key: str, where: str):
        if key not in obj:
            raise self.fail(f"missing required key {where}.{key}", obj.line)
        return obj[key]

    def integer(self, obj: _Obj, key: str, where: str, minimum: int | None = None) -> int:
        v = obj[key]
        if isinstance(v, bool) or not isinstance(v, int):
            raise self.fail(f"{where}.{key} must be an integer, got {v!r}", obj.line_of(key))
        if minimum is not None and v < minimum:
            raise self.fail(f"{where}.{key} must be >= {minimum}, got {v}", obj.line_of(key))
        return v

    def number(self, obj: _Obj, key: str, where: str) -> float:
        v = obj[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise self.fail(f"{where}.{key} must be a number, got {v!r}", obj.line_of(key))
        return float(v)


def _parse_environment(ctx: _Ctx, env: _Obj) -> Environment:
    ctx.keys(env, _ENV_KEYS, "environment")
    family = env.get("reward_family", "bernoulli")
    try:
        family = RewardFamily.parse(family)
    except ValueError as exc:
        raise ctx.fail(f"environment.reward_family: {exc}", env.line_of("reward_family")) from None
    scale = ctx.number(env, "noise_scale", "environment") if "noise_scale" in env else 0.1
    has_seg, has_csv = "segments" in env, "csv" in env
    if has_seg == has_csv:
        raise ctx.fail("environment needs exactly one of segments or csv", env.line)
    if has_csv:
        path = env["csv"]
        if not isinstance(path, str):
            raise ctx.fail("environment.csv must be a path string", env.line_of("csv"))
        full = (ctx.base / path) if not Path(path).is_absolute() else Path(path)
        if not full.exists():
            raise ctx.fail(f"environment.csv: file not found: {full}", env.line_of("csv"))
        try:
            return load_env_csv(full, family, scale)
        except ValueError as exc:
            raise ctx.fail(f"environment.csv: {exc}", env.line_of("csv")) from None
    segs = env["segments"]
    if not isinstance(segs, list) or not segs:
        raise ctx.fail("environment.segments must be a non-empty list", env.line_of("segments"))
    lengths, means = [], []
    for i, seg in enumerate(segs):
        where = f"environment.segments[{i}]"
        seg = ctx.obj(seg, where, env.line_of("segments"))
        ctx.keys(seg, {"length", "means"}, where)
        ctx.require(seg, "length", where)
        mu = ctx.require(seg, "means", where)
        lengths.append(ctx.integer(seg, "length", where, minimum=1))
        if not isinstance(mu, list) or not mu or any(isinstance(m, bool) or not isinstance(m, (int, float))
                                                     for m in mu):
            raise ctx.fail(f"{where}.means must be a non-empty list of numbers", seg.line_of("means"))
        if means and len(mu) != len(means[0]):
            raise ctx.fail(f"{where}.means has {len(mu)} arms, expected {len(means[0])}", seg.line_of("means"))
        means.append([float(m) for m in mu])
    try:
        return make_piecewise_env(len(means[0]), lengths, means, family, scale)
    except ValueError as exc:
        raise ctx.fail(f"environment.segments: {exc}", env.line_of("segments")) from None


def _parse_tuning(ctx: _Ctx, block, where: str, line: int) -> _Obj:
    block = ctx.obj(block, where, line)
    ctx.keys(block, _TUNING_KEYS, where)
    if "variant" in block and block["variant"] not in GAMMA_VARIANTS:
        raise ctx.fail(f"{where}.variant must be one of {', '.join(GAMMA_VARIANTS)}", block.line_of("variant"))
    return block


def _auto_params(ctx: _Ctx, name: str, env: Environment, tuning: _Obj | None, where: str,
                 line: int) -> tuple[dict, TunedParams | None]:
    if name == "ucb1":
        return {"gamma": 0.0}, None
    needed = ("delta", "M", "T") if name == "m_ucb" else ("M", "T")
    if tuning is None:
        raise ctx.fail(f"{where}: params \"auto\" needs a tuning block with {', '.join(needed)}", line)
    missing = [k for k in needed if k not in tuning]
    if missing:
        raise ctx.fail(f"{where}: params \"auto\" needs tuning.{', tuning.'.join(missing)}", tuning.line)
    T = ctx.integer(tuning, "T", "tuning", minimum=2)
    M = ctx.integer(tuning, "M", "tuning", minimum=1)
    if name == "m_ucb":
        delta = ctx.number(tuning, "delta", "tuning")
        w = ctx.integer(tuning, "w", "tuning", minimum=2) if "w" in tuning else None
        try:
            tp = tune(T, env.K, M, delta, tuning.get("variant", "capped"), w)
        except (TuningError, ValueError) as exc:
            raise ctx.fail(f"{where}: tuning failed: {exc}", tuning.line) from None
        return {"w": tp.w, "b": tp.b, "gamma": tp.gamma}, tp
    return default_params(name, env.K, T, M), None


def _from_file(ctx: _Ctx, ref, where: str, line: int) -> tuple[dict, TunedParams]:
    if not isinstance(ref, str):
        raise ctx.fail(f"{where}.params.from must be a path string", line)
    full = ctx.base / ref if not Path(ref).is_absolute() else Path(ref)
    try:
        raw = json.loads(full.read_text())
        tp = TunedParams.from_dict(raw)
    except FileNotFoundError:
        raise ctx.fail(f"{where}.params.from: file not found: {full}", line) from None
    except (ValueError, KeyError, TypeError) as exc:
        raise ctx.fail(f"{where}.params.from: not a tuning result ({exc})", line) from None
    return {"w": tp.w, "b": tp.b, "gamma": tp.gamma}, tp


def _parse_policy(ctx: _Ctx, pol, i: int, env: Environment, tuning: _Obj | None,
                  line: int) -> tuple[PolicySpec, TunedParams | None]:
    where = f"policies[{i}]"
    pol = ctx.obj(pol, where, line)
    ctx.keys(pol, _POLICY_KEYS, where)
    name = ctx.require(pol, "name", where)
    if name not in POLICY_NAMES:
        raise ctx.fail(f"{where}.name: unknown policy {name!r}; valid policies: {', '.join(POLICY_NAMES)}",
                       pol.line_of("name"))
    if "tuning" in pol:
        local = _parse_tuning(ctx, pol["tuning"], f"{where}.tuning", pol.line_of("tuning"))
        merged = _Obj({**(tuning or {}), **local})
        merged.line, merged.key_lines = local.line, {**getattr(tuning, "key_lines", {}), **local.key_lines}
        tuning = merged
    params = pol.get("params", "auto" if name == "ucb1" else None)
    pline = pol.line_of("params")
    tuned = None
    if params is None:
        raise ctx.fail(f"missing required key {where}.params", pol.line)
    if params == "auto":
        params, tuned = _auto_params(ctx, name, env, tuning, where, pline)
    elif isinstance(params, _Obj) and "from" in params:
        if name != "m_ucb":
            raise ctx.fail(f"{where}.params.from is only meaningful for m_ucb", pline)
        params, tuned = _from_file(ctx, params["from"], where, params.line_of("from"))
    elif isinstance(params, _Obj):
        params = dict(params)
    else:
        raise ctx.fail(f"{where}.params must be an object, \"auto\" or {{\"from\": path}}", pline)
    if "label" in pol:
        if not isinstance(pol["label"], str) or not re.fullmatch(r"[A-Za-z0-9_.-]+", pol["label"]):
            raise ctx.fail(f"{where}.label must match [A-Za-z0-9_.-]+", pol.line_of("label"))
        params["label"] = pol["label"]
    spec = PolicySpec(name, params)
    try:  # constructor validation only
        make_policy(spec, env.K, np.random.default_rng(0))
    except (KeyError, TypeError) as exc:
        raise ctx.fail(f"{where}.params: missing or bad parameter {exc}", pline) from None
    except ValueError as exc:
        raise ctx.fail(f"{where}.params: {exc}", pline) from None
    return spec, tuned


def _unique_labels(specs: list[PolicySpec]) -> list[PolicySpec]:
    seen: dict[str, int] = {}
    out = []
    for s in specs:
        label = s.label
        n = seen.get(label, 0) + 1
        seen[label] = n
        if n > 1:
            s = PolicySpec(s.name, {**s.params, "label": f"{label}_{n}"})
        out.append(s)
    return out


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(path)) from None
    return parse_config(text, source=str(path), base=path.parent)


def parse_config(text: str, source: str = "config", base: Path = Path(".")) -> ExperimentConfig:
    ctx = _Ctx(source, Path(base))
    root = ctx.obj(parse_json(text, source), "the config", 1)
    ctx.keys(root, _TOP_KEYS, "config")
    env = _parse_environment(ctx, ctx.obj(ctx.require(root, "environment", "config"), "environment",
                                          root.line_of("environment")))
    tuning = (_parse_tuning(ctx, root["tuning"], "tuning", root.line_of("tuning"))
              if "tuning" in root else None)
    pols = ctx.require(root, "policies", "config")
    if not isinstance(pols, list) or not pols:
        raise ctx.fail("policies must be a non-empty list", root.line_of("policies"))
    specs, tuned = [], []
    for i, p in enumerate(pols):
        spec, tp = _parse_policy(ctx, p, i, env, tuning, root.line_of("policies"))
        specs.append(spec)
        tuned.append(tp)
    specs = _unique_labels(specs)
    cfg = ExperimentConfig(env=env, policies=specs,
                           tuned={s.label: tp for s, tp in zip(specs, tuned) if tp is not None})
    if "reps" in root:
        cfg.reps = ctx.integer(root, "reps", "config", minimum=1)
    if "seed" in root:
        cfg.seed = ctx.integer(root, "seed", "config", minimum=0)
    if "parallelism" in root:
        cfg.parallelism = ctx.integer(root, "parallelism", "config", minimum=1)
    if "output" in root:
        if not isinstance(root["output"], str):
            raise ctx.fail("config.output must be a path string", root.line_of("output"))
        out = Path(root["output"])
        cfg.output = out if out.is_absolute() else ctx.base / out
    else:
        cfg.output = ctx.base / "results"
    return cfg
