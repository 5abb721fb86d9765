"""Command-line front end: solve, pathfollow, verify, sweep-t."""

from __future__ import annotations

import argparse
import configparser
import csv
import inspect
import io
import json
import math
import os
import sys
import time
from pathlib import Path
from typing import Optional

import numpy as np

from . import testbed
from .barrier import BarrierContext
from .errors import BilevelError, ConfigError
from .lower import VARIANTS
from .outer import BUDGET_EXHAUSTED, CONVERGED, format_float, run_bfbm
from .pathfollow import run_pathfollow
from .problem import Setting
from .verification import (
    SUITES,
    hypergrad_gap,
    multiplier_gap,
    run_suite,
    summarize,
    value_bound,
)

EXIT_OK, EXIT_FAIL, EXIT_BUDGET = 0, 1, 2

# flag name -> (config key, converter)
_KEYS = {
    "problem": ("problem", str),
    "t": ("t", float),
    "t0": ("t0", float),
    "eps": ("eps", float),
    "eps0": ("eps0", float),
    "rounds": ("rounds", int),
    "max_outer": ("max_outer", int),
    "x0": ("x0", str),
    "seed": ("seed", int),
    "out": ("out", str),
    "suite": ("suite", str),
    "inner_variant": ("inner.variant", str),
    "augment_ball": ("augment_ball", str),
}
_DEFAULTS = {
    "t": 0.1, "t0": 0.1, "eps": 1e-3, "eps0": 1e-2, "rounds": 4, "max_outer": 1000,
    "seed": 0, "suite": "all", "inner.variant": "standard", "augment_ball": "false",
}


def read_config(path: str) -> dict:
    """Flat ``key = value`` file; dotted keys name sections, ``#`` starts a comment."""
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",),
                                       inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        text = Path(path).read_text(encoding="utf-8")
        parser.read_string("[root]\n" + text, source=path)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return dict(parser["root"])


def _as_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


def _convert(text: str):
    """Parse a config value into int, float, tuple of numbers, bool or string."""
    text = text.strip()
    for kind in (int, float):
        try:
            return kind(text)
        except ValueError:
            pass
    if "," in text:
        return tuple(_convert(p) for p in text.split(","))
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


def merge_settings(args: argparse.Namespace) -> dict:
    """Defaults, then config file, then explicit flags."""
    settings = dict(_DEFAULTS)
    if getattr(args, "config", None):
        settings.update(read_config(args.config))
    for flag, (key, _) in _KEYS.items():
        value = getattr(args, flag, None)
        if value is not None and value is not False:
            settings[key] = value
    out = {}
    for key, value in settings.items():
        conv = next((c for k, c in _KEYS.values() if k == key), None)
        try:
            out[key] = conv(value) if conv is not None and value is not None else value
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {value!r}") from exc
    return out


def build_problem(settings: dict):
    """Instantiate the named (or file-described) problem with family parameters."""
    name = settings.get("problem")
    if not name:
        raise ConfigError("unknown problem: none given")
    params = dict(settings)
    if name not in testbed.PROBLEMS and os.path.isfile(name):
        params = {**read_config(name), **{k: v for k, v in settings.items() if k != "problem"}}
        name = params.get("family") or params.get("problem")
    if name not in testbed.PROBLEMS:
        raise ConfigError(f"unknown problem {name!r} (known: {', '.join(sorted(testbed.PROBLEMS))})")
    factory = testbed.PROBLEMS[name]
    accepted = inspect.signature(factory).parameters
    kwargs = {}
    for key, value in params.items():
        if key.startswith(name + "."):
            field = key[len(name) + 1:]
            if field not in accepted:
                raise ConfigError(f"{name} has no parameter {field!r}")
            kwargs[field] = _convert(value) if isinstance(value, str) else value
    augment = _as_bool(params.get("augment_ball", False))
    if augment:
        if "augment_ball" in accepted:
            kwargs["augment_ball"] = True
            if "ball.radius" in params:
                kwargs["ball_radius"] = float(params["ball.radius"])
            if "ball.rule" in params:
                kwargs["ball_rule"] = str(params["ball.rule"])
        else:
            from .problem import augment_with_ball

            prob = factory(**kwargs)
            radius = float(params["ball.radius"]) if "ball.radius" in params else None
            return augment_with_ball(prob, radius, str(params.get("ball.rule", "conservative")))
    return factory(**kwargs)


def parse_x0(text: Optional[str], prob) -> np.ndarray:
    if text is None:
        lo, hi = prob.upper_set.hull()
        return 0.5 * (lo + hi)
    try:
        x = np.array([float(v) for v in str(text).split(",")], float)
    except ValueError as exc:
        raise ConfigError(f"--x0 must be comma-separated reals, got {text!r}") from exc
    if x.shape != (prob.n,):
        raise ConfigError(f"--x0 has {x.shape[0]} entries, problem needs {prob.n}")
    if not prob.upper_set.contains(x, 1e-12):
        raise ConfigError("--x0 lies outside the upper feasible set")
    return x


def _validate(settings: dict, prob) -> None:
    variant = settings["inner.variant"]
    if variant not in VARIANTS:
        raise ConfigError(f"inner.variant must be one of {VARIANTS}, got {variant!r}")
    for key in ("t", "t0"):
        t = settings[key]
        if not 0 < t <= prob.constants.t_max:
            raise ConfigError(f"{key}={t} must lie in (0, {prob.constants.t_max}] for {prob.name}")
    for key in ("eps", "eps0"):
        if not settings[key] > 0:
            raise ConfigError(f"{key} must be positive")
    if settings["rounds"] < 1:
        raise ConfigError("rounds must be at least 1")
    if prob.setting == Setting.LINEAR_LP and not prob.ball_augmented:
        c = prob.constants
        if not (c.lp_sigma > 0 and c.lp_slack_max > 0):
            raise ConfigError(f"{prob.name} is a linear lower level without sigma/H; use --augment-ball")


def _write(path: Optional[str], text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")


def _exit_code(status: str) -> int:
    return {CONVERGED: EXIT_OK, BUDGET_EXHAUSTED: EXIT_BUDGET}.get(status, EXIT_FAIL)


def _setup(args):
    settings = merge_settings(args)
    prob = build_problem(settings)
    _validate(settings, prob)
    return settings, prob


def cmd_solve(args) -> int:
    settings, prob = _setup(args)
    x0 = parse_x0(settings.get("x0"), prob)
    start = time.perf_counter()
    res = run_bfbm(BarrierContext(settings["t"], prob), x0, settings["eps"], settings["max_outer"],
                   seed=settings["seed"], variant=settings["inner.variant"])
    _write(settings.get("out"), res.trace.to_csv())
    print(f"{prob.name}: status={res.status_label} best_stationarity={res.best_stationarity:.6g} "
          f"iterations={len(res.trace)} x_out={np.array2string(res.x_out, precision=6)} "
          f"wall={time.perf_counter() - start:.2f}s", file=sys.stderr)
    return _exit_code(res.status)


def _round_trace_path(out: str, i: int) -> str:
    p = Path(out)
    return str(p.with_name(f"{p.stem}.round{i}{p.suffix or '.csv'}"))


def cmd_pathfollow(args) -> int:
    settings, prob = _setup(args)
    x0 = parse_x0(settings.get("x0"), prob)
    start = time.perf_counter()
    path = run_pathfollow(prob, x0, settings["t0"], settings["eps0"], settings["rounds"],
                          settings["max_outer"], variant=settings["inner.variant"],
                          seed=settings["seed"])
    out = settings.get("out")
    _write(out, path.to_csv())
    if out is not None:
        for r in path.rounds:
            _write(_round_trace_path(out, r.i), r.result.trace.to_csv())
    print(f"{prob.name}: status={path.status} rounds={len(path.rounds)} "
          f"final_stationarity={path.final.best_stationarity:.6g} "
          f"wall={time.perf_counter() - start:.2f}s", file=sys.stderr)
    if path.status == CONVERGED or path.status == BUDGET_EXHAUSTED:
        return _exit_code(path.status)
    return EXIT_FAIL


def cmd_verify(args) -> int:
    settings = merge_settings(args)
    suite = settings["suite"]
    if suite != "all" and suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; choose from {', '.join(SUITES + ('all',))}")
    problems = [build_problem(settings)] if settings.get("problem") else None
    names = SUITES if suite == "all" else (suite,)
    all_checks, parts = [], []
    for name in names:
        checks = run_suite(name, problems, seed=settings["seed"])
        all_checks += checks
        parts.append(summarize(name, checks))
        for c in checks:
            if not c.passed:
                print(f"FAIL {c.suite} {c.problem} {c.label}: {c.value:.6g} > {c.bound:.6g}",
                      file=sys.stderr)
    report = summarize(suite, all_checks)
    if suite == "all":
        report["suites"] = parts
    _write(settings.get("out"), json.dumps(report, indent=2) + "\n")
    if settings.get("out") is not None:
        print(json.dumps(report), file=sys.stderr)
    return EXIT_OK if report["passes"] == report["checks"] else EXIT_FAIL


SWEEP_HEADER = ("t", "x_probe", "value_gap", "value_bound", "hypergrad_gap", "multiplier_gap")


def sweep_rows(prob, x: np.ndarray, ts, eps_s: float = 1e-10) -> list:
    """One row per t: value gap, its bound, hypergradient gap and multiplier gap."""
    phi = testbed.brute_force_hyperfunction(prob, x)
    cert = testbed.brute_force_lower(prob, x)
    lambdas = cert.lambdas if math.isfinite(cert.stationarity_residual) else None
    rows, warm = [], None
    for t in ts:
        hg_gap, sol = hypergrad_gap(prob, x, t, eps_s=eps_s, warm=warm)
        warm = sol.y_tilde
        value_gap = abs(prob.f(x, sol.y_tilde) - phi)
        mult = math.nan
        if lambdas is not None:
            mult, _ = multiplier_gap(prob, x, t, eps_s=eps_s, lambdas=lambdas, warm=warm)
        rows.append((t, x, value_gap, value_bound(prob, x, t), hg_gap, mult))
    return rows


def cmd_sweep_t(args) -> int:
    settings, prob = _setup(args)
    if settings.get("x0") is None and prob.name == "example1":
        settings["x0"] = "0.5"
    x = parse_x0(settings.get("x0"), prob)
    t0 = args.t if args.t is not None else settings["t0"]
    ts = [t0 / 2**i for i in range(settings["rounds"])]
    rows = sweep_rows(prob, x, ts)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for t, xp, vg, vb, hg, mg in rows:
        writer.writerow([format_float(t), ";".join(format_float(v) for v in xp), format_float(vg),
                         format_float(vb), format_float(hg), format_float(mg)])
    _write(settings.get("out"), buf.getvalue())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="barrier-bilevel",
                                     description="Log-barrier bilevel solver with certified step sizes.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--problem", help="built-in problem name or path to a problem config file")
        p.add_argument("--config", help="flat key = value configuration file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output file (stdout if omitted)")
        p.add_argument("--inner-variant", dest="inner_variant", choices=VARIANTS)
        p.add_argument("--augment-ball", dest="augment_ball", action="store_const", const="true")
        p.add_argument("--x0", help="comma-separated starting point")

    p = sub.add_parser("solve", help="run the outer solver at a fixed t")
    common(p)
    p.add_argument("--t", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--max-outer", dest="max_outer", type=int)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("pathfollow", help="outer solver over a halving schedule of t and eps")
    common(p)
    p.add_argument("--t0", type=float)
    p.add_argument("--eps0", type=float)
    p.add_argument("--rounds", type=int)
    p.add_argument("--max-outer", dest="max_outer", type=int, help="outer budget per round")
    p.set_defaults(func=cmd_pathfollow)

    p = sub.add_parser("verify", help="run property suites and emit a JSON report")
    common(p)
    p.add_argument("--suite", help=f"one of {', '.join(SUITES)}, all")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep-t", help="gaps to the unbarriered problem over a halving t grid")
    common(p)
    p.add_argument("--t", type=float, help="largest t (alias of --t0)")
    p.add_argument("--t0", type=float)
    p.add_argument("--rounds", type=int, help="number of t values")
    p.set_defaults(func=cmd_sweep_t)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, BilevelError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
