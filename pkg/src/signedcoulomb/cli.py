"""Command-line front end: ``signedcoulomb <subcommand> CONFIG [options]``.

Exit codes: 0 success, 1 invalid input (report on stderr), 2 a verification
suite ran and at least one of its checks failed.
"""

from __future__ import annotations

import argparse
import datetime
import inspect
import math
import os
import sys
from dataclasses import asdict, fields
from pathlib import Path
from typing import Any

import yaml

from . import bessel, engine_ode, engine_sde, verify
from . import observables as obs
from .core import SimParams, ValidationError, load_yaml, split_config, validate
from .output import write_events_jsonl, write_json, write_path_csv, write_trajectory_csv

EXIT_OK, EXIT_INVALID, EXIT_VERIFY_FAILED = 0, 1, 2

BESSEL_KEYS = {"delta": None, "r": None, "t_end": None, "dt": 1e-3, "seed": None}
# keyword arguments of the suite functions that the config may not set
_RESERVED = {"params", "n_runs", "jobs"}


def _suite_keys(name: str) -> set[str]:
    sig = inspect.signature(verify.SUITES[name])
    return {p for p in sig.parameters if p not in _RESERVED}


def _documented_keys() -> dict[str, set[str] | None]:
    keys: dict[str, set[str] | None] = {f.name: None for f in fields(SimParams)}
    keys["bessel"] = set(BESSEL_KEYS)
    keys["verify"] = {"suite", "n_runs"}.union(*(_suite_keys(s) for s in verify.SUITES))
    return keys


def apply_overrides(data: dict[str, Any], overrides: list[str]) -> dict[str, Any]:
    """Apply ``key=value`` / ``section.key=value`` overrides in order (last write wins).

    Values are parsed as YAML, so ``signs=[1,-1]`` and ``verify.t_grid=[0.5,1]``
    work. Only documented keys are accepted.
    """
    documented = _documented_keys()
    data = dict(data)
    problems = []
    for item in overrides:
        key, sep, raw = item.partition("=")
        key = key.strip()
        if not sep or not key:
            problems.append(f"override {item!r} is not of the form key=value")
            continue
        parts = key.split(".")
        value = load_yaml(raw)
        if parts[0] not in documented or len(parts) > 2:
            problems.append(f"override {key!r} does not name a documented key")
            continue
        sub = documented[parts[0]]
        if sub is None:
            if len(parts) != 1:
                problems.append(f"override {key!r}: {parts[0]!r} has no subkeys")
                continue
            data[key] = value
        else:
            if len(parts) != 2 or parts[1] not in sub:
                problems.append(f"override {key!r} does not name a documented key")
                continue
            section = dict(data.get(parts[0]) or {})
            section[parts[1]] = value
            data[parts[0]] = section
    if problems:
        raise ValidationError(problems)
    return data


def _load(args) -> tuple[SimParams | None, dict[str, Any]]:
    path = Path(args.config)
    if not path.is_file():
        raise ValidationError([f"config file {str(path)!r} not found"])
    try:
        data = load_yaml(path.read_text())
    except yaml.YAMLError as exc:
        raise ValidationError([f"config file does not parse: {exc}"]) from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ValidationError(["config file must contain a mapping at top level"])
    data = apply_overrides(data, args.set or [])
    documented = _documented_keys()
    unknown = [k for k in data if k not in documented]
    if unknown:
        raise ValidationError([f"unknown config key {k!r}" for k in unknown])
    return split_config(data)


def _need_params(params: SimParams | None) -> SimParams:
    if params is None:
        raise ValidationError(["config defines no simulation parameters (gamma, signs, x0, t_end)"])
    validate(params)
    return params


def _section(extras: dict[str, Any], name: str, allowed: set[str]) -> dict[str, Any]:
    sec = extras.get(name) or {}
    if not isinstance(sec, dict):
        raise ValidationError([f"section {name!r} must be a mapping"])
    bad = sorted(set(sec) - allowed)
    if bad:
        raise ValidationError([f"unknown key {name}.{k}" for k in bad])
    return sec


def _outdir(args) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _metadata(out: Path, args, resolved: dict[str, Any]) -> None:
    from importlib.metadata import PackageNotFoundError, version

    try:
        ver = version("artifact")
    except PackageNotFoundError:  # pragma: no cover - source checkout
        ver = "unknown"
    write_json(out / "metadata.json", {
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "package_version": ver,
        "command": args.command,
        "config_path": str(args.config),
        "overrides": list(args.set or []),
        "resolved_config": resolved,
    })


def cmd_simulate_sde(args, params, extras) -> int:
    params = _need_params(params)
    res = engine_sde.run_sde(params, record=True)
    out = _outdir(args)
    write_trajectory_csv(out / "trajectory.csv", res.samples)
    write_events_jsonl(out / "events.jsonl", res.events)
    write_json(out / "summary.json", res.summary(params.signs))
    _metadata(out, args, params.to_dict())
    print(f"{res.terminated.value}: t={res.final_time:.6g}, {res.n_events} events, "
          f"{res.final.n_alive} particles alive -> {out}")
    return EXIT_OK


def cmd_simulate_ode(args, params, extras) -> int:
    params = _need_params(params)
    res = engine_ode.run_ode(params)
    out = _outdir(args)
    write_trajectory_csv(out / "trajectory.csv", res.samples)
    summary: dict[str, Any] = {
        "terminated": res.terminated.value,
        "final_time": res.samples[-1][0],
        "n_samples": len(res.samples),
        "collision": None,
    }
    if res.collision_info is not None:
        c = res.collision_info
        summary["collision"] = {"time": c.time, "indices": list(c.indices), "site": list(c.site)}
    if len(res.samples) > 1:
        summary["conservation"] = asdict(engine_ode.conservation_report(res, params))
    write_json(out / "summary.json", summary)
    _metadata(out, args, params.to_dict())
    print(f"{res.terminated.value}: t={summary['final_time']:.10g} -> {out}")
    return EXIT_OK


def cmd_bessel(args, params, extras) -> int:
    sec = dict(BESSEL_KEYS)
    sec.update(_section(extras, "bessel", set(BESSEL_KEYS)))
    missing = [k for k in ("delta", "r", "t_end") if sec[k] is None]
    if missing:
        raise ValidationError([f"missing key bessel.{k}" for k in missing])
    if sec["seed"] is None:
        sec["seed"] = params.seed if params is not None else 0
    problems = []
    try:
        delta, r, t_end, dt, seed = (float(sec["delta"]), float(sec["r"]), float(sec["t_end"]),
                                     float(sec["dt"]), int(sec["seed"]))
    except (TypeError, ValueError) as exc:
        raise ValidationError([f"malformed bessel section: {exc}"]) from exc
    if not math.isfinite(delta):
        problems.append("bessel.delta must be finite")
    if not r >= 0:
        problems.append("bessel.r must be nonnegative")
    if not t_end > 0:
        problems.append("bessel.t_end must be positive")
    if not 0 < dt <= t_end:
        problems.append("bessel.dt must lie in (0, t_end]")
    if problems:
        raise ValidationError(problems)
    path = bessel.simulate_sqb0(delta, r, dt, t_end, seed)
    out = _outdir(args)
    write_path_csv(out / "path.csv", path.times, path.values)
    write_json(out / "summary.json", {
        "delta": delta, "r": r, "dt": dt, "t_end": t_end, "seed": seed,
        "hit_zero_at": path.hit_zero_at, "final_value": float(path.values[-1]),
    })
    _metadata(out, args, {"bessel": {"delta": delta, "r": r, "dt": dt, "t_end": t_end, "seed": seed}})
    hit = "never hit 0" if path.hit_zero_at is None else f"hit 0 at t={path.hit_zero_at:.6g}"
    print(f"SqB0({delta:g}, {r:g}) on [0, {t_end:g}]: {hit} -> {out}")
    return EXIT_OK


def cmd_verify(args, params, extras) -> int:
    params = _need_params(params)
    sec = dict(extras.get("verify") or {})
    suite = sec.pop("suite", None)
    if suite not in verify.SUITES:
        raise ValidationError([f"verify.suite must be one of {sorted(verify.SUITES)}, got {suite!r}"])
    n_runs = sec.pop("n_runs", 500)
    allowed = _suite_keys(suite)
    bad = sorted(set(sec) - allowed)
    if bad:
        raise ValidationError([f"verify.{k} is not an option of suite {suite!r}" for k in bad])
    if not isinstance(n_runs, int) or n_runs < 2:
        raise ValidationError(["verify.n_runs must be an integer >= 2"])
    try:
        report = verify.SUITES[suite](params, n_runs, jobs=args.jobs, **sec)
    except ValidationError:
        raise
    except (TypeError, ValueError) as exc:
        raise ValidationError([f"suite {suite!r}: {exc}"]) from exc
    out = _outdir(args)
    write_json(out / "report.json", report.to_json())
    _metadata(out, args, {**params.to_dict(), "verify": {"suite": suite, "n_runs": n_runs, **sec}})
    print(report.table())
    if not report.passed:
        print("failing checks:\n  " + "\n  ".join(report.failures()), file=sys.stderr)
        return EXIT_VERIFY_FAILED
    return EXIT_OK


def cmd_split_demo(args, params, extras) -> int:
    params = _need_params(params)
    x, b, g = params.x0, params.signs, params.gamma
    n = x.n_alive
    if n < 2:
        raise ValidationError(["split-demo needs at least two particles"])
    R = obs.dispersion(x)
    threshold = math.sqrt(2 * R / n**3)
    K = obs.split_cluster(x)
    P = obs.associated_partition(x, threshold)
    d_opp, d_same = obs.sign_extremes(x, b)
    good = obs.in_good_set(x, b) if d_opp is not None and d_same is not None else None
    rest = tuple(int(i) for i in x.alive_indices if int(i) not in K)
    result = {
        "dispersion": R,
        "threshold": threshold,
        "partition": [list(bl) for bl in P],
        "split": list(K),
        "separation": obs.cluster_separation(x, K),
        "clusters": [asdict(obs.cluster_summary(x, bl, b, g)) for bl in (K, rest)],
        "d_opp": d_opp,
        "d_same": d_same,
        "good_set_constant": obs.good_set_constant(n),
        "in_good_set": good,
    }
    out = _outdir(args)
    write_json(out / "split.json", result)
    _metadata(out, args, params.to_dict())
    print(f"R = {R:.6g}, threshold sqrt(2R/N^3) = {threshold:.6g}")
    print(f"associated partition: {[list(bl) for bl in P]}")
    print(f"split K = {list(K)}: separation {result['separation']:.6g} >= {threshold:.6g}")
    for c in result["clusters"]:
        print(f"  cluster {c['index_set']}: dispersion {c['dispersion']:.6g}, "
              f"bessel dimension {c['bessel_dimension']:g}")
    return EXIT_OK


COMMANDS = {
    "simulate-sde": (cmd_simulate_sde, "stochastic run with removals: trajectory.csv, events.jsonl, summary.json"),
    "simulate-ode": (cmd_simulate_ode, "deterministic run to the first collision: trajectory.csv, summary.json"),
    "bessel": (cmd_bessel, "one squared Bessel path from the 'bessel' section: path.csv (t, R)"),
    "verify": (cmd_verify, "run the statistical suite named in the 'verify' section: report.json"),
    "split-demo": (cmd_split_demo, "cluster split of x0 with its separation bound: split.json"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="signedcoulomb",
        description="Simulate and verify the planar signed Coulomb particle system.",
        epilog="All randomness is controlled by the config's seed key. "
               "Exit codes: 0 ok, 1 invalid input, 2 verification failed.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("config", help="YAML config file")
        p.add_argument("-o", "--output-dir", default=".", help="directory for output files (created)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key after parsing, e.g. --set gamma=2 or "
                            "--set verify.n_runs=100 (repeatable; last write wins)")
        p.add_argument("-j", "--jobs", type=int, default=os.cpu_count() or 1,
                       help="worker processes for ensembles (default: available CPUs)")
    return parser


def run_cli(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.jobs < 1:
            raise ValidationError(["--jobs must be at least 1"])
        params, extras = _load(args)
        return COMMANDS[args.command][0](args, params, extras)
    except ValidationError as exc:
        print("invalid input:", file=sys.stderr)
        for p in exc.problems:
            print(f"  - {p}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(run_cli())
