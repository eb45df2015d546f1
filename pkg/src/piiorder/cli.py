"""Command-line front end: check order conditions, simulate couplings,
and run Monte-Carlo verification from a JSON experiment config.

Exit codes: 0 order satisfied / no violation detected, 1 violated,
2 inconclusive, 3 simulation refused (checker failed without --force, or
the requested coupling cannot be built), 64 malformed configuration.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .characteristics import PIICharacteristics, align_pair, parse_process_spec
from .convex_coupling import build_addon, simulate_convex_coupled
from .cut_coupling import build_plan, simulate_cut_coupled
from .ito_coupling import simulate_coupled
from .order_conditions import (
    CutPoint,
    TruncationLadder,
    check_cut,
    check_convex_majorization,
    check_drift,
    check_st_tails,
    default_horizon,
    kernel_order_defn_check,
)
from .verify import TestFunctionFamily, mc_order_test

__all__ = ["ExperimentConfig", "cmd_check", "cmd_simulate", "cmd_verify", "main"]

EXIT_SATISFIED = 0
EXIT_VIOLATED = 1
EXIT_INCONCLUSIVE = 2
EXIT_REFUSED = 3
EXIT_CONFIG = 64

_ORDERS = ("st", "pst", "cx", "icx")
_METHODS = ("auto", "tails", "cut", "convex", "kernel-order")
_CONFIG_KEYS = {
    "name",
    "order",
    "method",
    "processes",
    "horizon",
    "cut",
    "epsilon_jump",
    "n_paths",
    "grid_points",
    "mc_samples",
    "tolerance",
    "seed",
    "out",
}


class ConfigError(Exception):
    pass


def _family_order(order: str) -> str:
    # pathwise order implies st; the test-function family is the st one
    return "st" if order == "pst" else order


@dataclass
class ExperimentConfig:
    """Validated experiment description; unknown keys are rejected."""

    name: str
    order: str
    method: str
    charX: PIICharacteristics
    charY: PIICharacteristics
    horizon: float
    cut: CutPoint | None = None
    epsilon_jump: float | None = None
    n_paths: int = 200
    grid_points: int = 200
    mc_samples: int = 20_000
    tolerance: float = 1e-9
    seed: int = 0
    out: str | None = None
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        unknown = sorted(set(obj) - _CONFIG_KEYS)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        procs = obj.get("processes")
        if not isinstance(procs, dict) or set(procs) != {"X", "Y"}:
            raise ConfigError("config needs a 'processes' object with exactly 'X' and 'Y'")
        try:
            charX = parse_process_spec(procs["X"])
            charY = parse_process_spec(procs["Y"])
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"bad process specification: {exc}") from exc
        order = obj.get("order", "st")
        if order not in _ORDERS:
            raise ConfigError(f"order must be one of {_ORDERS}, got {order!r}")
        method = obj.get("method", "auto")
        if method not in _METHODS:
            raise ConfigError(f"method must be one of {_METHODS}, got {method!r}")
        cut = None
        if "cut" in obj:
            c = obj["cut"]
            try:
                if isinstance(c, dict):
                    bad = sorted(set(c) - {"k", "side"})
                    if bad:
                        raise ConfigError(f"unknown config key(s): {', '.join('cut.' + b for b in bad)}")
                    cut = CutPoint(float(c["k"]), c.get("side", "right-closed"))
                else:
                    cut = CutPoint(float(c))
            except (ValueError, KeyError, TypeError) as exc:
                raise ConfigError(f"bad cut specification: {exc}") from exc
        if method == "cut" and cut is None:
            raise ConfigError("method 'cut' needs a 'cut' entry in the config")
        try:
            horizon = float(obj["horizon"]) if "horizon" in obj else default_horizon(
                charX.time_measure, charY.time_measure, charX.kernel, charY.kernel
            )
            eps = float(obj["epsilon_jump"]) if "epsilon_jump" in obj else None
            cfg = cls(
                name=str(obj.get("name", "experiment")),
                order=order,
                method=method,
                charX=charX,
                charY=charY,
                horizon=horizon,
                cut=cut,
                epsilon_jump=eps,
                n_paths=int(obj.get("n_paths", 200)),
                grid_points=int(obj.get("grid_points", 200)),
                mc_samples=int(obj.get("mc_samples", 20_000)),
                tolerance=float(obj.get("tolerance", 1e-9)),
                seed=int(obj.get("seed", 0)),
                out=str(obj["out"]) if "out" in obj else None,
                raw=obj,
            )
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad config value: {exc}") from exc
        if cfg.horizon <= 0:
            raise ConfigError("horizon must be positive")
        if eps is not None and eps <= 0:
            raise ConfigError("epsilon_jump must be positive")
        infinite = not (charX.kernel.is_finite_activity() and charY.kernel.is_finite_activity())
        if infinite and eps is None:
            raise ConfigError("epsilon_jump is required when a kernel has infinite activity")
        if cfg.n_paths <= 0 or cfg.grid_points < 2 or cfg.mc_samples <= 0:
            raise ConfigError("n_paths, grid_points, and mc_samples must be positive")
        return cfg

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            with open(Path(path)) as fh:
                obj = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(obj)


def _drift_ladder(cfg: ExperimentConfig) -> TruncationLadder | None:
    finite = cfg.charX.kernel.is_finite_activity() and cfg.charY.kernel.is_finite_activity()
    if finite:
        return None
    eps = cfg.epsilon_jump
    if eps < 1.0:
        return TruncationLadder.geometric(eps, top=1.0, levels=4)
    return TruncationLadder((eps,))


def _method_sequence(cfg: ExperimentConfig) -> list[str]:
    """Sufficient conditions for the requested order, most restrictive first."""
    if cfg.method != "auto":
        return [cfg.method]
    seq = []
    if cfg.order in ("st", "pst", "icx"):
        seq.append("tails")
        if cfg.cut is not None:
            seq.append("cut")
    if cfg.order in ("icx", "cx"):
        seq.append("convex")
    return seq


def _run_checker(cfg: ExperimentConfig, name: str) -> tuple[str, list[dict]]:
    """(verdict, reports) for one method's precondition bundle."""
    x, y = align_pair(cfg.charX, cfg.charY)
    if name == "tails":
        tails = check_st_tails(x.kernel, y.kernel, x.time_measure, tolerance=cfg.tolerance)
        drift = check_drift(cfg.charX, cfg.charY, ladder=_drift_ladder(cfg), tolerance=cfg.tolerance)
        reports = [tails.to_dict(), drift.to_dict()]
        verdicts = {tails.verdict, drift.verdict}
        if verdicts == {"satisfied"}:
            return "satisfied", reports
        if "violated" in verdicts:
            return "violated", reports
        return "inconclusive", reports
    if name == "cut":
        rep = check_cut(cfg.charX, cfg.charY, cfg.cut, tolerance=cfg.tolerance)
        return rep.verdict, [rep.to_dict()]
    if name == "convex":
        rep = check_convex_majorization(cfg.charX, cfg.charY, tolerance=cfg.tolerance)
        verdict = rep.verdict
        if verdict == "satisfied" and cfg.order == "cx" and rep.details.get("order") == "icx":
            verdict = "inconclusive"
        return verdict, [rep.to_dict()]
    if name == "kernel-order":
        family = TestFunctionFamily(_family_order(cfg.order), seed=cfg.seed)
        rep = kernel_order_defn_check(
            x.kernel, y.kernel, x.time_measure, family, tolerance=cfg.tolerance
        )
        return rep.verdict, [rep.to_dict()]
    raise ConfigError(f"unknown method {name!r}")


def cmd_check(cfg: ExperimentConfig) -> tuple[int, dict]:
    """Try the sufficient conditions in order; (exit code, report)."""
    attempts = []
    chosen = None
    final = "inconclusive"
    for name in _method_sequence(cfg):
        try:
            verdict, reports = _run_checker(cfg, name)
        except ValueError as exc:
            attempts.append({"method": name, "verdict": "inconclusive", "error": str(exc)})
            continue
        attempts.append({"method": name, "verdict": verdict, "reports": reports})
        if verdict == "satisfied":
            chosen = name
            final = "satisfied"
            break
        if verdict == "violated" and name == "tails" and cfg.order in ("st", "pst"):
            # tail/drift dominance is necessary for st, not just sufficient
            final = "violated"
            break
        if verdict == "violated" and cfg.method != "auto":
            final = "violated"
    code = {"satisfied": EXIT_SATISFIED, "violated": EXIT_VIOLATED}.get(final, EXIT_INCONCLUSIVE)
    report = {
        "command": "check",
        "order": cfg.order,
        "verdict": final,
        "method": chosen,
        "attempts": attempts,
    }
    return code, report


def cmd_simulate(
    cfg: ExperimentConfig,
    seed: int,
    force: bool = False,
    out_dir: Path | None = None,
    no_timestamp: bool = False,
):
    """Simulate the coupling backing the satisfied condition; write CSVs."""
    out_dir = Path(out_dir) if out_dir is not None else Path(".")
    code, check_report = cmd_check(cfg)
    if code != EXIT_SATISFIED and not force:
        return EXIT_REFUSED, {
            "command": "simulate",
            "verdict": "refused",
            "reason": "order conditions not satisfied; pass --force to simulate anyway",
            "check": check_report,
        }, None
    grid = np.linspace(0.0, cfg.horizon, cfg.grid_points)
    names = [check_report["method"]] if check_report["method"] else _method_sequence(cfg)
    paths = None
    errors = []
    used = None
    for name in names:
        try:
            if name == "tails":
                paths = simulate_coupled(
                    cfg.charX, cfg.charY, cfg.horizon, grid, cfg.n_paths,
                    epsilon_jump=cfg.epsilon_jump, seed=seed, force=True,
                )
            elif name == "cut":
                plan = build_plan(cfg.charX, cfg.charY, cfg.cut)
                paths = simulate_cut_coupled(
                    plan, cfg.charX, cfg.charY, cfg.horizon, grid, cfg.n_paths,
                    seed=seed, epsilon_jump=cfg.epsilon_jump,
                )
            elif name == "convex":
                addon = build_addon(cfg.charX, cfg.charY)
                paths = simulate_convex_coupled(
                    cfg.charX, addon, cfg.horizon, grid, cfg.n_paths,
                    seed=seed, epsilon_jump=cfg.epsilon_jump,
                )
            else:
                raise ValueError(f"method {name!r} has no coupling construction")
            used = name
            break
        except ValueError as exc:
            errors.append({"method": name, "error": str(exc)})
    if paths is None:
        return EXIT_REFUSED, {
            "command": "simulate",
            "verdict": "refused",
            "reason": "no coupling could be constructed",
            "construction_errors": errors,
            "check": check_report,
        }, None
    out_dir.mkdir(parents=True, exist_ok=True)
    paths_csv = out_dir / f"{cfg.name}.paths.csv"
    jumps_csv = out_dir / f"{cfg.name}.jumps.csv"
    paths.write_paths_csv(paths_csv, no_timestamp=no_timestamp)
    paths.write_jumps_csv(jumps_csv, no_timestamp=no_timestamp)
    report = {
        "command": "simulate",
        "verdict": "simulated",
        "method": used,
        "coupling": paths.metadata.get("coupling"),
        "n_paths": paths.n_paths,
        "grid_points": len(paths.time_grid),
        "pathwise_violations": paths.violations(cfg.tolerance),
        "max_violation": paths.max_violation(),
        "marginal_only": used == "convex",
        "files": {"paths": paths_csv.name, "jumps": jumps_csv.name},
        "metadata": {k: _jsonable(v) for k, v in sorted(paths.metadata.items())},
        "check": check_report,
        "forced": code != EXIT_SATISFIED,
    }
    return EXIT_SATISFIED, report, paths


def cmd_verify(cfg: ExperimentConfig, seed: int, threads: int = 1) -> tuple[int, dict]:
    """Monte-Carlo order test of the configured pair at the horizon."""
    res = mc_order_test(
        (cfg.charX, cfg.charY),
        _family_order(cfg.order),
        times=cfg.horizon,
        n=cfg.mc_samples,
        seed=seed,
        epsilon_jump=cfg.epsilon_jump,
        threads=threads,
    )
    code = {
        "no violation detected": EXIT_SATISFIED,
        "violation detected": EXIT_VIOLATED,
    }.get(res.verdict, EXIT_INCONCLUSIVE)
    report = {
        "command": "verify",
        "order": cfg.order,
        "times": list(res.times),
        "n": res.n,
        "design": res.design,
        "verdict": res.verdict,
        "worst_z": res.worst_z,
        "functions": res.rows,
    }
    return code, report


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


def _emit(report: dict, out, no_timestamp: bool, name: str, seed: int):
    report = {"experiment": name, "seed": seed, **report}
    if not no_timestamp:
        report["generated"] = datetime.now(timezone.utc).isoformat()
    text = json.dumps(report, indent=2, sort_keys=False, default=_jsonable) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


def _add_common(p: argparse.ArgumentParser, with_force: bool):
    p.add_argument("--config", required=True, help="experiment config (JSON)")
    p.add_argument("--out", default=None, help="output directory (overrides the config's 'out')")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: PIIORDER_THREADS or 1)")
    p.add_argument("--no-timestamp", action="store_true", help="omit timestamps for byte-identical outputs")
    if with_force:
        p.add_argument("--force", action="store_true", help="simulate even when order conditions fail")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="piiorder", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("check", help="evaluate order conditions"), with_force=False)
    _add_common(sub.add_parser("simulate", help="simulate an ordered coupling"), with_force=True)
    _add_common(sub.add_parser("verify", help="Monte-Carlo order test"), with_force=False)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    env_threads = os.environ.get("PIIORDER_THREADS")  # read once per invocation
    try:
        threads = int(args.threads if args.threads is not None else (env_threads or 1))
    except ValueError:
        print(f"piiorder: bad PIIORDER_THREADS value {env_threads!r}", file=sys.stderr)
        return EXIT_CONFIG
    if threads < 1:
        print("piiorder: thread count must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = ExperimentConfig.from_file(args.config)
    except ConfigError as exc:
        print(f"piiorder: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    seed = args.seed if args.seed is not None else cfg.seed
    out = args.out if args.out is not None else cfg.out
    try:
        if args.command == "check":
            code, report = cmd_check(cfg)
            dest = Path(out) / f"{cfg.name}.check.json" if out else None
            _emit(report, dest, args.no_timestamp, cfg.name, seed)
        elif args.command == "simulate":
            out_dir = Path(out) if out else Path(".")
            code, report, _ = cmd_simulate(cfg, seed, args.force, out_dir, args.no_timestamp)
            _emit(report, out_dir / f"{cfg.name}.report.json", args.no_timestamp, cfg.name, seed)
        else:
            code, report = cmd_verify(cfg, seed, threads)
            dest = Path(out) / f"{cfg.name}.verify.json" if out else None
            _emit(report, dest, args.no_timestamp, cfg.name, seed)
    except ValueError as exc:
        print(f"piiorder: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    return code


if __name__ == "__main__":
    sys.exit(main())
