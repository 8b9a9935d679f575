"""``magflow`` command line: run a scenario's checks and write a report.

Exit codes: 0 when every check passes, 1 when any check fails, 2 when the
configuration is invalid.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, checks, flow
from .errors import ConfigError, IntegrationDiverged, MismatchedForceError
from .invariants import Energy, MagneticKillingIntegral, lattice_family, proposition_family
from .sampling import sample_states
from .scenario import Scenario, build_scenario, list_presets, load_config

SCHEMA = 1
COMMANDS = ("simulate", "verify", "involution", "rank", "killing", "lattice", "presets")


def _clean(obj):
    """Convert numpy containers and scalars to plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def _states(sc: Scenario, offset: int, count: int | None = None):
    return sample_states(sc.rng(offset), count or sc.count, sc.algebra, sc.box, sc.radii)


def _integral_family(sc: Scenario):
    try:
        return [Energy(sc.algebra)] + proposition_family(sc.force)
    except Exception:
        return sc.invariants


def _rank_family(sc: Scenario):
    """Energy plus the lattice-adapted family for KT cases; the proposition family for Heisenberg."""
    case = sc.case
    if case.startswith("heisenberg"):
        return proposition_family(sc.force)
    if case in ("kt_b0", "kt_c0"):
        return [Energy(sc.algebra)] + lattice_family(sc.force)
    return sc.invariants


def _lattice_family(sc: Scenario):
    try:
        return lattice_family(sc.force)
    except Exception:
        return sc.invariants


def run_simulate(sc: Scenario, out: Path) -> dict:
    if sc.initial_state is not None:
        W0, V0 = sc.initial_state
    else:
        W, V = _states(sc, 0, 1)
        W0, V0 = W[0], V[0]
    traj = flow.integrate(flow.PhaseState(W0, V0), sc.force, sc.t_end, sc.step, sc.method,
                          sc.invariants, sc.record_every)
    flow.write_csv(traj, out / "trajectory.csv")
    flow.write_long_csv(traj, out / "trajectory_long.csv")
    drift = {name: float(traj.drift(name).max()) for name in traj.samples}
    tol = sc.tolerances["drift"]
    result = {
        "initial_state": {"W": W0, "V": V0},
        "steps": len(traj.times) - 1,
        "effective_step": traj.step,
        "drift": drift,
        "passes": all(d <= tol for d in drift.values()),
    }
    if traj.error_estimate is not None:
        result["refinement_error"] = traj.error_estimate
    return {"simulate": result}


def run_involution(sc: Scenario) -> dict:
    W, V = _states(sc, 1)
    return {"involution": checks.involution_suite(sc.force, _integral_family(sc), W, V,
                                                  tol=sc.tolerances["involution"])}


def run_rank(sc: Scenario) -> dict:
    W, V = _states(sc, 2)
    return {"rank": checks.rank_suite(sc.algebra, _rank_family(sc), W, V,
                                      cut=sc.tolerances["rank_cut"], fraction=sc.tolerances["rank_fraction"])}


def run_killing(sc: Scenario) -> dict:
    comps = sc.killing or checks.default_killing_candidate(sc.algebra)
    W, V = _states(sc, 3, min(sc.count, 12))
    return {"killing": checks.killing_suite(sc.force, comps, W, V, sc.t_end, sc.step,
                                            tol=sc.tolerances["killing"], drift_tol=sc.tolerances["drift"])}


def run_lattice(sc: Scenario) -> dict:
    if sc.lattice is None:
        raise ConfigError("the lattice command needs a 'lattice' section")
    W, V = _states(sc, 4)
    return {"lattice": checks.lattice_suite(sc.lattice, _lattice_family(sc), W, V, sc.rng(5),
                                            tol=sc.tolerances["invariance"])}


def run_verify(sc: Scenario) -> dict:
    out = {"structure": checks.structural_suite(sc.force)}
    W, V = _states(sc, 0, min(sc.count, 12))
    out["conservation"] = checks.conservation_suite(sc.force, sc.invariants, W, V, sc.t_end, sc.step,
                                                    tol=sc.tolerances["drift"])
    if len(_integral_family(sc)) >= 2:
        out.update(run_involution(sc))
    out.update(run_rank(sc))
    out.update(run_killing(sc))
    if sc.lattice is not None:
        out.update(run_lattice(sc))
    return out


def _report(command: str, sc: Scenario, results: dict) -> dict:
    return {
        "schema": SCHEMA,
        "tool_version": __version__,
        "command": command,
        "case": sc.case,
        "seed": sc.seed,
        "algebra": {"name": sc.algebra.name, "dim": sc.algebra.dim, **sc.algebra.params},
        "force": {k: v for k, v in sc.force.params.items()},
        "invariants": [inv.describe() for inv in sc.invariants],
        "settings": {"step": sc.step, "t_end": sc.t_end, "method": sc.method, "count": sc.count,
                     "box": sc.box, "radii": list(sc.radii)},
        "tolerances": sc.tolerances,
        "checks": results,
        "passes": all(r.get("passes", True) for r in results.values()),
    }


def write_report(report: dict, path: Path) -> None:
    text = json.dumps(_clean(report), indent=2, sort_keys=True)
    path.write_text(text + "\n", encoding="utf-8")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="magflow", description="Magnetic flows on 2-step nilpotent groups.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="scenario JSON file")
    parser.add_argument("--out", default=".", help="output directory (default: current)")
    parser.add_argument("--seed", type=int, default=None, help="override the sampling seed")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        print(json.dumps(list_presets(), indent=2, sort_keys=True))
        return 0
    if not args.config:
        print("error: --config is required", file=sys.stderr)
        return 2
    try:
        sc = build_scenario(load_config(args.config), seed=args.seed)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        runners = {
            "simulate": lambda: run_simulate(sc, out),
            "verify": lambda: run_verify(sc),
            "involution": lambda: run_involution(sc),
            "rank": lambda: run_rank(sc),
            "killing": lambda: run_killing(sc),
            "lattice": lambda: run_lattice(sc),
        }
        results = runners[args.command]()
    except (ConfigError, MismatchedForceError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except IntegrationDiverged as exc:
        print(f"integration diverged at t={exc.last_time:g}", file=sys.stderr)
        return 1
    report = _report(args.command, sc, results)
    write_report(report, out / "report.json")
    for name, res in sorted(results.items()):
        print(f"{name}: {'PASS' if res.get('passes', True) else 'FAIL'}")
    return 0 if report["passes"] else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
