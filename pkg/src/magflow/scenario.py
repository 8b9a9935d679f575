"""Scenario configuration: parsing, validation and preset expansion.

A scenario is one JSON document::

    {
      "preset": "kt_b0", "params": {"a": 1, "c": 1, "rho": 1},   # optional shortcut
      "algebra": {"preset": "h3r"} | {"dim": n, "brackets": [[i, j, k, c]], "gram": [...]},
      "force": {"preset": "kodaira_thurston", "a": .., "b": .., "c": .., "rho": ..}
               | {"preset": "heisenberg", "eta": [..]} | {"two_form": [[i, j, value]]},
      "invariants": ["energy", {"magnetic_killing": [..]}, {"kt_b0": {}}, ...],
      "lattice": {"preset": "kt_b0" | "kt_c0" | "heisenberg"} | {"generators": [[..]]},
      "integrator": {"step": 1e-3, "t_end": 10, "method": "rk4", "record_every": 1},
      "sampling": {"count": 100, "seed": 0, "box": 2, "radii": [0.1, 1, 10]},
      "initial_state": {"W": [..], "V": [..]},
      "killing": {"components": [<tensor literal>, ...]},
      "tolerances": {"drift": 1e-8, ...}
    }

All indices in the document are 1-based.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, InvalidInputError
from .invariants import (
    Energy,
    LeftTensorIntegral,
    MagneticKillingIntegral,
    heisenberg_fj,
    heisenberg_integrals,
    kt_integrals,
    kt_invariants_b0,
    kt_invariants_c0,
    lattice_family,
    proposition_family,
)
from .lattice import LogLattice, lattice_preset
from .magnetic import (
    LorentzForce,
    force_from_two_form,
    heisenberg_force,
    is_closed,
    kodaira_thurston_force,
    two_form_matrix,
)
from .nilalgebra import MetricNilpotentAlgebra, preset
from .tensors import SymTensor

DEFAULT_TOLERANCES = {
    "drift": 1e-8,
    "involution": 1e-6,
    "rank_cut": 1e-8,
    "rank_fraction": 0.95,
    "invariance": 1e-9,
    "killing": 1e-10,
}

# whole-scenario presets; each expands to a full config
PRESETS = {
    "abelian": {
        "description": "flat control: abelian algebra, zero force",
        "defaults": {"n": 4},
    },
    "heisenberg": {
        "description": "h_{2n+1} + R^k with F = sum eta_i e_{2i-1} ^ e_{2i} and lattice 2Z^{2n+1} + Z^k",
        "defaults": {"n": 2, "k": 1, "eta": [1.0, 0.5]},
    },
    "kt_b0": {
        "description": "h3 + R, omega = a e13 + c e14 + rho e12 (b = 0), lattice Span(2e1, e2, e3, e4)",
        "defaults": {"a": 1, "c": 1, "rho": 1},
    },
    "kt_c0": {
        "description": "h3 + R, omega = a e13 + b e23 + rho e12 (c = 0, b != 0)",
        "defaults": {"a": 1, "b": 1, "rho": 1},
    },
}


def list_presets() -> list:
    """Preset catalog in stable (sorted) order."""
    return [
        {"name": name, "description": PRESETS[name]["description"], "defaults": PRESETS[name]["defaults"]}
        for name in sorted(PRESETS)
    ]


def expand_preset(name: str, params: dict | None = None) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"unknown scenario preset {name!r}; known: {sorted(PRESETS)}")
    p = dict(PRESETS[name]["defaults"])
    p.update(params or {})
    if name == "abelian":
        return {
            "algebra": {"preset": "abelian", "n": p["n"]},
            "force": {"two_form": []},
            "invariants": ["energy"] + [{"magnetic_killing": list(row)} for row in np.eye(p["n"])[:-1].tolist()],
        }
    if name == "heisenberg":
        return {
            "algebra": {"preset": "heisenberg", "n": p["n"], "k": p["k"]},
            "force": {"preset": "heisenberg", "eta": p["eta"]},
            "invariants": ["energy", {"family": "proposition"}, {"heis_fj": {}}],
            "lattice": {"preset": "heisenberg"},
        }
    kt = {"a": p.get("a", 0), "b": p.get("b", 0), "c": p.get("c", 0), "rho": p.get("rho", 0)}
    fam = "kt_b0" if name == "kt_b0" else "kt_c0"
    return {
        "algebra": {"preset": "h3r"},
        "force": {"preset": "kodaira_thurston", **kt},
        "invariants": ["energy", {"kt_I": {}}, {fam: {}}],
        "lattice": {"preset": fam},
    }


@dataclass
class Scenario:
    algebra: MetricNilpotentAlgebra
    force: LorentzForce
    invariants: list
    lattice: LogLattice | None
    case: str
    step: float = 1e-3
    t_end: float = 10.0
    method: str = "rk4"
    record_every: int = 1
    count: int = 100
    seed: int = 0
    box: float = 2.0
    radii: tuple = (0.1, 1.0, 10.0)
    initial_state: tuple | None = None
    killing: list | None = None
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    raw: dict = field(default_factory=dict)

    def rng(self, offset: int = 0) -> np.random.Generator:
        return np.random.default_rng(self.seed + offset)


def load_config(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if k in ("preset", "params"):
            continue
        out[k] = v
    return out


def _algebra(spec) -> MetricNilpotentAlgebra:
    if not isinstance(spec, dict):
        raise ConfigError("'algebra' must be an object")
    if "preset" in spec:
        params = {k: v for k, v in spec.items() if k != "preset"}
        return preset(spec["preset"], **params)
    return MetricNilpotentAlgebra.from_config(spec)


def _force(spec, algebra) -> LorentzForce:
    if not isinstance(spec, dict):
        raise ConfigError("'force' must be an object")
    name = spec.get("preset")
    if name == "kodaira_thurston":
        return kodaira_thurston_force(
            spec.get("a", 0), spec.get("b", 0), spec.get("c", 0), spec.get("rho", 0), algebra
        )
    if name == "heisenberg":
        return heisenberg_force(spec.get("eta", []), algebra)
    if name is not None:
        raise ConfigError(f"unknown force preset {name!r}")
    terms = [(int(i) - 1, int(j) - 1, v) for i, j, v in spec.get("two_form", [])]
    return force_from_two_form(two_form_matrix(terms, algebra.dim), algebra, {"preset": "two_form"})


def _case_label(algebra, force) -> str:
    p = force.params
    if p.get("preset") == "kodaira_thurston":
        b, c = float(p["b"]), float(p["c"])
        return "kt_b0" if b == 0 else ("kt_c0" if c == 0 else "kt_generic")
    if p.get("preset") == "heisenberg":
        return f"heisenberg({algebra.params['n']},{algebra.params['k']})"
    if algebra.name == "abelian":
        return "abelian"
    return "custom"


def build_invariants(specs, algebra, force) -> list:
    out = []
    for spec in specs:
        if spec == "energy":
            out.append(Energy(algebra))
            continue
        if not isinstance(spec, dict) or len(spec) != 1:
            raise ConfigError(f"bad invariant entry {spec!r}")
        (kind, arg), = spec.items()
        if kind == "magnetic_killing":
            out.append(MagneticKillingIntegral(arg, force))
        elif kind == "left_tensor":
            out.append(LeftTensorIntegral(SymTensor.from_literal(algebra, arg), name=arg.get("name")))
        elif kind == "kt_I":
            out.extend(kt_integrals(force).values())
        elif kind == "kt_b0":
            out.extend(kt_invariants_b0(force).values())
        elif kind == "kt_c0":
            out.extend(kt_invariants_c0(force).values())
        elif kind == "heis_I":
            out.extend(heisenberg_integrals(force).values())
        elif kind == "heis_fj":
            out.extend(heisenberg_fj(force).values())
        elif kind == "family":
            out.extend(proposition_family(force) if arg == "proposition" else lattice_family(force))
        else:
            raise ConfigError(f"unknown invariant kind {kind!r}")
    seen = set()
    unique = []
    for inv in out:
        if inv.name not in seen:
            seen.add(inv.name)
            unique.append(inv)
    return unique


def _lattice(spec, algebra, force):
    if spec is None:
        return None
    if not isinstance(spec, dict):
        raise ConfigError("'lattice' must be an object")
    if "preset" in spec:
        name = spec["preset"]
        params = {}
        if name == "kt_c0":
            params = {"a": force.params.get("a", 0), "b": force.params.get("b", 0)}
        return lattice_preset(name, algebra, **params)
    return LogLattice(spec.get("generators", []), algebra)


def _positive(value, what, integer=False):
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{what} must be a number") from None
    if not np.isfinite(v) or v <= 0 or (integer and v != int(v)):
        raise ConfigError(f"{what} must be a positive {'integer' if integer else 'number'}, got {value!r}")
    return int(v) if integer else v


def build_scenario(cfg: dict, seed: int | None = None) -> Scenario:
    """Validate a config dict and build the scenario (raises ConfigError)."""
    if "preset" in cfg:
        cfg = _merge(expand_preset(cfg["preset"], cfg.get("params")), cfg)
    try:
        algebra = _algebra(cfg.get("algebra", {}))
        force = _force(cfg.get("force", {"two_form": []}), algebra)
        closed = is_closed(force, algebra)
        if not closed["closed"]:
            triples = [tuple(i + 1 for i in t) for t in closed["residuals"]]
            raise ConfigError(f"magnetic 2-form is not closed; nonzero d omega on {triples}")
        invariants = build_invariants(cfg.get("invariants", ["energy"]), algebra, force)
        lattice = _lattice(cfg.get("lattice"), algebra, force)
        killing = None
        if "killing" in cfg:
            comps = cfg["killing"].get("components", [])
            killing = [SymTensor.from_literal(algebra, c) for c in comps]
    except (InvalidInputError, KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None

    integ = cfg.get("integrator", {})
    samp = cfg.get("sampling", {})
    method = integ.get("method", "rk4")
    if method not in ("rk4", "rk4_refined"):
        raise ConfigError(f"unknown integrator method {method!r}")
    init = None
    if "initial_state" in cfg:
        W = np.asarray(cfg["initial_state"].get("W"), dtype=float)
        V = np.asarray(cfg["initial_state"].get("V"), dtype=float)
        if W.shape != (algebra.dim,) or V.shape != (algebra.dim,):
            raise ConfigError("initial_state W and V must match the algebra dimension")
        init = (W, V)
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(cfg.get("tolerances", {}))
    seed_val = seed if seed is not None else samp.get("seed", 0)
    if int(seed_val) != seed_val or seed_val < 0 or seed_val >= 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return Scenario(
        algebra=algebra,
        force=force,
        invariants=invariants,
        lattice=lattice,
        case=_case_label(algebra, force),
        step=_positive(integ.get("step", 1e-3), "integrator.step"),
        t_end=_positive(integ.get("t_end", 10.0), "integrator.t_end"),
        method=method,
        record_every=_positive(integ.get("record_every", 1), "integrator.record_every", integer=True),
        count=_positive(samp.get("count", 100), "sampling.count", integer=True),
        seed=int(seed_val),
        box=_positive(samp.get("box", 2.0), "sampling.box"),
        radii=tuple(_positive(r, "sampling.radii entry") for r in samp.get("radii", (0.1, 1.0, 10.0))),
        initial_state=init,
        killing=killing,
        tolerances=tol,
        raw=cfg,
    )
