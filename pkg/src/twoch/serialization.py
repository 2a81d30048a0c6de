"""JSON persistence for grid states and run configurations.

State files carry the type's field names verbatim plus grid metadata
(min, max, n for the respective grid) and a "kind" discriminator; arrays are
flat number lists.  Non-finite breaking times (unbroken nodes) are stored as
null so the files remain strict JSON.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .scenarios import SimulationConfig
from .state import EulerianState, LagrangianState, Measure

__all__ = [
    "save_state",
    "load_state",
    "load_eulerian",
    "load_lagrangian",
    "load_config",
    "eulerian_to_dict",
    "lagrangian_to_dict",
]


def _grid_meta(grid: np.ndarray, prefix: str) -> dict:
    return {f"{prefix}_min": float(grid[0]), f"{prefix}_max": float(grid[-1]),
            "n": int(grid.size)}


def eulerian_to_dict(e: EulerianState) -> dict:
    d = {"kind": "eulerian"}
    d.update(_grid_meta(e.x, "x"))
    d.update({
        "ubar": e.ubar.tolist(),
        "c": e.c,
        "rhobar": e.rhobar.tolist(),
        "k": e.k,
        "mu": {"density": e.mu.density.tolist(),
               "atoms": [[a, m] for a, m in e.mu.atoms]},
    })
    return d


def lagrangian_to_dict(X: LagrangianState) -> dict:
    d = {"kind": "lagrangian"}
    d.update(_grid_meta(X.xi, "xi"))
    d.update({
        "zeta": X.zeta.tolist(),
        "Ubar": X.Ubar.tolist(),
        "c": X.c,
        "q": X.q.tolist(),
        "w": X.w.tolist(),
        "h": X.h.tolist(),
        "rbar": X.rbar.tolist(),
        "k": X.k,
        "tau": [t if math.isfinite(t) else None for t in X.tau],
        "t": X.t,
    })
    return d


def save_state(state, path) -> None:
    if isinstance(state, EulerianState):
        d = eulerian_to_dict(state)
    elif isinstance(state, LagrangianState):
        d = lagrangian_to_dict(state)
    else:
        raise TypeError(f"cannot serialize {type(state).__name__}")
    Path(path).write_text(json.dumps(d, sort_keys=True))


def _eulerian_from_dict(d: dict) -> EulerianState:
    x = np.linspace(d["x_min"], d["x_max"], d["n"])
    mu = d.get("mu", {})
    return EulerianState(
        x=x,
        ubar=np.asarray(d["ubar"], dtype=float),
        c=float(d.get("c", 0.0)),
        rhobar=np.asarray(d["rhobar"], dtype=float),
        k=float(d.get("k", 0.0)),
        mu=Measure(density=np.asarray(mu.get("density", np.zeros(d["n"])), dtype=float),
                   atoms=[tuple(a) for a in mu.get("atoms", [])]),
    )


def _lagrangian_from_dict(d: dict) -> LagrangianState:
    xi = np.linspace(d["xi_min"], d["xi_max"], d["n"])
    tau = np.array([math.inf if t is None else float(t) for t in d["tau"]])
    return LagrangianState(
        xi=xi,
        zeta=np.asarray(d["zeta"], dtype=float),
        Ubar=np.asarray(d["Ubar"], dtype=float),
        c=float(d.get("c", 0.0)),
        q=np.asarray(d["q"], dtype=float),
        w=np.asarray(d["w"], dtype=float),
        h=np.asarray(d["h"], dtype=float),
        rbar=np.asarray(d["rbar"], dtype=float),
        k=float(d.get("k", 0.0)),
        tau=tau,
        t=float(d.get("t", 0.0)),
    )


def load_state(path):
    d = json.loads(Path(path).read_text())
    kind = d.get("kind")
    if kind == "eulerian":
        return _eulerian_from_dict(d)
    if kind == "lagrangian":
        return _lagrangian_from_dict(d)
    raise ValueError(f"state file {path} has unknown kind {kind!r}")


def load_eulerian(path) -> EulerianState:
    s = load_state(path)
    if not isinstance(s, EulerianState):
        raise ValueError(f"{path} does not hold an Eulerian state")
    return s


def load_lagrangian(path) -> LagrangianState:
    s = load_state(path)
    if not isinstance(s, LagrangianState):
        raise ValueError(f"{path} does not hold a Lagrangian state")
    return s


def load_config(path) -> SimulationConfig:
    d = json.loads(Path(path).read_text())
    return SimulationConfig.from_dict(d)
