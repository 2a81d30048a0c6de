"""Built-in initial data, run configuration, and the time-series container.

Scenario builders return an Eulerian state whose energy measure is the
purely absolutely continuous (u0_x^2 + rhobar0^2) dx computed from analytic
derivatives; callers may attach extra atoms afterwards.  Scenario formulas
are understood in the reduced frame (background parameters kappa/eta enter
through the shift transform at solve time, see evolution.reduce_parameters).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, asdict
from typing import Any, Callable

import numpy as np

from .metrics import EnergyReport
from .partition import chi, chi_prime
from .state import EulerianState, LagrangianState, Measure

__all__ = [
    "UnknownScenarioError",
    "SCENARIOS",
    "build_scenario",
    "SolverSettings",
    "SimulationConfig",
    "BreakEvent",
    "Snapshot",
    "TimeSeries",
    "config_hash",
]


class UnknownScenarioError(KeyError):
    pass


def _mollified_abs(s: np.ndarray, half_width: float):
    """|s| with the kink replaced by a C^1 parabolic cap of the given
    half-width: s^2/(2w) + w/2 for |s| < w."""
    a = np.abs(s)
    cap = s * s / (2.0 * half_width) + 0.5 * half_width
    val = np.where(a < half_width, cap, a)
    dval = np.where(a < half_width, s / half_width, np.sign(s))
    return val, dval


def _gaussian_cubic(x, alpha=1.0, epsilon=0.0, **_):
    u0 = alpha * np.exp(-x * x) * x * (x - 1.0) * (x + 1.0)
    u0x = alpha * np.exp(-x * x) * (-2.0 * x ** 4 + 5.0 * x ** 2 - 1.0)
    rb = epsilon * np.exp(-x * x / 10.0)
    return u0, u0x, 0.0, rb, 0.0


def _peakon_antipeakon(x, p=1.0, a=2.0, epsilon=0.0, cap_width=None, dx=None, **_):
    w = cap_width if cap_width is not None else 2.0 * (dx or 0.01)
    m1, dm1 = _mollified_abs(x + a, w)
    m2, dm2 = _mollified_abs(x - a, w)
    u0 = p * (np.exp(-m1) - np.exp(-m2))
    u0x = p * (-dm1 * np.exp(-m1) + dm2 * np.exp(-m2))
    rb = epsilon * np.exp(-x * x / 10.0)
    return u0, u0x, 0.0, rb, 0.0


def _step_asymptotics(x, a=0.3, c=0.5, epsilon=0.0, **_):
    ub = a * np.exp(-x * x)
    ubx = -2.0 * x * ub
    u0 = ub + c * chi(x)
    u0x = ubx + c * chi_prime(x)
    rb = epsilon * np.exp(-x * x / 10.0)
    return u0, u0x, c, rb, 0.0


def _constant_density(x, k=1.0, **_):
    zero = np.zeros_like(x)
    return zero, zero.copy(), 0.0, zero.copy(), k


SCENARIOS: dict[str, tuple[Callable, str]] = {
    "gaussian-cubic": (_gaussian_cubic,
                       "u0 = alpha exp(-x^2) x (x-1)(x+1), rho0 = epsilon exp(-x^2/10)"),
    "peakon-antipeakon": (_peakon_antipeakon,
                          "u0 = p (e^{-|x+a|} - e^{-|x-a|}) with mollified kinks, "
                          "rho0 = epsilon exp(-x^2/10)"),
    "step-asymptotics": (_step_asymptotics,
                         "u0 = a exp(-x^2) + c chi(x): distinct asymptotes 0 and c"),
    "constant-density": (_constant_density, "u0 = 0, rho0 = k: an equilibrium"),
}


def build_scenario(name: str, x: np.ndarray, params: dict | None = None) -> EulerianState:
    """Initial Eulerian data for a named scenario on the grid x.

    The energy measure is (u0_x^2 + rhobar0^2) dx with no atoms unless
    params carries an explicit "atoms" list of (location, mass) pairs.
    """
    if name not in SCENARIOS:
        raise UnknownScenarioError(
            f"unknown scenario {name!r}; known: {sorted(SCENARIOS)}")
    params = dict(params or {})
    atoms = params.pop("atoms", [])
    x = np.asarray(x, dtype=float)
    fn, _ = SCENARIOS[name]
    u0, u0x, c, rb, k = fn(x, dx=float(x[1] - x[0]), **params)
    dens = u0x ** 2 + rb ** 2
    return EulerianState(
        x=x, ubar=u0 - c * chi(x), c=c, rhobar=rb, k=k,
        mu=Measure(density=dens, atoms=list(atoms)))


# ---------------------------------------------------------------------------
# run configuration
# ---------------------------------------------------------------------------

@dataclass
class SolverSettings:
    """Time-stepping knobs.

    dt == 0 picks the per-step CFL bound cfl * dxi / (1 + sup|U|); a positive
    dt is used as a fixed step (still capped by snapshot boundaries).

    q_tol is the collapse threshold for breaking detection; collapse is a
    parabolic tangency (q and w vanish together), and the node nearest a
    caustic label bottoms out at about (dxi/2)^2 times the transverse
    curvature, so the default (q_tol = None) scales the threshold as
    dxi^2/4.  Detection additionally requires the conserved per-label
    quantity r = rbar + k q to vanish within r_gate: labels carrying
    nonzero r are kept away from collapse by q h = w^2 + rbar^2 and must
    never freeze, whatever the threshold.

    event_refine is the bisection depth used to localize breaking times,
    tol_compat the drift threshold beyond which the compatibility relation
    is re-projected (scaling h on unbroken nodes).  mono_tol is a gross-
    corruption guard: collapsed labels whose true separations are ~0 may
    cross by discretization error, which the kernel clamps benignly, so the
    bound only has to catch runaway states.
    """

    dt: float = 0.0
    cfl: float = 0.5
    q_tol: float | None = None
    event_refine: int = 20
    mode: str = "dissipative"
    tol_compat: float = 1e-8
    integrator: str = "rk4"
    mono_tol: float = 5e-2
    r_gate: float = 1e-9

    def __post_init__(self):
        if self.dt < 0:
            raise ValueError("dt must be nonnegative")
        if self.q_tol is not None and self.q_tol <= 0:
            raise ValueError("q_tol must be positive")
        if self.mode not in ("dissipative", "conservative"):
            raise ValueError("mode must be 'dissipative' or 'conservative'")

    def collapse_threshold(self, dxi: float) -> float:
        return self.q_tol if self.q_tol is not None else 0.25 * dxi * dxi


@dataclass
class SimulationConfig:
    scenario: str = "gaussian-cubic"
    params: dict[str, Any] = field(default_factory=dict)
    data_path: str | None = None          # external Eulerian JSON instead of a builder
    kappa: float = 0.0
    eta: float = 1.0
    xi_min: float = -30.0
    xi_max: float = 30.0
    n: int = 4096
    x_min: float = -15.0
    x_max: float = 15.0
    n_x: int = 0                          # 0 -> same as n
    T: float = 2.0
    snapshot_dt: float = 0.25
    settings: SolverSettings = field(default_factory=SolverSettings)
    output_dir: str = "out"
    keep_lagrangian: bool = False

    def __post_init__(self):
        if isinstance(self.settings, dict):
            self.settings = SolverSettings(**self.settings)
        if self.n < 16:
            raise ValueError("n must be at least 16")
        if self.T <= 0:
            raise ValueError("T must be positive")
        if self.eta <= 0:
            raise ValueError("eta must be positive")

    def xi_grid(self) -> np.ndarray:
        return np.linspace(self.xi_min, self.xi_max, self.n)

    def x_grid(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_x or self.n)

    def as_dict(self) -> dict:
        d = asdict(self)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimulationConfig":
        d = dict(d)
        if "settings" in d and isinstance(d["settings"], dict):
            d["settings"] = SolverSettings(**d["settings"])
        return cls(**d)


def config_hash(config: SimulationConfig) -> str:
    """Stable provenance hash of a fully resolved configuration."""
    blob = json.dumps(config.as_dict(), sort_keys=True, default=repr)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# outputs
# ---------------------------------------------------------------------------

@dataclass
class BreakEvent:
    node: int
    tau: float
    y_at_break: float
    h_at_break: float
    warning: str = ""


@dataclass
class Snapshot:
    t: float
    eulerian: EulerianState
    energy: EnergyReport


@dataclass
class TimeSeries:
    snapshots: list[Snapshot] = field(default_factory=list)
    events: list[BreakEvent] = field(default_factory=list)
    provenance: str = ""
    lagrangian: list[LagrangianState] = field(default_factory=list)
    diagnostics: dict[str, list[float]] = field(default_factory=dict)
    shift_alpha: float = 0.0
    shift_eta: float = 1.0
    failure: str = ""

    @property
    def ok(self) -> bool:
        return not self.failure

    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])
