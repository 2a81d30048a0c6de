"""Domain types for the solver: Eulerian and Lagrangian grid states, the
energy measure, admissibility checks, and the pointwise region classifier g.

Velocities carry a possibly nonzero right asymptote c through the
decomposition u = ubar + c*chi(x); densities carry a constant background k
through rho = rhobar + k.  The energy measure mu is a finite positive Radon
measure stored as an absolutely continuous density sampled on the grid plus
a list of point atoms.

A Lagrangian state collects per-node samples of

    zeta  : y(xi) - xi, the characteristic displacement
    Ubar  : velocity along the characteristic minus c*chi(y)
    q     : y_xi, the Jacobian of the characteristic map
    w     : U_xi
    h     : Lagrangian energy density
    rbar  : (rho - k) o y * y_xi
    tau   : per-node breaking time (+inf while unbroken)

together with the scalars c, k and the current time t.  Admissible states
satisfy q >= 0, h >= 0, the compatibility relation q*h = w^2 + rbar^2, a
positive lower bound on q + h, decay of zeta on the left, and the freeze
rule q = w = rbar = 0 at nodes whose breaking time has passed.

All types are plain value records and every operation here is pure, so
states may be shared read-only across threads or handed between them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .partition import chi, chi_prime

trapezoid = getattr(np, "trapezoid", None) or np.trapz

__all__ = [
    "Measure",
    "EulerianState",
    "LagrangianState",
    "Tolerances",
    "Violation",
    "ValidationReport",
    "validate_G",
    "classify_region",
    "g_value",
    "g_values",
    "g_eulerian",
    "identity_state",
    "state_norms",
    "eulerian_ux",
]


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------

@dataclass
class Measure:
    """Finite positive measure: density samples on the owner's x-grid plus
    point atoms as (location, mass) pairs with strictly increasing locations."""

    density: np.ndarray
    atoms: list[tuple[float, float]] = field(default_factory=list)

    def __post_init__(self):
        self.density = np.asarray(self.density, dtype=float)
        self.atoms = [(float(a), float(m)) for a, m in self.atoms]

    def atom_mass(self) -> float:
        return sum(m for _, m in self.atoms)

    def total(self, x: np.ndarray) -> float:
        return float(trapezoid(self.density, x)) + self.atom_mass()

    def check(self) -> list[str]:
        problems = []
        if np.any(self.density < 0):
            problems.append("negative density sample")
        if not np.all(np.isfinite(self.density)):
            problems.append("non-finite density sample")
        locs = [a for a, _ in self.atoms]
        if any(m <= 0 for _, m in self.atoms):
            problems.append("non-positive atom mass")
        if any(b <= a for a, b in zip(locs, locs[1:])):
            problems.append("atom locations not strictly increasing")
        return problems


# ---------------------------------------------------------------------------
# grid states
# ---------------------------------------------------------------------------

def _uniform_spacing(grid: np.ndarray) -> float:
    d = np.diff(grid)
    if d.size == 0:
        raise ValueError("grid must contain at least two nodes")
    if np.any(np.abs(d - d[0]) > 1e-9 * abs(d[0])):
        raise ValueError("grid must be uniform")
    return float(d[0])


@dataclass
class EulerianState:
    """Velocity/density pair plus energy measure on a uniform x-grid."""

    x: np.ndarray
    ubar: np.ndarray
    c: float
    rhobar: np.ndarray
    k: float
    mu: Measure

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.ubar = np.asarray(self.ubar, dtype=float)
        self.rhobar = np.asarray(self.rhobar, dtype=float)
        self.c = float(self.c)
        self.k = float(self.k)

    @property
    def dx(self) -> float:
        return _uniform_spacing(self.x)

    @property
    def u(self) -> np.ndarray:
        return self.ubar + self.c * chi(self.x)

    @property
    def rho(self) -> np.ndarray:
        return self.rhobar + self.k

    def check(self, decay_tol: float = 1e-6, density_tol: float = 1e-6) -> list[str]:
        """Type invariants: ubar (and rhobar) decay at the grid ends, the
        measure is admissible, and where the absolutely continuous density
        is supplied it agrees with u_x^2 + rhobar^2."""
        problems = list(self.mu.check())
        for name in ("ubar", "rhobar"):
            arr = getattr(self, name)
            edge = max(abs(float(arr[0])), abs(float(arr[-1])))
            if edge > decay_tol:
                problems.append(f"{name} does not decay at the grid ends "
                                f"({edge:.3e})")
        if self.mu.density.size == self.x.size and np.any(self.mu.density > 0):
            ux = eulerian_ux(self)
            ref = ux * ux + self.rhobar * self.rhobar
            # L1 comparison: isolated kink nodes where finite differences
            # disagree with the supplied density should not dominate
            err = float(trapezoid(np.abs(self.mu.density - ref), dx=self.dx))
            scale = 1.0 + float(trapezoid(ref, dx=self.dx))
            if err > density_tol * scale + 10.0 * self.dx:
                problems.append(
                    f"mu density deviates from u_x^2 + rhobar^2 by {err:.3e} (L1)")
        return problems


@dataclass
class LagrangianState:
    """Per-characteristic unknowns of the evolution on a uniform xi-grid."""

    xi: np.ndarray
    zeta: np.ndarray
    Ubar: np.ndarray
    c: float
    q: np.ndarray
    w: np.ndarray
    h: np.ndarray
    rbar: np.ndarray
    k: float
    tau: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.xi = np.asarray(self.xi, dtype=float)
        for name in ("zeta", "Ubar", "q", "w", "h", "rbar", "tau"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        self.c = float(self.c)
        self.k = float(self.k)
        self.t = float(self.t)

    @property
    def dxi(self) -> float:
        return _uniform_spacing(self.xi)

    @property
    def y(self) -> np.ndarray:
        return self.xi + self.zeta

    @property
    def U(self) -> np.ndarray:
        return self.Ubar + self.c * chi(self.y)

    @property
    def r(self) -> np.ndarray:
        return self.rbar + self.k * self.q

    def active(self) -> np.ndarray:
        """Boolean mask of nodes that have not yet broken (tau > t)."""
        return self.tau > self.t

    def copy(self) -> "LagrangianState":
        return replace(
            self,
            xi=self.xi.copy(),
            zeta=self.zeta.copy(),
            Ubar=self.Ubar.copy(),
            q=self.q.copy(),
            w=self.w.copy(),
            h=self.h.copy(),
            rbar=self.rbar.copy(),
            tau=self.tau.copy(),
        )


def identity_state(xi: np.ndarray, c: float = 0.0, k: float = 0.0) -> LagrangianState:
    """The rest state y = xi, U = 0, h = 0 (plus optional asymptote constants)."""
    xi = np.asarray(xi, dtype=float)
    z = np.zeros_like(xi)
    return LagrangianState(
        xi=xi, zeta=z.copy(), Ubar=z.copy(), c=c, q=np.ones_like(xi),
        w=z.copy(), h=z.copy(), rbar=z.copy(), k=k,
        tau=np.full_like(xi, math.inf), t=0.0,
    )


# ---------------------------------------------------------------------------
# region classifier g
# ---------------------------------------------------------------------------

def classify_region(point, tol_r: float = 1e-12):
    """Classify an 8-vector (y, Ubar, c, q, w, h, rbar, k) into region 1, 2 or 3.

    Region 3 holds where rbar + k*q differs from zero (relative tolerance
    tol_r); region 1 where additionally g1 <= g2 and w <= 0; region 2 is the
    remainder.  Exactly one tag applies to every point.
    """
    p = np.asarray(point, dtype=float)
    q, w, h, rbar, k = p[..., 3], p[..., 4], p[..., 5], p[..., 6], p[..., 7]
    rb = rbar + k * q
    in3 = np.abs(rb) > tol_r * (1.0 + np.abs(rbar) + np.abs(k * q))
    g1 = np.abs(w) + 2.0 * np.abs(rbar * k) + 2.0 * q
    g2 = q + h
    in1 = (~in3) & (g1 <= g2) & (w <= 0.0)
    out = np.where(in3, 3, np.where(in1, 1, 2))
    if out.ndim == 0:
        return int(out)
    return out


def g_value(point, tol_r: float = 1e-12):
    """Region-dependent scalar g of an 8-vector (y, Ubar, c, q, w, h, rbar, k).

    g = |w| + 2|rbar*k| + 2q on region 1 and g = q + h otherwise.  The two
    branches agree on the interface g1 = g2, and g = 0 at the frozen origin
    q = w = h = rbar = 0.
    """
    p = np.asarray(point, dtype=float)
    q, w, h, rbar, k = p[..., 3], p[..., 4], p[..., 5], p[..., 6], p[..., 7]
    rb = rbar + k * q
    in3 = np.abs(rb) > tol_r * (1.0 + np.abs(rbar) + np.abs(k * q))
    g1 = np.abs(w) + 2.0 * np.abs(rbar * k) + 2.0 * q
    g2 = q + h
    in1 = (~in3) & (g1 <= g2) & (w <= 0.0)
    out = np.where(in1, g1, g2)
    if out.ndim == 0:
        return float(out)
    return out


def g_values(X: LagrangianState, tol_r: float = 1e-12) -> np.ndarray:
    """g evaluated at every node of a Lagrangian state."""
    pts = np.stack(
        [X.y, X.Ubar, np.full_like(X.xi, X.c), X.q, X.w, X.h, X.rbar,
         np.full_like(X.xi, X.k)], axis=-1)
    return g_value(pts, tol_r=tol_r)


def eulerian_ux(e: EulerianState) -> np.ndarray:
    """u_x samples: centered differences of ubar plus the analytic c*chi'."""
    ux = np.gradient(e.ubar, e.dx, edge_order=2)
    return ux + e.c * chi_prime(e.x)


def g_eulerian(e: EulerianState, tol_r: float = 1e-12) -> np.ndarray:
    """g along the canonical Eulerian lift
    (x, ubar, c, 1, u_x, u_x^2 + rhobar^2, rhobar, k) of a state."""
    ux = eulerian_ux(e)
    ones = np.ones_like(e.x)
    pts = np.stack(
        [e.x, e.ubar, e.c * ones, ones, ux, ux * ux + e.rhobar * e.rhobar,
         e.rhobar, e.k * ones], axis=-1)
    return g_value(pts, tol_r=tol_r)


# ---------------------------------------------------------------------------
# admissibility checks
# ---------------------------------------------------------------------------

@dataclass
class Tolerances:
    """Numerical slacks for the admissibility checks."""

    sign: float = 1e-10          # q, h allowed to dip this far below zero
    compat: float = 1e-6         # |q h - w^2 - rbar^2| <= compat * (1 + q h)
    floor: float = 1e-12         # required lower bound on q + h
    zeta_left: float = 1e-6      # |zeta| at the left grid end
    frozen: float = 0.0          # frozen nodes must satisfy q = w = rbar = 0 exactly
    tol_r: float = 1e-12         # zero test for rbar + k q


@dataclass
class Violation:
    invariant: str
    node: int
    magnitude: float

    def __str__(self):
        return f"{self.invariant}: worst node {self.node}, magnitude {self.magnitude:.3e}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    tolerances: "Tolerances | None" = None

    @property
    def ok(self) -> bool:
        return not self.violations

    def names(self) -> set[str]:
        return {v.invariant for v in self.violations}

    def __str__(self):
        if self.ok:
            return "admissible"
        return "; ".join(str(v) for v in self.violations)


def _worst(arr) -> tuple[int, float]:
    i = int(np.argmax(arr))
    return i, float(arr[i])


def validate_G(X: LagrangianState, tol: Tolerances | None = None) -> ValidationReport:
    """Check a Lagrangian state against the admissible-set invariants.

    Diagnostic only: returns a report listing each violated invariant with
    the worst node index and magnitude; the report is empty exactly when the
    state passes every check.
    """
    tol = tol or Tolerances()
    rep = ValidationReport(tolerances=tol)

    neg_q = np.maximum(-X.q, 0.0)
    if np.any(neg_q > tol.sign):
        i, m = _worst(neg_q)
        rep.violations.append(Violation("q_nonneg", i, m))

    neg_h = np.maximum(-X.h, 0.0)
    if np.any(neg_h > tol.sign):
        i, m = _worst(neg_h)
        rep.violations.append(Violation("h_nonneg", i, m))

    resid = np.abs(X.q * X.h - X.w ** 2 - X.rbar ** 2)
    bound = tol.compat * (1.0 + X.q * X.h)
    if np.any(resid > bound):
        excess = resid - bound
        i, _ = _worst(excess)
        rep.violations.append(Violation("compatibility", i, float(resid[i])))

    short = np.maximum(tol.floor - (X.q + X.h), 0.0)
    if np.any(short > 0.0):
        i, m = _worst(short)
        rep.violations.append(Violation("qh_floor", i, float(X.q[i] + X.h[i])))

    frozen = ~X.active()
    if np.any(frozen):
        bad = (np.abs(X.q) + np.abs(X.w) + np.abs(X.rbar)) * frozen
        if np.any(bad > tol.frozen):
            i, m = _worst(bad)
            rep.violations.append(Violation("frozen_nodes", i, m))

    if abs(X.zeta[0]) > tol.zeta_left:
        rep.violations.append(Violation("zeta_left_decay", 0, float(abs(X.zeta[0]))))

    return rep


# ---------------------------------------------------------------------------
# norm diagnostics
# ---------------------------------------------------------------------------

def state_norms(X: LagrangianState) -> dict[str, float]:
    """Discrete versions of the norms used as size diagnostics.

    The V-norm sums the sup norm of zeta, L2 norms of (Ubar, q-1, w, h, rbar)
    and |c| + |k|; the E-flavoured variant adds the sup norms of the L2
    components.  Also reports sup 1/(q+h), the quantity whose boundedness
    keeps the state away from full collapse.
    """
    dxi = X.dxi

    def l2(a):
        return float(np.sqrt(trapezoid(a * a, dx=dxi)))

    def sup(a):
        return float(np.max(np.abs(a)))

    v = X.q - 1.0
    comps = {"Ubar": X.Ubar, "v": v, "w": X.w, "h": X.h, "rbar": X.rbar}
    norm_V = sup(X.zeta) + abs(X.c) + abs(X.k) + sum(l2(a) for a in comps.values())
    norm_Vbar = norm_V + sum(sup(a) for a in comps.values())
    return {
        "V": norm_V,
        "Vbar": norm_Vbar,
        "inv_qh_sup": float(np.max(1.0 / (X.q + X.h))),
        "zeta_sup": sup(X.zeta),
        "g_minus_one_l1": float(trapezoid(np.abs(g_values(X) - 1.0), dx=dxi)),
    }
