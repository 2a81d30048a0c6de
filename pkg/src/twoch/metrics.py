"""Distances and energy diagnostics.

The Lagrangian distance combines the mixed sup/L2 state norm, the L2
distance of the region-dependent scalar g, and a binary term that fires when
the sign supports of r = rbar + k q differ on a set of labels with positive
measure.  The g term is what separates a collapsed (dissipative) state from
a re-expanding (conservative) one after a collision, where the plain norm is
blind.  The Eulerian distance is the Lagrangian distance of the canonical
lifts.

Energy bookkeeping tracks

    sigma           = int Ubar^2 q dxi + int h dxi
    mu_total        = int h dxi                      (all labels)
    eulerian_energy = int h dxi over q > 0           (= int dmu_ac)
    F               = mu_total - eulerian_energy,

so F is the amount of energy concentrated on sets of measure zero; it is
nonnegative and, for dissipative evolution, nondecreasing in time.

All functions here are pure and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .state import EulerianState, LagrangianState, g_values, trapezoid
from .transform import to_lagrangian

__all__ = [
    "GridMismatchError",
    "MetricBreakdown",
    "d_R",
    "d_R_components",
    "d_D",
    "kappa_set",
    "EnergyReport",
    "energy_report",
]


class GridMismatchError(ValueError):
    """The two states do not share a label grid."""


@dataclass
class MetricBreakdown:
    total: float
    V: float
    g_l2: float
    kappa: float

    def as_dict(self) -> dict[str, float]:
        return {"total": self.total, "V": self.V, "g_l2": self.g_l2,
                "kappa": self.kappa}


def _check_grids(a: np.ndarray, b: np.ndarray):
    if a.size != b.size or abs(a[0] - b[0]) > 1e-9 or abs(a[-1] - b[-1]) > 1e-9:
        raise GridMismatchError("states live on different label grids")


def d_R_components(
    X: LagrangianState,
    Y: LagrangianState,
    tol_r: float = 1e-12,
    meas_tol: float | None = None,
) -> MetricBreakdown:
    """d_R and its pieces: the V-norm of the difference, ||g(X) - g(Y)||_L2,
    and the r-support mismatch indicator.

    The sup component of the V-norm is taken on zeta rather than y so that
    states parametrized over different windows stay comparable.  The
    indicator discretizes "positive measure" as (mismatch count) * dxi
    exceeding meas_tol, which defaults to twice the label spacing.
    """
    _check_grids(X.xi, Y.xi)
    dxi = X.dxi
    if meas_tol is None:
        meas_tol = 2.0 * dxi

    def l2(a):
        return float(np.sqrt(trapezoid(a * a, dx=dxi)))

    v_norm = (
        float(np.max(np.abs(X.zeta - Y.zeta)))
        + l2(X.Ubar - Y.Ubar)
        + abs(X.c - Y.c)
        + l2(X.q - Y.q)
        + l2(X.w - Y.w)
        + l2(X.h - Y.h)
        + l2(X.rbar - Y.rbar)
        + abs(X.k - Y.k)
    )

    g_term = l2(g_values(X, tol_r=tol_r) - g_values(Y, tol_r=tol_r))

    rX = X.rbar + X.k * X.q
    rY = Y.rbar + Y.k * Y.q
    zX = np.abs(rX) <= tol_r * (1.0 + np.abs(X.rbar) + np.abs(X.k * X.q))
    zY = np.abs(rY) <= tol_r * (1.0 + np.abs(Y.rbar) + np.abs(Y.k * Y.q))
    mismatch = np.count_nonzero(zX != zY) * dxi
    kappa = 1.0 if mismatch > meas_tol else 0.0

    return MetricBreakdown(total=v_norm + g_term + kappa, V=v_norm,
                           g_l2=g_term, kappa=kappa)


def d_R(X: LagrangianState, Y: LagrangianState, **kw) -> float:
    return d_R_components(X, Y, **kw).total


def d_D(
    e1: EulerianState,
    e2: EulerianState,
    xi: np.ndarray | None = None,
    **kw,
) -> float:
    """Eulerian distance: d_R of the canonically-labelled Lagrangian images.

    When no label grid is supplied, one is built spanning both supports with
    the finer of the two grid spacings.
    """
    if xi is None:
        lo = min(e1.x[0], e2.x[0]) - 1.0
        hi = max(e1.x[-1], e2.x[-1]) + 1.0
        tot = max(e1.mu.total(e1.x), e2.mu.total(e2.x))
        dx = min(e1.dx, e2.dx)
        n = int(np.ceil((hi - lo + tot) / dx)) + 1
        xi = np.linspace(lo, hi + tot, n)
    return d_R(to_lagrangian(e1, xi), to_lagrangian(e2, xi), **kw)


def kappa_set(
    X: LagrangianState,
    gamma: float,
    tol_r: float = 1e-12,
) -> np.ndarray:
    """Indices of nodes primed for imminent breaking:

        h/(q+h) >= 1 - gamma,  w <= 0,  r = rbar + k q = 0 (within tol_r).

    Valid for gamma in (0, 1/2]; every node that breaks within a short
    enough upcoming window lies in this set.
    """
    if not 0.0 < gamma <= 0.5:
        raise ValueError("gamma must lie in (0, 1/2]")
    ratio = X.h / (X.q + X.h)
    r = X.rbar + X.k * X.q
    r_zero = np.abs(r) <= tol_r * (1.0 + np.abs(X.rbar) + np.abs(X.k * X.q))
    sel = (ratio >= 1.0 - gamma) & (X.w <= 0.0) & r_zero
    return np.flatnonzero(sel)


@dataclass
class EnergyReport:
    t: float
    sigma: float
    mu_total: float
    eulerian_energy: float
    F: float

    def as_dict(self) -> dict[str, float]:
        return {"t": self.t, "sigma": self.sigma, "mu_total": self.mu_total,
                "eulerian_energy": self.eulerian_energy, "F": self.F}


def energy_report(X: LagrangianState, q_tol: float = 1e-9) -> EnergyReport:
    """Energy functionals of a Lagrangian state (see module docstring)."""
    dxi = X.dxi
    sigma = float(trapezoid(X.Ubar ** 2 * X.q, dx=dxi) + trapezoid(X.h, dx=dxi))
    mu_total = float(trapezoid(X.h, dx=dxi))
    h_active = np.where(X.q >= q_tol, X.h, 0.0)
    eulerian = float(trapezoid(h_active, dx=dxi))
    return EnergyReport(t=X.t, sigma=sigma, mu_total=mu_total,
                        eulerian_energy=eulerian, F=mu_total - eulerian)
