"""Maps between Eulerian and Lagrangian descriptions, the relabeling group
action, and the normalization onto canonically-labelled states.

The forward map inverts the nondecreasing function

    Psi(y) = mu((-inf, y)) + y

at each grid label xi; atoms of mu produce jumps of Psi and hence plateaus
of y where the Jacobian q vanishes and the energy density h equals one.
The backward map pushes h dxi and rbar dxi forward under y: nodes with
q > 0 contribute absolutely continuous densities h/q and rbar/q at x = y(xi),
while maximal runs of q ~ 0 collapse to point atoms.

All compositions use piecewise-linear interpolation, which preserves
monotonicity and keeps pushforward masses summable.  Everything in this
module is a pure function of its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .state import (
    EulerianState,
    LagrangianState,
    Measure,
    eulerian_ux,
)

__all__ = [
    "GridTooCoarseError",
    "InconsistentStateError",
    "Relabeling",
    "to_lagrangian",
    "to_eulerian",
    "relabel",
    "normalize",
    "compose",
    "f0_deviation",
]


class GridTooCoarseError(ValueError):
    """An atom of the energy measure is too small for the label grid."""


class InconsistentStateError(ValueError):
    """A collapsed node carries nonzero rbar, contradicting absolute
    continuity of the pushforward of rbar dxi."""


# ---------------------------------------------------------------------------
# Eulerian -> Lagrangian
# ---------------------------------------------------------------------------

def _psi_table(e: EulerianState):
    """Knots (x, Psi(x)) of the monotone map Psi(y) = mu((-inf,y)) + y.

    Atoms insert a pair of knots with equal x and a jump of size mass, which
    is exactly what linear interpolation needs to resolve plateaus of the
    inverse.  The measure left of y excludes an atom sitting at y itself.
    """
    x = e.x
    dens = e.mu.density
    cum = np.concatenate(
        [[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(x))])

    xs: list[float] = []
    ps: list[float] = []
    acc_atoms = 0.0
    ai = 0
    atoms = e.mu.atoms
    for j, xj in enumerate(x):
        while ai < len(atoms) and atoms[ai][0] <= xj:
            a, m = atoms[ai]
            if a < x[0] or a > x[-1]:
                raise ValueError("atom outside the state grid")
            fa = float(np.interp(a, x, cum))
            xs.append(a)
            ps.append(a + fa + acc_atoms)
            acc_atoms += m
            xs.append(a)
            ps.append(a + fa + acc_atoms)
            ai += 1
        xs.append(float(xj))
        ps.append(float(xj) + float(cum[j]) + acc_atoms)
    if ai < len(atoms):
        raise ValueError("atom outside the state grid")
    return np.asarray(xs), np.asarray(ps)


def _invert_psi(xs, ps, xi):
    """Evaluate the generalized inverse of Psi at the labels xi, with slope-1
    extension beyond the tabulated range (the measure vanishes out there)."""
    y = np.interp(xi, ps, xs)
    left = xi < ps[0]
    right = xi > ps[-1]
    y = np.where(left, xs[0] + (xi - ps[0]), y)
    y = np.where(right, xs[-1] + (xi - ps[-1]), y)
    return y


def to_lagrangian(
    e: EulerianState,
    xi: np.ndarray,
    q_tol: float = 1e-9,
) -> LagrangianState:
    """Lagrangian state equivalent to an Eulerian one on the label grid xi.

    y comes from inverting mu((-inf,y)) + y; at non-collapsed labels the
    remaining unknowns are evaluated pointwise from

        b = u_x(y)^2 + rhobar(y)^2,  q = 1/(1+b),  h = b q = 1 - q,
        w = u_x(y) q,  rbar = rhobar(y) q,

    which makes the compatibility relation q h = w^2 + rbar^2 hold exactly.
    Labels inside an atom's plateau get q = w = rbar = 0, h = 1 and breaking
    time zero.  Raises GridTooCoarseError when an atom's mass is below twice
    the label spacing, since its plateau would then be unresolved.
    """
    xi = np.asarray(xi, dtype=float)
    dxi = float(xi[1] - xi[0])
    for a, m in e.mu.atoms:
        if m < 2.0 * dxi:
            raise GridTooCoarseError(
                f"atom at {a} has mass {m:.3e} < 2*dxi = {2 * dxi:.3e}")

    xs, ps = _psi_table(e)
    y = _invert_psi(xs, ps, xi)

    # labels strictly inside an atom's jump interval are collapsed
    plateau = np.zeros(xi.size, dtype=bool)
    acc = 0.0
    cum = np.concatenate(
        [[0.0], np.cumsum(0.5 * (e.mu.density[1:] + e.mu.density[:-1]) * np.diff(e.x))])
    for a, m in e.mu.atoms:
        lo = a + float(np.interp(a, e.x, cum)) + acc
        acc += m
        hi = lo + m
        plateau |= (xi > lo) & (xi < hi)

    ux = eulerian_ux(e)
    ux_y = np.interp(y, e.x, ux, left=0.0, right=0.0)
    rb_y = np.interp(y, e.x, e.rhobar, left=0.0, right=0.0)
    b = ux_y ** 2 + rb_y ** 2
    q = 1.0 / (1.0 + b)
    h = b * q
    w = ux_y * q
    rbar = rb_y * q

    q[plateau] = 0.0
    h[plateau] = 1.0
    w[plateau] = 0.0
    rbar[plateau] = 0.0

    Ubar = np.interp(y, e.x, e.ubar, left=0.0, right=0.0)
    tau = np.where(q < q_tol, 0.0, math.inf)

    return LagrangianState(
        xi=xi, zeta=y - xi, Ubar=Ubar, c=e.c, q=q, w=w, h=h, rbar=rbar,
        k=e.k, tau=tau, t=0.0)


# ---------------------------------------------------------------------------
# Lagrangian -> Eulerian
# ---------------------------------------------------------------------------

def _collapsed_runs(q: np.ndarray, q_tol: float):
    """Maximal index runs where q < q_tol, as (start, stop) with stop exclusive."""
    flat = q < q_tol
    runs = []
    i = 0
    n = q.size
    while i < n:
        if flat[i]:
            j = i
            while j < n and flat[j]:
                j += 1
            runs.append((i, j))
            i = j
        else:
            i += 1
    return runs


def to_eulerian(
    X: LagrangianState,
    x: np.ndarray,
    q_tol: float = 1e-9,
    rbar_tol: float = 1e-7,
) -> EulerianState:
    """Eulerian state recovered from a Lagrangian one on the output grid x.

    Collapsed runs (q below q_tol) with accumulated mass of at least twice
    the label spacing become one atom at the run's common position; runs
    below that threshold are beneath grid resolution and are dropped, which
    loses at most 2*dxi of mass per run.  Raises InconsistentStateError when
    a collapsed node still carries rbar, as rbar dxi must push forward to an
    absolutely continuous measure.
    """
    x = np.asarray(x, dtype=float)
    y = X.y
    dxi = X.dxi

    bad = (X.q < q_tol) & (np.abs(X.rbar) > rbar_tol)
    if np.any(bad):
        i = int(np.argmax(np.abs(X.rbar) * (X.q < q_tol)))
        raise InconsistentStateError(
            f"collapsed node {i} carries rbar = {X.rbar[i]:.3e}")

    active = X.q >= q_tol
    if active.sum() < 2:
        # fully collapsed state: u == 0 plus the constants
        atoms = []
        for i0, i1 in _collapsed_runs(X.q, q_tol):
            mass = float(np.sum(X.h[i0:i1]) * dxi)
            if mass >= 2.0 * dxi:
                atoms.append((float(np.mean(y[i0:i1])), mass))
        zero = np.zeros_like(x)
        return EulerianState(x=x, ubar=zero, c=X.c, rhobar=zero.copy(), k=X.k,
                             mu=Measure(density=zero.copy(), atoms=atoms))

    # collapsed layers can leave active positions locally unordered by
    # discretization noise; a stable sort keeps the interpolation sane
    order = np.argsort(y[active], kind="stable")
    ya = y[active][order]
    qa = X.q[active][order]
    ub = np.interp(x, ya, X.Ubar[active][order], left=0.0, right=0.0)
    rb = np.interp(x, ya, X.rbar[active][order] / qa, left=0.0, right=0.0)
    dens = np.interp(x, ya, X.h[active][order] / qa, left=0.0, right=0.0)
    dens = np.maximum(dens, 0.0)

    atoms = []
    for i0, i1 in _collapsed_runs(X.q, q_tol):
        mass = float(np.sum(X.h[i0:i1]) * dxi)
        if mass >= 2.0 * dxi:
            atoms.append((float(np.mean(y[i0:i1])), mass))
    atoms.sort()
    merged: list[tuple[float, float]] = []
    for a, m in atoms:
        if merged and a - merged[-1][0] <= 1e-12 * max(1.0, abs(a)):
            merged[-1] = (merged[-1][0], merged[-1][1] + m)
        else:
            merged.append((a, m))

    return EulerianState(x=x, ubar=ub, c=X.c, rhobar=rb, k=X.k,
                         mu=Measure(density=dens, atoms=merged))


# ---------------------------------------------------------------------------
# relabeling
# ---------------------------------------------------------------------------

@dataclass
class Relabeling:
    """Samples of an increasing reparametrization f of the label line and of
    its inverse, both on the same grid.  Valid relabelings keep f - id and
    f^{-1} - id bounded with f_xi - 1 square-summable; kappa_hat() reports
    the sup bound actually attained."""

    xi: np.ndarray
    values: np.ndarray
    inverse: np.ndarray

    @classmethod
    def from_samples(cls, xi, values) -> "Relabeling":
        xi = np.asarray(xi, dtype=float)
        values = np.asarray(values, dtype=float)
        if np.any(np.diff(values) <= 0):
            raise ValueError("relabeling samples must be strictly increasing")
        inverse = np.interp(xi, values, xi)
        return cls(xi=xi, values=values, inverse=inverse)

    @classmethod
    def identity(cls, xi) -> "Relabeling":
        xi = np.asarray(xi, dtype=float)
        return cls(xi=xi, values=xi.copy(), inverse=xi.copy())

    def f_xi(self) -> np.ndarray:
        return np.gradient(self.values, self.xi[1] - self.xi[0], edge_order=2)

    def kappa_hat(self) -> float:
        dev = max(float(np.max(np.abs(self.values - self.xi))),
                  float(np.max(np.abs(self.inverse - self.xi))))
        slope = max(float(np.max(np.abs(self.f_xi() - 1.0))),
                    float(np.max(np.abs(
                        np.gradient(self.inverse, self.xi[1] - self.xi[0]) - 1.0))))
        return max(dev, slope)


def _interp_tau(f_vals, xi, tau):
    # nearest-node lookup; tau can hold +inf which linear interpolation mangles
    idx = np.clip(np.searchsorted(xi, f_vals), 1, xi.size - 1)
    left_closer = (f_vals - xi[idx - 1]) < (xi[idx] - f_vals)
    return tau[np.where(left_closer, idx - 1, idx)]


def relabel(X: LagrangianState, f: Relabeling) -> LagrangianState:
    """Action X o f: compose y, Ubar with f and carry the Jacobian factor
    f_xi onto the densities q, w, h, rbar.  Breaking times are composed
    without a Jacobian.  Scalars c and k are untouched.

    Labels falling outside the grid are handled by the natural far-field
    extension: y continues with slope one, all other fields with their end
    values."""
    xi = X.xi
    fv = np.clip(f.values, xi[0], xi[-1])
    fx = f.f_xi()

    y_new = np.interp(fv, xi, X.y) + (f.values - fv)
    out = LagrangianState(
        xi=xi,
        zeta=y_new - xi,
        Ubar=np.interp(fv, xi, X.Ubar),
        c=X.c,
        q=np.interp(fv, xi, X.q) * fx,
        w=np.interp(fv, xi, X.w) * fx,
        h=np.interp(fv, xi, X.h) * fx,
        rbar=np.interp(fv, xi, X.rbar) * fx,
        k=X.k,
        tau=_interp_tau(fv, xi, X.tau),
        t=X.t,
    )
    return out


def compose(f: Relabeling, g: Relabeling) -> Relabeling:
    """f o g as a relabeling on the common grid."""
    vals = np.interp(g.values, f.xi, f.values)
    return Relabeling.from_samples(f.xi, vals)


def cumulative_h(X: LagrangianState) -> np.ndarray:
    """H(xi) = integral of h up to xi from the left grid end (trapezoid)."""
    dxi = X.dxi
    H = np.zeros_like(X.h)
    H[1:] = np.cumsum(0.5 * (X.h[1:] + X.h[:-1]) * dxi)
    return H


def f0_deviation(X: LagrangianState) -> float:
    """sup |y + H - id|, the distance from canonical labelling."""
    return float(np.max(np.abs(X.y + cumulative_h(X) - X.xi)))


def normalize(X: LagrangianState) -> LagrangianState:
    """Reparametrize onto canonical labels: X o (y + H)^{-1}.

    Idempotent up to interpolation error, invariant under relabeling, and
    the identity on states that already satisfy y + H = id.
    """
    s = X.y + cumulative_h(X)
    eps = 1e-14 * max(1.0, float(np.max(np.abs(s))))
    s = np.maximum.accumulate(s + eps * np.arange(s.size))
    f_vals = np.interp(X.xi, s, X.xi)
    # beyond the tabulated range s has slope q + h = 1 in the far field
    f_vals = np.where(X.xi < s[0], X.xi[0] + (X.xi - s[0]), f_vals)
    f_vals = np.where(X.xi > s[-1], X.xi[-1] + (X.xi - s[-1]), f_vals)
    f_vals = np.maximum.accumulate(f_vals + eps * np.arange(f_vals.size))
    f = Relabeling.from_samples(X.xi, f_vals)
    return relabel(X, f)
