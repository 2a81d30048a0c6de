"""Nonlocal operators of the Lagrangian evolution in O(N) per call.

Both operators convolve grid densities against the kernel exp(-|y_i - y_j|)
with y nondecreasing.  Writing A_i for the left partial sum and B_i for the
right one,

    A_i = sum_{j <= i} exp(-(y_i - y_j)) v_j,
    B_i = sum_{j >= i} exp(-(y_j - y_i)) v_j,

both follow one-term recurrences with the multiplicative factor
exp(-(y_{i+1} - y_i)), so the full convolution (A + B - v) and its signed
variant (A - B, which realises the sgn(xi - eta) weight with zero diagonal)
cost O(N).  The kernel is thereby evaluated at exact node separations, with
no catastrophic behaviour at large |y_i - y_j|.

Two densities are swept per call: the main one

    (2 c chi(y) Ubar + Ubar^2) q + h/2 + k rbar

restricted to unbroken nodes in dissipative mode, and the asymptote
correction 2 c^2 (chi'^2 + chi chi'')(y) q over all nodes.  Quadrature is
trapezoidal on the uniform xi-grid.

The sweeps are internally sequential but reentrant: distinct states (with
distinct workspaces) may be processed concurrently.
"""

from __future__ import annotations

import numpy as np

from .partition import chi, chi_prime, chi_correction
from .state import LagrangianState

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap

__all__ = ["KernelWorkspace", "compute_PQ", "compute_PQ_conservative", "NonMonotoneYError"]


class NonMonotoneYError(ValueError):
    """Raised when the characteristic positions y are not nondecreasing."""


@njit(cache=True)
def _sweep(decay, v, fwd, bwd):  # pragma: no cover - exercised via compute_PQ
    n = v.size
    acc = 0.0
    for i in range(n):
        acc = acc * decay[i] + v[i]
        fwd[i] = acc
    acc = 0.0
    for i in range(n - 1, -1, -1):
        if i < n - 1:
            acc = acc * decay[i + 1]
        acc = acc + v[i]
        bwd[i] = acc


def _sweep_py(decay, v, fwd, bwd):
    n = v.size
    acc = 0.0
    for i in range(n):
        acc = acc * decay[i] + v[i]
        fwd[i] = acc
    acc = 0.0
    for i in range(n - 1, -1, -1):
        if i < n - 1:
            acc = acc * decay[i + 1]
        acc = acc + v[i]
        bwd[i] = acc


_sweep_impl = _sweep if _HAVE_NUMBA else _sweep_py


class KernelWorkspace:
    """Reusable buffers for the kernel sweeps on a fixed grid size."""

    def __init__(self, n: int):
        self.n = n
        self.decay = np.empty(n)
        self.v_main = np.empty(n)
        self.v_corr = np.empty(n)
        self.fwd = np.empty(n)
        self.bwd = np.empty(n)
        self.fwd2 = np.empty(n)
        self.bwd2 = np.empty(n)


def _trapezoid_weights(n: int, dxi: float) -> np.ndarray:
    wts = np.full(n, dxi)
    wts[0] = 0.5 * dxi
    wts[-1] = 0.5 * dxi
    return wts


def compute_PQ(
    X: LagrangianState,
    mask: np.ndarray | None = None,
    workspace: KernelWorkspace | None = None,
    mono_tol: float = 1e-6,
):
    """Evaluate (P - U^2 - k^2/2, Q) on the xi-grid of a Lagrangian state.

    `mask` selects the nodes contributing to the main density; by default it
    is the state's unbroken set, which is the dissipative convention.  The
    correction density carries a factor q and therefore needs no mask.

    Raises NonMonotoneYError if y decreases anywhere beyond `mono_tol`.
    Smaller violations are clamped to zero separation: near a forming
    collapse the y-field is flat to within discretization noise, where
    exp(-|y_i - y_j|) ~ 1 regardless, so the clamp perturbs the operators
    at the order of the noise itself.  Evolution code passes a looser
    tolerance sized for that singular-layer noise.
    """
    y = X.y
    dy = np.diff(y)
    if dy.size and float(np.min(dy)) < -mono_tol:
        i = int(np.argmin(dy))
        raise NonMonotoneYError(
            f"y decreases by {-float(dy[i]):.3e} between nodes {i} and {i + 1}")

    n = X.xi.size
    ws = workspace if workspace is not None and workspace.n == n else KernelWorkspace(n)

    if mask is None:
        mask = X.active()

    chi_y = chi(y)
    chip_y = chi_prime(y)
    wts = _trapezoid_weights(n, X.dxi)

    main = (2.0 * X.c * chi_y * X.Ubar + X.Ubar ** 2) * X.q + 0.5 * X.h + X.k * X.rbar
    np.multiply(main, wts, out=ws.v_main)
    ws.v_main[~mask] = 0.0

    np.multiply(2.0 * X.c ** 2 * chi_correction(y) * X.q, wts, out=ws.v_corr)

    ws.decay[0] = 1.0
    np.exp(np.minimum(-dy, 0.0), out=ws.decay[1:])

    _sweep_impl(ws.decay, ws.v_main, ws.fwd, ws.bwd)
    _sweep_impl(ws.decay, ws.v_corr, ws.fwd2, ws.bwd2)

    sym = ws.fwd + ws.bwd - ws.v_main + ws.fwd2 + ws.bwd2 - ws.v_corr
    asym = ws.fwd - ws.bwd + ws.fwd2 - ws.bwd2

    pminus = -2.0 * X.c * chi_y * X.Ubar - X.Ubar ** 2 + 0.5 * sym
    qout = 2.0 * X.c ** 2 * chi_y * chip_y - 0.5 * asym
    return pminus, qout


def compute_PQ_conservative(
    X: LagrangianState,
    workspace: KernelWorkspace | None = None,
    mono_tol: float = 1e-10,
):
    """Same operators with the breaking mask disabled (all nodes contribute)."""
    full = np.ones(X.xi.size, dtype=bool)
    return compute_PQ(X, mask=full, workspace=workspace, mono_tol=mono_tol)
