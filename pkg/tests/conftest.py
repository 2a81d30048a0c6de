"""Shared fixtures and independent oracles for the test suite."""

import numpy as np
import pytest

from twoch.partition import chi, chi_prime, chi_correction
from twoch.state import LagrangianState


def smooth_field(rng, xi, scale=1.0, corr=8, decay=100.0):
    """Random smooth decaying field: filtered white noise under a Gaussian
    envelope."""
    n = xi.size
    z = rng.standard_normal(n)
    k = np.arange(-4 * corr, 4 * corr + 1)
    ker = np.exp(-0.5 * (k / corr) ** 2)
    ker /= ker.sum()
    f = np.convolve(z, ker, mode="same")
    return scale * f * np.exp(-xi ** 2 / decay)


def random_admissible_state(rng, n=256, span=20.0, frozen_runs=1,
                            c_scale=0.5, k_scale=0.5):
    """Draw a state satisfying the admissibility invariants exactly.

    q, w, rbar are smooth; h = (w^2 + rbar^2)/q enforces compatibility; zeta
    is the cumulative of q - 1 so y is nondecreasing with zeta -> 0 on the
    left.  Optionally a few runs are collapsed (q = w = rbar = 0, h > 0,
    breaking time zero) to exercise masked kernels.
    """
    xi = np.linspace(-span, span, n)
    dxi = xi[1] - xi[0]
    q = np.clip(1.0 + smooth_field(rng, xi, 0.5), 0.1, None)
    w = smooth_field(rng, xi, 0.7)
    rbar = smooth_field(rng, xi, 0.5)
    h = (w ** 2 + rbar ** 2) / q
    tau = np.full(n, np.inf)

    Ubar = smooth_field(rng, xi, 0.8)
    for _ in range(frozen_runs):
        i0 = rng.integers(n // 8, n - n // 8)
        i1 = min(i0 + rng.integers(2, n // 16), n - 2)
        q[i0:i1] = 0.0
        w[i0:i1] = 0.0
        rbar[i0:i1] = 0.0
        h[i0:i1] = 0.3 + np.abs(smooth_field(rng, xi, 1.0))[i0:i1]
        tau[i0:i1] = 0.0
        Ubar[i0:i1] = Ubar[i0]  # w = 0 means U is constant across the run

    zeta = np.concatenate([[0.0], np.cumsum(0.5 * (q[1:] + q[:-1]) * dxi)])
    zeta -= (xi - xi[0])
    return LagrangianState(
        xi=xi, zeta=zeta, Ubar=Ubar,
        c=float(c_scale * rng.standard_normal()), q=q, w=w, h=h, rbar=rbar,
        k=float(k_scale * rng.standard_normal()), tau=tau, t=0.0)


def oracle_PQ(X, mask=None):
    """Direct O(N^2) trapezoid double sums for the nonlocal operators."""
    n = X.xi.size
    dxi = X.dxi
    y = X.y
    if mask is None:
        mask = X.active()
    wts = np.full(n, dxi)
    wts[0] = wts[-1] = 0.5 * dxi
    main = (2.0 * X.c * chi(y) * X.Ubar + X.Ubar ** 2) * X.q \
        + 0.5 * X.h + X.k * X.rbar
    main = np.where(mask, main, 0.0) * wts
    corr = 2.0 * X.c ** 2 * chi_correction(y) * X.q * wts
    kernel = np.exp(-np.abs(y[:, None] - y[None, :]))
    sign = np.sign(np.arange(n)[:, None] - np.arange(n)[None, :])
    pminus = (-2.0 * X.c * chi(y) * X.Ubar - X.Ubar ** 2
              + 0.5 * kernel @ main + 0.5 * kernel @ corr)
    qout = (2.0 * X.c ** 2 * chi(y) * chi_prime(y)
            - 0.5 * (sign * kernel) @ main - 0.5 * (sign * kernel) @ corr)
    return pminus, qout


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
