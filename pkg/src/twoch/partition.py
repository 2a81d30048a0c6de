"""Canonical partition function used to absorb a nonzero right asymptote.

The solver decomposes velocities as u = ubar + c*chi where chi is a fixed
smooth ramp: chi(x) = 0 for x <= 0, chi(x) = 1 for x >= 1, nondecreasing in
between.  Different admissible ramps give equivalent norms, so one canonical
choice is fixed here: the quintic smoothstep, the unique degree-5 polynomial
with chi(0)=0, chi(1)=1 and vanishing first and second derivatives at both
ends.  That makes chi a C^2 function globally, and both chi' and chi*chi''
are supported in [0, 1].
"""

from __future__ import annotations

import numpy as np

__all__ = ["chi", "chi_prime", "chi_second", "chi_correction"]


def _clip01(x):
    return np.clip(x, 0.0, 1.0)


def chi(x):
    """Quintic smoothstep ramp: 6s^5 - 15s^4 + 10s^3 on [0,1], clamped outside."""
    s = _clip01(np.asarray(x, dtype=float))
    return s * s * s * (s * (6.0 * s - 15.0) + 10.0)


def chi_prime(x):
    """First derivative of chi; 30 s^2 (1-s)^2 on [0,1], zero outside."""
    x = np.asarray(x, dtype=float)
    s = _clip01(x)
    inside = (x > 0.0) & (x < 1.0)
    val = 30.0 * s * s * (1.0 - s) ** 2
    return np.where(inside, val, 0.0)


def chi_second(x):
    """Second derivative of chi; 60 s (1-s) (1-2s) on [0,1], zero outside."""
    x = np.asarray(x, dtype=float)
    s = _clip01(x)
    inside = (x > 0.0) & (x < 1.0)
    val = 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s)
    return np.where(inside, val, 0.0)


def chi_correction(x):
    """chi'(x)^2 + chi(x) chi''(x), the density entering the asymptote
    correction integrals.  Supported in [0, 1]."""
    return chi_prime(x) ** 2 + chi(x) * chi_second(x)
