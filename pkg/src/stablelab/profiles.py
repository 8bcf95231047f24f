"""Small reusable C^2 shape functions (smoothsteps, plateaus, cutoffs)."""

from __future__ import annotations

import numpy as np


def smoothstep01(u):
    """Quintic smoothstep: 0 -> 1 on [0, 1] with zero slope/curvature at both
    ends; clamped outside."""
    u = np.clip(u, 0.0, 1.0)
    return u**3 * (10.0 + u * (-15.0 + 6.0 * u))


def ramp_plateau(u):
    """C^2 monotone ramp on [0, 1]: value 0 -> 1, slope 1 -> 0, zero
    curvature at both ends.  Used to flatten a linear profile onto a
    plateau while keeping the junction C^2."""
    u = np.asarray(u, dtype=float)
    v = np.clip(u, 0.0, 1.0)
    core = v * (1.0 + v * v * (4.0 + v * (-7.0 + 3.0 * v)))
    return np.where(u >= 1.0, 1.0, np.where(u <= 0.0, u, core))


def cutoff_profile(r, k):
    """Radial cutoff: 1 on [0, k], quintic descent on [k, k+1], 0 beyond."""
    r = np.asarray(r, dtype=float)
    return 1.0 - smoothstep01(r - k)


def truncate_weight(s, n):
    """Plateau truncation: identity below n, constant 2n above 2n, C^2
    monotone interpolation in between."""
    s = np.asarray(s, dtype=float)
    return np.where(s <= n, s, n * (1.0 + ramp_plateau((s - n) / n)))
