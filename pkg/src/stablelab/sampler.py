"""Exact sampling of isotropic stable increments in R^d.

The increment Z_dt with characteristic function exp(-dt |k|^alpha) is
built by subordination: Z = B_(2 S), where B is standard d-dimensional
Brownian motion and S a one-sided stable subordinator with Laplace
transform exp(-dt u^(alpha/2)).  The time-scale factor 2 comes from
E exp(i k . B_(2S)) = E exp(-|k|^2 S) = exp(-dt (|k|^2)^(alpha/2)).

One-sided stable variables use Kanter's representation
    S = (A(theta) / E) ** ((1 - sigma) / sigma),
    A(theta) = sin(sigma theta)^(sigma/(1-sigma)) * sin((1-sigma) theta)
               / sin(theta)^(1/(1-sigma)),
with theta uniform on (0, pi) and E a unit exponential; then
E exp(-u S) = exp(-u^sigma).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, ParameterError

_MAX_VALUES = 2**28


@dataclass(frozen=True)
class StableParams:
    """Parameters of the isotropic stable increment law."""

    alpha: float
    dim: int
    seed: int

    def __post_init__(self):
        if not (1.0 < self.alpha < 2.0):
            raise ParameterError(f"alpha must lie in (1, 2), got {self.alpha}")
        if self.dim < 1:
            raise ParameterError(f"dim must be >= 1, got {self.dim}")
        if not (0 <= self.seed < 2**64):
            raise ParameterError("seed must fit in 64 unsigned bits")


@dataclass
class IncrementBatch:
    """A batch of i.i.d. stable increments over one time step."""

    params: StableParams
    dt: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.dt <= 0:
            raise ParameterError("dt must be positive")
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != self.params.dim:
            raise ParameterError("values must have shape (n, dim)")
        if not np.all(np.isfinite(self.values)):
            raise ParameterError("increment values must be finite")


def _kanter_positive_stable(sigma: float, n: int, rng) -> np.ndarray:
    theta = rng.uniform(0.0, np.pi, size=n)
    expo = rng.standard_exponential(size=n)
    ratio = (1.0 - sigma) / sigma
    a = (np.sin(sigma * theta) ** (sigma / (1.0 - sigma))
         * np.sin((1.0 - sigma) * theta)
         / np.sin(theta) ** (1.0 / (1.0 - sigma)))
    return (a / expo) ** ratio


def sample_subordinator(alpha_half: float, dt: float, n: int, seed) -> np.ndarray:
    """i.i.d. samples S > 0 with E exp(-u S) = exp(-dt u^alpha_half)."""
    if not (0.5 < alpha_half < 1.0):
        raise ParameterError(f"alpha_half must lie in (1/2, 1), got {alpha_half}")
    if dt <= 0:
        raise ParameterError("dt must be positive")
    if n < 0:
        raise ParameterError("n must be nonnegative")
    if n == 0:
        return np.empty(0)
    if n > _MAX_VALUES:
        raise CapacityError(f"{n} subordinator samples exceed capacity")
    rng = _rng_for(seed, "subordinator")
    return dt ** (1.0 / alpha_half) * _kanter_positive_stable(alpha_half, n, rng)


def sample_increments(params: StableParams, dt: float, n: int) -> IncrementBatch:
    """n i.i.d. samples of Z_dt - Z_0; bit-reproducible from the seed."""
    if dt <= 0:
        raise ParameterError("dt must be positive")
    if n < 1:
        raise ParameterError("n must be >= 1")
    if n * params.dim > _MAX_VALUES:
        raise CapacityError(f"batch of {n} x {params.dim} values exceeds capacity")
    rng = _rng_for(params.seed, "increments")
    clock = dt ** (2.0 / params.alpha) * _kanter_positive_stable(
        params.alpha / 2.0, n, rng)
    normals = rng.standard_normal(size=(n, params.dim))
    values = np.sqrt(2.0 * clock)[:, None] * normals
    return IncrementBatch(params=params, dt=dt, values=values)


def split_seed(seed, n_streams: int):
    """Independent child seeds for reproducible parallel batches."""
    return [int(s.generate_state(1, np.uint64)[0])
            for s in np.random.SeedSequence(seed).spawn(n_streams)]


def empirical_char_function(samples: np.ndarray, kappa) -> tuple:
    """Monte Carlo estimate of E exp(i kappa . X) and its standard error.

    Returns (estimate, stderr) where stderr bounds the combined deviation
    of real and imaginary parts (root of summed variances of the means).
    """
    samples = np.atleast_2d(samples)
    kappa = np.atleast_1d(np.asarray(kappa, dtype=float))
    phase = samples @ kappa
    z = np.exp(1j * phase)
    n = len(z)
    est = np.mean(z)
    var = np.var(z.real, ddof=1) / n + np.var(z.imag, ddof=1) / n
    return complex(est), float(np.sqrt(var))


def _rng_for(seed, label: str):
    salt = np.frombuffer(label.encode(), dtype=np.uint8)
    return np.random.default_rng(np.random.SeedSequence([int(seed), *salt.tolist()]))
