"""Catalog of drift vector fields and their mollified lattice approximants.

A ``DriftSpec`` is a symbolic, grid-independent description of a vector
field b; ``mollify`` turns it into a smooth bounded lattice field by
truncation at level n followed by convolution with the compactly
supported bump mollifier.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft
from scipy import integrate, special

from .errors import ParameterError
from .grid import Field, TorusGrid, VectorField
from .kernels import sphere_area


def hardy_constant(alpha: float, dim: int) -> float:
    """kappa(alpha, d) = 2^((alpha-1)/2) Gamma((d+alpha-1)/4) / Gamma((d-alpha+1)/4).

    Reciprocal of the sharp constant in the fractional Hardy inequality
    |x|^(-(alpha-1)/2) (-Lap)^(-(alpha-1)/4) on L^2(R^d).
    """
    if dim < 3:
        raise ParameterError("hardy constant assumes dim >= 3")
    if not (1.0 < alpha < 2.0):
        raise ParameterError(f"alpha must lie in (1, 2), got {alpha}")
    return (2.0 ** ((alpha - 1.0) / 2.0)
            * special.gamma((dim + alpha - 1.0) / 4.0)
            / special.gamma((dim - alpha + 1.0) / 4.0))


@dataclass
class DriftSpec:
    """Symbolic drift description: a catalog kind plus parameters.

    ``custom_closure`` drifts carry a callable in ``closure`` and are not
    JSON-serializable.
    """

    kind: str
    parameters: dict
    singular_points: list = field(default_factory=list)
    closure: object = None

    _KINDS = ("hardy", "lp_radial", "bounded_smooth", "kato_example",
              "custom_closure")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ParameterError(f"unknown drift kind {self.kind!r}")
        if self.kind == "custom_closure" and not callable(self.closure):
            raise ParameterError("custom_closure drift needs a callable")

    def components(self, coords):
        """Evaluate b at broadcastable coordinate arrays; singular sites
        (zero radius or listed points) evaluate to 0."""
        p = self.parameters
        if self.kind == "custom_closure":
            return [np.asarray(c) for c in self.closure(*coords)]
        if self.kind == "bounded_smooth":
            amp = np.atleast_1d(np.asarray(p["amplitude"], dtype=float))
            half = float(p["half_period"])
            d = len(coords)
            if amp.shape != (d,):
                raise ParameterError("amplitude must have one entry per axis")
            return [amp[j] * np.sin(np.pi * coords[(j + 1) % d] / half)
                    for j in range(d)]
        # radial kinds: b(x) = g(|x|) * x
        r2 = sum(np.asarray(c) ** 2 for c in coords)
        r = np.sqrt(r2)
        safe = np.where(r > 0, r, 1.0)
        if self.kind == "hardy":
            g = p["prefactor"] * safe ** (-p["alpha"])
        elif self.kind == "lp_radial":
            g = p["prefactor"] * safe ** (-p["beta"] - 1.0)
        elif self.kind == "kato_example":
            from .profiles import cutoff_profile

            g = (p["prefactor"] * safe ** (-p["beta"] - 1.0)
                 * cutoff_profile(r, p["radius"]))
        g = np.where(r > 0, g, 0.0)
        return [g * np.asarray(c) for c in coords]

    def magnitude(self, coords):
        comps = self.components(coords)
        return np.sqrt(sum(np.abs(c) ** 2 for c in comps))

    def on_lattice(self, grid: TorusGrid) -> VectorField:
        coords = grid.coordinates()
        comps = self.components(coords)
        data = np.stack([np.broadcast_to(c, grid.shape).copy() for c in comps])
        for pt in self.singular_points:
            data[(slice(None),) + grid.site_index(pt)] = 0.0
        return VectorField(grid, data)

    def to_json(self) -> str:
        if self.kind == "custom_closure":
            raise ParameterError("custom_closure drifts are not serializable")
        return json.dumps({"kind": self.kind, "parameters": self.parameters,
                           "singular_points": self.singular_points},
                          sort_keys=True)

    @classmethod
    def from_json(cls, payload: str) -> "DriftSpec":
        doc = json.loads(payload)
        return cls(kind=doc["kind"], parameters=doc["parameters"],
                   singular_points=doc.get("singular_points", []))


def hardy_drift(delta: float, alpha: float, dim: int) -> DriftSpec:
    """The critical radial drift b(x) = delta * kappa^2 * |x|^(-alpha) x.

    Calibrated so that its weak form-bound equals ``delta`` exactly (with
    vanishing spectral shift): |b| = delta * kappa^2 |x|^(1-alpha) saturates
    the sharp fractional Hardy inequality, whose best constant is
    kappa^(-2).  Not in the Kato class for any bound.
    """
    if delta <= 0:
        raise ParameterError("delta must be positive")
    kappa = hardy_constant(alpha, dim)  # validates alpha, dim
    return DriftSpec(
        kind="hardy",
        parameters={"delta": delta, "alpha": alpha,
                    "prefactor": delta * kappa**2},
        singular_points=[[0.0] * dim],
    )


def lp_radial_drift(prefactor: float, beta: float, dim: int) -> DriftSpec:
    """Radial power drift with |b| = prefactor * |x|^(-beta)."""
    if beta >= dim:
        raise ParameterError("beta >= dim is not locally integrable")
    return DriftSpec(kind="lp_radial",
                     parameters={"prefactor": prefactor, "beta": beta},
                     singular_points=[[0.0] * dim])


def kato_example_drift(prefactor: float, beta: float, radius: float,
                       dim: int) -> DriftSpec:
    """Compactly supported radial drift with a sub-critical singularity
    |b| = prefactor * |x|^(-beta) near the origin; lies in the Kato class
    whenever beta < alpha - 1."""
    if beta >= dim:
        raise ParameterError("beta >= dim is not locally integrable")
    return DriftSpec(kind="kato_example",
                     parameters={"prefactor": prefactor, "beta": beta,
                                 "radius": radius},
                     singular_points=[[0.0] * dim])


def bounded_smooth_drift(amplitude, half_period: float, dim: int) -> DriftSpec:
    """Trigonometric drift b_j = a_j sin(pi x_(j+1 mod d) / L); exactly
    periodic on the matching torus and divergence-free for d >= 2."""
    amp = np.broadcast_to(np.asarray(amplitude, dtype=float), (dim,))
    return DriftSpec(kind="bounded_smooth",
                     parameters={"amplitude": amp.tolist(),
                                 "half_period": half_period})


def custom_drift(fn, dim: int, singular_points=None) -> DriftSpec:
    return DriftSpec(kind="custom_closure", parameters={"dim": dim},
                     singular_points=singular_points or [], closure=fn)


# ---------------------------------------------------------------------------
# Mollification


def mollifier_normalization(dim: int) -> float:
    """Continuum normalization c with <c exp(-1/(1-|x|^2)) 1_(|x|<1)> = 1,
    by radial quadrature."""
    val, _ = integrate.quad(
        lambda r: np.exp(-1.0 / (1.0 - r * r)) * r ** (dim - 1), 0.0, 1.0)
    return 1.0 / (sphere_area(dim) * val)


def mollifier(grid: TorusGrid, epsilon: float) -> Field:
    """Bump mollifier sampled on the lattice, renormalized so that the
    lattice sum times h^d equals one.

    For epsilon below the lattice spacing the sampled bump degenerates to
    the discrete delta, which is the correct limit of the convolution.
    """
    if epsilon <= 0:
        raise ParameterError("epsilon must be positive")
    if epsilon >= grid.half_length / 2.0:
        raise ParameterError("mollifier support must fit well inside the torus")
    r = grid.radius() / epsilon
    vals = np.zeros(grid.shape)
    inside = r < 1.0
    vals[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    total = vals.sum() * grid.cell_volume
    return Field(grid, vals / total)


def default_epsilon(n: int, grid: TorusGrid) -> float:
    """Default smoothing width for approximation level n."""
    return min(1.0 / n, 4.0 * grid.spacing)


@dataclass
class MollifiedDrift:
    """Smooth bounded lattice approximant of a drift: truncation at level n
    (both |x| <= n and |b| <= n) followed by mollification."""

    base: DriftSpec
    n: int
    epsilon_n: float
    lattice: VectorField

    def magnitude(self) -> np.ndarray:
        return self.lattice.magnitude()

    def sup_norm(self) -> float:
        return self.lattice.sup_norm()

    @property
    def grid(self) -> TorusGrid:
        return self.lattice.grid


def mollify(base: DriftSpec, n: int, grid: TorusGrid,
            epsilon_n: float | None = None) -> MollifiedDrift:
    """Truncate b at level n and convolve with the bump of width epsilon_n
    (circular convolution via FFT)."""
    if n < 1:
        raise ParameterError("n must be a positive integer")
    if epsilon_n is None:
        epsilon_n = default_epsilon(n, grid)
    raw = base.on_lattice(grid).data
    mag = np.sqrt(np.sum(raw**2, axis=0))
    keep = (grid.radius() <= n) & (mag <= n)
    truncated = np.where(keep, raw, 0.0)
    # center the bump at displacement zero for the circular convolution
    bump_hat = sfft.fftn(np.fft.ifftshift(mollifier(grid, epsilon_n).data))
    smooth = np.empty_like(truncated)
    for j in range(grid.dim):
        conv = sfft.ifftn(bump_hat * sfft.fftn(truncated[j])).real
        smooth[j] = conv * grid.cell_volume
    return MollifiedDrift(base=base, n=n, epsilon_n=epsilon_n,
                          lattice=VectorField(grid, smooth))
