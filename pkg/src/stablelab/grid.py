"""Periodic lattice on [-L, L)^d and scalar/vector fields living on it.

All spectral operators in this package act on fields sampled on a
``TorusGrid``.  Frequencies are the discrete duals k = (pi/L) * m with
integer m in the Nyquist band.
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, ParameterError

# Guard against accidentally huge allocations (desk scale only).
_MAX_POINTS = 2**27

_HEADER = struct.Struct("<qqdq")  # dim, N, L, complex flag


@dataclass(frozen=True)
class TorusGrid:
    """Uniform periodic grid on [-L, L)^d with N points per axis."""

    dim: int
    half_length: float
    points_per_axis: int

    def __post_init__(self):
        if self.dim < 1:
            raise ParameterError(f"dim must be >= 1, got {self.dim}")
        if self.half_length <= 0:
            raise ParameterError("half_length must be positive")
        n = self.points_per_axis
        if n < 4 or n % 2 != 0:
            raise ParameterError(f"points_per_axis must be even and >= 4, got {n}")
        if n**self.dim > _MAX_POINTS:
            raise CapacityError(f"grid with {n}^{self.dim} points exceeds capacity")

    @property
    def n(self) -> int:
        return self.points_per_axis

    @property
    def spacing(self) -> float:
        """Lattice spacing h = 2L/N."""
        return 2.0 * self.half_length / self.points_per_axis

    @property
    def shape(self) -> tuple:
        return (self.points_per_axis,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    def axis_coordinates(self) -> np.ndarray:
        """Physical coordinates of one axis: -L, -L+h, ..., L-h."""
        return -self.half_length + self.spacing * np.arange(self.points_per_axis)

    def coordinates(self) -> list:
        """Sparse (broadcastable) meshgrid of physical coordinates."""
        ax = self.axis_coordinates()
        return list(np.meshgrid(*([ax] * self.dim), indexing="ij", sparse=True))

    def radius(self) -> np.ndarray:
        """|x| at every lattice site (dense array)."""
        coords = self.coordinates()
        return np.sqrt(sum(c**2 for c in coords))

    def axis_frequencies(self) -> np.ndarray:
        """Dual frequencies of one axis in FFT ordering: (pi/L) * m."""
        return 2.0 * np.pi * np.fft.fftfreq(self.points_per_axis, d=self.spacing)

    def frequencies(self) -> list:
        kax = self.axis_frequencies()
        return list(np.meshgrid(*([kax] * self.dim), indexing="ij", sparse=True))

    def frequency_radius_sq(self) -> np.ndarray:
        """|k|^2 at every dual lattice site (dense array, FFT order)."""
        freqs = self.frequencies()
        return sum(k**2 for k in freqs)

    def site_index(self, point) -> tuple:
        """Index of the lattice site nearest to a physical point."""
        pt = np.atleast_1d(np.asarray(point, dtype=float))
        if pt.shape != (self.dim,):
            raise ParameterError(f"point must have {self.dim} coordinates")
        idx = np.rint((pt + self.half_length) / self.spacing).astype(int)
        return tuple(int(i) % self.points_per_axis for i in idx)


def _check_data(grid, data, components=None):
    expected = grid.shape if components is None else (components,) + grid.shape
    arr = np.asarray(data)
    if arr.shape != expected:
        raise ParameterError(f"field data shape {arr.shape} != expected {expected}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("field data must be finite")
    return arr


@dataclass
class Field:
    """Scalar lattice function (real or complex) on a TorusGrid."""

    grid: TorusGrid
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.data = _check_data(self.grid, self.data)

    @classmethod
    def from_function(cls, grid, fn) -> "Field":
        coords = grid.coordinates()
        return cls(grid, np.broadcast_to(fn(*coords), grid.shape).copy())

    @classmethod
    def constant(cls, grid, value=1.0) -> "Field":
        return cls(grid, np.full(grid.shape, value))

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.data)

    def lp_norm(self, p: float, weight=None) -> float:
        """Discrete L^p norm with measure h^d (optionally weighted)."""
        w = 1.0 if weight is None else np.asarray(weight)
        if p == np.inf:
            return float(np.max(np.abs(self.data)))
        s = np.sum(w * np.abs(self.data) ** p) * self.grid.cell_volume
        return float(s ** (1.0 / p))

    def inner(self, other) -> complex:
        """<f, g> = sum f * conj(g) * h^d."""
        g = other.data if isinstance(other, Field) else np.asarray(other)
        return complex(np.sum(self.data * np.conj(g)) * self.grid.cell_volume)

    def integral(self) -> complex:
        return complex(np.sum(self.data) * self.grid.cell_volume)

    def to_bytes(self) -> bytes:
        """Flat binary layout: header (dim, N, L, complex flag), then the
        little-endian float64 payload (complex stored as re/im pairs)."""
        iscomplex = int(np.iscomplexobj(self.data))
        head = _HEADER.pack(self.grid.dim, self.grid.points_per_axis,
                            self.grid.half_length, iscomplex)
        dtype = "<c16" if iscomplex else "<f8"
        return head + np.ascontiguousarray(self.data).astype(dtype).tobytes()

    @classmethod
    def from_bytes(cls, payload: bytes) -> "Field":
        dim, n, half_length, iscomplex = _HEADER.unpack_from(payload)
        grid = TorusGrid(dim, half_length, n)
        dtype = "<c16" if iscomplex else "<f8"
        arr = np.frombuffer(payload, dtype=dtype, offset=_HEADER.size)
        return cls(grid, arr.reshape(grid.shape).copy())

    def to_csv(self) -> str:
        """CSV export (site indices plus value), intended for small grids."""
        if self.grid.points_per_axis ** self.grid.dim > 2**18:
            raise CapacityError("CSV export is limited to small grids")
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([f"i{j}" for j in range(self.grid.dim)] + ["re", "im"])
        for idx in np.ndindex(*self.grid.shape):
            v = complex(self.data[idx])
            writer.writerow(list(idx) + [repr(v.real), repr(v.imag)])
        return buf.getvalue()


@dataclass
class VectorField:
    """Vector lattice function: one scalar component per space dimension."""

    grid: TorusGrid
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.data = _check_data(self.grid, self.data, components=self.grid.dim)

    @classmethod
    def from_function(cls, grid, fn) -> "VectorField":
        coords = grid.coordinates()
        comps = fn(*coords)
        arr = np.stack([np.broadcast_to(c, grid.shape) for c in comps])
        return cls(grid, arr.copy())

    def magnitude(self) -> np.ndarray:
        return np.sqrt(np.sum(np.abs(self.data) ** 2, axis=0))

    def sup_norm(self) -> float:
        return float(np.max(self.magnitude()))

    def component(self, j: int) -> Field:
        return Field(self.grid, self.data[j])
