"""Radial and periodic discretizations with their discrete operators.

The radial grid is staggered, r_i = (i - 1/2) h with h = R/n. The Laplacian is
the conservative three-point stencil

    (Δf)_i = [r_{i+1/2}^{N-1} (f_{i+1} - f_i) - r_{i-1/2}^{N-1} (f_i - f_{i-1})] / (h² r_i^{N-1})

which closes itself at the origin (r_{1/2} = 0) and uses the odd ghost
f_{n+1} = -f_n so that f(R) = 0. Multiplied by the quadrature weights
ω_{N-1} r_i^{N-1} h it is a symmetric matrix, so ⟨Δf, g⟩ = ⟨f, Δg⟩ holds to
roundoff and Σ w (Δ_h f)² is the exact discrete counterpart of ‖Δf‖².

The periodic box [-L, L)^d uses FFT multipliers; Δ² has symbol |k|⁴.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Tuple, Union

import numpy as np
import scipy.fft
import scipy.sparse as sp
from scipy.interpolate import CubicSpline
from scipy.special import gamma

from .errors import GridError, GridMismatchError, TruncationError

logger = logging.getLogger(__name__)

_FFT_WORKERS = 1


def set_fft_workers(workers: int) -> None:
    global _FFT_WORKERS
    _FFT_WORKERS = max(1, int(workers))


def sphere_area(N: int) -> float:
    """Area ω_{N-1} of the unit sphere in R^N."""
    return 2.0 * np.pi ** (N / 2.0) / gamma(N / 2.0)


# --------- Radial grid --------- #

@dataclass(frozen=True)
class RadialGrid:
    N: int
    R: float
    n: int

    def __post_init__(self):
        if self.N < 1:
            raise GridError(f"radial grid needs N >= 1, got {self.N}")
        if not self.R > 0:
            raise GridError(f"radius must be positive, got {self.R}")
        if self.n < 8:
            raise GridError(f"radial grid needs at least 8 nodes, got {self.n}")

    @property
    def dim(self) -> int:
        return self.N

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.n,)

    @cached_property
    def h(self) -> float:
        return self.R / self.n

    @cached_property
    def r(self) -> np.ndarray:
        r = (np.arange(1, self.n + 1) - 0.5) * self.h
        r.setflags(write=False)
        return r

    @cached_property
    def weights(self) -> np.ndarray:
        w = sphere_area(self.N) * self.r ** (self.N - 1) * self.h
        w.setflags(write=False)
        return w

    @cached_property
    def laplacian_matrix(self) -> sp.csr_matrix:
        N, h, r = self.N, self.h, self.r
        edges = np.arange(self.n + 1) * h  # r_{i-1/2}, i = 1..n+1
        lower = edges[:-1] ** (N - 1) / (h * h * r ** (N - 1))
        upper = edges[1:] ** (N - 1) / (h * h * r ** (N - 1))
        lower[0] = 0.0  # symmetry at the origin
        diag = -(lower + upper)
        diag[-1] -= upper[-1]  # odd ghost beyond R
        return sp.diags([lower[1:], diag, upper[:-1]], [-1, 0, 1], format="csr")

    @cached_property
    def bilaplacian_matrix(self) -> sp.csr_matrix:
        lap = self.laplacian_matrix
        return (lap @ lap).tocsr()

    def dilated(self, s: float) -> "RadialGrid":
        """Grid whose nodes are s·r; values carried over unchanged represent f(x/s)."""
        return RadialGrid(self.N, self.R * s, self.n)

    def laplacian(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values)
        if values.ndim == 1:
            return self.laplacian_matrix @ values
        return (self.laplacian_matrix @ values.T).T

    def integrate(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values) @ self.weights

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(np.sum(self.integrate(np.asarray(u) * np.asarray(v))))

    def signature(self) -> str:
        return f"RadialGrid(N={self.N},R={self.R!r},n={self.n})"


# --------- Periodic box --------- #

@dataclass(frozen=True)
class PeriodicGrid:
    d: int
    n: int
    L: float

    def __post_init__(self):
        if self.d < 1:
            raise GridError(f"box dimension must be positive, got {self.d}")
        if self.n < 4 or self.n & (self.n - 1):
            raise GridError(f"points per dimension must be a power of two of at least 4, got {self.n}")
        if not self.L > 0:
            raise GridError(f"half-period must be positive, got {self.L}")

    @property
    def dim(self) -> int:
        return self.d

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def axes(self) -> Tuple[int, ...]:
        return tuple(range(-self.d, 0))

    @cached_property
    def h(self) -> float:
        return 2.0 * self.L / self.n

    @cached_property
    def x(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.n)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        return (np.pi / self.L) * scipy.fft.fftfreq(self.n, d=1.0 / self.n)

    def _broadcast(self, axis: int, vec: np.ndarray) -> np.ndarray:
        shape = [1] * self.d
        shape[axis] = self.n
        return vec.reshape(shape)

    @cached_property
    def k2(self) -> np.ndarray:
        k = self.wavenumbers
        total = np.zeros(self.shape)
        for axis in range(self.d):
            total = total + self._broadcast(axis, k * k)
        total.setflags(write=False)
        return total

    @cached_property
    def radius(self) -> np.ndarray:
        total = np.zeros(self.shape)
        for axis in range(self.d):
            total = total + self._broadcast(axis, self.x * self.x)
        return np.sqrt(total)

    @cached_property
    def outer_shell(self) -> np.ndarray:
        """Mask of the highest-frequency modes (|j| >= n/2 - 1 in some direction)."""
        j = np.abs(scipy.fft.fftfreq(self.n, d=1.0 / self.n))
        hi = j >= self.n // 2 - 1
        mask = np.zeros(self.shape, dtype=bool)
        for axis in range(self.d):
            mask = mask | self._broadcast(axis, hi)
        return mask

    def dilated(self, s: float) -> "PeriodicGrid":
        return PeriodicGrid(self.d, self.n, self.L * s)

    def fft(self, values: np.ndarray) -> np.ndarray:
        return scipy.fft.fftn(values, axes=self.axes, workers=_FFT_WORKERS)

    def ifft(self, values: np.ndarray) -> np.ndarray:
        return scipy.fft.ifftn(values, axes=self.axes, workers=_FFT_WORKERS)

    def apply_symbol(self, values: np.ndarray, symbol: np.ndarray) -> np.ndarray:
        out = self.ifft(symbol * self.fft(values))
        return out.real if np.isrealobj(values) else out

    def laplacian(self, values: np.ndarray) -> np.ndarray:
        return self.apply_symbol(values, -self.k2)

    def integrate(self, values: np.ndarray) -> np.ndarray:
        return np.sum(values, axis=self.axes) * self.h ** self.d

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(np.real(np.sum(u * np.conj(v)))) * self.h ** self.d

    def spectral_tail(self, values: np.ndarray) -> float:
        spec = np.abs(self.fft(values))
        peak = spec.max()
        if peak == 0:
            return 0.0
        return float(spec[..., self.outer_shell].max() / peak)

    def signature(self) -> str:
        return f"PeriodicGrid(d={self.d},n={self.n},L={self.L!r})"


Grid = Union[RadialGrid, PeriodicGrid]


def grid_hash(grid: Grid) -> str:
    return hashlib.sha256(grid.signature().encode()).hexdigest()


# --------- Fields --------- #

@dataclass(frozen=True, eq=False)
class VectorField:
    """m-component field on a grid; values have shape (m, *grid.shape)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=self._dtype(self.values), copy=True)
        if arr.shape == self.grid.shape:
            arr = arr[None, ...]
        if arr.ndim != len(self.grid.shape) + 1 or arr.shape[1:] != self.grid.shape:
            raise GridMismatchError(f"values of shape {np.shape(self.values)} do not live on {self.grid.signature()}")
        if not np.all(np.isfinite(arr)):
            raise GridError("field has non-finite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @staticmethod
    def _dtype(values) -> np.dtype:
        return np.complex128 if np.iscomplexobj(values) else np.float64

    @property
    def m(self) -> int:
        return self.values.shape[0]

    def component(self, j: int) -> np.ndarray:
        return self.values[j]

    def with_values(self, values: np.ndarray) -> "VectorField":
        return type(self)(self.grid, values)

    def scaled(self, nu: float) -> "VectorField":
        return self.with_values(nu * self.values)

    def norms_sq(self) -> np.ndarray:
        return np.asarray(self.grid.integrate(np.abs(self.values) ** 2), dtype=float)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


class RadialField(VectorField):
    def __post_init__(self):
        if not isinstance(self.grid, RadialGrid):
            raise GridMismatchError("RadialField needs a RadialGrid")
        if np.iscomplexobj(self.values):
            raise GridError("radial fields are real")
        super().__post_init__()


class ComplexField(VectorField):
    def __post_init__(self):
        if not isinstance(self.grid, PeriodicGrid):
            raise GridMismatchError("ComplexField needs a PeriodicGrid")
        super().__post_init__()

    @staticmethod
    def _dtype(values) -> np.dtype:
        return np.complex128


def make_field(grid: Grid, values: np.ndarray) -> VectorField:
    if isinstance(grid, RadialGrid):
        return RadialField(grid, values)
    if np.iscomplexobj(values):
        return ComplexField(grid, values)
    return VectorField(grid, values)


def _check_on(g: Grid, f: Union[VectorField, np.ndarray]) -> np.ndarray:
    if isinstance(f, VectorField):
        if f.grid != g:
            raise GridMismatchError(f"field lives on {f.grid.signature()}, not {g.signature()}")
        return f.values
    arr = np.asarray(f)
    if arr.shape[-len(g.shape):] != g.shape:
        raise GridMismatchError(f"array of shape {arr.shape} does not live on {g.signature()}")
    return arr


# --------- Radial operators --------- #

def radial_laplacian(g: RadialGrid, f: Union[RadialField, np.ndarray]) -> RadialField:
    return RadialField(g, g.laplacian(_check_on(g, f)))


def radial_bilaplacian(g: RadialGrid, f: Union[RadialField, np.ndarray]) -> RadialField:
    return RadialField(g, g.laplacian(g.laplacian(_check_on(g, f))))


def radial_integral(g: RadialGrid, f: Union[RadialField, np.ndarray], trunc_tol: float = 1e-6) -> float:
    values = _check_on(g, f)
    peak = np.max(np.abs(values)) if values.size else 0.0
    if peak > 0:
        tail = np.abs(values[..., g.r >= 0.9 * g.R]).max()
        if tail > trunc_tol * peak:
            logger.warning(f"⚠️ integrand not decayed near R={g.R}: tail/peak = {tail / peak:.2e}")
    return float(np.sum(g.integrate(values)))


def bilaplacian_symbol(g: PeriodicGrid) -> np.ndarray:
    return g.k2 ** 2


# --------- Rescaling ψ ↦ ν ψ(μ ·) --------- #

def rescale_field(f: VectorField, nu: float, mu: float, mode: str = "interpolate", trunc_tol: float = 1e-10) -> VectorField:
    """Return ν f(μ x).

    mode="dilate" is exact: the values ν f are placed on the grid dilated by
    1/μ. mode="interpolate" stays on the same grid (cubic spline on radial
    nodes; periodic grids only support μ = 1).
    """
    if not mu > 0:
        raise GridError(f"dilation factor must be positive, got {mu}")
    if mode == "dilate":
        return make_field(f.grid.dilated(1.0 / mu), nu * f.values)
    if mode != "interpolate":
        raise GridError(f"unknown rescale mode {mode!r}")
    if mu == 1.0:
        return f.with_values(nu * f.values)
    if isinstance(f.grid, PeriodicGrid):
        raise GridError("periodic fields can only be dilated with mode='dilate'")

    g = f.grid
    if mu < 1.0:
        dens = np.abs(f.values) ** 2
        total = float(np.sum(g.integrate(dens)))
        lost = float(np.sum(g.integrate(np.where(g.r > mu * g.R, dens, 0.0)))) / total if total > 0 else 0.0
        if lost > trunc_tol:
            raise TruncationError(f"dilation by {mu} pushes mass beyond R={g.R}", lost)

    nodes = np.concatenate([-g.r[::-1], g.r])
    data = np.concatenate([f.values[:, ::-1], f.values], axis=1)
    spline = CubicSpline(nodes, data, axis=1)
    targets = mu * g.r
    out = spline(np.minimum(targets, g.R))
    out[:, targets > g.R] = 0.0
    return RadialField(g, nu * out)
