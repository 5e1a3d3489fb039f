"""Linear operators a·Δ² + b and their inverses on both grid types."""

import threading
from functools import lru_cache
from typing import Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .grid import Grid, PeriodicGrid, RadialGrid


class RadialResolvent:
    """Sparse LU of the pentadiagonal a·Δ_h² + b, factored once per grid."""

    def __init__(self, grid: RadialGrid, a: float, b: float):
        self.grid, self.a, self.b = grid, float(a), float(b)
        matrix = self.a * grid.bilaplacian_matrix + self.b * sp.identity(grid.n, format="csr")
        self._matrix = matrix.tocsr()
        self._lu = splu(matrix.tocsc())
        self._lock = threading.Lock()  # SuperLU objects are shared across sweep workers

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (self._matrix @ np.atleast_2d(values).T).T

    def solve(self, values: np.ndarray) -> np.ndarray:
        rhs = np.ascontiguousarray(np.atleast_2d(values).T, dtype=float)
        with self._lock:
            out = self._lu.solve(rhs)
        return np.atleast_2d(out.T)

    def quadratic(self, values: np.ndarray) -> np.ndarray:
        """Per-component ⟨(aΔ² + b)u_j, u_j⟩, evaluated as a‖Δu_j‖² + b‖u_j‖²."""
        values = np.atleast_2d(values)
        lap = self.grid.laplacian(values)
        return self.a * self.grid.integrate(lap * lap) + self.b * self.grid.integrate(values * values)


class PeriodicResolvent:
    def __init__(self, grid: PeriodicGrid, a: float, b: float):
        self.grid, self.a, self.b = grid, float(a), float(b)
        self._symbol = self.a * grid.k2 ** 2 + self.b

    def apply(self, values: np.ndarray) -> np.ndarray:
        return self.grid.apply_symbol(values, self._symbol)

    def solve(self, values: np.ndarray) -> np.ndarray:
        return self.grid.apply_symbol(values, 1.0 / self._symbol)

    def quadratic(self, values: np.ndarray) -> np.ndarray:
        lap = self.grid.laplacian(values)
        return self.a * self.grid.integrate(np.abs(lap) ** 2) + self.b * self.grid.integrate(np.abs(values) ** 2)


Resolvent = Union[RadialResolvent, PeriodicResolvent]


def build_resolvent(grid: Grid, a: float, b: float) -> Resolvent:
    if isinstance(grid, RadialGrid):
        return RadialResolvent(grid, a, b)
    return PeriodicResolvent(grid, a, b)


@lru_cache(maxsize=32)
def resolvent_for(grid: Grid, a: float = 1.0, b: float = 1.0) -> Resolvent:
    return build_resolvent(grid, a, b)
