"""Problem parameters and the scalar symbols derived from them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigError, CouplingError, ExponentRangeError, InvalidDimensionError, InvalidPairError, ParameterError

INFINITY = math.inf


@dataclass(frozen=True)
class ProblemParams:
    N: int
    m: int
    p: float
    coupling: Tuple[Tuple[float, ...], ...]
    """Row-major coupling matrix a_jk."""

    @classmethod
    def from_matrix(cls, N: int, p: float, matrix: Union[Sequence[Sequence[float]], np.ndarray]) -> "ProblemParams":
        rows = tuple(tuple(float(x) for x in row) for row in np.asarray(matrix, dtype=float))
        return cls(N=int(N), m=len(rows), p=float(p), coupling=rows)

    @classmethod
    def from_reduced(cls, N: int, p: float, rc: "ReducedCoupling", allow_decoupled: bool = False) -> "ProblemParams":
        return cls.from_matrix(N, p, expand_coupling(rc, len(rc.mu), allow_decoupled=allow_decoupled))


@dataclass(frozen=True)
class ReducedCoupling:
    mu: Tuple[float, ...]
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "mu", tuple(float(x) for x in self.mu))
        object.__setattr__(self, "beta", float(self.beta))


@dataclass(frozen=True)
class ScalingPair:
    alpha: float
    beta_s: float

    def __post_init__(self):
        if self.alpha < 0 or self.beta_s < 0:
            raise InvalidPairError(f"scaling pair must be nonnegative, got ({self.alpha}, {self.beta_s})")
        if self.alpha == 0 and self.beta_s == 0:
            raise InvalidPairError("scaling pair (0, 0) is not admissible")

    @classmethod
    def parse(cls, text: str) -> "ScalingPair":
        try:
            a, b = text.split(":")
            return cls(float(a), float(b))
        except ValueError:
            raise InvalidPairError(f"cannot parse scaling pair {text!r}, expected 'alpha:beta'")

    def label(self) -> str:
        return f"{self.alpha:g}:{self.beta_s:g}"


DEFAULT_PAIRS = (ScalingPair(1, 0), ScalingPair(0, 1), ScalingPair(1, 1), ScalingPair(2, 3))


def critical_exponents(N: int) -> Tuple[float, float]:
    """Mass-critical and energy-critical exponents (p_*, p^*)."""
    if N < 4:
        raise InvalidDimensionError(f"N must be at least 4, got {N}")
    p_low = 1.0 + 4.0 / N
    p_high = INFINITY if N == 4 else N / (N - 4.0)
    return p_low, p_high


def gn_exponents(N: int, p: float) -> Tuple[float, float]:
    """Exponents of the kinetic and mass factors in the quotient J."""
    return (p - 1.0) * N / 4.0, (N - p * (N - 4.0)) / 4.0


def expand_coupling(rc: ReducedCoupling, m: int, allow_decoupled: bool = False) -> np.ndarray:
    if m < 1:
        raise ParameterError("components", f"m must be at least 1, got {m}")
    if len(rc.mu) != m:
        raise CouplingError("coupling-shape", f"expected {m} values of mu, got {len(rc.mu)}")
    if any(mu <= 0 for mu in rc.mu):
        raise CouplingError("coupling-positivity", f"mu must be positive, got {rc.mu}")
    if m > 1 and (rc.beta < 0 or (rc.beta == 0 and not allow_decoupled)):
        raise CouplingError("coupling-positivity", f"beta must be positive, got {rc.beta}")
    matrix = np.full((m, m), rc.beta, dtype=float)
    np.fill_diagonal(matrix, rc.mu)
    return matrix


@dataclass(frozen=True)
class ValidatedParams:
    params: ProblemParams
    allow_out_of_range: bool = False
    p_low: float = field(init=False)
    p_high: float = field(init=False)

    def __post_init__(self):
        N = self.params.N
        p_low = 1.0 + 4.0 / N
        p_high = INFINITY if N <= 4 else N / (N - 4.0)
        object.__setattr__(self, "p_low", p_low)
        object.__setattr__(self, "p_high", p_high)

    @property
    def N(self) -> int:
        return self.params.N

    @property
    def m(self) -> int:
        return self.params.m

    @property
    def p(self) -> float:
        return self.params.p

    @property
    def coupling(self) -> np.ndarray:
        a = np.array(self.params.coupling, dtype=float)
        a.setflags(write=False)
        return a

    @property
    def mass_critical(self) -> bool:
        return abs(self.p - self.p_low) <= 1e-12

    def with_coupling(self, matrix: np.ndarray) -> "ValidatedParams":
        return validate(ProblemParams.from_matrix(self.N, self.p, matrix), self.allow_out_of_range)

    def describe(self) -> Dict[str, Any]:
        return {"dimension": self.N, "components": self.m, "exponent": self.p, "coupling_matrix": [list(r) for r in self.params.coupling]}


def validate(params: Union[ProblemParams, ValidatedParams], allow_out_of_range: bool = False) -> ValidatedParams:
    """Check every invariant in order and report the first violation by name."""
    if isinstance(params, ValidatedParams):
        if params.allow_out_of_range and not allow_out_of_range:
            return validate(params.params, False)
        return params

    N, m, p = params.N, params.m, params.p
    if N < 1 or (N < 4 and not allow_out_of_range):
        raise InvalidDimensionError(f"N must be at least 4, got {N}")
    if m < 1:
        raise ParameterError("components", f"m must be at least 1, got {m}")

    p_low = 1.0 + 4.0 / N
    p_high = INFINITY if N <= 4 else N / (N - 4.0)
    if allow_out_of_range:
        if not p > 1:
            raise ExponentRangeError(f"p must exceed 1, got {p}")
    elif not (p_low < p < p_high):
        raise ExponentRangeError(f"p={p} outside ({p_low:g}, {p_high:g}) for N={N}")

    a = np.asarray(params.coupling, dtype=float)
    if a.shape != (m, m):
        raise CouplingError("coupling-shape", f"coupling must be {m}x{m}, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise CouplingError("coupling-shape", "coupling has non-finite entries")
    if not np.array_equal(a, a.T):
        raise CouplingError("coupling-symmetry", "coupling matrix is not symmetric")
    if np.any(np.diag(a) <= 0):
        raise CouplingError("coupling-positivity", "diagonal couplings must be positive")
    off = a[~np.eye(m, dtype=bool)]
    if np.any(off < 0) or (np.any(off == 0) and not allow_out_of_range):
        raise CouplingError("coupling-positivity", "off-diagonal couplings must be positive")
    return ValidatedParams(params=params, allow_out_of_range=allow_out_of_range)


def params_from_mapping(mapping: Mapping[str, Any]) -> ValidatedParams:
    """Build validated params from the structured configuration keys."""
    missing = [k for k in ("dimension", "components", "exponent") if k not in mapping]
    if missing:
        raise ConfigError(f"missing required keys: {missing}")
    has_matrix = "coupling_matrix" in mapping
    has_reduced = "mu" in mapping or "beta" in mapping
    if has_matrix == has_reduced:
        raise ConfigError("give either 'coupling_matrix' or 'mu' + 'beta', not both or neither")

    allow = bool(mapping.get("allow_out_of_range", False))
    N, m, p = int(mapping["dimension"]), int(mapping["components"]), float(mapping["exponent"])
    if has_matrix:
        flat = [float(x) for x in mapping["coupling_matrix"]]
        if len(flat) != m * m:
            raise CouplingError("coupling-shape", f"coupling_matrix needs {m * m} entries, got {len(flat)}")
        matrix = np.array(flat).reshape(m, m)
    else:
        if "mu" not in mapping or ("beta" not in mapping and m > 1):
            raise ConfigError("reduced coupling needs both 'mu' and 'beta'")
        mu = mapping["mu"]
        mu = [mu] if isinstance(mu, (int, float)) else list(mu)
        matrix = expand_coupling(ReducedCoupling(tuple(mu), float(mapping.get("beta", 0.0))), m, allow_decoupled=allow)
    return validate(ProblemParams.from_matrix(N, p, matrix), allow_out_of_range=allow)
