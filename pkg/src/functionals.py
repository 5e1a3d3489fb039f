"""Scalar functionals of the coupled system and the two-parameter scaling flow.

For a pair (α, β) the flow is u^λ = e^{αλ} u(e^{-βλ} ·); along it

    ‖u^λ‖² = e^{(2α+Nβ)λ} ‖u‖²,  ‖Δu^λ‖² = e^{(2α+(N-4)β)λ} ‖Δu‖²,

and K_{α,β} is the derivative of the action at λ = 0. K is stored as K itself,
not the doubled quantity.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .errors import DivisionDomainError, GridMismatchError, UndefinedQuotientError
from .grid import VectorField, rescale_field
from .params import ScalingPair, ValidatedParams, gn_exponents
from .resolvent import resolvent_for

logger = logging.getLogger(__name__)

EPS_REG = 1e-30


# --------- Pointwise kernels --------- #

def phase_rate(values: np.ndarray, coupling: np.ndarray, p: float) -> np.ndarray:
    """θ_j = Σ_k a_jk |u_k|^p |u_j|^{p-2} (real)."""
    mod = np.abs(values)
    mix = np.tensordot(coupling, mod ** p, axes=(1, 0))
    return mix * np.maximum(mod, EPS_REG) ** (p - 2.0)


def nonlinearity(values: np.ndarray, coupling: np.ndarray, p: float) -> np.ndarray:
    """Σ_k a_jk |u_k|^p |u_j|^{p-2} u_j, zero wherever u_j vanishes."""
    return phase_rate(values, coupling, p) * values


# --------- Cache --------- #

class FunctionalCache:
    """Norms and pair integrals of one field, shared by every functional."""

    def __init__(self, u: VectorField, params: ValidatedParams):
        if u.grid.dim != params.N:
            raise GridMismatchError(f"grid dimension {u.grid.dim} differs from N={params.N}")
        if u.m != params.m:
            raise GridMismatchError(f"field has {u.m} components, params expect {params.m}")
        g, values = u.grid, u.values
        self.field, self.params = u, params
        self.N, self.p = params.N, params.p
        self.coupling = params.coupling
        self.lap = g.laplacian(values)
        self.abs_p = np.abs(values) ** self.p
        self.mass = np.asarray(g.integrate(np.abs(values) ** 2), dtype=float)
        self.kinetic_per = np.asarray(g.integrate(np.abs(self.lap) ** 2), dtype=float)
        m = u.m
        pair = np.zeros((m, m))
        for j in range(m):
            for k in range(j, m):
                pair[j, k] = pair[k, j] = float(g.integrate(self.abs_p[j] * self.abs_p[k]))
        self.pair_integrals = pair
        self.interaction = float(np.sum(self.coupling * pair))

    @property
    def kinetic(self) -> float:
        return float(np.sum(self.kinetic_per))

    @property
    def l2(self) -> float:
        return float(np.sum(self.mass))

    @property
    def potential(self) -> float:
        return self.interaction / (2.0 * self.p)

    @property
    def energy(self) -> float:
        return 0.5 * self.kinetic - self.potential

    @property
    def action(self) -> float:
        return self.energy + 0.5 * self.l2

    def component_actions(self) -> np.ndarray:
        """S^j = ½‖u_j‖²_{H²} − (1/2p) Σ_k a_jk ∫|u_j u_k|^p."""
        own = np.sum(self.coupling * self.pair_integrals, axis=1)
        return 0.5 * (self.mass + self.kinetic_per) - own / (2.0 * self.p)

    def quadratic_part(self, pair: ScalingPair) -> float:
        a, b, N = pair.alpha, pair.beta_s, self.N
        return 0.5 * float(np.sum((2 * a + (N - 4) * b) * self.kinetic_per + (2 * a + N * b) * self.mass))

    def constraint_K(self, pair: ScalingPair) -> float:
        a, b, p = pair.alpha, pair.beta_s, self.p
        return self.quadratic_part(pair) - (2 * p * a + self.N * b) / (2 * p) * self.interaction

    def functional_H(self, pair: ScalingPair) -> float:
        a, b, p = pair.alpha, pair.beta_s, self.p
        denom = 2 * a + self.N * b
        if denom == 0:
            raise DivisionDomainError("2α + Nβ vanishes")
        return (2 * b * self.kinetic + a * (1 - 1 / p) * self.interaction) / denom

    def gn_quotient(self) -> float:
        if not self.potential > 0:
            raise UndefinedQuotientError("J is undefined when the potential vanishes")
        ek, em = gn_exponents(self.N, self.p)
        return self.kinetic ** ek * self.l2 ** em / self.potential


def _cache(u: VectorField, params: ValidatedParams, cache: Optional[FunctionalCache]) -> FunctionalCache:
    return cache if cache is not None else FunctionalCache(u, params)


def potential(u: VectorField, params: ValidatedParams, cache: Optional[FunctionalCache] = None) -> float:
    return _cache(u, params, cache).potential


def energy(u: VectorField, params: ValidatedParams, cache: Optional[FunctionalCache] = None) -> float:
    return _cache(u, params, cache).energy


def action(u: VectorField, params: ValidatedParams, cache: Optional[FunctionalCache] = None) -> float:
    return _cache(u, params, cache).action


def constraint_K(u: VectorField, params: ValidatedParams, pair: ScalingPair, cache: Optional[FunctionalCache] = None) -> float:
    return _cache(u, params, cache).constraint_K(pair)


def functional_H(u: VectorField, params: ValidatedParams, pair: ScalingPair, cache: Optional[FunctionalCache] = None) -> float:
    return _cache(u, params, cache).functional_H(pair)


def gn_quotient(u: VectorField, params: ValidatedParams, cache: Optional[FunctionalCache] = None) -> float:
    return _cache(u, params, cache).gn_quotient()


# --------- Reports --------- #

@dataclass(frozen=True)
class ConstraintValue:
    pair: ScalingPair
    K: float
    H: float


@dataclass(frozen=True)
class FunctionalReport:
    mass_per_component: List[float]
    kinetic: float
    l2: float
    potential: float
    energy: float
    action: float
    constraint: Optional[ConstraintValue] = None
    J: Optional[float] = None

    def to_flat_dict(self) -> Dict[str, Optional[float]]:
        row: Dict[str, Optional[float]] = {f"mass_{j + 1}": m for j, m in enumerate(self.mass_per_component)}
        row.update(kinetic=self.kinetic, l2=self.l2, potential=self.potential, energy=self.energy, action=self.action)
        row["K_alpha_beta"] = self.constraint.K if self.constraint else None
        row["H_alpha_beta"] = self.constraint.H if self.constraint else None
        row["J"] = self.J
        return row

    def csv_header(self) -> List[str]:
        return list(self.to_flat_dict())

    def csv_row(self) -> List[str]:
        return ["" if v is None else format(v, ".17g") for v in self.to_flat_dict().values()]


def functional_report(u: VectorField, params: ValidatedParams, pair: Optional[ScalingPair] = None) -> FunctionalReport:
    c = FunctionalCache(u, params)
    constraint = ConstraintValue(pair, c.constraint_K(pair), c.functional_H(pair)) if pair else None
    J = c.gn_quotient() if c.potential > 0 else None
    return FunctionalReport(
        mass_per_component=[float(x) for x in c.mass],
        kinetic=c.kinetic, l2=c.l2, potential=c.potential, energy=c.energy, action=c.action,
        constraint=constraint, J=J,
    )


# --------- Scaling flow --------- #

def scaling_flow(u: VectorField, pair: ScalingPair, lam: float, mode: str = "dilate") -> VectorField:
    return rescale_field(u, math.exp(pair.alpha * lam), math.exp(-pair.beta_s * lam), mode=mode)


@dataclass
class LieDerivativeReport:
    pair: ScalingPair
    K: float
    lambdas: List[float]
    derivatives: List[float]
    errors: List[float]
    observed_order: Optional[float] = None
    orders: List[float] = field(default_factory=list)


def lie_derivative_check(
    u: VectorField,
    params: ValidatedParams,
    pair: ScalingPair,
    lambdas: Sequence[float] = (1e-2, 5e-3, 2.5e-3),
    mode: str = "dilate",
) -> LieDerivativeReport:
    """Compare central differences of S along the flow with K."""
    c = FunctionalCache(u, params)
    K = c.constraint_K(pair)
    scale = c.quadratic_part(pair) + abs(c.interaction) + abs(K)
    derivs, errs = [], []
    for lam in lambdas:
        plus = action(scaling_flow(u, pair, lam, mode), params)
        minus = action(scaling_flow(u, pair, -lam, mode), params)
        d = (plus - minus) / (2 * lam)
        derivs.append(d)
        errs.append(abs(d - K))

    report = LieDerivativeReport(pair=pair, K=K, lambdas=list(lambdas), derivatives=derivs, errors=errs)
    floor = 1e-13 * max(scale, 1e-300)
    usable = [(l, e) for l, e in zip(lambdas, errs) if e > floor]
    if len(usable) >= 2:
        logs = np.log(np.array(usable))
        report.observed_order = float(np.polyfit(logs[:, 0], logs[:, 1], 1)[0])
        report.orders = [float(x) for x in np.diff(logs[:, 1]) / np.diff(logs[:, 0])]
    return report


@dataclass
class HMonotonicityReport:
    pair: ScalingPair
    lambdas: List[float]
    values: List[float]
    nondecreasing: bool
    nonnegative: bool


def h_monotonicity_check(
    u: VectorField,
    params: ValidatedParams,
    pair: ScalingPair,
    lambdas: Sequence[float] = tuple(np.linspace(-0.5, 0.5, 11)),
) -> HMonotonicityReport:
    values = [functional_H(scaling_flow(u, pair, lam), params, pair) for lam in lambdas]
    tol = 1e-12 * max(1.0, max(abs(v) for v in values))
    return HMonotonicityReport(
        pair=pair, lambdas=list(lambdas), values=values,
        nondecreasing=bool(np.all(np.diff(values) >= -tol)),
        nonnegative=all(v >= -tol for v in values),
    )


# --------- Euler–Lagrange residual --------- #

@dataclass(frozen=True)
class ELResidual:
    residual: np.ndarray
    """Raw residual a Δ²u_j + b u_j − α N_j(u), shape (m, n)."""
    sup_norm: float
    weighted_sup: float
    """sup |(aΔ² + b)^{-1} r_j|; insensitive to the h^{-4} roundoff of the raw stencil."""


def el_residual(u: VectorField, params: ValidatedParams, a: float = 1.0, b: float = 1.0, alpha: float = 1.0) -> ELResidual:
    res = resolvent_for(u.grid, float(a), float(b))
    values = u.values
    nl = nonlinearity(values, params.coupling, params.p)
    raw = res.apply(values) - alpha * nl
    weighted = values - alpha * res.solve(nl)
    return ELResidual(
        residual=raw,
        sup_norm=float(np.max(np.abs(raw))) if raw.size else 0.0,
        weighted_sup=float(np.max(np.abs(weighted))) if weighted.size else 0.0,
    )


def report_dict(obj) -> Dict:
    """Plain-dict view of the dataclass reports above."""
    d = asdict(obj)
    if "pair" in d and d["pair"] is not None:
        d["pair"] = obj.pair.label()
    return d
