"""Petviashvili iteration for (aΔ² + b)u_j = α Σ_k a_jk |u_k|^p |u_j|^{p-2} u_j.

One step is u ← M^γ (aΔ² + b)^{-1} N(u) with the stabilizing factor
M = ⟨(aΔ² + b)u, u⟩ / ⟨N(u), u⟩ and γ = q/(q-1), q = 2p - 1.

With a shared M the ratio between components is left to the bare fixed-point
map; with one M_j per component each amplitude is stabilized separately. The
two modes attract different solution branches of coupled systems, so `auto`
runs both and keeps the better converged one.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .errors import ConfigError, ConvergenceError
from .functionals import nonlinearity
from .resolvent import Resolvent

logger = logging.getLogger(__name__)


class Normalization:
    SHARED = "shared"
    COMPONENTWISE = "componentwise"
    AUTO = "auto"

    ALL = (SHARED, COMPONENTWISE, AUTO)


@dataclass(frozen=True)
class PetviashviliOptions:
    max_iter: int = 1000
    tol: float = 1e-10
    gamma: Optional[float] = None
    damping: float = 1.0
    normalization: str = Normalization.AUTO

    def __post_init__(self):
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be positive, got {self.max_iter}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.gamma is not None and not 1 < self.gamma < 3:
            raise ConfigError(f"gamma must lie in (1, 3), got {self.gamma}")
        if not 0 < self.damping <= 1:
            raise ConfigError(f"damping must lie in (0, 1], got {self.damping}")
        if self.normalization not in Normalization.ALL:
            raise ConfigError(f"unknown normalization {self.normalization!r}")

    def gamma_for(self, p: float) -> float:
        if self.gamma is not None:
            return self.gamma
        q = 2.0 * p - 1.0
        return q / (q - 1.0)


@dataclass
class PetviashviliOutcome:
    values: np.ndarray
    iterations: int
    converged: bool
    residual: float
    normalization: str
    M: np.ndarray
    damping: float
    history: List[float] = field(default_factory=list)

    def active_components(self, rel: float = 1e-8) -> int:
        norms = np.sum(np.abs(self.values) ** 2, axis=tuple(range(1, self.values.ndim)))
        top = norms.max() if norms.size else 0.0
        return int(np.sum(norms > rel * top)) if top > 0 else 0


def iterate(
    resolvent: Resolvent,
    coupling: np.ndarray,
    p: float,
    init: np.ndarray,
    opts: PetviashviliOptions,
    normalization: str = Normalization.SHARED,
    alpha: float = 1.0,
) -> PetviashviliOutcome:
    grid = resolvent.grid
    gamma = opts.gamma_for(p)
    damping = opts.damping
    u = np.array(init, dtype=float)
    best = math.inf
    history: List[float] = []
    M = np.ones(u.shape[0])
    residual = math.inf

    for it in range(1, opts.max_iter + 1):
        nl = alpha * nonlinearity(u, coupling, p)
        v = resolvent.solve(nl)
        residual = float(np.max(np.abs(u - v)))
        num = np.asarray(resolvent.quadratic(u), dtype=float)
        den = np.asarray(grid.integrate(nl * u), dtype=float)
        active = num > 1e-28 * num.max() if num.max() > 0 else np.zeros_like(num, dtype=bool)
        if not active.any() or np.any(den[active] <= 0):
            logger.warning(f"⚠️ Petviashvili ({normalization}) lost its normalization at iteration {it}")
            break

        if normalization == Normalization.SHARED:
            M = np.where(active, num[active].sum() / den[active].sum(), 1.0)
        else:
            M = np.where(active, num / np.where(active, den, 1.0), 1.0)
        history.append(residual)

        if residual <= opts.tol and np.max(np.abs(M[active] - 1.0)) <= opts.tol:
            logger.debug(f"✅ Petviashvili ({normalization}) converged in {it} iterations, residual {residual:.2e}")
            return PetviashviliOutcome(u, it, True, residual, normalization, M, damping, history)

        scale = (M ** gamma)[(slice(None),) + (None,) * (u.ndim - 1)]
        new = np.where(active[(slice(None),) + (None,) * (u.ndim - 1)], scale * v, 0.0)
        u = damping * new + (1.0 - damping) * u
        if not np.all(np.isfinite(u)):
            logger.warning(f"⚠️ Petviashvili ({normalization}) produced non-finite values at iteration {it}")
            break

        best = min(best, residual)
        if damping == 1.0 and it > 50 and residual > 1e3 * best:
            damping = 0.5
            logger.warning(f"⚠️ Petviashvili ({normalization}) oscillating, damping set to {damping}")
        if it % 50 == 0:
            logger.debug(f"🔄 iteration {it}: residual {residual:.3e}, M {np.round(M, 8)}")

    return PetviashviliOutcome(u, len(history), False, residual, normalization, M, damping, history)


def solve(
    resolvent: Resolvent,
    coupling: np.ndarray,
    p: float,
    init: np.ndarray,
    opts: PetviashviliOptions,
    score: Optional[Callable[[np.ndarray], float]] = None,
    alpha: float = 1.0,
) -> PetviashviliOutcome:
    """Run the requested normalization (both for `auto`) and return the preferred outcome.

    Raises ConvergenceError when no run converges. See `preferred_outcome`
    for the ranking.
    """
    m = np.shape(init)[0]
    if opts.normalization == Normalization.AUTO:
        modes: Sequence[str] = (Normalization.COMPONENTWISE, Normalization.SHARED) if m > 1 else (Normalization.SHARED,)
    else:
        modes = (opts.normalization,)

    outcomes = [iterate(resolvent, coupling, p, init, opts, mode, alpha) for mode in modes]
    converged = [o for o in outcomes if o.converged]
    if not converged:
        worst = min(outcomes, key=lambda o: o.residual)
        raise ConvergenceError(
            f"Petviashvili did not converge in {opts.max_iter} iterations (best residual {worst.residual:.3e})",
            outcome=worst,
        )

    return preferred_outcome(converged, score)


def preferred_outcome(
    outcomes: Sequence[PetviashviliOutcome], score: Optional[Callable[[np.ndarray], float]] = None
) -> PetviashviliOutcome:
    """More nonzero components first, then lower score.

    This picks the solution branch of the coupled system, not the ground state:
    a semi-trivial profile with lower action is never preferred here. Vector
    and semi-trivial candidates are compared by action in `classify_beta`.
    """
    return min(outcomes, key=lambda o: (-o.active_components(), score(o.values) if score else 0.0))
