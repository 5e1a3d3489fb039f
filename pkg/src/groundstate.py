"""Ground states of Δ²ψ_j + ψ_j = Σ_k a_jk |ψ_k|^p |ψ_j|^{p-2} ψ_j.

Solutions are certified by verification (residual, vanishing constraint for
several scaling pairs, Pohozaev ratios) and their action levels recorded; the
solver cannot prove global minimality.

The scalar profile w of Δ²w + w = w^{2p-1} decays like e^{-r/√2} cos(r/√2 + φ),
so it changes sign in its tail. Positivity is checked on the core, up to the
first sign change.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import minimize_scalar, root

from .errors import ConfigError, GridMismatchError, HypothesisError, LabError, SingularSystemError
from .functionals import ConstraintValue, FunctionalCache, action
from .grid import Grid, PeriodicGrid, RadialField, RadialGrid, VectorField, make_field
from .params import DEFAULT_PAIRS, ProblemParams, ReducedCoupling, ScalingPair, ValidatedParams, expand_coupling, validate
from .petviashvili import Normalization, PetviashviliOptions, PetviashviliOutcome, solve
from .resolvent import resolvent_for

logger = logging.getLogger(__name__)


class PohozaevResiduals(NamedTuple):
    kinetic: Optional[float]
    potential: Optional[float]

    @property
    def defined(self) -> bool:
        return self.kinetic is not None

    def worst(self) -> float:
        if not self.defined:
            return math.nan
        return max(abs(self.kinetic), abs(self.potential))


@dataclass
class GroundStateResult:
    profile: VectorField
    residual_sup: float
    iterations: int
    action_level: float
    constraint_values: List[ConstraintValue]
    pohozaev: PohozaevResiduals
    component_masses: List[float]
    kind: str
    normalization: str = Normalization.SHARED
    converged: bool = True

    def max_relative_K(self) -> float:
        return max(abs(c.K) for c in self.constraint_values) / self.action_level

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "converged": self.converged,
            "iterations": self.iterations,
            "residual_sup": self.residual_sup,
            "action_level": self.action_level,
            "normalization": self.normalization,
            "component_masses": self.component_masses,
            "constraint_values": [{"pair": c.pair.label(), "K": c.K, "H": c.H} for c in self.constraint_values],
            "pohozaev": {"kinetic": self.pohozaev.kinetic, "potential": self.pohozaev.potential},
            "grid": self.profile.grid.signature(),
        }


@dataclass
class ScalarDiagnostics:
    iterations: int
    residual: float
    core_radius: float
    tail_ratio: float
    pohozaev: PohozaevResiduals
    action: float
    restarts: int = 0


@dataclass(frozen=True)
class AmplitudeSolution:
    c: Tuple[float, ...]
    residual: float
    method: str


# --------- Helpers --------- #

def gaussian_init(grid: Grid, m: int, sigma: float = 1.0, perturb: float = 0.05) -> np.ndarray:
    r = grid.r if isinstance(grid, RadialGrid) else grid.radius
    bump = np.exp(-r ** 2 / (2.0 * sigma ** 2))
    return np.stack([(1.0 + perturb * j) * bump for j in range(m)])


def scalar_params(N: int, p: float, allow_out_of_range: bool = False) -> ValidatedParams:
    return validate(ProblemParams.from_matrix(N, p, [[1.0]]), allow_out_of_range=allow_out_of_range)


def core_positivity(w: VectorField) -> Tuple[bool, float, float]:
    """(w(0) > 0, radius of the first sign change, min/max ratio)."""
    values = w.values[0]
    r = w.grid.r
    peak = values.max()
    if values[0] <= 0 or peak <= 0:
        return False, 0.0, -math.inf
    sign_change = np.nonzero(values <= 0)[0]
    core = float(r[sign_change[0]]) if sign_change.size else float(w.grid.R)
    return True, core, float(values.min() / peak)


def pohozaev_residuals(u: VectorField, params: ValidatedParams) -> PohozaevResiduals:
    """Relative defects of ‖Δu‖²/‖u‖² = N(p-1)/D and Σ a_jk∫|u_j u_k|^p / ‖u‖² = 4p/D, D = N - p(N-4).

    Both follow from combining K_{1,0} = 0 and K_{0,1} = 0, so they hold for
    any solution with the full coupling; for a semi-trivial profile the second
    one is the amplitude identity Σ‖φ‖² = (1 - N/4 + N/(4p)) Σ μ‖φ‖_{2p}^{2p}.
    """
    c = FunctionalCache(u, params)
    N, p = params.N, params.p
    D = N - p * (N - 4)
    if c.l2 == 0 or D <= 0:
        return PohozaevResiduals(None, None)
    return PohozaevResiduals(
        kinetic=(c.kinetic / c.l2) / (N * (p - 1) / D) - 1.0,
        potential=(c.interaction / c.l2) / (4 * p / D) - 1.0,
    )


def _classify(outcome_values: np.ndarray, m: int) -> str:
    norms = np.sum(outcome_values ** 2, axis=tuple(range(1, outcome_values.ndim)))
    active = int(np.sum(norms > 1e-8 * norms.max())) if norms.max() > 0 else 0
    if m == 1:
        return "scalar"
    return "vector" if active >= 2 else "semi-trivial"


def build_result(
    profile: VectorField,
    params: ValidatedParams,
    outcome: Optional[PetviashviliOutcome] = None,
    pairs: Sequence[ScalingPair] = DEFAULT_PAIRS,
) -> GroundStateResult:
    c = FunctionalCache(profile, params)
    level = c.action
    if not level > 0:
        logger.warning(f"⚠️ action level {level:.3e} is not positive")
    return GroundStateResult(
        profile=profile,
        residual_sup=outcome.residual if outcome else math.nan,
        iterations=outcome.iterations if outcome else 0,
        action_level=level,
        constraint_values=[ConstraintValue(pair, c.constraint_K(pair), c.functional_H(pair)) for pair in pairs],
        pohozaev=pohozaev_residuals(profile, params),
        component_masses=[float(x) for x in c.mass],
        kind=_classify(profile.values, params.m),
        normalization=outcome.normalization if outcome else "",
        converged=outcome.converged if outcome else True,
    )


# --------- Scalar profile --------- #

def solve_scalar_w(
    grid: RadialGrid,
    N: int,
    p: float,
    opts: Optional[PetviashviliOptions] = None,
    allow_out_of_range: bool = False,
) -> Tuple[RadialField, ScalarDiagnostics]:
    """Profile w of Δ²w + w = w^{2p-1} on a radial grid."""
    if grid.N != N:
        raise GridMismatchError(f"grid dimension {grid.N} differs from N={N}")
    params = scalar_params(N, p, allow_out_of_range)
    opts = opts or PetviashviliOptions(normalization=Normalization.SHARED)
    res = resolvent_for(grid, 1.0, 1.0)

    restarts = 0
    for sigma in (1.0, 2.0, 4.0):
        outcome = solve(res, params.coupling, p, gaussian_init(grid, 1, sigma), opts)
        w = RadialField(grid, outcome.values)
        ok, core, tail = core_positivity(w)
        if ok:
            break
        restarts += 1
        logger.warning(f"⚠️ profile is not positive at the origin (sigma={sigma}), restarting from a wider Gaussian")
    else:
        raise HypothesisError("no positive-core profile found", hypothesis="positivity")

    c = FunctionalCache(w, params)
    diag = ScalarDiagnostics(
        iterations=outcome.iterations, residual=outcome.residual, core_radius=core,
        tail_ratio=tail, pohozaev=pohozaev_residuals(w, params), action=c.action, restarts=restarts,
    )
    logger.info(f"✅ w solved for (N, p) = ({N}, {p:g}) in {outcome.iterations} iterations; S(w) = {c.action:.10g}")
    return w, diag


# --------- Amplitude route --------- #

def amplitude_equation(c: np.ndarray, mu: np.ndarray, beta: float, p: float) -> np.ndarray:
    """μ_j c_j^{2p-2} + β Σ_{k≠j} c_k^p c_j^{p-2} - 1."""
    c = np.asarray(c, dtype=float)
    cp = np.abs(c) ** p
    cross = cp.sum() - cp
    return mu * np.abs(c) ** (2 * p - 2) + beta * cross * np.abs(c) ** (p - 2) - 1.0


def solve_amplitudes(rc: ReducedCoupling, p: float) -> AmplitudeSolution:
    mu = np.array(rc.mu, dtype=float)
    beta, m = rc.beta, len(mu)
    if np.any(mu <= 0) or beta < 0:
        raise HypothesisError(f"amplitudes need positive mu and nonnegative beta, got {rc}", hypothesis="positivity")

    if m == 1 or beta == 0:
        c = mu ** (-1.0 / (2 * p - 2))
        method = "decoupled"
    elif p == 2:
        if not (beta < mu.min() or beta > mu.max()):
            raise HypothesisError(
                f"p=2 needs beta < min mu = {mu.min():g} or beta > max mu = {mu.max():g}, got {beta:g}",
                hypothesis="beta-outside-mu-range",
            )
        a = expand_coupling(rc, m)
        if np.linalg.cond(a) > 1e12:
            raise SingularSystemError(f"amplitude system is singular at beta={beta:g}", hypothesis="nonsingular")
        s = np.linalg.solve(a, np.ones(m))
        if np.any(s <= 0):
            raise HypothesisError(f"no positive amplitude solution, s = {s}", hypothesis="positive-solution")
        c = np.sqrt(s)
        method = "linear"
    else:
        c0 = np.full(m, (mu.mean() + (m - 1) * beta) ** (-1.0 / (2 * p - 2)))
        sol = root(amplitude_equation, c0, args=(mu, beta, p), method="hybr", options={"xtol": 1e-15})
        c = sol.x
        if not sol.success or np.any(c <= 0):
            raise HypothesisError(f"root find found no positive amplitudes ({sol.message})", hypothesis="positive-solution")
        method = "root"

    residual = float(np.max(np.abs(amplitude_equation(c, mu, beta, p))))
    if residual > 1e-12:
        raise HypothesisError(f"amplitude residual {residual:.2e} above 1e-12", hypothesis="accuracy")
    return AmplitudeSolution(c=tuple(float(x) for x in c), residual=residual, method=method)


def vector_from_amplitudes(c: Sequence[float], w: RadialField) -> RadialField:
    c = np.asarray(c, dtype=float)
    if not np.any(c):
        logger.info("ℹ️ zero amplitudes give the trivial field")
    return RadialField(w.grid, np.outer(c, w.values[0]))


def semitrivial_candidates(w: RadialField, params: ValidatedParams) -> List[RadialField]:
    """μ_j^{-1/(2p-2)} w placed in component j, all others zero."""
    mu = np.diag(params.coupling)
    out = []
    for j in range(params.m):
        values = np.zeros((params.m, w.grid.n))
        values[j] = mu[j] ** (-1.0 / (2 * params.p - 2)) * w.values[0]
        out.append(RadialField(w.grid, values))
    return out


def stack_semitrivial(w: RadialField, params: ValidatedParams) -> RadialField:
    mu = np.diag(params.coupling)
    return vector_from_amplitudes(mu ** (-1.0 / (2 * params.p - 2)), w)


# --------- Direct vector solve --------- #

def solve_vector_direct(
    grid: Grid,
    params: ValidatedParams,
    opts: Optional[PetviashviliOptions] = None,
    init: Optional[np.ndarray] = None,
) -> GroundStateResult:
    """Petviashvili on the full coupled system; semi-trivial limits are results, not errors."""
    if not isinstance(params, ValidatedParams):
        params = validate(params)
    if grid.dim != params.N:
        raise GridMismatchError(f"grid dimension {grid.dim} differs from N={params.N}")
    opts = opts or PetviashviliOptions()
    init = gaussian_init(grid, params.m) if init is None else np.asarray(init, dtype=float)
    res = resolvent_for(grid, 1.0, 1.0)

    def score(values: np.ndarray) -> float:
        return action(make_field(grid, values), params)

    outcome = solve(res, params.coupling, params.p, init, opts, score=score)
    result = build_result(make_field(grid, outcome.values), params, outcome)
    logger.info(
        f"✅ {result.kind} solution ({outcome.normalization}) in {outcome.iterations} iterations, "
        f"S = {result.action_level:.10g}"
    )
    return result


def solve_box_groundstate(
    box: PeriodicGrid,
    params: ValidatedParams,
    opts: Optional[PetviashviliOptions] = None,
    init: Optional[np.ndarray] = None,
) -> GroundStateResult:
    """Stationary solution of the spectrally discretized system on the periodic box."""
    if not isinstance(box, PeriodicGrid):
        raise GridMismatchError("solve_box_groundstate needs a PeriodicGrid")
    return solve_vector_direct(box, params, opts, init)


# --------- Dilation curve g(t) = S(Φ(·/t)) --------- #

def dilation_action_curve(phi: VectorField, params: ValidatedParams, t_values: Sequence[float]) -> np.ndarray:
    c = FunctionalCache(phi, params)
    t = np.asarray(t_values, dtype=float)
    N = params.N
    return 0.5 * t ** (N - 4) * c.kinetic + 0.5 * t ** N * c.l2 - t ** N * c.potential


@dataclass(frozen=True)
class DilationMax:
    t_bar: float
    g_max: float
    sampled_max: float
    relative_gap: float


def dilation_action_max(phi: VectorField, params: ValidatedParams) -> DilationMax:
    """Closed-form maximizer of g and its value, cross-checked by a bounded search."""
    c = FunctionalCache(phi, params)
    N, K = params.N, c.kinetic
    excess = c.interaction / params.p - c.l2
    if not excess > 0:
        raise HypothesisError(f"potential excess {excess:.3e} is not positive", hypothesis="potential-excess")

    t_bar = ((N - 4) / N) ** 0.25 * K ** 0.25 / excess ** 0.25
    g_max = 2.0 * (N - 4) ** ((N - 4) / 4) / N ** (N / 4) * K ** (N / 4) / excess ** ((N - 4) / 4)

    def g(t: float) -> float:
        return float(dilation_action_curve(phi, params, [t])[0])

    if t_bar == 0.0:
        sampled = g(0.0)
    else:
        dense = np.linspace(0.0, 3.0 * t_bar, 3001)
        sampled = float(dilation_action_curve(phi, params, dense).max())
        found = minimize_scalar(lambda t: -g(t), bounds=(0.5 * t_bar, 2.0 * t_bar), method="bounded",
                                options={"xatol": 1e-12 * t_bar})
        sampled = max(sampled, -float(found.fun))
    return DilationMax(t_bar=t_bar, g_max=g_max, sampled_max=sampled, relative_gap=abs(g_max - sampled) / abs(g_max))


# --------- β classification --------- #

@dataclass
class BetaPoint:
    beta: float
    semi_trivial_action: float
    vector_action: Optional[float]
    vector_route: Optional[str]
    classification: str
    dilation_bound: Optional[float] = None
    notes: List[str] = field(default_factory=list)

    def to_row(self) -> Dict[str, Any]:
        return {
            "beta": self.beta,
            "semi_trivial_action": self.semi_trivial_action,
            "vector_action": self.vector_action,
            "vector_route": self.vector_route or "",
            "dilation_bound": self.dilation_bound,
            "classification": self.classification,
        }


@dataclass
class BetaSweepReport:
    N: int
    p: float
    mu: Tuple[float, ...]
    points: List[BetaPoint]
    crossover: Optional[Tuple[float, float]]
    failures: Dict[float, str] = field(default_factory=dict)
    provenance: List[Dict[str, Any]] = field(default_factory=list)

    def rows(self) -> List[Dict[str, Any]]:
        return [pt.to_row() for pt in self.points]


def _classify_one(grid: RadialGrid, w: RadialField, N: int, p: float, mu: Tuple[float, ...], beta: float,
                  opts: PetviashviliOptions, allow_out_of_range: bool = False) -> BetaPoint:
    params = validate(ProblemParams.from_reduced(N, p, ReducedCoupling(mu, beta)), allow_out_of_range=allow_out_of_range)
    semi = min(action(f, params) for f in semitrivial_candidates(w, params))
    if params.m == 1:
        return BetaPoint(beta, semi, None, None, "semi-trivial")

    candidates: List[Tuple[float, str]] = []
    notes: List[str] = []
    try:
        direct = solve_vector_direct(grid, params, opts)
        if direct.kind == "vector":
            candidates.append((direct.action_level, f"direct-{direct.normalization}"))
        else:
            notes.append("direct solve reached a semi-trivial profile")
    except LabError as e:
        notes.append(f"direct: {e}")
    try:
        amp = solve_amplitudes(ReducedCoupling(mu, beta), p)
        candidates.append((action(vector_from_amplitudes(amp.c, w), params), "amplitudes"))
    except LabError as e:
        notes.append(f"amplitudes: {e}")

    bound = None
    try:
        bound = dilation_action_max(stack_semitrivial(w, params), params).g_max
    except HypothesisError as e:
        notes.append(f"dilation bound: {e}")

    vector_action, route = min(candidates) if candidates else (None, None)
    is_vector = vector_action is not None and vector_action < semi * (1 - 1e-12)
    return BetaPoint(beta, semi, vector_action, route, "vector" if is_vector else "semi-trivial", bound, notes)


def classify_beta(
    grid: RadialGrid,
    params_base: Union[ProblemParams, ValidatedParams],
    beta_values: Sequence[float],
    opts: Optional[PetviashviliOptions] = None,
    max_workers: Optional[int] = None,
) -> BetaSweepReport:
    """Compare semi-trivial and vector action levels across a monotone β grid.

    N, p and the self-couplings μ come from `params_base`; its off-diagonal
    entries are replaced by each β of the sweep.
    """
    from .orchestrator import SweepOrchestrator, TaskStatus

    N, p = params_base.N, params_base.p
    mu = tuple(float(x) for x in np.diag(np.asarray(params_base.coupling, dtype=float)))
    allow = isinstance(params_base, ValidatedParams) and params_base.allow_out_of_range

    betas = [float(b) for b in beta_values]
    steps = np.diff(betas)
    if len(betas) > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
        raise ConfigError("beta values must be strictly monotone")
    opts = opts or PetviashviliOptions()
    w, _ = solve_scalar_w(grid, N, p, PetviashviliOptions(max_iter=opts.max_iter, tol=opts.tol, normalization=Normalization.SHARED))

    orchestrator = SweepOrchestrator(max_workers=max_workers)
    tasks = {b: (lambda b=b: _classify_one(grid, w, N, p, mu, b, opts, allow)) for b in betas}
    outcomes = orchestrator.run(tasks, stage="classify_beta", inputs={"N": N, "p": p, "mu": list(mu)})

    points, failures = [], {}
    for b in betas:
        out = outcomes[b]
        if out.status == TaskStatus.COMPLETED:
            points.append(out.value)
        else:
            failures[b] = out.error
    crossover = None
    for a, b in zip(points, points[1:]):
        if a.classification != b.classification:
            crossover = (a.beta, b.beta)
            break
    logger.info(f"📊 beta sweep: {len(points)} points, {len(failures)} failures, crossover {crossover}")
    return BetaSweepReport(N, p, mu, points, crossover, failures, orchestrator.provenance_chain())


# --------- Resolution robustness --------- #

@dataclass(frozen=True)
class ResolutionReport:
    action_coarse: float
    action_fine: float
    relative_change: float


def resolution_check(grid: RadialGrid, params: ValidatedParams, opts: Optional[PetviashviliOptions] = None) -> ResolutionReport:
    coarse = solve_vector_direct(grid, params, opts)
    fine = solve_vector_direct(RadialGrid(grid.N, 1.5 * grid.R, 2 * grid.n), params, opts)
    change = abs(fine.action_level - coarse.action_level) / abs(coarse.action_level)
    return ResolutionReport(coarse.action_level, fine.action_level, change)
