"""Split-step Fourier integration of i∂_t u_j + Δ²u_j = Σ_k a_jk |u_k|^p |u_j|^{p-2} u_j.

Sign conventions:
  linear part   i û_t = -|k|⁴ û      ⇒  û(t) = e^{+i|k|⁴t} û(0)
  nonlinear     i u_t = θ_j(|u|) u_j  ⇒  u_j(t) = e^{-iθ_j t} u_j(0), θ_j real

so a profile with Δ²Ψ + Ψ = N(Ψ) evolves as e^{-it}Ψ. The nonlinear
sub-flow keeps every modulus fixed, which makes the rotation exact.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (BlowUpCeilingError, ConfigError, GridError, GridMismatchError, NonFiniteStateError,
                     ResolutionLossError, WrongRegimeError)
from .functionals import FunctionalCache, phase_rate
from .grid import ComplexField, PeriodicGrid, RadialField, VectorField
from .groundstate import solve_box_groundstate
from .params import ScalingPair, ValidatedParams
from .petviashvili import PetviashviliOptions

logger = logging.getLogger(__name__)

TRACKED_PAIRS = (ScalingPair(1, 0), ScalingPair(0, 1), ScalingPair(1, 1))


@dataclass(frozen=True)
class SimState:
    field: ComplexField
    time: float = 0.0
    step_count: int = 0

    def __post_init__(self):
        if not isinstance(self.field.grid, PeriodicGrid):
            raise GridMismatchError("time stepping needs a PeriodicGrid")
        if not isinstance(self.field, ComplexField):
            object.__setattr__(self, "field", ComplexField(self.field.grid, self.field.values))
        if self.time < 0:
            raise ConfigError(f"time must be nonnegative, got {self.time}")

    @property
    def values(self) -> np.ndarray:
        return self.field.values


@dataclass(frozen=True)
class MonitorConfig:
    sample_every: int = 10
    pairs: Tuple[ScalingPair, ...] = TRACKED_PAIRS
    m_level: Optional[float] = None
    gn_constant: Optional[float] = None
    tail_limit: Optional[float] = 1e-3
    kinetic_ceiling: Optional[float] = None

    def __post_init__(self):
        if self.sample_every < 1:
            raise ConfigError(f"sample_every must be at least 1, got {self.sample_every}")
        if self.m_level is not None and not self.m_level > 0:
            raise ConfigError(f"m_level must be positive, got {self.m_level}")


class Membership(str, Enum):
    A_PLUS = "A_plus"
    A_MINUS = "A_minus"
    ABOVE_M = "above_m"


@dataclass
class MarginReport:
    total_mass: float
    threshold: float
    factor: float
    energy: float
    ceiling: float

    @property
    def subthreshold(self) -> bool:
        """Mass at or below the threshold; at equality the ceiling is infinite."""
        return self.total_mass <= self.threshold


@dataclass
class TrajectoryReport:
    pair_labels: List[str]
    times: List[float] = field(default_factory=list)
    mass_series: List[List[float]] = field(default_factory=list)
    energy_series: List[float] = field(default_factory=list)
    kinetic_series: List[float] = field(default_factory=list)
    K_series: Dict[str, List[float]] = field(default_factory=dict)
    quadratic_series: Dict[str, List[float]] = field(default_factory=dict)
    membership_series: List[Optional[str]] = field(default_factory=list)
    tail_series: List[float] = field(default_factory=list)
    threshold_margin: Optional[MarginReport] = None
    final: Optional[SimState] = None

    def __post_init__(self):
        for label in self.pair_labels:
            self.K_series.setdefault(label, [])
            self.quadratic_series.setdefault(label, [])

    def __len__(self) -> int:
        return len(self.times)

    def rows(self) -> List[Dict[str, object]]:
        out = []
        for i, t in enumerate(self.times):
            row: Dict[str, object] = {"time": t}
            row.update({f"mass_{j + 1}": m for j, m in enumerate(self.mass_series[i])})
            row.update(energy=self.energy_series[i], kinetic=self.kinetic_series[i])
            row.update({f"K_{label}": self.K_series[label][i] for label in self.pair_labels})
            row["membership"] = self.membership_series[i] or ""
            row["spectral_tail"] = self.tail_series[i]
            out.append(row)
        return out

    def columns(self, m: int) -> List[str]:
        return (["time"] + [f"mass_{j + 1}" for j in range(m)] + ["energy", "kinetic"]
                + [f"K_{label}" for label in self.pair_labels] + ["membership", "spectral_tail"])

    def mass_drift(self) -> np.ndarray:
        """Largest relative deviation of each component mass from its initial value."""
        masses = np.asarray(self.mass_series)
        if masses.size == 0:
            return np.zeros(0)
        ref = masses[0]
        scale = np.where(ref > 0, ref, 1.0)
        return np.max(np.abs(masses - ref), axis=0) / scale

    def energy_drift(self) -> float:
        if not self.energy_series:
            return 0.0
        e = np.asarray(self.energy_series)
        scale = abs(e[0]) if e[0] != 0 else 1.0
        return float(np.max(np.abs(e - e[0])) / scale)

    def summary(self) -> Dict[str, object]:
        return {
            "samples": len(self.times),
            "final_time": self.times[-1] if self.times else 0.0,
            "mass_drift": [float(x) for x in self.mass_drift()],
            "energy_drift": self.energy_drift(),
            "sup_kinetic": max(self.kinetic_series) if self.kinetic_series else 0.0,
            "min_K": {label: min(v) if v else None for label, v in self.K_series.items()},
            "threshold_margin": vars(self.threshold_margin) if self.threshold_margin else None,
        }


# --------- Propagator --------- #

class SplitStepPropagator:
    """Strang splitting with the linear multipliers cached for one (grid, τ)."""

    def __init__(self, grid: PeriodicGrid, params: ValidatedParams, tau: float):
        if grid.dim != params.N:
            raise GridMismatchError(f"box dimension {grid.dim} differs from N={params.N}")
        self.grid, self.params, self.tau = grid, params, float(tau)
        k4 = grid.k2 ** 2
        self._half = np.exp(0.5j * self.tau * k4)
        self._full = np.exp(1j * self.tau * k4)

    def linear(self, values: np.ndarray, duration: float) -> np.ndarray:
        if duration == 0.5 * self.tau:
            mult = self._half
        elif duration == self.tau:
            mult = self._full
        else:
            mult = np.exp(1j * duration * self.grid.k2 ** 2)
        return self.grid.ifft(mult * self.grid.fft(values))

    def nonlinear(self, values: np.ndarray, duration: float) -> np.ndarray:
        theta = phase_rate(values, self.params.coupling, self.params.p)
        return np.exp(-1j * duration * theta) * values

    def step(self, values: np.ndarray) -> np.ndarray:
        half = 0.5 * self.tau
        return self.linear(self.nonlinear(self.linear(values, half), self.tau), half)

    def advance(self, values: np.ndarray, steps: int) -> np.ndarray:
        """`steps` Strang steps with adjacent linear half steps fused."""
        if steps <= 0:
            return values
        values = self.grid.ifft(self._half * self.grid.fft(values))
        for k in range(steps):
            values = self.nonlinear(values, self.tau)
            mult = self._full if k < steps - 1 else self._half
            values = self.grid.ifft(mult * self.grid.fft(values))
        return values


def linear_halfstep(state: SimState, half_tau: float) -> SimState:
    """Exact free flow over `half_tau`; sub-flows leave time and step count unchanged."""
    g = state.field.grid
    values = g.ifft(np.exp(1j * half_tau * g.k2 ** 2) * g.fft(state.values))
    return replace(state, field=ComplexField(g, values))


def nonlinear_step(state: SimState, tau: float, params: ValidatedParams) -> SimState:
    theta = phase_rate(state.values, params.coupling, params.p)
    return replace(state, field=ComplexField(state.field.grid, np.exp(-1j * tau * theta) * state.values))


def strang_step(state: SimState, tau: float, params: ValidatedParams) -> SimState:
    if not tau > 0:
        raise ConfigError(f"time step must be positive, got {tau}")
    s = linear_halfstep(state, 0.5 * tau)
    s = nonlinear_step(s, tau, params)
    s = linear_halfstep(s, 0.5 * tau)
    return SimState(s.field, state.time + tau, state.step_count + 1)


# --------- Stable set and a priori bounds --------- #

def stable_set_membership(u: VectorField, params: ValidatedParams, pair: ScalingPair, m_level: float) -> Membership:
    if not m_level > 0:
        raise ConfigError(f"m_level must be positive, got {m_level}")
    c = FunctionalCache(u, params)
    if c.action >= m_level:
        return Membership.ABOVE_M
    return Membership.A_PLUS if c.constraint_K(pair) >= 0 else Membership.A_MINUS


def membership_consistency(
    u: VectorField, params: ValidatedParams, pairs: Sequence[ScalingPair], m_level: float
) -> Tuple[bool, Dict[str, Membership]]:
    """Below m the sign of K does not depend on the scaling pair."""
    labels = {pair.label(): stable_set_membership(u, params, pair, m_level) for pair in pairs}
    return len(set(labels.values())) <= 1, labels


@dataclass(frozen=True)
class KineticBound:
    passed: bool
    sup_kinetic: float
    bound: float


def kinetic_bound_check(report: TrajectoryReport, m_level: float, N: int, tol: float = 1e-2) -> KineticBound:
    bound = (2 + N) * m_level / 2
    sup = max(report.kinetic_series) if report.kinetic_series else 0.0
    return KineticBound(passed=sup <= bound * (1 + tol), sup_kinetic=sup, bound=bound)


def mass_critical_margin(init: VectorField, params: ValidatedParams, C: float) -> MarginReport:
    """Threshold (1/(2C))^{N/4} and the kinetic ceiling 2E/(1 - 2C M^{4/N})."""
    if not params.mass_critical:
        raise WrongRegimeError(f"mass-critical bound needs p = {params.p_low:g}, got p = {params.p:g}")
    c = FunctionalCache(init, params)
    N = params.N
    total = c.l2
    threshold = (1.0 / (2.0 * C)) ** (N / 4.0)
    factor = 1.0 - 2.0 * C * total ** (4.0 / N)
    ceiling = 2.0 * c.energy / factor if factor > 1e-12 else math.inf
    return MarginReport(total_mass=total, threshold=threshold, factor=factor, energy=c.energy, ceiling=ceiling)


# --------- Evolution --------- #

def _sample(report: TrajectoryReport, state: SimState, params: ValidatedParams, monitors: MonitorConfig) -> None:
    c = FunctionalCache(state.field, params)
    report.times.append(state.time)
    report.mass_series.append([float(x) for x in c.mass])
    report.energy_series.append(c.energy)
    report.kinetic_series.append(c.kinetic)
    for pair in monitors.pairs:
        report.K_series[pair.label()].append(c.constraint_K(pair))
        report.quadratic_series[pair.label()].append(c.quadratic_part(pair))
    member = None
    if monitors.m_level is not None:
        if c.action >= monitors.m_level:
            member = Membership.ABOVE_M.value
        else:
            pair = monitors.pairs[0] if monitors.pairs else TRACKED_PAIRS[0]
            member = (Membership.A_PLUS if c.constraint_K(pair) >= 0 else Membership.A_MINUS).value
    report.membership_series.append(member)
    report.tail_series.append(state.field.grid.spectral_tail(state.values))


def evolve(
    init: VectorField,
    T: float,
    tau: float,
    params: ValidatedParams,
    monitors: Optional[MonitorConfig] = None,
    observer: Optional[Callable[[SimState], None]] = None,
) -> TrajectoryReport:
    """Integrate to time T with step τ, sampling the monitors every `sample_every` steps.

    Raises a SimulationAbort subclass carrying the partial report on NaN,
    resolution loss or kinetic ceiling.
    """
    monitors = monitors or MonitorConfig()
    if not tau > 0 or T < 0:
        raise ConfigError(f"need tau > 0 and T >= 0, got tau={tau}, T={T}")
    steps = int(round(T / tau))
    if abs(steps * tau - T) > 1e-9 * max(1.0, T):
        raise ConfigError(f"tau={tau} does not divide T={T}")

    state = init if isinstance(init, SimState) else SimState(ComplexField(init.grid, init.values))
    grid = state.field.grid
    prop = SplitStepPropagator(grid, params, tau)
    report = TrajectoryReport(pair_labels=[pair.label() for pair in monitors.pairs])
    if monitors.gn_constant is not None:
        report.threshold_margin = mass_critical_margin(state.field, params, monitors.gn_constant)

    tail0 = grid.spectral_tail(state.values)
    if tail0 > 1e-8:
        logger.warning(f"⚠️ initial data under-resolved: spectral tail {tail0:.2e}")
    logger.info(f"🚀 evolving {steps} steps of tau={tau:g} on {grid.signature()}")

    _sample(report, state, params, monitors)
    if observer:
        observer(state)
    t0, done = state.time, 0
    while done < steps:
        chunk = min(monitors.sample_every, steps - done)
        values = prop.advance(state.values, chunk)
        done += chunk
        t = t0 + done * tau
        last = report.times[-1]
        if not np.all(np.isfinite(values)):
            report.final = state
            raise NonFiniteStateError(f"non-finite state before t={t:g}", report, last)
        state = SimState(ComplexField(grid, values), t, state.step_count + chunk)
        _sample(report, state, params, monitors)
        if observer:
            observer(state)
        tail = report.tail_series[-1]
        if monitors.tail_limit is not None and tail > monitors.tail_limit:
            report.final = state
            logger.error(f"❌ resolution lost at t={t:g}: spectral tail {tail:.2e}")
            raise ResolutionLossError(f"spectral tail {tail:.2e} above {monitors.tail_limit:g} at t={t:g}", report, last)
        kin = report.kinetic_series[-1]
        if monitors.kinetic_ceiling is not None and kin > monitors.kinetic_ceiling:
            report.final = state
            logger.error(f"❌ kinetic ceiling exceeded at t={t:g}: {kin:.3e}")
            raise BlowUpCeilingError(f"kinetic {kin:.3e} above ceiling {monitors.kinetic_ceiling:g} at t={t:g}", report, last)

    report.final = state
    logger.info(f"✅ reached t={state.time:g}; mass drift {np.max(report.mass_drift(), initial=0.0):.2e}, "
                f"energy drift {report.energy_drift():.2e}")
    return report


# --------- Initial data --------- #

def transplant_radial(profile: RadialField, box: PeriodicGrid, decay_tol: float = 1e-8) -> ComplexField:
    """Interpolate a radial profile onto the box lattice centred at the origin."""
    g = profile.grid
    if box.d != g.N:
        raise GridMismatchError(f"box dimension {box.d} differs from profile dimension {g.N}")
    values = profile.values
    peak = np.max(np.abs(values))
    if peak > 0:
        outside = np.abs(values[:, g.r >= box.L])
        far = outside.max() / peak if outside.size else 0.0
        if far > decay_tol:
            raise GridError(f"profile is {far:.2e} of its peak at distance L={box.L:g}; enlarge the box")
    nodes = np.concatenate([-g.r[::-1], g.r])
    spline = CubicSpline(nodes, np.concatenate([values[:, ::-1], values], axis=1), axis=1)
    rad = box.radius
    out = spline(np.minimum(rad, g.R).ravel()).reshape((profile.m,) + box.shape)
    out[:, rad > g.R] = 0.0
    return ComplexField(box, out)


def standing_wave_data(
    profile: RadialField,
    box: PeriodicGrid,
    params: ValidatedParams,
    opts: Optional[PetviashviliOptions] = None,
    decay_tol: float = 5e-2,
) -> Tuple[ComplexField, float]:
    """Transplant a radial ground state and polish it into the stationary state of the box.

    Returns the polished field and its sup distance from the transplant relative to the peak.
    """
    seed = transplant_radial(profile, box, decay_tol)
    psi = solve_box_groundstate(box, params, opts, init=seed.values.real).profile
    peak = np.max(np.abs(seed.values))
    gap = float(np.max(np.abs(psi.values - seed.values)) / peak)
    logger.info(f"🌊 standing-wave data on {box.signature()}: polish moved the transplant by {gap:.2e}")
    return ComplexField(box, psi.values), gap


def gaussian_data(box: PeriodicGrid, amplitudes: Sequence[float], width: float = 1.0) -> ComplexField:
    bump = np.exp(-box.radius ** 2 / (2.0 * width ** 2))
    return ComplexField(box, np.stack([a * bump for a in amplitudes]))


# --------- Studies --------- #

@dataclass
class OrderStudy:
    taus: List[float]
    energy_drifts: List[float]
    mass_drifts: List[float]
    observed_order: Optional[float]


def energy_order_study(init: VectorField, T: float, taus: Sequence[float], params: ValidatedParams) -> OrderStudy:
    """Relative |E(T) - E(0)| per step size and the fitted order in τ."""
    e_drifts, m_drifts = [], []
    for tau in taus:
        steps = int(round(T / tau))
        rep = evolve(init, T, tau, params, MonitorConfig(sample_every=steps, pairs=()))
        e0, e1 = rep.energy_series[0], rep.energy_series[-1]
        e_drifts.append(abs(e1 - e0) / abs(e0))
        m_drifts.append(float(np.max(rep.mass_drift(), initial=0.0)))
    usable = [(t, d) for t, d in zip(taus, e_drifts) if d > 0]
    order = None
    if len(usable) >= 2:
        logs = np.log(np.array(usable))
        order = float(np.polyfit(logs[:, 0], logs[:, 1], 1)[0])
    return OrderStudy(list(taus), e_drifts, m_drifts, order)


def time_reversal_defect(init: VectorField, T: float, tau: float, params: ValidatedParams) -> float:
    """sup |conj(S_T(conj(S_T u0))) - u0| / sup |u0|."""
    monitors = MonitorConfig(sample_every=max(1, int(round(T / tau))), pairs=(), tail_limit=None)
    forward = evolve(init, T, tau, params, monitors).final
    back = evolve(ComplexField(forward.field.grid, np.conj(forward.values)), T, tau, params, monitors).final
    u0 = np.asarray(init.values)
    scale = np.max(np.abs(u0)) or 1.0
    return float(np.max(np.abs(np.conj(back.values) - u0)) / scale)


@dataclass(frozen=True)
class StandingWaveReport:
    modulus_deviation: float
    phase_defect: float
    final_time: float


def standing_wave_deviation(
    profile: VectorField, T: float, tau: float, params: ValidatedParams, sample_every: int = 10
) -> StandingWaveReport:
    """Track sup_t ||u(t)| - |Ψ|| and check u(T) e^{iT} ≈ Ψ, both relative to sup |Ψ|."""
    psi = np.asarray(profile.values)
    modulus = np.abs(psi)
    scale = modulus.max()
    worst = [0.0]

    def watch(state: SimState) -> None:
        worst[0] = max(worst[0], float(np.max(np.abs(np.abs(state.values) - modulus)) / scale))

    rep = evolve(profile, T, tau, params, MonitorConfig(sample_every=sample_every, pairs=(), tail_limit=None), observer=watch)
    final = rep.final
    phase = float(np.max(np.abs(final.values * np.exp(1j * final.time) - psi)) / scale)
    return StandingWaveReport(modulus_deviation=worst[0], phase_defect=phase, final_time=final.time)
