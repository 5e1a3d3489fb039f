"""Named acceptance presets: every invariant the lab asserts, at fixed resolutions."""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Callable, Dict, List, Optional

import numpy as np

from .dynamics import (Membership, MonitorConfig, evolve, energy_order_study, gaussian_data, kinetic_bound_check,
                       mass_critical_margin, stable_set_membership, standing_wave_data, standing_wave_deviation)
from .functionals import FunctionalCache, el_residual, lie_derivative_check
from .gn import GapStatus, closed_form_C, cross_validate, gn_inequality_check, minimize_J
from .grid import PeriodicGrid, RadialField, RadialGrid
from .groundstate import (dilation_action_max, scalar_params, solve_amplitudes, solve_scalar_w,
                          solve_vector_direct, stack_semitrivial, vector_from_amplitudes)
from .orchestrator import SweepOrchestrator, TaskStatus
from .params import DEFAULT_PAIRS, ProblemParams, ReducedCoupling, ScalingPair, validate
from .petviashvili import Normalization, PetviashviliOptions

logger = logging.getLogger(__name__)


@dataclass
class CheckOutcome:
    name: str
    passed: bool
    value: float
    threshold: float
    note: str = ""
    finding: bool = False

    def to_row(self) -> Dict[str, object]:
        return asdict(self)


def _le(name: str, value: float, threshold: float, note: str = "") -> CheckOutcome:
    return CheckOutcome(name, bool(value <= threshold), float(value), float(threshold), note)


def _ge(name: str, value: float, threshold: float, note: str = "") -> CheckOutcome:
    return CheckOutcome(name, bool(value >= threshold), float(value), float(threshold), note)


def _run(tasks: Dict[str, Callable[[], List[CheckOutcome]]], stage: str, max_workers: Optional[int]) -> List[CheckOutcome]:
    outcomes = SweepOrchestrator(max_workers=max_workers).run(tasks, stage=stage)
    results: List[CheckOutcome] = []
    for key, out in outcomes.items():
        if out.status == TaskStatus.COMPLETED:
            results.extend(out.value)
        else:
            results.append(CheckOutcome(str(key), False, math.nan, math.nan, note=out.error or "failed"))
    for r in results:
        mark = "✅" if r.passed else "❌"
        logger.info(f"{mark} {r.name}: {r.value:.4g} (threshold {r.threshold:.4g}){' [finding]' if r.finding else ''}")
    return results


# --------- Stationary suite --------- #

def stationary_suite(N: int, p: float, quick: bool = False, max_workers: Optional[int] = None) -> List[CheckOutcome]:
    n, R = (2000, 16.0) if quick else (8000, 16.0)
    grid = RadialGrid(N, R, n)
    opts = PetviashviliOptions(tol=1e-10, max_iter=2000)
    w, diag = solve_scalar_w(grid, N, p, PetviashviliOptions(tol=1e-10, max_iter=2000, normalization=Normalization.SHARED))
    scalar = scalar_params(N, p)
    pohozaev_tol = 1e-3 if quick else 1e-4

    def pohozaev() -> List[CheckOutcome]:
        note = f"core radius {diag.core_radius:.3f}"
        return [
            _le("pohozaev_kinetic_ratio", abs(diag.pohozaev.kinetic), pohozaev_tol, note),
            _le("pohozaev_potential_ratio", abs(diag.pohozaev.potential), pohozaev_tol, note),
        ]

    def constraints() -> List[CheckOutcome]:
        c = FunctionalCache(w, scalar)
        worst = max(abs(c.constraint_K(pair)) for pair in DEFAULT_PAIRS) / c.action
        out = [_le("constraint_vanishing_scalar", worst, pohozaev_tol)]
        vec = solve_vector_direct(grid, validate(ProblemParams.from_reduced(N, p, ReducedCoupling((1.0, 2.0), 0.5))), opts)
        out.append(_le("constraint_vanishing_vector", vec.max_relative_K(), pohozaev_tol, f"{vec.kind} solution"))
        return out

    def lie_probes() -> List[CheckOutcome]:
        rng = np.random.default_rng(7)
        orders = []
        for _ in range(5 if quick else 20):
            width = rng.uniform(0.7, 2.0)
            amp = rng.uniform(0.3, 1.5)
            probe = RadialField(grid, amp * np.exp(-grid.r ** 2 / (2 * width ** 2)))
            rep = lie_derivative_check(probe, scalar, ScalingPair(1, 1))
            orders.append(rep.observed_order if rep.observed_order is not None else 2.0)
        return [_ge("lie_derivative_order", min(orders), 1.9)]

    def amplitude_paths() -> List[CheckOutcome]:
        if p != 2:
            return []
        rc = ReducedCoupling((1.0, 2.0), 0.5)
        params = validate(ProblemParams.from_reduced(N, p, rc))
        amp = vector_from_amplitudes(solve_amplitudes(rc, p).c, w)
        direct = solve_vector_direct(grid, params, opts)
        return [
            _le("amplitude_route_residual", el_residual(amp, params).weighted_sup, 1e-6),
            _le("amplitude_direct_agreement", float(np.max(np.abs(amp.values - direct.profile.values))), 1e-5),
        ]

    def dilation_bound() -> List[CheckOutcome]:
        params = validate(ProblemParams.from_reduced(N, p, ReducedCoupling((1.0, 1.0), 0.5)))
        dm = dilation_action_max(stack_semitrivial(w, params), params)
        return [_le("dilation_max_closed_form", dm.relative_gap, 1e-6)]

    def gn_agreement() -> List[CheckOutcome]:
        w_norm = math.sqrt(float(w.norms_sq()[0]))
        out = []
        for beta in (0.0, 0.01):
            params = validate(ProblemParams.from_reduced(N, p, ReducedCoupling((1.0, 1.0), beta), allow_decoupled=True),
                              allow_out_of_range=beta == 0.0)
            gn = minimize_J(grid, params, opts)
            rep = cross_validate(gn, closed_form_C(N, p, (1.0, 1.0), w_norm), w)
            agreed = rep.status == GapStatus.PASS
            out.append(CheckOutcome(f"gn_closed_form_beta_{beta:g}", agreed or rep.status == GapStatus.FINDING,
                                    rep.relative_gap, rep.tolerance, "; ".join(rep.findings),
                                    finding=rep.status == GapStatus.FINDING))
            if rep.semitrivial_gap is not None:
                out.append(_le(f"gn_semitrivial_beta_{beta:g}", rep.semitrivial_gap, rep.tolerance))
            if beta == 0.01:
                ineq = gn_inequality_check(grid, params, gn.C_best, n_probes=40 if quick else 200, seed=11)
                ineq_eq = gn_inequality_check(gn.minimizer.grid, params, gn.C_best, n_probes=0, minimizer=gn.minimizer)
                out.append(_le("gn_inequality_violations", ineq.violations, 0, f"worst ratio {ineq.worst_ratio:.8f}"))
                out.append(_le("gn_equality_at_minimizer", ineq_eq.equality_defect, 1e-8))
                out.append(_le("gn_el_residual", gn.el_residual, 1e-8))
        return out

    tasks = {
        "pohozaev": pohozaev,
        "constraints": constraints,
        "lie_probes": lie_probes,
        "amplitude_paths": amplitude_paths,
        "dilation_bound": dilation_bound,
        "gn_agreement": gn_agreement,
    }
    return _run(tasks, f"stationary_suite[N={N},p={p:g}]", max_workers)


# --------- Dynamics suite --------- #

def dynamics_suite(quick: bool = False, max_workers: Optional[int] = None) -> List[CheckOutcome]:
    box = PeriodicGrid(4, 16 if quick else 32, 10.0)
    critical = validate(ProblemParams.from_reduced(4, 2.0, ReducedCoupling((1.0, 1.0), 0.5)), allow_out_of_range=True)
    dt = 4e-3 if quick else 1e-3

    def conservation() -> List[CheckOutcome]:
        data = gaussian_data(box, (0.3, 0.2), width=2.0)
        rep = evolve(data, 1.0, dt, critical, MonitorConfig(sample_every=50))
        study = energy_order_study(data, 1.0, (4e-3, 2e-3, 1e-3), critical)
        return [
            _le("mass_drift", float(np.max(rep.mass_drift())), 1e-10),
            _le("energy_drift", study.energy_drifts[-1], 1e-6),
            _ge("energy_order", study.observed_order or 0.0, 1.9),
        ]

    def standing_and_stable() -> List[CheckOutcome]:
        sw_box = PeriodicGrid(4, 16, 6.0)
        params = validate(ProblemParams.from_matrix(4, 3.0, [[1.0]]))
        w, _ = solve_scalar_w(RadialGrid(4, 16.0, 2000 if quick else 4000), 4, 3.0,
                              PetviashviliOptions(tol=1e-10, max_iter=2000, normalization=Normalization.SHARED))
        psi, gap = standing_wave_data(w, sw_box, params, PetviashviliOptions(tol=1e-11, max_iter=3000))
        sw = standing_wave_deviation(psi, 2 * math.pi, math.pi / 1000, params)
        m_level = FunctionalCache(psi, params).action
        half = psi.scaled(0.5)
        start = stable_set_membership(half, params, ScalingPair(1, 0), m_level)
        rep = evolve(half, 1.0, dt, params, MonitorConfig(sample_every=20, m_level=m_level))
        worst = min(
            min(k + 1e-6 * q for k, q in zip(rep.K_series[label], rep.quadratic_series[label]))
            for label in rep.pair_labels
        )
        bound = kinetic_bound_check(rep, m_level, 4)
        return [
            _le("standing_wave_modulus", sw.modulus_deviation, 1e-3, f"transplant polished by {gap:.2e}"),
            CheckOutcome("stable_set_start", start == Membership.A_PLUS, 1.0 if start == Membership.A_PLUS else 0.0, 1.0),
            _ge("stable_set_K_min", worst, 0.0),
            _le("kinetic_bound", bound.sup_kinetic, bound.bound * 1.01),
        ]

    def mass_critical() -> List[CheckOutcome]:
        gn = minimize_J(RadialGrid(4, 16.0, 2000 if quick else 4000), critical, PetviashviliOptions(tol=1e-10, max_iter=2000))
        data = gaussian_data(box, (1.0, 1.0), width=2.0)
        margin = mass_critical_margin(data, critical, gn.C_best)
        data = data.scaled(math.sqrt(0.5 * margin.threshold / margin.total_mass))
        rep = evolve(data, 1.0, dt, critical, MonitorConfig(sample_every=20, gn_constant=gn.C_best))
        zero = mass_critical_margin(data.scaled(0.0), critical, gn.C_best)
        return [
            _le("mass_critical_ceiling", max(rep.kinetic_series), rep.threshold_margin.ceiling * 1.01),
            _le("mass_critical_zero_data", abs(zero.factor - 1.0) + abs(zero.ceiling), 0.0),
        ]

    tasks = {"conservation": conservation, "standing_and_stable": standing_and_stable, "mass_critical": mass_critical}
    return _run(tasks, "dynamics_suite", max_workers)
