import math

import numpy as np
import pytest

from src.errors import BlowUpCeilingError, ConfigError, GridError, ResolutionLossError, WrongRegimeError
from src.dynamics import (MarginReport, Membership, MonitorConfig, SimState, SplitStepPropagator, TrajectoryReport,
                          energy_order_study, evolve, gaussian_data, kinetic_bound_check, linear_halfstep,
                          mass_critical_margin, membership_consistency, nonlinear_step, stable_set_membership,
                          standing_wave_data, standing_wave_deviation, strang_step, time_reversal_defect,
                          transplant_radial)
from src.grid import ComplexField, PeriodicGrid, RadialField, RadialGrid
from src.groundstate import solve_scalar_w
from src.params import ProblemParams, ScalingPair, validate
from src.petviashvili import Normalization, PetviashviliOptions


def test_mass_is_conserved(box4, critical_pair):
    rep = evolve(gaussian_data(box4, (0.3, 0.2), width=2.0), 0.5, 5e-3, critical_pair, MonitorConfig(sample_every=20))
    assert len(rep) == 6
    assert np.max(rep.mass_drift()) <= 1e-10
    assert rep.times[-1] == pytest.approx(0.5)


def test_energy_error_is_second_order(box4, critical_pair):
    study = energy_order_study(gaussian_data(box4, (0.3, 0.2), width=2.0), 1.0, (4e-3, 2e-3, 1e-3), critical_pair)
    assert study.observed_order >= 1.9
    assert study.energy_drifts[-1] <= 1e-6
    assert max(study.mass_drifts) <= 1e-10


def test_time_reversal_by_conjugation(box4, critical_pair):
    assert time_reversal_defect(gaussian_data(box4, (0.5, 0.4), width=2.0), 0.2, 1e-2, critical_pair) <= 1e-10


def test_sub_flows_leave_the_clock_alone(box4, critical_pair):
    state = SimState(gaussian_data(box4, (0.3, 0.2), width=2.0), time=1.0, step_count=7)
    half = linear_halfstep(state, 0.05)
    assert (half.time, half.step_count) == (1.0, 7)
    stepped = strang_step(state, 0.1, critical_pair)
    assert stepped.time == pytest.approx(1.1) and stepped.step_count == 8


def test_linear_halfstep_on_a_single_mode():
    box = PeriodicGrid(2, 16, math.pi)
    mode = np.exp(1j * (2 * box.x[:, None] + box.x[None, :]))[None]
    half_tau = 0.03
    out = linear_halfstep(SimState(ComplexField(box, mode)), half_tau)
    # free flow of i u_t + Δ²u = 0 is e^{+i|k|⁴t}; |k|⁴ = 25 here
    np.testing.assert_allclose(out.values, np.exp(25j * half_tau) * mode, atol=1e-12)


def test_nonlinear_step_on_constant_amplitudes(box4, critical_pair):
    values = np.stack([np.full(box4.shape, 0.3 * np.exp(0.4j)), np.full(box4.shape, 0.2 + 0j)])
    tau = 0.05
    out = nonlinear_step(SimState(ComplexField(box4, values)), tau, critical_pair)
    theta = np.array([0.09 + 0.5 * 0.04, 0.5 * 0.09 + 0.04])
    expected = np.exp(-1j * tau * theta).reshape(2, 1, 1, 1, 1) * values
    np.testing.assert_allclose(out.values, expected, atol=1e-13)
    np.testing.assert_allclose(np.abs(out.values), np.abs(values), atol=1e-15)


def test_fused_steps_match_single_steps(box4, critical_pair):
    prop = SplitStepPropagator(box4, critical_pair, 1e-2)
    u0 = gaussian_data(box4, (0.5, 0.4), width=2.0).values
    stepwise = u0
    for _ in range(5):
        stepwise = prop.step(stepwise)
    np.testing.assert_allclose(prop.advance(u0, 5), stepwise, atol=1e-12)
    np.testing.assert_allclose(strang_step(SimState(gaussian_data(box4, (0.5, 0.4), width=2.0)), 1e-2,
                                           critical_pair).values, prop.step(u0), atol=1e-13)


def test_evolve_resumes_from_state_time(box4, critical_pair):
    start = SimState(gaussian_data(box4, (0.3, 0.2), width=2.0), time=2.0, step_count=100)
    rep = evolve(start, 0.1, 1e-2, critical_pair, MonitorConfig(sample_every=5))
    assert rep.times == pytest.approx([2.0, 2.05, 2.1])
    assert rep.final.step_count == 110


def test_step_must_divide_horizon(box4, critical_pair):
    with pytest.raises(ConfigError):
        evolve(gaussian_data(box4, (0.3, 0.2)), 0.1, 0.03, critical_pair)
    with pytest.raises(ConfigError):
        MonitorConfig(sample_every=0)


def test_kinetic_ceiling_aborts_with_partial_report(box4, critical_pair):
    with pytest.raises(BlowUpCeilingError) as err:
        evolve(gaussian_data(box4, (0.3, 0.2), width=2.0), 0.1, 1e-2, critical_pair,
               MonitorConfig(sample_every=2, kinetic_ceiling=1e-12))
    assert err.value.exit_code == 4
    assert err.value.last_reliable_time == 0.0
    assert len(err.value.report) == 2


def test_resolution_loss_aborts(box4, critical_pair):
    with pytest.raises(ResolutionLossError) as err:
        evolve(gaussian_data(box4, (0.3, 0.2), width=2.0), 0.1, 1e-2, critical_pair,
               MonitorConfig(sample_every=5, tail_limit=1e-300))
    assert err.value.report.final is not None


def test_mass_critical_margin(box4, critical_pair):
    data = gaussian_data(box4, (1.0, 1.0), width=2.0)
    C = 0.01
    margin = mass_critical_margin(data, critical_pair, C)
    assert margin.threshold == pytest.approx(1 / (2 * C))
    assert margin.factor == pytest.approx(1 - 2 * C * margin.total_mass)
    zero = mass_critical_margin(data.scaled(0.0), critical_pair, C)
    assert zero.factor == 1.0 and zero.ceiling == 0.0 and zero.subthreshold
    big = mass_critical_margin(data.scaled(10.0), critical_pair, C)
    assert math.isinf(big.ceiling) and not big.subthreshold


def test_mass_at_threshold_counts_as_subthreshold():
    at = MarginReport(total_mass=25.0, threshold=25.0, factor=0.0, energy=1.0, ceiling=math.inf)
    assert at.subthreshold
    assert not MarginReport(25.5, 25.0, -0.01, 1.0, math.inf).subthreshold


def test_nonpositive_m_level_is_a_config_error(box4, critical_pair):
    small = gaussian_data(box4, (0.1, 0.1), width=2.0)
    with pytest.raises(ConfigError) as err:
        stable_set_membership(small, critical_pair, ScalingPair(1, 0), 0.0)
    assert err.value.exit_code == 2
    with pytest.raises(ConfigError):
        MonitorConfig(m_level=-1.0)
    with pytest.raises(ConfigError):
        strang_step(SimState(small), 0.0, critical_pair)


def test_mass_critical_margin_needs_critical_exponent(box4):
    params = validate(ProblemParams.from_matrix(4, 3.0, [[1.0]]))
    with pytest.raises(WrongRegimeError):
        mass_critical_margin(gaussian_data(box4, (1.0,)), params, 1.0)


def test_stable_set_membership(box4, critical_pair):
    small = gaussian_data(box4, (0.1, 0.1), width=2.0)
    assert stable_set_membership(small, critical_pair, ScalingPair(1, 0), 1e6) == Membership.A_PLUS
    assert stable_set_membership(small, critical_pair, ScalingPair(1, 0), 1e-9) == Membership.ABOVE_M
    consistent, labels = membership_consistency(small, critical_pair, [ScalingPair(1, 0), ScalingPair(1, 1)], 1e6)
    assert consistent and set(labels) == {"1:0", "1:1"}


def test_kinetic_bound_check():
    rep = TrajectoryReport(pair_labels=[], kinetic_series=[1.0, 2.5, 2.0])
    bound = kinetic_bound_check(rep, m_level=1.0, N=4)
    assert bound.bound == 3.0 and bound.passed and bound.sup_kinetic == 2.5


def test_transplant_radial_profile():
    box = PeriodicGrid(2, 32, 8.0)
    g = RadialGrid(2, 12.0, 2400)
    field = transplant_radial(RadialField(g, np.exp(-g.r ** 2 / 2)), box)
    np.testing.assert_allclose(field.values[0].real, np.exp(-box.radius ** 2 / 2), atol=1e-8)
    with pytest.raises(GridError):
        transplant_radial(RadialField(g, np.exp(-g.r ** 2 / 50)), box)


def test_membership_is_sampled(box4, critical_pair):
    rep = evolve(gaussian_data(box4, (0.1, 0.1), width=2.0), 0.1, 1e-2, critical_pair,
                 MonitorConfig(sample_every=5, m_level=1e6))
    assert rep.membership_series == ["A_plus"] * 3
    assert [row["membership"] for row in rep.rows()] == ["A_plus"] * 3
    assert rep.columns(2)[:3] == ["time", "mass_1", "mass_2"]


@pytest.fixture(scope="module")
def radial_w43():
    w, _ = solve_scalar_w(RadialGrid(4, 16.0, 1000), 4, 3.0,
                          PetviashviliOptions(tol=1e-10, max_iter=2000, normalization=Normalization.SHARED))
    return w


def test_standing_wave_data_polishes_the_transplant(radial_w43):
    box = PeriodicGrid(4, 16, 6.0)
    params = validate(ProblemParams.from_matrix(4, 3.0, [[1.0]]))
    psi, gap = standing_wave_data(radial_w43, box, params, PetviashviliOptions(tol=1e-10, max_iter=3000))
    assert psi.grid == box and psi.m == 1
    assert 0.0 <= gap < 1.0
    centre = (0,) + (box.n // 2,) * 4
    assert np.unravel_index(np.argmax(np.abs(psi.values)), psi.values.shape) == centre
    with pytest.raises(GridError):
        standing_wave_data(radial_w43, box, params, decay_tol=1e-14)


@pytest.mark.slow
def test_transplanted_ground_state_is_a_standing_wave(radial_w43):
    box = PeriodicGrid(4, 16, 6.0)
    params = validate(ProblemParams.from_matrix(4, 3.0, [[1.0]]))
    psi, _ = standing_wave_data(radial_w43, box, params, PetviashviliOptions(tol=1e-11, max_iter=3000))
    rep = standing_wave_deviation(psi, 2 * math.pi, math.pi / 1000, params)
    assert rep.modulus_deviation <= 1e-3
    assert rep.phase_defect <= 1e-3
