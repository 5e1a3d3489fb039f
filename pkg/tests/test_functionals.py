import math

import numpy as np
import pytest

from src.errors import GridMismatchError, UndefinedQuotientError
from src.functionals import (FunctionalCache, el_residual, functional_report, h_monotonicity_check,
                             lie_derivative_check, scaling_flow)
from src.grid import RadialField, RadialGrid
from src.params import DEFAULT_PAIRS, ProblemParams, ScalingPair, validate


def gaussian(grid, amp=1.0, width=1.0):
    return RadialField(grid, amp * np.exp(-grid.r ** 2 / (2 * width ** 2)))


@pytest.fixture(scope="module")
def grid4():
    return RadialGrid(4, 12.0, 4000)


def scalar(N, p, mu=1.0):
    return validate(ProblemParams.from_matrix(N, p, [[mu]]), allow_out_of_range=True)


def test_gaussian_kinetic_and_potential(grid4):
    mu = 3.0
    c = FunctionalCache(gaussian(grid4), scalar(4, 2.0, mu))
    assert c.kinetic == pytest.approx(6 * math.pi ** 2, rel=1e-4)
    assert c.potential == pytest.approx(mu / 4 * (math.pi / 2) ** 2, rel=1e-6)
    assert c.l2 == pytest.approx(math.pi ** 2, rel=1e-6)


def test_action_energy_relations(grid4):
    u = RadialField(grid4, np.stack([np.exp(-grid4.r ** 2 / 2), 0.5 * np.exp(-grid4.r ** 2)]))
    params = validate(ProblemParams.from_matrix(4, 3.0, [[1.0, 0.7], [0.7, 2.0]]))
    c = FunctionalCache(u, params)
    assert c.energy == pytest.approx(0.5 * c.kinetic - c.potential, rel=1e-14)
    assert c.action == pytest.approx(c.energy + 0.5 * c.l2, rel=1e-14)
    assert c.component_actions().sum() == pytest.approx(c.action, rel=1e-12)


def test_constraint_is_linear_in_the_pair(grid4):
    c = FunctionalCache(gaussian(grid4, 1.3), scalar(4, 3.0))
    combined = c.constraint_K(ScalingPair(1, 0)) + c.constraint_K(ScalingPair(0, 1))
    assert c.constraint_K(ScalingPair(1, 1)) == pytest.approx(combined, rel=1e-12)
    two_three = 2 * c.constraint_K(ScalingPair(1, 0)) + 3 * c.constraint_K(ScalingPair(0, 1))
    assert c.constraint_K(ScalingPair(2, 3)) == pytest.approx(two_three, rel=1e-12)


def test_scaling_flow_norm_factors():
    g = RadialGrid(5, 10.0, 2000)
    u = gaussian(g)
    pair, lam = ScalingPair(2, 3), 0.1
    c0 = FunctionalCache(u, scalar(5, 2.0))
    c1 = FunctionalCache(scaling_flow(u, pair, lam), scalar(5, 2.0))
    assert c1.l2 == pytest.approx(math.exp((2 * 2 + 5 * 3) * lam) * c0.l2, rel=1e-12)
    assert c1.kinetic == pytest.approx(math.exp((2 * 2 + 1 * 3) * lam) * c0.kinetic, rel=1e-12)


@pytest.mark.parametrize("pair", DEFAULT_PAIRS, ids=lambda p: p.label())
def test_lie_derivative_matches_K(pair):
    g = RadialGrid(5, 10.0, 1000)
    rep = lie_derivative_check(gaussian(g, 1.2, 0.9), scalar(5, 2.0), pair)
    assert rep.observed_order is not None and rep.observed_order >= 1.9
    assert rep.errors[-1] < 1e-4 * max(1.0, abs(rep.K))


def test_h_is_nondecreasing_along_the_flow():
    g = RadialGrid(5, 10.0, 1000)
    rep = h_monotonicity_check(gaussian(g, 1.5), scalar(5, 2.0), ScalingPair(1, 1))
    assert rep.nondecreasing and rep.nonnegative


def test_gn_quotient_undefined_for_zero_field(grid4):
    with pytest.raises(UndefinedQuotientError):
        FunctionalCache(gaussian(grid4, 0.0), scalar(4, 2.0)).gn_quotient()


def test_dimension_mismatch(grid4):
    with pytest.raises(GridMismatchError):
        FunctionalCache(gaussian(grid4), scalar(5, 2.0))


def test_functional_report_row(grid4):
    rep = functional_report(gaussian(grid4), scalar(4, 2.0), ScalingPair(1, 0))
    assert len(rep.csv_header()) == len(rep.csv_row())
    assert rep.to_flat_dict()["K_alpha_beta"] == rep.constraint.K
    assert rep.J is not None and rep.J > 0


def test_el_residual_separates_solution_from_perturbation(w52):
    w, _ = w52
    params = scalar(5, 2.0)
    tol = 1e-10
    assert el_residual(w, params).weighted_sup <= 100 * tol
    bump = np.exp(-(w.grid.r - 2.0) ** 2)
    perturbed = RadialField(w.grid, w.values + 0.01 * bump)
    assert el_residual(perturbed, params).weighted_sup >= 10 * tol


def random_radial(grid, m, seed):
    """m components, each a seeded sum of three signed Gaussians."""
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(m):
        amps, widths = rng.uniform(-1.0, 1.0, 3), rng.uniform(0.6, 2.0, 3)
        rows.append(sum(a * np.exp(-grid.r ** 2 / (2 * w ** 2)) for a, w in zip(amps, widths)))
    return RadialField(grid, np.stack(rows))


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("pair", DEFAULT_PAIRS, ids=lambda p: p.label())
def test_action_splits_into_H_and_K(grid4, seed, pair):
    params = validate(ProblemParams.from_matrix(4, 3.0, [[1.0, 0.7], [0.7, 2.0]]))
    c = FunctionalCache(random_radial(grid4, 2, seed), params)
    scale = c.kinetic + c.l2 + c.interaction
    split = c.functional_H(pair) + c.constraint_K(pair) / (2 * pair.alpha + 4 * pair.beta_s)
    assert split == pytest.approx(c.action, rel=1e-12, abs=1e-12 * scale)


@pytest.mark.parametrize("nu", [0.5, 3.0, 7.0])
def test_functionals_are_homogeneous(grid4, nu):
    params = validate(ProblemParams.from_matrix(4, 2.5, [[1.0, 0.4], [0.4, 1.5]]))
    u = random_radial(grid4, 2, 5)
    c0, c1 = FunctionalCache(u, params), FunctionalCache(u.scaled(nu), params)
    assert c1.potential == pytest.approx(nu ** 5 * c0.potential, rel=1e-13)
    assert c1.kinetic == pytest.approx(nu ** 2 * c0.kinetic, rel=1e-13)
    assert c1.l2 == pytest.approx(nu ** 2 * c0.l2, rel=1e-13)


def test_potential_is_invariant_under_component_relabelling(grid4):
    a = np.array([[1.0, 0.3, 0.5], [0.3, 2.0, 0.4], [0.5, 0.4, 1.5]])
    perm = [2, 0, 1]
    u = random_radial(grid4, 3, 9)
    c = FunctionalCache(u, validate(ProblemParams.from_matrix(4, 3.0, a)))
    swapped = FunctionalCache(RadialField(grid4, u.values[perm]),
                              validate(ProblemParams.from_matrix(4, 3.0, a[np.ix_(perm, perm)])))
    assert swapped.potential == pytest.approx(c.potential, rel=1e-13)
    assert swapped.action == pytest.approx(c.action, rel=1e-13)
