import math

import numpy as np
import pytest

from src.errors import ConfigError, CouplingError, ExponentRangeError, InvalidDimensionError, InvalidPairError
from src.params import (ProblemParams, ReducedCoupling, ScalingPair, critical_exponents, expand_coupling,
                        gn_exponents, params_from_mapping, validate)


def test_critical_exponents():
    assert critical_exponents(5) == pytest.approx((1.8, 5.0))
    p_low, p_high = critical_exponents(4)
    assert p_low == 2.0 and math.isinf(p_high)
    with pytest.raises(InvalidDimensionError):
        critical_exponents(3)


def test_gn_exponents_sum():
    ek, em = gn_exponents(5, 2.0)
    assert ek == pytest.approx(1.25)
    assert em == pytest.approx(0.75)


def test_validate_accepts_interior_exponent():
    params = validate(ProblemParams.from_reduced(5, 2.0, ReducedCoupling((1.0, 2.0), 0.5)))
    assert params.m == 2
    np.testing.assert_array_equal(params.coupling, [[1.0, 0.5], [0.5, 2.0]])
    assert not params.mass_critical


@pytest.mark.parametrize("p", [1.8, 5.0, 7.0])
def test_validate_rejects_exponent_outside_range(p):
    with pytest.raises(ExponentRangeError):
        validate(ProblemParams.from_matrix(5, p, [[1.0]]))


def test_out_of_range_needs_flag_and_is_not_inherited():
    params = validate(ProblemParams.from_matrix(4, 2.0, [[1.0]]), allow_out_of_range=True)
    assert params.mass_critical
    with pytest.raises(ExponentRangeError):
        validate(params)


def test_dimension_below_four_rejected():
    with pytest.raises(InvalidDimensionError):
        validate(ProblemParams.from_matrix(3, 2.0, [[1.0]]))


def test_coupling_invariants_are_named():
    with pytest.raises(CouplingError) as err:
        validate(ProblemParams.from_matrix(5, 2.0, [[1.0, 0.5], [0.4, 1.0]]))
    assert err.value.invariant == "coupling-symmetry"
    with pytest.raises(CouplingError) as err:
        validate(ProblemParams.from_matrix(5, 2.0, [[-1.0, 0.5], [0.5, 1.0]]))
    assert err.value.invariant == "coupling-positivity"


def test_decoupled_beta_requires_flags():
    with pytest.raises(CouplingError):
        expand_coupling(ReducedCoupling((1.0, 1.0), 0.0), 2)
    matrix = expand_coupling(ReducedCoupling((1.0, 1.0), 0.0), 2, allow_decoupled=True)
    with pytest.raises(CouplingError):
        validate(ProblemParams.from_matrix(5, 2.0, matrix))
    assert validate(ProblemParams.from_matrix(5, 2.0, matrix), allow_out_of_range=True).m == 2


def test_scaling_pair_parse_and_label():
    pair = ScalingPair.parse("2:3")
    assert (pair.alpha, pair.beta_s) == (2.0, 3.0)
    assert pair.label() == "2:3"
    with pytest.raises(InvalidPairError):
        ScalingPair.parse("two")
    with pytest.raises(InvalidPairError):
        ScalingPair(0, 0)
    with pytest.raises(InvalidPairError):
        ScalingPair(-1, 1)


def test_params_from_mapping_matrix_and_reduced():
    a = params_from_mapping({"dimension": 5, "components": 2, "exponent": 2, "coupling_matrix": [1, 0.5, 0.5, 2]})
    b = params_from_mapping({"dimension": 5, "components": 2, "exponent": 2, "mu": [1, 2], "beta": 0.5})
    np.testing.assert_array_equal(a.coupling, b.coupling)
    assert params_from_mapping({"dimension": 5, "components": 1, "exponent": 2, "mu": 3}).coupling[0, 0] == 3.0


def test_params_from_mapping_rejects_ambiguous_coupling():
    with pytest.raises(ConfigError):
        params_from_mapping({"dimension": 5, "components": 2, "exponent": 2,
                             "coupling_matrix": [1, 0.5, 0.5, 2], "mu": [1, 2], "beta": 0.5})
    with pytest.raises(ConfigError):
        params_from_mapping({"dimension": 5, "exponent": 2, "mu": [1]})
    with pytest.raises(CouplingError):
        params_from_mapping({"dimension": 5, "components": 2, "exponent": 2, "coupling_matrix": [1, 0.5, 0.5]})
