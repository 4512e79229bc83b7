import numpy as np
import pytest

import prior
import qsim
from errors import ArgumentError
from measures import expected_value, is_probability_measure, marginal_measure


def test_expected_value_of_two_dice():
    pmf = {}
    for a in range(1, 7):
        for b in range(1, 7):
            pmf[a + b] = pmf.get(a + b, 0.0) + 1 / 36
    assert expected_value(pmf) == pytest.approx(7.0)
    assert expected_value(pmf, lambda s: s * s) == pytest.approx(329 / 6)


def test_expected_value_needs_a_distribution():
    with pytest.raises(ArgumentError):
        expected_value({0: 0.5, 1: 0.4})


def test_laplace_is_a_measure():
    assert is_probability_measure(lambda x: float(prior.laplace_measure(x)), 6)


def test_uniform_is_a_measure():
    assert is_probability_measure(lambda x: 2.0 ** -len(x), 5)


def test_marginal_of_a_state():
    state = qsim.from_amplitudes(np.array([0.5, 0.5j, -0.5, 0.5]))
    mu = marginal_measure(state)
    assert is_probability_measure(mu, 2)
    assert mu("0") == pytest.approx(0.5)
    assert mu("10") == pytest.approx(0.25)
    assert mu("101") == 0.0


def test_marginal_of_bell_state():
    state = qsim.apply_gates(qsim.new_state(2), [qsim.h(0), qsim.cnot(0, 1)])
    mu = marginal_measure(state)
    assert mu("01") == pytest.approx(0.0)
    assert mu("11") == pytest.approx(0.5)


def test_non_measures_are_rejected():
    assert not is_probability_measure(lambda x: 0.5, 2)
    assert not is_probability_measure(lambda x: 1.0 if x == "" else 0.6, 2)


def test_speed_prior_is_only_a_semimeasure(echo):
    # S(0) + S(1) falls short of S(empty) = 1
    s0 = prior.speed_prior_classical("0", echo).value
    s1 = prior.speed_prior_classical("1", echo).value
    assert s0 + s1 < 1.0
