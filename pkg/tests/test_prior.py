"""
Speed prior: enumeration, quantum counting, Deutsch-Jozsa sampling,
conditionals and the rule of succession.

SK-2 programs of length <= 3 hold at most one opcode, so every S(x) with
l(x) <= 3 is 0 there. The echo machine needs n steps to copy an n-bit program,
so only p = x counts, from phase i0 = n + ceil(log2 n) on:
S(x) = 2^-n (2^-(i0 - 1) - 2^-n^2).
"""
from fractions import Fraction

import pytest

import prior
import qalg
import qsim
from errors import ResourceLimitError, UndefinedConditionalError
from machine import programs_of_length
from prior import PriorMethod


def echo_value(n):
    first = n + (n - 1).bit_length()
    return 2.0 ** -n * (2.0 ** -(first - 1) - 2.0 ** -(n * n))


SHORT_STRINGS = [x for n in (1, 2, 3) for x in programs_of_length(n)]


# =============================================================================
# Classical enumeration
# =============================================================================

@pytest.mark.parametrize("x", ["0", "1", "01", "101", "111"])
def test_short_strings_have_no_mass_on_sk2(x, sk2):
    est = prior.speed_prior_classical(x, sk2)
    assert est.value == 0.0
    assert len(est.per_phase_counts) == len(x) ** 2


def test_looping_program_reaches_four_ones(sk2):
    # only 0111 prints 1111; its fourth bit lands at step 7, so phases 7..16 count it
    est = prior.speed_prior_classical("1111", sk2)
    assert est.per_phase_counts == [0] * 6 + [1] * 10
    assert est.value == float(Fraction(1023, 1 << 20))


def test_two_programs_reach_four_zeros(sk2):
    # 0011 and 1011 (REPEAT of nothing reads 0)
    est = prior.speed_prior_classical("0000", sk2)
    assert est.per_phase_counts == [0] * 6 + [2] * 10
    assert est.value == float(Fraction(1023, 1 << 19))


@pytest.mark.parametrize("x", ["0", "10", "011", "1101"])
def test_echo_machine_closed_form(x, echo):
    est = prior.speed_prior_classical(x, echo)
    assert est.value == pytest.approx(echo_value(len(x)))
    assert est.machine_id == "echo"


def test_echo_counts_only_once_the_copy_fits(echo):
    assert prior.speed_prior_classical("1", echo).value == 0.25
    two = prior.speed_prior_classical("10", echo)
    assert two.per_phase_counts == [0, 0, 1, 1]
    assert two.value == float(Fraction(3, 64))
    assert prior.speed_prior_classical("011", echo).value == float(Fraction(31, 4096))


def test_empty_string(sk2):
    assert prior.speed_prior_classical("", sk2).value == 1.0
    strict = prior.speed_prior_classical("", sk2, strict=True)
    assert strict.value == 0.0
    assert "strict_empty_string" in strict.flags


def test_enumeration_cap(sk2):
    with pytest.raises(ResourceLimitError):
        prior.speed_prior_classical("0" * 5, sk2, enumeration_cap=4)


def test_phase_count_table_matches_per_string_enumeration(sk2):
    table = prior.phase_count_table(sk2, 4)
    assert len(table) == 16
    for x in ("0000", "1111", "0101", "1010"):
        assert table[x] == prior.speed_prior_classical(x, sk2).per_phase_counts


def test_phase_count_table_with_context(echo):
    table = prior.phase_count_table(echo, 2, context="1")
    for x, counts in table.items():
        assert counts == prior.quasi_conditional_classical(x, "1", echo).per_phase_counts


@pytest.mark.parametrize("machine_name", ["sk2", "echo"])
def test_phase_count_table_on_every_short_pair(machine_name, request):
    m = request.getfixturevalue(machine_name)
    for ly in range(3):
        for y in programs_of_length(ly):
            for lx in (1, 2):
                table = prior.phase_count_table(m, lx, context=y)
                for x in programs_of_length(lx):
                    assert table[x] == prior.quasi_conditional_classical(x, y, m).per_phase_counts


def test_quasi_with_empty_context_is_the_prior(echo):
    for x in ("1", "01", "110"):
        quasi = prior.quasi_conditional_classical(x, "", echo)
        assert quasi.value == prior.speed_prior_classical(x, echo).value


def test_phase_oracle_marks_emitting_programs(echo):
    oracle = prior.phase_oracle("10", 3, echo)
    assert oracle.solutions() == ["10"]


# =============================================================================
# Quantum counting
# =============================================================================

def test_counting_on_zero_mass_is_exact(sk2, rng):
    est = prior.speed_prior_qcount("01", sk2, m=3, epsilon=0.2, rng=rng)
    assert est.value == pytest.approx(0.0, abs=1e-12)
    assert est.method == PriorMethod.QCOUNT
    assert est.confidence == pytest.approx(0.8)


def test_counting_estimate_within_bound(echo):
    exact = echo_value(2)
    hits = 0
    for seed in range(10):
        est = prior.speed_prior_qcount("10", echo, m=4, epsilon=0.2, rng=qsim.derive_rng(seed))
        hits += abs(est.value - exact) <= est.error_bound
    assert hits >= 8


@pytest.mark.parametrize("machine_name", ["sk2", "echo"])
@pytest.mark.parametrize("x", SHORT_STRINGS)
def test_counting_tracks_enumeration_on_short_strings(x, machine_name, request):
    reference = request.getfixturevalue(machine_name)
    exact = prior.speed_prior_classical(x, reference).value
    hits = 0
    for seed in range(100):
        est = prior.speed_prior_qcount(x, reference, m=4, epsilon=0.05, rng=qsim.derive_rng(seed))
        hits += abs(est.value - exact) <= est.error_bound
    assert hits >= 90


def test_counting_checks_qubit_cap(echo, rng):
    qsim.set_limits(max_qubits=8)
    with pytest.raises(ResourceLimitError):
        prior.speed_prior_qcount("10", echo, m=4, epsilon=0.2, rng=rng)


# =============================================================================
# Deutsch-Jozsa sampling
# =============================================================================

def test_sampling_on_zero_mass_is_exact(sk2, rng):
    est = prior.speed_prior_dj("101", sk2, epsilon=0.1, k=3, rng=rng)
    classical = prior.speed_prior_classical("101", sk2)
    assert abs(est.value - classical.value) <= est.error_bound
    assert est.value == 0.0
    assert est.trials == 9 * qalg.trials_for(0.1, 3)


def test_sampling_estimate_within_bound(echo):
    exact = echo_value(2)
    hits = 0
    for seed in range(10):
        est = prior.speed_prior_dj("01", echo, epsilon=0.05, k=3, rng=qsim.derive_rng(seed))
        assert est.error_bound == pytest.approx((1 - 2 ** -4) * 0.05)
        hits += abs(est.value - exact) <= est.error_bound
    assert hits >= 9


@pytest.mark.parametrize("machine_name", ["sk2", "echo"])
@pytest.mark.parametrize("x", SHORT_STRINGS)
def test_sampling_tracks_enumeration_on_short_strings(x, machine_name, request):
    reference = request.getfixturevalue(machine_name)
    exact = prior.speed_prior_classical(x, reference).value
    hits = 0
    for seed in range(100):
        est = prior.speed_prior_dj(x, reference, epsilon=0.05, k=3, rng=qsim.derive_rng(seed))
        hits += abs(est.value - exact) <= est.error_bound
    assert hits >= 95


def test_strict_sampling_drops_the_length_factor(echo, rng):
    est = prior.speed_prior_dj("01", echo, epsilon=0.05, k=3, rng=rng, strict=True)
    assert "strict_fraction_weight" in est.flags
    assert est.value < echo_value(2)


def test_relative_accuracy_cost():
    assert prior.trials_for_relative_accuracy(2, 3) == 4 * 48
    assert prior.trials_for_relative_accuracy(3, 3) == 9 * 192


# =============================================================================
# Conditionals
# =============================================================================

def test_conditional_on_empty_context_is_the_prior(echo):
    cond = prior.conditional("01", "", machine=echo)
    assert cond.value == pytest.approx(echo_value(2))


def test_conditional_ratio(echo):
    cond = prior.conditional("0", "1", machine=echo)
    assert cond.value == pytest.approx((3 / 64) / (1 / 4))
    assert cond.error_bound == 0.0


def test_conditional_with_zero_denominator(sk2):
    with pytest.raises(UndefinedConditionalError):
        prior.conditional("1", "1", machine=sk2)


@pytest.mark.parametrize("x", ["", "0", "1", "01", "11"])
def test_conditional_times_prior_is_the_joint(x, echo):
    for ly in (1, 2):
        for y in programs_of_length(ly):
            cond = prior.conditional(y, x, machine=echo)
            joint = prior.speed_prior_classical(x + y, echo).value
            assert cond.value * cond.denominator.value == pytest.approx(joint, rel=1e-12)


def test_quasi_conditional_needs_time_for_the_context(echo):
    # p1 must print 11 in two steps, but phase 1 gives a 2-bit program no steps at all
    assert prior.quasi_conditional_classical("1", "1", echo).value == 0.0
    # 110 + 1 prints 1 101 in four steps: phases 6..9 of 9
    quasi = prior.quasi_conditional_classical("101", "1", echo)
    assert quasi.per_phase_counts == [0] * 5 + [1] * 4
    assert quasi.value == float(Fraction(15, 4096))


def test_quasi_conditional_sampled_matches_classical(echo):
    exact = prior.quasi_conditional_classical("101", "1", echo).value
    est = prior.quasi_conditional("101", "1", epsilon=0.05, k=3, rng=qsim.derive_rng(5), machine=echo)
    assert est.y == "1"
    assert abs(est.value - exact) <= est.error_bound


def test_sampled_quasi_conditional_on_every_short_pair(echo):
    for lx in (1, 2):
        for ly in range(3):
            for x in programs_of_length(lx):
                for y in programs_of_length(ly):
                    exact = prior.quasi_conditional_classical(x, y, echo).value
                    est = prior.quasi_conditional(x, y, epsilon=0.05, k=3, rng=qsim.derive_rng(lx + 7 * ly),
                                                  machine=echo)
                    assert abs(est.value - exact) <= est.error_bound


def test_quasi_conditional_empty_string(echo):
    assert prior.quasi_conditional("", "1", machine=echo).value == 1.0
    assert prior.quasi_conditional("", "1", machine=echo, strict=True).value == 0.0


def test_gap_table_rows(echo):
    rows = prior.quasi_gap_table(1, echo)
    assert len(rows) == 2 + 2 * 2
    for row in rows:
        if row["y"] == "":
            assert row["gap"] == pytest.approx(0.0)


def test_estimate_dispatch(echo, rng):
    assert prior.estimate("1", PriorMethod.CLASSICAL, machine=echo).value == pytest.approx(echo_value(1))
    est = prior.estimate("1", PriorMethod.DJ_SAMPLING, machine=echo, rng=rng, epsilon=0.1)
    assert est.method == PriorMethod.DJ_SAMPLING


# =============================================================================
# Rule of succession
# =============================================================================

def test_laplace_rule():
    assert prior.laplace_rule(0, 0) == Fraction(1, 2)
    assert prior.laplace_predict("") == Fraction(1, 2)
    assert prior.laplace_predict("111") == Fraction(4, 5)
    assert prior.laplace_predict("0110") == Fraction(1, 2)


def test_laplace_measure():
    assert prior.laplace_measure("") == 1
    assert prior.laplace_measure("1") == Fraction(1, 2)
    assert prior.laplace_measure("110") == Fraction(2 * 1, 24)
    # the predictor is the ratio of measures
    assert prior.laplace_measure("1101") / prior.laplace_measure("110") == prior.laplace_predict("110")


def test_laplace_after_a_trillion_zeros():
    assert prior.laplace_rule(0, 10 ** 12) == Fraction(1, 10 ** 12 + 2)
    assert prior.laplace_rule(10 ** 12, 10 ** 12) == Fraction(10 ** 12 + 1, 10 ** 12 + 2)
