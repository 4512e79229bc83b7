from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence

import numpy as np
from tqdm import tqdm

import qalg
import qsim
from errors import ArgumentError, ResourceLimitError, UndefinedConditionalError
from machine import SK2, Machine, check_program, first_phase_within, outputs_within, programs_of_length
from qsim import OracleSpec

log = logging.getLogger("prior")

DEFAULT_EPSILON = 0.05
DEFAULT_K = 3.0
DEFAULT_PRECISION = 6
DEFAULT_ENUMERATION_CAP = 12


class PriorMethod(Enum):
    CLASSICAL = "CLASSICAL"
    QCOUNT = "QCOUNT"
    DJ_SAMPLING = "DJ_SAMPLING"


@dataclass
class PriorEstimate:
    x: str
    value: float
    per_phase_counts: List[float]
    method: PriorMethod
    error_bound: float = 0.0
    confidence: float = 1.0
    trials: int = 0
    y: Optional[str] = None
    machine_id: str = SK2.machine_id
    propagated_error_bound: Optional[float] = None
    flags: List[str] = field(default_factory=list)


@dataclass
class ConditionalEstimate:
    y: str
    x: str
    numerator: PriorEstimate
    denominator: PriorEstimate
    value: float
    error_bound: float


def num_phases(n: int) -> int:
    return n * n


def exact_value_from_counts(counts: Sequence[int], n: int) -> Fraction:
    return sum((Fraction(c, 1 << (i + n)) for i, c in enumerate(counts, 1) if c), Fraction(0))


def value_from_counts(counts: Sequence[float], n: int) -> float:
    """sum_i 2^-(i+n) num_i, accumulated in ascending phase order."""
    if all(isinstance(c, int) for c in counts):
        return float(exact_value_from_counts(counts, n))
    total = 0.0
    for i, c in enumerate(counts, 1):
        total += math.ldexp(float(c), -(i + n))
    return total


def _empty_string_estimate(method: PriorMethod, machine: Machine, strict: bool,
                           y: Optional[str] = None, strict_value: float = 0.0) -> PriorEstimate:
    if strict:
        log.warning("strict mode: prior of the empty string set to %.3f", strict_value)
        return PriorEstimate("", strict_value, [], method, y=y, machine_id=machine.machine_id,
                             flags=["strict_empty_string"])
    return PriorEstimate("", 1.0, [], method, y=y, machine_id=machine.machine_id)


def _check_length(x: str, cap: int) -> int:
    check_program(x)
    if len(x) > cap:
        raise ResourceLimitError(f"strings longer than {cap} bits are over the enumeration cap")
    return len(x)


@lru_cache(maxsize=1 << 16)
def phase_oracle(x: str, phase: int, machine: Machine = SK2, context: str = "") -> OracleSpec:
    """f_i(p) = [p ->_i x]; with a context y, f'_i(p) = [p y ->_i y x]."""
    n = len(x)
    return OracleSpec.from_function(n, lambda p: outputs_within(p + context, phase, context + x, machine))


# --- classical ---

def speed_prior_classical(x: str, machine: Machine = SK2,
                          enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
                          strict: bool = False) -> PriorEstimate:
    n = _check_length(x, enumeration_cap)
    if n == 0:
        return _empty_string_estimate(PriorMethod.CLASSICAL, machine, strict)
    counts: List[int] = []
    for phase in range(1, num_phases(n) + 1):
        counts.append(sum(1 for p in programs_of_length(n) if outputs_within(p, phase, x, machine)))
    value = value_from_counts(counts, n)
    log.info("S(%s) = %.6g on %s", x, value, machine.machine_id)
    return PriorEstimate(x, value, counts, PriorMethod.CLASSICAL, machine_id=machine.machine_id)


def phase_count_table(machine: Machine, n: int, context: str = "",
                      enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
                      progress: bool = False) -> Dict[str, List[int]]:
    """Per-phase counts num_i for every x of length n in one pass over programs.

    With a context y the counts are those of the quasi-conditional oracle f'_i.
    """
    if n < 1:
        raise ArgumentError(f"string length must be >= 1, got {n}")
    if n > enumeration_cap:
        raise ResourceLimitError(f"strings longer than {enumeration_cap} bits are over the enumeration cap")
    phases = num_phases(n)
    table: Dict[str, List[int]] = {x: [0] * phases for x in programs_of_length(n)}
    width = len(context) + n
    programs = programs_of_length(n)
    if progress:
        programs = tqdm(programs, total=1 << n, desc=f"programs n={n}")
    for p in programs:
        full = p + context
        prefix, steps = machine.first_emission(full, width)
        if steps is None or not prefix.startswith(context):
            continue
        # p ->_i x holds from its first covering phase until a shorter prefix emits x too
        start = first_phase_within(len(full), steps)
        stop = phases + 1
        for length in range(1, len(full)):
            q_prefix, q_steps = machine.first_emission(full[:length], width)
            if q_steps is not None and q_prefix == prefix:
                stop = min(stop, first_phase_within(length, q_steps))
        row = table[prefix[len(context):]]
        for phase in range(start, stop):
            row[phase - 1] += 1
    return table


def quasi_conditional_classical(x: str, y: str, machine: Machine = SK2,
                                enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
                                strict: bool = False) -> PriorEstimate:
    """Exact S'(x, y) by enumerating p in {0,1}^l(x) under f'_i."""
    n = _check_length(x, enumeration_cap)
    check_program(y)
    if n == 0:
        return _empty_string_estimate(PriorMethod.CLASSICAL, machine, strict, y=y)
    counts = [
        sum(1 for p in programs_of_length(n) if outputs_within(p + y, phase, y + x, machine))
        for phase in range(1, num_phases(n) + 1)
    ]
    return PriorEstimate(x, value_from_counts(counts, n), counts, PriorMethod.CLASSICAL,
                         y=y, machine_id=machine.machine_id)


# --- quantum counting ---

def speed_prior_qcount(x: str, machine: Machine = SK2, m: int = DEFAULT_PRECISION,
                       epsilon: float = DEFAULT_EPSILON, rng: Optional[np.random.Generator] = None,
                       enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
                       strict: bool = False) -> PriorEstimate:
    n = _check_length(x, enumeration_cap)
    if n == 0:
        return _empty_string_estimate(PriorMethod.QCOUNT, machine, strict)
    rng = rng if rng is not None else np.random.default_rng(0)
    phases = num_phases(n)
    eps_i = epsilon / phases
    t = qalg.phase_register_size(m, eps_i)
    qsim.check_qubit_budget(n + 1 + t, f"quantum counting for n={n}")

    counts: List[float] = []
    error = 0.0
    flags: List[str] = []
    for phase in range(1, phases + 1):
        est = qalg.quantum_count(phase_oracle(x, phase, machine), m, eps_i, rng)
        if est.clamped:
            log.warning("phase %d: count clamped to %d", phase, 1 << n)
            flags.append(f"clamped_phase_{phase}")
        counts.append(est.m_hat)
        error += math.ldexp(est.error_bound, -(phase + n))
    value = value_from_counts(counts, n)
    log.info("S(%s) ~ %.6g +- %.3g by counting (t=%d)", x, value, error, t)
    return PriorEstimate(x, value, counts, PriorMethod.QCOUNT, error_bound=error,
                         confidence=1.0 - epsilon, machine_id=machine.machine_id, flags=flags)


# --- Deutsch-Jozsa sampling ---

def _sampled_prior(x: str, context: Optional[str], machine: Machine, epsilon: float, k: float,
                   rng: np.random.Generator, strict: bool) -> PriorEstimate:
    n = len(x)
    phases = num_phases(n)
    counts: List[float] = []
    propagated = 0.0
    trials = 0
    for phase in range(1, phases + 1):
        fe = qalg.estimate_fraction(phase_oracle(x, phase, machine, context or ""), epsilon, k, rng)
        trials += fe.trials
        counts.append(fe.fraction if strict else math.ldexp(fe.fraction, n))
        propagated += math.ldexp(fe.fraction_error_bound, -phase)
    value = value_from_counts(counts, n)
    envelope = (1.0 - 2.0 ** -phases) * epsilon
    flags: List[str] = []
    if strict:
        # the fraction itself is weighted by 2^-(i+n)
        envelope = math.ldexp(envelope, -n)
        propagated = math.ldexp(propagated, -n)
        flags.append("strict_fraction_weight")
    return PriorEstimate(
        x, value, counts, PriorMethod.DJ_SAMPLING,
        error_bound=envelope,
        confidence=max(0.0, 1.0 - 2.0 * phases * math.exp(-2.0 * k)),
        trials=trials,
        y=context,
        machine_id=machine.machine_id,
        propagated_error_bound=propagated,
        flags=flags,
    )


def speed_prior_dj(x: str, machine: Machine = SK2, epsilon: float = DEFAULT_EPSILON,
                   k: float = DEFAULT_K, rng: Optional[np.random.Generator] = None,
                   enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
                   strict: bool = False) -> PriorEstimate:
    """num_i = 2^n x (fraction of programs with p ->_i x), each fraction from modified DJ trials."""
    n = _check_length(x, enumeration_cap)
    if n == 0:
        return _empty_string_estimate(PriorMethod.DJ_SAMPLING, machine, strict)
    if strict:
        log.warning("strict mode: DJ fractions weighted by 2^-(i+n) without the 2^n factor")
    rng = rng if rng is not None else np.random.default_rng(0)
    est = _sampled_prior(x, None, machine, epsilon, k, rng, strict)
    log.info("S(%s) ~ %.6g +- %.3g from %d trials", x, est.value, est.error_bound, est.trials)
    return est


def quasi_conditional(x: str, y: str, epsilon: float = DEFAULT_EPSILON, k: float = DEFAULT_K,
                      rng: Optional[np.random.Generator] = None, machine: Machine = SK2,
                      enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
                      strict: bool = False) -> PriorEstimate:
    n = _check_length(x, enumeration_cap)
    check_program(y)
    if n == 0:
        # the sampled loop's empty-string branch reads 1 - 2^-n with n = 0
        return _empty_string_estimate(PriorMethod.DJ_SAMPLING, machine, strict, y=y,
                                      strict_value=1.0 - 2.0 ** -n)
    rng = rng if rng is not None else np.random.default_rng(0)
    return _sampled_prior(x, y, machine, epsilon, k, rng, strict)


def trials_for_relative_accuracy(n: int, k: float = DEFAULT_K) -> int:
    """Total DJ trials over n^2 phases when epsilon must be 2^-n."""
    return num_phases(n) * qalg.trials_for(2.0 ** -n, k)


# --- dispatch and conditionals ---

def estimate(x: str, method: PriorMethod, machine: Machine = SK2, rng: Optional[np.random.Generator] = None,
             epsilon: float = DEFAULT_EPSILON, k: float = DEFAULT_K, m: int = DEFAULT_PRECISION,
             enumeration_cap: int = DEFAULT_ENUMERATION_CAP, strict: bool = False) -> PriorEstimate:
    if method == PriorMethod.CLASSICAL:
        return speed_prior_classical(x, machine, enumeration_cap, strict)
    if method == PriorMethod.QCOUNT:
        return speed_prior_qcount(x, machine, m, epsilon, rng, enumeration_cap, strict)
    return speed_prior_dj(x, machine, epsilon, k, rng, enumeration_cap, strict)


def conditional(y: str, x: str, method: PriorMethod = PriorMethod.CLASSICAL, **params) -> ConditionalEstimate:
    """S(y | x) = S(xy) / S(x) with first-order error propagation."""
    numerator = estimate(x + y, method, **params)
    denominator = estimate(x, method, **params)
    den = denominator.value
    if den <= 0.0:
        raise UndefinedConditionalError(f"S({x or 'empty'}) = 0, S({y} | {x or 'empty'}) is undefined")
    if den <= denominator.error_bound:
        raise UndefinedConditionalError(
            f"S({x}) = {den:.3g} is within its error bound {denominator.error_bound:.3g}"
        )
    q = numerator.value / den
    bound = (numerator.error_bound + q * denominator.error_bound) / den
    return ConditionalEstimate(y, x, numerator, denominator, q, bound)


def quasi_gap_table(max_len: int, machine: Machine = SK2,
                    enumeration_cap: int = DEFAULT_ENUMERATION_CAP) -> List[dict]:
    """|S'(x, y) - S(x | y)| for 1 <= l(x) <= max_len, 0 <= l(y) <= max_len."""
    rows: List[dict] = []
    for lx in range(1, max_len + 1):
        for ly in range(0, max_len + 1):
            if lx + ly > enumeration_cap:
                continue
            for x in programs_of_length(lx):
                for y in programs_of_length(ly):
                    quasi = quasi_conditional_classical(x, y, machine, enumeration_cap).value
                    try:
                        cond: Optional[float] = conditional(x, y, PriorMethod.CLASSICAL, machine=machine,
                                                            enumeration_cap=enumeration_cap).value
                    except UndefinedConditionalError:
                        cond = None
                    rows.append({
                        "x": x,
                        "y": y,
                        "quasi": quasi,
                        "conditional": cond,
                        "gap": abs(quasi - cond) if cond is not None else None,
                    })
    return rows


# --- Bayes-Laplace ---

def laplace_rule(n_ones: int, n_total: int) -> Fraction:
    """P(next = 1) = (n1 + 1) / (n + 2)."""
    if n_total < 0 or not 0 <= n_ones <= n_total:
        raise ArgumentError(f"need 0 <= n_ones <= n_total, got {n_ones}, {n_total}")
    return Fraction(n_ones + 1, n_total + 2)


def laplace_predict(bits: str) -> Fraction:
    check_program(bits)
    return laplace_rule(bits.count("1"), len(bits))


def laplace_measure(bits: str) -> Fraction:
    """Uniform-mixture measure n1! n0! / (n + 1)!."""
    check_program(bits)
    n1 = bits.count("1")
    n0 = len(bits) - n1
    return Fraction(math.factorial(n1) * math.factorial(n0), math.factorial(len(bits) + 1))
