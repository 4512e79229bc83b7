from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

import qsim
from errors import AlgorithmFailure, ArgumentError, ResourceLimitError, ValidationError
from qsim import GateSpec, OracleSpec, StateVector

log = logging.getLogger("qalg")

DEFAULT_GROVER_RETRIES = 10
DEFAULT_ORDER_SAMPLES = 20
DEFAULT_SHOR_RESTARTS = 10
DEFAULT_SHOR_QUBITS = 18
DEFAULT_ORDER_EPSILON = 0.25
EIGENSTATE_TOLERANCE = 1e-6
PROMISE_TOLERANCE = 1e-9


# --- QFT ---

def qft(state: StateVector, qubits: Sequence[int]) -> StateVector:
    """|j> -> 2^{-k/2} sum_k e^{2 pi i jk / 2^k} |k> on the selected sub-register."""
    qubits = list(qubits)
    view = qsim.register_view(state, qubits)
    return qsim.from_register_view(np.fft.ifft(view, axis=0, norm="ortho"), state.num_qubits, qubits)


def inverse_qft(state: StateVector, qubits: Sequence[int]) -> StateVector:
    qubits = list(qubits)
    view = qsim.register_view(state, qubits)
    return qsim.from_register_view(np.fft.fft(view, axis=0, norm="ortho"), state.num_qubits, qubits)


def qft_matrix(num_qubits: int) -> np.ndarray:
    size = 1 << num_qubits
    j = np.arange(size)
    return np.exp(2j * np.pi * np.outer(j, j) / size) / np.sqrt(size)


# --- phase estimation ---

@dataclass
class PhaseEstimate:
    phase: float
    precision_bits: int
    t_register: int
    confidence: float
    outcome: str = ""
    outcome_probability: float = 0.0


def phase_register_size(m: int, epsilon: float) -> int:
    """t = m + ceil(log2(2 + 1/(2 eps)))."""
    if m < 1:
        raise ArgumentError(f"precision must be at least 1 bit, got {m}")
    if not 0.0 < epsilon < 1.0:
        raise ArgumentError(f"epsilon must be in (0, 1), got {epsilon}")
    return m + math.ceil(math.log2(2.0 + 1.0 / (2.0 * epsilon)))


def circular_distance(a: float, b: float) -> float:
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


def _as_matrix(unitary: Union[np.ndarray, GateSpec]) -> np.ndarray:
    if isinstance(unitary, GateSpec):
        return qsim.gate_matrix(unitary)
    matrix = np.asarray(unitary, dtype=np.complex128)
    qsim.check_unitary(matrix)
    return matrix


def check_eigenstate(unitary: np.ndarray, state: StateVector) -> complex:
    if unitary.shape[0] != state.dim:
        raise ArgumentError(f"unitary of size {unitary.shape[0]} on a state of dimension {state.dim}")
    v = state.amplitudes
    uv = unitary @ v
    eigenvalue = complex(np.vdot(v, uv))
    residual = float(np.linalg.norm(uv - eigenvalue * v))
    if residual > EIGENSTATE_TOLERANCE:
        raise ValidationError(f"input is not an eigenstate (|Uv - lv| = {residual:.3e})")
    return eigenvalue


def _power_ladder(unitary: np.ndarray, t: int) -> List[np.ndarray]:
    powers = [unitary]
    for _ in range(1, t):
        powers.append(powers[-1] @ powers[-1])
    return powers


def _phase_register_probabilities(powers: Sequence[np.ndarray], work: StateVector, t: int) -> np.ndarray:
    """Count register first; count qubit q controls U^(2^(t-1-q)); inverse QFT on the count register."""
    total = t + work.num_qubits
    qsim.check_qubit_budget(total, "phase estimation")
    count = list(range(t))
    targets = list(range(t, total))
    state = qsim.hadamard_all(qsim.tensor(qsim.new_state(t), work), count)
    for q in count:
        gate = qsim.controlled(qsim.explicit(powers[t - 1 - q], targets), [q])
        state = qsim.apply_gate(state, gate)
    state = inverse_qft(state, count)
    return qsim.marginal_probabilities(state, count)


def phase_distribution(unitary: Union[np.ndarray, GateSpec], eigenstate: StateVector, t: int) -> np.ndarray:
    """Exact distribution of the t-bit phase register; entry j is Pr[phase = j / 2^t]."""
    matrix = _as_matrix(unitary)
    check_eigenstate(matrix, eigenstate)
    return _phase_register_probabilities(_power_ladder(matrix, t), eigenstate, t)


def phase_success_probability(distribution: np.ndarray, omega: float, m: int) -> float:
    size = len(distribution)
    hits = [j for j in range(size) if circular_distance(j / size, omega) <= 2.0 ** -m + 1e-12]
    return float(np.sum(distribution[hits]))


def phase_estimate(unitary: Union[np.ndarray, GateSpec], eigenstate: StateVector, m: int,
                   epsilon: float, rng: np.random.Generator) -> PhaseEstimate:
    t = phase_register_size(m, epsilon)
    dist = phase_distribution(unitary, eigenstate, t)
    j = int(rng.choice(len(dist), p=dist / dist.sum()))
    est = PhaseEstimate(
        phase=j / (1 << t),
        precision_bits=m,
        t_register=t,
        confidence=1.0 - epsilon,
        outcome=qsim.index_to_bits(j, t),
        outcome_probability=float(dist[j]),
    )
    log.info("phase estimate %.6f (t=%d, m=%d)", est.phase, t, m)
    return est


# --- Deutsch-Jozsa ---

class DJVerdict(Enum):
    CONSTANT = "CONSTANT"
    BALANCED = "BALANCED"


@dataclass
class DJResult:
    verdict: DJVerdict
    zero_probability: float
    oracle_calls: int = 1
    promise_held: bool = True


@dataclass
class FractionEstimate:
    fraction: float
    trials: int
    epsilon: float
    k: float
    mean: float
    fraction_error_bound: float
    failure_probability: float
    oracle_calls: int = 0


def dj_circuit_state(oracle: OracleSpec) -> StateVector:
    """H^n on the inputs after one U_f with the ancilla in |->; inputs are qubits 0..n-1."""
    n = oracle.arity
    qubits = list(range(n + 1))
    state = qsim.basis_state("0" * n + "1")
    state = qsim.hadamard_all(state, qubits)
    state = qsim.apply_oracle(state, oracle, qubits[:n], n)
    return qsim.hadamard_all(state, qubits[:n])


def dj_zero_probability(oracle: OracleSpec) -> float:
    """Pr[all-zeros on the inputs] = ((2^n - 2L) / 2^n)^2."""
    return _dj_zero_probability(oracle.table, oracle.arity)


@lru_cache(maxsize=1 << 14)
def _dj_zero_probability(table: Tuple[int, ...], arity: int) -> float:
    oracle = OracleSpec(arity, table)
    probs = qsim.marginal_probabilities(dj_circuit_state(oracle), range(arity))
    return float(probs[0])


def deutsch_jozsa(oracle: OracleSpec) -> DJResult:
    p = dj_zero_probability(oracle)
    if abs(p - 1.0) <= PROMISE_TOLERANCE:
        return DJResult(DJVerdict.CONSTANT, p)
    if p <= PROMISE_TOLERANCE:
        return DJResult(DJVerdict.BALANCED, p)
    verdict = DJVerdict.CONSTANT if p >= 0.5 else DJVerdict.BALANCED
    log.warning("oracle is neither constant nor balanced (Pr[0^n]=%.6f), reporting %s", p, verdict.name)
    return DJResult(verdict, p, promise_held=False)


def modified_dj_trial(oracle: OracleSpec, rng: np.random.Generator) -> int:
    outcome = qsim.measure(dj_circuit_state(oracle), range(oracle.arity), rng)
    return int(outcome.bits == "0" * oracle.arity)


def trials_for(epsilon: float, k: float) -> int:
    if not 0.0 < epsilon < 1.0:
        raise ArgumentError(f"epsilon must be in (0, 1), got {epsilon}")
    if k < 1:
        raise ArgumentError(f"confidence parameter k must be >= 1, got {k}")
    return math.ceil(k / (epsilon * epsilon) - 1e-9)


def fraction_from_mean(mean: float) -> float:
    return min(0.5, max(0.0, (1.0 - math.sqrt(max(0.0, mean))) / 2.0))


def _snap(p: float) -> float:
    if p <= PROMISE_TOLERANCE:
        return 0.0
    if p >= 1.0 - PROMISE_TOLERANCE:
        return 1.0
    return p


def estimate_fraction(oracle: OracleSpec, epsilon: float, k: float, rng: np.random.Generator) -> FractionEstimate:
    """L / 2^n from ceil(k / eps^2) modified Deutsch-Jozsa trials; the L <= 2^n / 2 branch."""
    trials = trials_for(epsilon, k)
    p0 = _snap(dj_zero_probability(oracle))
    # the trials are independent draws of the 0^n outcome, so their hit count is one binomial draw
    hits = int(rng.binomial(trials, p0))
    mean = hits / trials
    fraction = fraction_from_mean(mean)

    lo = fraction_from_mean(min(1.0, mean + epsilon))
    hi = fraction_from_mean(max(0.0, mean - epsilon))
    return FractionEstimate(
        fraction=fraction,
        trials=trials,
        epsilon=epsilon,
        k=k,
        mean=mean,
        fraction_error_bound=max(fraction - lo, hi - fraction),
        failure_probability=min(1.0, 2.0 * math.exp(-2.0 * k)),
        oracle_calls=trials,
    )


# --- Grover ---

@dataclass
class GroverResult:
    solution: str
    iterations: int
    derived_iterations: int
    displayed_iterations: int
    success_probability: float
    attempts: List[dict] = field(default_factory=list)


def grover_angle(n_items: int, m_solutions: int) -> float:
    return 2.0 * math.asin(math.sqrt(m_solutions / n_items))


def grover_success_probability(n_items: int, m_solutions: int, k: int) -> float:
    theta = grover_angle(n_items, m_solutions)
    return math.sin((2 * k + 1) * theta / 2.0) ** 2


def grover_iterations(n_items: int, m_solutions: int) -> Tuple[int, int]:
    """(round(pi/(2 theta) - 1/2), ceil(pi/4 sqrt(N/M)))."""
    if m_solutions < 1 or m_solutions > n_items:
        raise ArgumentError(f"need 1 <= M <= N, got M={m_solutions}, N={n_items}")
    theta = grover_angle(n_items, m_solutions)
    # nearest integer to pi/(2 theta) - 1/2, halves rounded up
    derived = max(0, math.floor(math.pi / (2.0 * theta) + 1e-9))
    displayed = math.ceil(math.pi / 4.0 * math.sqrt(n_items / m_solutions))
    return derived, displayed


def grover_initial_state(n: int) -> StateVector:
    """Uniform superposition on qubits 0..n-1 with the ancilla (qubit n) in |->."""
    return qsim.hadamard_all(qsim.basis_state("0" * n + "1"), range(n + 1))


def grover_iterate(state: StateVector, oracle: OracleSpec) -> StateVector:
    n = oracle.arity
    inputs = list(range(n))
    state = qsim.apply_oracle(state, oracle, inputs, n)
    state = qsim.hadamard_all(state, inputs)
    state = qsim.apply_gate(state, qsim.phase_flip_about_zero(inputs))
    return qsim.hadamard_all(state, inputs)


def grover_state(oracle: OracleSpec, k: int) -> StateVector:
    state = grover_initial_state(oracle.arity)
    for _ in range(k):
        state = grover_iterate(state, oracle)
    return state


def marked_probability(state: StateVector, oracle: OracleSpec) -> float:
    probs = qsim.marginal_probabilities(state, range(oracle.arity))
    return float(np.sum(probs[np.asarray(oracle.table, dtype=bool)]))


def grover_search(oracle: OracleSpec, m_solutions: int, rng: np.random.Generator,
                  max_retries: int = DEFAULT_GROVER_RETRIES, strict: bool = False) -> GroverResult:
    if m_solutions < 1:
        raise ArgumentError("Grover search needs at least one solution (M >= 1)")
    derived, displayed = grover_iterations(oracle.size, m_solutions)
    k = displayed if strict else derived
    if strict:
        log.warning("strict mode: %d Grover iterations instead of %d", displayed, derived)
    log.info("Grover search N=%d M=%d k=%d", oracle.size, m_solutions, k)

    state = grover_state(oracle, k)
    success = marked_probability(state, oracle)
    inputs = list(range(oracle.arity))
    attempts: List[dict] = []
    for attempt in range(max_retries):
        bits = qsim.measure(state, inputs, rng).bits
        ok = oracle(bits) == 1
        attempts.append({"attempt": attempt, "measured": bits, "valid": ok})
        if ok:
            return GroverResult(bits, k, derived, displayed, success, attempts)
        log.debug("Grover attempt %d measured %s, not a solution", attempt, bits)
    raise AlgorithmFailure(f"no solution after {max_retries} Grover runs", attempts)


# --- quantum counting ---

@dataclass
class CountEstimate:
    m_hat: float
    theta_hat: float
    error_bound: float
    theta_error: float
    precision_bits: int
    t_register: int
    confidence: float
    clamped: bool = False
    outcome: str = ""


def counting_operator(oracle: OracleSpec) -> np.ndarray:
    """(2|u><u| - I) diag(signs) on the 2N space; marked states are (x, 0) with f(x) = 1."""
    size = 2 * oracle.size
    signs = np.ones(size)
    for x, v in enumerate(oracle.table):
        if v:
            signs[2 * x] = -1.0
    u = np.full(size, 1.0 / math.sqrt(size))
    reflect = 2.0 * np.outer(u, u) - np.eye(size)
    return (reflect * signs[np.newaxis, :]).astype(np.complex128)


@lru_cache(maxsize=512)
def _counting_distribution_cached(table: Tuple[int, ...], arity: int, t: int) -> np.ndarray:
    oracle = OracleSpec(arity, table)
    grover = counting_operator(oracle)
    powers = [np.linalg.matrix_power(grover, 1 << j) for j in range(t)]
    dist = _phase_register_probabilities(powers, qsim.uniform_state(arity + 1), t)
    dist.setflags(write=False)
    return dist


def counting_distribution(oracle: OracleSpec, t: int) -> np.ndarray:
    return _counting_distribution_cached(oracle.table, oracle.arity, t)


def count_error_bound(theta_hat: float, m: int, n_items: int) -> Tuple[float, float]:
    """(theta error, count error): the image of [theta - d, theta + d] under 2N sin^2(theta/2)."""
    d = 2.0 * math.pi * 2.0 ** -m
    lo = max(0.0, theta_hat - d)
    hi = min(math.pi, theta_hat + d)
    centre = 2.0 * n_items * math.sin(theta_hat / 2.0) ** 2
    m_lo = 2.0 * n_items * math.sin(lo / 2.0) ** 2
    m_hi = 2.0 * n_items * math.sin(hi / 2.0) ** 2
    return d, max(centre - m_lo, m_hi - centre)


def count_estimate_from_outcome(j: int, oracle: OracleSpec, m: int, epsilon: float, t: int) -> CountEstimate:
    n_items = oracle.size
    theta = 2.0 * math.pi * j / (1 << t)
    theta = min(theta, 2.0 * math.pi - theta)
    raw = 2.0 * n_items * math.sin(theta / 2.0) ** 2
    m_hat = min(float(n_items), max(0.0, raw))
    theta_error, bound = count_error_bound(theta, m, n_items)
    return CountEstimate(
        m_hat=m_hat,
        theta_hat=theta,
        error_bound=bound,
        theta_error=theta_error,
        precision_bits=m,
        t_register=t,
        confidence=1.0 - epsilon,
        clamped=raw > n_items,
        outcome=qsim.index_to_bits(j, t),
    )


def quantum_count(oracle: OracleSpec, m: int, epsilon: float, rng: np.random.Generator) -> CountEstimate:
    t = phase_register_size(m, epsilon)
    qsim.check_qubit_budget(oracle.arity + 1 + t, "quantum counting")
    dist = counting_distribution(oracle, t)
    j = int(rng.choice(len(dist), p=dist / dist.sum()))
    est = count_estimate_from_outcome(j, oracle, m, epsilon, t)
    log.debug("count outcome %s -> M=%.4f (+-%.4f)", est.outcome, est.m_hat, est.error_bound)
    return est


def count_success_probability(oracle: OracleSpec, m: int, epsilon: float) -> float:
    """Exact Pr[|M_hat - M| <= error_bound] from the counting distribution."""
    t = phase_register_size(m, epsilon)
    dist = counting_distribution(oracle, t)
    true_m = oracle.count()
    total = 0.0
    for j, p in enumerate(dist):
        est = count_estimate_from_outcome(j, oracle, m, epsilon, t)
        if abs(est.m_hat - true_m) <= est.error_bound + 1e-9:
            total += float(p)
    return total


# --- Shor ---

def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def perfect_power(n: int) -> Optional[Tuple[int, int]]:
    """(a, b) with a^b = n and b >= 2, smallest a; None if n is not a perfect power."""
    for b in range(n.bit_length(), 1, -1):
        a = round(n ** (1.0 / b))
        for cand in (a - 1, a, a + 1):
            if cand >= 2 and cand ** b == n:
                return cand, b
    return None


def classical_order(x: int, n_mod: int) -> int:
    if math.gcd(x, n_mod) != 1:
        raise ArgumentError(f"{x} is not a unit mod {n_mod}")
    r, acc = 1, x % n_mod
    while acc != 1 % n_mod:
        acc = acc * x % n_mod
        r += 1
    return r


def continued_fraction(value: Fraction, denominator_limit: int) -> Fraction:
    """Last convergent of the expansion of `value` whose denominator is <= the limit."""
    if denominator_limit < 1:
        raise ArgumentError(f"denominator limit must be >= 1, got {denominator_limit}")
    value = Fraction(value)
    p_prev, q_prev = 1, 0
    p, q = math.floor(value), 1
    rest = value - math.floor(value)
    best = Fraction(p, q)
    while rest != 0:
        value = 1 / rest
        a = math.floor(value)
        rest = value - a
        p_prev, q_prev, p, q = p, q, a * p + p_prev, a * q + q_prev
        if q > denominator_limit:
            break
        best = Fraction(p, q)
    return best


def modular_multiplier(a: int, n_mod: int, width: int) -> np.ndarray:
    """Permutation |b> -> |a b mod N> for b < N, identity on b >= N."""
    size = 1 << width
    mat = np.zeros((size, size), dtype=np.complex128)
    for b in range(size):
        mat[(a * b) % n_mod if b < n_mod else b, b] = 1.0
    return mat


@dataclass
class OrderFinding:
    order: int
    work_qubits: int
    counting_qubits: int
    paper_counting_qubits: int
    reduced: bool
    samples: List[dict] = field(default_factory=list)


def order_register_sizes(n_mod: int, epsilon: float, max_qubits: int) -> Tuple[int, int, int]:
    """(work, counting, formula counting) with the counting register cut to fit max_qubits."""
    work = max(1, (n_mod - 1).bit_length())
    formula = 2 * work + 1 + math.ceil(math.log2(2.0 + 1.0 / (2.0 * epsilon)))
    counting = min(formula, max_qubits - work)
    if counting < 1:
        raise ResourceLimitError(f"order finding mod {n_mod} does not fit in {max_qubits} qubits")
    return work, counting, formula


@lru_cache(maxsize=256)
def order_distribution(x: int, n_mod: int, t: int) -> np.ndarray:
    work = max(1, (n_mod - 1).bit_length())
    powers = [modular_multiplier(pow(x, 1 << j, n_mod), n_mod, work) for j in range(t)]
    start = qsim.basis_state(qsim.index_to_bits(1, work))
    dist = _phase_register_probabilities(powers, start, t)
    dist.setflags(write=False)
    return dist


def order_find_run(x: int, n_mod: int, epsilon: float, rng: np.random.Generator,
                   max_samples: int = DEFAULT_ORDER_SAMPLES,
                   max_qubits: int = DEFAULT_SHOR_QUBITS) -> OrderFinding:
    if n_mod < 2:
        raise ArgumentError(f"modulus must be >= 2, got {n_mod}")
    if math.gcd(x, n_mod) != 1:
        raise ArgumentError(f"gcd({x}, {n_mod}) != 1")
    work, t, formula = order_register_sizes(n_mod, epsilon, max_qubits)
    if t < formula:
        log.info("order finding mod %d: counting register cut from %d to %d qubits", n_mod, formula, t)
    qsim.check_qubit_budget(work + t, "order finding")

    dist = order_distribution(x % n_mod, n_mod, t)
    samples: List[dict] = []
    for attempt in range(max_samples):
        j = int(rng.choice(len(dist), p=dist / dist.sum()))
        approx = continued_fraction(Fraction(j, 1 << t), n_mod - 1)
        r = approx.denominator
        ok = pow(x, r, n_mod) == 1 % n_mod
        samples.append({"attempt": attempt, "outcome": j, "convergent": f"{approx.numerator}/{r}", "verified": ok})
        if ok:
            log.debug("order of %d mod %d is %d (sample %d)", x, n_mod, r, attempt)
            return OrderFinding(r, work, t, formula, t < formula, samples)
    raise AlgorithmFailure(f"order of {x} mod {n_mod} not found in {max_samples} samples", samples)


def order_find(x: int, n_mod: int, epsilon: float, rng: np.random.Generator, **kwargs) -> int:
    return order_find_run(x, n_mod, epsilon, rng, **kwargs).order


@dataclass
class ShorResult:
    factor: int
    branch: str
    restarts: int
    attempts: List[dict] = field(default_factory=list)


def shor_run(n_mod: int, rng: np.random.Generator,
             max_restarts: int = DEFAULT_SHOR_RESTARTS,
             epsilon: float = DEFAULT_ORDER_EPSILON,
             max_samples: int = DEFAULT_ORDER_SAMPLES,
             max_qubits: int = DEFAULT_SHOR_QUBITS) -> ShorResult:
    if n_mod < 4:
        raise ArgumentError(f"need a composite N >= 4, got {n_mod}")
    if is_prime(n_mod):
        raise ArgumentError(f"{n_mod} is prime")
    if n_mod % 2 == 0:
        return ShorResult(2, "even", 0)
    power = perfect_power(n_mod)
    if power is not None:
        return ShorResult(power[0], "perfect_power", 0)

    attempts: List[dict] = []
    for restart in range(max_restarts):
        x = int(rng.integers(2, n_mod))
        g = math.gcd(x, n_mod)
        if g > 1:
            attempts.append({"restart": restart, "x": x, "branch": "gcd", "factor": g})
            return ShorResult(g, "gcd", restart, attempts)
        try:
            found = order_find_run(x, n_mod, epsilon, rng, max_samples=max_samples, max_qubits=max_qubits)
        except AlgorithmFailure as e:
            attempts.append({"restart": restart, "x": x, "branch": "order_failed", "samples": e.attempts})
            continue
        r = found.order
        entry = {"restart": restart, "x": x, "order": r,
                 "counting_qubits": found.counting_qubits, "reduced": found.reduced}
        half = pow(x, r // 2, n_mod) if r % 2 == 0 else None
        if half is None or half == n_mod - 1:
            entry["branch"] = "odd_order" if half is None else "trivial_root"
            attempts.append(entry)
            log.debug("restart %d: x=%d r=%d gives no factor", restart, x, r)
            continue
        for cand in (math.gcd(half - 1, n_mod), math.gcd(half + 1, n_mod)):
            if 1 < cand < n_mod:
                entry.update(branch="order", factor=cand)
                attempts.append(entry)
                log.info("factor %d of %d from x=%d, r=%d", cand, n_mod, x, r)
                return ShorResult(cand, "order", restart, attempts)
        entry["branch"] = "no_factor"
        attempts.append(entry)
    raise AlgorithmFailure(f"no factor of {n_mod} after {max_restarts} restarts", attempts)


def shor_factor(n_mod: int, rng: np.random.Generator, **kwargs) -> int:
    return shor_run(n_mod, rng, **kwargs).factor
