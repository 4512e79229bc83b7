"""Dense statevector simulation.

Qubit 0 is the most significant bit of a basis index, so the ket |x1 x2 ... xn>
indexes the amplitude array at int("x1x2...xn", 2).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from errors import ArgumentError, ResourceLimitError, ValidationError

log = logging.getLogger("qsim")

DEFAULT_MAX_QUBITS = 24
DEFAULT_NORM_TOLERANCE = 1e-9
DEFAULT_UNITARY_TOLERANCE = 1e-9


@dataclass
class SimLimits:
    max_qubits: int = DEFAULT_MAX_QUBITS
    norm_tolerance: float = DEFAULT_NORM_TOLERANCE
    unitary_tolerance: float = DEFAULT_UNITARY_TOLERANCE


LIMITS = SimLimits()


def set_limits(max_qubits: Optional[int] = None,
               norm_tolerance: Optional[float] = None,
               unitary_tolerance: Optional[float] = None) -> SimLimits:
    if max_qubits is not None:
        if max_qubits < 1:
            raise ArgumentError(f"max_qubits must be positive, got {max_qubits}")
        LIMITS.max_qubits = int(max_qubits)
    if norm_tolerance is not None:
        LIMITS.norm_tolerance = float(norm_tolerance)
    if unitary_tolerance is not None:
        LIMITS.unitary_tolerance = float(unitary_tolerance)
    return LIMITS


def check_qubit_budget(num_qubits: int, what: str = "register") -> None:
    if num_qubits > LIMITS.max_qubits:
        raise ResourceLimitError(
            f"{what} needs {num_qubits} qubits, simulator cap is {LIMITS.max_qubits}"
        )


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent stream for (seed, key1, key2, ...); same keys, same stream."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *[int(k) for k in keys]]))


# --- bit helpers ---

def bits_to_index(bits: str) -> int:
    if any(b not in "01" for b in bits):
        raise ArgumentError(f"not a bit string: {bits!r}")
    return int(bits, 2) if bits else 0


def index_to_bits(index: int, width: int) -> str:
    if width == 0:
        return ""
    return format(index, f"0{width}b")


# --- states ---

@dataclass
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if self.num_qubits < 0:
            raise ArgumentError(f"negative qubit count {self.num_qubits}")
        if self.amplitudes.shape[0] != 1 << self.num_qubits:
            raise ValidationError(
                f"{self.amplitudes.shape[0]} amplitudes do not describe {self.num_qubits} qubits"
            )

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy())

    def check_norm(self) -> "StateVector":
        drift = abs(float(np.vdot(self.amplitudes, self.amplitudes).real) - 1.0)
        if drift > LIMITS.norm_tolerance:
            raise ValidationError(f"state norm drifted by {drift:.3e}")
        return self


def new_state(num_qubits: int) -> StateVector:
    if num_qubits < 1:
        raise ArgumentError(f"a register needs at least one qubit, got {num_qubits}")
    check_qubit_budget(num_qubits)
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(num_qubits, amps)


def basis_state(bits: str) -> StateVector:
    if not bits:
        raise ArgumentError("basis_state needs at least one bit")
    state = new_state(len(bits))
    state.amplitudes[0] = 0.0
    state.amplitudes[bits_to_index(bits)] = 1.0
    return state


def uniform_state(num_qubits: int) -> StateVector:
    state = new_state(num_qubits)
    state.amplitudes[:] = 1.0 / np.sqrt(state.dim)
    return state


def from_amplitudes(amplitudes: Sequence[complex]) -> StateVector:
    amps = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
    n = int(amps.shape[0]).bit_length() - 1
    if amps.shape[0] != 1 << n or n < 1:
        raise ValidationError(f"amplitude count {amps.shape[0]} is not a power of two >= 2")
    check_qubit_budget(n)
    return StateVector(n, amps).check_norm()


def tensor(a: StateVector, b: StateVector) -> StateVector:
    check_qubit_budget(a.num_qubits + b.num_qubits)
    return StateVector(a.num_qubits + b.num_qubits, np.kron(a.amplitudes, b.amplitudes))


def inner(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugate-linear in a."""
    if a.dim != b.dim:
        raise ArgumentError(f"inner product of dimensions {a.dim} and {b.dim}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def outer(a: StateVector, b: StateVector) -> np.ndarray:
    """The operator |b><a| (dim(b) x dim(a)); it maps a normalized |a> onto |b>."""
    return np.outer(b.amplitudes, np.conj(a.amplitudes))


# --- gates ---

class GateKind(Enum):
    H = "H"
    CNOT = "CNOT"
    PI8 = "PI8"
    PHASE_FLIP_ABOUT_ZERO = "PHASE_FLIP_ABOUT_ZERO"
    EXPLICIT = "EXPLICIT"
    CONTROLLED = "CONTROLLED"


@dataclass(eq=False)
class GateSpec:
    kind: GateKind
    targets: Tuple[int, ...]
    matrix: Optional[np.ndarray] = None
    inner: Optional["GateSpec"] = None
    num_controls: int = 0

    def __post_init__(self):
        self.targets = tuple(int(t) for t in self.targets)
        if len(set(self.targets)) != len(self.targets):
            raise ArgumentError(f"repeated target in {self.targets}")
        if any(t < 0 for t in self.targets):
            raise ArgumentError(f"negative target in {self.targets}")
        arity = {GateKind.H: 1, GateKind.PI8: 1, GateKind.CNOT: 2}.get(self.kind)
        if arity is not None and len(self.targets) != arity:
            raise ArgumentError(f"{self.kind.name} acts on {arity} qubit(s), got {self.targets}")
        if self.kind == GateKind.PHASE_FLIP_ABOUT_ZERO and not self.targets:
            raise ArgumentError("PHASE_FLIP_ABOUT_ZERO needs at least one target")
        if self.kind == GateKind.EXPLICIT:
            if self.matrix is None:
                raise ArgumentError("EXPLICIT gate without a matrix")
            self.matrix = np.asarray(self.matrix, dtype=np.complex128)
            size = 1 << len(self.targets)
            if self.matrix.shape != (size, size):
                raise ValidationError(
                    f"matrix shape {self.matrix.shape} does not fit {len(self.targets)} targets"
                )
            check_unitary(self.matrix)
        if self.kind == GateKind.CONTROLLED:
            if self.inner is None or self.num_controls < 1:
                raise ArgumentError("CONTROLLED gate needs an inner gate and at least one control")
            if self.targets[self.num_controls:] != self.inner.targets:
                raise ArgumentError("CONTROLLED targets must be controls followed by the inner targets")

    @property
    def controls(self) -> Tuple[int, ...]:
        return self.targets[: self.num_controls] if self.kind == GateKind.CONTROLLED else ()


def check_unitary(matrix: np.ndarray, tolerance: Optional[float] = None) -> None:
    tol = LIMITS.unitary_tolerance if tolerance is None else tolerance
    size = matrix.shape[0]
    deviation = float(np.max(np.abs(matrix @ matrix.conj().T - np.eye(size))))
    if deviation > tol:
        raise ValidationError(f"matrix is not unitary (max |UU^+ - I| = {deviation:.3e})")


def h(qubit: int) -> GateSpec:
    return GateSpec(GateKind.H, (qubit,))


def cnot(control: int, target: int) -> GateSpec:
    return GateSpec(GateKind.CNOT, (control, target))


def pi8(qubit: int) -> GateSpec:
    return GateSpec(GateKind.PI8, (qubit,))


def phase_flip_about_zero(qubits: Sequence[int]) -> GateSpec:
    return GateSpec(GateKind.PHASE_FLIP_ABOUT_ZERO, tuple(qubits))


def explicit(matrix: np.ndarray, targets: Sequence[int]) -> GateSpec:
    return GateSpec(GateKind.EXPLICIT, tuple(targets), matrix=matrix)


def controlled(inner_gate: GateSpec, controls: Sequence[int]) -> GateSpec:
    controls = tuple(controls)
    return GateSpec(
        GateKind.CONTROLLED,
        controls + inner_gate.targets,
        inner=inner_gate,
        num_controls=len(controls),
    )


_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2.0)
_PI8 = np.diag([1.0, np.exp(1j * np.pi / 4)]).astype(np.complex128)
_CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128
)


def gate_matrix(gate: GateSpec) -> np.ndarray:
    """Dense matrix of the gate over its own targets, first target most significant."""
    if gate.kind == GateKind.H:
        return _H.copy()
    if gate.kind == GateKind.PI8:
        return _PI8.copy()
    if gate.kind == GateKind.CNOT:
        return _CNOT.copy()
    if gate.kind == GateKind.PHASE_FLIP_ABOUT_ZERO:
        diag = -np.ones(1 << len(gate.targets), dtype=np.complex128)
        diag[0] = 1.0
        return np.diag(diag)
    if gate.kind == GateKind.EXPLICIT:
        return gate.matrix.copy()
    inner_matrix = gate_matrix(gate.inner)
    size = 1 << len(gate.targets)
    full = np.eye(size, dtype=np.complex128)
    k = inner_matrix.shape[0]
    full[size - k:, size - k:] = inner_matrix
    return full


def _check_targets(num_qubits: int, targets: Sequence[int]) -> None:
    for t in targets:
        if t < 0 or t >= num_qubits:
            raise ArgumentError(f"qubit {t} outside a {num_qubits}-qubit register")
    if len(set(targets)) != len(targets):
        raise ArgumentError(f"repeated qubit in {list(targets)}")


def _to_front(amps: np.ndarray, num_qubits: int, qubits: Sequence[int]) -> np.ndarray:
    psi = amps.reshape([2] * num_qubits)
    return np.moveaxis(psi, list(qubits), list(range(len(qubits))))


def _from_front(psi: np.ndarray, num_qubits: int, qubits: Sequence[int]) -> np.ndarray:
    psi = psi.reshape([2] * num_qubits)
    return np.moveaxis(psi, list(range(len(qubits))), list(qubits)).reshape(-1)


def _apply_on(amps: np.ndarray, num_qubits: int, targets: Sequence[int], matrix: np.ndarray) -> np.ndarray:
    k = len(targets)
    psi = _to_front(amps, num_qubits, targets).reshape(1 << k, -1)
    return _from_front(matrix @ psi, num_qubits, targets)


def register_view(state: StateVector, qubits: Sequence[int]) -> np.ndarray:
    """Amplitudes as a (2^k, rest) array, row index read from `qubits` (first most significant)."""
    qubits = list(qubits)
    _check_targets(state.num_qubits, qubits)
    return _to_front(state.amplitudes, state.num_qubits, qubits).reshape(1 << len(qubits), -1)


def from_register_view(view: np.ndarray, num_qubits: int, qubits: Sequence[int]) -> StateVector:
    return StateVector(num_qubits, _from_front(np.asarray(view), num_qubits, list(qubits))).check_norm()


def apply_gate(state: StateVector, gate: GateSpec) -> StateVector:
    _check_targets(state.num_qubits, gate.targets)
    n = state.num_qubits
    amps = state.amplitudes

    if gate.kind == GateKind.CONTROLLED:
        c = gate.num_controls
        k = len(gate.targets) - c
        psi = _to_front(amps, n, gate.targets).reshape(1 << c, 1 << k, -1).copy()
        psi[-1] = gate_matrix(gate.inner) @ psi[-1]
        out = _from_front(psi, n, gate.targets)
    elif gate.kind == GateKind.PHASE_FLIP_ABOUT_ZERO:
        psi = _to_front(amps, n, gate.targets).reshape(1 << len(gate.targets), -1)
        psi = -psi
        psi[0] = -psi[0]
        out = _from_front(psi, n, gate.targets)
    else:
        out = _apply_on(amps, n, gate.targets, gate_matrix(gate))

    return StateVector(n, out).check_norm()


def apply_gates(state: StateVector, gates: Sequence[GateSpec]) -> StateVector:
    for gate in gates:
        state = apply_gate(state, gate)
    return state


def hadamard_all(state: StateVector, qubits: Sequence[int]) -> StateVector:
    return apply_gates(state, [h(q) for q in qubits])


# --- oracles ---

@dataclass(frozen=True)
class OracleSpec:
    """Total boolean function on n-bit inputs, stored as a truth table indexed by int(x, 2)."""

    arity: int
    table: Tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.arity < 1:
            raise ArgumentError(f"oracle arity must be positive, got {self.arity}")
        table = tuple(int(v) for v in self.table)
        if len(table) != 1 << self.arity:
            raise ValidationError(
                f"oracle table has {len(table)} entries, arity {self.arity} needs {1 << self.arity}"
            )
        if any(v not in (0, 1) for v in table):
            raise ValidationError("oracle outputs must be 0 or 1")
        object.__setattr__(self, "table", table)

    @classmethod
    def from_function(cls, arity: int, fn: Callable[[str], int]) -> "OracleSpec":
        return cls(arity, tuple(int(bool(fn(index_to_bits(x, arity)))) for x in range(1 << arity)))

    @classmethod
    def marked(cls, arity: int, marked_inputs: Sequence[str]) -> "OracleSpec":
        table = [0] * (1 << arity)
        for bits in marked_inputs:
            if len(bits) != arity:
                raise ArgumentError(f"marked input {bits!r} is not {arity} bits")
            table[bits_to_index(bits)] = 1
        return cls(arity, tuple(table))

    def __call__(self, bits: str) -> int:
        if len(bits) != self.arity:
            raise ArgumentError(f"oracle of arity {self.arity} called on {bits!r}")
        return self.table[bits_to_index(bits)]

    @property
    def size(self) -> int:
        return 1 << self.arity

    def count(self) -> int:
        return sum(self.table)

    def solutions(self) -> List[str]:
        return [index_to_bits(x, self.arity) for x, v in enumerate(self.table) if v]


def apply_oracle(state: StateVector, oracle: OracleSpec, input_qubits: Sequence[int], ancilla: int) -> StateVector:
    """U_f |x>|y> = |x>|y xor f(x)>."""
    input_qubits = list(input_qubits)
    if len(input_qubits) != oracle.arity:
        raise ArgumentError(f"oracle arity {oracle.arity} given {len(input_qubits)} input qubits")
    if ancilla in input_qubits:
        raise ArgumentError(f"ancilla {ancilla} is also an input qubit")
    qubits = input_qubits + [ancilla]
    _check_targets(state.num_qubits, qubits)

    n = state.num_qubits
    psi = _to_front(state.amplitudes, n, qubits).reshape(oracle.size, 2, -1).copy()
    mask = np.asarray(oracle.table, dtype=bool)
    psi[mask] = psi[mask][:, ::-1, :]
    return StateVector(n, _from_front(psi, n, qubits))


def oracle_matrix(oracle: OracleSpec) -> np.ndarray:
    """Explicit permutation matrix of U_f on (arity + 1) qubits, ancilla last."""
    size = oracle.size * 2
    mat = np.zeros((size, size), dtype=np.complex128)
    for x in range(oracle.size):
        f = oracle.table[x]
        for y in (0, 1):
            mat[2 * x + (y ^ f), 2 * x + y] = 1.0
    return mat


# --- measurement ---

@dataclass
class MeasurementOutcome:
    bits: str
    probability: float
    collapsed: Optional[StateVector] = None


def marginal_probabilities(state: StateVector, qubits: Sequence[int]) -> np.ndarray:
    """Array of length 2^k: entry j is Pr[measured qubits read index_to_bits(j, k)]."""
    qubits = list(qubits)
    _check_targets(state.num_qubits, qubits)
    psi = _to_front(state.amplitudes, state.num_qubits, qubits).reshape(1 << len(qubits), -1)
    return np.sum(np.abs(psi) ** 2, axis=1)


def probabilities(state: StateVector, qubits: Optional[Sequence[int]] = None) -> Dict[str, float]:
    if qubits is None:
        qubits = range(state.num_qubits)
    qubits = list(qubits)
    probs = marginal_probabilities(state, qubits)
    return {index_to_bits(j, len(qubits)): float(p) for j, p in enumerate(probs) if p > 0.0}


def _sample_indices(probs: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    idx = np.searchsorted(cdf, rng.random(shots), side="right")
    return np.minimum(idx, len(probs) - 1)


def measure(state: StateVector, qubits: Sequence[int], rng: np.random.Generator) -> MeasurementOutcome:
    qubits = list(qubits)
    probs = marginal_probabilities(state, qubits)
    k = len(qubits)
    outcome = int(_sample_indices(probs, 1, rng)[0])
    bits = index_to_bits(outcome, k)
    p = float(probs[outcome])

    rest = state.num_qubits - k
    if rest == 0:
        log.debug("measured all %d qubits -> %s (p=%.6f)", k, bits, p)
        return MeasurementOutcome(bits, p, None)

    psi = _to_front(state.amplitudes, state.num_qubits, qubits).reshape(1 << k, -1)
    remaining = psi[outcome] / np.sqrt(p)
    log.debug("measured qubits %s -> %s (p=%.6f)", qubits, bits, p)
    return MeasurementOutcome(bits, p, StateVector(rest, remaining.copy()).check_norm())


def measure_all(state: StateVector, rng: np.random.Generator) -> MeasurementOutcome:
    return measure(state, range(state.num_qubits), rng)


def sample_counts(state: StateVector, qubits: Sequence[int], shots: int,
                  rng: np.random.Generator) -> Dict[str, int]:
    """Outcomes of `shots` independent measurements of identically prepared copies."""
    if shots < 0:
        raise ArgumentError(f"negative shot count {shots}")
    qubits = list(qubits)
    probs = marginal_probabilities(state, qubits)
    counts = np.bincount(_sample_indices(probs, shots, rng), minlength=len(probs))
    return {index_to_bits(j, len(qubits)): int(c) for j, c in enumerate(counts) if c}
