"""Program semantics: the SK-2 reference machine, a Turing-machine interpreter,
the FAST phase schedule and the p ->_i x predicate."""
from __future__ import annotations

import itertools
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from typing import Dict, FrozenSet, Iterator, List, Optional, Tuple

from errors import ArgumentError, MissingTransition, ResourceLimitError, ValidationError

log = logging.getLogger("machine")

DEFAULT_OUTPUT_LIMIT = 64
KOLMOGOROV_CAP = 20
DEFAULT_TM_STEP_CAP = 100_000

MOVES = ("L", "R")


class RunStatus(Enum):
    HALTED = "HALTED"
    BUDGET_EXHAUSTED = "BUDGET_EXHAUSTED"
    REJECTED = "REJECTED"
    OUTPUT_LIMIT = "OUTPUT_LIMIT"


@dataclass(frozen=True)
class RunOutcome:
    status: RunStatus
    output: str
    steps: int


def check_program(bits: str) -> str:
    if any(b not in "01" for b in bits):
        raise ArgumentError(f"program must be a bit string, got {bits!r}")
    return bits


def programs_of_length(length: int) -> Iterator[str]:
    for combo in itertools.product("01", repeat=length):
        yield "".join(combo)


def phase_budget(phase: int, length: int) -> int:
    """floor(2^(i - l)): zero once the program is longer than the phase index."""
    return 1 << (phase - length) if phase >= length else 0


def first_phase_within(length: int, steps: int) -> int:
    """Smallest phase i whose budget for a length-l program covers `steps` (>= 1) steps."""
    return max(1, length + (steps - 1).bit_length())


class Machine(ABC):
    machine_id: str = "machine"

    @abstractmethod
    def run_bounded(self, program: str, budget: int, output_limit: Optional[int] = None) -> RunOutcome:
        ...

    @abstractmethod
    def first_emission(self, program: str, length: int) -> Tuple[str, Optional[int]]:
        """(first `length` output bits, step at which they are complete or None if never)."""

    def emits(self, program: str, budget: int, target: str) -> bool:
        """True iff the run within `budget` steps emits an output starting with `target`.

        Emitting anything takes at least one step, so a zero budget emits nothing.
        """
        if not target:
            return True
        prefix, needed = self.first_emission(check_program(program), len(target))
        return needed is not None and needed <= budget and prefix == target


# --- SK-2 reference machine ---

EMIT_0, EMIT_1, REPEAT, LOOP = "00", "01", "10", "11"


def sk2_opcodes(program: str) -> Tuple[str, ...]:
    """2-bit opcodes; a trailing odd bit is dropped."""
    return tuple(program[i:i + 2] for i in range(0, len(program) - 1, 2))


class SK2Machine(Machine):
    """00 EMIT-0, 01 EMIT-1, 10 REPEAT (last bit, 0 if none), 11 LOOP to start.

    One step per opcode, halts when the program is exhausted. A return to the
    start in an already-seen state with no output since then is a silent
    cycle: the run is fast-forwarded to the end of its budget.
    """

    machine_id = "sk2"

    def run_bounded(self, program: str, budget: int, output_limit: Optional[int] = None) -> RunOutcome:
        check_program(program)
        if budget < 0:
            raise ArgumentError(f"negative step budget {budget}")
        ops = sk2_opcodes(program)
        out: List[str] = []
        last: Optional[str] = None
        pc = 0
        steps = 0
        loop_states: Dict[Optional[str], Tuple[int, int]] = {}

        while True:
            if pc == len(ops):
                return RunOutcome(RunStatus.HALTED, "".join(out), steps)
            if steps >= budget:
                return RunOutcome(RunStatus.BUDGET_EXHAUSTED, "".join(out), steps)
            if output_limit is not None and len(out) >= output_limit:
                return RunOutcome(RunStatus.OUTPUT_LIMIT, "".join(out[:output_limit]), steps)

            op = ops[pc]
            steps += 1
            if op == LOOP:
                pc = 0
                seen = loop_states.get(last)
                if seen is not None:
                    prev_steps, prev_len = seen
                    cycle, emitted = steps - prev_steps, len(out) - prev_len
                    if emitted == 0:
                        return RunOutcome(RunStatus.BUDGET_EXHAUSTED, "".join(out), budget)
                    if output_limit is None:
                        # whole cycles fit before the budget runs out
                        block = out[prev_len:]
                        full = (budget - steps) // cycle
                        out.extend(block * full)
                        steps += full * cycle
                loop_states[last] = (steps, len(out))
                continue

            bit = "0" if op == EMIT_0 else "1" if op == EMIT_1 else (last or "0")
            out.append(bit)
            last = bit
            pc += 1

    @staticmethod
    @lru_cache(maxsize=1 << 18)
    def first_emission(program: str, length: int) -> Tuple[str, Optional[int]]:
        ops = sk2_opcodes(program)
        out: List[str] = []
        last: Optional[str] = None
        pc = steps = 0
        loop_states: Dict[Optional[str], int] = {}
        while pc < len(ops):
            op = ops[pc]
            steps += 1
            if op == LOOP:
                pc = 0
                if loop_states.get(last) == len(out):
                    break
                loop_states[last] = len(out)
                continue
            bit = "0" if op == EMIT_0 else "1" if op == EMIT_1 else (last or "0")
            out.append(bit)
            last = bit
            pc += 1
            if len(out) == length:
                return "".join(out), steps
        return "".join(out), None

    def halting_output(self, program: str) -> Optional[Tuple[str, int]]:
        """(output, steps) if the program halts at all; SK-2 halts iff it never loops."""
        ops = sk2_opcodes(check_program(program))
        if LOOP in ops:
            return None
        out = self.run_bounded(program, len(ops))
        return out.output, out.steps


SK2 = SK2Machine()


# --- p ->_i x ---

def outputs_within(program: str, phase: int, target: str, machine: Machine = SK2) -> bool:
    """p ->_i x: p emits x within floor(2^(i - l(p))) steps and no shorter prefix of p does."""
    if phase < 1:
        raise ArgumentError(f"phase index must be >= 1, got {phase}")
    check_program(program)
    if not machine.emits(program, phase_budget(phase, len(program)), target):
        return False
    for length in range(1, len(program)):
        if machine.emits(program[:length], phase_budget(phase, length), target):
            return False
    return True


def fast_phase(phase: int, max_len: int, machine: Machine = SK2,
               output_limit: Optional[int] = DEFAULT_OUTPUT_LIMIT) -> Dict[str, RunOutcome]:
    """PHASE i of FAST: every program with l(p) <= min(i, max_len) under its phase budget,
    in (length, bits) order."""
    if phase < 1:
        raise ArgumentError(f"phase index must be >= 1, got {phase}")
    runs: Dict[str, RunOutcome] = {}
    for length in range(1, min(phase, max_len) + 1):
        budget = phase_budget(phase, length)
        for program in programs_of_length(length):
            runs[program] = machine.run_bounded(program, budget, output_limit=output_limit)
    log.debug("phase %d: %d programs run", phase, len(runs))
    return runs


def kolmogorov_bounded(x: str, max_len: int, phase: int, machine: Machine = SK2) -> Optional[int]:
    """Shortest l(p) <= max_len whose phase-i run halts with output exactly x."""
    check_program(x)
    if max_len > KOLMOGOROV_CAP:
        raise ResourceLimitError(f"enumeration up to length {max_len} exceeds cap {KOLMOGOROV_CAP}")
    if phase < 1:
        raise ArgumentError(f"phase index must be >= 1, got {phase}")
    for length in range(0, max_len + 1):
        budget = phase_budget(phase, length)
        for program in programs_of_length(length):
            run = machine.run_bounded(program, budget, output_limit=len(x) + 1)
            if run.status == RunStatus.HALTED and run.output == x:
                log.debug("K bound for %r: %d via %r", x, length, program)
                return length
    return None


# --- Turing machines ---

@dataclass
class TMSpec:
    alphabet: Tuple[str, ...]
    blank: str
    states: Tuple[str, ...]
    start: str
    final: str
    transitions: Dict[Tuple[str, str], Tuple[str, str, str]] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        self.alphabet = tuple(self.alphabet)
        self.states = tuple(self.states)
        if self.blank not in self.alphabet:
            raise ValidationError(f"blank {self.blank!r} is not in the alphabet")
        if self.start not in self.states or self.final not in self.states:
            raise ValidationError("start and final states must be declared")
        if self.start == self.final:
            raise ValidationError("start and final state must differ")
        for (state, symbol), (write, nxt, move) in self.transitions.items():
            if state not in self.states or nxt not in self.states:
                raise ValidationError(f"undeclared state in {state} {symbol} -> {write} {nxt} {move}")
            if symbol not in self.alphabet or write not in self.alphabet:
                raise ValidationError(f"undeclared symbol in {state} {symbol} -> {write} {nxt} {move}")
            if move not in MOVES:
                raise ValidationError(f"move must be L or R, got {move!r}")
            if state == self.final:
                raise ValidationError("the final state has no outgoing transitions")


@dataclass(frozen=True)
class MachineConfig:
    tape: Dict[int, str]
    head: int
    state: str
    written: FrozenSet[int] = frozenset()
    steps_used: int = 0

    def read(self, blank: str) -> str:
        return self.tape.get(self.head, blank)


def initial_config(spec: TMSpec, tape: str, head: int = 0) -> MachineConfig:
    cells = {i: s for i, s in enumerate(tape) if s != spec.blank}
    for s in cells.values():
        if s not in spec.alphabet:
            raise ValidationError(f"tape symbol {s!r} is not in the alphabet")
    return MachineConfig(cells, head, spec.start)


def tm_step(spec: TMSpec, config: MachineConfig) -> MachineConfig:
    if config.state == spec.final:
        raise ArgumentError("the machine has already halted")
    symbol = config.read(spec.blank)
    try:
        write, nxt, move = spec.transitions[(config.state, symbol)]
    except KeyError:
        raise MissingTransition(f"no transition for ({config.state}, {symbol})") from None
    tape = dict(config.tape)
    if write == spec.blank:
        tape.pop(config.head, None)
    else:
        tape[config.head] = write
    head = config.head + (1 if move == "R" else -1)
    return replace(config, tape=tape, head=head, state=nxt, steps_used=config.steps_used + 1,
                   written=config.written | {config.head})


@dataclass(frozen=True)
class TMRun:
    status: RunStatus
    config: MachineConfig


def run_tm(spec: TMSpec, tape: str, budget: int, head: int = 0) -> TMRun:
    if budget < 0:
        raise ArgumentError(f"negative step budget {budget}")
    config = initial_config(spec, tape, head)
    while True:
        if config.state == spec.final:
            return TMRun(RunStatus.HALTED, config)
        if config.steps_used >= budget:
            return TMRun(RunStatus.BUDGET_EXHAUSTED, config)
        try:
            config = tm_step(spec, config)
        except MissingTransition as e:
            log.debug("%s: %s", spec.name or "tm", e)
            return TMRun(RunStatus.REJECTED, config)


def tape_string(config: MachineConfig, blank: str) -> str:
    if not config.tape:
        return ""
    lo, hi = min(config.tape), max(config.tape)
    return "".join(config.tape.get(i, blank) for i in range(lo, hi + 1))


def tape_support(config: MachineConfig) -> int:
    return len(config.tape)


def written_output(config: MachineConfig) -> str:
    """The 0/1 run from cell 0 over cells the machine itself has written."""
    out = []
    i = 0
    while i in config.written and config.tape.get(i) in ("0", "1"):
        out.append(config.tape[i])
        i += 1
    return "".join(out)


class TuringProgramMachine(Machine):
    """A TMSpec run on the program bits.

    The output is read only from cells the machine has written, so the program
    bits on the input tape count for nothing until the machine copies them.
    """

    def __init__(self, spec: TMSpec, step_cap: int = DEFAULT_TM_STEP_CAP):
        for s in "01":
            if s not in spec.alphabet:
                raise ValidationError(f"program machines need {s!r} in the alphabet")
        self.spec = spec
        self.step_cap = step_cap
        self.machine_id = spec.name or "tm"
        self._emissions: Dict[Tuple[str, int], Tuple[str, Optional[int]]] = {}

    def run_bounded(self, program: str, budget: int, output_limit: Optional[int] = None) -> RunOutcome:
        check_program(program)
        if budget < 0:
            raise ArgumentError(f"negative step budget {budget}")
        if budget > self.step_cap:
            log.debug("%s: budget %d cut to step cap %d", self.machine_id, budget, self.step_cap)
            budget = self.step_cap
        config = initial_config(self.spec, program)
        while True:
            output = written_output(config)
            if config.state == self.spec.final:
                return RunOutcome(RunStatus.HALTED, output, config.steps_used)
            if config.steps_used >= budget:
                return RunOutcome(RunStatus.BUDGET_EXHAUSTED, output, config.steps_used)
            if output_limit is not None and len(output) >= output_limit:
                return RunOutcome(RunStatus.OUTPUT_LIMIT, output[:output_limit], config.steps_used)
            try:
                config = tm_step(self.spec, config)
            except MissingTransition as e:
                log.debug("%s: %s", self.machine_id, e)
                return RunOutcome(RunStatus.REJECTED, output, config.steps_used)

    def first_emission(self, program: str, length: int) -> Tuple[str, Optional[int]]:
        """Runs longer than the step cap count as never completing."""
        key = (program, length)
        if key not in self._emissions:
            run = self.run_bounded(program, self.step_cap, output_limit=length)
            if len(run.output) >= length:
                self._emissions[key] = (run.output[:length], run.steps)
            else:
                self._emissions[key] = (run.output, None)
        return self._emissions[key]


# --- fixtures ---

ADD = TMSpec(
    alphabet=("#", "1"),
    blank="#",
    states=("q0", "q1", "q2", "qf"),
    start="q0",
    final="qf",
    transitions={
        ("q0", "1"): ("1", "q0", "R"),
        ("q0", "#"): ("1", "q1", "R"),
        ("q1", "1"): ("1", "q1", "R"),
        ("q1", "#"): ("#", "q2", "L"),
        ("q2", "1"): ("#", "qf", "R"),
    },
    name="add",
)

WRITE_ONES_FOREVER = TMSpec(
    alphabet=("#", "1"),
    blank="#",
    states=("q0", "qf"),
    start="q0",
    final="qf",
    transitions={
        ("q0", "#"): ("1", "q0", "R"),
        ("q0", "1"): ("1", "q0", "R"),
    },
    name="write_ones_forever",
)

OSCILLATOR = TMSpec(
    alphabet=("#", "1"),
    blank="#",
    states=("q0", "q1", "qf"),
    start="q0",
    final="qf",
    transitions={
        ("q0", "#"): ("1", "q1", "R"),
        ("q0", "1"): ("1", "q1", "R"),
        ("q1", "#"): ("1", "q0", "L"),
        ("q1", "1"): ("1", "q0", "L"),
    },
    name="oscillator",
)

ECHO = TMSpec(
    alphabet=("#", "0", "1"),
    blank="#",
    states=("q0", "qf"),
    start="q0",
    final="qf",
    transitions={
        ("q0", "#"): ("#", "qf", "R"),
        ("q0", "0"): ("0", "q0", "R"),
        ("q0", "1"): ("1", "q0", "R"),
    },
    name="echo",
)

FIXTURES = {spec.name: spec for spec in (ADD, ECHO, WRITE_ONES_FOREVER, OSCILLATOR)}
