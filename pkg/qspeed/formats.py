"""Text formats: TMSpec files, program files and oracle tables."""
from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Tuple

from errors import ValidationError
from machine import TMSpec, check_program
from qsim import OracleSpec, bits_to_index

TM_COMMENT = ";"
ORACLE_COMMENT = "#"
_HEADER_KEYS = ("name", "alphabet", "blank", "states", "start", "final")


def parse_tm(text: str) -> TMSpec:
    """Header lines `key: value`, then one `state symbol -> symbol state L|R` per line.

    `;` starts a comment (the blank symbol is usually `#`).
    """
    header: Dict[str, str] = {}
    transitions: Dict[Tuple[str, str], Tuple[str, str, str]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split(TM_COMMENT, 1)[0].strip()
        if not line:
            continue
        if "->" in line:
            left, right = (part.split() for part in line.split("->", 1))
            if len(left) != 2 or len(right) != 3:
                raise ValidationError(f"line {lineno}: expected 'state symbol -> symbol state L|R'")
            key = (left[0], left[1])
            if key in transitions:
                raise ValidationError(f"line {lineno}: second transition for {key}")
            transitions[key] = (right[0], right[1], right[2])
            continue
        key, sep, value = line.partition(":")
        key = key.strip()
        if not sep or key not in _HEADER_KEYS:
            raise ValidationError(f"line {lineno}: unknown header {line!r}")
        header[key] = value.strip()

    missing = [k for k in _HEADER_KEYS[1:] if k not in header]
    if missing:
        raise ValidationError(f"TM file lacks {', '.join(missing)}")
    return TMSpec(
        alphabet=tuple(header["alphabet"].split()),
        blank=header["blank"],
        states=tuple(header["states"].split()),
        start=header["start"],
        final=header["final"],
        transitions=transitions,
        name=header.get("name", ""),
    )


def serialize_tm(spec: TMSpec) -> str:
    lines: List[str] = []
    if spec.name:
        lines.append(f"name: {spec.name}")
    lines += [
        f"alphabet: {' '.join(spec.alphabet)}",
        f"blank: {spec.blank}",
        f"states: {' '.join(spec.states)}",
        f"start: {spec.start}",
        f"final: {spec.final}",
    ]
    order = sorted(
        spec.transitions,
        key=lambda k: (spec.states.index(k[0]), spec.alphabet.index(k[1])),
    )
    for state, symbol in order:
        write, nxt, move = spec.transitions[(state, symbol)]
        lines.append(f"{state} {symbol} -> {write} {nxt} {move}")
    return "\n".join(lines) + "\n"


def load_tm(path: str) -> TMSpec:
    spec = parse_tm(Path(path).read_text(encoding="utf-8"))
    if not spec.name:
        spec.name = Path(path).stem
    return spec


def save_tm(path: str, spec: TMSpec) -> None:
    Path(path).write_text(serialize_tm(spec), encoding="utf-8")


def parse_programs(text: str) -> List[str]:
    programs: List[str] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split(ORACLE_COMMENT, 1)[0].strip()
        if not line:
            continue
        try:
            programs.append(check_program(line))
        except ValidationError as e:
            raise ValidationError(f"line {lineno}: {e}") from None
    return programs


def load_programs(path: str) -> List[str]:
    return parse_programs(Path(path).read_text(encoding="utf-8"))


def parse_oracle_table(text: str) -> OracleSpec:
    """One `input output` pair per line (`010 1`), each input of the arity exactly once."""
    pairs: Dict[str, int] = {}
    arity = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split(ORACLE_COMMENT, 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2 or parts[1] not in ("0", "1"):
            raise ValidationError(f"line {lineno}: expected 'input output'")
        bits = check_program(parts[0])
        if arity is None:
            arity = len(bits)
        if len(bits) != arity or not bits:
            raise ValidationError(f"line {lineno}: input {bits!r} is not {arity} bits")
        if bits in pairs:
            raise ValidationError(f"line {lineno}: input {bits} listed twice")
        pairs[bits] = int(parts[1])
    if arity is None or len(pairs) != 1 << arity:
        raise ValidationError("oracle table must list every input exactly once")
    table = [0] * (1 << arity)
    for bits, value in pairs.items():
        table[bits_to_index(bits)] = value
    return OracleSpec(arity, tuple(table))


def load_oracle_table(path: str) -> OracleSpec:
    return parse_oracle_table(Path(path).read_text(encoding="utf-8"))
