import pytest

import machine
from errors import ValidationError
from formats import (
    load_oracle_table,
    load_programs,
    load_tm,
    parse_oracle_table,
    parse_programs,
    parse_tm,
    save_tm,
    serialize_tm,
)


@pytest.mark.parametrize("spec", list(machine.FIXTURES.values()), ids=list(machine.FIXTURES))
def test_shipped_files_match_fixtures(spec, machines_dir):
    path = machines_dir / f"{spec.name}.tm"
    assert load_tm(str(path)) == spec
    assert path.read_text(encoding="utf-8") == serialize_tm(spec)


def test_canonical_text_survives(machines_dir):
    text = (machines_dir / "echo.tm").read_text(encoding="utf-8")
    assert serialize_tm(parse_tm(text)) == text


def test_comments_and_blank_lines():
    text = """
    ; two-state scanner
    alphabet: # 1
    blank: #   ; blank symbol
    states: q0 qf
    start: q0
    final: qf

    q0 1 -> 1 q0 R
    """
    spec = parse_tm(text)
    assert spec.transitions == {("q0", "1"): ("1", "q0", "R")}
    assert spec.name == ""


def test_missing_header():
    with pytest.raises(ValidationError):
        parse_tm("alphabet: # 1\nblank: #\nstates: q0 qf\nstart: q0\n")


def test_bad_transition_line():
    with pytest.raises(ValidationError):
        parse_tm("alphabet: # 1\nblank: #\nstates: q0 qf\nstart: q0\nfinal: qf\nq0 1 -> 1 R\n")


def test_duplicate_transition():
    text = "alphabet: # 1\nblank: #\nstates: q0 qf\nstart: q0\nfinal: qf\nq0 1 -> 1 q0 R\nq0 1 -> 1 qf R\n"
    with pytest.raises(ValidationError):
        parse_tm(text)


def test_load_tm_names_after_file(tmp_path):
    spec = machine.TMSpec(("#", "1"), "#", ("q0", "qf"), "q0", "qf", {("q0", "#"): ("1", "qf", "R")})
    path = tmp_path / "one_mark.tm"
    save_tm(str(path), spec)
    loaded = load_tm(str(path))
    assert loaded.name == "one_mark"
    assert loaded.transitions == spec.transitions


def test_programs_file(tmp_path):
    path = tmp_path / "progs.txt"
    path.write_text("# emitters\n0100\n\n0111  # loops\n", encoding="utf-8")
    assert load_programs(str(path)) == ["0100", "0111"]
    with pytest.raises(ValidationError):
        parse_programs("0102\n")


def test_oracle_table(tmp_path):
    path = tmp_path / "f.txt"
    path.write_text("# f(x) = x0 xor x1\n00 0\n01 1\n10 1\n11 0\n", encoding="utf-8")
    oracle = load_oracle_table(str(path))
    assert oracle.arity == 2
    assert oracle.table == (0, 1, 1, 0)


def test_oracle_table_must_be_total():
    with pytest.raises(ValidationError):
        parse_oracle_table("00 0\n01 1\n10 1\n")
    with pytest.raises(ValidationError):
        parse_oracle_table("00 0\n00 1\n10 1\n11 0\n")
    with pytest.raises(ValidationError):
        parse_oracle_table("00 0\n01 1\n101 1\n11 0\n")
    with pytest.raises(ValidationError):
        parse_oracle_table("00 2\n01 1\n10 1\n11 0\n")
