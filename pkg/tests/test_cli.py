"""
Command-line surface:
- one JSON record per result on stdout, human summary on stderr
- exit codes 0 ok, 1 bad input, 2 resource cap, 3 algorithm failure
"""
from pathlib import Path

import orjson
import pytest

from cli import EXIT_FAILURE, EXIT_OK, EXIT_RESOURCE, EXIT_VALIDATION, main
from config import SEED_ENV_VAR
from records import read_jsonl


@pytest.fixture(autouse=True)
def no_seed_env(monkeypatch):
    monkeypatch.delenv(SEED_ENV_VAR, raising=False)


def records(out: str):
    return [orjson.loads(line) for line in out.splitlines() if line.strip()]


# =============================================================================
# Records and output
# =============================================================================

def test_laplace_record(capsys):
    assert main(["laplace", "--history", "111", "--json"]) == EXIT_OK
    out, err = capsys.readouterr()
    [rec] = records(out)
    assert rec["command"] == "laplace"
    assert rec["seed"] == 0
    assert rec["result"]["exact"] == "4/5"
    assert rec["result"]["p_one"] == pytest.approx(0.8)
    assert set(rec) == {"command", "params", "seed", "started", "elapsed", "result"}
    assert err == ""


def test_human_summary_on_stderr(capsys):
    assert main(["laplace", "--ones", "0", "--total", "0"]) == EXIT_OK
    _, err = capsys.readouterr()
    assert err.startswith("laplace:")
    assert "exact=1/2" in err


def test_seed_from_environment(capsys, monkeypatch):
    monkeypatch.setenv(SEED_ENV_VAR, "77")
    assert main(["laplace", "--history", "1", "--json"]) == EXIT_OK
    assert records(capsys.readouterr().out)[0]["seed"] == 77
    assert main(["--seed", "5", "laplace", "--history", "1", "--json"]) == EXIT_OK
    assert records(capsys.readouterr().out)[0]["seed"] == 5


def test_deutsch_jozsa(capsys):
    assert main(["dj", "--oracle", "balanced-bit0", "--n", "3", "--json"]) == EXIT_OK
    [rec] = records(capsys.readouterr().out)
    assert rec["result"]["verdict"] == "BALANCED"
    assert rec["params"]["oracle"] == "balanced-bit0"


def test_repeats_give_one_record_each(capsys):
    assert main(["dj-estimate", "--oracle", "constant0", "--n", "2", "--epsilon", "0.2",
                 "--repeats", "3", "--json"]) == EXIT_OK
    recs = records(capsys.readouterr().out)
    assert [r["result"]["repeat"] for r in recs] == [0, 1, 2]
    assert all(r["result"]["fraction"] == 0.0 for r in recs)


def test_prior_classical_on_sk2(capsys):
    assert main(["prior", "classical", "101", "--json"]) == EXIT_OK
    [rec] = records(capsys.readouterr().out)
    assert rec["command"] == "prior classical"
    assert rec["result"]["value"] == 0.0
    assert rec["result"]["machine_id"] == "sk2"


def test_prior_on_named_machine(capsys):
    assert main(["prior", "classical", "1", "--machine", "echo", "--json"]) == EXIT_OK
    [rec] = records(capsys.readouterr().out)
    assert rec["result"]["value"] == pytest.approx(0.25)


def test_machine_run(capsys):
    assert main(["machine", "run", "0100", "0111", "--budget", "7", "--json"]) == EXIT_OK
    recs = records(capsys.readouterr().out)
    assert [r["result"]["output"] for r in recs] == ["10", "1111"]
    assert [r["result"]["status"] for r in recs] == ["HALTED", "BUDGET_EXHAUSTED"]


def test_episode_log(tmp_path, capsys):
    log_path = tmp_path / "episode.jsonl"
    assert main(["agent", "episode", "--env", "match-last", "--agent", "random", "--steps", "5",
                 "--log", str(log_path), "--json"]) == EXIT_OK
    [rec] = records(capsys.readouterr().out)
    logged = list(read_jsonl(str(log_path)))
    assert [s["step"] for s in logged] == [1, 2, 3, 4, 5]
    assert rec["result"]["total_reward"] == sum(s["reward"] for s in logged)


# =============================================================================
# Exit codes
# =============================================================================

def test_unknown_command(capsys):
    assert main(["teleport"]) == EXIT_VALIDATION


def test_prime_to_shor(capsys):
    assert main(["shor", "13", "--json"]) == EXIT_VALIDATION
    assert "prime" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    assert main(["--config", str(tmp_path / "nope.yaml"), "laplace", "--history", "1"]) == EXIT_VALIDATION


def test_malformed_config_file(tmp_path, capsys):
    path = tmp_path / "broken.yaml"
    path.write_text("prior: {k: [1, 2\n", encoding="utf-8")
    assert main(["--config", str(path), "laplace", "--history", "1"]) == EXIT_VALIDATION
    assert "not valid YAML" in capsys.readouterr().err


def test_qubit_cap(capsys):
    assert main(["--max-qubits", "5", "count", "--oracle", "marked=101", "--n", "3",
                 "--precision", "6", "--json"]) == EXIT_RESOURCE


def test_algorithm_failure_record(capsys):
    assert main(["grover", "--oracle", "constant0", "--n", "2", "--solutions", "1", "--json"]) == EXIT_FAILURE
    [rec] = records(capsys.readouterr().out)
    assert "error" in rec
    assert len(rec["attempts"]) == 10


# =============================================================================
# Reproducibility
# =============================================================================

ADD_TM = str(Path(__file__).resolve().parents[1] / "qspeed" / "machines" / "add.tm")

EVERY_SUBCOMMAND = [
    ["dj", "--oracle", "balanced-bit0", "--n", "3"],
    ["dj-estimate", "--oracle", "marked=101", "--n", "3", "--epsilon", "0.1", "--repeats", "2"],
    ["grover", "--oracle", "marked=1011", "--n", "4", "--solutions", "1"],
    ["count", "--oracle", "marked=001,110", "--n", "3", "--precision", "3"],
    ["phase", "--omega", "0.3", "--precision", "3", "--repeats", "2"],
    ["qft", "101"],
    ["shor", "15"],
    ["machine", "run", "0100", "0111", "--budget", "7"],
    ["machine", "tm", ADD_TM, "--tape", "11#111"],
    ["kolmogorov", "1111", "--max-len", "4", "--phase", "10"],
    ["prior", "classical", "1111"],
    ["prior", "qcount", "10", "--machine", "echo", "--precision", "4"],
    ["prior", "dj", "01", "--machine", "echo", "--repeats", "2"],
    ["prior", "conditional", "0", "1", "--machine", "echo"],
    ["prior", "conditional", "0", "1", "--machine", "echo", "--method", "dj_sampling"],
    ["prior", "quasi", "101", "1", "--machine", "echo"],
    ["prior", "quasi", "--gap-table", "--max-len", "1", "--machine", "echo"],
    ["laplace", "--history", "0110"],
    ["agent", "act", "--percepts", "01", "--actions", "1", "--horizon", "2"],
    ["agent", "act", "--percepts", "01", "--actions", "1", "--kind", "aixiq", "--epsilon", "0.1", "--horizon", "2"],
    ["agent", "episode", "--env", "coin", "--agent", "random", "--steps", "10"],
    ["agent", "episode", "--agent", "aixi-spd", "--steps", "4"],
    ["agent", "episode", "--agent", "aixiq", "--epsilon", "0.2", "--steps", "2"],
]


def run_twice(argv, capsys):
    outputs = []
    for _ in range(2):
        code = main(argv + ["--seed", "3", "--json"])
        recs = records(capsys.readouterr().out)
        for rec in recs:
            rec.pop("started", None)
            rec.pop("elapsed", None)
        outputs.append((code, recs))
    return outputs


@pytest.mark.parametrize("argv", EVERY_SUBCOMMAND, ids=lambda argv: " ".join(argv[:2]))
def test_same_seed_same_records(argv, capsys):
    first, second = run_twice(argv, capsys)
    assert first[0] == EXIT_OK
    assert first[1]
    assert first == second
