from fractions import Fraction

import numpy as np
import orjson

from agent import EnvKind
from machine import RunOutcome, RunStatus
from records import dumps_record, read_jsonl, to_payload, write_jsonl


def test_payload_of_scientific_values():
    payload = to_payload({
        "amp": 1 - 2j,
        "kind": EnvKind.BIASED_COIN,
        "value": Fraction(15, 64),
        "vec": np.array([1.0, 0.5]),
        "state": np.array([1j, 0]),
        "count": np.int64(3),
        3: (1, 2),
    })
    assert payload == {
        "amp": [1.0, -2.0],
        "kind": "BIASED_COIN",
        "value": "15/64",
        "vec": [1.0, 0.5],
        "state": [[0.0, 1.0], [0.0, 0.0]],
        "count": 3,
        "3": [1, 2],
    }


def test_payload_of_dataclass():
    payload = to_payload(RunOutcome(RunStatus.HALTED, "10", 2))
    assert payload == {"status": "HALTED", "output": "10", "steps": 2}


def test_records_are_sorted_json():
    line = dumps_record({"b": 1, "a": np.float64(0.5)})
    assert line == b'{"a":0.5,"b":1}'


def test_jsonl_round_trip(tmp_path):
    path = tmp_path / "logs" / "episode.jsonl"
    records = [{"step": 1, "reward": 0}, {"step": 2, "reward": 1}]
    assert write_jsonl(str(path), records) == 2
    assert list(read_jsonl(str(path))) == records


def test_read_skips_broken_lines(tmp_path):
    path = tmp_path / "mixed.jsonl"
    path.write_bytes(orjson.dumps({"ok": 1}) + b"\n\n{not json\n" + orjson.dumps({"ok": 2}) + b"\n")
    assert [r["ok"] for r in read_jsonl(str(path))] == [1, 2]
