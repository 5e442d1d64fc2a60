import json

import numpy as np
import pandas as pd
import pytest
from historyforge.generators import AppendixDParams, ZenoParams, appendix_d_set, zeno_set
from historyforge.histories import ClassOperator, HistorySet, decoherence_matrix
from historyforge.linalg import DensityMatrix
from historyforge.serialization import (
    decode_complex,
    dump_history_set,
    dump_json,
    history_set_from_dict,
    history_set_to_dict,
    load_history_set,
    read_json,
    write_table,
)
from historyforge.utils import SchemaError


@pytest.fixture
def pure_document():
    return {
        "dimension": 2,
        "initial_state": {"type": "pure", "data": [1, 0]},
        "histories": {
            "type": "operators",
            "ops": [[[1, 0], [0, 0]], [[0, 0], [0, 1]]],
        },
        "labels": ["up", "down"],
        "homogeneous": True,
    }


def assert_same_set(left, right):
    assert left.labels == right.labels
    assert left.homogeneous == right.homogeneous
    np.testing.assert_allclose(left.initial.matrix, right.initial.matrix, atol=1e-14)
    for first, second in zip(left.ops, right.ops):
        np.testing.assert_allclose(first.matrix, second.matrix, atol=1e-14)
    np.testing.assert_allclose(
        decoherence_matrix(left).entries, decoherence_matrix(right).entries, atol=1e-14
    )


def test_round_trip_operators(tmp_path):
    history_set = appendix_d_set(AppendixDParams(3, 0.2)).history_set
    path = tmp_path / "appendix_d.json"
    dump_history_set(history_set, str(path))
    loaded = load_history_set(str(path))
    assert history_set_to_dict(history_set)["histories"]["type"] == "operators"
    assert_same_set(history_set, loaded)


def test_round_trip_chain(tmp_path):
    history_set = zeno_set(ZenoParams(3, 0.25))
    path = tmp_path / "zeno.json"
    dump_history_set(history_set, str(path))
    assert json.loads(path.read_text())["histories"]["type"] == "chain"
    loaded = load_history_set(str(path))
    assert loaded.decompositions is not None
    assert_same_set(history_set, loaded)


def test_round_trip_mixed(tmp_path):
    rho = DensityMatrix.from_matrix(np.diag([0.5, 0.3, 0.2]))
    ops = [ClassOperator.raw(np.diag([1.0, 0.0, 0.0])), ClassOperator.raw(np.diag([0.0, 1.0, 1.0]))]
    history_set = HistorySet(rho, ops, ["a", "b"])
    path = tmp_path / "mixed.json"
    dump_history_set(history_set, str(path))
    assert json.loads(path.read_text())["initial_state"]["type"] == "mixed"
    assert_same_set(history_set, load_history_set(str(path)))


def test_complex_pairs(pure_document):
    pure_document["initial_state"]["data"] = [[0.6, 0.0], [0.0, 0.8]]
    history_set = history_set_from_dict(pure_document)
    np.testing.assert_allclose(history_set.initial.vector, [0.6, 0.8j])


def test_default_labels(pure_document):
    del pure_document["labels"]
    assert history_set_from_dict(pure_document).labels == ["h0", "h1"]


def test_decode_complex_rejects():
    with pytest.raises(SchemaError):
        decode_complex(True, "x")
    with pytest.raises(SchemaError):
        decode_complex([1, 2, 3], "x")
    with pytest.raises(SchemaError):
        decode_complex(float("nan"), "x")


def test_missing_field(pure_document):
    del pure_document["histories"]
    with pytest.raises(SchemaError) as error:
        history_set_from_dict(pure_document)
    assert error.value.details["field"] == "histories"


def test_non_square_matrix(pure_document):
    pure_document["histories"]["ops"][1] = [[0, 0], [0]]
    with pytest.raises(SchemaError) as error:
        history_set_from_dict(pure_document)
    assert "not square" in str(error.value)
    assert error.value.details["field"] == "histories.ops[1][1]"


def test_bad_entry_path(pure_document):
    pure_document["histories"]["ops"][0][1][0] = "zero"
    with pytest.raises(SchemaError) as error:
        history_set_from_dict(pure_document)
    assert error.value.details["field"] == "histories.ops[0][1][0]"


def test_unknown_types(pure_document):
    pure_document["histories"]["type"] = "paths"
    with pytest.raises(SchemaError, match="Unknown histories type"):
        history_set_from_dict(pure_document)
    pure_document["histories"]["type"] = "operators"
    pure_document["initial_state"]["type"] = "thermal"
    with pytest.raises(SchemaError, match="Unknown state type"):
        history_set_from_dict(pure_document)


def test_invalid_state_wrapped(pure_document):
    pure_document["initial_state"] = {"type": "mixed", "data": [[1, 0], [0, 1]]}
    with pytest.raises(SchemaError) as error:
        history_set_from_dict(pure_document)
    assert error.value.details["field"] == "initial_state.data"


def test_invalid_projector_in_chain(pure_document):
    pure_document["histories"] = {
        "type": "chain",
        "decompositions": [[[[1, 0], [0, 0]], [[0, 0], [0, 2]]]],
    }
    with pytest.raises(SchemaError) as error:
        history_set_from_dict(pure_document)
    assert error.value.details["field"] == "histories.decompositions[0][1]"


def test_bad_dimension(pure_document):
    pure_document["dimension"] = "two"
    with pytest.raises(SchemaError):
        history_set_from_dict(pure_document)


def test_invalid_json_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "dimension": 2,\n  "initial_state": ]\n}\n')
    with pytest.raises(SchemaError) as error:
        read_json(str(path))
    assert error.value.details["line"] == 3
    assert "line 3" in str(error.value)


def test_dump_json_non_finite(tmp_path):
    path = tmp_path / "report.json"
    dump_json({"achieved": float("inf"), "values": [np.float64(0.5), float("nan")]}, str(path))
    assert json.loads(path.read_text()) == {"achieved": "inf", "values": [0.5, "nan"]}


def test_write_table(tmp_path):
    path = tmp_path / "table.csv"
    write_table(pd.DataFrame({"n": [1, 2], "value": [0.1, 1 / 3]}), str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "n,value"
    assert lines[1] == "1,0.10000000000000001"
    assert float(lines[2].split(",")[1]) == 1 / 3


def test_non_utf8_file(tmp_path):
    path = tmp_path / "latin.json"
    path.write_bytes(b'\xff\xfe{"dimension": 2}')
    with pytest.raises(SchemaError, match="not valid UTF-8"):
        read_json(str(path))
