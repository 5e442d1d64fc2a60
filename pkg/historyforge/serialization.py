"""
JSON files for history sets and reports, CSV for tables.

History-set schema::

    {
      "dimension": 3,
      "initial_state": {"type": "pure" | "mixed", "data": [[re, im], ...]},
      "histories": {"type": "operators", "ops": [matrix, ...]}
                 | {"type": "chain", "decompositions": [[matrix, ...], ...]},
      "labels": ["...", ...],
      "homogeneous": true
    }

Complex entries are [re, im] pairs (a bare number is read as real); matrices are
row-major nested lists.
"""

import json
import math

import numpy as np
import pandas as pd
from rich.console import Console

from .histories import ClassOperator, HistorySet, chain_history_set
from .linalg import DensityMatrix, Projector
from .utils import STYLES, HistoryForgeError, SchemaError, write_atomic

console = Console()

SCHEMA_KEYS = ("dimension", "initial_state", "histories")
FLOAT_FORMAT = "%.17g"


def encode_complex(value) -> list[float]:
    value = complex(value)
    return [float(value.real), float(value.imag)]


def encode_vector(vector) -> list[list[float]]:
    return [encode_complex(value) for value in np.asarray(vector).ravel()]


def encode_matrix(matrix) -> list[list[list[float]]]:
    return [encode_vector(row) for row in np.asarray(matrix)]


def decode_complex(value, field: str) -> complex:
    if isinstance(value, bool):
        raise SchemaError("Expected a number or an [re, im] pair.", field=field)
    if isinstance(value, (int, float)):
        result = complex(value, 0.0)
    elif (
        isinstance(value, list)
        and len(value) == 2
        and all(isinstance(part, (int, float)) and not isinstance(part, bool) for part in value)
    ):
        result = complex(value[0], value[1])
    else:
        raise SchemaError("Expected a number or an [re, im] pair.", field=field)
    if not (math.isfinite(result.real) and math.isfinite(result.imag)):
        raise SchemaError("Non-finite number.", field=field)
    return result


def decode_vector(value, field: str, dim: int) -> np.ndarray:
    if not isinstance(value, list) or len(value) != dim:
        raise SchemaError(f"Expected a vector of length {dim}.", field=field)
    return np.array([decode_complex(item, f"{field}[{i}]") for i, item in enumerate(value)])


def decode_matrix(value, field: str, dim: int) -> np.ndarray:
    if not isinstance(value, list) or len(value) != dim:
        raise SchemaError(f"Expected a {dim}x{dim} matrix with {dim} rows.", field=field)
    rows = []
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != dim:
            raise SchemaError(
                f"Row {i} must have {dim} entries; the matrix is not square.", field=f"{field}[{i}]"
            )
        rows.append([decode_complex(item, f"{field}[{i}][{j}]") for j, item in enumerate(row)])
    return np.array(rows, dtype=complex)


def history_set_to_dict(history_set: HistorySet) -> dict:
    initial = history_set.initial
    if initial.vector is not None:
        state = {"type": "pure", "data": encode_vector(initial.vector)}
    else:
        state = {"type": "mixed", "data": encode_matrix(initial.matrix)}
    if history_set.decompositions is not None:
        histories = {
            "type": "chain",
            "decompositions": [
                [encode_matrix(projector.matrix) for projector in decomposition]
                for decomposition in history_set.decompositions
            ],
        }
    else:
        histories = {"type": "operators", "ops": [encode_matrix(op.matrix) for op in history_set.ops]}
    return {
        "dimension": history_set.dimension,
        "initial_state": state,
        "histories": histories,
        "labels": list(history_set.labels),
        "homogeneous": bool(history_set.homogeneous),
    }


def _require(mapping: dict, key: str, field: str):
    if not isinstance(mapping, dict):
        raise SchemaError("Expected an object.", field=field or "<root>")
    if key not in mapping:
        raise SchemaError("Missing required field.", field=f"{field}.{key}" if field else key)
    return mapping[key]


def _decode_initial_state(data: dict, dim: int) -> DensityMatrix:
    kind = _require(data, "type", "initial_state")
    raw = _require(data, "data", "initial_state")
    try:
        if kind == "pure":
            return DensityMatrix.from_state(decode_vector(raw, "initial_state.data", dim))
        if kind == "mixed":
            return DensityMatrix.from_matrix(decode_matrix(raw, "initial_state.data", dim))
    except SchemaError:
        raise
    except HistoryForgeError as error:
        raise SchemaError(str(error), field="initial_state.data") from error
    raise SchemaError(f"Unknown state type '{kind}'; expected 'pure' or 'mixed'.", field="initial_state.type")


def history_set_from_dict(data: dict) -> HistorySet:
    """
    Builds a HistorySet from the parsed schema.
    Raises:
        SchemaError: On missing or malformed fields, with the dotted field path.
    """
    for key in SCHEMA_KEYS:
        _require(data, key, "")
    dim = data["dimension"]
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise SchemaError("dimension must be a positive integer.", field="dimension")
    initial = _decode_initial_state(data["initial_state"], dim)

    labels = data.get("labels") or None
    if labels is not None and (
        not isinstance(labels, list) or not all(isinstance(label, str) for label in labels)
    ):
        raise SchemaError("labels must be a list of strings.", field="labels")
    homogeneous = data.get("homogeneous", False)
    if not isinstance(homogeneous, bool):
        raise SchemaError("homogeneous must be true or false.", field="homogeneous")

    histories = data["histories"]
    kind = _require(histories, "type", "histories")
    try:
        if kind == "operators":
            raw_ops = _require(histories, "ops", "histories")
            if not isinstance(raw_ops, list) or not raw_ops:
                raise SchemaError("ops must be a non-empty list.", field="histories.ops")
            ops = [
                ClassOperator(decode_matrix(op, f"histories.ops[{i}]", dim))
                for i, op in enumerate(raw_ops)
            ]
            return HistorySet(initial, ops, labels or [], homogeneous=homogeneous)
        if kind == "chain":
            raw_steps = _require(histories, "decompositions", "histories")
            if not isinstance(raw_steps, list) or not raw_steps:
                raise SchemaError(
                    "decompositions must be a non-empty list.", field="histories.decompositions"
                )
            decompositions = []
            for k, step in enumerate(raw_steps):
                field = f"histories.decompositions[{k}]"
                if not isinstance(step, list) or not step:
                    raise SchemaError("Each step must be a non-empty list of projectors.", field=field)
                decompositions.append(
                    [
                        _decode_projector(matrix, f"{field}[{j}]", dim)
                        for j, matrix in enumerate(step)
                    ]
                )
            return chain_history_set(initial, decompositions, labels)
    except SchemaError:
        raise
    except HistoryForgeError as error:
        raise SchemaError(str(error), field="histories") from error
    raise SchemaError(
        f"Unknown histories type '{kind}'; expected 'operators' or 'chain'.", field="histories.type"
    )


def _decode_projector(raw, field: str, dim: int) -> Projector:
    matrix = decode_matrix(raw, field, dim)
    try:
        return Projector.from_matrix(matrix)
    except HistoryForgeError as error:
        raise SchemaError(str(error), field=field) from error


def read_json(path: str) -> dict:
    """
    Raises:
        SchemaError: On invalid JSON, with the line number of the parse error,
            or on bytes that are not UTF-8.
    """
    try:
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    except UnicodeDecodeError as error:
        raise SchemaError(f"'{path}' is not valid UTF-8: {error.reason}") from error
    except json.JSONDecodeError as error:
        raise SchemaError(f"Invalid JSON in '{path}': {error.msg}", line=error.lineno) from error


def load_history_set(path: str, debug: bool = False) -> HistorySet:
    """
    Reads a history-set file.
    Args:
        path (str): JSON file following the history-set schema.
        debug (bool): If True, prints what was read.
    Returns:
        HistorySet: The validated set.
    Raises:
        SchemaError: On malformed content.
    """
    history_set = history_set_from_dict(read_json(path))
    if debug:
        console.print(
            f"[{STYLES['debug']}]Read {history_set.n} histories of dimension {history_set.dimension} "
            f"({history_set.initial.kind} initial state) from {path}[/{STYLES['debug']}]"
        )
    return history_set


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, complex):
        return encode_complex(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def _finite(value):
    # JSON has no inf/nan; write them as strings
    if isinstance(value, float) and not math.isfinite(value):
        return "inf" if value > 0 else ("-inf" if value < 0 else "nan")
    if isinstance(value, dict):
        return {key: _finite(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(item) for item in value]
    return value


def dump_json(data: dict, path: str) -> None:
    write_atomic(path, json.dumps(_finite(data), indent=2, default=_json_default) + "\n")


def dump_history_set(history_set: HistorySet, path: str) -> None:
    dump_json(history_set_to_dict(history_set), path)


def write_table(frame: pd.DataFrame, path: str) -> None:
    """CSV with '.' decimals and 17 significant digits."""
    write_atomic(path, frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n"))
