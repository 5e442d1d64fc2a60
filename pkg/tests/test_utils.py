import os

import pytest
import click
from unittest.mock import MagicMock
from rich.console import Console
from historyforge.utils import (
    STYLES,
    HistoryForgeError,
    ParameterRangeError,
    SchemaError,
    parse_int_range,
    parse_number,
    parse_number_list,
    report_error,
    write_atomic,
)


def test_parse_number_decimal():
    assert parse_number("0.25") == 0.25


def test_parse_number_fraction():
    assert parse_number("1/6") == pytest.approx(1 / 6, rel=1e-15)


def test_parse_number_invalid():
    with pytest.raises(click.BadParameter):
        parse_number("one sixth")


def test_parse_number_zero_denominator():
    with pytest.raises(click.BadParameter):
        parse_number("1/0")


def test_parse_number_list():
    assert parse_number_list("0.05, 1/4,0.2") == [0.05, 0.25, 0.2]


def test_parse_number_list_empty():
    with pytest.raises(click.BadParameter):
        parse_number_list(" , ")


def test_parse_int_range_dots():
    assert parse_int_range("3..6") == [3, 4, 5, 6]


def test_parse_int_range_list():
    assert parse_int_range("3,4,8") == [3, 4, 8]


def test_parse_int_range_single():
    assert parse_int_range("12") == [12]


def test_parse_int_range_empty():
    with pytest.raises(click.BadParameter):
        parse_int_range("5..3")


def test_parse_int_range_malformed():
    with pytest.raises(click.BadParameter):
        parse_int_range("a..b")


def test_error_details_are_kept():
    error = ParameterRangeError("bad epsilon", epsilon=2.0)
    assert isinstance(error, HistoryForgeError)
    assert isinstance(error, ValueError)
    assert error.details == {"epsilon": 2.0}
    assert str(error) == "bad epsilon"


def test_schema_error_mentions_field_and_line():
    error = SchemaError("Missing required field.", field="initial_state.data", line=4)
    assert "field 'initial_state.data'" in str(error)
    assert "line 4" in str(error)
    assert error.details == {"field": "initial_state.data", "line": 4}


def test_schema_error_without_location():
    assert str(SchemaError("Broken.")) == "Broken."


def test_write_atomic_creates_file(tmp_path):
    target = tmp_path / "nested" / "out.json"
    write_atomic(str(target), "{}\n")
    assert target.read_text() == "{}\n"
    assert [p.name for p in target.parent.iterdir()] == ["out.json"]


def test_write_atomic_replaces_existing(tmp_path):
    target = tmp_path / "out.csv"
    target.write_text("old")
    write_atomic(str(target), "new")
    assert target.read_text() == "new"


def test_write_atomic_cleans_up_on_failure(tmp_path, mocker):
    mocker.patch("historyforge.utils.os.replace", side_effect=OSError("disk full"))
    target = tmp_path / "out.csv"
    with pytest.raises(OSError):
        write_atomic(str(target), "data")
    assert os.listdir(tmp_path) == []


def test_report_error_prints_message():
    mock_console = MagicMock(spec=Console)
    report_error(mock_console, ParameterRangeError("bad", n=3), debug=False)
    mock_console.print.assert_called_once_with(
        f"[{STYLES['error']}]Error: bad[/{STYLES['error']}]"
    )


def test_report_error_debug_prints_details():
    mock_console = MagicMock(spec=Console)
    report_error(mock_console, ParameterRangeError("bad", n=3), debug=True)
    assert mock_console.print.call_count == 2
    mock_console.print.assert_any_call(f"[{STYLES['dim']}]{{'n': 3}}[/]")
