import os
import tempfile
from fractions import Fraction
from typing import Any

import rich_click as click
from rich.console import Console

STYLES = {
    "info": "blue",
    "success": "green",
    "error": "bold red",
    "warning": "yellow",
    "debug": "cyan",
    "dim": "dim",
    "highlight": "bold magenta",
}


class HistoryForgeError(ValueError):
    """Base error. ``details`` carries the machine-readable context."""

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.details = details


class DimensionMismatchError(HistoryForgeError):
    pass


class ProjectorError(HistoryForgeError):
    pass


class DecompositionError(HistoryForgeError):
    pass


class NotPositiveError(HistoryForgeError):
    pass


class NotHermitianError(HistoryForgeError):
    pass


class NullBranchError(HistoryForgeError):
    pass


class AllNullError(HistoryForgeError):
    pass


class OverlappingCellsError(HistoryForgeError):
    pass


class SubsetLimitError(HistoryForgeError):
    pass


class ParameterRangeError(HistoryForgeError):
    pass


class SchemaError(HistoryForgeError):
    """Malformed input file. ``field`` is a dotted path, ``line`` is 1-based."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        location = []
        if field:
            location.append(f"field '{field}'")
        if line is not None:
            location.append(f"line {line}")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message, field=field, line=line)


class DeltaRangeWarning(UserWarning):
    pass


def write_atomic(path: str, text: str) -> None:
    """
    Writes text to path through a temporary file in the same directory followed by a rename.
    Args:
        path (str): Destination path.
        text (str): File contents.
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".historyforge-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


def parse_number(text: str) -> float:
    """
    Parses a decimal or a fraction such as '1/6'.
    Raises:
        click.BadParameter: If the text is neither.
    """
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise click.BadParameter(f"'{text}' is not a number or fraction.")


def parse_number_list(text: str) -> list[float]:
    """Parses a comma separated list of numbers, e.g. '0.05,1/6,0.2'."""
    items = [item for item in text.split(",") if item.strip()]
    if not items:
        raise click.BadParameter("Expected at least one value.")
    return [parse_number(item) for item in items]


def parse_int_range(text: str) -> list[int]:
    """
    Parses '3..50', '3,4,8' or a single integer into a list of integers.
    Raises:
        click.BadParameter: On malformed or empty ranges.
    """
    text = text.strip()
    try:
        if ".." in text:
            start, stop = text.split("..", 1)
            values = list(range(int(start), int(stop) + 1))
        else:
            values = [int(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise click.BadParameter(f"'{text}' is not an integer range.")
    if not values:
        raise click.BadParameter(f"'{text}' is an empty range.")
    return values


def report_error(console: Console, error: Exception, debug: bool) -> None:
    """Prints a library error in the error style; details only in debug mode."""
    console.print(f"[{STYLES['error']}]Error: {error}[/{STYLES['error']}]")
    details = getattr(error, "details", None)
    if debug and details:
        console.print(f"[{STYLES['dim']}]{details}[/]")
