import json

import pandas as pd
import pytest
from click.testing import CliRunner
from unittest.mock import MagicMock
from rich.console import Console
from historyforge import __version__
from historyforge.cli import cli
from historyforge.utils import STYLES


def write_document(path, document):
    path.write_text(json.dumps(document))
    return str(path)


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def mock_console(mocker):
    return mocker.patch("historyforge.cli.console", MagicMock(spec=Console))


@pytest.fixture
def diagonal_file(tmp_path):
    return write_document(
        tmp_path / "diagonal.json",
        {
            "dimension": 2,
            "initial_state": {"type": "pure", "data": [0.6, 0.8]},
            "histories": {"type": "operators", "ops": [[[1, 0], [0, 0]], [[0, 0], [0, 1]]]},
        },
    )


def printed(mock_console):
    return "\n".join(str(call.args[0]) for call in mock_console.print.call_args_list if call.args)


def test_cli_version(runner):
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert result.output.strip() == f"cli version {__version__}"


def test_cli_help(runner):
    result = runner.invoke(cli, ["--help"])
    assert result.exit_code == 0
    assert "Usage:" in result.output
    for command in ("analyze", "zeno", "witness", "bounds", "example-d", "perturb", "jacobi", "random-set"):
        assert command in result.output


def test_analyze_help(runner):
    result = runner.invoke(cli, ["analyze", "--help"])
    assert result.exit_code == 0
    assert "--treat-null" in result.output


def test_analyze_diagonal_passes(runner, diagonal_file, tmp_path, mock_console):
    output = tmp_path / "report.json"
    result = runner.invoke(cli, ["analyze", "-i", diagonal_file, "-e", "0", "-o", str(output)])
    assert result.exit_code == 0
    report = json.loads(output.read_text())
    assert report["pass"] is True
    assert report["mpv"]["value"] == 0.0
    assert report["mpv"]["maximizer_indices"] == []
    assert report["history_space_dimension"] == 2
    mock_console.print.assert_any_call(
        f"[{STYLES['success']}]Report saved to '{output}'[/{STYLES['success']}]"
    )


def test_analyze_csv(runner, diagonal_file, tmp_path, mock_console):
    output = tmp_path / "report.csv"
    result = runner.invoke(
        cli,
        ["analyze", "-i", diagonal_file, "-e", "1/6", "-c", "weak,dhc", "--format", "csv", "-o", str(output)],
    )
    assert result.exit_code == 0
    frame = pd.read_csv(output)
    assert list(frame["criterion"]) == ["weak", "dhc"]
    assert frame["mpv"].tolist() == [0.0, 0.0]


def test_example_d_then_analyze(runner, tmp_path, mock_console):
    generated = tmp_path / "example_d.json"
    result = runner.invoke(cli, ["example-d", "-n", "4", "-e", "0.1", "-o", str(generated)])
    assert result.exit_code == 0
    assert generated.exists()
    assert "Expected MPV:" in printed(mock_console)

    output = tmp_path / "report.json"
    result = runner.invoke(
        cli, ["analyze", "-i", str(generated), "-e", "0.1", "-c", "medium_dhc", "-o", str(output)]
    )
    assert result.exit_code == 0
    report = json.loads(output.read_text())
    assert report["mpv"]["value"] == pytest.approx(0.15, abs=1e-10)
    assert report["criteria"][0]["achieved_epsilon"] == pytest.approx(0.1, abs=1e-10)


def test_analyze_fails_criterion(runner, tmp_path, mock_console):
    generated = tmp_path / "example_d.json"
    runner.invoke(cli, ["example-d", "-n", "4", "-e", "0.1", "-o", str(generated)])
    output = tmp_path / "report.json"
    result = runner.invoke(cli, ["analyze", "-i", str(generated), "-d", "0.9", "-o", str(output)])
    assert result.exit_code == 1
    report = json.loads(output.read_text())
    assert report["pass"] is False
    assert report["epsilon"] == pytest.approx(0.9 / 16)


def test_analyze_non_square_input(runner, tmp_path, mock_console):
    bad = write_document(
        tmp_path / "bad.json",
        {
            "dimension": 2,
            "initial_state": {"type": "pure", "data": [1, 0]},
            "histories": {"type": "operators", "ops": [[[1, 0], [0]]]},
        },
    )
    result = runner.invoke(cli, ["analyze", "-i", bad, "-e", "0.1", "-o", str(tmp_path / "r.json")])
    assert result.exit_code == 2
    assert "not square" in printed(mock_console)
    assert not (tmp_path / "r.json").exists()


def test_analyze_non_utf8_input(runner, tmp_path, mock_console):
    bad = tmp_path / "bad.json"
    bad.write_bytes(b'\xff\xfe{"dimension": 2}')
    result = runner.invoke(cli, ["analyze", "-i", str(bad), "-e", "0.1", "-o", str(tmp_path / "r.json")])
    assert result.exit_code == 2
    assert "not valid UTF-8" in printed(mock_console)


def test_analyze_needs_epsilon_or_delta(runner, diagonal_file, tmp_path):
    result = runner.invoke(cli, ["analyze", "-i", diagonal_file, "-o", str(tmp_path / "r.json")])
    assert result.exit_code == 2


def test_analyze_bad_fraction(runner, diagonal_file, tmp_path):
    result = runner.invoke(cli, ["analyze", "-i", diagonal_file, "-e", "one/six"])
    assert result.exit_code == 2


def test_zeno_table(runner, tmp_path, mock_console):
    output = tmp_path / "zeno.csv"
    result = runner.invoke(cli, ["zeno", "-n", "100,200,400", "-t", "2", "-o", str(output)])
    assert result.exit_code == 0
    frame = pd.read_csv(output)
    assert frame["n"].tolist() == [100, 200, 400]
    assert frame["x_residual"].is_monotonic_decreasing


def test_zeno_needs_theta_or_epsilon(runner):
    result = runner.invoke(cli, ["zeno", "-n", "10"])
    assert result.exit_code == 2


def test_zeno_set_output_round_trip(runner, tmp_path, mock_console):
    history_file = tmp_path / "zeno.json"
    result = runner.invoke(cli, ["zeno", "-n", "3", "-e", "0.2", "--set-output", str(history_file)])
    assert result.exit_code == 0
    result = runner.invoke(
        cli, ["analyze", "-i", str(history_file), "-e", "0.5", "-o", str(tmp_path / "r.json")]
    )
    assert result.exit_code == 1


def test_zeno_set_output_too_large(runner, tmp_path, mock_console):
    result = runner.invoke(cli, ["zeno", "-n", "15", "-e", "0.1", "--set-output", str(tmp_path / "z.json")])
    assert result.exit_code == 2


def test_witness(runner, mock_console):
    result = runner.invoke(cli, ["witness", "-x", "1e-3", "-v", "10"])
    assert result.exit_code == 0
    assert "MPV" in printed(mock_console)


def test_bounds_table(runner, tmp_path, mock_console):
    output = tmp_path / "bounds.csv"
    result = runner.invoke(cli, ["bounds", "-n", "3", "-e", "1/6", "--lp-check", "-o", str(output)])
    assert result.exit_code == 0
    frame = pd.read_csv(output)
    assert frame.loc[0, "upper"] == 7
    assert bool(frame.loc[0, "lp_pass"])


def test_bounds_bad_range(runner):
    result = runner.invoke(cli, ["bounds", "-n", "3..x"])
    assert result.exit_code == 2


def test_jacobi_small_grid(runner, tmp_path, mock_console):
    output = tmp_path / "jacobi.json"
    result = runner.invoke(
        cli, ["jacobi", "-t", "3", "--alpha-max", "2", "-n", "6", "--points", "200", "-o", str(output)]
    )
    assert result.exit_code == 0
    assert "theorem3: 0 violations" in printed(mock_console)
    assert json.loads(output.read_text())["points_checked"] == 3 * 5 * 200


def test_perturb(runner, tmp_path, mock_console):
    output = tmp_path / "perturb.json"
    result = runner.invoke(
        cli, ["perturb", "-n", "8", "-r", "2,4", "-s", "3", "--seed", "1", "-o", str(output)]
    )
    assert result.exit_code == 0
    runs = json.loads(output.read_text())["runs"]
    assert [run["rank_p"] for run in runs] == [2, 4]
    assert all(run["samples"] == 3 for run in runs)


def test_perturb_bad_rank(runner, tmp_path, mock_console):
    result = runner.invoke(cli, ["perturb", "-n", "8", "-r", "7", "-s", "2", "-o", str(tmp_path / "p.json")])
    assert result.exit_code == 2


def test_random_set(runner, tmp_path, mock_console):
    output = tmp_path / "random.json"
    result = runner.invoke(cli, ["random-set", "-n", "3", "-k", "5", "--seed", "2", "-o", str(output)])
    assert result.exit_code == 0
    document = json.loads(output.read_text())
    assert document["dimension"] == 3
    assert len(document["histories"]["ops"]) == 5


def test_random_set_too_many(runner, tmp_path, mock_console):
    result = runner.invoke(cli, ["random-set", "-n", "2", "-k", "5", "-o", str(tmp_path / "r.json")])
    assert result.exit_code == 2


def test_debug_flag(runner, diagonal_file, tmp_path, mock_console):
    result = runner.invoke(
        cli, ["--debug", "analyze", "-i", diagonal_file, "-e", "0", "-o", str(tmp_path / "r.json")]
    )
    assert result.exit_code == 0
    mock_console.print.assert_any_call(f"[{STYLES['debug']}]Debug mode is ON[/{STYLES['debug']}]")


def test_zeno_no_rotation_row(runner, tmp_path, mock_console):
    output = tmp_path / "zeno.csv"
    result = runner.invoke(cli, ["zeno", "-n", "5", "-t", "0", "-o", str(output)])
    assert result.exit_code == 0
    frame = pd.read_csv(output)
    assert frame.loc[0, "max_off_diagonal"] == 0.0
    assert frame.loc[0, "x_violation"] == 0.0
    assert frame.loc[0, "y_violation"] == 0.0
