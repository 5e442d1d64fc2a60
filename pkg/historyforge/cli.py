import warnings

import pandas as pd
import rich_click as click
from rich.console import Console

from . import __version__
from .consistency import CRITERIA, NULL_POLICIES, CriterionParams, evaluate_criteria
from .generators import (
    ENSEMBLES,
    AppendixDParams,
    PerturbParams,
    ZenoParams,
    appendix_d_set,
    perturbation_experiment,
    random_near_consistent_set,
    theorem6_witness,
    zeno_closed_form,
    zeno_set,
)
from .histories import HistorySet, decoherence_matrix, history_space_dimension
from .jacobi import N_MAX as JACOBI_N_MAX
from .jacobi import X_POINTS, default_alpha_grid, verify_theorem3, verify_theorem4
from .mpv import EPS_VARIANTS, eps_for_delta, mpv_auto, mpv_bounds, mpv_exact
from .packing_bounds import OVERLAPS, SPACES, bound_table, lp_optimality_check
from .serialization import dump_history_set, dump_json, load_history_set, write_table
from .utils import (
    STYLES,
    HistoryForgeError,
    parse_int_range,
    parse_number,
    parse_number_list,
    report_error,
)

console = Console()

MPV_MODES = {"exact": mpv_exact, "bounds": mpv_bounds, "auto": mpv_auto}


def _number(ctx, param, value):
    return None if value is None else parse_number(value)


def _numbers(ctx, param, value):
    return None if value is None else parse_number_list(value)


def _int_range(ctx, param, value):
    return None if value is None else parse_int_range(value)


def _fail(ctx, error: Exception, is_debug: bool):
    report_error(console, error, is_debug)
    ctx.exit(2)


def select_epsilon(
    history_set: HistorySet,
    epsilon: float | None,
    delta: float | None,
    variant: str,
    n: int,
) -> float:
    """
    The criterion scale: an explicit epsilon wins, otherwise eps_for_delta with d
    the dimension of the history-state space. DeltaRangeWarning is shown in the
    warning style.
    """
    if epsilon is not None:
        return epsilon
    if delta is None:
        raise click.BadParameter("Give --epsilon or a positive --delta.", param_hint="--delta")
    d = history_space_dimension(history_set)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        value = eps_for_delta(delta, d, variant, n=n)
    for warning in caught:
        console.print(f"[{STYLES['warning']}]Warning: {warning.message}[/{STYLES['warning']}]")
    return value


def analyze_history_set(
    history_set: HistorySet,
    criteria: list[str],
    epsilon: float | None,
    delta: float | None,
    variant: str,
    mpv_mode: str,
    treat_null: str,
    debug: bool,
):
    """Runs the criteria and the MPV on a set; returns the report dict, the criteria report and the MPV result."""
    matrix = decoherence_matrix(history_set)
    scale = select_epsilon(history_set, epsilon, delta, variant, matrix.n)
    if debug:
        console.print(
            f"[{STYLES['debug']}]n = {matrix.n}, total probability {matrix.total:.12g}, epsilon = {scale:.6g}[/{STYLES['debug']}]"
        )
    params = CriterionParams(epsilon=scale, delta=delta, treat_null=treat_null)
    report = evaluate_criteria(matrix, criteria, params)
    mpv = MPV_MODES[mpv_mode](matrix)
    document = {
        "n": matrix.n,
        "dimension": history_set.dimension,
        "history_space_dimension": history_space_dimension(history_set),
        "epsilon": scale,
        "delta": delta,
        **report.to_dict(),
        "mpv": {**mpv.to_dict(), **mpv.details},
    }
    return document, report, mpv


def _print_report(report, mpv) -> None:
    for result in report.results:
        style = STYLES["success"] if result.passed else STYLES["error"]
        verdict = "pass" if result.passed else "FAIL"
        console.print(
            f"[{style}]{result.name}: {verdict}[/{style}] achieved epsilon {result.achieved_epsilon:.6g}"
            f" (tolerance {result.tolerance:.6g}, worst pair {result.worst_pair})"
        )
    bound_only = " (bound only)" if mpv.details.get("bound_only") else ""
    console.print(
        f"[bold {STYLES['info']}]MPV:[/bold {STYLES['info']}]\t{mpv.value:.12g}{bound_only} via {mpv.method}"
    )


@click.group()
@click.version_option(__version__, message="%(prog)s version %(version)s")
@click.option("--debug/--no-debug", default=False, help="Enable debug mode.")
@click.pass_context
def cli(ctx, debug):
    """HistoryForge CLI"""
    ctx.ensure_object(dict)
    ctx.obj["DEBUG"] = debug
    if debug:
        console.print(f"[{STYLES['debug']}]Debug mode is ON[/{STYLES['debug']}]")


@cli.command()
@click.option(
    "-i",
    "--input",
    "input_path",
    type=click.Path(exists=True, readable=True, dir_okay=False),
    required=True,
    help="History-set JSON file.",
)
@click.option(
    "-o",
    "--output",
    type=click.Path(dir_okay=False),
    default="report.json",
    show_default=True,
    help="Path to save the report.",
)
@click.option(
    "--format",
    "output_format",
    type=click.Choice(["json", "csv"], case_sensitive=False),
    default="json",
    show_default=True,
    help="Report format.",
)
@click.option(
    "-c",
    "--criteria",
    type=str,
    default="dhc",
    show_default=True,
    help=f"Comma separated criteria from: {', '.join(CRITERIA)}.",
)
@click.option(
    "-d",
    "--delta",
    type=click.FloatRange(min=0.0, min_open=True),
    metavar="FLOAT",
    default=None,
    help="Target MPV; sets epsilon through --eps-variant when --epsilon is not given.",
)
@click.option(
    "-e",
    "--epsilon",
    type=str,
    callback=_number,
    default=None,
    help="Explicit criterion scale, e.g. 0.05 or 1/6.",
)
@click.option(
    "--eps-variant",
    type=click.Choice(EPS_VARIANTS),
    default="epschoice",
    show_default=True,
    help="epsilon(delta) selector.",
)
@click.option(
    "-m",
    "--mpv",
    "mpv_mode",
    type=click.Choice(list(MPV_MODES)),
    default="auto",
    show_default=True,
    help="Exact subset search, the sum bound, or exact when small enough.",
)
@click.option(
    "--treat-null",
    type=click.Choice(NULL_POLICIES),
    default="skip",
    show_default=True,
    help="How DHC-type criteria treat pairs with a null history.",
)
@click.pass_context
def analyze(
    ctx,
    input_path,
    output,
    output_format,
    criteria,
    delta,
    epsilon,
    eps_variant,
    mpv_mode,
    treat_null,
):
    """Evaluate consistency criteria and the MPV of a history set. Exit status 0 if all criteria pass, 1 if any fails, 2 on input errors."""
    is_debug = ctx.obj.get("DEBUG", False)
    console.print(f"[bold {STYLES['info']}]Input:[/bold {STYLES['info']}]\t\t{input_path}")
    names = [name.strip() for name in criteria.split(",") if name.strip()]
    try:
        history_set = load_history_set(input_path, is_debug)
        document, report, mpv = analyze_history_set(
            history_set, names, epsilon, delta, eps_variant, mpv_mode, treat_null, is_debug
        )
        document["input"] = input_path
        if output_format.lower() == "json":
            dump_json(document, output)
        else:
            frame = report.to_frame()
            frame["epsilon"] = document["epsilon"]
            frame["mpv"] = mpv.value
            frame["mpv_method"] = mpv.method
            write_table(frame, output)
    except HistoryForgeError as error:
        _fail(ctx, error, is_debug)
    _print_report(report, mpv)
    console.print(f"[{STYLES['success']}]Report saved to '{output}'[/{STYLES['success']}]")
    if not report.passed:
        ctx.exit(1)


@cli.command()
@click.option(
    "-n",
    "--steps",
    type=str,
    callback=_int_range,
    default="100",
    show_default=True,
    help="Step counts, e.g. '100,200,400' or '1..10'.",
)
@click.option(
    "-t",
    "--theta",
    type=click.FloatRange(min=0.0),
    metavar="FLOAT",
    default=None,
    help="Total rotation; epsilon = theta / n.",
)
@click.option(
    "-e",
    "--epsilon",
    type=str,
    callback=_number,
    default=None,
    help="Rotation per step, used when --theta is not given.",
)
@click.option(
    "-o",
    "--output",
    type=click.Path(dir_okay=False),
    default=None,
    help="Optional CSV path for the table.",
)
@click.option(
    "--set-output",
    type=click.Path(dir_okay=False),
    default=None,
    help="Write the explicit history set (single n <= 14) as JSON.",
)
@click.pass_context
def zeno(ctx, steps, theta, epsilon, output, set_output):
    """Closed-form decoherence data of the rotating projector chains: off-diagonal size, X/Y violations and their distance to the large-n limits."""
    is_debug = ctx.obj.get("DEBUG", False)
    if theta is None and epsilon is None:
        raise click.UsageError("Give --theta or --epsilon.")
    try:
        params = [
            ZenoParams.from_theta(theta, n) if theta is not None else ZenoParams(n, epsilon)
            for n in steps
        ]
        frame = pd.DataFrame([zeno_closed_form(p).row() for p in params])
        if output:
            write_table(frame, output)
        if set_output:
            if len(params) != 1:
                raise click.BadParameter("--set-output needs a single step count.", param_hint="--steps")
            dump_history_set(zeno_set(params[0]), set_output)
            console.print(f"[{STYLES['success']}]History set saved to '{set_output}'[/{STYLES['success']}]")
    except HistoryForgeError as error:
        _fail(ctx, error, is_debug)
    console.print(frame.to_string(index=False))
    if output:
        console.print(f"[{STYLES['success']}]Table saved to '{output}'[/{STYLES['success']}]")


@cli.command()
@click.option(
    "-x",
    "--epsilon",
    type=str,
    callback=_number,
    default="1e-3",
    show_default=True,
    help="Largest allowed off-diagonal entry.",
)
@click.option(
    "-v",
    "--violation",
    type=click.FloatRange(min=0.0, min_open=True),
    metavar="FLOAT",
    default=10.0,
    show_default=True,
    help="MPV the witness must exceed.",
)
@click.pass_context
def witness(ctx, epsilon, violation):
    """Find a rotating chain with tiny off-diagonal entries and a large probability violation."""
    is_debug = ctx.obj.get("DEBUG", False)
    try:
        found = theorem6_witness(epsilon, violation, debug=is_debug)
    except HistoryForgeError as error:
        _fail(ctx, error, is_debug)
    console.print(f"[bold {STYLES['info']}]theta:[/bold {STYLES['info']}]\t{found.theta}")
    console.print(f"[bold {STYLES['info']}]n:[/bold {STYLES['info']}]\t{found.n}")
    console.print(
        f"[{STYLES['success']}]max off-diagonal {found.max_off_diagonal:.6g} <= {epsilon:.6g}, MPV {found.mpv:.6g} > {violation:.6g}[/{STYLES['success']}]"
    )


@cli.command()
@click.option(
    "-n",
    "--dimension",
    type=str,
    callback=_int_range,
    default="2..8",
    show_default=True,
    help="Dimensions, e.g. '3..50' or '3,4'.",
)
@click.option(
    "-e",
    "--epsilon",
    type=str,
    callback=_numbers,
    default="1/6",
    show_default=True,
    help="Comma separated overlap bounds.",
)
@click.option(
    "--overlap",
    type=click.Choice(OVERLAPS),
    default="re-part",
    show_default=True,
    help="Overlap type for complex spaces.",
)
@click.option(
    "--space",
    type=click.Choice(SPACES),
    default="complex",
    show_default=True,
    help="Unit sphere of C^d or of R^d.",
)
@click.option(
    "--lp-check/--no-lp-check",
    default=False,
    show_default=True,
    help="Also check optimality of the degree-one LP polynomial (complex spaces).",
)
@click.option(
    "-o",
    "--output",
    type=click.Path(dir_okay=False),
    default=None,
    help="Optional CSV path for the table.",
)
@click.pass_context
def bounds(ctx, dimension, epsilon, overlap, space, lp_check, output):
    """Lower and upper bounds on the number of unit vectors with pairwise overlap at most epsilon."""
    is_debug = ctx.obj.get("DEBUG", False)
    try:
        frame = bound_table(dimension, epsilon, overlap, space)
        if lp_check and space == "complex":
            frame["lp_pass"] = [
                lp_optimality_check(int(row.d), float(row.epsilon), overlap, debug=is_debug).passed
                for row in frame.itertuples()
            ]
        if output:
            write_table(frame, output)
    except HistoryForgeError as error:
        _fail(ctx, error, is_debug)
    console.print(frame.to_string(index=False))
    if output:
        console.print(f"[{STYLES['success']}]Table saved to '{output}'[/{STYLES['success']}]")


@cli.command()
@click.option(
    "-n",
    "--pairs",
    type=click.IntRange(min=2),
    metavar="INT",
    default=4,
    show_default=True,
    help="Number of history pairs.",
)
@click.option(
    "-e",
    "--epsilon",
    type=str,
    callback=_number,
    default="0.1",
    show_default=True,
    help="Overlap scale, at most 1/(n-1).",
)
@click.option(
    "-o",
    "--output",
    type=click.Path(dir_okay=False),
    default="example_d.json",
    show_default=True,
    help="Path to save the history set.",
)
@click.pass_context
def example_d(ctx, pairs, epsilon, output):
    """Build the 2n-history set whose MPV is (n-1) epsilon / 2 while its DHC ratio is epsilon."""
    is_debug = ctx.obj.get("DEBUG", False)
    try:
        generated = appendix_d_set(AppendixDParams(pairs, epsilon))
        dump_history_set(generated.history_set, output)
        _, report, mpv = analyze_history_set(
            generated.history_set,
            ["medium_dhc"],
            epsilon,
            None,
            "epschoice",
            "auto",
            "skip",
            is_debug,
        )
    except HistoryForgeError as error:
        _fail(ctx, error, is_debug)
    _print_report(report, mpv)
    console.print(
        f"[bold {STYLES['info']}]Expected MPV:[/bold {STYLES['info']}]\t{generated.expected_mpv:.12g}"
    )
    console.print(f"[{STYLES['success']}]History set saved to '{output}'[/{STYLES['success']}]")


@cli.command()
@click.option(
    "-n",
    "--dimension",
    type=click.IntRange(min=4),
    metavar="INT",
    default=64,
    show_default=True,
    help="Hilbert space dimension.",
)
@click.option(
    "-r",
    "--rank",
    type=str,
    callback=_int_range,
    default="4,8,16,32",
    show_default=True,
    help="Projector ranks.",
)
@click.option(
    "-s",
    "--samples",
    type=click.IntRange(min=1),
    metavar="INT",
    default=500,
    show_default=True,
    help="Monte Carlo samples per rank.",
)
@click.option(
    "-e",
    "--epsilon",
    type=str,
    callback=_number,
    default="1e-2",
    show_default=True,
    help="Perturbation scale.",
)
@click.option(
    "--seed",
    type=click.IntRange(min=0),
    metavar="INT",
    default=0,
    show_default=True,
    help="Random seed.",
)
@click.option(
    "--ensemble",
    type=click.Choice(ENSEMBLES),
    default="gue",
    show_default=True,
    help="Unitary-invariant Gaussian, or block diagonal (commuting with P).",
)
@click.option(
    "-o",
    "--output",
    type=click.Path(dir_okay=False),
    default="perturb.json",
    show_default=True,
    help="Path to save the statistics.",
)
@click.pass_context
def perturb(ctx, dimension, rank, samples, epsilon, seed, ensemble, output):
    """Monte Carlo DHC terms of a consistent pair extended by a randomly perturbed projector."""
    is_debug = ctx.obj.get("DEBUG", False)
    runs = []
    try:
        for rank_p in rank:
            params = PerturbParams(dimension, rank_p, samples, epsilon, seed, ensemble)
            result = perturbation_experiment(params, debug=is_debug)
            runs.append(result.to_dict())
            console.print(
                f"[bold {STYLES['info']}]rank {rank_p}:[/bold {STYLES['info']}]\tterms {result.mean_first:.4f} ± {result.stderr_first:.4f}, "
                f"{result.mean_second:.4f} ± {result.stderr_second:.4f} (rank^-1/2 = {result.expected:.4f}), "
                f"slope {result.slope:.3f}, null samples {result.null_samples}"
            )
        dump_json({"runs": runs}, output)
    except HistoryForgeError as error:
        _fail(ctx, error, is_debug)
    console.print(f"[{STYLES['success']}]Statistics saved to '{output}'[/{STYLES['success']}]")


@cli.command()
@click.option(
    "-t",
    "--theorem",
    type=click.Choice(["3", "4"]),
    default="3",
    show_default=True,
    help="3: beta = -1/2, alpha >= 1. 4: beta = 0, alpha >= 2.",
)
@click.option(
    "--alpha-max",
    type=click.FloatRange(min=1.0),
    metavar="FLOAT",
    default=10.0,
    show_default=True,
    help="Largest alpha on the 0.5-spaced grid.",
)
@click.option(
    "-n",
    "--steps",
    type=click.IntRange(min=2),
    metavar="INT",
    default=JACOBI_N_MAX,
    show_default=True,
    help="Largest polynomial degree.",
)
@click.option(
    "--points",
    type=click.IntRange(min=2),
    metavar="INT",
    default=X_POINTS,
    show_default=True,
    help="x points per (alpha, n).",
)
@click.option(
    "-o",
    "--output",
    type=click.Path(dir_okay=False),
    default=None,
    help="Optional JSON path for the report.",
)
@click.pass_context
def jacobi(ctx, theorem, alpha_max, steps, points, output):
    """Sweep the Jacobi inequalities behind the degree-one LP optimum. Exit status 1 on any violation."""
    is_debug = ctx.obj.get("DEBUG", False)
    start = 1.0 if theorem == "3" else 2.0
    verify = verify_theorem3 if theorem == "3" else verify_theorem4
    try:
        grid = default_alpha_grid(start, max(alpha_max, start))
        report = verify(grid, n_max=steps, x_resolution=points)
        if output:
            dump_json(report.to_dict(), output)
    except HistoryForgeError as error:
        _fail(ctx, error, is_debug)
    if is_debug:
        for violation in report.violations + report.bound_violations:
            console.print(f"[{STYLES['debug']}]{violation}[/{STYLES['debug']}]")
    style = STYLES["success"] if report.passed else STYLES["error"]
    console.print(f"[{style}]{report.summary()}[/{style}]")
    if not report.passed:
        ctx.exit(1)


@cli.command()
@click.option(
    "-n",
    "--dimension",
    type=click.IntRange(min=1),
    metavar="INT",
    default=4,
    show_default=True,
    help="Hilbert space dimension d.",
)
@click.option(
    "-k",
    "--count",
    type=click.IntRange(min=1),
    metavar="INT",
    default=6,
    show_default=True,
    help="Number of histories, at most 2d.",
)
@click.option(
    "--noise",
    type=click.FloatRange(min=0.0),
    metavar="FLOAT",
    default=1e-3,
    show_default=True,
    help="Scale of the Gaussian noise added to the orthogonal states.",
)
@click.option(
    "--seed",
    type=click.IntRange(min=0),
    metavar="INT",
    default=0,
    show_default=True,
    help="Random seed.",
)
@click.option(
    "-o",
    "--output",
    type=click.Path(dir_okay=False),
    default="random_set.json",
    show_default=True,
    help="Path to save the history set.",
)
@click.pass_context
def random_set(ctx, dimension, count, noise, seed, output):
    """Generate a random nearly consistent history set."""
    is_debug = ctx.obj.get("DEBUG", False)
    try:
        history_set = random_near_consistent_set(dimension, count, noise, seed)
        dump_history_set(history_set, output)
    except HistoryForgeError as error:
        _fail(ctx, error, is_debug)
    console.print(f"[{STYLES['success']}]History set saved to '{output}'[/{STYLES['success']}]")


def main():
    """Entry point for the CLI application."""
    cli()


if __name__ == "__main__":
    main()
