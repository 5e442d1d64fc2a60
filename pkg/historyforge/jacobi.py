"""
Jacobi polynomials P_n^(alpha, beta) and numerical checks of the inequalities
that make the degree-one polynomial optimal in the kissing-number LP.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import factorial, poch

from .utils import ParameterRangeError

ENDPOINT_GAP = 1e-6
X_POINTS = 2000
ALPHA_STEP = 0.5
N_MAX = 40
VERIFY_RTOL = 1e-12


@dataclass(frozen=True)
class JacobiParams:
    alpha: float
    beta: float
    n: int

    def __post_init__(self):
        if self.alpha <= -1 or self.beta <= -1:
            raise ParameterRangeError(
                f"alpha and beta must exceed -1, got ({self.alpha}, {self.beta}).",
                alpha=self.alpha,
                beta=self.beta,
            )
        if self.n < 0 or int(self.n) != self.n:
            raise ParameterRangeError(f"Degree must be a nonnegative integer, got {self.n}.", n=self.n)


def jacobi_table(alpha: float, beta: float, n: int, x) -> np.ndarray:
    """
    P_0 .. P_n at the points x by the three-term recurrence.
    Returns an array of shape (n + 1,) + shape(x).
    """
    x = np.asarray(x, dtype=float)
    table = np.empty((n + 1,) + x.shape)
    table[0] = 1.0
    if n == 0:
        return table
    apb = alpha + beta
    table[1] = 0.5 * (alpha - beta + (apb + 2.0) * x)
    for k in range(2, n + 1):
        a1 = 2.0 * k * (k + apb) * (2.0 * k + apb - 2.0)
        a2 = (2.0 * k + apb - 1.0) * (alpha * alpha - beta * beta)
        a3 = (2.0 * k + apb - 2.0) * (2.0 * k + apb - 1.0) * (2.0 * k + apb)
        a4 = 2.0 * (k + alpha - 1.0) * (k + beta - 1.0) * (2.0 * k + apb)
        table[k] = ((a2 + a3 * x) * table[k - 1] - a4 * table[k - 2]) / a1
    return table


def jacobi_eval(params: JacobiParams, x):
    """P_n^(alpha, beta)(x)."""
    values = jacobi_table(params.alpha, params.beta, params.n, x)[params.n]
    return float(values) if np.ndim(values) == 0 else values


def jacobi_tilde_table(alpha: float, beta: float, n: int, x) -> np.ndarray:
    """P_k(x) / P_k(1) for k = 0..n, normalized by the recurrence value at 1."""
    table = jacobi_table(alpha, beta, n, x)
    at_one = jacobi_table(alpha, beta, n, 1.0)
    return table / at_one.reshape((n + 1,) + (1,) * (table.ndim - 1))


def jacobi_tilde(params: JacobiParams, x):
    """P_n(x) / P_n(1); equals 1 at x = 1 exactly."""
    values = jacobi_tilde_table(params.alpha, params.beta, params.n, x)[params.n]
    return float(values) if np.ndim(values) == 0 else values


def jacobi_at_one(alpha: float, n: int) -> float:
    """(alpha + 1)_n / n!"""
    return float(poch(alpha + 1.0, n) / factorial(n))


def jacobi_at_minus_one(beta: float, n: int) -> float:
    """(-1)^n (beta + 1)_n / n!"""
    return float((-1) ** n * poch(beta + 1.0, n) / factorial(n))


@dataclass
class Violation:
    alpha: float
    n: int
    x: float
    check: str
    margin: float


@dataclass
class VerificationReport:
    theorem: str
    points_checked: int = 0
    violations: list[Violation] = field(default_factory=list)
    bound_violations: list[Violation] = field(default_factory=list)
    grid: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations and not self.bound_violations

    def summary(self) -> str:
        return (
            f"{self.theorem}: {len(self.violations)} violations, "
            f"{len(self.bound_violations)} bound violations over {self.points_checked} points"
        )

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "points_checked": self.points_checked,
            "violations": [v.__dict__ for v in self.violations],
            "bound_violations": [v.__dict__ for v in self.bound_violations],
            "grid": self.grid,
            "pass": self.passed,
        }


def default_alpha_grid(start: float, stop: float = 10.0, step: float = ALPHA_STEP) -> list[float]:
    count = int(round((stop - start) / step)) + 1
    return [start + step * i for i in range(count)]


def _open_interval(upper: float, x_resolution: int) -> np.ndarray:
    return np.linspace(-1.0 + ENDPOINT_GAP, upper - ENDPOINT_GAP, x_resolution)


def _record_first(
    bucket: list[Violation], failed: np.ndarray, margins: np.ndarray, alpha, n, xs, check
) -> None:
    if failed.any():
        index = int(np.argmax(failed))
        bucket.append(Violation(float(alpha), int(n), float(xs[index]), check, float(margins[index])))


def _verify_inequality(
    theorem: str,
    beta: float,
    alpha_grid,
    n_max: int,
    x_resolution: int,
    bound,
) -> VerificationReport:
    report = VerificationReport(
        theorem, grid={"alpha": list(alpha_grid), "n_max": n_max, "x_resolution": x_resolution}
    )
    for alpha in alpha_grid:
        xs = _open_interval(theorem_boundary(theorem, alpha), x_resolution)
        tilde = jacobi_tilde_table(alpha, beta, n_max, xs)
        plain = jacobi_table(alpha, beta, n_max, xs)
        for n in range(2, n_max + 1):
            difference = tilde[n] - tilde[1]
            _record_first(
                report.violations, ~(difference > 0), difference, alpha, n, xs, "tilde_n > tilde_1"
            )
            margins = bound(alpha, n, xs, plain[n])
            _record_first(report.bound_violations, margins < 0, margins, alpha, n, xs, "bound")
            report.points_checked += xs.size
    return report


def _sonine_bound(alpha: float, n: int, xs: np.ndarray, values: np.ndarray) -> np.ndarray:
    # ((1-x)/2)^alpha |P_n(x)| <= |P_n(-1)|
    limit = abs(jacobi_at_minus_one(-0.5, n))
    lhs = ((1.0 - xs) / 2.0) ** alpha * np.abs(values)
    return limit * (1.0 + VERIFY_RTOL) - lhs


def _szego_bound(alpha: float, n: int, xs: np.ndarray, values: np.ndarray) -> np.ndarray:
    # [(1-x)/2]^(alpha/2 + 1/4) |P_n^(alpha,0)(x)| <= 1
    lhs = ((1.0 - xs) / 2.0) ** (alpha / 2.0 + 0.25) * np.abs(values)
    return (1.0 + VERIFY_RTOL) - lhs


def verify_theorem3(
    alpha_grid=None, n_max: int = N_MAX, x_resolution: int = X_POINTS
) -> VerificationReport:
    """
    Checks tilde P_n^(alpha,-1/2)(x) > tilde P_1^(alpha,-1/2)(x) for
    -1 < x < -(2 alpha + 3)/(2 alpha + 5), 2 <= n <= n_max, together with
    ((1-x)/2)^alpha |P_n(x)| <= |P_n(-1)| on the same points.
    Args:
        alpha_grid: alpha values (>= 1); defaults to 1, 1.5, ..., 10.
        n_max (int): Largest degree.
        x_resolution (int): Points in the open x interval.
    Returns:
        VerificationReport: First failing x per (alpha, n), if any.
    """
    alpha_grid = default_alpha_grid(1.0) if alpha_grid is None else list(alpha_grid)
    return _verify_inequality(
        "theorem3",
        -0.5,
        alpha_grid,
        n_max,
        x_resolution,
        _sonine_bound,
    )


def verify_theorem4(
    alpha_grid=None, n_max: int = N_MAX, x_resolution: int = X_POINTS
) -> VerificationReport:
    """As ``verify_theorem3`` for beta = 0 on -1 < x < -(alpha + 1)/(alpha + 3), alpha >= 2."""
    alpha_grid = default_alpha_grid(2.0) if alpha_grid is None else list(alpha_grid)
    return _verify_inequality(
        "theorem4",
        0.0,
        alpha_grid,
        n_max,
        x_resolution,
        _szego_bound,
    )


@dataclass
class SoninePolyaReport:
    alpha: float
    n: int
    maxima: list[float]
    positions: list[float]
    non_increasing: bool
    strictly_decreasing: bool
    bounded_by_origin: bool
    vanishes_at_one: bool

    @property
    def passed(self) -> bool:
        return self.non_increasing and self.bounded_by_origin and self.vanishes_at_one


def sonine_profile(alpha: float, n: int, s) -> np.ndarray:
    """w(s) = (1 - s^2)^alpha P_n^(alpha,-1/2)(2 s^2 - 1)."""
    s = np.asarray(s, dtype=float)
    return (1.0 - s**2) ** alpha * jacobi_table(alpha, -0.5, n, 2.0 * s**2 - 1.0)[n]


def verify_sonine_polya(alpha: float, n: int, s_resolution: int = X_POINTS) -> SoninePolyaReport:
    """
    Locates the local maxima of |w| on [0, 1] from sign changes of its finite
    difference and checks they do not increase, that |w| <= |w(0)| and that w(1) = 0.
    """
    if alpha < 1 or n < 1:
        raise ParameterRangeError(
            f"Need alpha >= 1 and n >= 1, got alpha = {alpha}, n = {n}.", alpha=alpha, n=n
        )
    s = np.linspace(0.0, 1.0, s_resolution)
    magnitude = np.abs(sonine_profile(alpha, n, s))
    step = np.diff(magnitude)
    peaks = [0] if step[0] <= 0 else []
    peaks += [i for i in range(1, len(step)) if step[i - 1] > 0 and step[i] <= 0]
    maxima = [float(magnitude[i]) for i in peaks]
    tolerance = VERIFY_RTOL * magnitude[0]
    non_increasing = all(b <= a + tolerance for a, b in zip(maxima, maxima[1:]))
    strictly = all(b < a for a, b in zip(maxima, maxima[1:]))
    return SoninePolyaReport(
        alpha=alpha,
        n=n,
        maxima=maxima,
        positions=[float(s[i]) for i in peaks],
        non_increasing=non_increasing,
        strictly_decreasing=strictly,
        bounded_by_origin=bool(np.all(magnitude <= magnitude[0] + tolerance)),
        vanishes_at_one=magnitude[-1] == 0.0,
    )


def theorem_boundary(theorem: str, alpha: float) -> float:
    """Right end of the x interval on which the inequality is claimed."""
    if theorem == "theorem3":
        return -(2 * alpha + 3) / (2 * alpha + 5)
    if theorem == "theorem4":
        return -(alpha + 1) / (alpha + 3)
    raise ParameterRangeError(f"Unknown theorem '{theorem}'.", theorem=theorem)


def degree_one_gap(alpha: float, beta: float, x: float) -> float:
    """tilde P_2(x) - tilde P_1(x); vanishes at the theorem boundary."""
    tilde = jacobi_tilde_table(alpha, beta, 2, x)
    return float(tilde[2] - tilde[1])

