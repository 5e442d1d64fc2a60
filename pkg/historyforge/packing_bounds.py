"""
Bounds for the generalized kissing problem: how many unit vectors fit with
pairwise overlap at most epsilon. This caps the number of non-null histories a
set passing the DHC can have.
"""

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from rich.console import Console
from scipy.integrate import quad
from scipy.special import gamma

from .jacobi import jacobi_tilde_table
from .utils import STYLES, ParameterRangeError

console = Console()

FLOOR_GUARD = 1e-9
MIN_REAL_DIM = 5
QUAD_ABS_TOL = 1e-10
SPACES = ("real", "complex")
OVERLAPS = ("re-part", "modulus")


@dataclass(frozen=True)
class BoundQuery:
    """
    ``space='complex'`` is the unit sphere of C^d with overlap Re(u^dagger v)
    or |u^dagger v|; ``space='real'`` is the unit sphere of R^dim.
    """

    space: str
    dim: int
    epsilon: float
    overlap: str = "re-part"

    def __post_init__(self):
        if self.space not in SPACES:
            raise ParameterRangeError(f"Unknown space '{self.space}'.", space=self.space)
        if self.overlap not in OVERLAPS:
            raise ParameterRangeError(f"Unknown overlap '{self.overlap}'.", overlap=self.overlap)
        if self.dim < 2:
            raise ParameterRangeError(f"Dimension must be at least 2, got {self.dim}.", dim=self.dim)
        if not 0 <= self.epsilon < 1:
            raise ParameterRangeError(
                f"epsilon must lie in [0, 1), got {self.epsilon}.", epsilon=self.epsilon
            )

    @property
    def real_dim(self) -> int | None:
        """Dimension of the equivalent real sphere problem, if there is one."""
        if self.space == "real":
            return self.dim
        if self.overlap == "re-part":
            return 2 * self.dim
        return None


@dataclass(frozen=True)
class BoundResult:
    name: str
    value: float
    valid: bool
    region: str
    provenance: str


def _ratio_bound(k: int, epsilon: float) -> float:
    denominator = 1 - k * epsilon**2
    if denominator <= 0:
        return math.inf
    return k * (1 - epsilon**2) / denominator


def upper_bound(query: BoundQuery) -> BoundResult:
    """
    Floor of the degree-one LP optimum. Outside the region where the optimum is
    proven the value is still reported with ``valid=False``.
    Args:
        query (BoundQuery): Space, dimension, overlap type and epsilon.
    Returns:
        BoundResult: Integer value (or inf when the formula has no finite value).
    """
    epsilon = query.epsilon
    real_dim = query.real_dim
    if real_dim is None:
        d = query.dim
        raw = _ratio_bound(d, epsilon)
        valid = epsilon**2 <= 1 / (d + 1) and d >= 2
        region = "epsilon^2 <= 1/(d+1), d >= 2"
        provenance = "floor(d(1-e^2)/(1-d e^2)), Jacobi (alpha, beta) = (d-2, 0)"
    else:
        raw = _ratio_bound(real_dim, epsilon)
        valid = epsilon**2 <= 1 / (real_dim + 2) and real_dim >= MIN_REAL_DIM
        k = "2d" if query.space == "complex" else "k"
        region = f"epsilon^2 <= 1/({k}+2), {k} >= {MIN_REAL_DIM}"
        provenance = "floor(k(1-e^2)/(1-k e^2)), Jacobi (alpha, beta) = ((k-3)/2, -1/2)"
    value = math.floor(raw + FLOOR_GUARD) if math.isfinite(raw) else math.inf
    return BoundResult("upper", value, bool(valid), region, provenance)


def shannon_lower_bound(query: BoundQuery) -> BoundResult:
    """
    Shannon's cap-covering lower bound: sin^{1-k}(theta) on the real sphere of
    dimension k and sin^{2-2d}(theta) for the modulus overlap, with cos(theta) = epsilon.
    """
    complement = 1 - query.epsilon**2
    real_dim = query.real_dim
    if real_dim is None:
        value = complement ** (1 - query.dim)
        provenance = "(1-e^2)^(1-d)"
    else:
        value = complement ** ((1 - real_dim) / 2)
        provenance = "(1-e^2)^((1-k)/2)"
    return BoundResult("shannon_lower", float(value), True, "0 <= epsilon < 1", provenance)


def sphere_area(d: int, r: float = 1.0) -> float:
    """Area of the sphere of radius r in R^d: d r^{d-1} pi^{d/2} / Gamma((d+2)/2)."""
    return d * r ** (d - 1) * math.pi ** (d / 2) / gamma((d + 2) / 2)


def cap_area(d: int, r: float, theta: float) -> float:
    """
    Area of the cap of angular radius theta on the sphere of radius r in R^d,
    S_{d-1}(1) r^{d-1} int_0^theta sin^{d-2}, by adaptive quadrature.
    """
    if d < 2 or r <= 0 or not 0 < theta <= math.pi / 2:
        raise ParameterRangeError(
            "cap_area needs d >= 2, r > 0 and 0 < theta <= pi/2.", d=d, r=r, theta=theta
        )
    integral, _ = quad(lambda phi: math.sin(phi) ** (d - 2), 0.0, theta, epsabs=QUAD_ABS_TOL)
    return sphere_area(d - 1) * r ** (d - 1) * integral


def complex_cap_area(d: int, theta: float) -> float:
    """Area of {|u_1| >= cos(theta)} on the unit sphere of C^d: S_{2d}(1) sin^{2d-2}(theta)."""
    if d < 1 or not 0 < theta <= math.pi / 2:
        raise ParameterRangeError(
            "complex_cap_area needs d >= 1 and 0 < theta <= pi/2.", d=d, theta=theta
        )
    return sphere_area(2 * d) * math.sin(theta) ** (2 * d - 2)


def hemisphere_bound(d: int, r: float, theta: float) -> float:
    """Half the area of the sphere of radius r sin(theta); bounds ``cap_area`` from above."""
    return 0.5 * sphere_area(d, r * math.sin(theta))


def shannon_crossover_epsilon(d: int) -> float:
    """epsilon below which the Shannon bound on C^d (re-part) falls under the trivial 2d."""
    return math.sqrt(1 - (2 * d) ** (2 / (1 - 2 * d)))


def shannon_crossover_expansion(d: int) -> float:
    """Leading-order form [2 ln(2d)/(2d-1)]^{1/2} of ``shannon_crossover_epsilon``."""
    return math.sqrt(2 * math.log(2 * d) / (2 * d - 1))


@dataclass
class LpReport:
    d: int
    epsilon: float
    overlap: str
    s: float
    coefficient: float
    objective: float
    closed_form: float
    feasible: bool
    worst_t: float
    worst_value: float
    improving_degrees: list[int]

    @property
    def passed(self) -> bool:
        return (
            self.feasible
            and not self.improving_degrees
            and math.isclose(self.objective, self.closed_form, rel_tol=1e-12)
        )


def _lp_jacobi_params(d: int, overlap: str) -> tuple[float, float, float]:
    if overlap == "re-part":
        return d - 1.5, -0.5, 2 * d * 1.0
    return d - 2.0, 0.0, d * 1.0


def lp_optimality_check(
    d: int,
    epsilon: float,
    overlap: str = "re-part",
    max_degree: int = 10,
    grid: int = 2000,
    debug: bool = False,
) -> LpReport:
    """
    Checks the degree-one LP candidate f_1 = -1/tilde P_1(s), s = 2 epsilon^2 - 1:
    feasibility f_1 tilde P_1(t) <= -1 on a grid of t in [-1, s], agreement of
    1 + f_1 with the closed form, and that no single polynomial of degree
    2..max_degree gives a smaller objective.
    Args:
        d (int): Complex dimension.
        epsilon (float): Overlap bound.
        overlap (str): 're-part' or 'modulus'.
        max_degree (int): Highest competing degree.
        grid (int): Number of t points.
        debug (bool): Print the per-degree comparison.
    Returns:
        LpReport: The checks and the worst grid point.
    """
    if overlap not in OVERLAPS:
        raise ParameterRangeError(f"Unknown overlap '{overlap}'.", overlap=overlap)
    alpha, beta, k = _lp_jacobi_params(d, overlap)
    s = 2 * epsilon**2 - 1
    ts = np.linspace(-1.0, s, grid) if s > -1 else np.array([-1.0])
    tilde = jacobi_tilde_table(alpha, beta, max(max_degree, 1), ts)
    tilde_s = float(jacobi_tilde_table(alpha, beta, 1, s)[1])
    closed_form = _ratio_bound(int(k), epsilon)

    if tilde_s >= 0:
        return LpReport(d, epsilon, overlap, s, math.inf, math.inf, closed_form, False, s, tilde_s, [])

    coefficient = -1.0 / tilde_s
    constraint = coefficient * tilde[1]
    worst = int(np.argmax(constraint))
    feasible = bool(constraint[worst] <= -1.0 + 1e-12)

    improving = []
    for degree in range(2, max_degree + 1):
        values = tilde[degree]
        if np.any(values >= 0):
            continue
        single = float(np.max(-1.0 / values))
        if debug:
            console.print(
                f"[{STYLES['debug']}]degree {degree}: coefficient {single:.6g} vs {coefficient:.6g}[/{STYLES['debug']}]"
            )
        if single < coefficient * (1 - 1e-12):
            improving.append(degree)

    return LpReport(
        d=d,
        epsilon=epsilon,
        overlap=overlap,
        s=s,
        coefficient=coefficient,
        objective=1.0 + coefficient,
        closed_form=closed_form,
        feasible=feasible,
        worst_t=float(ts[worst]),
        worst_value=float(constraint[worst]),
        improving_degrees=improving,
    )


def bound_table(dims, epsilons, overlap: str = "re-part", space: str = "complex") -> pd.DataFrame:
    """Rows of space, d, epsilon, lower, upper, valid for every (d, epsilon)."""
    rows = []
    for d in dims:
        for epsilon in epsilons:
            query = BoundQuery(space, int(d), float(epsilon), overlap)
            upper = upper_bound(query)
            lower = shannon_lower_bound(query)
            rows.append(
                {
                    "space": f"{space}:{overlap}" if space == "complex" else space,
                    "d": int(d),
                    "epsilon": float(epsilon),
                    "lower": lower.value,
                    "upper": upper.value,
                    "valid": upper.valid,
                }
            )
    return pd.DataFrame(rows, columns=["space", "d", "epsilon", "lower", "upper", "valid"])
