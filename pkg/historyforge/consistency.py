"""Exact and approximate consistency criteria on a decoherence matrix."""

import math
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

from .histories import (
    TAU_NULL,
    ClassOperator,
    DecoherenceMatrix,
    HistorySet,
    branch_set,
    decoherence_matrix,
)
from .linalg import real_embed
from .utils import AllNullError, ParameterRangeError

COMPARISON_SLACK = 1e-12
NULL_POLICIES = ("skip", "fail")


@dataclass(frozen=True)
class CriterionParams:
    epsilon: float = 0.0
    delta: float | None = None
    treat_null: str = "skip"

    def __post_init__(self):
        if not math.isfinite(self.epsilon) or self.epsilon < 0:
            raise ParameterRangeError(
                f"epsilon must be finite and nonnegative, got {self.epsilon}.",
                epsilon=self.epsilon,
            )
        if self.delta is not None and (not math.isfinite(self.delta) or self.delta < 0):
            raise ParameterRangeError(
                f"delta must be finite and nonnegative, got {self.delta}.",
                delta=self.delta,
            )
        if self.treat_null not in NULL_POLICIES:
            raise ParameterRangeError(
                f"treat_null must be one of {NULL_POLICIES}, got '{self.treat_null}'.",
                treat_null=self.treat_null,
            )


@dataclass(frozen=True)
class CriterionResult:
    name: str
    passed: bool
    achieved_epsilon: float
    worst_pair: tuple[int, int] | None
    tolerance: float
    null_pairs: int = 0

    def to_dict(self, params: CriterionParams | None = None) -> dict:
        return {
            "criterion": self.name,
            "pass": bool(self.passed),
            "achieved_epsilon": float(self.achieved_epsilon),
            "worst_pair": list(self.worst_pair) if self.worst_pair is not None else None,
            "params": asdict(params) if params is not None else {"tolerance": self.tolerance},
        }


@dataclass
class ConsistencyReport:
    results: list[CriterionResult]
    null_histories: list[int] = field(default_factory=list)
    params: CriterionParams = field(default_factory=CriterionParams)

    @property
    def passed(self) -> bool:
        return all(result.passed for result in self.results)

    def get(self, name: str) -> CriterionResult:
        for result in self.results:
            if result.name == name:
                return result
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "criteria": [result.to_dict(self.params) for result in self.results],
            "null_histories": list(self.null_histories),
            "pass": self.passed,
        }

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for result in self.results:
            alpha, beta = result.worst_pair if result.worst_pair is not None else (None, None)
            rows.append(
                {
                    "criterion": result.name,
                    "pass": result.passed,
                    "achieved_epsilon": result.achieved_epsilon,
                    "worst_alpha": alpha,
                    "worst_beta": beta,
                    "tolerance": result.tolerance,
                    "null_pairs": result.null_pairs,
                }
            )
        return pd.DataFrame(rows)


def _passes(achieved: float, tolerance: float) -> bool:
    return achieved <= tolerance + COMPARISON_SLACK * max(1.0, tolerance)


def _worst_off_diagonal(values: np.ndarray) -> tuple[float, tuple[int, int] | None]:
    """Max over alpha < beta ignoring NaN; ties go to the lexicographically first pair."""
    n = values.shape[0]
    rows, cols = np.triu_indices(n, k=1)
    upper = values[rows, cols]
    valid = ~np.isnan(upper)
    if not valid.any():
        return 0.0, None
    masked = np.where(valid, upper, -np.inf)
    position = int(np.argmax(masked))
    return float(masked[position]), (int(rows[position]), int(cols[position]))


def _plain_criterion(name: str, values: np.ndarray, tolerance: float) -> CriterionResult:
    achieved, pair = _worst_off_diagonal(values)
    return CriterionResult(name, _passes(achieved, tolerance), achieved, pair, tolerance)


def weak_consistency(matrix: DecoherenceMatrix, tol: float = 0.0) -> CriterionResult:
    """max |Re D_ab| over a != b."""
    return _plain_criterion("weak", np.abs(matrix.entries.real), tol)


def medium_consistency(matrix: DecoherenceMatrix, tol: float = 0.0) -> CriterionResult:
    """max |D_ab| over a != b."""
    return _plain_criterion("medium", np.abs(matrix.entries), tol)


def threshold_criterion(matrix: DecoherenceMatrix, epsilon: float) -> CriterionResult:
    """
    |D_ab| <= epsilon for all a != b. Small off-diagonal entries do not bound the
    probability violation; see ``generators.theorem6_witness``.
    """
    return _plain_criterion("threshold", np.abs(matrix.entries), epsilon)


def dhc_ratio_matrix(
    matrix: DecoherenceMatrix, part: str = "real", tau_null: float = TAU_NULL
) -> np.ndarray:
    """
    |Re D_ab| / sqrt(D_aa D_bb) (``part="real"``) or |D_ab| / sqrt(D_aa D_bb)
    (``part="modulus"``). Entries involving a null history and the diagonal are NaN.
    """
    numerator = np.abs(matrix.entries.real) if part == "real" else np.abs(matrix.entries)
    probabilities = matrix.probabilities
    null = probabilities <= tau_null
    scale = np.sqrt(np.outer(np.where(null, 1.0, probabilities), np.where(null, 1.0, probabilities)))
    ratios = numerator / scale
    ratios[null, :] = np.nan
    ratios[:, null] = np.nan
    np.fill_diagonal(ratios, np.nan)
    return ratios


def _dhc_like(
    name: str, matrix: DecoherenceMatrix, epsilon: float, treat_null: str, part: str
) -> CriterionResult:
    if treat_null not in NULL_POLICIES:
        raise ParameterRangeError(
            f"treat_null must be one of {NULL_POLICIES}, got '{treat_null}'.",
            treat_null=treat_null,
        )
    null = matrix.null_histories()
    if matrix.n and len(null) == matrix.n:
        raise AllNullError("Every history in the set is null.", n=matrix.n)
    n = matrix.n
    null_pairs = len(null) * (n - len(null)) + len(null) * (len(null) - 1) // 2
    ratios = dhc_ratio_matrix(matrix, part)
    achieved, pair = _worst_off_diagonal(ratios)
    if treat_null == "fail" and null_pairs:
        first_null = null[0]
        other = 0 if first_null != 0 else 1
        return CriterionResult(
            name, False, math.inf, tuple(sorted((first_null, other))), epsilon, null_pairs
        )
    return CriterionResult(
        name, _passes(achieved, epsilon), achieved, pair, epsilon, null_pairs
    )


def dhc(
    matrix: DecoherenceMatrix, epsilon: float, treat_null: str = "skip"
) -> CriterionResult:
    """
    |Re D_ab| <= epsilon * sqrt(D_aa D_bb) for all a != b.
    Args:
        matrix (DecoherenceMatrix): The decoherence matrix.
        epsilon (float): Criterion scale.
        treat_null (str): 'skip' lets pairs with a null history pass; 'fail' rejects the set.
    Returns:
        CriterionResult: ``achieved_epsilon`` is the largest ratio over non-null pairs.
    Raises:
        AllNullError: If every history is null.
    """
    return _dhc_like("dhc", matrix, epsilon, treat_null, "real")


def medium_dhc(
    matrix: DecoherenceMatrix, epsilon: float, treat_null: str = "skip"
) -> CriterionResult:
    """As ``dhc`` with |D_ab| in the numerator."""
    return _dhc_like("medium_dhc", matrix, epsilon, treat_null, "modulus")


def angle_form(states: list[np.ndarray], tau_null: float = TAU_NULL) -> np.ndarray:
    """
    |cos theta_ab| between the real history vectors. Rows and columns of null
    states are NaN.
    """
    embedded = np.column_stack([real_embed(state) for state in states])
    gram = embedded.T @ embedded
    norms2 = np.diag(gram).copy()
    null = norms2 <= tau_null
    norms = np.sqrt(np.where(null, 1.0, norms2))
    cosines = np.abs(gram) / np.outer(norms, norms)
    cosines[null, :] = np.nan
    cosines[:, null] = np.nan
    return cosines


def diagonal_sum_condition(matrix: DecoherenceMatrix, epsilon: float) -> CriterionResult:
    """|sum_a D_aa - 1| <= epsilon, the supplementary condition for general class operators."""
    achieved = abs(float(matrix.probabilities.sum()) - 1.0)
    return CriterionResult("diagonal_sum", _passes(achieved, epsilon), achieved, None, epsilon)


@dataclass(frozen=True)
class ConditionalDhcResult:
    """DHC on the current density matrix and on the joint past-future operators."""

    current: CriterionResult
    joint: CriterionResult

    @property
    def passed(self) -> bool:
        return self.current.passed

    @property
    def achieved_epsilon(self) -> float:
        return self.current.achieved_epsilon

    @property
    def discrepancy(self) -> float:
        return abs(self.current.achieved_epsilon - self.joint.achieved_epsilon)


def conditional_dhc(
    history_set: HistorySet,
    past: ClassOperator,
    futures: list[ClassOperator],
    epsilon: float,
    treat_null: str = "skip",
) -> ConditionalDhcResult:
    """
    Evaluates the DHC for the future histories given a realized past, once on
    rho_c and once on the complete histories C_f C_p with the original state.
    Raises:
        NullBranchError: If the past branch is null.
    """
    current_set = branch_set(history_set, past, futures)
    current = dhc(decoherence_matrix(current_set), epsilon, treat_null)
    joint_ops = [ClassOperator(future.matrix @ past.matrix) for future in futures]
    joint_set = HistorySet(history_set.initial, joint_ops)
    joint = dhc(decoherence_matrix(joint_set), epsilon, treat_null)
    return ConditionalDhcResult(current, joint)


CRITERIA = {
    "weak": lambda D, p: weak_consistency(D, p.epsilon),
    "medium": lambda D, p: medium_consistency(D, p.epsilon),
    "threshold": lambda D, p: threshold_criterion(D, p.epsilon),
    "dhc": lambda D, p: dhc(D, p.epsilon, p.treat_null),
    "medium_dhc": lambda D, p: medium_dhc(D, p.epsilon, p.treat_null),
    "diagonal_sum": lambda D, p: diagonal_sum_condition(D, p.epsilon),
}


def evaluate_criteria(
    matrix: DecoherenceMatrix, names: list[str], params: CriterionParams
) -> ConsistencyReport:
    """Runs the named criteria with a shared epsilon."""
    unknown = [name for name in names if name not in CRITERIA]
    if unknown:
        raise ParameterRangeError(
            f"Unknown criteria: {', '.join(unknown)}.", unknown=unknown
        )
    results = [CRITERIA[name](matrix, params) for name in names]
    return ConsistencyReport(results, matrix.null_histories(), params)
