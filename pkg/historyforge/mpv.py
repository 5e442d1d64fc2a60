"""
Maximum probability violation (MPV): exact subset search for small sets and the
closed-form bounds and epsilon(delta) selectors for everything else.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .histories import CoarseGraining, DecoherenceMatrix
from .utils import DeltaRangeWarning, ParameterRangeError, SubsetLimitError

N_MAX = 24
TIE_TOL = 1e-12
CHUNK_ROWS = 256

EPS_VARIANTS = (
    "naive",
    "an1",
    "an2",
    "epschoice",
    "homogeneous_or_medium",
    "homogeneous_and_medium",
)


@dataclass(frozen=True)
class MpvResult:
    value: float
    maximizer: CoarseGraining | None
    method: str
    details: dict = field(default_factory=dict)

    @property
    def maximizer_indices(self) -> list[int] | None:
        return list(self.maximizer.indices) if self.maximizer is not None else None

    def to_dict(self) -> dict:
        return {
            "value": float(self.value),
            "maximizer_indices": self.maximizer_indices,
            "method": self.method,
        }


def _interference(matrix: DecoherenceMatrix) -> np.ndarray:
    """Re D with a zeroed diagonal, symmetrized."""
    real = matrix.entries.real.copy()
    real = 0.5 * (real + real.T)
    np.fill_diagonal(real, 0.0)
    return real


def subset_violation(matrix: DecoherenceMatrix, subset) -> float:
    """|sum over a != b in the subset of D_ab|."""
    index = list(subset)
    if len(index) < 2:
        return 0.0
    block = _interference(matrix)[np.ix_(index, index)]
    return abs(float(block.sum()))


def _half_tables(block: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Subset sums x^T B x for every mask over the indices of ``block`` (bit j is index j),
    built by doubling: adding index j to a mask adds 2 * sum_{i in mask} B_ij.
    Returns the sums and the 0/1 membership matrix.
    """
    k = block.shape[0]
    values = np.zeros(1)
    members = np.zeros((1, k))
    for j in range(k):
        link = members @ block[:, j]
        values = np.concatenate([values, values + 2.0 * link])
        extended = members.copy()
        extended[:, j] = 1.0
        members = np.vstack([members, extended])
    return values, members


def _bit_reversed(masks: np.ndarray, positions: list[int], n: int) -> np.ndarray:
    """Maps bit j of each mask to bit n-1-positions[j]; larger means lexicographically earlier."""
    result = np.zeros(masks.shape, dtype=np.int64)
    for j, position in enumerate(positions):
        result |= ((masks >> j) & 1) << (n - 1 - position)
    return result


def mpv_exact(matrix: DecoherenceMatrix, n_max: int = N_MAX) -> MpvResult:
    """
    Exact maximum over all subsets S of |sum_{a != b in S} D_ab|.
    The index set is split in two halves whose subset sums are tabulated; the
    cross terms are evaluated block by block as matrix products. Near-ties
    (within TIE_TOL) go to the smallest subset, then the lexicographically first.
    Args:
        matrix (DecoherenceMatrix): The decoherence matrix.
        n_max (int): Largest history count searched exhaustively.
    Returns:
        MpvResult: method 'exact'.
    Raises:
        SubsetLimitError: If the set has more than n_max histories.
    """
    n = matrix.n
    if n > n_max:
        raise SubsetLimitError(
            f"{n} histories exceed the exact search limit of {n_max}; use the bounds instead.",
            n=n,
            n_max=n_max,
        )
    if n < 2:
        return MpvResult(0.0, CoarseGraining.subset(()), "exact", {"subsets": 2**n})

    interference = _interference(matrix)
    low = n // 2
    low_index = list(range(low))
    high_index = list(range(low, n))
    low_values, low_members = _half_tables(interference[np.ix_(low_index, low_index)])
    high_values, high_members = _half_tables(interference[np.ix_(high_index, high_index)])
    coupling = 2.0 * (low_members @ interference[np.ix_(low_index, high_index)])

    low_masks = np.arange(low_values.size, dtype=np.int64)
    high_masks = np.arange(high_values.size, dtype=np.int64)
    low_count = low_members.sum(axis=1).astype(np.int64)
    high_count = high_members.sum(axis=1).astype(np.int64)
    low_rev = _bit_reversed(low_masks, low_index, n)
    high_rev = _bit_reversed(high_masks, high_index, n)

    def block(start: int) -> np.ndarray:
        stop = min(start + CHUNK_ROWS, low_values.size)
        totals = (
            low_values[start:stop, None]
            + high_values[None, :]
            + coupling[start:stop] @ high_members.T
        )
        return np.abs(totals)

    best = 0.0
    for start in range(0, low_values.size, CHUNK_ROWS):
        best = max(best, float(block(start).max()))

    threshold = best - TIE_TOL * max(1.0, best)
    chosen: tuple[int, int] | None = None
    chosen_key: tuple[int, int] | None = None
    for start in range(0, low_values.size, CHUNK_ROWS):
        stop = min(start + CHUNK_ROWS, low_values.size)
        candidates = block(start) >= threshold
        if not candidates.any():
            continue
        counts = low_count[start:stop, None] + high_count[None, :]
        counts = np.where(candidates, counts, n + 1)
        smallest = int(counts.min())
        rev = np.where(counts == smallest, low_rev[start:stop, None] + high_rev[None, :], -1)
        row, col = np.unravel_index(int(np.argmax(rev)), rev.shape)
        key = (smallest, -int(rev[row, col]))
        if chosen_key is None or key < chosen_key:
            chosen_key = key
            chosen = (start + int(row), int(col))

    low_mask, high_mask = chosen
    subset = [i for i in low_index if (low_mask >> i) & 1] + [
        high_index[j] for j in range(len(high_index)) if (high_mask >> j) & 1
    ]
    value = subset_violation(matrix, subset)
    return MpvResult(
        value,
        CoarseGraining.subset(subset),
        "exact",
        {"subsets": 2**n, "search_max": best},
    )


def zeno_partition_violations(n: int, epsilon: float) -> tuple[float, float]:
    """
    Violations of the two sign classes of the projector-chain rotation family:
    X collects transition counts t = 0, 3 mod 4 (positive amplitude sign), Y
    collects t = 1, 2 mod 4. Histories with the same t share one state of weight
    binom(n, t) cos^{n-t} sin^t, so each class sum reduces to sums over t.
    """
    if n < 1:
        raise ParameterRangeError(f"Step count must be at least 1, got {n}.", n=n)
    c, s = math.cos(epsilon), math.sin(epsilon)
    t = np.arange(n + 1)
    log_binomial = gammaln(n + 1) - gammaln(t + 1) - gammaln(n - t + 1)
    amplitude = np.zeros(n + 1)
    if s == 0.0:
        amplitude[0] = abs(c) ** n
    elif c == 0.0:
        amplitude[n] = abs(s) ** n
    else:
        amplitude = np.exp(log_binomial + (n - t) * math.log(abs(c)) + t * math.log(abs(s)))
    # per-history probability times multiplicity: a_t^2 / binom(n, t)
    diagonal = amplitude**2 * np.exp(-log_binomial)
    residue = t % 4

    def violation(first: int, second: int) -> float:
        a = amplitude[residue == first].sum()
        b = amplitude[residue == second].sum()
        inside = (residue == first) | (residue == second)
        return float(a**2 + b**2 - diagonal[inside].sum())

    return violation(0, 3), violation(2, 1)


def mpv_grouped_zeno(n: int, epsilon: float) -> MpvResult:
    """MPV of the rotation family restricted to the two sign-class subsets."""
    x_violation, y_violation = zeno_partition_violations(n, epsilon)
    cell = "X" if abs(x_violation) >= abs(y_violation) else "Y"
    return MpvResult(
        max(abs(x_violation), abs(y_violation)),
        None,
        "grouped_zeno",
        {"x_violation": x_violation, "y_violation": y_violation, "cell": cell},
    )


def bound_sum_abs(matrix: DecoherenceMatrix) -> float:
    """sum_{a != b} |Re D_ab|, halved for homogeneous sets."""
    total = float(np.abs(_interference(matrix)).sum())
    return 0.5 * total if matrix.homogeneous else total


def eps_for_delta(
    delta: float, d: int, variant: str = "epschoice", n: int | None = None
) -> float:
    """
    Criterion scale epsilon(delta) that keeps the MPV below about delta.
    Args:
        delta (float): Target MPV, > 0.
        d (int): Hilbert space dimension of the history states.
        variant (str): One of EPS_VARIANTS. 'naive' needs the history count n.
        n (int | None): History count for the 'naive' variant.
    Returns:
        float: epsilon.
    Raises:
        ParameterRangeError: For delta <= 0, d < 1 or an unknown variant.
    """
    if delta <= 0 or not math.isfinite(delta):
        raise ParameterRangeError(f"delta must be positive, got {delta}.", delta=delta)
    if d < 1:
        raise ParameterRangeError(f"d must be at least 1, got {d}.", d=d)
    if variant == "naive":
        if n is None or n < 2:
            raise ParameterRangeError(
                "The naive selector needs a history count n >= 2.", n=n
            )
        return delta / (n * (n - 1))
    if variant in ("an1", "an2"):
        linear = (2 * d - 1) * (1 + delta if variant == "an2" else 1.0)
        # rationalized root of 2d*delta*e^2 + linear*e - delta = 0
        return 2 * delta / (linear + math.sqrt(linear**2 + 8 * d * delta**2))
    if variant == "epschoice":
        if delta >= 1:
            warnings.warn(
                f"delta = {delta} >= 1: epsilon = delta/(2d) no longer keeps the MPV small.",
                DeltaRangeWarning,
                stacklevel=2,
            )
        return delta / (2 * d)
    if variant == "homogeneous_or_medium":
        return delta / d
    if variant == "homogeneous_and_medium":
        return 2 * delta / d
    raise ParameterRangeError(
        f"Unknown variant '{variant}'; expected one of {EPS_VARIANTS}.", variant=variant
    )


def dh_sum_bound(epsilon: float, d: int, homogeneous: bool = True) -> float:
    """
    Bound on |sum_{a != b in S} D_ab| for a set passing the DHC at epsilon.
    Homogeneous: epsilon (2d-1) / (1 - 2d epsilon^2), relative to sum_{a in S} D_aa.
    General: epsilon (2d-1) / (1 + epsilon - 2d epsilon (1 + epsilon)), absolute.
    Raises:
        ParameterRangeError: Outside the region where the denominator is positive.
    """
    if epsilon < 0:
        raise ParameterRangeError(f"epsilon must be nonnegative, got {epsilon}.", epsilon=epsilon)
    if homogeneous:
        denominator = 1 - 2 * d * epsilon**2
        region = "epsilon^2 < 1/(2d)"
    else:
        denominator = 1 + epsilon - 2 * d * epsilon * (1 + epsilon)
        region = "1 + epsilon - 2d epsilon (1 + epsilon) > 0"
    if denominator <= 0:
        raise ParameterRangeError(
            f"epsilon = {epsilon} is outside the validity region {region} for d = {d}.",
            epsilon=epsilon,
            d=d,
            region=region,
        )
    return epsilon * (2 * d - 1) / denominator


def diagonal_sum_bound(epsilon: float, n: int) -> float:
    """sum_a D_aa <= 1 / (1 - (n-1) epsilon) for n histories passing the DHC."""
    denominator = 1 - (n - 1) * epsilon
    if denominator <= 0:
        raise ParameterRangeError(
            f"epsilon = {epsilon} is outside the validity region epsilon < 1/(n-1) for n = {n}.",
            epsilon=epsilon,
            n=n,
        )
    return 1 / denominator


def relative_sum_bound(epsilon: float, n: int) -> float:
    """epsilon (n - 1): the bound relative to sum_{a in S} D_aa before n is eliminated."""
    return epsilon * (n - 1)


def mpv_auto(matrix: DecoherenceMatrix, n_max: int = N_MAX) -> MpvResult:
    """Exact when n <= n_max, otherwise the sum-of-moduli bound marked bound-only."""
    if matrix.n <= n_max:
        return mpv_exact(matrix, n_max)
    return mpv_bounds(matrix)


def mpv_bounds(matrix: DecoherenceMatrix) -> MpvResult:
    return MpvResult(
        bound_sum_abs(matrix), None, "bound(sum_abs)", {"bound_only": True}
    )
