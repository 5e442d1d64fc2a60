"""
Example families and experiments: a set whose MPV grows with its size while the
DHC ratio stays fixed, projector chains that rotate a qubit in small steps,
randomly perturbed projectors, and random nearly consistent sets.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from rich.console import Console
from scipy.special import gammaln

from .consistency import dhc
from .histories import (
    ClassOperator,
    HistorySet,
    chain_history_set,
    decoherence_from_states,
)
from .linalg import DensityMatrix, Projector, rank_one_projector
from .mpv import zeno_partition_violations
from .utils import STYLES, ParameterRangeError, SubsetLimitError

console = Console()

ZENO_EXPLICIT_MAX = 14
INNER_PRODUCT_TOL = 1e-10
NULL_NORM = 1e-12
THETA_STEP = 0.5
WITNESS_ATTEMPTS = 200


# Large-violation family


@dataclass(frozen=True)
class AppendixDParams:
    n: int
    epsilon: float

    def __post_init__(self):
        if self.n < 2:
            raise ParameterRangeError(f"Need at least 2 history pairs, got n = {self.n}.", n=self.n)
        if not 0 < self.epsilon <= 1 / (self.n - 1) + 1e-12:
            raise ParameterRangeError(
                f"epsilon = {self.epsilon} violates 0 < epsilon <= 1/(n-1) = {1 / (self.n - 1):.6g}.",
                epsilon=self.epsilon,
                n=self.n,
            )

    @property
    def a(self) -> float:
        e, n = self.epsilon, self.n
        radicand = max((1 + e) * (1 + e - n * e), 0.0)
        return (1 + e + math.sqrt(radicand)) / e

    @property
    def b(self) -> float:
        e, n = self.epsilon, self.n
        radicand = max((1 - e) * (1 - e + n * e), 0.0)
        return (1 - e + math.sqrt(radicand)) / e


@dataclass(eq=False)
class AppendixDSet:
    history_set: HistorySet
    expected_mpv: float
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray


def appendix_d_vectors(params: AppendixDParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Columns u_i, v_i of C^n with u_i^dagger u_j = (1+e) delta_ij - e and
    v_i^dagger v_j = (1-e) delta_ij + e, and the orthonormal w_i = (u_i + v_i)/sqrt(2)
    in C^n (+) C^n.
    Raises:
        ParameterRangeError: If the inner products miss their targets.
    """
    n, e = params.n, params.epsilon
    a, b = params.a, params.b
    identity = np.eye(n)
    u = (a * identity - 1.0) / math.sqrt(a * a - 2 * a + n)
    v = (b * identity + 1.0) / math.sqrt(b * b + 2 * b + n)
    w = np.vstack([u, v]) / math.sqrt(2)
    checks = {
        "u": (u.T @ u, (1 + e) * identity - e),
        "v": (v.T @ v, (1 - e) * identity + e),
        "w": (w.T @ w, identity),
    }
    for name, (gram, target) in checks.items():
        gap = float(np.max(np.abs(gram - target)))
        if gap > INNER_PRODUCT_TOL:
            raise ParameterRangeError(
                f"Gram matrix of {name} is off by {gap:.3g}.", vectors=name, deviation=gap
            )
    return u.astype(complex), v.astype(complex), w.astype(complex)


def appendix_d_set(params: AppendixDParams) -> AppendixDSet:
    """
    Builds the 2n histories Pi_H w_i w_i^dagger on psi = sum_i w_i / sqrt(n), with
    Pi_H the projector onto the first (u) or second (v) half. The u histories come
    first. The MPV is (n-1) epsilon / 2, reached by collecting all u histories.
    """
    u, v, w = appendix_d_vectors(params)
    n = params.n
    psi = w.sum(axis=1) / math.sqrt(n)
    halves = [np.diag([1.0] * n + [0.0] * n), np.diag([0.0] * n + [1.0] * n)]
    ops = []
    labels = []
    for half, name in zip(halves, ("u", "v")):
        for i in range(n):
            ops.append(ClassOperator(half @ rank_one_projector(w[:, i]).matrix))
            labels.append(f"{name}{i + 1}")
    history_set = HistorySet(
        DensityMatrix.from_state(psi), ops, labels, homogeneous=True
    )
    return AppendixDSet(history_set, (n - 1) * params.epsilon / 2, u, v, w)


# Rotating projector chains


@dataclass(frozen=True)
class ZenoParams:
    n: int
    epsilon: float

    def __post_init__(self):
        if self.n < 1:
            raise ParameterRangeError(f"Need at least one step, got n = {self.n}.", n=self.n)
        if not 0 <= self.epsilon < math.pi / 2:
            raise ParameterRangeError(
                f"Rotation per step must lie in [0, pi/2), got {self.epsilon}.",
                epsilon=self.epsilon,
            )

    @classmethod
    def from_theta(cls, theta: float, n: int) -> "ZenoParams":
        return cls(n, theta / n)

    @property
    def theta(self) -> float:
        return self.n * self.epsilon


def zeno_vectors(step: int, epsilon: float) -> tuple[np.ndarray, np.ndarray]:
    """The rotated basis (u_+, u_-) after ``step`` rotations by epsilon."""
    angle = step * epsilon
    plus = np.array([math.cos(angle), math.sin(angle)], dtype=complex)
    minus = np.array([-math.sin(angle), math.cos(angle)], dtype=complex)
    return plus, minus


def zeno_decompositions(params: ZenoParams) -> list[list[Projector]]:
    return [
        [rank_one_projector(vector) for vector in zeno_vectors(step, params.epsilon)]
        for step in range(1, params.n + 1)
    ]


def zeno_labels(n: int) -> list[str]:
    """'+'/'-' strings in the order of ``build_chain_operators`` (first step slowest)."""
    return ["".join(signs) for signs in itertools.product("+-", repeat=n)]


def transition_count(label: str) -> int:
    """Sign changes along '+' followed by the history's signs."""
    sequence = "+" + label
    return sum(1 for left, right in zip(sequence, sequence[1:]) if left != right)


def zeno_sign(transitions: int) -> int:
    return -1 if ((transitions + 1) // 2) % 2 else 1


def _check_explicit(n: int) -> None:
    if n > ZENO_EXPLICIT_MAX:
        raise SubsetLimitError(
            f"n = {n} gives 2^{n} explicit histories; use zeno_closed_form for n > {ZENO_EXPLICIT_MAX}.",
            n=n,
            n_max=ZENO_EXPLICIT_MAX,
        )


def zeno_set(params: ZenoParams) -> HistorySet:
    """All 2^n projector chains applied to the unrotated '+' state."""
    _check_explicit(params.n)
    initial = DensityMatrix.from_state(zeno_vectors(0, params.epsilon)[0])
    return chain_history_set(
        initial, zeno_decompositions(params), labels=zeno_labels(params.n)
    )


def zeno_matrix_from_formula(params: ZenoParams) -> np.ndarray:
    """
    D_ab = sign_a sign_b cos^{2n-t_a-t_b} sin^{t_a+t_b} when t_a = t_b mod 2, else 0,
    with t the transition count. Same history order as ``zeno_set``.
    """
    _check_explicit(params.n)
    n = params.n
    c, s = math.cos(params.epsilon), math.sin(params.epsilon)
    transitions = np.array([transition_count(label) for label in zeno_labels(n)])
    amplitude = np.array([zeno_sign(t) * c ** (n - t) * s**t for t in transitions])
    same_parity = (transitions[:, None] - transitions[None, :]) % 2 == 0
    return np.where(same_parity, np.outer(amplitude, amplitude), 0.0).astype(complex)


def zeno_limit_violations(theta: float) -> tuple[float, float]:
    """Large-n limits of the X and Y violations at fixed theta = n epsilon."""
    ch, c, s, sh = math.cosh(theta), math.cos(theta), math.sin(theta), math.sinh(theta)
    x_limit = 0.5 * ch**2 + 0.5 * c * ch - 0.5 * s * sh - 1
    y_limit = 0.5 * ch**2 - 0.5 * c * ch + 0.5 * s * sh
    return x_limit, y_limit


def zeno_max_off_diagonal(n: int, epsilon: float) -> float:
    """
    Largest |D_ab|, a != b. Transition counts t1, t2 of equal parity contribute
    cos^{2n-t1-t2} sin^{t1+t2}; t1 = t2 needs at least two histories with that count.
    """
    c, s = abs(math.cos(epsilon)), abs(math.sin(epsilon))
    if s == 0.0:
        return 0.0
    t = np.arange(n + 1)
    log_state = (n - t) * math.log(c) + t * math.log(s)
    log_multiplicity = gammaln(n + 1) - gammaln(t + 1) - gammaln(n - t + 1)
    pair_log = log_state[:, None] + log_state[None, :]
    allowed = (t[:, None] - t[None, :]) % 2 == 0
    np.fill_diagonal(allowed, log_multiplicity > math.log(1.5))
    if not allowed.any():
        return 0.0
    return float(np.exp(np.max(np.where(allowed, pair_log, -np.inf))))


@dataclass
class ZenoClosedForm:
    n: int
    epsilon: float
    theta: float
    transitions: np.ndarray
    amplitudes: np.ndarray
    multiplicities: np.ndarray
    x_violation: float
    y_violation: float
    max_off_diagonal: float
    x_limit: float
    y_limit: float

    @property
    def x_residual(self) -> float:
        return abs(self.x_violation - self.x_limit)

    @property
    def y_residual(self) -> float:
        return abs(self.y_violation - self.y_limit)

    @property
    def mpv(self) -> float:
        return max(abs(self.x_violation), abs(self.y_violation))

    def row(self) -> dict:
        return {
            "n": self.n,
            "epsilon": self.epsilon,
            "theta": self.theta,
            "max_off_diagonal": self.max_off_diagonal,
            "x_violation": self.x_violation,
            "y_violation": self.y_violation,
            "x_residual": self.x_residual,
            "y_residual": self.y_residual,
        }


def zeno_closed_form(params: ZenoParams) -> ZenoClosedForm:
    """
    Grouped decoherence data in O(n^2): per transition count t the signed state
    amplitude cos^{n-t} sin^t and its multiplicity binom(n, t), the X/Y
    violations, the largest off-diagonal entry and the large-n limits.
    """
    n, epsilon = params.n, params.epsilon
    c, s = math.cos(epsilon), math.sin(epsilon)
    t = np.arange(n + 1)
    with np.errstate(divide="ignore"):
        log_state = (n - t) * np.log(abs(c)) + t * np.log(abs(s)) if s else np.where(t == 0, 0.0, -np.inf)
    signs = np.array([zeno_sign(int(k)) for k in t])
    multiplicities = np.exp(gammaln(n + 1) - gammaln(t + 1) - gammaln(n - t + 1))
    x_violation, y_violation = zeno_partition_violations(n, epsilon)
    x_limit, y_limit = zeno_limit_violations(params.theta)
    return ZenoClosedForm(
        n=n,
        epsilon=epsilon,
        theta=params.theta,
        transitions=t,
        amplitudes=signs * np.exp(log_state),
        multiplicities=np.round(multiplicities),
        x_violation=x_violation,
        y_violation=y_violation,
        max_off_diagonal=zeno_max_off_diagonal(n, epsilon),
        x_limit=x_limit,
        y_limit=y_limit,
    )


@dataclass
class Theorem6Witness:
    theta: float
    n: int
    max_off_diagonal: float
    mpv: float
    evidence: ZenoClosedForm


def theorem6_witness(epsilon_t: float, x: float, debug: bool = False) -> Theorem6Witness:
    """
    Finds a rotation family whose off-diagonal entries are all at most epsilon_t
    while its MPV exceeds x. theta starts at the first multiple of 0.5 with
    cosh^2(theta) > 2(x + 1), and n = max(ceil(theta), ceil(theta / sqrt(epsilon_t)))
    so that theta^2/n^2 <= epsilon_t. Each candidate is re-verified in closed form.
    Raises:
        ParameterRangeError: For non-positive inputs.
    """
    if epsilon_t <= 0 or x <= 0:
        raise ParameterRangeError(
            "epsilon_t and x must be positive.", epsilon_t=epsilon_t, x=x
        )
    theta = THETA_STEP
    while math.cosh(theta) ** 2 <= 2 * (x + 1):
        theta += THETA_STEP

    def steps_for(angle: float) -> int:
        return max(math.ceil(angle), math.ceil(angle / math.sqrt(epsilon_t)))

    n = steps_for(theta)
    for _ in range(WITNESS_ATTEMPTS):
        evidence = zeno_closed_form(ZenoParams.from_theta(theta, n))
        if debug:
            console.print(
                f"[{STYLES['debug']}]theta={theta}, n={n}: max off-diagonal {evidence.max_off_diagonal:.3g}, MPV {evidence.mpv:.6g}[/{STYLES['debug']}]"
            )
        if evidence.max_off_diagonal > epsilon_t:
            n *= 2
        elif evidence.mpv <= x:
            theta += THETA_STEP
            n = steps_for(theta)
        else:
            return Theorem6Witness(theta, n, evidence.max_off_diagonal, evidence.mpv, evidence)
    raise ParameterRangeError(
        "No witness found within the search budget.", epsilon_t=epsilon_t, x=x
    )


# Perturbed projectors


ENSEMBLES = ("gue", "block")


@dataclass(frozen=True)
class PerturbParams:
    d: int
    rank_p: int
    samples: int = 500
    epsilon: float = 1e-2
    seed: int = 0
    ensemble: str = "gue"
    slope_epsilons: tuple[float, ...] = (1e-2, 5e-3, 2.5e-3)

    def __post_init__(self):
        if not 0 < self.rank_p < self.d:
            raise ParameterRangeError(
                f"Need 0 < rank_p < d, got rank_p = {self.rank_p}, d = {self.d}.",
                rank_p=self.rank_p,
                d=self.d,
            )
        if self.rank_p < 2 or self.d - self.rank_p < 2:
            raise ParameterRangeError(
                "The base histories need rank_p >= 2 and d - rank_p >= 2.",
                rank_p=self.rank_p,
                d=self.d,
            )
        if self.samples < 1:
            raise ParameterRangeError(f"Need at least one sample, got {self.samples}.", samples=self.samples)
        if self.ensemble not in ENSEMBLES:
            raise ParameterRangeError(
                f"Unknown ensemble '{self.ensemble}'; expected one of {ENSEMBLES}.",
                ensemble=self.ensemble,
            )
        if self.epsilon <= 0 or any(e <= 0 for e in self.slope_epsilons):
            raise ParameterRangeError("Perturbation scales must be positive.", epsilon=self.epsilon)


def sample_gue(d: int, rng: np.random.Generator) -> np.ndarray:
    """Hermitian A with N(0,1) real diagonal and complex off-diagonal parts N(0,1/2)."""
    raw = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (raw + raw.conj().T) / 2


def sample_block_diagonal(d: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    """GUE sample with the blocks coupling range(P) and its complement removed; commutes with P."""
    sample = sample_gue(d, rng)
    sample[:rank, rank:] = 0.0
    sample[rank:, :rank] = 0.0
    return sample


def base_histories(d: int, rank: int) -> tuple[np.ndarray, list[np.ndarray]]:
    """
    P = diag(1^rank, 0^(d-rank)) and u_1 = (e_0 + e_rank)/sqrt(2),
    u_2 = (e_1 + e_{rank+1})/sqrt(2), so Re(u_1^dagger P u_2) = Re(u_1^dagger Pbar u_2) = 0.
    """
    projector = np.diag([1.0] * rank + [0.0] * (d - rank)).astype(complex)
    identity = np.eye(d, dtype=complex)
    first = (identity[0] + identity[rank]) / math.sqrt(2)
    second = (identity[1] + identity[rank + 1]) / math.sqrt(2)
    return projector, [first, second]


@dataclass(frozen=True)
class DhcTerms:
    first: float
    second: float
    null: bool


def dhc_terms(
    u_alpha: np.ndarray, u_beta: np.ndarray, projector: np.ndarray, generator: np.ndarray
) -> DhcTerms:
    """
    The two leading DHC ratios of the perturbed set:
    |Im(u_a^dagger P A Pbar u_b)| / (|P u_a| |P A Pbar u_b|) and
    |Re(u_a^dagger Pbar A P A Pbar u_b)| / (|P A Pbar u_a| |P A Pbar u_b|).
    A vanishing denominator marks the sample null.
    """
    complement = np.eye(projector.shape[0]) - projector
    leak_alpha = projector @ generator @ complement @ u_alpha
    leak_beta = projector @ generator @ complement @ u_beta
    kept_alpha = projector @ u_alpha
    norms = (
        np.linalg.norm(kept_alpha),
        np.linalg.norm(leak_alpha),
        np.linalg.norm(leak_beta),
    )
    if min(norms) <= NULL_NORM:
        return DhcTerms(math.nan, math.nan, True)
    first = abs(np.vdot(kept_alpha, leak_beta).imag) / (norms[0] * norms[2])
    second = abs(np.vdot(leak_alpha, leak_beta).real) / (norms[1] * norms[2])
    return DhcTerms(float(first), float(second), False)


def perturbed_projector(projector: np.ndarray, generator: np.ndarray, epsilon: float) -> np.ndarray:
    """U^dagger P U with U = exp(i epsilon A), from the eigendecomposition of A."""
    eigenvalues, eigenvectors = np.linalg.eigh(generator)
    unitary = (eigenvectors * np.exp(1j * epsilon * eigenvalues)) @ eigenvectors.conj().T
    return unitary.conj().T @ projector @ unitary


def perturbed_states(
    states: list[np.ndarray], projector: np.ndarray, generator: np.ndarray, epsilon: float
) -> np.ndarray:
    """Columns P2 P1 u for u in states, P1 in {P, Pbar}, P2 in {P', Pbar'}."""
    identity = np.eye(projector.shape[0])
    rotated = perturbed_projector(projector, generator, epsilon)
    first_step = (projector, identity - projector)
    second_step = (rotated, identity - rotated)
    return np.column_stack(
        [after @ before @ u for u in states for before in first_step for after in second_step]
    )


def _max_real_off_diagonal(states: np.ndarray) -> float:
    entries = decoherence_from_states(states).entries.real
    np.fill_diagonal(entries, 0.0)
    return float(np.max(np.abs(entries)))


@dataclass
class PerturbationReport:
    params: PerturbParams
    valid_samples: int
    null_samples: int
    mean_first: float
    mean_second: float
    stderr_first: float
    stderr_second: float
    expected: float
    theory_mean: float
    mean_off_diagonal: list[float]
    slope: float
    mean_dhc_achieved: float
    first_terms: np.ndarray = field(repr=False)
    second_terms: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        p = self.params
        return {
            "d": p.d,
            "rank_p": p.rank_p,
            "samples": p.samples,
            "epsilon": p.epsilon,
            "seed": p.seed,
            "ensemble": p.ensemble,
            "valid_samples": self.valid_samples,
            "null_samples": self.null_samples,
            "mean_first": self.mean_first,
            "mean_second": self.mean_second,
            "stderr_first": self.stderr_first,
            "stderr_second": self.stderr_second,
            "expected_rank_scaling": self.expected,
            "theory_mean": self.theory_mean,
            "slope_epsilons": list(p.slope_epsilons),
            "mean_off_diagonal": self.mean_off_diagonal,
            "slope": self.slope,
            "mean_dhc_achieved": self.mean_dhc_achieved,
        }


def _mean_and_error(values: np.ndarray) -> tuple[float, float]:
    if values.size == 0:
        return math.nan, math.nan
    if values.size == 1:
        return float(values[0]), math.nan
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


def perturbation_experiment(params: PerturbParams, debug: bool = False) -> PerturbationReport:
    """
    Monte Carlo estimate of the DHC terms for a consistent pair of histories
    extended by a randomly perturbed copy of {P, Pbar}. Sample i draws from
    ``default_rng([seed, i])`` so results do not depend on evaluation order.
    Args:
        params (PerturbParams): Dimension, rank, sample count, scales, seed and ensemble.
        debug (bool): Print progress.
    Returns:
        PerturbationReport: Term means with standard errors, null count, the
        off-diagonal means per scale with their log-log slope, and the mean DHC
        ratio of the perturbed set at ``params.epsilon``.
    """
    projector, states = base_histories(params.d, params.rank_p)
    first_terms, second_terms, achieved = [], [], []
    off_diagonal = np.zeros(len(params.slope_epsilons))
    null_samples = 0
    for index in range(params.samples):
        rng = np.random.default_rng([params.seed, index])
        if params.ensemble == "gue":
            generator = sample_gue(params.d, rng)
        else:
            generator = sample_block_diagonal(params.d, params.rank_p, rng)
        terms = dhc_terms(states[0], states[1], projector, generator)
        if terms.null:
            null_samples += 1
        else:
            first_terms.append(terms.first)
            second_terms.append(terms.second)
        for position, scale in enumerate(params.slope_epsilons):
            off_diagonal[position] += _max_real_off_diagonal(
                perturbed_states(states, projector, generator, scale)
            )
        perturbed = decoherence_from_states(
            perturbed_states(states, projector, generator, params.epsilon)
        )
        achieved.append(dhc(perturbed, params.epsilon).achieved_epsilon)
        if debug and (index + 1) % 100 == 0:
            console.print(
                f"[{STYLES['debug']}]{index + 1}/{params.samples} samples, {null_samples} null[/{STYLES['debug']}]"
            )

    off_diagonal /= params.samples
    if np.all(off_diagonal > 0) and len(params.slope_epsilons) > 1:
        slope = float(np.polyfit(np.log(params.slope_epsilons), np.log(off_diagonal), 1)[0])
    else:
        slope = math.nan
    first = np.array(first_terms)
    second = np.array(second_terms)
    mean_first, stderr_first = _mean_and_error(first)
    mean_second, stderr_second = _mean_and_error(second)
    rank = params.rank_p
    return PerturbationReport(
        params=params,
        valid_samples=int(first.size),
        null_samples=null_samples,
        mean_first=mean_first,
        mean_second=mean_second,
        stderr_first=stderr_first,
        stderr_second=stderr_second,
        expected=rank**-0.5,
        theory_mean=math.exp(math.lgamma(rank) - math.lgamma(rank + 0.5)) / math.sqrt(math.pi),
        mean_off_diagonal=[float(value) for value in off_diagonal],
        slope=slope,
        mean_dhc_achieved=float(np.mean(achieved)),
        first_terms=first,
        second_terms=second,
    )


# Random sets


def random_near_consistent_set(d: int, n: int, noise: float, seed: int) -> HistorySet:
    """
    n history states whose real embeddings are orthogonal in R^{2d}, with random
    probabilities, perturbed by complex Gaussian noise of scale ``noise`` and
    rescaled to unit total probability. C_a = u_a psi^dagger with psi the
    normalized sum of the states.
    Raises:
        ParameterRangeError: If n > 2d, more than the orthogonal states R^{2d} holds.
    """
    if n > 2 * d:
        raise ParameterRangeError(
            f"n = {n} exceeds 2d = {2 * d}, the most mutually orthogonal real history vectors in dimension {d}.",
            n=n,
            d=d,
        )
    if n < 1 or noise < 0:
        raise ParameterRangeError("Need n >= 1 and noise >= 0.", n=n, noise=noise)
    rng = np.random.default_rng(seed)
    basis, _ = np.linalg.qr(rng.standard_normal((2 * d, 2 * d)))
    weights = rng.dirichlet(np.ones(n))
    real_states = basis[:, :n] * np.sqrt(weights)
    states = real_states[:d] + 1j * real_states[d:]
    states = states + noise * (
        rng.standard_normal((d, n)) + 1j * rng.standard_normal((d, n))
    ) / math.sqrt(2 * d)
    total = states.sum(axis=1)
    norm = np.linalg.norm(total)
    if norm <= NULL_NORM:
        raise ParameterRangeError("Random states sum to zero; choose another seed.", seed=seed)
    states = states / norm
    psi = total / norm
    ops = [ClassOperator(np.outer(states[:, a], psi.conj())) for a in range(n)]
    return HistorySet(
        DensityMatrix.from_state(psi),
        ops,
        [f"r{a}" for a in range(n)],
        homogeneous=False,
    )

