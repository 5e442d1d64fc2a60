"""History sets, class operators, history states and the decoherence matrix."""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    DensityMatrix,
    Projector,
    as_square_matrix,
    extend_operator,
    purify,
    validate_projector_decomposition,
)
from .utils import (
    DecompositionError,
    DimensionMismatchError,
    NotHermitianError,
    NotPositiveError,
    NullBranchError,
    OverlappingCellsError,
)

TAU_COMPLETE = 1e-8
TAU_NULL = 1e-12
HERMITIAN_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ClassOperator:
    """
    C_alpha. ``chain`` lists (step, projector index) pairs when the operator
    is a time-ordered product of projectors, latest step leftmost.
    """

    matrix: np.ndarray
    chain: tuple[tuple[int, int], ...] | None = None

    @property
    def form(self) -> str:
        return "raw" if self.chain is None else "chain"

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def raw(cls, data) -> "ClassOperator":
        return cls(as_square_matrix(data))


@dataclass(eq=False)
class HistorySet:
    """
    An initial state together with an ordered list of class operators.
    ``decompositions`` is kept for chain-built sets so they can be written back as chains.
    """

    initial: DensityMatrix
    ops: list[ClassOperator]
    labels: list[str] = field(default_factory=list)
    homogeneous: bool = False
    decompositions: list[list[Projector]] | None = None

    def __post_init__(self):
        if not self.ops:
            raise DimensionMismatchError("A history set needs at least one class operator.")
        for index, op in enumerate(self.ops):
            if op.dim != self.initial.dim:
                raise DimensionMismatchError(
                    f"Class operator {index} has dimension {op.dim}, initial state has {self.initial.dim}.",
                    index=index,
                    operator_dim=op.dim,
                    state_dim=self.initial.dim,
                )
        if not self.labels:
            self.labels = [f"h{index}" for index in range(len(self.ops))]
        if len(self.labels) != len(self.ops):
            raise DimensionMismatchError(
                f"{len(self.labels)} labels for {len(self.ops)} histories.",
                labels=len(self.labels),
                histories=len(self.ops),
            )

    @property
    def n(self) -> int:
        return len(self.ops)

    @property
    def dimension(self) -> int:
        return self.initial.dim

    @property
    def complete(self) -> bool:
        """Whether the class operators sum to the identity within TAU_COMPLETE."""
        total = sum(op.matrix for op in self.ops)
        return float(np.max(np.abs(total - np.eye(self.dimension)))) <= TAU_COMPLETE


@dataclass(frozen=True, eq=False)
class DecoherenceMatrix:
    entries: np.ndarray
    homogeneous: bool = False

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise DimensionMismatchError(
                f"Decoherence matrix must be square, got shape {entries.shape}.",
                shape=entries.shape,
            )
        scale = max(1.0, float(np.max(np.abs(entries)))) if entries.size else 1.0
        gap = float(np.max(np.abs(entries - entries.conj().T))) if entries.size else 0.0
        if gap > HERMITIAN_TOL * scale:
            raise NotHermitianError(
                "Decoherence matrix is not Hermitian.", deviation=gap
            )
        diagonal = entries.diagonal().real
        if entries.size and diagonal.min() < -HERMITIAN_TOL * scale:
            raise NotPositiveError(
                f"Negative probability {diagonal.min()} on the diagonal.",
                index=int(np.argmin(diagonal)),
            )
        object.__setattr__(self, "entries", entries)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def probabilities(self) -> np.ndarray:
        return self.entries.diagonal().real.copy()

    @property
    def total(self) -> float:
        return float(self.entries.sum().real)

    def null_histories(self, tau_null: float = TAU_NULL) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.probabilities <= tau_null)]


@dataclass(frozen=True)
class CoarseGraining:
    """Cells of history indices. A single cell is a subset; several cells a partition."""

    cells: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        cells = tuple(tuple(sorted(int(i) for i in cell)) for cell in self.cells)
        seen: dict[int, int] = {}
        for position, cell in enumerate(cells):
            if len(set(cell)) != len(cell):
                raise OverlappingCellsError(
                    f"Cell {position} repeats an index.", cell=position
                )
            for index in cell:
                if index in seen:
                    raise OverlappingCellsError(
                        f"History {index} appears in cells {seen[index]} and {position}.",
                        index=index,
                        cells=(seen[index], position),
                    )
                seen[index] = position
        object.__setattr__(self, "cells", cells)

    @classmethod
    def subset(cls, indices) -> "CoarseGraining":
        return cls((tuple(indices),))

    @classmethod
    def singletons(cls, n: int) -> "CoarseGraining":
        return cls(tuple((i,) for i in range(n)))

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(sorted(i for cell in self.cells for i in cell))

    def check_range(self, n: int) -> None:
        for index in self.indices:
            if not 0 <= index < n:
                raise DimensionMismatchError(
                    f"History index {index} is outside 0..{n - 1}.", index=index, n=n
                )

    def indicator(self, n: int) -> np.ndarray:
        self.check_range(n)
        matrix = np.zeros((len(self.cells), n))
        for row, cell in enumerate(self.cells):
            matrix[row, list(cell)] = 1.0
        return matrix


def heisenberg_decompositions(
    decompositions: list[list[Projector]], evolutions: list[np.ndarray]
) -> list[list[Projector]]:
    """
    Folds explicit-time evolution into the projectors: P -> U(t_k)† P U(t_k).
    Args:
        decompositions (list[list[Projector]]): Schrödinger-picture projectors per step.
        evolutions (list[np.ndarray]): U(t_k) for each step, evolution from the initial time.
    Returns:
        list[list[Projector]]: Heisenberg-picture decompositions.
    """
    if len(evolutions) != len(decompositions):
        raise DimensionMismatchError(
            f"{len(evolutions)} evolution operators for {len(decompositions)} steps.",
            steps=len(decompositions),
            evolutions=len(evolutions),
        )
    return [
        [projector.conjugate_by(unitary) for projector in decomposition]
        for decomposition, unitary in zip(decompositions, evolutions)
    ]


def build_chain_operators(
    decompositions: list[list[Projector]],
    evolutions: list[np.ndarray] | None = None,
) -> list[ClassOperator]:
    """
    Builds C_alpha = P^n_{alpha_n} ... P^1_{alpha_1} for every alpha in the Cartesian
    product of the decompositions. The first step varies slowest.
    Raises:
        DecompositionError: If a step is not a projective decomposition of the identity.
        DimensionMismatchError: If steps act on different dimensions.
    """
    if not decompositions:
        raise DecompositionError("At least one projector decomposition is required.")
    if evolutions is not None:
        decompositions = heisenberg_decompositions(decompositions, evolutions)
    dim = decompositions[0][0].dim if decompositions[0] else 0
    for step, decomposition in enumerate(decompositions):
        check = validate_projector_decomposition(decomposition)
        if not check:
            raise DecompositionError(
                f"Step {step}: {check.message}",
                step=step,
                pair=check.pair,
                deviation=check.deviation,
            )
        if decomposition[0].dim != dim:
            raise DimensionMismatchError(
                f"Step {step} acts on dimension {decomposition[0].dim}, step 0 on {dim}.",
                step=step,
            )
    operators = []
    for choice in itertools.product(*[range(len(d)) for d in decompositions]):
        matrix = np.eye(dim, dtype=complex)
        for step, index in enumerate(choice):
            matrix = decompositions[step][index].matrix @ matrix
        operators.append(ClassOperator(matrix, tuple(enumerate(choice))))
    return operators


def chain_history_set(
    initial: DensityMatrix,
    decompositions: list[list[Projector]],
    labels: list[str] | None = None,
    evolutions: list[np.ndarray] | None = None,
) -> HistorySet:
    """History set of all projector chains; chain-built sets are homogeneous."""
    if evolutions is not None:
        decompositions = heisenberg_decompositions(decompositions, evolutions)
    ops = build_chain_operators(decompositions)
    if labels is None:
        labels = ["".join(str(index) for _, index in op.chain) for op in ops]
    return HistorySet(
        initial=initial,
        ops=ops,
        labels=labels,
        homogeneous=True,
        decompositions=decompositions,
    )


def history_state_matrix(history_set: HistorySet) -> np.ndarray:
    """Columns are the history states u_alpha = C_alpha |psi> in the purified space."""
    purification = purify(history_set.initial)
    return np.column_stack(
        [
            extend_operator(op.matrix, purification.rank) @ purification.state
            for op in history_set.ops
        ]
    )


def history_space_dimension(history_set: HistorySet) -> int:
    """Dimension of the space the history states live in, d times the rank of rho."""
    return purify(history_set.initial).dimension


def history_states(history_set: HistorySet) -> list[np.ndarray]:
    states = history_state_matrix(history_set)
    return [states[:, index].copy() for index in range(states.shape[1])]


def decoherence_from_states(states: np.ndarray, homogeneous: bool = False) -> DecoherenceMatrix:
    """D_ab = u_b^dagger u_a for the columns of ``states``."""
    entries = states.T @ states.conj()
    entries = 0.5 * (entries + entries.conj().T)
    return DecoherenceMatrix(entries, homogeneous)


def decoherence_matrix(history_set: HistorySet) -> DecoherenceMatrix:
    """
    Computes D_ab = Tr(C_a rho C_b^dagger) through the (purified) history states.
    Args:
        history_set (HistorySet): The set to evaluate.
    Returns:
        DecoherenceMatrix: Hermitian matrix with the probabilities on its diagonal.
    """
    return decoherence_from_states(
        history_state_matrix(history_set), history_set.homogeneous
    )


def decoherence_matrix_direct(history_set: HistorySet) -> DecoherenceMatrix:
    """Tr(C_a rho C_b^dagger) on the unpurified density matrix."""
    rho = history_set.initial.matrix
    ops = np.stack([op.matrix for op in history_set.ops])
    weighted = ops @ rho
    entries = np.einsum("aij,bij->ab", weighted, ops.conj())
    entries = 0.5 * (entries + entries.conj().T)
    return DecoherenceMatrix(entries, history_set.homogeneous)


def coarse_grain(matrix: DecoherenceMatrix, graining: CoarseGraining) -> DecoherenceMatrix:
    """D*_bc = sum over a in cell b, a' in cell c of D_aa'."""
    indicator = graining.indicator(matrix.n)
    entries = indicator @ matrix.entries @ indicator.T
    return DecoherenceMatrix(entries, homogeneous=False)


def coarse_grain_set(history_set: HistorySet, graining: CoarseGraining) -> HistorySet:
    """Sums class operators cell by cell."""
    graining.check_range(history_set.n)
    ops = [
        ClassOperator(sum(history_set.ops[i].matrix for i in cell))
        for cell in graining.cells
    ]
    labels = ["+".join(history_set.labels[i] for i in cell) for cell in graining.cells]
    return HistorySet(history_set.initial, ops, labels, homogeneous=False)


def cell_probability(matrix: DecoherenceMatrix, cell) -> float:
    """P(cell) = sum of the block of D on the cell."""
    index = list(cell)
    return float(matrix.entries[np.ix_(index, index)].sum().real)


def current_density_matrix(history_set: HistorySet, past: ClassOperator) -> DensityMatrix:
    """
    rho_c = C_p rho C_p^dagger / Tr(C_p rho C_p^dagger).
    Raises:
        NullBranchError: If the past branch has probability at most TAU_NULL.
    """
    if past.dim != history_set.dimension:
        raise DimensionMismatchError(
            "Past operator and initial state dimensions differ.",
            past_dim=past.dim,
            state_dim=history_set.dimension,
        )
    branch = past.matrix @ history_set.initial.matrix @ past.matrix.conj().T
    weight = float(np.trace(branch).real)
    if weight <= TAU_NULL:
        raise NullBranchError("null branch", probability=weight)
    branch = branch / weight
    branch = 0.5 * (branch + branch.conj().T)
    return DensityMatrix.from_matrix(branch)


def branch_set(
    history_set: HistorySet,
    past: ClassOperator,
    futures: list[ClassOperator],
    labels: list[str] | None = None,
) -> HistorySet:
    """The future histories evaluated on the current density matrix of ``past``."""
    current = current_density_matrix(history_set, past)
    return HistorySet(current, list(futures), labels or [], homogeneous=history_set.homogeneous)
