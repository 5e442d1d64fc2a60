"""Dense complex linear algebra for history sets: projectors, density matrices, purification."""

from dataclasses import dataclass

import numpy as np

from .utils import (
    DimensionMismatchError,
    NotHermitianError,
    NotPositiveError,
    ProjectorError,
)

TAU_PROJ = 1e-10
TAU_RANK = 1e-12


def as_vector(data) -> np.ndarray:
    vector = np.asarray(data, dtype=complex)
    if vector.ndim != 1 or vector.size == 0:
        raise DimensionMismatchError(
            f"Expected a non-empty vector, got shape {vector.shape}.",
            shape=vector.shape,
        )
    return vector


def as_square_matrix(data) -> np.ndarray:
    matrix = np.asarray(data, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
        raise DimensionMismatchError(
            f"Expected a non-empty square matrix, got shape {matrix.shape}.",
            shape=matrix.shape,
        )
    return matrix


def _max_abs(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(matrix))) if matrix.size else 0.0


@dataclass(frozen=True, eq=False)
class Projector:
    """An orthogonal projector P = P† = P² on C^d."""

    matrix: np.ndarray
    rank: int

    @classmethod
    def from_matrix(cls, data, tol: float = TAU_PROJ) -> "Projector":
        """
        Validates a matrix as an orthogonal projector.
        Args:
            data: Square complex matrix (array-like).
            tol (float): Entrywise absolute tolerance.
        Returns:
            Projector: The validated projector with its integer rank.
        Raises:
            ProjectorError: If P is not Hermitian, not idempotent, or has non-integer trace.
        """
        matrix = as_square_matrix(data)
        hermitian_gap = _max_abs(matrix - matrix.conj().T)
        if hermitian_gap > tol:
            raise ProjectorError(
                "Projector is not Hermitian.", deviation=hermitian_gap
            )
        idempotent_gap = _max_abs(matrix @ matrix - matrix)
        if idempotent_gap > tol:
            raise ProjectorError(
                "Projector is not idempotent.", deviation=idempotent_gap
            )
        trace = float(np.trace(matrix).real)
        rank = int(round(trace))
        if abs(trace - rank) > tol:
            raise ProjectorError(
                f"Projector trace {trace} is not an integer.", trace=trace
            )
        return cls(matrix=matrix, rank=rank)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def complement(self) -> "Projector":
        return Projector(np.eye(self.dim, dtype=complex) - self.matrix, self.dim - self.rank)

    def conjugate_by(self, unitary: np.ndarray) -> "Projector":
        """Heisenberg-picture projector U† P U."""
        unitary = as_square_matrix(unitary)
        if unitary.shape[0] != self.dim:
            raise DimensionMismatchError(
                "Unitary and projector dimensions differ.",
                projector_dim=self.dim,
                unitary_dim=unitary.shape[0],
            )
        return Projector(unitary.conj().T @ self.matrix @ unitary, self.rank)


def rank_one_projector(vector) -> Projector:
    """|v><v| / <v|v>."""
    v = as_vector(vector)
    norm2 = float(np.vdot(v, v).real)
    if norm2 <= 0.0:
        raise ProjectorError("Cannot project onto the zero vector.")
    return Projector(np.outer(v, v.conj()) / norm2, 1)


@dataclass(frozen=True)
class DecompositionCheck:
    valid: bool
    message: str
    pair: tuple[int, int] | None = None
    deviation: float = 0.0

    def __bool__(self) -> bool:
        return self.valid


def validate_projector_decomposition(
    projectors: list[Projector], tol: float = TAU_PROJ
) -> DecompositionCheck:
    """
    Checks that projectors form a projective decomposition of the identity.
    The sum is checked first, then pairwise orthogonality in lexicographic pair order.
    Args:
        projectors (list[Projector]): Candidate decomposition.
        tol (float): Entrywise absolute tolerance.
    Returns:
        DecompositionCheck: Truthy when valid; otherwise names the first violated condition.
    Raises:
        DimensionMismatchError: If the projectors do not share one dimension.
    """
    if not projectors:
        return DecompositionCheck(False, "Empty decomposition.")
    dim = projectors[0].dim
    for index, projector in enumerate(projectors):
        if projector.dim != dim:
            raise DimensionMismatchError(
                f"Projector {index} has dimension {projector.dim}, projector 0 has {dim}.",
                indices=(0, index),
                dims=(dim, projector.dim),
            )
    total = sum(p.matrix for p in projectors)
    sum_gap = _max_abs(total - np.eye(dim))
    if sum_gap > tol:
        return DecompositionCheck(
            False, "Sum of projectors is not the identity.", None, sum_gap
        )
    for i in range(len(projectors)):
        for j in range(i + 1, len(projectors)):
            overlap = _max_abs(projectors[i].matrix @ projectors[j].matrix)
            if overlap > tol:
                return DecompositionCheck(
                    False, f"Projectors {i} and {j} are not orthogonal.", (i, j), overlap
                )
    return DecompositionCheck(True, "ok")


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """
    A validated density matrix. ``vector`` keeps the defining state of a pure
    density matrix so that purification returns it unchanged.
    """

    matrix: np.ndarray
    kind: str
    vector: np.ndarray | None = None

    @classmethod
    def from_matrix(cls, data, tol: float = TAU_PROJ) -> "DensityMatrix":
        """
        Raises:
            NotHermitianError: If the matrix is not Hermitian within tol.
            NotPositiveError: On a trace other than 1 or a negative eigenvalue.
        """
        matrix = as_square_matrix(data)
        hermitian_gap = _max_abs(matrix - matrix.conj().T)
        if hermitian_gap > tol:
            raise NotHermitianError(
                "Density matrix is not Hermitian.", deviation=hermitian_gap
            )
        trace = float(np.trace(matrix).real)
        if abs(trace - 1.0) > tol:
            raise NotPositiveError(f"Density matrix has trace {trace}.", trace=trace)
        eigenvalues = np.linalg.eigvalsh(matrix)
        if eigenvalues[0] < -tol:
            raise NotPositiveError(
                f"Density matrix has negative eigenvalue {eigenvalues[0]}.",
                eigenvalue=float(eigenvalues[0]),
            )
        significant = int(np.sum(eigenvalues > TAU_RANK * max(eigenvalues[-1], 1.0)))
        return cls(matrix=matrix, kind="pure" if significant == 1 else "mixed")

    @classmethod
    def from_state(cls, state) -> "DensityMatrix":
        """Pure density matrix of a state vector (normalized here)."""
        psi = as_vector(state)
        norm = np.linalg.norm(psi)
        if norm == 0.0:
            raise NotPositiveError("Initial state is the zero vector.")
        psi = psi / norm
        return cls(matrix=np.outer(psi, psi.conj()), kind="pure", vector=psi)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class Purification:
    state: np.ndarray
    dimension: int
    rank: int


def _fix_phase(vector: np.ndarray) -> np.ndarray:
    # first significant component real and positive
    index = int(np.argmax(np.abs(vector) > 1e-8 * np.max(np.abs(vector))))
    phase = vector[index] / abs(vector[index])
    return vector / phase


def purify(rho: DensityMatrix, tau_rank: float = TAU_RANK) -> Purification:
    """
    Represents rho as the reduced state of |psi> = sum_i sqrt(p_i) |psi_i> (x) |i>
    in dimension N = d * r. Operators act on it as A (x) 1_r.
    Args:
        rho (DensityMatrix): The state to purify.
        tau_rank (float): Relative eigenvalue cutoff for the rank.
    Returns:
        Purification: The state vector, N and r.
    Raises:
        NotPositiveError: If rho has an eigenvalue below -TAU_PROJ.
    """
    if rho.vector is not None:
        return Purification(rho.vector, rho.dim, 1)
    eigenvalues, eigenvectors = np.linalg.eigh(rho.matrix)
    if eigenvalues[0] < -TAU_PROJ:
        raise NotPositiveError(
            f"Cannot purify: eigenvalue {eigenvalues[0]} is negative.",
            eigenvalue=float(eigenvalues[0]),
        )
    cutoff = tau_rank * max(float(eigenvalues[-1]), 0.0)
    keep = [i for i in range(len(eigenvalues)) if eigenvalues[i] > cutoff]
    columns = [_fix_phase(eigenvectors[:, i]) for i in keep]
    weights = [float(eigenvalues[i]) for i in keep]
    # descending weight; ties by lexicographic comparison of the real embedding
    order = sorted(
        range(len(keep)),
        key=lambda k: (
            -round(weights[k], 12),
            tuple(np.round(real_embed(columns[k]), 12)),
        ),
    )
    rank = len(order)
    factor = np.column_stack([np.sqrt(weights[k]) * columns[k] for k in order])
    state = factor.reshape(-1)
    return Purification(state, rho.dim * rank, rank)


def extend_operator(operator: np.ndarray, rank: int) -> np.ndarray:
    """A (x) 1_r, matching the index layout of ``purify``."""
    if rank == 1:
        return operator
    return np.kron(operator, np.eye(rank))


def partial_trace_ancilla(state: np.ndarray, dim: int) -> np.ndarray:
    """Traces out the ancilla factor of a purified state of dimension dim * r."""
    state = as_vector(state)
    if state.size % dim:
        raise DimensionMismatchError(
            f"State of length {state.size} is not a multiple of {dim}.",
            length=state.size,
            dim=dim,
        )
    factor = state.reshape(dim, state.size // dim)
    return factor @ factor.conj().T


def real_embed(vector) -> np.ndarray:
    """Re(u) (+) Im(u); inner products become Re(u^dagger u')."""
    u = as_vector(vector)
    return np.concatenate([u.real, u.imag])


def is_real_orthogonal_family(vectors, tol: float = TAU_PROJ) -> bool:
    """True iff all vectors are nonzero and pairwise orthogonal after real embedding."""
    embedded = np.column_stack([real_embed(v) for v in vectors])
    gram = embedded.T @ embedded
    norms = np.sqrt(np.diag(gram))
    if np.any(norms <= tol):
        return False
    normalized = gram / np.outer(norms, norms)
    off_diagonal = normalized - np.diag(np.diag(normalized))
    return _max_abs(off_diagonal) <= tol
