import math

import numpy as np
import pytest
from historyforge.linalg import (
    DensityMatrix,
    Projector,
    extend_operator,
    is_real_orthogonal_family,
    partial_trace_ancilla,
    purify,
    rank_one_projector,
    real_embed,
    validate_projector_decomposition,
)
from historyforge.utils import (
    DimensionMismatchError,
    NotHermitianError,
    NotPositiveError,
    ProjectorError,
)


@pytest.fixture
def rng():
    return np.random.default_rng(20240518)


def random_state(rng, d):
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_density(rng, d, rank):
    vectors = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = vectors @ vectors.conj().T
    return rho / np.trace(rho).real


def rotated_pair(epsilon, step=1):
    angle = step * epsilon
    plus = np.array([math.cos(angle), math.sin(angle)])
    minus = np.array([-math.sin(angle), math.cos(angle)])
    return rank_one_projector(plus), rank_one_projector(minus)


def test_projector_from_matrix_rank():
    projector = Projector.from_matrix(np.diag([1.0, 1.0, 0.0]))
    assert projector.rank == 2
    assert projector.dim == 3


def test_projector_not_idempotent():
    with pytest.raises(ProjectorError, match="idempotent"):
        Projector.from_matrix(np.diag([0.5, 0.0]))


def test_projector_not_hermitian():
    with pytest.raises(ProjectorError, match="Hermitian"):
        Projector.from_matrix(np.array([[1.0, 1.0], [0.0, 0.0]]))


def test_projector_rejects_non_square():
    with pytest.raises(DimensionMismatchError):
        Projector.from_matrix(np.zeros((2, 3)))


def test_projector_complement():
    projector = Projector.from_matrix(np.diag([1.0, 0.0, 0.0]))
    complement = projector.complement()
    assert complement.rank == 2
    np.testing.assert_allclose(complement.matrix, np.diag([0.0, 1.0, 1.0]))


def test_conjugate_by_unitary(rng):
    projector = Projector.from_matrix(np.diag([1.0, 0.0]))
    unitary, _ = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
    rotated = projector.conjugate_by(unitary)
    np.testing.assert_allclose(rotated.matrix @ rotated.matrix, rotated.matrix, atol=1e-12)
    assert rotated.rank == 1


def test_rank_one_projector_normalizes():
    projector = rank_one_projector([3.0, 4.0j])
    assert projector.rank == 1
    assert np.trace(projector.matrix).real == pytest.approx(1.0)


def test_rank_one_projector_zero_vector():
    with pytest.raises(ProjectorError):
        rank_one_projector([0.0, 0.0])


def test_decomposition_complementary_diagonal():
    check = validate_projector_decomposition(
        [Projector.from_matrix(np.diag([1.0, 0.0])), Projector.from_matrix(np.diag([0.0, 1.0]))]
    )
    assert check
    assert check.pair is None


def test_decomposition_rotated_pair():
    assert validate_projector_decomposition(list(rotated_pair(0.3)))


def test_decomposition_duplicated_projector():
    projector = Projector.from_matrix(np.diag([1.0, 0.0]))
    check = validate_projector_decomposition([projector, projector])
    assert not check
    assert "Sum" in check.message


def test_decomposition_dimension_mismatch():
    with pytest.raises(DimensionMismatchError) as excinfo:
        validate_projector_decomposition(
            [Projector.from_matrix(np.eye(2)), Projector.from_matrix(np.eye(3))]
        )
    assert excinfo.value.details["indices"] == (0, 1)


def test_decomposition_ranks_add_to_dimension(rng):
    basis, _ = np.linalg.qr(rng.standard_normal((5, 5)))
    projectors = [
        Projector.from_matrix(basis[:, :2] @ basis[:, :2].T),
        Projector.from_matrix(basis[:, 2:] @ basis[:, 2:].T),
    ]
    assert validate_projector_decomposition(projectors)
    assert sum(p.rank for p in projectors) == 5


def test_density_matrix_pure_and_mixed():
    assert DensityMatrix.from_matrix(np.diag([1.0, 0.0])).kind == "pure"
    assert DensityMatrix.from_matrix(np.diag([0.7, 0.3])).kind == "mixed"


def test_density_matrix_not_hermitian():
    with pytest.raises(NotHermitianError):
        DensityMatrix.from_matrix(np.array([[0.5, 0.5], [0.0, 0.5]]))


def test_density_matrix_negative_eigenvalue():
    with pytest.raises(NotPositiveError) as excinfo:
        DensityMatrix.from_matrix(np.diag([1.2, -0.2]))
    assert excinfo.value.details["eigenvalue"] == pytest.approx(-0.2)


def test_density_matrix_bad_trace():
    with pytest.raises(NotPositiveError):
        DensityMatrix.from_matrix(np.diag([0.5, 0.4]))


def test_from_state_normalizes():
    rho = DensityMatrix.from_state([2.0, 0.0])
    np.testing.assert_allclose(rho.vector, [1.0, 0.0])
    assert rho.kind == "pure"


def test_from_state_zero():
    with pytest.raises(NotPositiveError):
        DensityMatrix.from_state([0.0, 0.0])


def test_purify_pure_state_is_itself():
    rho = DensityMatrix.from_state([1.0, 0.0, 0.0])
    purification = purify(rho)
    assert purification.dimension == 3
    assert purification.rank == 1
    np.testing.assert_allclose(purification.state, [1.0, 0.0, 0.0])


def test_purify_pure_matrix_without_vector():
    purification = purify(DensityMatrix.from_matrix(np.diag([0.0, 1.0])))
    assert purification.rank == 1
    np.testing.assert_allclose(np.abs(purification.state), [0.0, 1.0], atol=1e-15)


def test_purify_maximally_mixed_qubit():
    rho = DensityMatrix.from_matrix(np.eye(2) / 2)
    purification = purify(rho)
    assert purification.dimension == 4
    np.testing.assert_allclose(
        partial_trace_ancilla(purification.state, 2), np.eye(2) / 2, atol=1e-10
    )


def test_purify_round_trip_random(rng):
    matrix = random_density(rng, 4, 3)
    purification = purify(DensityMatrix.from_matrix(matrix))
    assert purification.rank == 3
    np.testing.assert_allclose(partial_trace_ancilla(purification.state, 4), matrix, atol=1e-10)


def test_purify_is_deterministic(rng):
    rho = DensityMatrix.from_matrix(random_density(rng, 3, 2))
    np.testing.assert_array_equal(purify(rho).state, purify(rho).state)


def test_extend_operator_matches_purification(rng):
    matrix = random_density(rng, 3, 2)
    operator = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    purification = purify(DensityMatrix.from_matrix(matrix))
    extended = extend_operator(operator, purification.rank) @ purification.state
    reduced = partial_trace_ancilla(extended, 3)
    np.testing.assert_allclose(reduced, operator @ matrix @ operator.conj().T, atol=1e-10)


def test_partial_trace_length_mismatch():
    with pytest.raises(DimensionMismatchError):
        partial_trace_ancilla(np.ones(5), 2)


def test_real_embed_definition():
    v = real_embed(np.array([1.0, 1.0j]) / math.sqrt(2))
    np.testing.assert_allclose(v, [1 / math.sqrt(2), 0.0, 0.0, 1 / math.sqrt(2)])


def test_real_embed_phase_i_is_orthogonal():
    u = np.array([1.0, 0.0], dtype=complex)
    w = 1j * u
    assert np.vdot(u, w) == 1j
    assert real_embed(u) @ real_embed(w) == 0.0


def test_real_embed_inner_product(rng):
    u = random_state(rng, 5) * 1.7
    w = random_state(rng, 5)
    assert real_embed(u) @ real_embed(w) == pytest.approx(np.vdot(u, w).real, abs=1e-14)
    assert np.linalg.norm(real_embed(u)) == pytest.approx(np.linalg.norm(u), abs=1e-14)


def test_real_orthogonal_family_limit(rng):
    d = 3
    basis, _ = np.linalg.qr(rng.standard_normal((2 * d, 2 * d)))
    family = [basis[:d, k] + 1j * basis[d:, k] for k in range(2 * d)]
    assert is_real_orthogonal_family(family)
    extra = random_state(rng, d)
    assert not is_real_orthogonal_family(family + [extra])


def test_real_orthogonal_family_rejects_zero():
    assert not is_real_orthogonal_family([np.array([1.0, 0.0]), np.zeros(2)])
