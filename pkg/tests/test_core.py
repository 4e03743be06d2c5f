"""Basis conventions, dressed transform, and population bookkeeping."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dressedion.core import (
    LABELS,
    ZEEMAN_DIAG,
    basis_state,
    destroy,
    dressed_transform,
    level_index,
    normalize,
    population,
    populations,
    require_hermitian,
    tensor_with_fock,
)

SQ2 = np.sqrt(2.0)


def test_level_ordering_is_frozen():
    assert LABELS == ("0", "0'", "-1", "+1")
    assert [level_index(lab) for lab in LABELS] == [0, 1, 2, 3]
    with pytest.raises(ValueError):
        level_index("2")


def test_zeeman_diagonal_signs():
    # |+1> shifts up with the field, |-1> down, clock states untouched
    assert ZEEMAN_DIAG[level_index("+1")] == 1.0
    assert ZEEMAN_DIAG[level_index("-1")] == -1.0
    assert ZEEMAN_DIAG[level_index("0")] == 0.0
    assert ZEEMAN_DIAG[level_index("0'")] == 0.0


def test_basis_state_flat_index():
    psi = basis_state("-1", n_fock=3, fock=2)
    assert psi.shape == (12,)
    expected = np.zeros(12)
    expected[2 * 3 + 2] = 1.0  # level index 2, fock fastest
    np.testing.assert_array_equal(psi, expected)


def test_basis_state_validation():
    with pytest.raises(ValueError):
        basis_state("0", n_fock=2, fock=2)
    with pytest.raises(ValueError):
        basis_state("0", n_fock=0)
    with pytest.raises(ValueError):
        basis_state("x")


def test_normalize():
    psi = normalize(np.array([3.0, 4.0]))
    np.testing.assert_allclose(np.linalg.norm(psi), 1.0, rtol=0, atol=1e-15)
    with pytest.raises(ValueError):
        normalize(np.zeros(4))


def test_require_hermitian():
    h = np.array([[1.0, 1j], [-1j, 2.0]])
    assert require_hermitian(h) is h
    with pytest.raises(ValueError):
        require_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_tensor_with_fock_layout():
    op = np.zeros((4, 4))
    op[0, 1] = 5.0
    big = tensor_with_fock(op, 3)
    assert big.shape == (12, 12)
    # internal element replicated on the Fock diagonal
    assert big[0 * 3 + 1, 1 * 3 + 1] == 5.0
    assert big[0 * 3 + 1, 1 * 3 + 2] == 0.0
    with pytest.raises(ValueError):
        tensor_with_fock(np.eye(3), 2)


def test_tensor_with_fock_spectrum_multiplicity():
    op = np.diag([1.0, 2.0, 3.0, 4.0])
    vals = np.sort(np.linalg.eigvalsh(tensor_with_fock(op, 3)))
    np.testing.assert_allclose(vals, np.repeat([1.0, 2.0, 3.0, 4.0], 3))


def test_destroy_matrix_elements():
    b = destroy(4)
    assert b[0, 1] == 1.0
    np.testing.assert_allclose(b[1, 2], SQ2)
    num = b.conj().T @ b
    np.testing.assert_allclose(np.diag(num).real, [0, 1, 2, 3], atol=1e-15)


def test_dressed_columns_at_zero_phase():
    frame = dressed_transform(0.0)
    # order (|0>, |0'>, |-1>, |+1>)
    np.testing.assert_allclose(frame.column("u"), [1 / SQ2, 0, 0.5, 0.5], atol=1e-15)
    np.testing.assert_allclose(frame.column("d"), [-1 / SQ2, 0, 0.5, 0.5], atol=1e-15)
    np.testing.assert_allclose(frame.column("D"), [0, 0, 1 / SQ2, -1 / SQ2], atol=1e-15)
    np.testing.assert_allclose(frame.column("B"), [0, 0, 1 / SQ2, 1 / SQ2], atol=1e-15)
    np.testing.assert_allclose(frame.column("0'"), [0, 1, 0, 0], atol=1e-15)
    with pytest.raises(ValueError):
        frame.column("dark")


def test_dressed_columns_at_pi_phase():
    # at phase pi the protected column is the symmetric combination
    frame = dressed_transform(np.pi)
    np.testing.assert_allclose(frame.column("D"), [0, 0, 1 / SQ2, 1 / SQ2], atol=1e-15)
    np.testing.assert_allclose(frame.column("B"), [0, 0, 1 / SQ2, -1 / SQ2], atol=1e-15)


@given(st.floats(min_value=-7.0, max_value=7.0))
def test_dressed_transform_is_unitary(phase):
    u = dressed_transform(phase).unitary
    np.testing.assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-12)


def test_population_bare_with_fock():
    psi = basis_state("-1", n_fock=5, fock=3)
    assert population(psi, "-1") == pytest.approx(1.0)
    assert population(psi, "0") == pytest.approx(0.0)


def test_population_dressed_oracle():
    # |-1> splits evenly over D and B, then B evenly over u and d
    frame = dressed_transform(0.0)
    psi = basis_state("-1")
    assert population(psi, "D", frame) == pytest.approx(0.5)
    assert population(psi, "B", frame) == pytest.approx(0.5)
    assert population(psi, "u", frame) == pytest.approx(0.25)
    assert population(psi, "d", frame) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        population(psi, "D")  # dressed label without a frame


@given(st.integers(min_value=0, max_value=2**32 - 1),
       st.floats(min_value=-7.0, max_value=7.0))
def test_population_partitions(seed, phase):
    rng = np.random.default_rng(seed)
    n_fock = 3
    psi = normalize(rng.normal(size=4 * n_fock) + 1j * rng.normal(size=4 * n_fock))
    frame = dressed_transform(phase)
    pops = populations(psi, LABELS)
    assert sum(pops.values()) == pytest.approx(1.0)
    # D and B span the |+-1> manifold, u and d span {|0>, B}
    p_pm = population(psi, "-1") + population(psi, "+1")
    assert population(psi, "D", frame) + population(psi, "B", frame) == pytest.approx(p_pm)
    assert (population(psi, "u", frame) + population(psi, "d", frame)
            == pytest.approx(population(psi, "0") + population(psi, "B", frame)))


def test_population_rejects_bad_dimension():
    with pytest.raises(ValueError):
        population(np.ones(6), "0")
