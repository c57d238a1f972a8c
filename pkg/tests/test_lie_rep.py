import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wilsonline.errors import ValidationError
from wilsonline.lie_rep import (RepBasis, basis_from_dict, basis_to_dict, casimir_tensor, load_basis,
                                su2_basis, su2_trace_closed_form, swap_operator, tensor_trace_power)

S = 1 / np.sqrt(2)


def test_su2_generators_are_the_explicit_matrices():
    e = su2_basis().generators
    assert np.array_equal(e[0], S * np.array([[1j, 0], [0, -1j]]))
    assert np.array_equal(e[1], S * np.array([[0, -1], [1, 0]]))
    assert np.array_equal(e[2], S * np.array([[0, 1j], [1j, 0]]))


def test_su2_orthonormal_and_anti_hermitian():
    b = su2_basis()
    e = b.generators
    assert abs(-np.trace(e[0] @ e[0]) - 1) < 1e-15
    assert abs(np.trace(e[0] @ e[1])) < 1e-15
    assert np.allclose(e[1].conj().T, -e[1])
    assert np.max(np.abs(b.gram() - np.eye(3))) < 1e-12
    b.validate()


def test_casimir_matches_explicit_matrix():
    c = casimir_tensor(su2_basis()).matrix
    expected = 0.5 * np.array([[-1, 0, 0, 0], [0, 1, -2, 0], [0, -2, 1, 0], [0, 0, 0, -1]])
    assert np.max(np.abs(c - expected)) < 1e-15


def test_casimir_eigenvalues():
    op = casimir_tensor(su2_basis())
    eig = np.sort(np.linalg.eigvalsh(2 * op.matrix))
    assert np.max(np.abs(eig - [-1, -1, -1, 3])) < 1e-12
    assert np.allclose(np.sort(op.eigenvalues()) * 2, [-1, -1, -1, 3], atol=1e-12)


def test_casimir_hermitian_and_commutes_with_swap():
    c = casimir_tensor(su2_basis()).matrix
    s = swap_operator(2)
    assert np.max(np.abs(c - c.conj().T)) < 1e-15
    assert np.max(np.abs(c @ s - s @ c)) < 1e-12


@pytest.mark.parametrize("m,value", [(0, 4), (1, 0), (2, 3)])
def test_trace_power_small_orders(m, value):
    assert abs(tensor_trace_power(su2_basis(), m) - value) < 1e-12


def test_trace_power_matches_closed_form_to_12():
    b = su2_basis()
    for m in range(13):
        assert abs(tensor_trace_power(b, m) - su2_trace_closed_form(m)) < 1e-10


def _random_su2_rotation(seed):
    # conjugating by a unitary keeps the basis orthonormal and anti-Hermitian
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    q, _ = np.linalg.qr(z)
    return q


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 6))
def test_trace_power_invariant_under_unitary_conjugation(seed, m):
    u = _random_su2_rotation(seed)
    gens = np.einsum("ij,ajk,kl->ail", u, su2_basis().generators, u.conj().T)
    b = RepBasis(gens)
    b.validate()
    assert abs(tensor_trace_power(b, m) - su2_trace_closed_form(m)) < 1e-10
    c = casimir_tensor(b).matrix
    assert np.max(np.abs(c - c.conj().T)) < 1e-12


def test_validate_rejects_bad_bases():
    with pytest.raises(ValidationError):
        RepBasis(np.eye(2)[None] * 1.0).validate()  # Hermitian, not anti-Hermitian
    with pytest.raises(ValidationError):
        RepBasis(2 * su2_basis().generators).validate()  # not normalized
    with pytest.raises(ValidationError):
        RepBasis(np.zeros((2, 2)))


def test_basis_json_roundtrip(tmp_path):
    doc = basis_to_dict(su2_basis())
    path = tmp_path / "su2.json"
    path.write_text(json.dumps(doc))
    b = load_basis(path)
    assert np.array_equal(b.generators, su2_basis().generators)
    nested = {"dim_rep": 2, "generators": [np.stack([g.real, g.imag], -1).tolist()
                                           for g in su2_basis().generators]}
    assert np.array_equal(basis_from_dict(nested).generators, su2_basis().generators)


def test_basis_json_errors(tmp_path):
    with pytest.raises(ValidationError):
        basis_from_dict({"dim_rep": 9, "generators": [[[0, 0]] * 81]})
    with pytest.raises(ValidationError):
        basis_from_dict({"generators": []})
    bad = basis_to_dict(su2_basis())
    bad["generators"][0][0] = [5.0, 0.0]
    with pytest.raises(ValidationError):
        basis_from_dict(bad)
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    with pytest.raises(ValidationError):
        load_basis(p)
