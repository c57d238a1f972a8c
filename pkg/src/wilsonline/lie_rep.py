"""Matrix representations of a compact Lie algebra and tensor-square traces.

A basis is a list of anti-Hermitian n x n matrices E_a, orthonormal for the
inner product (X, Y) = -Tr(XY).  The operator sum_a E_a (x) E_a acting on
C^n (x) C^n carries the pairing structure of two Wilson loops: its powers'
traces are the group-theory factors of the two-loop expansion.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError

_TOL = 1e-12


@dataclass(frozen=True)
class RepBasis:
    generators: np.ndarray  # shape (d, n, n), complex
    name: str = "custom"

    def __post_init__(self):
        gens = np.asarray(self.generators, dtype=complex)
        if gens.ndim != 3 or gens.shape[1] != gens.shape[2] or gens.shape[0] == 0:
            raise ValidationError(f"generators must have shape (d, n, n), got {gens.shape}")
        gens.setflags(write=False)
        object.__setattr__(self, "generators", gens)

    @property
    def dim_algebra(self) -> int:
        return self.generators.shape[0]

    @property
    def dim_rep(self) -> int:
        return self.generators.shape[1]

    def gram(self) -> np.ndarray:
        """Gram matrix of the generators under (X, Y) = -Tr(XY)."""
        return -np.einsum("aij,bji->ab", self.generators, self.generators)

    def validate(self, tol: float = _TOL) -> None:
        gens = self.generators
        herm_defect = np.max(np.abs(gens + np.conj(np.transpose(gens, (0, 2, 1)))))
        if herm_defect > tol:
            raise ValidationError(f"generators are not anti-Hermitian (defect {herm_defect:.3e})")
        gram = self.gram()
        ortho_defect = np.max(np.abs(gram - np.eye(self.dim_algebra)))
        if ortho_defect > tol:
            raise ValidationError(
                f"generators are not orthonormal under -Tr(XY) (defect {ortho_defect:.3e})"
            )


@dataclass(frozen=True)
class TensorOperator:
    matrix: np.ndarray
    order: int = 1
    basis_name: str = field(default="custom", compare=False)

    def eigenvalues(self) -> np.ndarray:
        # The operator is Hermitian for anti-Hermitian orthonormal generators.
        return np.linalg.eigvalsh(self.matrix)


def su2_basis() -> RepBasis:
    """Orthonormal basis of su(2) in the fundamental representation."""
    s = 1.0 / np.sqrt(2.0)
    e1 = s * np.array([[1j, 0], [0, -1j]])
    e2 = s * np.array([[0, -1], [1, 0]], dtype=complex)
    e3 = s * np.array([[0, 1j], [1j, 0]])
    return RepBasis(np.stack([e1, e2, e3]), name="su2")


def casimir_tensor(basis: RepBasis) -> TensorOperator:
    """Return sum_a E_a (x) E_a as an (n^2, n^2) matrix."""
    g = basis.generators
    n = basis.dim_rep
    mat = np.einsum("aij,akl->ikjl", g, g).reshape(n * n, n * n)
    return TensorOperator(mat, order=1, basis_name=basis.name)


def tensor_power(basis: RepBasis, m: int) -> TensorOperator:
    if m < 0:
        raise ValidationError("tensor power order must be nonnegative")
    c = casimir_tensor(basis).matrix
    return TensorOperator(np.linalg.matrix_power(c, m), order=m, basis_name=basis.name)


def tensor_trace_power(basis: RepBasis, m: int) -> complex:
    """Tr((sum_a E_a (x) E_a)^m) by explicit matrix power."""
    return complex(np.trace(tensor_power(basis, m).matrix))


def su2_trace_closed_form(m: int) -> float:
    """(3(-1)^m + 3^m) / 2^m, the SU(2) fundamental value of tensor_trace_power."""
    return (3 * (-1) ** m + 3**m) / 2**m


def swap_operator(n: int) -> np.ndarray:
    s = np.zeros((n * n, n * n))
    for i in range(n):
        for j in range(n):
            s[i * n + j, j * n + i] = 1.0
    return s


def _parse_matrix(entries, n: int) -> np.ndarray:
    arr = np.asarray(entries, dtype=float)
    if arr.shape == (n, n, 2):
        return arr[..., 0] + 1j * arr[..., 1]
    if arr.shape == (n * n, 2):
        return (arr[:, 0] + 1j * arr[:, 1]).reshape(n, n)
    raise ValidationError(f"generator entries must be (n*n, 2) or (n, n, 2) with n={n}, got {arr.shape}")


def basis_from_dict(doc: dict, name: str = "custom") -> RepBasis:
    try:
        n = int(doc["dim_rep"])
        raw = doc["generators"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"basis document missing field: {exc}") from exc
    if n <= 0 or n > 8:
        raise ValidationError(f"dim_rep must be in 1..8, got {n}")
    if not raw:
        raise ValidationError("basis document has no generators")
    basis = RepBasis(np.stack([_parse_matrix(g, n) for g in raw]), name=doc.get("name", name))
    basis.validate()
    return basis


def basis_to_dict(basis: RepBasis) -> dict:
    gens = [
        [[float(z.real), float(z.imag)] for z in g.reshape(-1)] for g in basis.generators
    ]
    return {"dim_rep": basis.dim_rep, "name": basis.name, "generators": gens}


def load_basis(path: str | Path) -> RepBasis:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
    return basis_from_dict(doc, name=path.stem)
