"""Dense many-body operators for small systems.

Brute-force Fock/spin-space machinery used by the exactly solvable
small-lattice oracle and by tests that cross-check the Gaussian-state
algebra against direct many-body linear algebra.  Everything here is
plain Kronecker-product construction; nothing is shared with the
single-particle (Bogoliubov-de Gennes) code paths.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "pauli_on",
    "fermion_ops",
    "total_number",
    "parity_operator",
    "vacuum_state",
    "build_quadratic_operator",
    "thouless_state",
    "parity_string_operator",
]

_ID2 = np.eye(2)
_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
_Z = np.array([[1.0, 0.0], [0.0, -1.0]])
_SM = np.array([[0.0, 1.0], [0.0, 0.0]])  # lowering operator |0><1|

_PAULI = {"I": _ID2, "X": _X, "Y": _Y, "Z": _Z}


def pauli_on(n_sites: int, ops: dict[int, str]) -> np.ndarray:
    """Dense tensor product with the given single-site Paulis, identity elsewhere."""
    out = np.array([[1.0 + 0.0j]])
    for i in range(n_sites):
        out = np.kron(out, _PAULI[ops.get(i, "I")])
    return out


def fermion_ops(n_modes: int) -> list[np.ndarray]:
    """Annihilation operators under a Jordan-Wigner chain in mode order."""
    ops = []
    for j in range(n_modes):
        mats = [_Z] * j + [_SM] + [_ID2] * (n_modes - j - 1)
        full = np.array([[1.0 + 0.0j]])
        for m in mats:
            full = np.kron(full, m)
        ops.append(full)
    return ops


def total_number(ann: list[np.ndarray]) -> np.ndarray:
    return sum(f.conj().T @ f for f in ann)


def parity_operator(ann: list[np.ndarray]) -> np.ndarray:
    dim = ann[0].shape[0]
    p = np.eye(dim, dtype=complex)
    for f in ann:
        p = p @ (np.eye(dim) - 2.0 * (f.conj().T @ f))
    return p


def vacuum_state(n_modes: int) -> np.ndarray:
    vac = np.zeros(2**n_modes, dtype=complex)
    vac[0] = 1.0
    return vac


def build_quadratic_operator(bdg_matrix: np.ndarray, ann: list[np.ndarray]) -> np.ndarray:
    """Many-body image of (1/2) (f^dag, f) M (f, f^dag)^T for a 2N x 2N matrix M."""
    n = len(ann)
    assert bdg_matrix.shape == (2 * n, 2 * n)
    dim = ann[0].shape[0]
    ops = ann + [f.conj().T for f in ann]  # (f_1..f_N, f_1^dag..f_N^dag)
    out = np.zeros((dim, dim), dtype=complex)
    for i in range(2 * n):
        bra = ops[i].conj().T  # row index runs over (f^dag, f)
        for j in range(2 * n):
            m = bdg_matrix[i, j]
            if m != 0.0:
                out += 0.5 * m * (bra @ ops[j])
    return out


def thouless_state(t_matrix: np.ndarray, reference: np.ndarray, ann: list[np.ndarray]) -> np.ndarray:
    """exp( (1/2) sum_ij T_ij a_i^dag a_j^dag ) |reference>, evaluated exactly.

    The pair-creation operator is nilpotent, so the exponential series
    terminates after N/2 + 1 terms.
    """
    n = len(ann)
    pair = np.zeros_like(ann[0])
    for i in range(n):
        for j in range(n):
            if t_matrix[i, j] != 0.0:
                pair += 0.5 * t_matrix[i, j] * (ann[i].conj().T @ ann[j].conj().T)
    vec = reference.astype(complex)
    out = vec.copy()
    term = vec
    for k in range(1, n // 2 + 2):
        term = pair @ term / k
        if not np.any(term):
            break
        out = out + term
    return out


def parity_string_operator(modes, ann: list[np.ndarray]) -> np.ndarray:
    """Product of (1 - 2 n_j) over the given modes."""
    dim = ann[0].shape[0]
    q = np.eye(dim, dtype=complex)
    for j in modes:
        q = q @ (np.eye(dim) - 2.0 * (ann[j].conj().T @ ann[j]))
    return q
