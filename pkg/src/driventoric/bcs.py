"""Fermionic Gaussian-state algebra on top of BdG matrices.

Conventions: a Bogoliubov basis packs the non-negative-energy eigenvectors
of a BdG matrix into blocks (u, v) such that the full transform

    W = [[u, v*], [v, u*]]

is unitary; the state attached to the basis is the vacuum of its
quasiparticle operators.  States along a protocol are represented in
Thouless form relative to a fixed reference basis, with the gauge fixed by
a real positive overlap with the reference vacuum; overlaps of two such
states are Pfaffians of a block skew matrix, evaluated in log-scaled form
so long products neither overflow nor underflow.

Ground-state fermion parity follows from the sign of the Pfaffian of the
Hamiltonian in the (interleaved) Majorana representation, extracted from a
real Schur decomposition: the sign of the orthogonal transform's
determinant times the canonical block signs.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np
import scipy.linalg

from .model import QuadraticOperator

__all__ = [
    "SkewMatrix",
    "BogoliubovBasis",
    "BcsState",
    "ParityInfo",
    "SingularOverlapError",
    "pfaffian",
    "pfaffian_scaled",
    "diagonalize",
    "ground_parity",
    "ground_parity_info",
    "physical_ground",
    "thouless",
    "overlap",
    "parity_string_transform",
    "evolve",
    "expectation",
]


class SingularOverlapError(RuntimeError):
    """States are (numerically) orthogonal; Thouless representation undefined."""


@dataclass(frozen=True)
class SkewMatrix:
    """Exactly antisymmetric matrix (antisymmetrized at construction)."""

    matrix: np.ndarray

    def __init__(self, matrix):
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("skew matrix must be square")
        if m.shape[0] % 2:
            raise ValueError("skew matrix must have even dimension")
        m = 0.5 * (m - m.T)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def pfaffian_scaled(a) -> tuple[complex, float]:
    """Pfaffian as (phase, log magnitude), via skew tridiagonalization.

    Gaussian elimination with partial pivoting on the subdiagonal; row/column
    swaps flip the sign, the eliminations leave the Pfaffian invariant.
    Returns (0, -inf) for a singular input.
    """
    m = a.matrix if isinstance(a, SkewMatrix) else np.asarray(a)
    n = m.shape[0]
    if m.ndim != 2 or m.shape[1] != n:
        raise ValueError("pfaffian needs a square matrix")
    if n % 2:
        raise ValueError("pfaffian needs even dimension")
    if n == 0:
        return 1.0 + 0.0j, 0.0
    m = np.array(m, dtype=complex)
    skew_defect = np.abs(m + m.T).max()
    if skew_defect > 1e-10 * max(1.0, np.abs(m).max()):
        raise ValueError(f"matrix is not antisymmetric: defect {skew_defect:.3e}")
    phase = 1.0 + 0.0j
    log_abs = 0.0
    for k in range(0, n - 2, 2):
        col = np.abs(m[k + 1 :, k])
        pivot = int(np.argmax(col)) + k + 1
        if col[pivot - k - 1] == 0.0:
            return 0.0j, -math.inf
        if pivot != k + 1:
            m[[k + 1, pivot], :] = m[[pivot, k + 1], :]
            m[:, [k + 1, pivot]] = m[:, [pivot, k + 1]]
            phase = -phase
        entry = m[k, k + 1]
        phase *= entry / abs(entry)
        log_abs += math.log(abs(entry))
        tau = m[k + 2 :, k] / m[k + 1, k]
        m[k + 2 :, :] -= np.outer(tau, m[k + 1, :])
        m[:, k + 2 :] -= np.outer(m[:, k + 1], tau)
    entry = m[n - 2, n - 1]
    if entry == 0.0:
        return 0.0j, -math.inf
    phase *= entry / abs(entry)
    log_abs += math.log(abs(entry))
    return phase, log_abs


def pfaffian(a) -> complex:
    """Pfaffian of an even-dimensional skew-symmetric matrix."""
    phase, log_abs = pfaffian_scaled(a)
    if log_abs == -math.inf:
        return 0.0j
    return phase * math.exp(log_abs)


# ---------------------------------------------------------------------------
# Bogoliubov bases


@dataclass(frozen=True)
class BogoliubovBasis:
    """(u, v) blocks of a Bogoliubov transform; the attached state is its vacuum."""

    u: np.ndarray
    v: np.ndarray
    energies: np.ndarray
    parity: int
    tag: str = ""

    @property
    def n(self) -> int:
        return self.u.shape[0]

    def full_transform(self) -> np.ndarray:
        w = np.empty((2 * self.n, 2 * self.n), dtype=complex)
        w[: self.n, : self.n] = self.u
        w[: self.n, self.n :] = self.v.conj()
        w[self.n :, : self.n] = self.v
        w[self.n :, self.n :] = self.u.conj()
        return w

    def check_unitarity(self, tol: float = 1e-10) -> None:
        n = self.n
        one = self.u.conj().T @ self.u + self.v.conj().T @ self.v
        d1 = np.abs(one - np.eye(n)).max()
        d2 = np.abs(self.u.T @ self.v + self.v.T @ self.u).max()
        if max(d1, d2) > tol:
            raise ValueError(f"Bogoliubov transform not unitary: {max(d1, d2):.3e}")


def _phase_fix(columns: np.ndarray) -> np.ndarray:
    """Rotate each column so its first significant component is real positive."""
    out = columns.copy()
    mags = np.abs(out)
    for j in range(out.shape[1]):
        col = mags[:, j]
        idx = np.argmax(col > 1e-9 * col.max()) if col.max() > 0 else 0
        z = out[idx, j]
        if z != 0:
            out[:, j] *= np.conj(z) / abs(z)
    return out


def _ph_image(vectors: np.ndarray) -> np.ndarray:
    """Particle-hole map: swap the two blocks and conjugate."""
    n = vectors.shape[0] // 2
    out = np.empty_like(vectors)
    out[:n] = vectors[n:].conj()
    out[n:] = vectors[:n].conj()
    return out


def _canonical_zero_cluster(m: np.ndarray, span: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Particle-hole-canonical positive-branch vectors for a near-zero cluster.

    Builds an orthonormal basis of particle-hole self-conjugate (Majorana)
    vectors for the cluster span, rewrites the Hamiltonian restricted to the
    cluster as a small real antisymmetric matrix, and pairs the Majorana
    vectors through its canonical form.  This keeps tiny Majorana splittings
    intact while guaranteeing exact pairing of the returned columns with
    their particle-hole images.
    """
    two_k = span.shape[1]
    if two_k % 2:
        raise ValueError("near-zero cluster has odd dimension")
    k = two_k // 2
    majorana: list[np.ndarray] = []
    for j in range(two_k):
        a = span[:, j]
        for cand in (a + _ph_image(a[:, None])[:, 0], 1j * (a - _ph_image(a[:, None])[:, 0])):
            vec = cand.copy()
            for mvec in majorana:
                vec -= mvec * np.vdot(mvec, vec)
            norm = np.linalg.norm(vec)
            if norm > 1e-7:
                majorana.append(vec / norm)
            if len(majorana) == two_k:
                break
        if len(majorana) == two_k:
            break
    if len(majorana) != two_k:
        raise RuntimeError("failed to build Majorana basis for zero cluster")
    mbasis = np.column_stack(majorana)
    small = mbasis.conj().T @ m @ mbasis
    a_real = np.real(-1j * 0.5 * (small - small.T))
    tmat, z = scipy.linalg.schur(a_real)
    rotated = mbasis @ z
    cols = []
    energies = []
    for j in range(k):
        m1 = rotated[:, 2 * j]
        m2 = rotated[:, 2 * j + 1]
        w = (m1 - 1j * m2) / math.sqrt(2.0)
        e = float(np.real(np.vdot(w, m @ w)))
        if e < 0:
            w = (m1 + 1j * m2) / math.sqrt(2.0)
            e = float(np.real(np.vdot(w, m @ w)))
        cols.append(w)
        energies.append(e)
    order = np.argsort(energies)
    return np.column_stack([cols[i] for i in order]), np.asarray(energies)[order]


def diagonalize(op: QuadraticOperator, tag: str = "", cluster_tol: float = 1e-5) -> BogoliubovBasis:
    """Bogoliubov basis of a BdG matrix: non-negative branch, ascending energies.

    Eigenvalues within ``cluster_tol`` (relative) of zero are re-paired
    through the Majorana-canonical construction so the transform stays
    unitary even when near-zero modes are nearly degenerate.
    """
    op.validate()
    m = op.matrix
    n = op.n
    w, vecs = np.linalg.eigh(m)
    scale = max(np.abs(w).max(), 1e-300)
    cluster = np.flatnonzero(np.abs(w) < cluster_tol * scale)
    energies = w[n:].copy()
    columns = vecs[:, n:].copy()
    if cluster.size:
        if cluster.size % 2:
            raise RuntimeError("unpaired near-zero eigenvalue in BdG spectrum")
        new_cols, new_es = _canonical_zero_cluster(m, vecs[:, cluster])
        slots = [i for i, e in enumerate(energies) if abs(e) < cluster_tol * scale]
        if len(slots) != new_cols.shape[1]:
            raise RuntimeError("inconsistent zero-cluster bookkeeping")
        for slot, j in zip(slots, range(new_cols.shape[1])):
            columns[:, slot] = new_cols[:, j]
            energies[slot] = new_es[j]
    columns = _phase_fix(columns)
    order = np.argsort(energies, kind="stable")
    columns = columns[:, order]
    energies = energies[order]
    basis = BogoliubovBasis(
        u=columns[:n].copy(),
        v=columns[n:].copy(),
        energies=energies,
        parity=ground_parity(op),
        tag=tag,
    )
    basis.check_unitarity()
    return basis


# ---------------------------------------------------------------------------
# ground-state parity


@dataclass(frozen=True)
class ParityInfo:
    sign: int
    gap: float
    determinate: bool


def _majorana_matrix(op: QuadraticOperator) -> np.ndarray:
    """Real antisymmetric A with H = (i/4) c^T A c in the interleaved Majorana basis."""
    m = op.matrix
    n = op.n
    s = np.zeros((2 * n, 2 * n), dtype=complex)
    for p in range(n):
        s[p, 2 * p] = 0.5
        s[p, 2 * p + 1] = 0.5j
        s[n + p, 2 * p] = 0.5
        s[n + p, 2 * p + 1] = -0.5j
    swap = np.empty_like(m)
    swap[:n] = m[n:]
    swap[n:] = m[:n]
    k = s.T @ swap @ s
    a = -1j * (k - k.T)
    imag = np.abs(a.imag).max()
    if imag > 1e-10 * max(1.0, np.abs(a).max()):
        raise ValueError(f"Majorana matrix is not real: residual {imag:.3e}")
    return 0.5 * (a.real - a.real.T)


def ground_parity_info(op: QuadraticOperator, gap_tol: float = 1e-8) -> ParityInfo:
    """Fermion parity of the BdG vacuum from the canonical Majorana form."""
    a = _majorana_matrix(op)
    tmat, z = scipy.linalg.schur(a)
    n2 = a.shape[0]
    taus = []
    i = 0
    sign = 1.0
    while i < n2:
        if i + 1 < n2 and tmat[i + 1, i] != 0.0:  # LAPACK marks 2x2 blocks this way
            taus.append(0.5 * (tmat[i, i + 1] - tmat[i + 1, i]))
            i += 2
        else:
            taus.append(0.0)  # exact zero mode appears as a 1x1 block
            i += 1
    for tau in taus:
        if tau < 0:
            sign = -sign
    det = np.linalg.det(z)
    parity = int(math.copysign(1.0, det * sign))
    gap = float(min(abs(t) for t in taus))
    return ParityInfo(sign=parity, gap=gap, determinate=gap > gap_tol)


def ground_parity(op: QuadraticOperator, gap_tol: float = 1e-8) -> int:
    return ground_parity_info(op, gap_tol).sign


def physical_ground(basis: BogoliubovBasis, required_parity: int = 1) -> BogoliubovBasis:
    """Parity-correct a basis by occupying its lowest quasiparticle if needed."""
    if required_parity not in (1, -1):
        raise ValueError("required parity must be +1 or -1")
    if basis.parity == required_parity:
        return basis
    u = basis.u.copy()
    v = basis.v.copy()
    u[:, 0], v[:, 0] = v[:, 0].conj(), u[:, 0].conj()
    energies = basis.energies.copy()
    energies[0] = -energies[0]
    out = BogoliubovBasis(
        u=u, v=v, energies=energies, parity=-basis.parity, tag=basis.tag
    )
    out.check_unitarity()
    return out


# ---------------------------------------------------------------------------
# Thouless representation and overlaps


@dataclass(frozen=True)
class BcsState:
    """A Gaussian state in Thouless form over a fixed reference basis.

    The implicit gauge makes the overlap with the reference vacuum real
    positive (equal to ``norm_overlap``).
    """

    reference: BogoliubovBasis
    thouless: np.ndarray
    norm_overlap: float
    log_norm: float
    tag: str = ""

    @property
    def n(self) -> int:
        return self.thouless.shape[0]


def thouless(
    reference: BogoliubovBasis,
    target: BogoliubovBasis,
    cond_max: float = 1e12,
    tag: str = "",
) -> BcsState:
    """Thouless matrix of the target vacuum over the reference vacuum."""
    if reference.n != target.n:
        raise ValueError("dimension mismatch between bases")
    u_rel = reference.u.conj().T @ target.u + reference.v.conj().T @ target.v
    v_rel = reference.v.T @ target.u + reference.u.T @ target.v
    svals = np.linalg.svd(u_rel, compute_uv=False)
    if svals[-1] == 0 or svals[0] / svals[-1] > cond_max:
        raise SingularOverlapError(
            "reference and target states are orthogonal or parity mismatched"
        )
    t = -np.linalg.solve(u_rel.conj().T, v_rel.conj().T)
    asym = np.abs(t + t.T).max()
    if asym > 1e-6 * max(1.0, np.abs(t).max()):
        raise RuntimeError(f"Thouless matrix not antisymmetric: defect {asym:.3e}")
    t = 0.5 * (t - t.T)
    sign, logdet = np.linalg.slogdet(u_rel)
    log_norm = 0.5 * logdet
    return BcsState(
        reference=reference,
        thouless=t,
        norm_overlap=float(np.exp(log_norm)),
        log_norm=float(log_norm),
        tag=tag,
    )


def overlap(state_i: BcsState, state_j: BcsState) -> complex:
    """Inner product <Phi_i|Phi_j> of two normalized Thouless states."""
    if state_i.n != state_j.n:
        raise ValueError("dimension mismatch")
    if state_i.reference is not state_j.reference and not (
        np.array_equal(state_i.reference.u, state_j.reference.u)
        and np.array_equal(state_i.reference.v, state_j.reference.v)
    ):
        raise ValueError("states must share the same reference basis")
    n = state_i.n
    block = np.zeros((2 * n, 2 * n), dtype=complex)
    block[:n, :n] = state_j.thouless
    block[:n, n:] = -np.eye(n)
    block[n:, :n] = np.eye(n)
    block[n:, n:] = -state_i.thouless.conj()
    phase, log_abs = pfaffian_scaled(block)
    if log_abs == -math.inf:
        return 0.0j
    prefactor = -1.0 if (n * (n + 1) // 2) % 2 else 1.0
    value = prefactor * phase * math.exp(log_abs + state_i.log_norm + state_j.log_norm)
    if abs(value) > 1.0 + 1e-9:
        raise RuntimeError(f"overlap magnitude {abs(value):.6f} exceeds 1")
    return complex(value)


def parity_string_transform(basis: BogoliubovBasis, plaquettes: Iterable[int]) -> BogoliubovBasis:
    """Apply the fermion-parity string (f_p -> -f_p on the given plaquettes)."""
    q = np.ones(basis.n)
    idx = list(plaquettes)
    if idx:
        q[idx] = -1.0
    out = replace(basis, u=q[:, None] * basis.u, v=q[:, None] * basis.v)
    return out


def evolve(basis: BogoliubovBasis, u_prop: np.ndarray, unitary_tol: float = 1e-9) -> BogoliubovBasis:
    """Map the basis through a BdG propagator (Heisenberg evolution of its modes)."""
    dim = 2 * basis.n
    u_prop = np.asarray(u_prop, dtype=complex)
    if u_prop.shape != (dim, dim):
        raise ValueError("propagator dimension mismatch")
    defect = np.abs(u_prop.conj().T @ u_prop - np.eye(dim)).max()
    if defect > unitary_tol:
        raise ValueError(f"propagator is not unitary: defect {defect:.3e}")
    stacked = u_prop @ np.vstack([basis.u, basis.v])
    out = replace(basis, u=stacked[: basis.n], v=stacked[basis.n :])
    out.check_unitarity(tol=max(1e-8, 10 * defect))
    return out


def expectation(op: QuadraticOperator, basis: BogoliubovBasis) -> float:
    """<vacuum of basis| H |vacuum>: BdG blocks contracted with covariances."""
    n = op.n
    if basis.n != n:
        raise ValueError("dimension mismatch")
    m = op.matrix
    u, v = basis.u, basis.v
    vv = v @ v.conj().T  # <f^dag f>
    vu = v @ u.conj().T  # <f^dag f^dag>
    uv = u @ v.conj().T  # <f f>
    uu = u @ u.conj().T  # <f f^dag>
    value = 0.5 * (
        np.sum(m[:n, :n] * vv)
        + np.sum(m[:n, n:] * vu)
        + np.sum(m[n:, :n] * uv)
        + np.sum(m[n:, n:] * uu)
    )
    if abs(value.imag) > 1e-10 * max(1.0, abs(value.real)):
        raise RuntimeError(f"expectation value not real: {value}")
    return float(value.real)
