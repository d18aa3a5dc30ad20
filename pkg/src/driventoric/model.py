"""Quadratic fermion Hamiltonians of the driven model, plus the spin-space oracle.

All matrices use the Bogoliubov-de Gennes (BdG) layout

    H = (1/2) (f^dag, f) . M . (f, f^dag)^T,
    M = [[h, p], [p^dag, -h^T]],   h Hermitian, p antisymmetric,

with basis order "annihilation components 0..N-1, creation components
N..2N-1" over plaquettes in the lattice scan order.  The upper-right block
``p`` collects the coefficients of creation pairs; a bond (q = p + r) with
coupling sign s and instantaneous amplitude d contributes

    h[p, q] = h[q, p] = -d s,      p[p, q] = -p[q, p] = +d s.

Frame convention: the rotating frame is generated by exp(-i t (omega/2) N),
which leaves hopping untouched, shifts the chemical potential by -omega/2,
and multiplies the upper-right pairing block by exp(+i omega t).  With the
drive d_r(t) = J + 2 Delta cos(omega t + phi_r) the time average then carries
pairing Delta e^{-i phi_r} on the creation side (equivalently
Delta e^{+i phi_r} on the annihilation side), which realises chiral p-wave
pairing for a quarter-period delay between the two bond directions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .lattice import LatticeSpec, SectorSpec, VortexConfig, bond_coupling_sign

__all__ = [
    "DriveParams",
    "EffectiveParams",
    "QuadraticOperator",
    "effective_mu",
    "bdg_drive",
    "bdg_rotated",
    "bdg_averaged",
    "fourier_component",
    "rotated_components",
    "kick_operator",
    "frame_rotation",
    "averaged_bloch",
    "cylinder_k_values",
    "cylinder_bloch_averaged",
    "cylinder_bloch_rotated",
    "spin_model",
    "spin_drive_terms",
    "spin_operators",
    "params_to_json",
    "params_from_json",
]


@dataclass(frozen=True)
class DriveParams:
    """Drive amplitudes and phases; all energies in units of the bare coupling g."""

    J: float
    Delta: float
    omega: float
    g: float = 1.0
    phi_x: float = 0.0
    phi_y: float = math.pi / 2
    t0: float = 0.0

    def __post_init__(self):
        if self.omega <= 0:
            raise ValueError("drive frequency must be positive")
        if self.J < 0 or self.Delta < 0:
            raise ValueError("drive amplitudes must be non-negative")

    @property
    def mu_psi(self) -> float:
        return 2.0 * self.g

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    def drive_values(self, t: float) -> tuple[float, float]:
        dx = self.J + 2.0 * self.Delta * math.cos(self.omega * t + self.phi_x)
        dy = self.J + 2.0 * self.Delta * math.cos(self.omega * t + self.phi_y)
        return dx, dy

    def averaged(self) -> "EffectiveParams":
        return EffectiveParams(
            mu=effective_mu(self.omega, self.mu_psi),
            J=self.J,
            Delta=self.Delta,
            phi_x=self.phi_x,
            phi_y=self.phi_y,
        )

    def with_phase(self, phase: float) -> "DriveParams":
        """Shift both drive phases by the same global amount."""
        return replace(self, phi_x=self.phi_x + phase, phi_y=self.phi_y + phase)


@dataclass(frozen=True)
class EffectiveParams:
    """Parameters of the time-averaged model."""

    mu: float
    J: float
    Delta: float
    phi_x: float = 0.0
    phi_y: float = math.pi / 2


def effective_mu(omega: float, mu_psi: float) -> float:
    """Effective chemical potential set by the drive detuning from pair creation."""
    if omega <= 0:
        raise ValueError("omega must be positive")
    return omega / 2.0 - mu_psi


class QuadraticOperator:
    """2N x 2N BdG matrix with Hermiticity and particle-hole structure."""

    __slots__ = ("matrix",)

    def __init__(self, matrix: np.ndarray, validate: bool = True):
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] % 2:
            raise ValueError("BdG matrix must be square with even dimension")
        matrix.setflags(write=False)
        self.matrix = matrix
        if validate:
            self.validate()

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.dim // 2

    @property
    def h(self) -> np.ndarray:
        return self.matrix[: self.n, : self.n]

    @property
    def pairing(self) -> np.ndarray:
        return self.matrix[: self.n, self.n :]

    def validate(self, hermitian_tol: float = 1e-12, phs_tol: float = 1e-12) -> None:
        m = self.matrix
        scale = max(np.abs(m).max(), 1.0)
        herm = np.abs(m - m.conj().T).max()
        if herm > hermitian_tol * scale:
            raise ValueError(f"matrix not Hermitian: deviation {herm:.3e}")
        n = self.n
        swapped = np.empty_like(m)
        swapped[:n, :n] = m[n:, n:]
        swapped[:n, n:] = m[n:, :n]
        swapped[n:, :n] = m[:n, n:]
        swapped[n:, n:] = m[:n, :n]
        phs = np.abs(swapped.conj() + m).max()
        if phs > phs_tol * scale:
            raise ValueError(f"particle-hole structure violated: deviation {phs:.3e}")


def assemble_bdg(h: np.ndarray, pairing: np.ndarray, validate: bool = True) -> QuadraticOperator:
    """Stack the Hermitian and antisymmetric blocks into the full BdG matrix."""
    n = h.shape[0]
    m = np.empty((2 * n, 2 * n), dtype=complex)
    m[:n, :n] = h
    m[:n, n:] = pairing
    m[n:, :n] = pairing.conj().T
    m[n:, n:] = -h.T
    return QuadraticOperator(m, validate=validate)


# ---------------------------------------------------------------------------
# bond structure matrices (cached per lattice / vortex config / sector)


@lru_cache(maxsize=16)
def _structure(lat: LatticeSpec, cfg: VortexConfig, sector: SectorSpec):
    """Sign-weighted hop (symmetric) and pair (antisymmetric) matrices per axis."""
    n = lat.n_plaquettes
    hop = {"x": np.zeros((n, n)), "y": np.zeros((n, n))}
    pair = {"x": np.zeros((n, n)), "y": np.zeros((n, n))}
    for bond in lat.bonds():
        s = bond_coupling_sign(lat, cfg, sector, bond.p, bond.axis)
        hop[bond.axis][bond.p, bond.q] += s
        hop[bond.axis][bond.q, bond.p] += s
        pair[bond.axis][bond.p, bond.q] += s
        pair[bond.axis][bond.q, bond.p] -= s
    return hop["x"], hop["y"], pair["x"], pair["y"]


def bdg_drive(
    lat: LatticeSpec,
    cfg: VortexConfig,
    sector: SectorSpec,
    params: DriveParams,
    t: float,
    validate: bool = True,
) -> QuadraticOperator:
    """Instantaneous lab-frame BdG matrix of the driven fermion model."""
    hx, hy, px, py = _structure(lat, cfg, sector)
    dx, dy = params.drive_values(t)
    h = -dx * hx - dy * hy + params.mu_psi * np.eye(lat.n_plaquettes)
    pairing = (dx * px + dy * py).astype(complex)
    return assemble_bdg(h, pairing, validate=validate)


def bdg_rotated(
    lat: LatticeSpec,
    cfg: VortexConfig,
    sector: SectorSpec,
    params: DriveParams,
    t: float,
    validate: bool = True,
) -> QuadraticOperator:
    """Rotating-frame BdG matrix: shifted diagonal, pairing block times e^{i omega t}."""
    hx, hy, px, py = _structure(lat, cfg, sector)
    dx, dy = params.drive_values(t)
    mu_diag = params.mu_psi - params.omega / 2.0
    h = -dx * hx - dy * hy + mu_diag * np.eye(lat.n_plaquettes)
    pairing = np.exp(1j * params.omega * t) * (dx * px + dy * py)
    return assemble_bdg(h, pairing, validate=validate)


def bdg_averaged(
    lat: LatticeSpec,
    cfg: VortexConfig,
    sector: SectorSpec,
    eff: EffectiveParams,
    validate: bool = True,
) -> QuadraticOperator:
    """Time-averaged (leading high-frequency) BdG matrix."""
    hx, hy, px, py = _structure(lat, cfg, sector)
    h = -eff.J * (hx + hy) - eff.mu * np.eye(lat.n_plaquettes)
    pairing = eff.Delta * (
        np.exp(-1j * eff.phi_x) * px + np.exp(-1j * eff.phi_y) * py
    )
    return assemble_bdg(h, pairing, validate=validate)


def frame_rotation(n: int, omega: float, t: float) -> np.ndarray:
    """Diagonal single-particle representation of the rotating-frame transformation."""
    phase = np.exp(-0.5j * omega * t)
    return np.concatenate([np.full(n, phase), np.full(n, phase.conjugate())])


def rotated_components(
    lat: LatticeSpec,
    cfg: VortexConfig,
    sector: SectorSpec,
    params: DriveParams,
) -> dict[int, np.ndarray]:
    """Fourier components {m: C_m} of the rotating-frame BdG matrix.

    The drive is a first-harmonic cosine, so only m in {-2..2} appear and
    the rotating-frame matrix is exactly sum_m e^{i m omega t} C_m.
    """
    hx, hy, px, py = _structure(lat, cfg, sector)
    n = lat.n_plaquettes
    J, Delta = params.J, params.Delta
    ex, ey = np.exp(1j * params.phi_x), np.exp(1j * params.phi_y)

    h0 = -J * (hx + hy) + (params.mu_psi - params.omega / 2.0) * np.eye(n)
    p0 = Delta * (px * ex.conjugate() + py * ey.conjugate())
    c0 = assemble_bdg(h0, p0, validate=False).matrix

    h1 = -Delta * (ex * hx + ey * hy)
    p1 = J * (px + py).astype(complex)
    c1 = np.zeros((2 * n, 2 * n), dtype=complex)
    c1[:n, :n] = h1
    c1[:n, n:] = p1
    c1[n:, n:] = -h1.T

    c2 = np.zeros((2 * n, 2 * n), dtype=complex)
    c2[:n, n:] = Delta * (ex * px + ey * py)

    return {
        -2: c2.conj().T,
        -1: c1.conj().T,
        0: c0,
        1: c1,
        2: c2,
    }


def fourier_component(
    lat: LatticeSpec,
    cfg: VortexConfig,
    sector: SectorSpec,
    params: DriveParams,
    m: int,
) -> np.ndarray:
    """m-th Fourier matrix of the rotating-frame model; zero matrix for |m| > 2."""
    if abs(m) > 2:
        n = lat.n_plaquettes
        return np.zeros((2 * n, 2 * n), dtype=complex)
    return rotated_components(lat, cfg, sector, params)[m]


def kick_operator(
    lat: LatticeSpec,
    cfg: VortexConfig,
    sector: SectorSpec,
    params: DriveParams,
    t: float,
    t0: float,
) -> np.ndarray:
    """Leading-order micromotion generator; anti-Hermitian and zero at t = t0."""
    comps = rotated_components(lat, cfg, sector, params)
    n2 = 2 * lat.n_plaquettes
    k = np.zeros((n2, n2), dtype=complex)
    for m, c in comps.items():
        if m == 0:
            continue
        coeff = np.exp(1j * m * params.omega * t) - np.exp(1j * m * params.omega * t0)
        k -= coeff * c / (m * params.omega)
    return k


# ---------------------------------------------------------------------------
# momentum-space blocks (translation-invariant configurations only)


def averaged_bloch(eff: EffectiveParams, kx: float, ky: float) -> np.ndarray:
    """2x2 BdG block of the averaged model at momentum (kx, ky) on the torus."""
    xi = -eff.mu - 2.0 * eff.J * (math.cos(kx) + math.cos(ky))
    d = 2j * eff.Delta * (
        np.exp(-1j * eff.phi_x) * math.sin(kx) + np.exp(-1j * eff.phi_y) * math.sin(ky)
    )
    return np.array([[xi, d], [np.conj(d), -xi]])


def cylinder_k_values(Ly: int, wy: int) -> np.ndarray:
    """Momenta along the periodic direction; antiperiodic sectors are half-shifted."""
    offset = 0.0 if wy == 1 else 0.5
    return 2.0 * math.pi * (np.arange(Ly) + offset) / Ly


def _cylinder_blocks(Lx: int, k: float):
    """k-resolved hop/pair structure for a width-Lx open chain of plaquette columns."""
    hop_x = np.zeros((Lx, Lx))
    pair_x = np.zeros((Lx, Lx))
    for c in range(Lx - 1):
        hop_x[c, c + 1] = hop_x[c + 1, c] = 1.0
        pair_x[c, c + 1] = 1.0
        pair_x[c + 1, c] = -1.0
    hop_y = 2.0 * math.cos(k) * np.eye(Lx)
    pair_y = 2j * math.sin(k) * np.eye(Lx)
    return hop_x, hop_y, pair_x, pair_y


def cylinder_bloch_averaged(lat: LatticeSpec, eff: EffectiveParams, k: float) -> np.ndarray:
    hop_x, hop_y, pair_x, pair_y = _cylinder_blocks(lat.Lx, k)
    h = -eff.J * (hop_x + hop_y) - eff.mu * np.eye(lat.Lx)
    pairing = eff.Delta * (np.exp(-1j * eff.phi_x) * pair_x + np.exp(-1j * eff.phi_y) * pair_y)
    m = np.empty((2 * lat.Lx, 2 * lat.Lx), dtype=complex)
    m[: lat.Lx, : lat.Lx] = h
    m[: lat.Lx, lat.Lx :] = pairing
    m[lat.Lx :, : lat.Lx] = pairing.conj().T
    m[lat.Lx :, lat.Lx :] = -h.T
    return m


def cylinder_bloch_rotated(lat: LatticeSpec, params: DriveParams, k: float, t: float) -> np.ndarray:
    hop_x, hop_y, pair_x, pair_y = _cylinder_blocks(lat.Lx, k)
    dx, dy = params.drive_values(t)
    h = -dx * hop_x - dy * hop_y + (params.mu_psi - params.omega / 2.0) * np.eye(lat.Lx)
    pairing = np.exp(1j * params.omega * t) * (dx * pair_x + dy * pair_y)
    m = np.empty((2 * lat.Lx, 2 * lat.Lx), dtype=complex)
    m[: lat.Lx, : lat.Lx] = h
    m[: lat.Lx, lat.Lx :] = pairing
    m[lat.Lx :, : lat.Lx] = pairing.conj().T
    m[lat.Lx :, lat.Lx :] = -h.T
    return m


# ---------------------------------------------------------------------------
# many-body spin model (small-lattice oracle)

MAX_ORACLE_SPINS = 12


def _check_oracle_size(lat: LatticeSpec) -> int:
    if lat.topology != "torus":
        raise ValueError("spin oracle is defined on the torus")
    n_spins = 2 * lat.n_plaquettes
    if n_spins > MAX_ORACLE_SPINS:
        raise ValueError(f"spin oracle capped at {MAX_ORACLE_SPINS} spins, got {n_spins}")
    return n_spins


def _edge_h(lat: LatticeSpec, c: int, r: int) -> int:
    """Horizontal edge between vertices (c, r) and (c+1, r)."""
    return (r % lat.Ly) * lat.Lx + (c % lat.Lx)


def _edge_w(lat: LatticeSpec, c: int, r: int) -> int:
    """Vertical edge between vertices (c, r-1) and (c, r): left edge of plaquette (c, r)."""
    return lat.n_plaquettes + (r % lat.Ly) * lat.Lx + (c % lat.Lx)


@lru_cache(maxsize=4)
def spin_operators(lat: LatticeSpec) -> dict:
    """Dense stabilizers, drive sums, and loop operators of the spin model.

    Returns vertex stars ``A[v]``, plaquette checks ``B[p]``, the two drive
    operator sums, the two noncontractible fermion loop operators, and the
    per-vertex boson parity A_v B_{p(v)}.
    """
    from .fock import pauli_on

    n_spins = _check_oracle_size(lat)
    a_ops, b_ops, boson_parity = [], [], []
    for r in range(lat.Ly):
        for c in range(lat.Lx):
            star = {
                _edge_h(lat, c, r): "X",
                _edge_h(lat, c - 1, r): "X",
                _edge_w(lat, c, r): "X",
                _edge_w(lat, c, r + 1): "X",
            }
            a_ops.append(pauli_on(n_spins, star))
            plaq = {
                _edge_h(lat, c, r - 1): "Z",
                _edge_h(lat, c, r): "Z",
                _edge_w(lat, c, r): "Z",
                _edge_w(lat, c + 1, r): "Z",
            }
            b_ops.append(pauli_on(n_spins, plaq))
    for v in range(lat.n_vertices):
        boson_parity.append(a_ops[v] @ b_ops[v])

    dim = 2**n_spins
    drive_x = np.zeros((dim, dim), dtype=complex)
    drive_y = np.zeros((dim, dim), dtype=complex)
    for r in range(lat.Ly):
        for c in range(lat.Lx):
            # right spin X, bottom spin Z: horizontal fermion processes
            drive_x += pauli_on(n_spins, {_edge_w(lat, c + 1, r): "X", _edge_h(lat, c, r): "Z"})
            # top spin X, left spin Z: vertical fermion processes
            drive_y += pauli_on(n_spins, {_edge_h(lat, c, r - 1): "X", _edge_w(lat, c, r): "Z"})

    wilson_x = -np.eye(dim, dtype=complex)
    for c in range(lat.Lx):
        wilson_x = wilson_x @ pauli_on(
            n_spins, {_edge_w(lat, c, 0): "X", _edge_h(lat, c, 0 - 1): "Z"}
        )
    wilson_y = -np.eye(dim, dtype=complex)
    for r in range(lat.Ly):
        wilson_y = wilson_y @ pauli_on(
            n_spins, {_edge_h(lat, 0, r): "X", _edge_w(lat, 0 + 1, r): "Z"}
        )

    return {
        "A": a_ops,
        "B": b_ops,
        "boson_parity": boson_parity,
        "drive_x": drive_x,
        "drive_y": drive_y,
        "wilson_x": wilson_x,
        "wilson_y": wilson_y,
        "n_spins": n_spins,
    }


def spin_drive_terms(lat: LatticeSpec, cfg: VortexConfig | None = None):
    """Static spin Hamiltonian and the two drive operator sums.

    Occupied vertices flip the sign of their star coupling, which is the
    preparation convention keeping the fermion chemical potential uniform.
    """
    ops = spin_operators(lat)
    g = 1.0  # unit coupling; DriveParams.g rescales below
    occ = cfg.occupation if cfg is not None else (0,) * lat.n_vertices
    h_static = np.zeros_like(ops["drive_x"])
    for v, a in enumerate(ops["A"]):
        h_static -= 0.5 * g * (1 - 2 * occ[v]) * a
    for b in ops["B"]:
        h_static -= 0.5 * g * b
    return h_static, ops["drive_x"], ops["drive_y"]


def spin_model(
    lat: LatticeSpec,
    params: DriveParams,
    t: float,
    cfg: VortexConfig | None = None,
) -> np.ndarray:
    """Full many-body spin Hamiltonian at time t (static part plus drive)."""
    h_static, drive_x, drive_y = spin_drive_terms(lat, cfg)
    dx, dy = params.drive_values(t)
    return params.g * h_static - dx * drive_x - dy * drive_y


# ---------------------------------------------------------------------------
# serialization


def params_to_json(params: DriveParams) -> str:
    return json.dumps(
        {
            "g": params.g,
            "J": params.J,
            "Delta": params.Delta,
            "omega": params.omega,
            "phi_x": params.phi_x,
            "phi_y": params.phi_y,
            "t0": params.t0,
        }
    )


def params_from_json(text: str) -> DriveParams:
    data = json.loads(text)
    return DriveParams(
        J=float(data["J"]),
        Delta=float(data["Delta"]),
        omega=float(data["omega"]),
        g=float(data.get("g", 1.0)),
        phi_x=float(data.get("phi_x", 0.0)),
        phi_y=float(data.get("phi_y", math.pi / 2)),
        t0=float(data.get("t0", 0.0)),
    )
