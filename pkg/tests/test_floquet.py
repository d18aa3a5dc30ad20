import math

import numpy as np
import pytest

from driventoric.floquet import (
    PropagationError,
    floquet_hamiltonian,
    floquet_system,
    propagate_period,
    quasienergy_sweep,
    rotated_hamiltonian_fn,
)
from driventoric.lattice import SectorSpec, VortexConfig, build_lattice
from driventoric.model import DriveParams, bdg_averaged, bdg_drive, frame_rotation

AA = SectorSpec(-1, -1)
PP = SectorSpec(1, 1)


def test_constant_hamiltonian_propagation():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    h0 = a + a.conj().T
    period = 0.7
    exact = None
    w, v = np.linalg.eigh(h0)
    exact = (v * np.exp(-1j * period * w)) @ v.conj().T
    for scheme in ("midpoint", "cf4"):
        u = propagate_period(lambda t: h0, period, n_steps=64, scheme=scheme)
        assert np.abs(u - exact).max() < 1e-10


def test_static_model_diagonal_phases():
    lat = build_lattice(4, 4)
    params = DriveParams(J=0.0, Delta=0.0, omega=3.0)
    u = propagate_period(
        lambda t: bdg_drive(lat, VortexConfig.empty(lat), PP, params, t, validate=False).matrix,
        params.period,
        n_steps=32,
    )
    n = lat.n_plaquettes
    expect = np.diag(
        [np.exp(-1j * params.mu_psi * params.period)] * n
        + [np.exp(1j * params.mu_psi * params.period)] * n
    )
    assert np.abs(u - expect).max() < 1e-10


def test_propagator_unitarity_and_ph_structure():
    lat = build_lattice(4, 4)
    cfg = VortexConfig.from_vertices(lat, [(1, 1), (3, 2)])
    params = DriveParams(J=0.2, Delta=0.2, omega=3.2)
    u = propagate_period(
        rotated_hamiltonian_fn(lat, cfg, AA, params), params.period, n_steps=64
    )
    dim = u.shape[0]
    assert np.abs(u.conj().T @ u - np.eye(dim)).max() < 1e-12
    n = dim // 2
    swapped = np.empty_like(u)
    swapped[:n, :n] = u[n:, n:]
    swapped[:n, n:] = u[n:, :n]
    swapped[n:, :n] = u[:n, n:]
    swapped[n:, n:] = u[:n, :n]
    assert np.abs(swapped.conj() - u).max() < 1e-12


def test_identity_propagator_zero_quasienergies():
    res = floquet_hamiltonian(np.eye(8, dtype=complex), period=1.3)
    assert np.abs(res.quasienergies).max() == 0


def test_unfolded_quasienergies_match_generator():
    lat = build_lattice(4, 4)
    eff_h = bdg_averaged(lat, VortexConfig.empty(lat), AA, DriveParams(J=0.1, Delta=0.1, omega=3.6).averaged()).matrix
    period = 0.05  # small enough that nothing folds
    w, v = np.linalg.eigh(eff_h)
    u = (v * np.exp(-1j * period * w)) @ v.conj().T
    res = floquet_hamiltonian(u, period)
    assert np.allclose(res.quasienergies, w, atol=1e-10)
    assert np.abs(res.H_F.matrix - eff_h).max() < 1e-8


def test_quasienergy_convergence_under_step_doubling():
    lat = build_lattice(8, 8)
    params = DriveParams(J=0.2, Delta=0.2, omega=2 * 2.0 - 4 * 0.2)
    cfg = VortexConfig.empty(lat)
    eps = {}
    for n_steps in (128, 256, 512):
        res = floquet_system(lat, cfg, AA, params, n_steps=n_steps)
        eps[n_steps] = res.quasienergies
    err_lo = np.abs(eps[128] - eps[512]).max()
    err_hi = np.abs(eps[256] - eps[512]).max()
    assert err_hi < 1e-8 * params.mu_psi
    # fourth-order default scheme: error ratio near 16 under doubling
    assert 8.0 < err_lo / err_hi < 30.0


def test_cf4_is_fourth_order():
    lat = build_lattice(4, 4)
    params = DriveParams(J=0.3, Delta=0.25, omega=2.4)
    cfg = VortexConfig.from_vertices(lat, [(0, 0), (2, 1)])
    h_fn = rotated_hamiltonian_fn(lat, cfg, AA, params)
    ref = propagate_period(h_fn, params.period, n_steps=2048, scheme="cf4")
    errs = {
        n: np.abs(propagate_period(h_fn, params.period, n_steps=n, scheme="cf4") - ref).max()
        for n in (32, 64, 128)
    }
    r1 = errs[32] / errs[64]
    r2 = errs[64] / errs[128]
    assert 10 < r1 < 22
    assert 10 < r2 < 22
    # and it beats midpoint at equal matrix-exponential budget
    mid = np.abs(propagate_period(h_fn, params.period, n_steps=128, scheme="midpoint") - ref).max()
    assert errs[64] < mid


def test_high_frequency_quasienergies_match_averaged():
    """The averaged model is the leading term; its error shrinks with J/omega."""
    lat = build_lattice(6, 6)
    cfg = VortexConfig.empty(lat)
    rels = []
    for scale in (1.0, 0.5, 0.25):
        J = 0.1 * 2.0 * scale
        params = DriveParams(J=J, Delta=J, omega=2 * 2.0 - 4 * J)
        res = floquet_system(lat, cfg, AA, params, n_steps=256)
        avg = np.linalg.eigvalsh(bdg_averaged(lat, cfg, AA, params.averaged()).matrix)
        rel = np.abs(res.quasienergies - avg).max() / np.abs(avg).max()
        rels.append(rel)
        assert 1e-8 < rel < 2.0 * params.J / params.omega
    assert rels[0] > rels[1] > rels[2]


def test_particle_hole_pairing_of_quasienergies():
    lat = build_lattice(4, 6)
    cfg = VortexConfig.from_vertices(lat, [(0, 1), (2, 4)])
    params = DriveParams(J=0.3, Delta=0.3, omega=2.6)
    res = floquet_system(lat, cfg, PP, params, n_steps=128)
    eps = res.quasienergies
    assert np.abs(eps + eps[::-1]).max() < 1e-9 * params.mu_psi


def test_lab_and_rotated_frames_agree():
    """Conjugating the lab propagator by the frame transformation gives the
    rotated one up to the end-of-period parity factor (-1)."""
    lat = build_lattice(4, 4)
    cfg = VortexConfig.from_vertices(lat, [(1, 0), (1, 2)])
    params = DriveParams(J=0.15, Delta=0.2, omega=3.1, t0=0.37)
    n_steps = 512
    u_lab = propagate_period(
        lambda t: bdg_drive(lat, cfg, AA, params, t, validate=False).matrix,
        params.period,
        t0=params.t0,
        n_steps=n_steps,
        scheme="cf4",
    )
    v_rot = propagate_period(
        rotated_hamiltonian_fn(lat, cfg, AA, params),
        params.period,
        t0=params.t0,
        n_steps=n_steps,
        scheme="cf4",
    )
    r0 = frame_rotation(lat.n_plaquettes, params.omega, params.t0)
    expected = -(r0.conj()[:, None] * u_lab) * r0[None, :]
    assert np.abs(v_rot - expected).max() < 1e-9
    # equivalently: lab-frame quasienergies need the half-zone shift
    res_lab = floquet_hamiltonian(u_lab, params.period, frame="lab", half_zone_shift=True)
    res_rot = floquet_hamiltonian(v_rot, params.period)
    assert np.allclose(res_lab.quasienergies, res_rot.quasienergies, atol=1e-9)


def test_floquet_hamiltonian_rejects_nonunitary():
    with pytest.raises(PropagationError):
        floquet_hamiltonian(np.diag([1.0, 0.5]).astype(complex), period=1.0)


def test_quasienergy_sweep_single_point():
    lat = build_lattice(4, 4)
    cfg = VortexConfig.empty(lat)
    params = DriveParams(J=0.2, Delta=0.2, omega=3.2)
    rows = quasienergy_sweep([params], lat, cfg, AA, n_steps=64)
    assert len(rows) == 1
    row = rows[0]
    assert row["param_index"] == 0
    assert row["gap"] == row["min_abs_eps"]  # no vortices: gap is the lowest magnitude
    assert 0 < row["ipr_min_mode"] <= 1
