import math

import numpy as np
import pytest

from driventoric.lattice import (
    ALL_SECTORS,
    SectorSpec,
    VortexConfig,
    build_lattice,
)
from driventoric.model import (
    DriveParams,
    EffectiveParams,
    averaged_bloch,
    bdg_averaged,
    bdg_drive,
    bdg_rotated,
    cylinder_bloch_averaged,
    cylinder_bloch_rotated,
    cylinder_k_values,
    effective_mu,
    fourier_component,
    frame_rotation,
    kick_operator,
    params_from_json,
    params_to_json,
    rotated_components,
    spin_model,
    spin_operators,
)

PP = SectorSpec(1, 1)
AA = SectorSpec(-1, -1)


def random_config(lat, rng):
    occ = rng.integers(0, 2, size=lat.n_vertices)
    if occ.sum() % 2:
        occ[rng.integers(lat.n_vertices)] ^= 1
    return VortexConfig(tuple(int(x) for x in occ))


def test_effective_mu():
    assert effective_mu(4.0, 2.0) == 0.0
    mu_psi, J = 2.0, 0.3
    assert effective_mu(2 * mu_psi - 4 * J, mu_psi) == pytest.approx(-2 * J)
    assert effective_mu(2 * (mu_psi + 0.17), mu_psi) == pytest.approx(0.17)


def test_quadratic_operator_invariants_random_draws():
    rng = np.random.default_rng(7)
    for _ in range(200):
        lat = build_lattice(4, int(rng.choice([4, 6])))
        cfg = random_config(lat, rng)
        sector = ALL_SECTORS[rng.integers(4)]
        params = DriveParams(
            J=rng.uniform(0, 0.5),
            Delta=rng.uniform(0, 0.5),
            omega=rng.uniform(1.0, 5.0),
            phi_x=rng.uniform(0, 2 * math.pi),
            phi_y=rng.uniform(0, 2 * math.pi),
        )
        t = rng.uniform(0, params.period)
        bdg_drive(lat, cfg, sector, params, t).validate()
        bdg_rotated(lat, cfg, sector, params, t).validate()
        bdg_averaged(lat, cfg, sector, params.averaged()).validate()


def test_zero_drive_is_diagonal():
    lat = build_lattice(4, 4)
    params = DriveParams(J=0.0, Delta=0.0, omega=3.0)
    op = bdg_drive(lat, VortexConfig.empty(lat), PP, params, 0.1)
    w = np.linalg.eigvalsh(op.matrix)
    assert np.allclose(np.sort(w), [-params.mu_psi] * 16 + [params.mu_psi] * 16)


def test_x_bonds_vanish_at_drive_zero_crossing():
    lat = build_lattice(4, 4)
    params = DriveParams(J=0.4, Delta=0.4, omega=2.0, phi_x=0.0)
    # J + 2 Delta cos(omega t) = 0 at cos = -1/2
    t = (2 * math.pi / 3) / params.omega
    dx, _ = params.drive_values(t)
    assert abs(dx) < 1e-12
    op = bdg_drive(lat, VortexConfig.empty(lat), PP, params, t)
    h = op.h
    for p in range(lat.n_plaquettes):
        q, _ = lat.plaquette_neighbor(p, "+x")
        assert abs(h[p, q]) < 1e-15


@pytest.mark.parametrize("sector", ALL_SECTORS)
def test_small_torus_fixture(sector):
    """2x2 torus with a horizontal vortex pair, built by hand from the bond rules."""
    lat = build_lattice(2, 2)
    cfg = VortexConfig.from_vertices(lat, [(0, 0), (1, 0)])
    params = DriveParams(J=0.23, Delta=0.11, omega=3.1, phi_x=0.2, phi_y=1.9)
    t = 0.3
    dx, dy = params.drive_values(t)
    wx, wy = sector.wx, sector.wy

    h = np.zeros((4, 4))
    np.fill_diagonal(h, params.mu_psi)
    # double x bonds between the two columns: one bulk (+1), one seam (wx)
    h[0, 1] = h[1, 0] = -dx * (1 + wx)
    h[2, 3] = h[3, 2] = -dx * (1 + wx)
    # y bonds: bulk string through the occupied top row, seam carries wy
    h[0, 2] = h[2, 0] = -dy * (-1 + wy)
    h[1, 3] = h[3, 1] = -dy * (1 + wy)

    pair = np.zeros((4, 4), dtype=complex)
    pair[0, 1], pair[1, 0] = dx * (1 - wx), -dx * (1 - wx)
    pair[2, 3], pair[3, 2] = dx * (1 - wx), -dx * (1 - wx)
    pair[0, 2], pair[2, 0] = dy * (-1 - wy), -dy * (-1 - wy)
    pair[1, 3], pair[3, 1] = dy * (1 - wy), -dy * (1 - wy)

    expected = np.block([[h.astype(complex), pair], [pair.conj().T, -h.T.astype(complex)]])
    got = bdg_drive(lat, cfg, sector, params, t).matrix
    assert np.allclose(got, expected, atol=1e-14)


def test_drive_is_time_periodic():
    lat = build_lattice(4, 4)
    rng = np.random.default_rng(5)
    cfg = random_config(lat, rng)
    params = DriveParams(J=0.2, Delta=0.3, omega=2.7, phi_x=0.4, phi_y=2.0)
    for t in rng.uniform(0, 10, size=4):
        a = bdg_drive(lat, cfg, PP, params, t).matrix
        b = bdg_drive(lat, cfg, PP, params, t + params.period).matrix
        assert np.abs(a - b).max() < 1e-13


def test_rotated_frame_identity():
    """Rotating-frame matrix equals the conjugated lab matrix plus the frame term."""
    lat = build_lattice(4, 4)
    rng = np.random.default_rng(2)
    cfg = random_config(lat, rng)
    params = DriveParams(J=0.3, Delta=0.2, omega=3.4, phi_x=0.5, phi_y=1.2)
    n = lat.n_plaquettes
    sigma_z = np.diag([1.0] * n + [-1.0] * n)
    for t in rng.uniform(0, 2 * params.period, size=10):
        lab = bdg_drive(lat, cfg, AA, params, t).matrix
        r = frame_rotation(n, params.omega, t)
        conjugated = (r.conj()[:, None] * lab) * r[None, :]
        expected = conjugated - (params.omega / 2.0) * sigma_z
        got = bdg_rotated(lat, cfg, AA, params, t).matrix
        assert np.abs(got - expected).max() < 1e-12


def test_rotated_diagonal_vanishes_on_resonance():
    lat = build_lattice(4, 4)
    params = DriveParams(J=0.1, Delta=0.1, omega=4.0)  # omega = 2 mu_psi
    op = bdg_rotated(lat, VortexConfig.empty(lat), PP, params, 0.7)
    assert np.abs(np.diag(op.matrix)).max() < 1e-12


def _period_average(fn, period, n_nodes=32):
    """Trapezoidal average over one period; exact for low-order trig polynomials."""
    acc = None
    for k in range(n_nodes):
        m = fn(k * period / n_nodes)
        acc = m if acc is None else acc + m
    return acc / n_nodes


def test_time_average_of_rotated_matches_averaged():
    lat = build_lattice(4, 4)
    rng = np.random.default_rng(9)
    cfg = random_config(lat, rng)
    params = DriveParams(J=0.2, Delta=0.15, omega=3.6, phi_x=0.3, phi_y=0.3 + math.pi / 2)
    avg = _period_average(
        lambda t: bdg_rotated(lat, cfg, AA, params, t).matrix, params.period
    )
    target = bdg_averaged(lat, cfg, AA, params.averaged()).matrix
    assert np.abs(avg - target).max() < 1e-12
    # Delta = 0 leaves a pure hopping model
    params0 = DriveParams(J=0.2, Delta=0.0, omega=3.6)
    avg0 = _period_average(
        lambda t: bdg_rotated(lat, cfg, AA, params0, t).matrix, params0.period
    )
    assert np.abs(avg0[: 16, 16:]).max() < 1e-14


def test_averaged_pure_hopping_dispersion():
    lat = build_lattice(4, 4)
    eff = EffectiveParams(mu=0.0, J=0.31, Delta=0.0)
    op = bdg_averaged(lat, VortexConfig.empty(lat), PP, eff)
    ks = 2 * math.pi * np.arange(4) / 4
    expect = sorted(
        s * 2 * eff.J * (math.cos(kx) + math.cos(ky))
        for kx in ks
        for ky in ks
        for s in (+1, -1)
    )
    assert np.allclose(np.linalg.eigvalsh(op.matrix), expect, atol=1e-12)


def test_averaged_pairing_chirality():
    lat = build_lattice(4, 4)
    eff = EffectiveParams(mu=-0.4, J=0.2, Delta=0.17, phi_x=0.0, phi_y=math.pi / 2)
    op = bdg_averaged(lat, VortexConfig.empty(lat), PP, eff)
    n = lat.n_plaquettes
    lower = op.matrix[n:, :n]  # annihilation-pair coefficients
    p = lat.plaquette_index(1, 1)
    qx, _ = lat.plaquette_neighbor(p, "+x")
    qy, _ = lat.plaquette_neighbor(p, "+y")
    ratio = lower[p, qy] / lower[p, qx]
    assert ratio == pytest.approx(1j)


def test_gauge_shift_leaves_averaged_spectrum():
    lat = build_lattice(4, 4)
    rng = np.random.default_rng(21)
    cfg = random_config(lat, rng)
    base = EffectiveParams(mu=-0.3, J=0.2, Delta=0.2, phi_x=0.1, phi_y=0.1 + math.pi / 2)
    shifted = EffectiveParams(
        mu=base.mu, J=base.J, Delta=base.Delta, phi_x=base.phi_x + 0.83, phi_y=base.phi_y + 0.83
    )
    w0 = np.linalg.eigvalsh(bdg_averaged(lat, cfg, AA, base).matrix)
    w1 = np.linalg.eigvalsh(bdg_averaged(lat, cfg, AA, shifted).matrix)
    assert np.allclose(w0, w1, atol=1e-12)


def test_fourier_components_quadrature():
    lat = build_lattice(4, 4)
    rng = np.random.default_rng(13)
    cfg = random_config(lat, rng)
    params = DriveParams(J=0.25, Delta=0.2, omega=3.3, phi_x=0.7, phi_y=1.4)
    comps = rotated_components(lat, cfg, AA, params)
    for m in range(-3, 4):
        quad = _period_average(
            lambda t: bdg_rotated(lat, cfg, AA, params, t).matrix
            * np.exp(-1j * m * params.omega * t),
            params.period,
        )
        direct = fourier_component(lat, cfg, AA, params, m)
        assert np.abs(quad - direct).max() < 1e-10
        if m != 0:
            assert np.abs(comps.get(m, direct) - direct).max() < 1e-14
    # m = 0 equals the averaged model at the effective chemical potential
    assert np.abs(comps[0] - bdg_averaged(lat, cfg, AA, params.averaged()).matrix).max() < 1e-12
    # |m| = 2 holds pairing entries only
    c2 = comps[2]
    n = lat.n_plaquettes
    assert np.abs(c2[:n, :n]).max() == 0
    assert np.abs(c2[n:, n:]).max() == 0
    assert np.abs(c2[:n, n:]).max() > 0


def test_fourier_reconstruction():
    lat = build_lattice(4, 4)
    cfg = VortexConfig.empty(lat)
    params = DriveParams(J=0.2, Delta=0.3, omega=2.9, phi_x=0.2, phi_y=1.1)
    comps = rotated_components(lat, cfg, PP, params)
    rng = np.random.default_rng(17)
    for t in rng.uniform(0, params.period, size=5):
        rebuilt = sum(np.exp(1j * m * params.omega * t) * c for m, c in comps.items())
        direct = bdg_rotated(lat, cfg, PP, params, t).matrix
        assert np.abs(rebuilt - direct).max() < 1e-10


def test_kick_operator():
    lat = build_lattice(4, 4)
    cfg = VortexConfig.empty(lat)
    params = DriveParams(J=0.2, Delta=0.2, omega=4.0)
    t0 = 0.13
    assert np.abs(kick_operator(lat, cfg, AA, params, t0, t0)).max() == 0
    assert np.abs(kick_operator(lat, cfg, AA, params, t0 + params.period, t0)).max() < 1e-12
    k = kick_operator(lat, cfg, AA, params, t0 + 0.21 * params.period, t0)
    assert np.abs(k + k.conj().T).max() < 1e-12
    # halving omega at the same drive-phase point doubles the kick exactly
    half = DriveParams(J=0.2, Delta=0.2, omega=2.0)
    k2 = kick_operator(lat, cfg, AA, half, t0 * 2 + 0.21 * half.period, t0 * 2)
    assert np.linalg.norm(k2) == pytest.approx(2 * np.linalg.norm(k), rel=1e-12)


def test_averaged_bloch_matches_real_space():
    lat = build_lattice(4, 4)
    eff = EffectiveParams(mu=-0.37, J=0.21, Delta=0.18, phi_x=0.3, phi_y=0.3 + math.pi / 2)
    for sector in (PP, AA):
        shift = 0.0 if sector.wx == 1 else 0.5
        ks = 2 * math.pi * (np.arange(4) + shift) / 4
        bloch = sorted(
            float(w)
            for kx in ks
            for ky in ks
            for w in np.linalg.eigvalsh(averaged_bloch(eff, kx, ky))
        )
        real = np.linalg.eigvalsh(bdg_averaged(lat, VortexConfig.empty(lat), sector, eff).matrix)
        assert np.allclose(bloch, real, atol=1e-10)


@pytest.mark.parametrize("wy", [1, -1])
def test_cylinder_bloch_matches_real_space(wy):
    lat = build_lattice(4, 6, "cylinder")
    sector = SectorSpec(1, wy)
    eff = EffectiveParams(mu=-0.4, J=0.2, Delta=0.2)
    blocks = [cylinder_bloch_averaged(lat, eff, k) for k in cylinder_k_values(lat.Ly, wy)]
    bloch = np.sort(np.concatenate([np.linalg.eigvalsh(b) for b in blocks]))
    real = np.linalg.eigvalsh(bdg_averaged(lat, VortexConfig.empty(lat), sector, eff).matrix)
    assert np.allclose(bloch, real, atol=1e-10)

    params = DriveParams(J=0.2, Delta=0.2, omega=3.2)
    t = 0.41
    blocks = [cylinder_bloch_rotated(lat, params, k, t) for k in cylinder_k_values(lat.Ly, wy)]
    bloch = np.sort(np.concatenate([np.linalg.eigvalsh(b) for b in blocks]))
    real = np.linalg.eigvalsh(
        bdg_rotated(lat, VortexConfig.empty(lat), sector, params, t).matrix
    )
    assert np.allclose(bloch, real, atol=1e-10)


def test_spin_model_static_spectrum():
    lat = build_lattice(2, 2)
    params = DriveParams(J=0.0, Delta=0.0, omega=3.0)
    h = spin_model(lat, params, 0.0)
    w = np.linalg.eigvalsh(h)
    assert w[0] == pytest.approx(-4.0)  # -g L^2
    assert np.allclose(w[:4], -4.0, atol=1e-12)
    assert w[4] == pytest.approx(-2.0)  # stabilizer pair excitation
    ops = spin_operators(lat)
    # single plaquette flip costs g relative to the ground multiplet
    ground = np.linalg.eigh(h)[1][:, 0]
    flipped = ops["B"][0] @ ground  # not an eigenstate of the constraint-free count
    assert np.vdot(ground, ops["B"][0] @ ground).real == pytest.approx(1.0)


def test_spin_model_conserved_set():
    lat = build_lattice(2, 2)
    params = DriveParams(J=0.21, Delta=0.13, omega=3.0, phi_x=0.3)
    cfg = VortexConfig.from_vertices(lat, [(0, 0), (1, 1)])
    h = spin_model(lat, params, 0.37, cfg)
    ops = spin_operators(lat)
    for q in ops["boson_parity"] + [ops["wilson_x"], ops["wilson_y"]]:
        assert np.abs(q @ h - h @ q).max() < 1e-12
    assert np.abs(ops["wilson_x"] @ ops["wilson_y"] - ops["wilson_y"] @ ops["wilson_x"]).max() < 1e-12
    # modified preparation keeps the vortex state in the ground multiplet
    w = np.linalg.eigvalsh(spin_model(lat, DriveParams(J=0, Delta=0, omega=3.0), 0.0, cfg))
    assert w[0] == pytest.approx(-4.0)


def test_params_json_round_trip():
    params = DriveParams(J=0.1, Delta=0.2, omega=3.3, g=1.0, phi_x=0.4, phi_y=2.0, t0=0.6)
    assert params_from_json(params_to_json(params)) == params
