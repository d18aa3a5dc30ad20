import json
import math

import numpy as np
import pytest

from driventoric import fock
from driventoric.diagnostics import (
    OracleReport,
    chern_number,
    count_in_gap_edge_modes,
    edge_spectrum,
    heating_q,
    heating_qbar,
    infinite_temperature_energy,
    ipr,
    majorana_scan,
    random_even_configs,
    sector_ground_energies,
    spin_oracle,
)
from driventoric.lattice import SectorSpec, VortexConfig, build_lattice
from driventoric.model import DriveParams, EffectiveParams, bdg_averaged

AA = SectorSpec(-1, -1)


def topological_params(J=0.2):
    return DriveParams(J=J, Delta=J, omega=2 * 2.0 - 4 * J)  # mu = -2J


def test_ipr_limits():
    mode = np.zeros(8, dtype=complex)
    mode[3] = 1.0
    assert ipr(mode) == pytest.approx(1.0)
    uniform = np.full(8, 0.5 + 0j)
    assert ipr(uniform) == pytest.approx(1.0 / 4.0)
    with pytest.raises(ValueError):
        ipr(np.zeros(8))


def test_sector_energies_zero_drive_degenerate():
    lat = build_lattice(4, 4)
    params = DriveParams(J=0.0, Delta=0.0, omega=3.0)
    out = sector_ground_energies(lat, params, n_steps=32)
    energies = [r["energy"] for r in out.rows]
    assert max(energies) - min(energies) < 1e-12
    assert out.splitting < 1e-12
    data = json.loads(out.to_json())
    assert data["schema_version"] == 1


def test_sector_energies_topological_parity_pattern():
    lat = build_lattice(8, 8)
    out = sector_ground_energies(lat, topological_params(), n_steps=128)
    parities = {r["sector"]: r["parity"] for r in out.rows}
    assert parities["PP"] == -1
    assert parities["AA"] == 1
    assert parities["PA"] == 1 and parities["AP"] == 1
    assert out.splitting > 0


def test_edge_spectrum_topological_vs_trivial():
    lat = build_lattice(8, 24, "cylinder")
    rows = edge_spectrum(lat, topological_params(), n_steps=96)
    count, gap = count_in_gap_edge_modes(rows)
    assert gap > 0
    assert count >= 2
    # detuned far out of the topological window: no in-gap edge modes
    J = 0.2
    trivial = DriveParams(J=J, Delta=J, omega=2 * (2.0 + 6 * J))
    rows_t = edge_spectrum(lat, trivial, n_steps=96)
    count_t, _ = count_in_gap_edge_modes(rows_t)
    assert count_t == 0


def test_majorana_scan_flags_zero_modes():
    # at L=8 the pair still hybridizes noticeably; a tenth of the gap is the
    # appropriate scale here (the strict 5% flag is exercised at L=16)
    lat = build_lattice(8, 8)
    cfg = VortexConfig.from_vertices(lat, [(2, 2), (6, 2)])
    rows = majorana_scan([topological_params()], lat, cfg, AA, n_steps=128, flag_fraction=0.1)
    row = rows[0]
    assert row["zero_mode"]
    assert not row["pi_mode"]
    assert row["min_abs_eps"] < 0.1 * row["bulk_gap_zero"]
    # vortex-bound mode is much more localized than a bulk mode
    assert row["ipr_zero_mode"] > 5.0 / lat.n_plaquettes


def test_chern_numbers():
    J = 0.2
    assert chern_number(EffectiveParams(mu=-2 * J, J=J, Delta=J)) == 1
    assert chern_number(EffectiveParams(mu=-6 * J, J=J, Delta=J)) == 0
    assert (
        chern_number(EffectiveParams(mu=-2 * J, J=J, Delta=J, phi_y=-math.pi / 2)) == -1
    )
    assert chern_number(EffectiveParams(mu=-2 * J, J=J, Delta=J), k_grid=48) == 1


def test_chern_rejects_gapless():
    J = 0.2
    with pytest.raises(ValueError):
        chern_number(EffectiveParams(mu=0.0, J=J, Delta=0.0))


def test_infinite_temperature_energy_matches_fock_trace():
    lat = build_lattice(2, 2)
    eff = EffectiveParams(mu=-0.37, J=0.2, Delta=0.15)
    op = bdg_averaged(lat, VortexConfig.empty(lat), AA, eff)
    e_inf = infinite_temperature_energy(op)
    # normal-ordered many-body image: trace/2^N
    ann = fock.fermion_ops(4)
    h_mb = fock.build_quadratic_operator(op.matrix, ann)
    h_mb = h_mb + 0.5 * np.trace(op.h).real * np.eye(16)
    assert e_inf == pytest.approx(np.trace(h_mb).real / 16, abs=1e-12)
    # equals half the number-coefficient sum: N/2 * (-mu)
    assert e_inf == pytest.approx(-0.5 * lat.n_plaquettes * eff.mu)


def test_heating_q_starts_at_zero_and_stays_small_at_high_frequency():
    lat = build_lattice(4, 4)
    params = topological_params(J=2.0 / 12)  # J/omega = 0.05
    cfg = VortexConfig.empty(lat)
    report = heating_q(60, params, cfg, AA, lat, n_steps=128)
    assert report.q_series[0] == (0, 0.0)
    values = [q for _, q in report.q_series]
    assert max(values) < 0.2
    assert report.e0 < report.e_inf


def test_heating_qbar_zero_when_drive_equals_average():
    """Hypothetical evolution under the averaged model itself gives no heating."""
    from driventoric.floquet import floquet_hamiltonian, propagate_period

    lat = build_lattice(4, 4)
    params = topological_params()
    cfg = VortexConfig.empty(lat)
    avg = bdg_averaged(lat, cfg, AA, params.averaged())
    u_t = propagate_period(lambda t: avg.matrix, params.period, n_steps=32)
    res = floquet_hamiltonian(u_t, params.period)
    q_bar = heating_qbar(params, cfg, AA, lat, floquet_result=res)
    assert abs(q_bar) < 1e-9


def test_heating_qbar_small_at_high_frequency():
    lat = build_lattice(4, 4)
    params = topological_params(J=2.0 / 12)
    q_bar = heating_qbar(params, VortexConfig.empty(lat), AA, lat, n_steps=128)
    assert 0 <= q_bar < 0.1


@pytest.mark.slow
def test_heating_qbar_matches_long_time_average():
    """The projected observable reproduces the stroboscopic diagonal ensemble."""
    lat = build_lattice(6, 6)
    J = 0.8
    params = DriveParams(J=J, Delta=J, omega=2 * 2.0 - 4 * J)
    cfg = VortexConfig.from_vertices(lat, [(1, 2), (4, 3)])
    rep = heating_q(1500, params, cfg, AA, lat, n_steps=256, sample_every=5)
    tail = np.array([q for n, q in rep.q_series if n >= 300])
    q_bar = heating_qbar(params, cfg, AA, lat, n_steps=256)
    assert q_bar == pytest.approx(tail.mean(), abs=4 * tail.std())


def test_random_even_configs_deterministic():
    lat = build_lattice(8, 8)
    a = random_even_configs(lat, 0.1, 5, seed=11)
    b = random_even_configs(lat, 0.1, 5, seed=11)
    assert a == b
    for cfg in a:
        assert cfg.total() % 2 == 0
        assert cfg.total() == 6  # 0.1 * 64 rounded to even


@pytest.mark.slow
def test_spin_oracle_weak_drive():
    J = 0.05 * 2.0
    params = DriveParams(J=J, Delta=J, omega=2 * 2.0 - 4 * J)
    report = spin_oracle(params, n_steps=256, run_control=True)
    assert report.passed
    assert report.max_mismatch < 1e-6 * params.mu_psi
    assert report.control_mismatch is not None
    assert report.control_mismatch > 1e3 * max(report.max_mismatch, 1e-12)
    data = json.loads(report.to_json())
    assert data["passed"] is True
