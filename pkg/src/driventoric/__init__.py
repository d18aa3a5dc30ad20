"""Floquet simulator for the periodically driven toric code in its exact
free-fermion quasiparticle representation."""

from .lattice import (
    ALL_SECTORS,
    Bond,
    LatticeError,
    LatticeSpec,
    SectorSpec,
    VortexConfig,
    VortexMove,
    bond_coupling_sign,
    build_lattice,
    loop_flux,
    move_vortex,
    vertical_string_sign,
)
from .model import (
    DriveParams,
    EffectiveParams,
    QuadraticOperator,
    bdg_averaged,
    bdg_drive,
    bdg_rotated,
    effective_mu,
    fourier_component,
    kick_operator,
    spin_model,
)
from .floquet import (
    FloquetResult,
    PropagationError,
    floquet_hamiltonian,
    floquet_system,
    propagate_period,
    quasienergy_sweep,
)
from .bcs import (
    BcsState,
    BogoliubovBasis,
    SingularOverlapError,
    SkewMatrix,
    diagonalize,
    evolve,
    expectation,
    ground_parity,
    overlap,
    parity_string_transform,
    pfaffian,
    physical_ground,
    thouless,
)
from .exchange import (
    DegeneratePathError,
    ExchangePath,
    FusionSector,
    berry_phase,
    build_levin_wen_paths,
    exchange_phase,
    ground_state_for,
    step_element,
)
from .diagnostics import (
    HeatingReport,
    OracleReport,
    chern_number,
    edge_spectrum,
    heating_q,
    heating_qbar,
    ipr,
    majorana_scan,
    sector_ground_energies,
    spin_oracle,
)

__version__ = "0.1.0"
