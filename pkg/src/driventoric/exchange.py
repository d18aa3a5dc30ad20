"""T-junction exchange of two vortices and gauge-fixed Berry-phase readout.

Two move orderings over the same T-shaped set of positions are compared:
path P transposes the two vortices while path P' returns them to their
starting points, using exactly the same multiset of elementary hops.  The
difference of the accumulated phases is therefore insensitive to every
path-local contribution and measures the exchange statistics alone.

Each intermediate vortex configuration contributes its even-parity
Floquet-BdG ground state, expressed in Thouless form over the ground state
of the initial configuration; the gauge is fixed along the whole path by
keeping overlaps with that reference real positive.  Vertical hops insert
the fermion-parity string of the traversed bond through a two-factor
product that cancels the representation phase of the transformed state.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .bcs import (
    BcsState,
    BogoliubovBasis,
    SingularOverlapError,
    diagonalize,
    overlap,
    parity_string_transform,
    physical_ground,
    thouless,
)
from .floquet import floquet_system
from .lattice import (
    LatticeSpec,
    LatticeError,
    SectorSpec,
    VortexConfig,
    VortexMove,
    move_vortex,
)
from .model import DriveParams, params_to_json

__all__ = [
    "FusionSector",
    "ExchangePath",
    "ExchangeResult",
    "DegeneratePathError",
    "build_levin_wen_paths",
    "ground_state_for",
    "step_element",
    "berry_phase",
    "exchange_phase",
]


class DegeneratePathError(RuntimeError):
    """A step element collapsed (likely a level crossing along the path)."""


@dataclass(frozen=True)
class FusionSector:
    """Fusion channel of the vortex pair, selected by boundary conditions."""

    sector: str

    def __post_init__(self):
        if self.sector not in ("vacuum", "fermion"):
            raise ValueError("fusion sector must be 'vacuum' or 'fermion'")

    @property
    def boundary(self) -> SectorSpec:
        if self.sector == "vacuum":
            return SectorSpec(-1, -1)  # doubly antiperiodic
        return SectorSpec(1, 1)  # doubly periodic


@dataclass(frozen=True)
class ExchangePath:
    steps: tuple[VortexMove, ...]
    initial: VortexConfig
    label: str

    def configurations(self, lat: LatticeSpec) -> list[VortexConfig]:
        """Configurations visited, starting and ending at ``initial``."""
        cfgs = [self.initial]
        cfg = self.initial
        for mv in self.steps:
            cfg, _ = move_vortex(lat, cfg, mv.from_vertex, mv.direction)
            cfgs.append(cfg)
        return cfgs


def _leg(lat: LatticeSpec, start: tuple[int, int], end: tuple[int, int]):
    """Unit hops along one axis from vertex ``start`` to vertex ``end``."""
    (c0, r0), (c1, r1) = start, end
    if c0 != c1 and r0 != r1:
        raise LatticeError("T-junction legs must be axis aligned")
    hops = []
    if c0 != c1:
        step = 1 if c1 > c0 else -1
        direction = "+x" if step > 0 else "-x"
        for c in range(c0, c1, step):
            hops.append(((c, r0), direction))
    else:
        step = 1 if r1 > r0 else -1
        direction = "+y" if step > 0 else "-y"
        for r in range(r0, r1, step):
            hops.append(((c0, r), direction))
    return hops


def _path_from_legs(lat: LatticeSpec, initial: VortexConfig, legs, label: str) -> ExchangePath:
    cfg = initial
    moves = []
    for start, end in legs:
        for (coord, direction) in _leg(lat, start, end):
            v = lat.vertex_index(*coord)
            cfg, mv = move_vortex(lat, cfg, v, direction)
            moves.append(mv)
    if [n for n in cfg.occupation] != [n for n in initial.occupation]:
        raise LatticeError("exchange path does not return to the initial configuration")
    return ExchangePath(steps=tuple(moves), initial=initial, label=label)


def build_levin_wen_paths(
    lat: LatticeSpec,
    junction: tuple[int, int] | None = None,
    arm_length: int = 2,
    orientation: str = "ccw",
) -> tuple[ExchangePath, ExchangePath]:
    """The two frozen move orderings over one T-junction.

    Arms: a and b sit ``arm_length`` columns left and right of the junction
    o, the third arm c the same distance along increasing row index.  The
    exchanging path is

        P  = [b->o, o->c, a->o, o->b, c->o, o->a]

    and the non-exchanging companion with the identical hop multiset is

        P' = [a->o, o->c, b->o, o->b, c->o, o->a].

    The counterclockwise orientation label refers to the frozen acceptance
    convention; ``orientation="cw"`` mirrors the junction left-right, which
    negates both sector phases.
    """
    if lat.topology != "torus":
        raise LatticeError("exchange protocol runs on the torus")
    if arm_length < 1:
        raise ValueError("arm length must be at least 1")
    if orientation not in ("ccw", "cw"):
        raise ValueError("orientation must be 'ccw' or 'cw'")
    if junction is None:
        junction = (lat.Lx // 2, lat.Ly // 2)
    c0, r0 = junction
    a = (c0 - arm_length, r0)
    b = (c0 + arm_length, r0)
    c = (c0, r0 + arm_length)
    margin = 2
    for col, row in (a, b, c, junction):
        if not (margin <= col <= lat.Lx - 1 - margin and margin <= row <= lat.Ly - 1 - margin):
            raise LatticeError(
                f"junction arm at ({col},{row}) is closer than {margin} sites "
                "to a boundary identification line"
            )
    if orientation == "cw":
        a, b = b, a
    o = junction
    initial = VortexConfig.from_vertices(lat, [a, b])
    legs_p = [(b, o), (o, c), (a, o), (o, b), (c, o), (o, a)]
    legs_pp = [(a, o), (o, c), (b, o), (o, b), (c, o), (o, a)]
    path_p = _path_from_legs(lat, initial, legs_p, "P")
    path_pp = _path_from_legs(lat, initial, legs_pp, "P_prime")
    multiset = lambda path: sorted(
        (mv.from_vertex, mv.to_vertex) for mv in path.steps
    )
    if multiset(path_p) != multiset(path_pp):
        raise LatticeError("path move multisets differ; construction bug")
    return path_p, path_pp


def ground_state_for(
    cfg: VortexConfig,
    sector: FusionSector | SectorSpec,
    params: DriveParams,
    lat: LatticeSpec,
    reference: BogoliubovBasis | None = None,
    n_steps: int = 256,
    scheme: str = "cf4",
) -> tuple[BogoliubovBasis, BcsState]:
    """Even-parity Floquet ground state of one vortex configuration.

    Returns the parity-corrected Bogoliubov basis and its Thouless
    representation over ``reference`` (over itself when no reference is
    given, i.e. the state that anchors the path gauge).
    """
    boundary = sector.boundary if isinstance(sector, FusionSector) else sector
    res = floquet_system(lat, cfg, boundary, params, n_steps=n_steps, scheme=scheme)
    basis = diagonalize(res.H_F, tag=f"cfg={cfg.occupation}")
    basis = physical_ground(basis, required_parity=1)
    anchor = basis if reference is None else reference
    state = thouless(anchor, basis)
    return basis, state


def step_element(
    state_next: BcsState,
    state_prev: BcsState,
    move: VortexMove,
    basis_prev: BogoliubovBasis,
) -> complex:
    """Matrix element of one hop between consecutive path ground states.

    Horizontal hops reduce to the plain overlap.  Vertical hops evaluate
    <next| S |prev> <prev| S |prev> with S the bond's fermion-parity string:
    the second (real) factor cancels the arbitrary representation phase of
    the string-transformed state, and only the argument of the product is
    consumed downstream.
    """
    if not move.string_plaquettes:
        return overlap(state_next, state_prev)
    reference = state_prev.reference
    transformed = parity_string_transform(basis_prev, move.string_plaquettes)
    state_q = thouless(reference, transformed)
    return overlap(state_next, state_q) * overlap(state_q, state_prev)


def berry_phase(
    path: ExchangePath,
    sector: FusionSector | SectorSpec,
    params: DriveParams,
    lat: LatticeSpec,
    n_steps: int = 256,
    scheme: str = "cf4",
    cache: dict | None = None,
    min_element: float = 1e-10,
) -> float:
    """Accumulated phase of the ordered product of step elements along a path."""
    if cache is None:
        cache = {}

    def state_for(cfg: VortexConfig, reference: BogoliubovBasis | None):
        key = cfg.occupation
        if key not in cache:
            cache[key] = ground_state_for(
                cfg, sector, params, lat, reference=reference, n_steps=n_steps, scheme=scheme
            )
        return cache[key]

    ref_basis, ref_state = state_for(path.initial, None)
    phase = 0.0
    cfg = path.initial
    basis_prev, state_prev = ref_basis, ref_state
    for index, mv in enumerate(path.steps):
        cfg_next, mv_check = move_vortex(lat, cfg, mv.from_vertex, mv.direction)
        if mv_check.string_plaquettes != mv.string_plaquettes:
            raise LatticeError("move string bookkeeping diverged from the lattice")
        try:
            basis_next, state_next = state_for(cfg_next, ref_basis)
            element = step_element(state_next, state_prev, mv, basis_prev)
        except SingularOverlapError as exc:
            raise DegeneratePathError(
                f"step {index} of path {path.label}: {exc}"
            ) from exc
        if abs(element) < min_element:
            raise DegeneratePathError(
                f"step {index} of path {path.label}: element magnitude {abs(element):.3e}"
            )
        phase += cmath.phase(element)
        cfg, basis_prev, state_prev = cfg_next, basis_next, state_next
    return math.remainder(phase, 2 * math.pi)


@dataclass(frozen=True)
class ExchangeResult:
    sector: str
    lattice: LatticeSpec
    theta_p: float
    theta_p_prime: float
    exchange_phase: float
    params: DriveParams
    arm_length: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "sector": self.sector,
                "L": self.lattice.Lx,
                "theta_P": self.theta_p,
                "theta_Pprime": self.theta_p_prime,
                "exchange_phase": self.exchange_phase,
                "params": json.loads(params_to_json(self.params)),
            }
        )


def exchange_phase(
    sector: FusionSector,
    params: DriveParams,
    lat: LatticeSpec,
    arm_length: int = 2,
    junction: tuple[int, int] | None = None,
    orientation: str = "ccw",
    n_steps: int = 256,
    scheme: str = "cf4",
) -> ExchangeResult:
    """Exchange statistics phase theta_P - theta_P' in the chosen fusion channel."""
    path_p, path_pp = build_levin_wen_paths(lat, junction, arm_length, orientation)
    cache: dict = {}
    theta_p = berry_phase(path_p, sector, params, lat, n_steps=n_steps, scheme=scheme, cache=cache)
    theta_pp = berry_phase(
        path_pp, sector, params, lat, n_steps=n_steps, scheme=scheme, cache=cache
    )
    diff = math.remainder(theta_p - theta_pp, 2 * math.pi)
    return ExchangeResult(
        sector=sector.sector,
        lattice=lat,
        theta_p=theta_p,
        theta_p_prime=theta_pp,
        exchange_phase=diff,
        params=params,
        arm_length=arm_length,
    )
