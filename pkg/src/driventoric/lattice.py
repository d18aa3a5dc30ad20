"""Lattice geometry, vortex configurations, and coupling-sign bookkeeping.

The fermionic quasiparticles live on plaquettes of an Lx x Ly square lattice,
the hardcore bosons (vortices) on vertices.  Plaquettes and vertices are both
addressed by (col, row) coordinates and stored row-major starting from the
top-left corner; ``+x`` increases the column, ``+y`` increases the row.  This
scan order is a frozen convention: every string sign below depends on it.

Geometry conventions, fixed once and validated by the flux invariants and the
small-lattice many-body oracle:

* ``vertex_of_plaquette(p)`` is the bottom-left corner of ``p`` and carries
  the same (col, row) coordinates; ``plaquette_of_vertex`` is its inverse.
* A vertical bond (p, p+y) carries the product of vortex parities over the
  vertices strictly to the right of ``vertex_of_plaquette(p)`` in the same
  vertex row, without wrapping.
* A horizontal bond crossing the periodic seam (last column -> column 0)
  carries the x boundary-condition sign times the product of vortex parities
  over all vertices in the rows strictly above the bond's row.
* A vertical bond crossing the seam (last row -> row 0) carries the y
  boundary-condition sign on top of its usual row string.
* On a cylinder the lattice is open along x and periodic along y, so the
  vertex grid gains one extra column and only the y seam signs apply.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

__all__ = [
    "LatticeSpec",
    "SectorSpec",
    "VortexConfig",
    "VortexMove",
    "Bond",
    "LatticeError",
    "build_lattice",
    "vertical_string_sign",
    "bond_coupling_sign",
    "loop_flux",
    "move_vortex",
    "vertical_move_string",
    "lattice_to_json",
    "lattice_from_json",
    "vortex_config_to_json",
    "vortex_config_from_json",
]

DIRECTIONS = ("+x", "-x", "+y", "-y")


class LatticeError(ValueError):
    """Invalid lattice geometry, index, or vortex move."""


@dataclass(frozen=True)
class LatticeSpec:
    """Plaquette/vertex geometry of a torus or a cylinder (open along x)."""

    Lx: int
    Ly: int
    topology: str = "torus"

    def __post_init__(self):
        if self.topology not in ("torus", "cylinder"):
            raise LatticeError(f"unknown topology {self.topology!r}")
        if self.Lx < 2 or self.Ly < 2:
            raise LatticeError("lattice dimensions must be at least 2")
        if self.topology == "torus" and (self.Lx % 2 or self.Ly % 2):
            raise LatticeError("torus requires even Lx and Ly")

    # -- sizes ------------------------------------------------------------

    @property
    def n_plaquettes(self) -> int:
        return self.Lx * self.Ly

    @property
    def vertex_cols(self) -> int:
        # open x direction exposes one extra vertex column
        return self.Lx + 1 if self.topology == "cylinder" else self.Lx

    @property
    def n_vertices(self) -> int:
        return self.vertex_cols * self.Ly

    # -- indexing ---------------------------------------------------------

    def plaquette_index(self, col: int, row: int) -> int:
        return (row % self.Ly) * self.Lx + (col % self.Lx)

    def plaquette_coords(self, p: int) -> tuple[int, int]:
        return p % self.Lx, p // self.Lx

    def vertex_index(self, col: int, row: int) -> int:
        if self.topology == "cylinder":
            if not 0 <= col < self.vertex_cols:
                raise LatticeError(f"vertex column {col} outside open lattice")
            return (row % self.Ly) * self.vertex_cols + col
        return (row % self.Ly) * self.vertex_cols + (col % self.Lx)

    def vertex_coords(self, v: int) -> tuple[int, int]:
        return v % self.vertex_cols, v // self.vertex_cols

    def vertex_of_plaquette(self, p: int) -> int:
        col, row = self.plaquette_coords(p)
        return self.vertex_index(col, row)

    def plaquette_of_vertex(self, v: int) -> int:
        col, row = self.vertex_coords(v)
        if col >= self.Lx:
            raise LatticeError("rightmost vertex column has no plaquette to its top-right")
        return self.plaquette_index(col, row)

    # -- neighbours -------------------------------------------------------

    def plaquette_neighbor(self, p: int, direction: str) -> tuple[int, bool] | None:
        """Neighbouring plaquette and whether the bond crosses a periodic seam.

        Returns None where the cylinder is open.
        """
        col, row = self.plaquette_coords(p)
        if direction == "+x":
            if col == self.Lx - 1:
                if self.topology == "cylinder":
                    return None
                return self.plaquette_index(0, row), True
            return self.plaquette_index(col + 1, row), False
        if direction == "-x":
            if col == 0:
                if self.topology == "cylinder":
                    return None
                return self.plaquette_index(self.Lx - 1, row), True
            return self.plaquette_index(col - 1, row), False
        if direction == "+y":
            return self.plaquette_index(col, (row + 1) % self.Ly), row == self.Ly - 1
        if direction == "-y":
            return self.plaquette_index(col, (row - 1) % self.Ly), row == 0
        raise LatticeError(f"unknown direction {direction!r}")

    def vertex_neighbor(self, v: int, direction: str) -> tuple[int, bool] | None:
        col, row = self.vertex_coords(v)
        if direction == "+x":
            if col == self.vertex_cols - 1:
                if self.topology == "cylinder":
                    return None
                return self.vertex_index(0, row), True
            return self.vertex_index(col + 1, row), False
        if direction == "-x":
            if col == 0:
                if self.topology == "cylinder":
                    return None
                return self.vertex_index(self.vertex_cols - 1, row), True
            return self.vertex_index(col - 1, row), False
        if direction == "+y":
            return self.vertex_index(col, (row + 1) % self.Ly), row == self.Ly - 1
        if direction == "-y":
            return self.vertex_index(col, (row - 1) % self.Ly), row == 0
        raise LatticeError(f"unknown direction {direction!r}")

    def bonds(self) -> Iterator["Bond"]:
        """All fermion bonds, one per (plaquette, axis) with an existing neighbour."""
        for p in range(self.n_plaquettes):
            for axis in ("x", "y"):
                nb = self.plaquette_neighbor(p, "+" + axis)
                if nb is not None:
                    q, crosses = nb
                    yield Bond(p, q, axis, crosses)


@dataclass(frozen=True)
class Bond:
    p: int
    q: int
    axis: str
    crosses_seam: bool


@dataclass(frozen=True)
class SectorSpec:
    """Fermion boundary conditions: +1 periodic, -1 antiperiodic, per direction."""

    wx: int = 1
    wy: int = 1

    def __post_init__(self):
        if self.wx not in (1, -1) or self.wy not in (1, -1):
            raise LatticeError("boundary-condition signs must be +1 or -1")

    @property
    def label(self) -> str:
        return ("P" if self.wx == 1 else "A") + ("P" if self.wy == 1 else "A")


ALL_SECTORS = (
    SectorSpec(1, 1),
    SectorSpec(1, -1),
    SectorSpec(-1, 1),
    SectorSpec(-1, -1),
)


@dataclass(frozen=True)
class VortexConfig:
    """Static vortex occupations, one 0/1 entry per vertex (immutable)."""

    occupation: tuple[int, ...]

    def __post_init__(self):
        if any(n not in (0, 1) for n in self.occupation):
            raise LatticeError("occupations must be 0 or 1")

    @classmethod
    def empty(cls, lat: LatticeSpec) -> "VortexConfig":
        return cls((0,) * lat.n_vertices)

    @classmethod
    def from_vertices(cls, lat: LatticeSpec, coords: Iterable[tuple[int, int]]) -> "VortexConfig":
        occ = [0] * lat.n_vertices
        for col, row in coords:
            v = lat.vertex_index(col, row)
            if occ[v]:
                raise LatticeError(f"vertex ({col},{row}) listed twice")
            occ[v] = 1
        cfg = cls(tuple(occ))
        if lat.topology == "torus" and cfg.total() % 2:
            raise LatticeError("torus vortex configurations must hold an even number of vortices")
        return cfg

    def total(self) -> int:
        return sum(self.occupation)

    def occupied_vertices(self, lat: LatticeSpec) -> list[tuple[int, int]]:
        return [lat.vertex_coords(v) for v, n in enumerate(self.occupation) if n]

    def with_swapped(self, v: int, w: int) -> "VortexConfig":
        occ = list(self.occupation)
        occ[v], occ[w] = occ[w], occ[v]
        return VortexConfig(tuple(occ))


@dataclass(frozen=True)
class VortexMove:
    """A single vortex hop and the fermion-parity string it drags along.

    ``string_plaquettes`` is empty for horizontal hops; for vertical hops it
    holds every plaquette strictly to the left of the traversed bond, in the
    plaquette row of the bond's lower vertex.
    """

    from_vertex: int
    to_vertex: int
    direction: str
    string_plaquettes: frozenset[int] = field(default_factory=frozenset)


def build_lattice(Lx: int, Ly: int, topology: str = "torus") -> LatticeSpec:
    """Validate dimensions and return the lattice value object."""
    return LatticeSpec(Lx, Ly, topology)


# ---------------------------------------------------------------------------
# string and bond signs


def vertical_string_sign(lat: LatticeSpec, cfg: VortexConfig, p: int) -> int:
    """Vortex-parity product over vertices strictly right of v(p), same row."""
    col, row = lat.plaquette_coords(p)
    sign = 1
    for c in range(col + 1, lat.vertex_cols):
        if cfg.occupation[lat.vertex_index(c, row)]:
            sign = -sign
    return sign


def _rows_above_sign(lat: LatticeSpec, cfg: VortexConfig, row: int) -> int:
    """Vortex-parity product over all vertices in rows strictly above ``row``."""
    count = 0
    for r in range(row):
        for c in range(lat.vertex_cols):
            count += cfg.occupation[lat.vertex_index(c, r)]
    return -1 if count % 2 else 1


def bond_coupling_sign(
    lat: LatticeSpec,
    cfg: VortexConfig,
    sector: SectorSpec,
    p: int,
    axis: str,
) -> int:
    """The +-1 coupling sign of the fermion bond (p, p + axis).

    This is the single source of coupling signs for the quadratic models:
    bulk x bonds are +1, y bonds carry the row string, and seam-crossing
    bonds additionally carry the boundary-condition sign (and, for x, the
    rows-above string).
    """
    if axis not in ("x", "y"):
        raise LatticeError(f"bond axis must be 'x' or 'y', got {axis!r}")
    nb = lat.plaquette_neighbor(p, "+" + axis)
    if nb is None:
        raise LatticeError(f"plaquette {p} has no +{axis} bond on this cylinder")
    _, crosses = nb
    if axis == "x":
        if not crosses:
            return 1
        _, row = lat.plaquette_coords(p)
        return sector.wx * _rows_above_sign(lat, cfg, row)
    sign = vertical_string_sign(lat, cfg, p)
    if crosses:
        sign *= sector.wy
    return sign


def _resolve_step(lat: LatticeSpec, p: int, q: int) -> tuple[int, str]:
    """Unique bond (base plaquette, axis) connecting p to q; error if ambiguous."""
    hits = []
    for direction in DIRECTIONS:
        nb = lat.plaquette_neighbor(p, direction)
        if nb is not None and nb[0] == q:
            base = p if direction[0] == "+" else q
            hits.append((base, direction[1]))
    hits = sorted(set(hits))
    if not hits:
        raise LatticeError(f"plaquettes {p} and {q} are not neighbours")
    if len(hits) > 1:
        raise LatticeError(
            f"bond between plaquettes {p} and {q} is ambiguous on this lattice; "
            "pass (plaquette, direction) steps instead"
        )
    return hits[0]


def loop_flux(
    lat: LatticeSpec,
    cfg: VortexConfig,
    sector: SectorSpec,
    loop: Sequence[int] | Sequence[tuple[int, str]],
) -> int:
    """Product of bond signs around a closed plaquette loop.

    The loop may be given as a list of plaquette indices (closed implicitly),
    or as (plaquette, direction) steps for lattices where consecutive
    plaquettes do not determine the bond uniquely.  For contractible loops
    the result equals the vortex parity enclosed; non-contractible loops pick
    up the boundary-condition signs as well.
    """
    if len(loop) == 0:
        raise LatticeError("empty loop")
    if isinstance(loop[0], tuple):
        steps: list[tuple[int, str]] = []
        pos = loop[0][0]
        for p, direction in loop:  # type: ignore[misc]
            if p != pos:
                raise LatticeError("loop steps are not contiguous")
            nb = lat.plaquette_neighbor(p, direction)
            if nb is None:
                raise LatticeError(f"no {direction} bond at plaquette {p}")
            base = p if direction[0] == "+" else nb[0]
            steps.append((base, direction[1]))
            pos = nb[0]
        if pos != loop[0][0]:
            raise LatticeError("loop is not closed")
    else:
        plaquettes = list(loop)  # type: ignore[arg-type]
        steps = [
            _resolve_step(lat, plaquettes[i], plaquettes[(i + 1) % len(plaquettes)])
            for i in range(len(plaquettes))
        ]
    sign = 1
    for base, axis in steps:
        sign *= bond_coupling_sign(lat, cfg, sector, base, axis)
    return sign


# ---------------------------------------------------------------------------
# vortex moves


def vertical_move_string(lat: LatticeSpec, v: int, direction: str) -> frozenset[int]:
    """Plaquettes strictly left of the vertical bond traversed from vertex v."""
    nb = lat.vertex_neighbor(v, direction)
    if nb is None:
        raise LatticeError(f"vertex {v} has no {direction} neighbour")
    lower = nb[0] if direction == "+y" else v
    col, row = lat.vertex_coords(lower)
    return frozenset(lat.plaquette_index(c, row) for c in range(col))


def move_vortex(
    lat: LatticeSpec,
    cfg: VortexConfig,
    v: int,
    direction: str,
) -> tuple[VortexConfig, VortexMove]:
    """Hop the vortex across one bond; exactly one endpoint must be occupied."""
    if direction not in DIRECTIONS:
        raise LatticeError(f"unknown direction {direction!r}")
    nb = lat.vertex_neighbor(v, direction)
    if nb is None:
        raise LatticeError(f"vertex {v} has no {direction} neighbour")
    w = nb[0]
    if cfg.occupation[v] + cfg.occupation[w] != 1:
        raise LatticeError("vortex hop needs exactly one occupied endpoint")
    string = (
        frozenset()
        if direction in ("+x", "-x")
        else vertical_move_string(lat, v, direction)
    )
    move = VortexMove(v, w, direction, string)
    return cfg.with_swapped(v, w), move


# ---------------------------------------------------------------------------
# serialization


def lattice_to_json(lat: LatticeSpec) -> str:
    return json.dumps({"Lx": lat.Lx, "Ly": lat.Ly, "topology": lat.topology})


def lattice_from_json(text: str) -> LatticeSpec:
    data = json.loads(text)
    return build_lattice(int(data["Lx"]), int(data["Ly"]), data["topology"])


def vortex_config_to_json(lat: LatticeSpec, cfg: VortexConfig) -> str:
    return json.dumps([[c, r] for c, r in cfg.occupied_vertices(lat)])


def vortex_config_from_json(lat: LatticeSpec, text: str) -> VortexConfig:
    coords = json.loads(text)
    return VortexConfig.from_vertices(lat, [(int(c), int(r)) for c, r in coords])
