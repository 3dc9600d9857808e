"""Voxel phenotype construction.

A design lives on a 100x100x100 grid of 0.3 mm voxels. One horizontal layer
holds a square platform ring and four blades; the layer is either copied to
every z-slice (z-uniform) or redrawn per vertical section when the genome
carries z-alleles.

Layer anatomy, in cell coordinates (x, y) with 0 <= x, y < 100:

* Platform ring: the one-cell-thick boundary of the square [42, 57]^2,
  60 cells in total, enclosing a 14x14 empty court.
* Blade 0 grows in +x from the ring's edge: axial cell s (0 <= s < 42) sits
  at x = 58 + s, and transverse offset t occupies y = 50 + t. Each of the 10
  genome segments covers axial cells s in [floor(42*i/10), floor(42*(i+1)/10)),
  i.e. runs of 4,4,4,4,5,4,4,4,4,5 cells.
* Blades 1..3 are blade 0 rotated by successive quarter turns
  (x, y) -> (y, 99 - x) about the grid center.

Within a blade, segment i fills the contiguous transverse band computed by
:func:`compute_blade_bands` from the base alleles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .genome import (
    BASE_ALLELE_COUNT,
    BASE_ALLELE_MAX,
    BASE_ALLELE_MIN,
    Genome,
)

GRID_SIZE = 100
VOXEL_SIZE_MM = 0.3
SEGMENT_COUNT = BASE_ALLELE_COUNT
BLADE_LENGTH = 42
BLADE_COUNT = 4
PLATFORM_LO = 42
PLATFORM_HI = 57
BLADE_ROOT_X = PLATFORM_HI + 1
CENTERLINE_Y = 50
MAX_TRANSVERSE = GRID_SIZE - 1 - CENTERLINE_Y  # widest legal band offset, 49
Z_SECTION_COUNT = 6


@dataclass(frozen=True)
class BladeBand:
    """Inclusive transverse extent [lower, upper] of one blade segment."""

    segment: int
    lower: int
    upper: int

    def __post_init__(self) -> None:
        if not 0 <= self.lower <= self.upper <= MAX_TRANSVERSE:
            raise ValueError(f"band [{self.lower}, {self.upper}] out of range")

    @property
    def height(self) -> int:
        return self.upper - self.lower + 1


@dataclass(frozen=True)
class VoxelGrid:
    """Immutable occupancy grid, indexed [x, y, z]."""

    occupancy: np.ndarray
    voxel_size_mm: float = VOXEL_SIZE_MM
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        occ = np.ascontiguousarray(self.occupancy, dtype=bool)
        occ.setflags(write=False)
        object.__setattr__(self, "occupancy", occ)
        if occ.ndim != 3:
            raise ValueError("occupancy must be a 3-d array")
        if self.voxel_size_mm <= 0:
            raise ValueError("voxel size must be positive")

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.occupancy.shape

    @property
    def enabled_count(self) -> int:
        if "count" not in self._cache:
            self._cache["count"] = int(np.count_nonzero(self.occupancy))
        return self._cache["count"]

    @property
    def is_z_uniform(self) -> bool:
        """True when every z-slice equals slice 0."""
        if "zuni" not in self._cache:
            occ = self.occupancy
            self._cache["zuni"] = bool(np.all(occ == occ[:, :, :1]))
        return self._cache["zuni"]

    def layer(self, z: int = 0) -> np.ndarray:
        return self.occupancy[:, :, z]


def segment_span(i: int) -> tuple[int, int]:
    """Half-open axial range [start, stop) of segment ``i`` along the blade."""
    if not 0 <= i < SEGMENT_COUNT:
        raise ValueError(f"segment index {i} out of range")
    return (BLADE_LENGTH * i // SEGMENT_COUNT, BLADE_LENGTH * (i + 1) // SEGMENT_COUNT)


def compute_blade_bands(base_alleles: Sequence[int]) -> list[BladeBand]:
    """Derive the transverse band of each segment from the base alleles.

    Segment 0 spans [0, allele]. Each later segment compares its allele U
    against the previous band [L, Ub]:

    * U >= Ub: widen outward, band = [max(0, Ub - 2), U]
    * U <= L: step back inward, band = [U, min(49, L + 2)]
    * otherwise: thin sliver just under U, band = [max(0, U - 1), U]

    Consecutive bands always share at least one offset, so a blade is
    edge-connected along its length and anchored to the platform at t = 0.
    """
    if len(base_alleles) != SEGMENT_COUNT:
        raise ValueError(f"expected {SEGMENT_COUNT} alleles, got {len(base_alleles)}")
    for a in base_alleles:
        if not BASE_ALLELE_MIN <= a <= BASE_ALLELE_MAX:
            raise ValueError(f"allele {a} outside [{BASE_ALLELE_MIN}, {BASE_ALLELE_MAX}]")
    bands: list[BladeBand] = [BladeBand(0, 0, int(base_alleles[0]))]
    for i in range(1, SEGMENT_COUNT):
        u = int(base_alleles[i])
        prev = bands[-1]
        if u >= prev.upper:
            band = BladeBand(i, max(0, prev.upper - 2), u)
        elif u <= prev.lower:
            band = BladeBand(i, u, min(MAX_TRANSVERSE, prev.lower + 2))
        else:
            band = BladeBand(i, max(0, u - 1), u)
        bands.append(band)
    return bands


def _rotate_quarter(mask: np.ndarray) -> np.ndarray:
    # Quarter turn (x, y) -> (y, 99 - x); equivalently new[i, j] = old[99-j, i].
    return np.rot90(mask, 3)


def build_layer(base_alleles: Sequence[int]) -> np.ndarray:
    """Draw one layer: platform ring plus four rotationally symmetric blades.

    Returns a read-only (100, 100) boolean array indexed [x, y].
    """
    ring = np.zeros((GRID_SIZE, GRID_SIZE), dtype=bool)
    ring[PLATFORM_LO : PLATFORM_HI + 1, PLATFORM_LO] = True
    ring[PLATFORM_LO : PLATFORM_HI + 1, PLATFORM_HI] = True
    ring[PLATFORM_LO, PLATFORM_LO : PLATFORM_HI + 1] = True
    ring[PLATFORM_HI, PLATFORM_LO : PLATFORM_HI + 1] = True

    blade = np.zeros((GRID_SIZE, GRID_SIZE), dtype=bool)
    for band in compute_blade_bands(base_alleles):
        start, stop = segment_span(band.segment)
        blade[
            BLADE_ROOT_X + start : BLADE_ROOT_X + stop,
            CENTERLINE_Y + band.lower : CENTERLINE_Y + band.upper + 1,
        ] = True

    layer = ring | blade
    for _ in range(BLADE_COUNT - 1):
        blade = _rotate_quarter(blade)
        layer |= blade
    layer.setflags(write=False)
    return layer


def z_section_bounds() -> list[tuple[int, int]]:
    """Half-open z ranges of the 6 vertical sections (16,17,17,16,17,17 slices)."""
    edges = [GRID_SIZE * j // Z_SECTION_COUNT for j in range(Z_SECTION_COUNT + 1)]
    return list(zip(edges[:-1], edges[1:]))


def section_alleles(genome: Genome) -> list[tuple[int, ...]]:
    """Effective base alleles of each vertical section.

    Section 0 uses the genome's base alleles unchanged; section j adds
    z-allele j to every allele of section j-1 and clamps to [1, 42], so the
    warp accumulates up the design.
    """
    if not genome.z_mode:
        return [genome.base]
    sections = [genome.base]
    for v in genome.z:
        sections.append(
            tuple(
                min(BASE_ALLELE_MAX, max(BASE_ALLELE_MIN, a + v))
                for a in sections[-1]
            )
        )
    return sections


def build_phenotype(genome: Genome) -> VoxelGrid:
    """Expand a genome to its full voxel grid.

    Without z-alleles the single layer fills all 100 slices; with them, each
    of the 6 sections is drawn from its own allele vector.
    """
    if not genome.z_mode:
        layer = build_layer(genome.base)
        occ = np.repeat(layer[:, :, None], GRID_SIZE, axis=2)
        return VoxelGrid(occ)
    occ = np.zeros((GRID_SIZE, GRID_SIZE, GRID_SIZE), dtype=bool)
    for (z_lo, z_hi), alleles in zip(z_section_bounds(), section_alleles(genome)):
        occ[:, :, z_lo:z_hi] = build_layer(alleles)[:, :, None]
    return VoxelGrid(occ)


def layer_to_pbm(layer: np.ndarray) -> bytes:
    """Serialize one layer as a plain PBM image (debugging aid).

    Rows run along y so the image reads like a top view; '1' marks an
    enabled cell.
    """
    if layer.shape != (GRID_SIZE, GRID_SIZE):
        raise ValueError("expected a full layer")
    lines = [b"P1", f"{GRID_SIZE} {GRID_SIZE}".encode()]
    for y in range(GRID_SIZE - 1, -1, -1):
        lines.append(" ".join("1" if layer[x, y] else "0" for x in range(GRID_SIZE)).encode())
    return b"\n".join(lines) + b"\n"
