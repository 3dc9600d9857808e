"""Integer genome encoding for voxel rotor designs.

A genome is 10 base alleles in [1, 42], one per blade segment, optionally
extended by 5 z-alleles in [-42, 42] that warp the design along the vertical
axis. Genomes are immutable; every operator returns a new instance.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

BASE_ALLELE_COUNT = 10
Z_ALLELE_COUNT = 5
BASE_ALLELE_MIN = 1
BASE_ALLELE_MAX = 42
Z_ALLELE_MIN = -42
Z_ALLELE_MAX = 42


@dataclass(frozen=True)
class MutationConfig:
    """Per-allele mutation settings.

    Each allele mutates independently with probability ``rate``; a mutation
    adds a uniform integer step from [-max_step, max_step] (zero included)
    and clamps to the allele's bounds.
    """

    rate: float = 0.25
    max_step: int = 10

    def __post_init__(self) -> None:
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError(f"mutation rate must be in [0, 1], got {self.rate}")
        if self.max_step < 1:
            raise ValueError(f"max_step must be >= 1, got {self.max_step}")


@dataclass(frozen=True)
class Genome:
    """Immutable design genome: base alleles plus optional z-alleles."""

    base: tuple[int, ...]
    z: Optional[tuple[int, ...]] = None

    def __post_init__(self) -> None:
        # Normalize sequences to tuples of python ints so instances hash and
        # serialize identically regardless of the numeric types passed in.
        object.__setattr__(self, "base", tuple(int(a) for a in self.base))
        if self.z is not None:
            object.__setattr__(self, "z", tuple(int(v) for v in self.z))
        if len(self.base) != BASE_ALLELE_COUNT:
            raise ValueError(
                f"expected {BASE_ALLELE_COUNT} base alleles, got {len(self.base)}"
            )
        for a in self.base:
            if not BASE_ALLELE_MIN <= a <= BASE_ALLELE_MAX:
                raise ValueError(
                    f"base allele {a} outside [{BASE_ALLELE_MIN}, {BASE_ALLELE_MAX}]"
                )
        if self.z is not None:
            if len(self.z) != Z_ALLELE_COUNT:
                raise ValueError(
                    f"expected {Z_ALLELE_COUNT} z-alleles, got {len(self.z)}"
                )
            for v in self.z:
                if not Z_ALLELE_MIN <= v <= Z_ALLELE_MAX:
                    raise ValueError(
                        f"z-allele {v} outside [{Z_ALLELE_MIN}, {Z_ALLELE_MAX}]"
                    )

    @property
    def z_mode(self) -> bool:
        return self.z is not None

    def alleles(self) -> tuple[int, ...]:
        """All alleles in canonical order: base first, then z."""
        return self.base if self.z is None else self.base + self.z


def random_genome(rng: np.random.Generator, z_mode: bool = False) -> Genome:
    """Draw a genome with every allele uniform over its full range."""
    base = tuple(int(a) for a in rng.integers(BASE_ALLELE_MIN, BASE_ALLELE_MAX + 1, size=BASE_ALLELE_COUNT))
    z = None
    if z_mode:
        z = tuple(int(v) for v in rng.integers(Z_ALLELE_MIN, Z_ALLELE_MAX + 1, size=Z_ALLELE_COUNT))
    return Genome(base, z)


def _bounds(genome: Genome) -> tuple[np.ndarray, np.ndarray]:
    n = len(genome.alleles())
    lo = np.full(n, BASE_ALLELE_MIN)
    hi = np.full(n, BASE_ALLELE_MAX)
    if genome.z_mode:
        lo[BASE_ALLELE_COUNT:] = Z_ALLELE_MIN
        hi[BASE_ALLELE_COUNT:] = Z_ALLELE_MAX
    return lo, hi


def mutate(genome: Genome, config: MutationConfig, rng: np.random.Generator) -> Genome:
    """Return a mutated copy of ``genome``; the input is never modified.

    One coin and one step are drawn per allele position (in canonical order)
    so that the random stream advances the same way regardless of which coins
    land, keeping campaigns reproducible.
    """
    values = np.asarray(genome.alleles(), dtype=np.int64)
    lo, hi = _bounds(genome)
    coins = rng.random(values.size)
    steps = rng.integers(-config.max_step, config.max_step + 1, size=values.size)
    mutated = np.where(coins < config.rate, np.clip(values + steps, lo, hi), values)
    base = tuple(int(a) for a in mutated[:BASE_ALLELE_COUNT])
    z = tuple(int(v) for v in mutated[BASE_ALLELE_COUNT:]) if genome.z_mode else None
    return Genome(base, z)


def scale_for_model(genome: Genome) -> np.ndarray:
    """Map alleles to the surrogate's input range.

    Base alleles map affinely from [1, 42] onto [-1, 1]; z-alleles divide by
    42, landing in [-1, 1] as well. Output length is 10, or 15 in z-mode.
    """
    base = np.asarray(genome.base, dtype=np.float64)
    scaled = 2.0 * (base - BASE_ALLELE_MIN) / (BASE_ALLELE_MAX - BASE_ALLELE_MIN) - 1.0
    if not genome.z_mode:
        return scaled
    z = np.asarray(genome.z, dtype=np.float64) / Z_ALLELE_MAX
    return np.concatenate([scaled, z])


def canonical_bytes(genome: Genome) -> bytes:
    """Canonical byte form: each allele as a signed 16-bit little-endian int."""
    alleles = genome.alleles()
    return struct.pack(f"<{len(alleles)}h", *alleles)


def genome_hash(genome: Genome) -> str:
    """Hex digest identifying the genome; equal genomes hash equal."""
    return hashlib.sha256(canonical_bytes(genome)).hexdigest()
