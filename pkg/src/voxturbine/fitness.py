"""Fitness oracles.

Three interchangeable sources of real fitness:

* :class:`TargetMatchOracle` scores the fraction of grid cells matching a
  target shape (the reproduction experiment's exact, computed fitness).
* :class:`ProxyTipSpeedOracle` is a deterministic synthetic stand-in for a
  physical tip-speed measurement. It has no aerodynamic meaning; it exists so
  measurement-driven campaign plumbing can be exercised automatically.
* :class:`ManualMeasurementOracle` queues measurement requests for a human
  operator and blocks the campaign until they are resolved.

Every oracle exposes ``kind``, ``evaluation_count``, and ``evaluate_many``;
the count increments once per completed evaluation.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Iterable, Optional, Protocol

import numpy as np

from .genome import Genome, genome_hash
from .morphology import GRID_SIZE, VoxelGrid, build_layer, build_phenotype


class FitnessOracle(Protocol):
    kind: str
    evaluation_count: int

    def evaluate_many(self, genomes: list[Genome]) -> list[float]: ...


class MeasurementConflict(Exception):
    """A measurement request was resolved twice."""


class CampaignAborted(Exception):
    """The campaign was shut down while waiting on measurements."""


def match_fraction(a: VoxelGrid, b: VoxelGrid) -> float:
    """Fraction of cells (filled and empty alike) with equal occupancy."""
    if a.shape != b.shape:
        raise ValueError(f"grid shapes differ: {a.shape} vs {b.shape}")
    matching = int(np.count_nonzero(a.occupancy == b.occupancy))
    return matching / a.occupancy.size


def target_fitness(genome: Genome, target: VoxelGrid) -> float:
    """Match fraction between a genome's phenotype and a target grid.

    When both sides are z-uniform every slice contributes identically, so the
    fraction is computed from a single layer; the result is bit-identical to
    the full-grid computation because the counts scale by exactly 100.
    """
    if not genome.z_mode and target.is_z_uniform:
        layer = build_layer(genome.base)
        matching = int(np.count_nonzero(layer == target.layer(0)))
        return (matching * GRID_SIZE) / target.occupancy.size
    return match_fraction(build_phenotype(genome), target)


class TargetMatchOracle:
    """Scores candidates against a fixed target phenotype."""

    kind = "target"

    def __init__(self, target: Genome | VoxelGrid):
        if isinstance(target, Genome):
            self.target_genome: Optional[Genome] = target
            self._grid = build_phenotype(target)
        else:
            self.target_genome = None
            self._grid = target
        self.evaluation_count = 0

    @property
    def target_grid(self) -> VoxelGrid:
        return self._grid

    def evaluate_many(self, genomes: list[Genome]) -> list[float]:
        values = [target_fitness(g, self._grid) for g in genomes]
        self.evaluation_count += len(values)
        return values


class ProxyTipSpeedOracle:
    """Synthetic rpm-like score: 4 * sum((i+1) * base_i) + sum(|z_j|).

    Purely a fixed formula over the genome; documented as synthetic and used
    only to drive automated end-to-end tests of measurement campaigns.
    """

    kind = "proxy"

    def __init__(self) -> None:
        self.evaluation_count = 0

    @staticmethod
    def score(genome: Genome) -> float:
        base = 4.0 * sum((i + 1) * a for i, a in enumerate(genome.base))
        z = float(sum(abs(v) for v in genome.z)) if genome.z_mode else 0.0
        return base + z

    def evaluate_many(self, genomes: list[Genome]) -> list[float]:
        values = [self.score(g) for g in genomes]
        self.evaluation_count += len(values)
        return values


@dataclass(frozen=True)
class MeasurementRequest:
    """Snapshot of one measurement request."""

    request_id: str
    genome: Genome
    genome_hash: str
    status: str  # "pending" | "resolved"
    rpm: Optional[float] = None


class _Entry:
    __slots__ = ("request_id", "genome", "genome_hash", "rpm")

    def __init__(self, request_id: str, genome: Genome):
        self.request_id = request_id
        self.genome = genome
        self.genome_hash = genome_hash(genome)
        self.rpm: Optional[float] = None

    def snapshot(self) -> MeasurementRequest:
        status = "pending" if self.rpm is None else "resolved"
        return MeasurementRequest(
            self.request_id, self.genome, self.genome_hash, status, self.rpm
        )


class ManualMeasurementOracle:
    """Bridges a blocking campaign thread and asynchronous human measurements.

    ``evaluate_many`` enqueues one request per genome (duplicates get distinct
    ids; re-measurement is legitimate) and blocks until every request in the
    batch is resolved. ``resolve`` may be called from any thread. Request ids
    are drawn from a per-oracle counter so a replayed campaign re-issues
    identical ids and recorded resolutions can be applied by id (via
    ``preload_resolutions``).
    """

    kind = "manual"

    def __init__(self, on_requests=None):
        self._cond = threading.Condition()
        self._entries: dict[str, _Entry] = {}
        self._order: list[str] = []
        self._next_id = 1
        self._preloaded: dict[str, float] = {}
        self._aborted = False
        self.evaluation_count = 0
        self._on_requests = on_requests

    def preload_resolutions(self, resolutions: dict[str, float]) -> None:
        """Stage known (requestId -> rpm) outcomes for requests not yet issued."""
        with self._cond:
            self._preloaded.update(resolutions)

    def request_measurement(self, genome: Genome) -> MeasurementRequest:
        """Enqueue a single request without blocking (manual/administrative use)."""
        with self._cond:
            entry = self._new_entry(genome)
            snapshot = entry.snapshot()
        if self._on_requests is not None and snapshot.status == "pending":
            self._on_requests([snapshot])
        return snapshot

    def _new_entry(self, genome: Genome) -> _Entry:
        entry = _Entry(f"req-{self._next_id:06d}", genome)
        self._next_id += 1
        self._entries[entry.request_id] = entry
        self._order.append(entry.request_id)
        preloaded = self._preloaded.pop(entry.request_id, None)
        if preloaded is not None:
            entry.rpm = preloaded
        return entry

    def evaluate_many(self, genomes: list[Genome]) -> list[float]:
        with self._cond:
            if self._aborted:
                raise CampaignAborted()
            batch = [self._new_entry(g) for g in genomes]
            fresh = [e.snapshot() for e in batch if e.rpm is None]
        if self._on_requests is not None and fresh:
            self._on_requests(fresh)
        with self._cond:
            while any(e.rpm is None for e in batch):
                if self._aborted:
                    raise CampaignAborted()
                self._cond.wait()
            self.evaluation_count += len(batch)
            return [float(e.rpm) for e in batch]

    def pending(self) -> list[MeasurementRequest]:
        with self._cond:
            return [
                self._entries[rid].snapshot()
                for rid in self._order
                if self._entries[rid].rpm is None
            ]

    def get(self, request_id: str) -> MeasurementRequest:
        with self._cond:
            return self._entries[request_id].snapshot()

    def resolve(self, request_id: str, rpm: float) -> MeasurementRequest:
        """Record a measurement; wakes the campaign when its batch completes."""
        rpm = float(rpm)
        if rpm < 0:
            raise ValueError(f"rpm must be >= 0, got {rpm}")
        with self._cond:
            entry = self._entries.get(request_id)
            if entry is None:
                raise KeyError(request_id)
            if entry.rpm is not None:
                raise MeasurementConflict(request_id)
            entry.rpm = rpm
            self._cond.notify_all()
            return entry.snapshot()

    def abort(self) -> None:
        """Wake any blocked campaign thread with :class:`CampaignAborted`."""
        with self._cond:
            self._aborted = True
            self._cond.notify_all()


def make_oracle(kind: str, target: Optional[Genome] = None) -> FitnessOracle:
    """Construct a computed oracle by kind; manual oracles are built directly."""
    if kind == "target":
        if target is None:
            raise ValueError("target oracle requires a target genome")
        return TargetMatchOracle(target)
    if kind == "proxy":
        return ProxyTipSpeedOracle()
    if kind == "manual":
        return ManualMeasurementOracle()
    raise ValueError(f"unknown oracle kind: {kind!r}")
