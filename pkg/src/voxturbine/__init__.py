"""Surrogate-assisted evolutionary design of voxel-encoded rotor prototypes.

Pipeline: integer genome -> voxel phenotype -> printable STL, driven by a
steady-state evolutionary campaign in which a small neural network stands in
for most real fitness measurements.
"""

from .evolver import (
    Campaign,
    CampaignConfig,
    Individual,
    MODE_GA,
    MODE_SURROGATE,
    run_campaign,
)
from .fitness import (
    CampaignAborted,
    ManualMeasurementOracle,
    MeasurementConflict,
    ProxyTipSpeedOracle,
    TargetMatchOracle,
    make_oracle,
)
from .genome import Genome, MutationConfig, genome_hash, mutate, random_genome
from .mesh import TriangleMesh, laplacian_smooth, voxels_to_mesh, write_stl
from .morphology import VoxelGrid, build_layer, build_phenotype, compute_blade_bands
from .stats import StatsSummary, WelchResult, summarize, welch_t_test
from .surrogate import MLPSurrogate

__all__ = [
    "Campaign",
    "CampaignAborted",
    "CampaignConfig",
    "Genome",
    "Individual",
    "MLPSurrogate",
    "MODE_GA",
    "MODE_SURROGATE",
    "ManualMeasurementOracle",
    "MeasurementConflict",
    "MutationConfig",
    "ProxyTipSpeedOracle",
    "StatsSummary",
    "TargetMatchOracle",
    "TriangleMesh",
    "VoxelGrid",
    "WelchResult",
    "build_layer",
    "build_phenotype",
    "compute_blade_bands",
    "genome_hash",
    "laplacian_smooth",
    "make_oracle",
    "mutate",
    "random_genome",
    "run_campaign",
    "summarize",
    "voxels_to_mesh",
    "welch_t_test",
    "write_stl",
]

__version__ = "0.1.0"
