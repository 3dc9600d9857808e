"""Genome representation, mutation, scaling, and hashing."""

import hashlib
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voxturbine.genome import (
    BASE_ALLELE_COUNT,
    BASE_ALLELE_MAX,
    BASE_ALLELE_MIN,
    Genome,
    MutationConfig,
    Z_ALLELE_COUNT,
    Z_ALLELE_MAX,
    Z_ALLELE_MIN,
    canonical_bytes,
    genome_hash,
    mutate,
    random_genome,
    scale_for_model,
)

base_alleles = st.tuples(
    *[st.integers(BASE_ALLELE_MIN, BASE_ALLELE_MAX)] * BASE_ALLELE_COUNT
)
z_alleles = st.tuples(*[st.integers(Z_ALLELE_MIN, Z_ALLELE_MAX)] * Z_ALLELE_COUNT)
genomes = st.one_of(
    base_alleles.map(Genome),
    st.tuples(base_alleles, z_alleles).map(lambda t: Genome(t[0], t[1])),
)


class TestGenomeValidation:
    def test_ten_base_alleles_required(self):
        with pytest.raises(ValueError):
            Genome((1, 2, 3))

    def test_base_allele_range_enforced(self):
        with pytest.raises(ValueError):
            Genome((0,) + (1,) * 9)
        with pytest.raises(ValueError):
            Genome((43,) + (1,) * 9)

    def test_z_alleles_optional_and_bounded(self):
        flat = Genome((1,) * 10)
        assert not flat.z_mode
        tall = Genome((1,) * 10, (-42, 0, 42, 1, -1))
        assert tall.z_mode
        with pytest.raises(ValueError):
            Genome((1,) * 10, (0, 0, 0, 0))
        with pytest.raises(ValueError):
            Genome((1,) * 10, (43, 0, 0, 0, 0))

    def test_alleles_concatenation(self):
        g = Genome((5,) * 10, (1, 2, 3, 4, 5))
        assert g.alleles() == (5,) * 10 + (1, 2, 3, 4, 5)


class TestRandomGenome:
    def test_within_bounds(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            g = random_genome(rng)
            assert all(BASE_ALLELE_MIN <= a <= BASE_ALLELE_MAX for a in g.base)
            assert g.z is None
        for _ in range(50):
            g = random_genome(rng, z_mode=True)
            assert all(Z_ALLELE_MIN <= v <= Z_ALLELE_MAX for v in g.z)

    def test_deterministic_given_seed(self):
        a = random_genome(np.random.default_rng(7), z_mode=True)
        b = random_genome(np.random.default_rng(7), z_mode=True)
        assert a == b


class TestMutation:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            MutationConfig(rate=-0.1)
        with pytest.raises(ValueError):
            MutationConfig(rate=1.5)
        with pytest.raises(ValueError):
            MutationConfig(max_step=0)

    @settings(max_examples=50, deadline=None)
    @given(genomes, st.integers(0, 2**32 - 1))
    def test_offspring_stay_in_bounds(self, genome, seed):
        child = mutate(genome, MutationConfig(), np.random.default_rng(seed))
        assert all(BASE_ALLELE_MIN <= a <= BASE_ALLELE_MAX for a in child.base)
        if genome.z_mode:
            assert all(Z_ALLELE_MIN <= v <= Z_ALLELE_MAX for v in child.z)
        else:
            assert child.z is None

    def test_deterministic_given_seed(self):
        g = Genome((5, 10, 15, 20, 25, 30, 35, 40, 2, 7))
        a = mutate(g, MutationConfig(), np.random.default_rng(11))
        b = mutate(g, MutationConfig(), np.random.default_rng(11))
        assert a == b

    def test_changed_allele_fraction_matches_rate(self):
        # Per-allele change probability is 0.25 minus the mass of zero steps
        # and boundary clamps, about 0.232 for uniform random parents.
        rng = np.random.default_rng(42)
        changed = total = 0
        for _ in range(2000):
            parent = random_genome(rng)
            child = mutate(parent, MutationConfig(), rng)
            changed += sum(a != b for a, b in zip(parent.base, child.base))
            total += BASE_ALLELE_COUNT
        assert 0.20 <= changed / total <= 0.25

    def test_rate_zero_is_identity(self):
        g = Genome((5,) * 10, (0, 1, -1, 2, -2))
        assert mutate(g, MutationConfig(rate=0.0), np.random.default_rng(0)) == g

    def test_step_magnitude_bounded(self):
        rng = np.random.default_rng(3)
        g = Genome((21,) * 10)
        for _ in range(500):
            child = mutate(g, MutationConfig(), rng)
            assert all(abs(a - 21) <= 10 for a in child.base)


class TestScaling:
    def test_base_endpoints_and_midpoint(self):
        lo = Genome((1,) * 10)
        hi = Genome((42,) * 10)
        mid = Genome((21,) * 10)
        assert scale_for_model(lo).tolist() == [-1.0] * 10
        assert scale_for_model(hi).tolist() == [1.0] * 10
        assert scale_for_model(mid) == pytest.approx([-1.0 / 41.0] * 10)

    def test_z_scaling(self):
        g = Genome((1,) * 10, (42, -42, 0, 21, -21))
        scaled = scale_for_model(g)
        assert scaled.shape == (15,)
        assert scaled[10:].tolist() == [1.0, -1.0, 0.0, 0.5, -0.5]

    @settings(max_examples=50, deadline=None)
    @given(genomes)
    def test_scaled_values_in_unit_interval(self, genome):
        scaled = scale_for_model(genome)
        assert np.all(scaled >= -1.0) and np.all(scaled <= 1.0)


class TestCanonicalBytesAndHash:
    def test_little_endian_int16_layout(self):
        g = Genome((1, 2, 3, 4, 5, 6, 7, 8, 9, 10))
        assert canonical_bytes(g) == struct.pack("<10h", *range(1, 11))
        tall = Genome((1,) * 10, (-1, -42, 0, 42, 7))
        assert canonical_bytes(tall) == struct.pack("<15h", *([1] * 10 + [-1, -42, 0, 42, 7]))

    def test_hash_is_sha256_of_canonical_bytes(self):
        g = Genome((2, 2, 3, 4, 5, 8, 13, 20, 34, 40))
        assert genome_hash(g) == hashlib.sha256(canonical_bytes(g)).hexdigest()

    @settings(max_examples=30, deadline=None)
    @given(genomes, genomes)
    def test_distinct_genomes_distinct_bytes(self, a, b):
        if a != b:
            assert canonical_bytes(a) != canonical_bytes(b)
        else:
            assert genome_hash(a) == genome_hash(b)
