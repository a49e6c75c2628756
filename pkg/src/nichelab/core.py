"""Bitstring genomes, OneMax/TwoMax, distances, mutation and seeding.

Genomes are 1-D ``numpy.uint8`` arrays of 0/1 values. A population is a
``(mu, n)`` matrix of such rows together with cached ones-counts and fitness
values; since both supported fitness functions depend on the number of ones
only, the ones-count is the cached quantity everything else derives from.

Random streams are plain :class:`numpy.random.Generator` objects (PCG64).
Per-run substreams come from :func:`substream`, which feeds
``(master_seed, run_index)`` through :class:`numpy.random.SeedSequence`
(entropy=master_seed, spawn_key=(run_index,)); the SeedSequence hash is the
fixed, documented derivation.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

Genome = np.ndarray


class Fitness(enum.IntEnum):
    """Fitness functions of unitation. The integer value is the kernel code."""

    ONEMAX = 0
    TWOMAX = 1

    def from_ones(self, ones, n: int):
        """Fitness of a genome (or array of genomes) with ``ones`` 1-bits."""
        if self is Fitness.ONEMAX:
            return ones
        return np.maximum(ones, n - ones) if isinstance(ones, np.ndarray) else max(ones, n - ones)

    def __call__(self, g: Genome) -> int:
        return int(self.from_ones(ones_count(g), len(g)))

    @classmethod
    def parse(cls, name: str | Fitness) -> Fitness:
        if isinstance(name, Fitness):
            return name
        return cls[name.upper()]


def ones_count(g: Genome) -> int:
    return int(np.count_nonzero(g))


def onemax(g: Genome) -> int:
    return ones_count(g)


def twomax(g: Genome) -> int:
    k = ones_count(g)
    return max(k, len(g) - k)


def complement(g: Genome) -> Genome:
    return (1 - g).astype(np.uint8)


def _check_lengths(a: Genome, b: Genome) -> None:
    if len(a) != len(b):
        raise ValueError(f"genome lengths differ: {len(a)} != {len(b)}")


def hamming_distance(a: Genome, b: Genome) -> int:
    _check_lengths(a, b)
    return int(np.count_nonzero(a != b))


def phenotypic_distance(a: Genome, b: Genome) -> int:
    """Absolute difference of ones-counts; meaningful for functions of unitation only."""
    _check_lengths(a, b)
    return abs(ones_count(a) - ones_count(b))


def genome_from_string(s: str) -> Genome:
    return np.fromiter((int(c) for c in s), dtype=np.uint8, count=len(s))


def genome_to_string(g: Genome) -> str:
    return "".join("1" if b else "0" for b in g)


def substream(master_seed: int, run_index: int) -> np.random.Generator:
    """Independent generator for one run of an experiment."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(run_index),))
    return np.random.Generator(np.random.PCG64(ss))


def make_rng(seed: int | np.random.Generator | None = None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def uniform_random_genome(n: int, rng: np.random.Generator) -> Genome:
    if n < 1:
        raise ValueError("n must be positive")
    return rng.integers(0, 2, size=n, dtype=np.uint8)


def mutation_positions(n: int, rng: np.random.Generator) -> list[int]:
    """Positions flipped by standard bit mutation with rate 1/n, ascending.

    Gaps between flipped positions are drawn as geometric variables by
    inversion, which gives exactly the same law as n independent Bernoulli(1/n)
    trials at O(#flips) cost. The numba kernels draw in the same order, so both
    paths consume a generator identically.
    """
    if n == 1:
        return [0]
    log_q = math.log(1.0 - 1.0 / n)
    flips = []
    pos = -1
    while True:
        u = rng.random()
        skip = math.floor(math.log(1.0 - u) / log_q)
        if pos + 1 + skip >= n:
            return flips
        pos += 1 + skip
        flips.append(pos)


def standard_bit_mutation(g: Genome, rng: np.random.Generator) -> Genome:
    """Copy of ``g`` with each bit flipped independently with probability 1/n."""
    if len(g) < 1:
        raise ValueError("n must be positive")
    y = g.copy()
    for p in mutation_positions(len(g), rng):
        y[p] ^= 1
    return y


@dataclass
class Population:
    """Exactly ``mu`` genomes with cached ones-counts and fitness values.

    Treated as an immutable value by the step functions: a step returns a new
    Population instead of editing this one.
    """

    bits: np.ndarray
    ones: np.ndarray
    fitness: np.ndarray
    f: Fitness

    @classmethod
    def from_bits(cls, bits: np.ndarray, f: Fitness | str = Fitness.TWOMAX) -> Population:
        f = Fitness.parse(f)
        bits = np.ascontiguousarray(bits, dtype=np.uint8)
        if bits.ndim != 2 or bits.shape[0] < 1 or bits.shape[1] < 1:
            raise ValueError("population needs shape (mu, n) with mu, n >= 1")
        ones = bits.sum(axis=1, dtype=np.int64)
        return cls(bits, ones, np.asarray(f.from_ones(ones, bits.shape[1]), dtype=np.int64), f)

    @classmethod
    def from_strings(cls, rows: list[str], f: Fitness | str = Fitness.TWOMAX) -> Population:
        return cls.from_bits(np.array([genome_from_string(r) for r in rows]), f)

    @classmethod
    def random(cls, mu: int, n: int, rng: np.random.Generator, f: Fitness | str = Fitness.TWOMAX) -> Population:
        if mu < 1 or n < 1:
            raise ValueError("mu and n must be positive")
        return cls.from_bits(rng.integers(0, 2, size=(mu, n), dtype=np.uint8), f)

    @property
    def mu(self) -> int:
        return self.bits.shape[0]

    @property
    def n(self) -> int:
        return self.bits.shape[1]

    def __len__(self) -> int:
        return self.mu

    def __getitem__(self, i: int) -> Genome:
        return self.bits[i]

    def replace(self, index: int, g: Genome) -> Population:
        bits = self.bits.copy()
        bits[index] = g
        ones = self.ones.copy()
        ones[index] = ones_count(g)
        fitness = self.fitness.copy()
        fitness[index] = self.f.from_ones(int(ones[index]), self.n)
        return Population(bits, ones, fitness, self.f)

    def has_zero_optimum(self) -> bool:
        return bool(np.any(self.ones == 0))

    def has_one_optimum(self) -> bool:
        return bool(np.any(self.ones == self.n))

    def best_fitness(self) -> int:
        return int(self.fitness.max())

    def check(self) -> None:
        """Assert the cached values agree with the genomes."""
        assert np.array_equal(self.ones, self.bits.sum(axis=1))
        assert np.array_equal(self.fitness, self.f.from_ones(self.ones, self.n))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Population):
            return NotImplemented
        return self.f == other.f and np.array_equal(self.bits, other.bits)
