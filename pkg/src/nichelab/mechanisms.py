"""One-generation survivor-selection steps for the (mu+1) EA.

These are the reference implementations: readable, pure numpy/Python, and
open to stubbing (``mutate`` and ``sample_pool`` hooks). Long runs go through
:mod:`nichelab._kernels`, which consumes the random stream in exactly the same
order so that both paths produce identical trajectories from the same seed.

Per-step draw order, shared with the kernels:

1. parent index, ``rng.integers(0, mu)``
2. mutation gaps, see :func:`nichelab.core.mutation_positions`
3. mechanism specific: ``rng.random()`` for probabilistic crowding; ``w`` pool
   indices and, on a distance tie, one tie-break index for RTS; a tie-break
   index among minimum-fitness members for the plain EA when it accepts.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .core import Genome, Population, hamming_distance, phenotypic_distance, standard_bit_mutation

Mutation = Callable[[Genome, np.random.Generator], Genome]
PoolSampler = Callable[[Population, int, int, np.random.Generator], Sequence[int]]


class Kind(enum.IntEnum):
    PROBABILISTIC_CROWDING = 0
    RESTRICTED_TOURNAMENT = 1
    DETERMINISTIC_CROWDING = 2
    PLAIN_REPLACE_WORST = 3


class Distance(enum.IntEnum):
    GENOTYPIC = 0
    PHENOTYPIC = 1


KIND_NAMES = {
    "pc": Kind.PROBABILISTIC_CROWDING,
    "rts": Kind.RESTRICTED_TOURNAMENT,
    "dc": Kind.DETERMINISTIC_CROWDING,
    "plain": Kind.PLAIN_REPLACE_WORST,
}
DISTANCE_NAMES = {"geno": Distance.GENOTYPIC, "pheno": Distance.PHENOTYPIC}


@dataclass(frozen=True)
class MechanismSpec:
    kind: Kind
    w: Optional[int] = None
    distance: Optional[Distance] = None

    def __post_init__(self):
        if self.kind == Kind.RESTRICTED_TOURNAMENT:
            if self.w is None or self.w < 1:
                raise ValueError("restricted tournament selection needs a window size w >= 1")
            if self.distance is None:
                object.__setattr__(self, "distance", Distance.GENOTYPIC)
        elif self.w is not None or self.distance is not None:
            raise ValueError(f"w and distance only apply to restricted tournament selection, not {self.kind.name}")

    @classmethod
    def pc(cls) -> MechanismSpec:
        return cls(Kind.PROBABILISTIC_CROWDING)

    @classmethod
    def dc(cls) -> MechanismSpec:
        return cls(Kind.DETERMINISTIC_CROWDING)

    @classmethod
    def plain(cls) -> MechanismSpec:
        return cls(Kind.PLAIN_REPLACE_WORST)

    @classmethod
    def rts(cls, w: int, distance: Distance | str = Distance.GENOTYPIC) -> MechanismSpec:
        if isinstance(distance, str):
            distance = DISTANCE_NAMES[distance]
        return cls(Kind.RESTRICTED_TOURNAMENT, w, distance)

    @classmethod
    def parse(cls, name: str, w: Optional[int] = None, distance: Optional[str] = None) -> MechanismSpec:
        kind = KIND_NAMES[name]
        dist = DISTANCE_NAMES[distance] if distance is not None else None
        return cls(kind, w, dist)

    @property
    def short_name(self) -> str:
        return {v: k for k, v in KIND_NAMES.items()}[self.kind]

    @property
    def label(self) -> str:
        if self.kind != Kind.RESTRICTED_TOURNAMENT:
            return self.short_name
        dist = {v: k for k, v in DISTANCE_NAMES.items()}[self.distance]
        return f"rts(w={self.w},{dist})"

    def to_dict(self) -> dict:
        d = {"kind": self.short_name}
        if self.kind == Kind.RESTRICTED_TOURNAMENT:
            d["w"] = self.w
            d["distance"] = {v: k for k, v in DISTANCE_NAMES.items()}[self.distance]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> MechanismSpec:
        return cls.parse(d["kind"], d.get("w"), d.get("distance"))


@dataclass
class StepOutcome:
    next_population: Population
    offspring: Genome
    offspring_accepted: bool
    replaced_index: Optional[int]
    parent_index: int


def _outcome(p: Population, parent: int, y: Genome, replaced: Optional[int]) -> StepOutcome:
    if replaced is None:
        return StepOutcome(p, y, False, None, parent)
    return StepOutcome(p.replace(replaced, y), y, True, replaced, parent)


def _uniform_choice(candidates: Sequence[int], rng: np.random.Generator) -> int:
    if len(candidates) == 1:
        return candidates[0]
    return candidates[int(rng.integers(0, len(candidates)))]


def acceptance_probability(fx: float, fy: float) -> float:
    """Chance that the offspring survives under probabilistic crowding."""
    total = fx + fy
    return 0.5 if total == 0 else fy / total


def probabilistic_crowding_step(p: Population, rng: np.random.Generator,
                                mutate: Mutation = standard_bit_mutation) -> StepOutcome:
    """Offspring replaces its parent with probability f(y) / (f(x) + f(y))."""
    i = int(rng.integers(0, p.mu))
    y = mutate(p[i], rng)
    fy = p.f(y)
    r = rng.random()
    accepted = r < acceptance_probability(int(p.fitness[i]), fy)
    return _outcome(p, i, y, i if accepted else None)


def sample_pool_uniform(p: Population, parent: int, w: int, rng: np.random.Generator) -> list[int]:
    """``w`` population indices drawn uniformly with replacement."""
    return [int(rng.integers(0, p.mu)) for _ in range(w)]


def rts_step(p: Population, spec: MechanismSpec, rng: np.random.Generator,
             mutate: Mutation = standard_bit_mutation,
             sample_pool: PoolSampler = sample_pool_uniform) -> StepOutcome:
    """Restricted tournament selection without crossover.

    The offspring competes with the pool member closest to it (ties uniform over
    pool positions, so duplicates weigh once per occurrence) and replaces that
    member's population slot if it is at least as fit.
    """
    if spec.kind != Kind.RESTRICTED_TOURNAMENT:
        raise ValueError("rts_step needs a restricted tournament spec")
    i = int(rng.integers(0, p.mu))
    y = mutate(p[i], rng)
    fy = p.f(y)
    pool = list(sample_pool(p, i, spec.w, rng))
    dist = hamming_distance if spec.distance == Distance.GENOTYPIC else phenotypic_distance
    d = [dist(y, p[j]) for j in pool]
    dmin = min(d)
    z = pool[_uniform_choice([k for k, dk in enumerate(d) if dk == dmin], rng)]
    return _outcome(p, i, y, z if fy >= p.fitness[z] else None)


def deterministic_crowding_step(p: Population, rng: np.random.Generator,
                                mutate: Mutation = standard_bit_mutation) -> StepOutcome:
    i = int(rng.integers(0, p.mu))
    y = mutate(p[i], rng)
    return _outcome(p, i, y, i if p.f(y) >= p.fitness[i] else None)


def plain_replace_worst_step(p: Population, rng: np.random.Generator,
                             mutate: Mutation = standard_bit_mutation) -> StepOutcome:
    i = int(rng.integers(0, p.mu))
    y = mutate(p[i], rng)
    worst = int(p.fitness.min())
    if p.f(y) < worst:
        return _outcome(p, i, y, None)
    j = _uniform_choice([int(k) for k in np.flatnonzero(p.fitness == worst)], rng)
    return _outcome(p, i, y, j)


def step(p: Population, spec: MechanismSpec, rng: np.random.Generator, **hooks) -> StepOutcome:
    """Dispatch one generation of the configured mechanism."""
    if spec.kind == Kind.PROBABILISTIC_CROWDING:
        return probabilistic_crowding_step(p, rng, **hooks)
    if spec.kind == Kind.RESTRICTED_TOURNAMENT:
        return rts_step(p, spec, rng, **hooks)
    if spec.kind == Kind.DETERMINISTIC_CROWDING:
        return deterministic_crowding_step(p, rng, **hooks)
    return plain_replace_worst_step(p, rng, **hooks)
