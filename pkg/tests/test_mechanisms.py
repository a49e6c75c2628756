import itertools
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from nichelab import _kernels
from nichelab.core import Population, genome_from_string as G, hamming_distance, phenotypic_distance
from nichelab.mechanisms import (Distance, Kind, MechanismSpec, deterministic_crowding_step,
                                 plain_replace_worst_step, probabilistic_crowding_step, rts_step, step)


def always(y):
    return lambda x, rng: y.copy()


def rts_outcome_distribution(pop, y, w, distance):
    """Exact law of the replaced index (None = rejected) by enumerating every pool."""
    dist = hamming_distance if distance == Distance.GENOTYPIC else phenotypic_distance
    fy = pop.f(y)
    law = Counter()
    for pool in itertools.product(range(pop.mu), repeat=w):
        d = [dist(y, pop[j]) for j in pool]
        ties = [pool[k] for k, dk in enumerate(d) if dk == min(d)]
        for z in ties:
            p = Fraction(1, pop.mu ** w * len(ties))
            law[z if fy >= pop.fitness[z] else None] += p
    return law


def test_spec_validation():
    with pytest.raises(ValueError):
        MechanismSpec(Kind.RESTRICTED_TOURNAMENT)
    with pytest.raises(ValueError):
        MechanismSpec.rts(0)
    with pytest.raises(ValueError):
        MechanismSpec(Kind.DETERMINISTIC_CROWDING, w=3)
    assert MechanismSpec.parse("rts", 4).distance == Distance.GENOTYPIC
    assert MechanismSpec.from_dict(MechanismSpec.rts(4, "pheno").to_dict()) == MechanismSpec.rts(4, "pheno")


def test_pc_equal_fitness_accepts_half(rng):
    p = Population.from_strings(["0011"])
    acc = [probabilistic_crowding_step(p, rng, mutate=always(G("0101"))).offspring_accepted for _ in range(40000)]
    assert abs(np.mean(acc) - 0.5) < 0.01


def test_pc_acceptance_ratio(rng):
    # TwoMax n=100, f(x)=50, f(y)=51: 51/101
    expected = 51 / 101
    x = np.zeros(100, dtype=np.uint8)
    x[:50] = 1
    y = x.copy()
    y[50] = 1
    p = Population.from_bits(x[None, :])
    acc = [probabilistic_crowding_step(p, rng, mutate=always(y)).offspring_accepted for _ in range(200_000)]
    assert abs(np.mean(acc) - expected) < 0.005
    krng = np.random.default_rng(2)
    hits = sum(_kernels.pc_accept(50, 51, krng) for _ in range(10**6))
    assert abs(hits / 10**6 - expected) < 0.005


def test_pc_zero_fitness_degenerate_case(rng):
    p = Population.from_strings(["000"], "onemax")
    acc = [probabilistic_crowding_step(p, rng, mutate=always(G("000"))).offspring_accepted for _ in range(20000)]
    assert abs(np.mean(acc) - 0.5) < 0.015


def test_pc_mu1_is_fitness_proportional_one_plus_one():
    """With mu = 1 the trajectory equals a standalone (1+1) EA with fitness-proportional survival."""
    from nichelab.core import standard_bit_mutation, twomax

    a, b = np.random.default_rng(9), np.random.default_rng(9)
    p = Population.from_bits(a.integers(0, 2, size=(1, 30), dtype=np.uint8))
    x = b.integers(0, 2, size=(1, 30), dtype=np.uint8)[0]
    for _ in range(2000):
        p = probabilistic_crowding_step(p, a).next_population
        y = standard_bit_mutation(x, b)
        if b.random() < twomax(y) / (twomax(x) + twomax(y)):
            x = y
        assert np.array_equal(p[0], x)


@given(st.integers(0, 2**32))
def test_pc_lineages_do_not_interact(seed):
    r = np.random.default_rng(seed)
    p = Population.random(5, 12, r)
    for _ in range(30):
        out = probabilistic_crowding_step(p, r)
        others = [j for j in range(p.mu) if j != out.parent_index]
        assert np.array_equal(out.next_population.bits[others], p.bits[others])
        assert out.replaced_index in (None, out.parent_index)
        p = out.next_population


def test_rts_tournament_against_own_parent(rng):
    p = Population.from_strings(["0011", "1110"])
    out = rts_step(p, MechanismSpec.rts(3), rng, mutate=always(G("0001")),
                   sample_pool=lambda pop, parent, w, r: [parent] * w)
    assert out.offspring_accepted and out.replaced_index == out.parent_index


def test_rts_picks_the_closest_member(rng):
    p = Population.from_strings(["0000", "1111"])
    y = G("0001")
    for _ in range(200):
        out = rts_step(p, MechanismSpec.rts(2), rng, mutate=always(y))
        assert out.replaced_index in (None, 0)


def test_rts_spec_example_never_accepts(rng):
    p = Population.from_strings(["0000", "0000", "1111", "1111"])
    y = G("1110")
    law = rts_outcome_distribution(p, y, 2, Distance.GENOTYPIC)
    assert law == {None: 1}
    for _ in range(500):
        assert not rts_step(p, MechanismSpec.rts(2), rng, mutate=always(y)).offspring_accepted


@pytest.mark.parametrize("distance", [Distance.GENOTYPIC, Distance.PHENOTYPIC])
def test_rts_matches_enumerated_law(distance, rng):
    p = Population.from_strings(["00000", "00011", "11111", "01100", "00011"])
    y = G("00111")
    law = rts_outcome_distribution(p, y, 3, distance)
    trials = 30000
    seen = Counter(rts_step(p, MechanismSpec(Kind.RESTRICTED_TOURNAMENT, 3, distance), rng,
                            mutate=always(y)).replaced_index for _ in range(trials))
    keys = sorted(law, key=lambda k: -1 if k is None else k)
    assert set(seen) <= set(keys)
    expected = np.array([float(law[k]) * trials for k in keys])
    _, pval = stats.chisquare([seen[k] for k in keys], expected)
    assert pval > 1e-3


@given(st.integers(0, 2**32), st.sampled_from(["geno", "pheno"]), st.integers(1, 6))
def test_rts_never_accepts_worse(seed, dist, w):
    r = np.random.default_rng(seed)
    p = Population.random(6, 10, r)
    spec = MechanismSpec.rts(w, dist)
    for _ in range(40):
        out = rts_step(p, spec, r)
        if out.offspring_accepted:
            assert p.f(out.offspring) >= p.fitness[out.replaced_index]
        p = out.next_population


def _one_bit_flip(x, rng):
    y = x.copy()
    y[int(rng.integers(0, len(x)))] ^= 1
    return y


@given(st.integers(0, 2**32), st.sampled_from(["geno", "pheno"]))
def test_rts_branch_bests_hold_when_parent_is_in_pool(seed, dist):
    """Parent always in the pool and offspring one bit away: branch bests never drop."""
    r = np.random.default_rng(seed)
    n = 20
    rows = []
    for j in range(6):
        k = int(r.integers(0, 8)) if j % 2 else int(r.integers(13, n + 1))
        row = np.zeros(n, dtype=np.uint8)
        row[r.permutation(n)[:k]] = 1
        rows.append(row)
    p = Population.from_bits(np.array(rows))

    def with_parent(pop, parent, w, rr):
        return [parent] + [int(rr.integers(0, pop.mu)) for _ in range(w - 1)]

    def branch_bests(pop):
        low = [n - o for o in pop.ones if 2 * o < n]
        high = [o for o in pop.ones if 2 * o > n]
        return max(low), max(high)

    before = branch_bests(p)
    for _ in range(200):
        p = rts_step(p, MechanismSpec.rts(3, dist), r, mutate=_one_bit_flip, sample_pool=with_parent).next_population
        now = branch_bests(p)
        assert now[0] >= before[0] and now[1] >= before[1]
        before = now


def test_dc_ties_favor_offspring(rng):
    p = Population.from_strings(["0011"])
    out = deterministic_crowding_step(p, rng, mutate=always(G("0101")))
    assert out.offspring_accepted and out.replaced_index == 0


def test_dc_rejects_worse(rng):
    p = Population.from_strings(["0001"])
    out = deterministic_crowding_step(p, rng, mutate=always(G("0011")))
    assert not out.offspring_accepted and out.next_population is p


def test_dc_keeps_optimum_unless_fully_flipped(rng):
    p = Population.from_strings(["00000"])
    for y, ok in [("00001", False), ("11111", True), ("00000", True)]:
        assert deterministic_crowding_step(p, rng, mutate=always(G(y))).offspring_accepted is ok


def test_plain_replaces_a_worst_member(rng):
    p = Population.from_strings(["1111100000", "0000011111", "1111111000", "0111111100"], "onemax")
    y = G("1111110000")
    seen = set()
    for _ in range(100):
        out = plain_replace_worst_step(p, rng, mutate=always(y))
        assert out.offspring_accepted and out.replaced_index in (0, 1)
        assert out.next_population.fitness.min() >= 5
        seen.add(out.replaced_index)
    assert seen == {0, 1}


def test_plain_rejects_below_all(rng):
    p = Population.from_strings(["11110", "11100"], "onemax")
    assert not plain_replace_worst_step(p, rng, mutate=always(G("10000"))).offspring_accepted


def test_plain_mu1_is_one_plus_one(rng):
    p = Population.from_strings(["0110"], "onemax")
    assert plain_replace_worst_step(p, rng, mutate=always(G("1010"))).offspring_accepted
    assert not plain_replace_worst_step(p, rng, mutate=always(G("1000"))).offspring_accepted


SPECS = [MechanismSpec.pc(), MechanismSpec.dc(), MechanismSpec.plain(), MechanismSpec.rts(3, "geno"),
         MechanismSpec.rts(2, "pheno")]


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.label)
@given(seed=st.integers(0, 2**32))
def test_step_invariants(spec, seed):
    r = np.random.default_rng(seed)
    p = Population.random(5, 9, r)
    for _ in range(25):
        out = step(p, spec, r)
        q = out.next_population
        q.check()
        assert q.mu == p.mu
        assert out.offspring_accepted == (out.replaced_index is not None)
        assert np.count_nonzero(np.any(q.bits != p.bits, axis=1)) <= 1
        if spec.kind in (Kind.DETERMINISTIC_CROWDING, Kind.PLAIN_REPLACE_WORST):
            assert q.best_fitness() >= p.best_fitness()
        p = q


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.label)
def test_parent_selection_is_uniform(spec):
    r = np.random.default_rng(123)
    p = Population.random(8, 10, r)
    counts = np.zeros(p.mu)
    for _ in range(10**5):
        counts[step(p, spec, r).parent_index] += 1
    _, pval = stats.chisquare(counts)
    assert pval > 1e-3
