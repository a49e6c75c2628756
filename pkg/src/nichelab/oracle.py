"""Exact and Monte Carlo checks of the analytical quantities.

Numeric policy for the crowding drift: ``exact=True`` sums exact rationals
(:class:`fractions.Fraction`); the default float path takes binomial terms from
``scipy.stats.binom.pmf`` and sums them with :func:`math.fsum`. The float path
drops terms with more than ``max_flips`` flipped bits (40 by default) and
reports the dropped probability mass, the upper tail of Binomial(n, 1/n).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy import stats

from . import _kernels

DEFAULT_MAX_FLIPS = 40
CONSISTENT = "consistent"
VIOLATED = "violated"


class BoundNotApplicable(ValueError):
    """Parameters fall outside the regime in which a bound was derived."""


@dataclass
class BoundReport:
    name: str
    analytic_value: float
    empirical_value: float
    sample_count: int
    verdict: str
    detail: str = ""

    @property
    def consistent(self) -> bool:
        return self.verdict == CONSISTENT

    def line(self) -> str:
        s = (f"{self.name}: analytic={self.analytic_value:.10g} empirical={self.empirical_value:.10g} "
             f"samples={self.sample_count} -> {self.verdict}")
        return f"{s} ({self.detail})" if self.detail else s


@dataclass
class DriftTable:
    """Expected one-step change of a probabilistic-crowding lineage on OneMax, per ones-count."""

    n: int
    entries: dict[int, float | Fraction]
    discarded_mass: float
    exact: bool

    def __getitem__(self, k: int):
        return self.entries[k]


def _check_nk(n: int, k: int) -> None:
    if n < 1 or not 0 <= k <= n:
        raise ValueError(f"need n >= 1 and 0 <= k <= n, got n={n}, k={k}")


def _exact_pc_drift(n: int, k: int, max_flips: Optional[int]) -> Fraction:
    # Every term shares the factor n^-n; accumulate the integer numerators first.
    total = Fraction(0)
    for a in range(k + 1):
        ca = math.comb(k, a)
        for b in range(n - k + 1):
            if max_flips is not None and a + b > max_flips:
                break
            if a == b:
                continue
            weight = ca * math.comb(n - k, b) * (n - 1) ** (n - a - b)
            total += Fraction(weight * (b - a) * (k - a + b), 2 * k - a + b)
    return total / n ** n


def _float_pc_drift(n: int, k: int, max_flips: int) -> float:
    p = 1.0 / n
    a = np.arange(min(k, max_flips) + 1)
    b = np.arange(min(n - k, max_flips) + 1)
    pa = stats.binom.pmf(a, k, p)
    pb = stats.binom.pmf(b, n - k, p)
    terms = []
    for ai, pai in zip(a, pa):
        for bi, pbi in zip(b, pb):
            if ai + bi > max_flips:
                break
            if ai == bi:
                continue
            terms.append(pai * pbi * (bi - ai) * (k - ai + bi) / (2 * k - ai + bi))
    return math.fsum(terms)


def flip_tail_mass(n: int, max_flips: int) -> float:
    """Probability that standard bit mutation flips more than ``max_flips`` bits."""
    return float(stats.binom.sf(max_flips, n, 1.0 / n))


def exact_pc_drift(n: int, k: int, exact: bool = False, max_flips: Optional[int] = None):
    """E[f(z) - f(x)] for one probabilistic-crowding step on OneMax with f(x) = k.

    Sums P(a ones flip) * P(b zeros flip) * (b - a) * (k - a + b) / (2k - a + b).
    Terms with a == b contribute nothing, which also covers the degenerate
    k = a = b = 0 case (acceptance 1/2, zero change).
    """
    _check_nk(n, k)
    if exact:
        return _exact_pc_drift(n, k, max_flips)
    return _float_pc_drift(n, k, DEFAULT_MAX_FLIPS if max_flips is None else max_flips)


def pc_drift_table(n: int, exact: bool = False, max_flips: Optional[int] = None) -> DriftTable:
    entries = {k: exact_pc_drift(n, k, exact, max_flips) for k in range(n + 1)}
    if max_flips is None and not exact:
        max_flips = DEFAULT_MAX_FLIPS
    mass = 0.0 if max_flips is None or max_flips >= n else flip_tail_mass(n, max_flips)
    return DriftTable(n, entries, mass, exact)


def enumerate_flip_masks(n: int, k: int):
    """Yield (probability, ones flipped, zeros flipped) for all 2^n flip masks.

    The parent holds its ``k`` ones in the first k positions. Exponential cost,
    meant as an independent oracle for small n.
    """
    _check_nk(n, k)
    p = Fraction(1, n)
    q = 1 - p
    for mask in itertools.product((0, 1), repeat=n):
        m = sum(mask)
        a = sum(mask[:k])
        yield p ** m * q ** (n - m), a, m - a


def enumerate_pc_drift(n: int, k: int) -> Fraction:
    total = Fraction(0)
    for prob, a, b in enumerate_flip_masks(n, k):
        fx, fy = k, k - a + b
        accept = Fraction(1, 2) if fx + fy == 0 else Fraction(fy, fx + fy)
        total += prob * accept * (fy - fx)
    return total


def exact_offspring_drift(n: int, k: int) -> Fraction:
    """E[f(y) - f(x)] before survival selection on OneMax: (n - 2k) / n."""
    _check_nk(n, k)
    return Fraction(n - 2 * k, n)


def enumerate_offspring_drift(n: int, k: int) -> Fraction:
    return sum((prob * (b - a) for prob, a, b in enumerate_flip_masks(n, k)), Fraction(0))


def pc_drift_mc(n: int, k: int, trials: int, rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo mean and standard error of the one-step crowding drift."""
    _check_nk(n, k)
    s, s2 = _kernels.pc_drift_mc(n, k, trials, rng)
    mean = s / trials
    var = max(s2 / trials - mean * mean, 0.0)
    return mean, math.sqrt(var / trials)


def drift_slack(n: int, k: int) -> float:
    """n * (drift + delta/2) where f(x) = k = (1 + delta) n / 2."""
    delta = 2 * k / n - 1
    return n * (exact_pc_drift(n, k) + delta / 2)


def fit_drift_constant(grid) -> float:
    """Smallest C with drift(n, k) <= -delta/2 + C/n over ``(n, delta)`` pairs."""
    return max(drift_slack(n, round((1 + d) * n / 2)) for n, d in grid)


def drift_report(n: int, k: int, constant: float = 2.0) -> BoundReport:
    """Compare the exact drift with -delta/2 + constant/n.

    The default constant 2 comes from the identity
    drift = -delta/2 + E[d^2 / (2 (f(x) + f(y)))] with f(x) + f(y) >= n and
    E[d^2] = 1 - 1/n + delta^2 <= 2.
    """
    delta = 2 * k / n - 1
    if delta <= 0:
        raise BoundNotApplicable(f"drift bound needs k > n/2, got k={k}, n={n}")
    value = exact_pc_drift(n, k)
    bound = -delta / 2 + constant / n
    return BoundReport(
        name="pc_drift", analytic_value=bound, empirical_value=float(value), sample_count=0,
        verdict=CONSISTENT if value <= bound else VIOLATED,
        detail=f"delta={delta:.6g}, -delta/2={-delta / 2:.6g}, offspring drift={float(exact_offspring_drift(n, k)):.6g}, "
               f"slack n*(drift+delta/2)={n * (value + delta / 2):.6g}, dropped mass={flip_tail_mass(n, DEFAULT_MAX_FLIPS):.3g}",
    )


def init_gap_lower_bound(n: int, mu: int, sigma: float) -> float:
    """1 - 2((1 + p_sigma)/2)^mu with p_sigma = 2 sigma sqrt(2/n)."""
    p_sigma = 2 * sigma * math.sqrt(2 / n)
    return 1 - 2 * ((1 + p_sigma) / 2) ** mu


def wilson_interval(successes: int, trials: int, confidence: float) -> tuple[float, float]:
    """One-sided Wilson score bounds at the given confidence."""
    z = stats.norm.ppf(confidence)
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def init_gap_probability_mc(n: int, mu: int, sigma: float, trials: int, rng: np.random.Generator,
                            confidence: float = 0.99, chunk: int = 100_000) -> BoundReport:
    """Estimate P(some member has <= n/2 - sigma ones and some has >= n/2 + sigma ones).

    Ones-counts of uniform genomes are drawn directly as Binomial(n, 1/2).
    The bound counts as violated only if it exceeds the upper confidence limit.
    """
    if trials < 1 or mu < 1:
        raise ValueError("trials and mu must be positive")
    if not 0 <= sigma <= n / 2:
        raise ValueError("need 0 <= sigma <= n/2")
    hits = 0
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        ones = rng.binomial(n, 0.5, size=(m, mu))
        low = (2 * ones.min(axis=1) <= n - 2 * sigma)
        high = (2 * ones.max(axis=1) >= n + 2 * sigma)
        hits += int(np.count_nonzero(low & high))
        done += m
    bound = init_gap_lower_bound(n, mu, sigma)
    _, upper = wilson_interval(hits, trials, confidence)
    return BoundReport(
        name=f"init_gap(n={n},mu={mu},sigma={sigma})", analytic_value=bound,
        empirical_value=hits / trials, sample_count=trials,
        verdict=CONSISTENT if upper >= bound else VIOLATED,
        detail=f"upper {confidence:.0%} limit {upper:.6g}",
    )


def rts_takeover_bound(mu: int, w: int, n: int) -> float:
    """Lower bound on the chance one branch takes over before the other optimum appears.

    Product over i = 1..mu-1 of max(0, 1 - 4 mu / (i n ((mu - i)/mu)^w)).
    """
    if mu < 2 or w < 2 or 8 * mu > n:
        raise BoundNotApplicable(f"takeover bound needs mu >= 2, w >= 2, 8 mu <= n; got mu={mu}, w={w}, n={n}")
    prod = 1.0
    for i in range(1, mu):
        prod *= max(0.0, 1.0 - 4 * mu / (i * n * ((mu - i) / mu) ** w))
    return prod


def _log(n: float, base: str) -> float:
    if base == "2":
        return math.log2(n)
    if base == "e":
        return math.log(n)
    raise ValueError(f"log base must be '2' or 'e', got {base!r}")


def theorem_bound(name: str, mu: int, n: Optional[int] = None, log_base: str = "2") -> float:
    """Closed-form success-probability and time bounds.

    ``rts_success_lb`` uses mu' = min(mu, log n); the base of that logarithm is
    not fixed by the source, hence ``log_base``.
    """
    if name == "det_crowding_success_lb":
        return 1 - 2.0 ** (-mu + 1)
    if name == "rts_success_lb":
        if n is None:
            raise ValueError("rts_success_lb needs n")
        mu_eff = min(mu, _log(n, log_base))
        return 1 - 2.0 ** (-mu_eff + 3)
    if name == "lemma33_budget":
        if n is None:
            raise ValueError("lemma33_budget needs n")
        return 2 * math.e * mu * n * math.log(n)
    raise ValueError(f"unknown bound {name!r}")


BOUND_NAMES = ("rts_success_lb", "det_crowding_success_lb", "lemma33_budget")
