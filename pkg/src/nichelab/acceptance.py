"""Desk-scale acceptance criteria, shared by ``nichelab verify`` and the test suite.

Each ``criterion_*`` function runs one check at its fixed tolerance and
returns a :class:`CriterionResult`; nothing here is tuned per seed.
"""
from __future__ import annotations

import math
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import oracle
from .core import Population, substream
from .experiments import RunConfig, best_fitness_study, run_grid, run_single, run_sweep, summarize
from .mechanisms import Kind, MechanismSpec, step
from .results import persist_results

N = 100
RUNS = 100


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] criterion {self.number}: {self.title} ({self.detail}) [{self.seconds:.1f}s]"


def criterion_pc_failure(seed: int, runs: int = RUNS) -> CriterionResult:
    """Probabilistic crowding reaches neither optimum at n=100, mu=32."""
    res = run_grid([RunConfig(N, 32, MechanismSpec.pc(), master_seed=seed, trace_policy="none")], runs)
    hit = sum(r.found_zero_opt or r.found_one_opt for r in res)
    best = max(r.best_normalized_fitness for r in res)
    return CriterionResult(1, "probabilistic crowding never holds an optimum", hit == 0,
                           f"{hit}/{runs} runs hold an optimum; max normalised best {best:.3f}; "
                           f"budget {res[0].budget_generations}")


FIG1_SMALL_N = (32, 64, 128, 256, 512, 1024)


def criterion_fitness_concentration(seed: int, runs: int = RUNS) -> CriterionResult:
    stats = best_fitness_study(FIG1_SMALL_N, 32, MechanismSpec.pc(), runs, master_seed=seed)
    med = [s.median for s in stats]
    ok = all(b <= a for a, b in zip(med, med[1:])) and med[-1] < med[0]
    return CriterionResult(2, "median normalised best fitness non-increasing in n", ok,
                           "medians " + ", ".join(f"n={s.n}:{s.median:.4f}" for s in stats))


def rts_large_window(mu: int = 8, n: int = N) -> int:
    return math.ceil(2.5 * mu * math.log(n))


def criterion_rts_large_window(seed: int, runs: int = RUNS) -> CriterionResult:
    """Large windows: successes >= 90 of 100 for w = ceil(2.5 mu ln n) and for w = 922."""
    ws = (rts_large_window(), 922)
    grid = [RunConfig(N, 8, MechanismSpec.rts(w, "geno"), master_seed=seed, trace_policy="none") for w in ws]
    summ = run_sweep(grid, runs)
    ok = all(s.successes >= 90 for s in summ)
    lb2 = oracle.theorem_bound("rts_success_lb", 8, N, "2")
    return CriterionResult(3, "RTS with a large window finds both optima", ok,
                           ", ".join(f"w={s.w}: {s.successes}/{runs}" for s in summ)
                           + f"; base-2 analytic bound {lb2:.4f}")


def criterion_rts_small_window(seed: int, runs: int = RUNS) -> CriterionResult:
    parts = []
    ok = True
    for dist in ("geno", "pheno"):
        grid = [RunConfig(N, 2, MechanismSpec.rts(1, dist), master_seed=seed, trace_policy="none"),
                RunConfig(N, 32, MechanismSpec.rts(8, dist), master_seed=seed, trace_policy="none")]
        small, large = run_sweep(grid, runs)
        ok &= small.successes < large.successes and small.successes <= 20
        parts.append(f"{dist}: mu=2,w=1 -> {small.successes}, mu=32,w=8 -> {large.successes}")
    return CriterionResult(4, "RTS with small mu and w loses a branch", ok, "; ".join(parts))


DRIFT_GRID = [(n, d) for d in (0.1, 0.2, 0.5) for n in (100, 200, 400)]
DRIFT_CONSTANT_CAP = 2.0


def criterion_drift(seed: int, trials: int = 10**7) -> CriterionResult:
    """Exact crowding drift <= -delta/2 + C/n with one C, plus a Monte Carlo cross-check.

    C is fitted as the largest slack over the grid and must not exceed the
    a priori cap 2 (E[d^2] <= 2 and f(x) + f(y) >= n).
    """
    c = oracle.fit_drift_constant(DRIFT_GRID)
    below = all(oracle.exact_pc_drift(n, round((1 + d) * n / 2)) <= -d / 2 + c / n + 1e-15
                for n, d in DRIFT_GRID)
    exact = oracle.exact_pc_drift(50, 30)
    mean, se = oracle.pc_drift_mc(50, 30, trials, substream(seed, 0))
    z = abs(mean - exact) / se
    ok = below and 0 < c <= DRIFT_CONSTANT_CAP and z <= 3
    return CriterionResult(5, "crowding drift bound and Monte Carlo agreement", ok,
                           f"fitted C={c:.6f} (cap {DRIFT_CONSTANT_CAP}); exact(50,30)={exact:.6f}, "
                           f"MC={mean:.6f} +/- {se:.2e} ({z:.2f} SE)")


def criterion_offspring_drift(max_n: int = 12) -> CriterionResult:
    bad = [(n, k) for n in range(1, max_n + 1) for k in range(n + 1)
           if oracle.exact_offspring_drift(n, k) != oracle.enumerate_offspring_drift(n, k)]
    return CriterionResult(6, "offspring drift (n-2k)/n equals exhaustive enumeration", not bad,
                           f"n <= {max_n}, mismatches: {bad or 'none'}")


def criterion_init_gap(seed: int, trials: int = 10**6) -> CriterionResult:
    parts = []
    ok = True
    for j, (mu, sigma) in enumerate([(2, 0), (2, 5), (10, 0), (10, 5)]):
        rep = oracle.init_gap_probability_mc(101, mu, sigma, trials, substream(seed, j))
        ok &= rep.consistent
        if sigma == 0:
            ok &= rep.analytic_value == 1 - 2.0 ** (-mu + 1)
        parts.append(f"mu={mu},sigma={sigma}: MC {rep.empirical_value:.4f} vs bound {rep.analytic_value:.4f}")
    return CriterionResult(7, "initial branch-gap probability respects its lower bound", ok, "; ".join(parts))


def criterion_dc_budget(seed: int, runs: int = RUNS) -> CriterionResult:
    parts = []
    ok = True
    for mu in (4, 16):
        res = run_grid([RunConfig(N, mu, MechanismSpec.dc(), master_seed=seed, trace_policy="none")], runs)
        budget = oracle.theorem_bound("lemma33_budget", mu, N)
        wins = [r.generations_used for r in res if r.success]
        frac = sum(g <= budget for g in wins) / len(wins) if wins else 0.0
        ok &= bool(wins) and frac >= 0.95
        parts.append(f"mu={mu}: {len(wins)} successes, {frac:.0%} within {budget:.0f}")
    return CriterionResult(8, "deterministic crowding succeeds within 2e mu n ln n", ok, "; ".join(parts))


def _invariant_checks(seed: int) -> list[str]:
    problems = []
    rng = substream(seed, 0)
    specs = [MechanismSpec.pc(), MechanismSpec.dc(), MechanismSpec.plain(),
             MechanismSpec.rts(3, "geno"), MechanismSpec.rts(5, "pheno")]
    for spec in specs:
        p = Population.random(6, 12, rng)
        for _ in range(300):
            out = step(p, spec, rng)
            q = out.next_population
            q.check()
            if q.mu != p.mu:
                problems.append(f"{spec.label}: size changed")
            changed = np.flatnonzero(np.any(q.bits != p.bits, axis=1))
            if len(changed) > 1 or (out.offspring_accepted != (out.replaced_index is not None)):
                problems.append(f"{spec.label}: more than one member changed")
            if spec.kind == Kind.RESTRICTED_TOURNAMENT and out.offspring_accepted:
                if q.fitness[out.replaced_index] < p.fitness[out.replaced_index]:
                    problems.append(f"{spec.label}: accepted a worse offspring")
            if spec.kind in (Kind.DETERMINISTIC_CROWDING, Kind.PLAIN_REPLACE_WORST) and q.best_fitness() < p.best_fitness():
                problems.append(f"{spec.label}: best fitness decreased")
            p = q
    for spec in (MechanismSpec.dc(), MechanismSpec.plain()):
        for r in range(5):
            res = run_single(RunConfig(30, 4, spec, budget_generations=3000, master_seed=seed,
                                       run_index=r, trace_policy="full"))
            if np.any(np.diff(res.trace.best) < 0):
                problems.append(f"{spec.label}: trace not monotone")
    grid = [RunConfig(20, mu, MechanismSpec.rts(2), master_seed=seed) for mu in (2, 4)]
    with tempfile.TemporaryDirectory() as tmp:
        blobs = []
        for name in ("a", "b"):
            path = Path(tmp) / f"{name}.csv"
            persist_results(run_grid(grid, 5, workers=1), path, master_seed=seed)
            blobs.append(path.read_bytes())
        if blobs[0] != blobs[1]:
            problems.append("reruns are not byte-identical")
    ref = summarize(run_grid(grid, 5))
    if ref != run_sweep(grid, 5):
        problems.append("sweep summaries differ between reruns")
    return problems


def criterion_invariants(seed: int) -> CriterionResult:
    problems = _invariant_checks(seed)
    return CriterionResult(9, "determinism and step invariants", not problems,
                           "; ".join(problems) if problems else "all invariant checks hold")


def all_criteria(seed: int) -> list[tuple[int, Callable[[], CriterionResult]]]:
    return [
        (1, lambda: criterion_pc_failure(seed)),
        (2, lambda: criterion_fitness_concentration(seed)),
        (3, lambda: criterion_rts_large_window(seed)),
        (4, lambda: criterion_rts_small_window(seed)),
        (5, lambda: criterion_drift(seed)),
        (6, criterion_offspring_drift),
        (7, lambda: criterion_init_gap(seed)),
        (8, lambda: criterion_dc_budget(seed)),
        (9, lambda: criterion_invariants(seed)),
    ]


def timed(fn: Callable[[], CriterionResult]) -> CriterionResult:
    t = time.perf_counter()
    res = fn()
    res.seconds = time.perf_counter() - t
    return res


def run_all(seed: int, echo: Callable[[str], None] = print) -> list[CriterionResult]:
    out = []
    for _, fn in all_criteria(seed):
        res = timed(fn)
        echo(res.line())
        out.append(res)
    return out
