"""Runs, sweeps and the best-fitness study.

A run starts from a uniform population drawn from the run's substream and
iterates one mechanism until the population holds both 0^n and 1^n (success)
or the generation budget, by default ceil(10 mu n ln n), is spent (failure).
One generation is one offspring and one fitness evaluation; the mu initial
evaluations are reported separately and do not count against the budget.

Runs never share randomness: run ``r`` of any grid point uses
``substream(master_seed, r)``, so results do not depend on execution order or
worker count.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _kernels
from .core import Fitness, Population, substream
from .mechanisms import MechanismSpec

TRACE_POLICIES = ("none", "best_fitness_per_branch", "full")
MAX_TRACE_SAMPLES = 10_000
WORKERS_ENV = "NICHELAB_WORKERS"

SUCCESS = "success"
FAILURE = "failure"


def default_budget(mu: int, n: int) -> int:
    return max(1, math.ceil(10 * mu * n * math.log(n)))


def default_workers() -> int:
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


@dataclass(frozen=True)
class RunConfig:
    n: int
    mu: int
    mechanism: MechanismSpec
    fitness: Fitness = Fitness.TWOMAX
    budget_generations: Optional[int] = None
    master_seed: int = 0
    run_index: int = 0
    trace_policy: str = "best_fitness_per_branch"

    def __post_init__(self):
        if self.n < 1 or self.mu < 1:
            raise ValueError("n and mu must be positive")
        if self.budget_generations is not None and self.budget_generations < 1:
            raise ValueError("budget_generations must be >= 1")
        if self.trace_policy not in TRACE_POLICIES:
            raise ValueError(f"unknown trace policy {self.trace_policy!r}")
        object.__setattr__(self, "fitness", Fitness.parse(self.fitness))

    @property
    def budget(self) -> int:
        if self.budget_generations is not None:
            return self.budget_generations
        return default_budget(self.mu, self.n)

    @property
    def trace_every(self) -> int:
        if self.trace_policy == "none":
            return 0
        if self.trace_policy == "full":
            return 1
        return max(1, -(-self.budget // MAX_TRACE_SAMPLES))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mu": self.mu,
            "mechanism": self.mechanism.to_dict(),
            "fitness": self.fitness.name.lower(),
            "budget_generations": self.budget,
            "master_seed": self.master_seed,
            "run_index": self.run_index,
        }

    def digest(self) -> str:
        """Short hash of everything that determines the outcome (trace policy excluded)."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class Trace:
    generation: np.ndarray
    best: np.ndarray
    best_zero_branch: np.ndarray
    best_one_branch: np.ndarray


@dataclass
class RunResult:
    """Outcome of one run.

    Branch bests in the trace are -1 when the branch is empty; members with
    exactly n/2 ones belong to neither branch.
    """

    outcome: str
    generations_used: int
    evaluations_used: int
    init_evaluations: int
    best_fitness_final: int
    best_normalized_fitness: float
    found_zero_opt: bool
    found_one_opt: bool
    config_digest: str
    n: int
    mu: int
    mechanism: str
    w: Optional[int]
    distance: Optional[str]
    fitness: str
    budget_generations: int
    master_seed: int
    run_index: int
    trace: Optional[Trace] = field(default=None, compare=False, repr=False)
    final_population: Optional[Population] = field(default=None, compare=False, repr=False)

    @property
    def success(self) -> bool:
        return self.outcome == SUCCESS

    @property
    def point_key(self) -> tuple:
        return (self.n, self.mu, self.mechanism, self.w or 0, self.distance or "", self.fitness)


def run_single(cfg: RunConfig) -> RunResult:
    rng = substream(cfg.master_seed, cfg.run_index)
    pop = Population.random(cfg.mu, cfg.n, rng, cfg.fitness)
    bits, ones = pop.bits, pop.ones.copy()
    budget = cfg.budget
    every = cfg.trace_every
    size = budget // every + 2 if every else 1
    tg, tb, t0, t1 = (np.empty(size, dtype=np.int64) for _ in range(4))
    mech = cfg.mechanism
    gens, _, k = _kernels.run_loop(
        bits, ones, rng, int(mech.kind), int(cfg.fitness), int(mech.w or 0),
        int(mech.distance or 0), budget, every, tg, tb, t0, t1)
    final = Population.from_bits(bits, cfg.fitness)
    trace = Trace(tg[:k].copy(), tb[:k].copy(), t0[:k].copy(), t1[:k].copy()) if every else None
    z, o = final.has_zero_optimum(), final.has_one_optimum()
    best = final.best_fitness()
    md = mech.to_dict()
    return RunResult(
        outcome=SUCCESS if z and o else FAILURE,
        generations_used=int(gens),
        evaluations_used=int(gens),
        init_evaluations=cfg.mu,
        best_fitness_final=best,
        best_normalized_fitness=best / cfg.n,
        found_zero_opt=z,
        found_one_opt=o,
        config_digest=cfg.digest(),
        n=cfg.n,
        mu=cfg.mu,
        mechanism=md["kind"],
        w=md.get("w"),
        distance=md.get("distance"),
        fitness=cfg.fitness.name.lower(),
        budget_generations=budget,
        master_seed=cfg.master_seed,
        run_index=cfg.run_index,
        trace=trace,
        final_population=final,
    )


@dataclass
class SweepSummary:
    n: int
    mu: int
    mechanism: str
    w: Optional[int]
    distance: Optional[str]
    fitness: str
    runs: int
    successes: int
    mean_generations_on_success: Optional[float]
    master_seed: int

    @property
    def point_key(self) -> tuple:
        return (self.n, self.mu, self.mechanism, self.w or 0, self.distance or "", self.fitness)


class SweepAborted(RuntimeError):
    """A run failed; ``partial`` holds the results that did complete."""

    def __init__(self, message: str, partial: list[RunResult]):
        super().__init__(message)
        self.partial = partial
        self.partial_results = True


def _run_quiet(cfg: RunConfig) -> RunResult:
    res = run_single(cfg)
    res.final_population = None
    return res


def expand_grid(grid: Sequence[RunConfig], runs_per_point: int) -> list[RunConfig]:
    if runs_per_point < 1:
        raise ValueError("runs_per_point must be >= 1")
    return [replace(t, run_index=r) for t in grid for r in range(runs_per_point)]


def run_grid(grid: Sequence[RunConfig], runs_per_point: int, workers: Optional[int] = None) -> list[RunResult]:
    """All runs of all grid points, sorted by (grid position, run_index)."""
    configs = expand_grid(grid, runs_per_point)
    workers = default_workers() if workers is None else workers
    results: list[RunResult] = []
    try:
        if workers <= 1:
            for cfg in configs:
                results.append(_run_quiet(cfg))
        else:
            with ProcessPoolExecutor(max_workers=workers) as ex:
                for res in ex.map(_run_quiet, configs, chunksize=max(1, len(configs) // (8 * workers))):
                    results.append(res)
    except Exception as exc:
        raise SweepAborted(f"sweep aborted after {len(results)} of {len(configs)} runs: {exc}", results) from exc
    return results


def summarize(results: Iterable[RunResult]) -> list[SweepSummary]:
    """Aggregate per-run records into one summary per grid point (first-seen order)."""
    groups: dict[tuple, list[RunResult]] = {}
    for r in results:
        groups.setdefault(r.point_key, []).append(r)
    out = []
    for rs in groups.values():
        wins = [r.generations_used for r in rs if r.success]
        first = rs[0]
        out.append(SweepSummary(
            n=first.n, mu=first.mu, mechanism=first.mechanism, w=first.w,
            distance=first.distance, fitness=first.fitness, runs=len(rs),
            successes=len(wins),
            mean_generations_on_success=float(np.mean(wins)) if wins else None,
            master_seed=first.master_seed,
        ))
    return out


def run_sweep(grid: Sequence[RunConfig], runs_per_point: int, workers: Optional[int] = None) -> list[SweepSummary]:
    return summarize(run_grid(grid, runs_per_point, workers))


@dataclass
class BoxStats:
    """Tukey boxplot statistics (whiskers at 1.5 IQR) of one sample."""

    n: int
    runs: int
    minimum: float
    whisker_low: float
    q1: float
    median: float
    q3: float
    whisker_high: float
    maximum: float
    outliers: tuple[float, ...]

    @classmethod
    def of(cls, n: int, samples: Sequence[float]) -> BoxStats:
        x = np.sort(np.asarray(samples, dtype=float))
        q1, med, q3 = np.percentile(x, [25, 50, 75])
        iqr = q3 - q1
        inside = x[(x >= q1 - 1.5 * iqr) & (x <= q3 + 1.5 * iqr)]
        lo, hi = inside.min(), inside.max()
        outliers = tuple(float(v) for v in x[(x < lo) | (x > hi)])
        return cls(n, len(x), float(x[0]), float(lo), float(q1), float(med), float(q3),
                   float(hi), float(x[-1]), outliers)


def best_fitness_study(n_values: Sequence[int], mu: int, mechanism: MechanismSpec, runs: int,
                       master_seed: int = 0, workers: Optional[int] = None,
                       fitness: Fitness = Fitness.TWOMAX) -> list[BoxStats]:
    """Distribution of the final normalised best fitness per problem size."""
    grid = [RunConfig(n, mu, mechanism, fitness, master_seed=master_seed, trace_policy="none")
            for n in n_values]
    results = run_grid(grid, runs, workers)
    by_n: dict[int, list[float]] = {}
    for r in results:
        by_n.setdefault(r.n, []).append(r.best_normalized_fitness)
    return [BoxStats.of(n, by_n[n]) for n in n_values]


def success_table(summaries: Sequence[SweepSummary], distance: Optional[str] = None) -> tuple[list[int], list[int], dict]:
    """Pivot RTS summaries into ``{(mu, w): successes}`` for one distance."""
    cells = {(s.mu, s.w): s.successes for s in summaries
             if s.mechanism == "rts" and (distance is None or s.distance == distance)}
    mus = sorted({m for m, _ in cells})
    ws = sorted({w for _, w in cells})
    return mus, ws, cells


def result_to_dict(r: RunResult) -> dict:
    return {f.name: getattr(r, f.name) for f in fields(r) if f.compare}
