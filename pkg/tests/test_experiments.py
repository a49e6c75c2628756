import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nichelab import experiments
from nichelab.experiments import (RunConfig, SweepAborted, best_fitness_study, default_budget, run_grid, run_single,
                                  run_sweep, success_table, summarize)
from nichelab.mechanisms import MechanismSpec


def check_invariants(res, cfg):
    assert res.success == (res.found_zero_opt and res.found_one_opt)
    assert res.generations_used <= cfg.budget == res.budget_generations
    assert res.evaluations_used == res.generations_used
    assert res.init_evaluations == cfg.mu
    assert res.best_normalized_fitness == res.best_fitness_final / cfg.n
    pop = res.final_population
    rows = {"".join(map(str, r)) for r in pop.bits}
    assert res.found_zero_opt == ("0" * cfg.n in rows)
    assert res.found_one_opt == ("1" * cfg.n in rows)


def test_budget_default():
    assert default_budget(32, 100) == math.ceil(10 * 32 * 100 * math.log(100)) == 147_366
    assert RunConfig(100, 8, MechanismSpec.dc()).budget == 36_842
    assert RunConfig(100, 8, MechanismSpec.dc(), budget_generations=5).budget == 5
    assert default_budget(1, 1) == 1
    with pytest.raises(ValueError):
        RunConfig(10, 2, MechanismSpec.dc(), budget_generations=0)
    with pytest.raises(ValueError):
        RunConfig(10, 2, MechanismSpec.dc(), trace_policy="everything")


def test_tiny_dc_succeeds():
    cfg = RunConfig(2, 4, MechanismSpec.dc(), budget_generations=10_000, master_seed=1)
    res = run_single(cfg)
    assert res.success and res.generations_used < 10_000
    check_invariants(res, cfg)


specs = st.sampled_from([MechanismSpec.pc(), MechanismSpec.dc(), MechanismSpec.plain(),
                         MechanismSpec.rts(3), MechanismSpec.rts(2, "pheno")])


@settings(max_examples=40)
@given(spec=specs, n=st.integers(1, 40), mu=st.integers(1, 10), seed=st.integers(0, 10**6))
def test_run_invariants(spec, n, mu, seed):
    cfg = RunConfig(n, mu, spec, budget_generations=2000, master_seed=seed)
    res = run_single(cfg)
    check_invariants(res, cfg)
    assert 0.5 <= res.best_normalized_fitness <= 1.0


def test_pc_fails_at_n100_mu32():
    res = run_grid([RunConfig(100, 32, MechanismSpec.pc(), master_seed=5, trace_policy="none")], 10)
    assert not any(r.found_zero_opt or r.found_one_opt for r in res)
    assert all(r.generations_used == 147_366 for r in res)


def test_determinism_and_digest():
    cfg = RunConfig(30, 5, MechanismSpec.rts(4), master_seed=9, run_index=3, trace_policy="full")
    a, b = run_single(cfg), run_single(cfg)
    assert a == b and a.final_population == b.final_population
    assert np.array_equal(a.trace.best, b.trace.best)
    other = RunConfig(30, 5, MechanismSpec.rts(4), master_seed=9, run_index=4)
    assert cfg.digest() != other.digest()
    # the trace policy does not change the outcome
    assert run_single(RunConfig(30, 5, MechanismSpec.rts(4), master_seed=9, run_index=3, trace_policy="none")) == a


@pytest.mark.parametrize("spec", [MechanismSpec.dc(), MechanismSpec.plain()])
def test_elitist_traces_non_decreasing(spec):
    for r in range(10):
        res = run_single(RunConfig(40, 4, spec, budget_generations=5000, master_seed=2, run_index=r,
                                   trace_policy="full"))
        assert np.all(np.diff(res.trace.best) >= 0)


def test_trace_thinning_and_branches():
    cfg = RunConfig(100, 32, MechanismSpec.pc(), master_seed=0)
    assert cfg.trace_every == 15
    res = run_single(cfg)
    tr = res.trace
    assert tr.generation[0] == 0 and tr.generation[-1] == res.generations_used
    assert len(tr.generation) <= experiments.MAX_TRACE_SAMPLES + 2
    assert np.all(np.diff(tr.generation) > 0)
    both = np.maximum(tr.best_zero_branch, tr.best_one_branch)
    # a member at exactly n/2 ones has fitness n/2 and sits on neither branch
    assert np.all((both == tr.best) | (tr.best == 50))


def test_sweep_matches_regardless_of_workers():
    grid = [RunConfig(20, mu, MechanismSpec.rts(2), master_seed=4) for mu in (2, 4, 8)]
    one = run_grid(grid, 6, workers=1)
    two = run_grid(grid, 6, workers=2)
    assert one == two
    assert [(r.mu, r.run_index) for r in one] == [(mu, i) for mu in (2, 4, 8) for i in range(6)]
    assert run_sweep(grid, 6, workers=1) == run_sweep(grid, 6, workers=2) == summarize(one)


def test_summary_counts():
    grid = [RunConfig(12, 4, MechanismSpec.dc(), master_seed=1), RunConfig(12, 4, MechanismSpec.pc(), master_seed=1)]
    res = run_grid(grid, 8)
    dc, pc = summarize(res)
    assert dc.runs == pc.runs == 8
    assert dc.successes == sum(r.success for r in res[:8])
    wins = [r.generations_used for r in res[:8] if r.success]
    assert dc.mean_generations_on_success == (np.mean(wins) if wins else None)
    assert 0 <= pc.successes <= pc.runs


def test_sweep_abort_keeps_partial(monkeypatch):
    real = experiments.run_single
    calls = []

    def flaky(cfg):
        calls.append(cfg)
        if len(calls) == 3:
            raise RuntimeError("boom")
        return real(cfg)

    monkeypatch.setattr(experiments, "run_single", flaky)
    with pytest.raises(SweepAborted) as info:
        run_grid([RunConfig(8, 2, MechanismSpec.dc())], 5, workers=1)
    assert info.value.partial_results and len(info.value.partial) == 2
    assert "boom" in str(info.value)


def test_dc_control_reaches_both_optima():
    stats = best_fitness_study([32], 32, MechanismSpec.dc(), 20, master_seed=3)
    assert stats[0].median == 1.0


def test_best_fitness_samples_in_range():
    stats = best_fitness_study([16, 32], 8, MechanismSpec.pc(), 10, master_seed=3)
    for s in stats:
        assert 0.5 <= s.minimum <= s.q1 <= s.median <= s.q3 <= s.maximum <= 1.0
        assert s.minimum <= s.whisker_low and s.whisker_high <= s.maximum
        assert s.runs == 10


def test_boxstats_outliers():
    s = experiments.BoxStats.of(1, [0.5] * 9 + [1.0])
    assert s.outliers == (1.0,) and s.whisker_high == 0.5 and s.median == 0.5


def test_success_table_pivot():
    summ = run_sweep([RunConfig(10, mu, MechanismSpec.rts(w, d), master_seed=0, budget_generations=200)
                      for d in ("geno", "pheno") for mu in (2, 4) for w in (1, 2)], 2)
    mus, ws, cells = success_table(summ, "pheno")
    assert mus == [2, 4] and ws == [1, 2] and len(cells) == 4


@pytest.mark.slow
def test_rts_saturates_at_large_mu_and_w():
    big = run_sweep([RunConfig(100, 1024, MechanismSpec.rts(128), master_seed=2, trace_policy="none")], 10)[0]
    small = run_sweep([RunConfig(100, 2, MechanismSpec.rts(1), master_seed=2, trace_policy="none")], 10)[0]
    assert big.successes >= 9 and small.successes < big.successes
