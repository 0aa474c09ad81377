import math

import pytest

from cacheopt.cachesim import DEFAULT_BASELINE, CacheConfig, SimStats
from cacheopt.charmodel import DramParams, surrogate_generate
from cacheopt.errors import ValidationError
from cacheopt.objectives import (
    INFEASIBLE_FITNESS,
    FitnessWeights,
    Metrics,
    MissMode,
    config_metrics,
    energy,
    exec_time,
    fitness,
)
from cacheopt.trace import gen_synthetic

DRAM = DramParams()
ICHAR = (1e-9, 1e-11)
DCHAR = (2e-9, 3e-11)


def stats(accesses=0, misses=0, prefetch=0) -> SimStats:
    return SimStats(accesses=accesses, demand_misses=misses, prefetch_fills=prefetch)


def test_zero_counters_zero_cost():
    z = stats()
    assert exec_time(z, z, ICHAR, DCHAR, DEFAULT_BASELINE, DRAM) == 0.0
    assert energy(z, z, ICHAR, DCHAR, DEFAULT_BASELINE, DRAM) == 0.0


def test_exec_time_hand_example():
    # Ia=100, Im=10, It=1e-9, DRAM t=4e-9, Il=32, BW=6.4e9, D side silent:
    # 100e-9 + 40e-9 + 10*32/6.4e9 = 1.9e-7
    dram = DramParams(access_time=4e-9, bandwidth=6.4e9)
    got = exec_time(stats(100, 10), stats(), ICHAR, DCHAR, DEFAULT_BASELINE, dram)
    assert got == pytest.approx(1.9e-7, rel=1e-12)


def test_exec_time_linear_in_misses():
    dram = DramParams(access_time=4e-9, bandwidth=6.4e9)
    base = exec_time(stats(100, 0), stats(), ICHAR, DCHAR, DEFAULT_BASELINE, dram)
    one = exec_time(stats(100, 10), stats(), ICHAR, DCHAR, DEFAULT_BASELINE, dram)
    two = exec_time(stats(100, 20), stats(), ICHAR, DCHAR, DEFAULT_BASELINE, dram)
    assert two - base == pytest.approx(2 * (one - base), rel=1e-12)
    assert base == pytest.approx(100 * ICHAR[0], rel=1e-12)


def test_energy_hand_example():
    # Ia=100, Im=10, Ie=1e-11, Il=32, DRAM power 1.051 W, t=3.9889e-9,
    # BW=6.7108864e9, D side silent:
    # 1e-9 + 3.2e-9 + 10*1.051*(3.9889e-9 + 32/6.7108864e9)
    got = energy(stats(100, 10), stats(), (1e-9, 1e-11), DCHAR, DEFAULT_BASELINE, DRAM)
    assert got == pytest.approx(9.623892432714842e-08, abs=1e-10)


def test_energy_reduces_to_access_terms_without_misses():
    got = energy(stats(100), stats(50), ICHAR, DCHAR, DEFAULT_BASELINE, DRAM)
    assert got == 100 * ICHAR[1] + 50 * DCHAR[1]


def test_models_linear_in_all_counters():
    a = SimStats(accesses=120, demand_misses=30, prefetch_fills=7)
    d = SimStats(accesses=45, demand_misses=9, prefetch_fills=2)
    a2 = SimStats(accesses=240, demand_misses=60, prefetch_fills=14)
    d2 = SimStats(accesses=90, demand_misses=18, prefetch_fills=4)
    for fn in (exec_time, energy):
        once = fn(a, d, ICHAR, DCHAR, DEFAULT_BASELINE, DRAM)
        twice = fn(a2, d2, ICHAR, DCHAR, DEFAULT_BASELINE, DRAM)
        assert twice == pytest.approx(2 * once, rel=1e-12)


def test_miss_mode_prices_prefetch_traffic():
    with_pf = stats(100, 10, prefetch=5)
    for fn in (exec_time, energy):
        demand = fn(with_pf, stats(), ICHAR, DCHAR, DEFAULT_BASELINE, DRAM,
                    MissMode.DEMAND_ONLY)
        both = fn(with_pf, stats(), ICHAR, DCHAR, DEFAULT_BASELINE, DRAM,
                  MissMode.DEMAND_PLUS_PREFETCH)
        fifteen = fn(stats(100, 15), stats(), ICHAR, DCHAR, DEFAULT_BASELINE, DRAM,
                     MissMode.DEMAND_ONLY)
        assert both == pytest.approx(fifteen, rel=1e-12)
        assert both > demand


def test_negative_and_nonfinite_inputs_rejected():
    bad = SimStats(accesses=-1)
    with pytest.raises(ValidationError):
        exec_time(bad, stats(), ICHAR, DCHAR, DEFAULT_BASELINE, DRAM)
    with pytest.raises(ValidationError):
        energy(stats(), stats(), (float("nan"), 1e-11), DCHAR, DEFAULT_BASELINE, DRAM)
    with pytest.raises(ValidationError):
        Metrics(exec_time=-1.0, energy=0.0)
    with pytest.raises(ValidationError):
        Metrics(exec_time=float("inf"), energy=0.0)


def test_fitness_identity_and_linearity():
    baseline = Metrics(2e-3, 5e-6)
    assert fitness(baseline, baseline) == pytest.approx(1.0, abs=1e-12)
    half = Metrics(1e-3, 2.5e-6)
    assert fitness(half, baseline) == pytest.approx(0.5, abs=1e-12)


def test_fitness_weights():
    baseline = Metrics(2e-3, 5e-6)
    candidate = Metrics(1e-3, 5e-6)
    assert fitness(candidate, baseline, FitnessWeights.from_time_weight(1.0)) == \
        pytest.approx(0.5, abs=1e-12)
    assert fitness(candidate, baseline, FitnessWeights.from_time_weight(0.0)) == \
        pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValidationError):
        FitnessWeights(0.7, 0.7)
    with pytest.raises(ValidationError):
        FitnessWeights(-0.1, 1.1)


def test_fitness_requires_positive_baseline():
    with pytest.raises(ValidationError, match="baseline"):
        fitness(Metrics(1.0, 1.0), Metrics(0.0, 1.0))


def test_fitness_scale_invariance():
    baseline = Metrics(3e-3, 7e-6)
    candidate = Metrics(1e-3, 9e-6)
    ref = fitness(candidate, baseline)
    for scale in (1e-3, 1.0, 1e6):
        scaled = fitness(
            Metrics(candidate.exec_time * scale, candidate.energy * scale),
            Metrics(baseline.exec_time * scale, baseline.energy * scale),
        )
        assert scaled == pytest.approx(ref, rel=1e-12)


def test_fitness_monotonic_in_candidate():
    baseline = Metrics(3e-3, 7e-6)
    f = fitness(Metrics(1e-3, 2e-6), baseline)
    assert fitness(Metrics(1.1e-3, 2e-6), baseline) > f
    assert fitness(Metrics(1e-3, 2.2e-6), baseline) > f


def test_energy_rescaling_preserves_ordering():
    # Scaling the characterization energy column by a common factor scales
    # every candidate's energy linearly, so the argmin never moves.
    trace = gen_synthetic("mixed", 2000, 9)
    dram = DRAM
    candidates = [
        DEFAULT_BASELINE,
        CacheConfig(512, 8, "l", 1, "d", 512, 8, "l", 1, "d", "a"),
        CacheConfig(4096, 16, "f", 2, "m", 2048, 32, "l", 4, "d", "n"),
        CacheConfig(65536, 64, "l", 8, "a", 65536, 64, "f", 8, "a", "a"),
    ]
    table = surrogate_generate(1)
    baseline = config_metrics(DEFAULT_BASELINE, trace, table, dram)
    for scale in (0.5, 3.0, 10.0):
        plain, scaled = [], []
        for config in candidates:
            m = config_metrics(config, trace, table, dram)
            plain.append(fitness(m, baseline))
            m2 = Metrics(m.exec_time, m.energy * scale)
            b2 = Metrics(baseline.exec_time, baseline.energy * scale)
            scaled.append(fitness(m2, b2))
        assert plain.index(min(plain)) == scaled.index(min(scaled))


def test_infeasible_sentinel_value():
    assert INFEASIBLE_FITNESS == 1.0e9
    assert math.isfinite(INFEASIBLE_FITNESS)
