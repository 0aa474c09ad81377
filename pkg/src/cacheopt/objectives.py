"""Execution-time and energy models plus the normalized weighted fitness.

Execution time charges each cache access its access time, and each miss a
DRAM latency plus a line transfer over the DRAM bandwidth:

    T = Ia*It + Im*Dram_t + Im*Il/BW + Da*Dt + Dm*Dram_t + Dm*Dl/BW

Dynamic energy charges per-access energies, line refill energy, and the
DRAM service of each miss as power x time (the product keeps the term in
joules; see README):

    E = Ia*Ie + Da*De + Im*Ie*Il + Dm*De*Dl
        + Im*P_dram*(Dram_t + Il/BW) + Dm*P_dram*(Dram_t + Dl/BW)

No CPU term and no write-traffic term enter either model; write-back and
write-through counters are reported by the simulator but priced at zero
here. Units are seconds, joules, watts, bytes, bytes/second throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .cachesim import CacheConfig, SimStats, config_sim_seed, simulate, validate
from .charmodel import CharTable, DramParams
from .errors import InfeasibleConfigError, ValidationError

#: Fitness assigned to structurally infeasible configurations. Finite so
#: selection stays total-ordered; large enough that any feasible point wins.
INFEASIBLE_FITNESS = 1.0e9


class MissMode(Enum):
    """Which fill traffic counts as a miss in the models.

    DEMAND_PLUS_PREFETCH (default) prices prefetch fills like demand
    misses, since both move a line over the DRAM interface; DEMAND_ONLY
    is available for sensitivity runs.
    """

    DEMAND_ONLY = "demand_only"
    DEMAND_PLUS_PREFETCH = "demand_plus_prefetch"


@dataclass(frozen=True)
class Metrics:
    exec_time: float  # seconds
    energy: float  # joules

    def __post_init__(self):
        for name in ("exec_time", "energy"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValidationError(f"{name} must be finite and >= 0, got {value!r}")


@dataclass(frozen=True)
class FitnessWeights:
    w_time: float = 0.5
    w_energy: float = 0.5

    def __post_init__(self):
        if not (0.0 <= self.w_time <= 1.0 and 0.0 <= self.w_energy <= 1.0):
            raise ValidationError("fitness weights must lie in [0, 1]")
        if abs(self.w_time + self.w_energy - 1.0) > 1e-9:
            raise ValidationError("fitness weights must sum to 1")

    @classmethod
    def from_time_weight(cls, w_time: float) -> "FitnessWeights":
        return cls(w_time=w_time, w_energy=1.0 - w_time)


def _effective_misses(stats: SimStats, miss_mode: MissMode) -> int:
    if miss_mode is MissMode.DEMAND_PLUS_PREFETCH:
        return stats.demand_misses + stats.prefetch_fills
    return stats.demand_misses


def _check_counters(stats: SimStats) -> None:
    for name in ("accesses", "demand_misses", "prefetch_fills"):
        value = getattr(stats, name)
        if value < 0 or not math.isfinite(value):
            raise ValidationError(f"counter {name} must be finite and >= 0, got {value!r}")


def _check_char(pair: tuple[float, float]) -> None:
    for value in pair:
        if not math.isfinite(value) or value < 0:
            raise ValidationError(f"characterization value must be finite and >= 0, got {value!r}")


def exec_time(
    istats: SimStats,
    dstats: SimStats,
    ichar: tuple[float, float],
    dchar: tuple[float, float],
    config: CacheConfig,
    dram: DramParams,
    miss_mode: MissMode = MissMode.DEMAND_PLUS_PREFETCH,
) -> float:
    """Execution time in seconds attributable to the cache subsystem."""
    _check_counters(istats)
    _check_counters(dstats)
    _check_char(ichar)
    _check_char(dchar)
    im = _effective_misses(istats, miss_mode)
    dm = _effective_misses(dstats, miss_mode)
    return (
        istats.accesses * ichar[0]
        + im * dram.access_time
        + im * config.ibsize / dram.bandwidth
        + dstats.accesses * dchar[0]
        + dm * dram.access_time
        + dm * config.dbsize / dram.bandwidth
    )


def energy(
    istats: SimStats,
    dstats: SimStats,
    ichar: tuple[float, float],
    dchar: tuple[float, float],
    config: CacheConfig,
    dram: DramParams,
    miss_mode: MissMode = MissMode.DEMAND_PLUS_PREFETCH,
) -> float:
    """Dynamic energy in joules attributable to the cache subsystem."""
    _check_counters(istats)
    _check_counters(dstats)
    _check_char(ichar)
    _check_char(dchar)
    im = _effective_misses(istats, miss_mode)
    dm = _effective_misses(dstats, miss_mode)
    i_dram = dram.access_power * (dram.access_time + config.ibsize / dram.bandwidth)
    d_dram = dram.access_power * (dram.access_time + config.dbsize / dram.bandwidth)
    return (
        istats.accesses * ichar[1]
        + dstats.accesses * dchar[1]
        + im * ichar[1] * config.ibsize
        + dm * dchar[1] * config.dbsize
        + im * i_dram
        + dm * d_dram
    )


def metrics_from_stats(
    istats: SimStats,
    dstats: SimStats,
    ichar: tuple[float, float],
    dchar: tuple[float, float],
    config: CacheConfig,
    dram: DramParams,
    miss_mode: MissMode = MissMode.DEMAND_PLUS_PREFETCH,
) -> Metrics:
    return Metrics(
        exec_time(istats, dstats, ichar, dchar, config, dram, miss_mode),
        energy(istats, dstats, ichar, dchar, config, dram, miss_mode),
    )


def config_metrics(
    config: CacheConfig,
    trace,
    table: CharTable,
    dram: DramParams,
    miss_mode: MissMode = MissMode.DEMAND_PLUS_PREFETCH,
    rng_seed: int | None = None,
) -> Metrics:
    """Simulate a feasible configuration and price it with the models.

    rng_seed defaults to the configuration's own stable seed so random
    replacement results do not depend on evaluation order.
    """
    verdict = validate(config)
    if not verdict:
        raise InfeasibleConfigError("; ".join(verdict.problems))
    if rng_seed is None:
        rng_seed = config_sim_seed(config)
    istats, dstats = simulate(config, trace, rng_seed=rng_seed)
    ichar = table.lookup(config.isize, config.ibsize, config.iassoc)
    dchar = table.lookup(config.dsize, config.dbsize, config.dassoc)
    return metrics_from_stats(istats, dstats, ichar, dchar, config, dram, miss_mode)


def fitness(
    candidate: Metrics,
    baseline: Metrics,
    weights: FitnessWeights = FitnessWeights(),
) -> float:
    """Weighted sum of time and energy, each normalized to the baseline.

    Lower is better; the baseline itself scores exactly 1.0.
    """
    if baseline.exec_time <= 0 or baseline.energy <= 0:
        raise ValidationError(
            "baseline metrics must be strictly positive; simulate the baseline first"
        )
    return (
        weights.w_time * candidate.exec_time / baseline.exec_time
        + weights.w_energy * candidate.energy / baseline.energy
    )
