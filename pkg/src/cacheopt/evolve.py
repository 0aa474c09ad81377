"""Grammatical-evolution engine with a memoized phenotype evaluator.

The loop is elitist generational replacement: binary tournament selection,
single-point crossover, per-codon integer mutation. Fitness evaluation is
memoized on the canonical phenotype flag text, so one evaluator never
simulates the same configuration twice; evaluators may be shared across
runs to pool that memo.
"""

from __future__ import annotations

import random
import statistics
import threading
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from .cachesim import CacheConfig, config_sim_seed, validate
from .charmodel import CharTable, DramParams
from .errors import MappingError, ValidationError
from .grammar import Grammar, map_genotype
from .objectives import (
    INFEASIBLE_FITNESS,
    FitnessWeights,
    Metrics,
    MissMode,
    config_metrics,
    fitness,
)

Genotype = list[int]


@dataclass
class GEParams:
    """Search parameters; defaults follow the standard run recipe."""

    generations: int = 100
    population: int = 50
    p_crossover: float = 0.9
    p_mutation: float = 0.01  # per codon
    elitism: int = 1
    tournament_size: int = 2
    max_wraps: int = 3
    codon_count: int = 11
    rng_seed: int = 0

    def __post_init__(self):
        if self.generations < 1:
            raise ValidationError("generations must be >= 1")
        if self.population < 2:
            raise ValidationError("population must be >= 2")
        for name in ("p_crossover", "p_mutation"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1]")
        if not 0 <= self.elitism < self.population:
            raise ValidationError("elitism must lie in [0, population)")
        if self.tournament_size < 1:
            raise ValidationError("tournament_size must be >= 1")
        if self.max_wraps < 1:
            raise ValidationError("max_wraps must be >= 1")
        if self.codon_count < 1:
            raise ValidationError("codon_count must be >= 1")


@dataclass
class Individual:
    genotype: Genotype
    phenotype: str | None = None
    metrics: Metrics | None = None
    fitness: float | None = None
    feasible: bool | None = None


def memo_key(phenotype: str) -> str:
    """Whitespace-normalized phenotype text; equal configs get equal keys."""
    return " ".join(phenotype.split())


@dataclass(frozen=True)
class EvalResult:
    feasible: bool
    metrics: Metrics | None
    fitness: float


@dataclass(frozen=True)
class MemoStats:
    unique_keys: int
    feasible_keys: int
    sim_invocations: int
    memo_hits: int


class Evaluator:
    """Phenotype -> fitness, memoized; safe for concurrent callers.

    Each distinct feasible key is simulated exactly once: the first caller
    claims the key and later callers (including concurrent ones) wait on
    its result. Simulation seeds derive from the key text and sim_seed_base
    so values never depend on evaluation order.
    """

    def __init__(
        self,
        trace,
        table: CharTable,
        dram: DramParams,
        weights: FitnessWeights = FitnessWeights(),
        miss_mode: MissMode = MissMode.DEMAND_PLUS_PREFETCH,
        sim_seed_base: int = 0,
    ):
        self.trace = trace
        self.table = table
        self.dram = dram
        self.weights = weights
        self.miss_mode = miss_mode
        self.sim_seed_base = sim_seed_base
        self.baseline_metrics: Metrics | None = None
        self._memo: dict[str, Future] = {}
        self._lock = threading.Lock()
        self._feasible_keys = 0
        self._sim_invocations = 0
        self._memo_hits = 0

    def set_baseline(self, config: CacheConfig) -> Metrics:
        """Simulate the normalization point; not counted against the memo."""
        metrics = config_metrics(
            config, self.trace, self.table, self.dram, self.miss_mode,
            rng_seed=config_sim_seed(config, self.sim_seed_base),
        )
        self.baseline_metrics = metrics
        return metrics

    def evaluate(self, phenotype: str) -> EvalResult:
        if self.baseline_metrics is None:
            raise ValidationError("baseline metrics not set; call set_baseline first")
        key = memo_key(phenotype)
        with self._lock:
            existing = self._memo.get(key)
            if existing is None:
                fut: Future = Future()
                self._memo[key] = fut
            else:
                self._memo_hits += 1
        if existing is not None:
            return existing.result()
        try:
            result = self._compute(key)
        except BaseException as exc:
            fut.set_exception(exc)
            raise
        fut.set_result(result)
        return result

    def _compute(self, key: str) -> EvalResult:
        config = CacheConfig.from_flags(key)
        if not validate(config):
            return EvalResult(False, None, INFEASIBLE_FITNESS)
        metrics = config_metrics(
            config, self.trace, self.table, self.dram, self.miss_mode,
            rng_seed=config_sim_seed(config, self.sim_seed_base),
        )
        with self._lock:
            self._feasible_keys += 1
            self._sim_invocations += 1
        return EvalResult(True, metrics, fitness(metrics, self.baseline_metrics, self.weights))

    def stats(self) -> MemoStats:
        with self._lock:
            return MemoStats(
                unique_keys=len(self._memo),
                feasible_keys=self._feasible_keys,
                sim_invocations=self._sim_invocations,
                memo_hits=self._memo_hits,
            )


def random_genotype(length: int, rng: random.Random) -> Genotype:
    return [rng.randrange(256) for _ in range(length)]


def tournament(population: Sequence[Individual], size: int, rng: random.Random) -> Individual:
    """Lowest-fitness winner among `size` contestants drawn with replacement;
    ties go to the lower population index."""
    n = len(population)
    best = None
    for _ in range(size):
        i = rng.randrange(n)
        if best is None or (population[i].fitness, i) < (population[best].fitness, best):
            best = i
    return population[best]


def single_point_crossover(a: Genotype, b: Genotype, cut: int) -> tuple[Genotype, Genotype]:
    """Swap tails at `cut`; cut must lie in [1, len-1]."""
    return a[:cut] + b[cut:], b[:cut] + a[cut:]


def crossover(
    a: Genotype, b: Genotype, rng: random.Random, p_crossover: float
) -> tuple[Genotype, Genotype]:
    """With probability p_crossover swap tails at one shared cut point,
    otherwise return copies. Genotypes shorter than 2 are always copied."""
    if len(a) < 2 or len(b) < 2 or rng.random() >= p_crossover:
        return list(a), list(b)
    cut = rng.randint(1, min(len(a), len(b)) - 1)
    return single_point_crossover(a, b, cut)


def mutate(genotype: Genotype, p_mutation: float, rng: random.Random) -> Genotype:
    """Redraw each codon uniformly from [0, 255] with probability p_mutation."""
    return [rng.randrange(256) if rng.random() < p_mutation else c for c in genotype]


@dataclass(frozen=True)
class GenerationLog:
    generation: int
    best: float
    mean: float
    worst: float
    unique_evals: int  # simulator invocations so far
    memo_hits: int


@dataclass
class EvolveResult:
    best: Individual
    log: list[GenerationLog] = field(default_factory=list)
    stats: MemoStats | None = None


def _evaluate_population(
    population: list[Individual],
    grammar: Grammar,
    evaluator: Evaluator,
    max_wraps: int,
    jobs: int,
) -> None:
    todo = [ind for ind in population if ind.fitness is None]
    for ind in todo:
        try:
            ind.phenotype = map_genotype(ind.genotype, grammar, max_wraps)
        except MappingError:
            ind.phenotype = None
            ind.feasible = False
            ind.fitness = INFEASIBLE_FITNESS
    todo = [ind for ind in todo if ind.phenotype is not None]

    def apply(ind: Individual) -> None:
        result = evaluator.evaluate(ind.phenotype)
        ind.feasible = result.feasible
        ind.metrics = result.metrics
        ind.fitness = result.fitness

    if jobs > 1 and len(todo) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(apply, todo))
    else:
        for ind in todo:
            apply(ind)


def _next_generation(
    population: list[Individual], params: GEParams, rng: random.Random
) -> list[Individual]:
    order = sorted(range(len(population)), key=lambda i: (population[i].fitness, i))
    new_pop = [population[i] for i in order[: params.elitism]]  # elites keep their evaluation
    while len(new_pop) < params.population:
        p1 = tournament(population, params.tournament_size, rng)
        p2 = tournament(population, params.tournament_size, rng)
        g1, g2 = crossover(p1.genotype, p2.genotype, rng, params.p_crossover)
        new_pop.append(Individual(mutate(g1, params.p_mutation, rng)))
        if len(new_pop) < params.population:
            new_pop.append(Individual(mutate(g2, params.p_mutation, rng)))
    return new_pop


def evolve(
    params: GEParams, grammar: Grammar, evaluator: Evaluator, jobs: int = 1
) -> EvolveResult:
    """Run the generational loop and return the best-ever individual.

    Per-seed deterministic: the log's fitness values and the best phenotype
    depend only on (params, grammar, evaluator inputs), not on jobs. Ties
    in best-ever tracking keep the earliest discovery.
    """
    rng = random.Random(params.rng_seed)
    population = [
        Individual(random_genotype(params.codon_count, rng))
        for _ in range(params.population)
    ]
    best_ever: Individual | None = None
    log: list[GenerationLog] = []
    for generation in range(1, params.generations + 1):
        _evaluate_population(population, grammar, evaluator, params.max_wraps, jobs)
        for ind in population:
            if best_ever is None or ind.fitness < best_ever.fitness:
                best_ever = ind
        fits = [ind.fitness for ind in population]
        stats = evaluator.stats()
        log.append(
            GenerationLog(
                generation=generation,
                best=min(fits),
                mean=statistics.fmean(fits),
                worst=max(fits),
                unique_evals=stats.sim_invocations,
                memo_hits=stats.memo_hits,
            )
        )
        if generation < params.generations:
            population = _next_generation(population, params, rng)
    return EvolveResult(best=best_ever, log=log, stats=evaluator.stats())
