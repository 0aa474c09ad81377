"""Trace-driven functional simulation of a split L1 instruction/data cache.

The simulator counts events only (hits, demand misses, prefetch fills,
write-backs, write-throughs); it keeps no timing state. Addresses are
physical byte addresses straight from the trace.
"""

from __future__ import annotations

import hashlib
import random
from collections import OrderedDict
from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .errors import ConfigError, FlagTextError, InfeasibleConfigError
from .trace import AccessKind, TraceRecord

CACHE_SIZES = (512, 1024, 2048, 4096, 8192, 16384, 32768, 65536)
BLOCK_SIZES = (8, 16, 32, 64)
ASSOCIATIVITIES = (1, 2, 4, 8, 16, 32, 64, 128)
REPL_POLICIES = ("l", "f", "r")  # LRU, FIFO, random
FETCH_POLICIES = ("m", "d", "a")  # prefetch-on-miss, demand, always-prefetch
WRITE_POLICIES = ("a", "n")  # write-back (copy-back), write-through

FLAG_ORDER = (
    "-l1-isize",
    "-l1-ibsize",
    "-l1-irepl",
    "-l1-iassoc",
    "-l1-ifetch",
    "-l1-dsize",
    "-l1-dbsize",
    "-l1-drepl",
    "-l1-dassoc",
    "-l1-dfetch",
    "-l1-dwback",
)

_FIELD_DOMAINS = {
    "isize": CACHE_SIZES,
    "ibsize": BLOCK_SIZES,
    "irepl": REPL_POLICIES,
    "iassoc": ASSOCIATIVITIES,
    "ifetch": FETCH_POLICIES,
    "dsize": CACHE_SIZES,
    "dbsize": BLOCK_SIZES,
    "drepl": REPL_POLICIES,
    "dassoc": ASSOCIATIVITIES,
    "dfetch": FETCH_POLICIES,
    "dwback": WRITE_POLICIES,
}


@dataclass(frozen=True)
class CacheConfig:
    """One point of the 11-parameter design space (5 I-cache, 6 D-cache)."""

    isize: int
    ibsize: int
    irepl: str
    iassoc: int
    ifetch: str
    dsize: int
    dbsize: int
    drepl: str
    dassoc: int
    dfetch: str
    dwback: str

    def __post_init__(self):
        for name, domain in _FIELD_DOMAINS.items():
            value = getattr(self, name)
            if value not in domain:
                raise ConfigError(f"{name}={value!r} not in permitted set {domain}")

    def to_flags(self) -> str:
        """Render as simulator flag text in canonical flag order."""
        values = [getattr(self, flag[4:]) for flag in FLAG_ORDER]
        return " ".join(f"{flag} {value}" for flag, value in zip(FLAG_ORDER, values))

    @classmethod
    def from_flags(cls, text: str) -> "CacheConfig":
        """Parse simulator flag text; inverse of to_flags (any flag order)."""
        tokens = text.split()
        if len(tokens) % 2:
            raise FlagTextError(f"flag text has a dangling token: {tokens[-1]!r}")
        seen: dict[str, str] = {}
        for flag, value in zip(tokens[::2], tokens[1::2]):
            if flag not in FLAG_ORDER:
                raise FlagTextError(f"unknown flag {flag!r}")
            if flag in seen:
                raise FlagTextError(f"duplicate flag {flag!r}")
            seen[flag] = value
        missing = [flag for flag in FLAG_ORDER if flag not in seen]
        if missing:
            raise FlagTextError(f"missing flag {missing[0]!r}")
        kwargs = {}
        for flag, raw in seen.items():
            name = flag[4:]
            if isinstance(_FIELD_DOMAINS[name][0], int):
                try:
                    kwargs[name] = int(raw)
                except ValueError:
                    raise FlagTextError(f"{flag} expects an integer, got {raw!r}") from None
            else:
                kwargs[name] = raw
        return cls(**kwargs)


# Normalization reference: 16 KB / 32 B / 4-way, LRU, demand fetch,
# copy-back data cache (a common embedded L1).
DEFAULT_BASELINE = CacheConfig(16384, 32, "l", 4, "d", 16384, 32, "l", 4, "d", "a")


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    problems: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.feasible


def n_sets(size: int, block: int, assoc: int) -> int:
    return size // (block * assoc)


def validate(config: CacheConfig) -> Feasibility:
    """Check cache geometry: size must hold a whole number of full sets."""
    problems = []
    sides = (
        ("I-cache", config.isize, config.ibsize, config.iassoc),
        ("D-cache", config.dsize, config.dbsize, config.dassoc),
    )
    for side, size, block, assoc in sides:
        span = block * assoc
        if span > size:
            problems.append(
                f"{side}: block {block} B x {assoc} ways = {span} B exceeds cache size {size} B"
            )
        elif size % span:
            problems.append(
                f"{side}: cache size {size} B is not a whole multiple of the {span} B set span"
            )
    return Feasibility(not problems, tuple(problems))


@dataclass
class SimStats:
    """Event counters for one cache side.

    demand hits = accesses - demand_misses. Prefetch fills are tracked
    apart from demand misses and are never counted as accesses. Dirty
    blocks left at end of trace land in final_flush, not write_backs.
    """

    accesses: int = 0
    demand_misses: int = 0
    prefetch_fills: int = 0
    write_backs: int = 0
    write_throughs: int = 0
    final_flush: int = 0

    @property
    def demand_hits(self) -> int:
        return self.accesses - self.demand_misses


class StepOutcome(NamedTuple):
    hit: bool
    prefetch_fills: int


class CacheUnit:
    """Mutable state of one cache side ('i' or 'd') during a run.

    Each set is an OrderedDict mapping tag -> dirty flag. LRU keeps the
    order by recency (least recent first), FIFO by fill order (first in
    first), random picks victims from the side's own generator. Fills,
    demand or prefetch, enter as most-recent/last-in.
    """

    def __init__(
        self,
        side: str,
        size: int,
        block: int,
        assoc: int,
        repl: str,
        fetch: str,
        wback: str = "a",
        rng: random.Random | None = None,
    ):
        if side not in ("i", "d"):
            raise ValueError(f"side must be 'i' or 'd', got {side!r}")
        self.side = side
        self.block = block
        self.assoc = assoc
        self.repl = repl
        self.fetch = fetch
        self.wback = wback
        self.n_sets = n_sets(size, block, assoc)
        if self.n_sets < 1 or size % (block * assoc):
            raise InfeasibleConfigError(
                f"{size} B cache cannot hold whole {block * assoc} B sets"
            )
        self.sets: list[OrderedDict] = [OrderedDict() for _ in range(self.n_sets)]
        self._rng = rng if rng is not None else random.Random(0)
        self.stats = SimStats()

    def step(self, record: TraceRecord) -> StepOutcome:
        """Apply one access and report its outcome."""
        if (record.kind == AccessKind.IFETCH) != (self.side == "i"):
            raise ValueError(
                f"{record.kind.name} record routed to the {self.side.upper()}-cache"
            )
        st = self.stats
        misses, fills = st.demand_misses, st.prefetch_fills
        self._access(record.kind, record.address)
        return StepOutcome(
            hit=st.demand_misses == misses,
            prefetch_fills=st.prefetch_fills - fills,
        )

    def _access(self, kind: int, address: int) -> None:
        st = self.stats
        st.accesses += 1
        bi = address // self.block
        entries = self.sets[bi % self.n_sets]
        tag = bi // self.n_sets
        write = kind == AccessKind.WRITE
        if write and self.wback == "n":
            st.write_throughs += 1
        dirty = write and self.wback == "a"
        if tag in entries:
            hit = True
            if self.repl == "l":
                entries.move_to_end(tag)
            if dirty:
                entries[tag] = True
        else:
            hit = False
            st.demand_misses += 1
            self._fill(entries, tag, dirty)
        if self.fetch == "a" or (self.fetch == "m" and not hit):
            self._prefetch(bi + 1)

    def _fill(self, entries: OrderedDict, tag: int, dirty: bool) -> None:
        if len(entries) >= self.assoc:
            if self.repl == "r":
                victim_dirty = entries.pop(self._rng.choice(tuple(entries)))
            else:
                _, victim_dirty = entries.popitem(last=False)
            if victim_dirty:
                self.stats.write_backs += 1
        entries[tag] = dirty

    def _prefetch(self, bi: int) -> None:
        entries = self.sets[bi % self.n_sets]
        tag = bi // self.n_sets
        if tag not in entries:
            self._fill(entries, tag, False)
            self.stats.prefetch_fills += 1

    def count_dirty(self) -> int:
        return sum(1 for entries in self.sets for dirty in entries.values() if dirty)


def simulate(
    config: CacheConfig, trace: Iterable[TraceRecord], rng_seed: int = 0
) -> tuple[SimStats, SimStats]:
    """Run the trace through a split cache; return (I-cache, D-cache) stats.

    ifetch records go to the I-cache, reads and writes to the D-cache.
    rng_seed only influences results when a replacement policy is 'r';
    each side draws from its own generator derived from rng_seed.
    """
    verdict = validate(config)
    if not verdict:
        raise InfeasibleConfigError("; ".join(verdict.problems))
    master = random.Random(rng_seed)
    icache = CacheUnit(
        "i", config.isize, config.ibsize, config.iassoc, config.irepl,
        config.ifetch, rng=random.Random(master.getrandbits(64)),
    )
    dcache = CacheUnit(
        "d", config.dsize, config.dbsize, config.dassoc, config.drepl,
        config.dfetch, wback=config.dwback, rng=random.Random(master.getrandbits(64)),
    )
    iacc, dacc = icache._access, dcache._access
    for kind, address in trace:
        if kind == 2:
            iacc(kind, address)
        else:
            dacc(kind, address)
    dcache.stats.final_flush = dcache.count_dirty()
    return icache.stats, dcache.stats


def config_sim_seed(config: CacheConfig, base: int = 0) -> int:
    """Deterministic per-configuration simulation seed.

    Derived from the canonical flag text so a configuration's random
    replacement behaviour is reproducible regardless of evaluation order.
    """
    digest = hashlib.sha256(config.to_flags().encode()).digest()
    return int.from_bytes(digest[:8], "big") ^ (base & ((1 << 64) - 1))
