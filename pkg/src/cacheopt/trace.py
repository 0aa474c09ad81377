"""din trace ingestion and deterministic synthetic trace generation.

A trace is a sequence of TraceRecord values. The din text format carries one
access per line: a label (0 = read, 1 = write, 2 = ifetch) and a hexadecimal
byte address. Every access is 4 bytes wide (32-bit words); din carries no
size field.
"""

from __future__ import annotations

import re
import random
from dataclasses import dataclass
from enum import IntEnum
from itertools import islice
from typing import Iterable, Iterator, NamedTuple

from .errors import TraceError


class AccessKind(IntEnum):
    """Memory access kind, numbered exactly as din labels."""

    READ = 0
    WRITE = 1
    IFETCH = 2


class TraceRecord(NamedTuple):
    kind: AccessKind
    address: int


@dataclass(frozen=True)
class TraceStats:
    n_ifetch: int
    n_read: int
    n_write: int

    @property
    def total(self) -> int:
        return self.n_ifetch + self.n_read + self.n_write


PROFILES = ("sequential", "loop", "strided", "random", "mixed")

_MAX_ADDRESS = (1 << 64) - 1
_HEX_RE = re.compile(r"(0[xX])?[0-9a-fA-F]+")


def parse_din(lines: Iterable[str]) -> list[TraceRecord]:
    """Parse classic din text: one `label hexaddr` pair per line.

    Empty lines and lines starting with `#` are skipped. Addresses are
    hexadecimal with an optional 0x prefix and must fit in 64 bits.
    """
    records = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 2:
            raise TraceError(
                f"expected 'label address' at line {lineno}, got {line!r}"
            )
        label, addr_text = fields
        if label not in ("0", "1", "2"):
            raise TraceError(f"invalid label at line {lineno}: {label!r}")
        if not _HEX_RE.fullmatch(addr_text):
            raise TraceError(f"invalid hexadecimal address at line {lineno}: {addr_text!r}")
        address = int(addr_text, 16)
        if address > _MAX_ADDRESS:
            raise TraceError(f"address out of 64-bit range at line {lineno}: {addr_text!r}")
        records.append(TraceRecord(AccessKind(int(label)), address))
    return records


def to_din(records: Iterable[TraceRecord]) -> str:
    """Render records as din text; inverse of parse_din."""
    return "".join(f"{int(r.kind)} {r.address:x}\n" for r in records)


def trace_stats(records: Iterable[TraceRecord]) -> TraceStats:
    counts = [0, 0, 0]
    for r in records:
        counts[r.kind] += 1
    return TraceStats(n_ifetch=counts[2], n_read=counts[0], n_write=counts[1])


def gen_synthetic(profile: str, n: int, seed: int) -> list[TraceRecord]:
    """Generate a deterministic n-record trace for the named access profile.

    Profiles:
      sequential  ifetch at consecutive 4-byte addresses
      loop        a repeated ifetch body interleaved with data reads/writes
      strided     data accesses walking a fixed stride
      random      uniform kinds and addresses
      mixed       ~75% ifetch / ~25% data, instruction-heavy with loop reuse
    """
    if n < 0:
        raise ValueError(f"record count must be >= 0, got {n}")
    try:
        stream = _STREAMS[profile]
    except KeyError:
        raise ValueError(f"unknown profile {profile!r}; expected one of {PROFILES}") from None
    return list(islice(stream(random.Random(seed)), n))


def _sequential_stream(rng: random.Random) -> Iterator[TraceRecord]:
    addr = 0
    while True:
        yield TraceRecord(AccessKind.IFETCH, addr)
        addr += 4


def _loop_stream(rng: random.Random) -> Iterator[TraceRecord]:
    body = rng.choice((16, 32, 64))  # ifetch words per iteration
    code, arr, working = 0x4000, 0x80000, 1 << 12
    k = 0
    while True:
        for j in range(body):
            yield TraceRecord(AccessKind.IFETCH, code + 4 * j)
            if j % 4 == 3:
                kind = AccessKind.WRITE if k % 4 == 3 else AccessKind.READ
                yield TraceRecord(kind, arr + (4 * k) % working)
                k += 1


def _strided_stream(rng: random.Random) -> Iterator[TraceRecord]:
    stride = rng.choice((16, 32, 64, 128))
    base, span = 0x20000, 1 << 18
    k = 0
    while True:
        kind = AccessKind.WRITE if k % 8 == 7 else AccessKind.READ
        yield TraceRecord(kind, base + (k * stride) % span)
        k += 1


def _random_stream(rng: random.Random) -> Iterator[TraceRecord]:
    while True:
        kind = AccessKind(rng.randrange(3))
        yield TraceRecord(kind, rng.randrange(1 << 20) & ~0x3)


def _mixed_stream(rng: random.Random) -> Iterator[TraceRecord]:
    # Instruction stream: mostly sequential with jumps back to loop anchors,
    # bounded to a 32 KiB code window. Data: half a strided walk over a
    # 16 KiB working set, half uniform over 256 KiB, 30% writes.
    anchors = [0x1000 + 0x400 * i for i in range(4)]
    pc = anchors[0]
    data_base, walk_span, rand_span = 0x100000, 1 << 14, 1 << 18
    ptr = data_base
    while True:
        if rng.random() < 0.75:
            yield TraceRecord(AccessKind.IFETCH, pc)
            if rng.random() < 0.05 or pc >= 0x1000 + (1 << 15):
                pc = rng.choice(anchors)
            else:
                pc += 4
        else:
            if rng.random() < 0.5:
                ptr += 32
                if ptr >= data_base + walk_span:
                    ptr = data_base
                addr = ptr
            else:
                addr = data_base + (rng.randrange(rand_span) & ~0x3)
            kind = AccessKind.WRITE if rng.random() < 0.3 else AccessKind.READ
            yield TraceRecord(kind, addr)


_STREAMS = {
    "sequential": _sequential_stream,
    "loop": _loop_stream,
    "strided": _strided_stream,
    "random": _random_stream,
    "mixed": _mixed_stream,
}
