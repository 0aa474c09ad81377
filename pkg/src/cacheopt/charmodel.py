"""Per-configuration access time/energy tables and main-memory constants.

A characterization table keys on the hardware triple (size, block, assoc);
replacement, prefetch and write policies do not change per-access cost.
Instruction and data caches share rows. Tables are immutable after load.
"""

from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Iterable

from .cachesim import ASSOCIATIVITIES, BLOCK_SIZES, CACHE_SIZES
from .errors import CharLookupError, CharTableError, ValidationError

ALL_TRIPLES = tuple(product(CACHE_SIZES, BLOCK_SIZES, ASSOCIATIVITIES))

CSV_HEADER = ("size", "block", "assoc", "access_time_s", "access_energy_j")


@dataclass(frozen=True)
class CharRow:
    size: int
    block: int
    assoc: int
    access_time: float  # seconds per access
    access_energy: float  # joules per access


@dataclass(frozen=True)
class DramParams:
    """Main-memory constants: size, latency, bandwidth, access power.

    Defaults model a 64 MiB embedded DRAM. size is stored for reporting
    only; the time/energy models never read it.
    """

    size: int = 67108864
    access_time: float = 3.9889e-9  # seconds
    bandwidth: float = 6.7108864e9  # bytes/second
    access_power: float = 1.051  # watts

    def __post_init__(self):
        for name in ("size", "access_time", "bandwidth", "access_power"):
            value = getattr(self, name)
            if not value > 0 or not math.isfinite(value):
                raise ValidationError(f"dram {name} must be finite and > 0, got {value!r}")


class CharTable:
    """Immutable lookup of (size, block, assoc) -> (access_time, access_energy)."""

    def __init__(self, rows: Iterable[CharRow]):
        table: dict[tuple[int, int, int], CharRow] = {}
        for row in rows:
            key = (row.size, row.block, row.assoc)
            if key in table:
                raise CharTableError(f"duplicate characterization row for {key}")
            if not (row.access_time > 0 and math.isfinite(row.access_time)):
                raise CharTableError(f"non-positive access_time for {key}")
            if not (row.access_energy > 0 and math.isfinite(row.access_energy)):
                raise CharTableError(f"non-positive access_energy for {key}")
            table[key] = row
        self._table = table

    def __len__(self) -> int:
        return len(self._table)

    def __contains__(self, key: tuple[int, int, int]) -> bool:
        return key in self._table

    def rows(self) -> list[CharRow]:
        return [self._table[key] for key in sorted(self._table)]

    def lookup(self, size: int, block: int, assoc: int) -> tuple[float, float]:
        """Return the stored (access_time, access_energy); never a default."""
        try:
            row = self._table[(size, block, assoc)]
        except KeyError:
            raise CharLookupError(
                f"no characterization row for size={size} block={block} assoc={assoc}"
            ) from None
        return row.access_time, row.access_energy

    def check_complete(self) -> None:
        """Require one row per grammar triple (8 sizes x 4 blocks x 8 assocs)."""
        for key in ALL_TRIPLES:
            if key not in self._table:
                raise CharTableError(
                    f"missing characterization row for size={key[0]} "
                    f"block={key[1]} assoc={key[2]}"
                )


def load_table(path: str | Path, strict: bool = False) -> CharTable:
    """Load a characterization CSV; `#` lines are comments.

    strict additionally demands completeness over all 256 grammar triples.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        data_lines = [line for line in fh if line.strip() and not line.lstrip().startswith("#")]
    reader = csv.reader(data_lines)
    try:
        header = next(reader)
    except StopIteration:
        raise CharTableError(f"{path}: empty characterization file") from None
    if tuple(h.strip() for h in header) != CSV_HEADER:
        raise CharTableError(
            f"{path}: expected header {','.join(CSV_HEADER)}, got {','.join(header)}"
        )
    rows = []
    for lineno, fields in enumerate(reader, start=2):
        if len(fields) != 5:
            raise CharTableError(f"{path}: row {lineno} has {len(fields)} fields, expected 5")
        try:
            rows.append(
                CharRow(int(fields[0]), int(fields[1]), int(fields[2]),
                        float(fields[3]), float(fields[4]))
            )
        except ValueError as exc:
            raise CharTableError(f"{path}: row {lineno}: {exc}") from None
    table = CharTable(rows)
    if strict:
        table.check_complete()
    return table


def save_table(table: CharTable, path: str | Path) -> None:
    """Write the table as CSV, sorted by triple; byte-stable across runs."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in table.rows():
            writer.writerow(
                [row.size, row.block, row.assoc,
                 f"{row.access_time:.10e}", f"{row.access_energy:.10e}"]
            )


def surrogate_generate(seed: int = 0) -> CharTable:
    """Generate a plausible 256-row table standing in for a real characterizer.

    Access time and energy grow affinely in log2(size), log2(assoc) and
    log2(block) with positive seed-jittered coefficients, so both values
    strictly increase with size at fixed (block, assoc) and with assoc at
    fixed (size, block). Times stay within 1e-10..5e-9 s and energies
    within 1e-12..1e-9 J for every triple.
    """
    rng = random.Random(seed)
    t0 = rng.uniform(1.2e-10, 2.0e-10)
    t_size = rng.uniform(1.0e-10, 2.4e-10)
    t_assoc = rng.uniform(0.8e-10, 2.0e-10)
    t_block = rng.uniform(0.2e-10, 1.0e-10)
    e0 = rng.uniform(1.5e-12, 3.0e-12)
    e_size = rng.uniform(3.0e-11, 6.0e-11)
    e_assoc = rng.uniform(2.0e-11, 5.0e-11)
    e_block = rng.uniform(0.5e-11, 2.0e-11)
    rows = []
    for size, block, assoc in ALL_TRIPLES:
        s = math.log2(size / 512)
        a = math.log2(assoc)
        b = math.log2(block / 8)
        rows.append(
            CharRow(
                size, block, assoc,
                t0 + t_size * s + t_assoc * a + t_block * b,
                e0 + e_size * s + e_assoc * a + e_block * b,
            )
        )
    return CharTable(rows)


_DRAM_KEYS = {
    "dram.access_time_s": "access_time",
    "dram.bandwidth_bps": "bandwidth",
    "dram.access_power_w": "access_power",
    "dram.size_bytes": "size",
}


def load_dram_params(path: str | Path) -> DramParams:
    """Read DRAM constants from a flat TOML/INI-style key-value file.

    Recognized keys: dram.access_time_s, dram.bandwidth_bps,
    dram.access_power_w, dram.size_bytes. A `[dram]` section header with
    bare keys is accepted too. Missing keys keep their defaults.
    """
    path = Path(path)
    values: dict[str, float] = {}
    section = ""
    for lineno, raw in enumerate(path.open(), start=1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ValidationError(f"{path}: line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        if section:
            key = f"{section}.{key}"
        if not key.startswith("dram."):
            continue
        if key not in _DRAM_KEYS:
            raise ValidationError(f"{path}: line {lineno}: unknown key {key!r}")
        try:
            values[_DRAM_KEYS[key]] = float(value.strip().strip('"'))
        except ValueError:
            raise ValidationError(
                f"{path}: line {lineno}: non-numeric value for {key!r}"
            ) from None
    if "size" in values:
        values["size"] = int(values["size"])
    return DramParams(**values)
