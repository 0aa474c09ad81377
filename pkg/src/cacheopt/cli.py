"""Command-line surface wiring traces, tables, models, search and reports.

Subcommands: gentrace, characterize, simulate, optimize, exhaustive,
report. Every command is deterministic given its flags and --seed; data
files carry no timestamps, so reruns overwrite byte-identical outputs.
Exit codes: 0 success, 2 validation error, 1 internal error.
"""

from __future__ import annotations

import argparse
import csv
import statistics
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from .cachesim import (
    DEFAULT_BASELINE,
    CacheConfig,
    config_sim_seed,
    simulate,
    validate,
)
from .charmodel import (
    CharTable,
    DramParams,
    load_dram_params,
    load_table,
    save_table,
    surrogate_generate,
)
from .errors import CacheOptError, ValidationError
from .evolve import Evaluator, EvolveResult, GEParams, evolve
from .grammar import DEFAULT_GRAMMAR, parse_bnf
from .objectives import FitnessWeights, MissMode, metrics_from_stats
from .oracle import Subspace, exhaustive
from .trace import PROFILES, TraceRecord, gen_synthetic, parse_din, to_din

_DOMAIN_FIELDS = (
    "isize", "ibsize", "irepl", "iassoc", "ifetch",
    "dsize", "dbsize", "drepl", "dassoc", "dfetch", "dwback",
)


@dataclass
class RunConfig:
    """Resolved inputs for one optimization campaign."""

    trace: list[TraceRecord]
    table: CharTable
    dram: DramParams
    baseline: CacheConfig
    params: GEParams
    weights: FitnessWeights
    miss_mode: MissMode
    grammar_text: str
    outdir: Path
    runs: int = 10
    jobs: int = 1
    shared_memo: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.runs < 1:
            raise ValidationError("runs must be >= 1")
        verdict = validate(self.baseline)
        if not verdict:
            raise ValidationError(
                "baseline configuration is infeasible: " + "; ".join(verdict.problems)
            )


def _fmt(value: float) -> str:
    return repr(float(value))


def _load_trace(args) -> list[TraceRecord]:
    path = Path(args.trace)
    with path.open() as fh:
        records = parse_din(fh)
    cap = getattr(args, "max_records", None)
    if cap is not None:
        if cap < 0:
            raise ValidationError(f"--max-records must be >= 0, got {cap}")
        records = records[:cap]
    return records


def _load_char_table(args) -> CharTable:
    if args.table is not None:
        return load_table(args.table, strict=args.strict_table)
    return surrogate_generate(args.surrogate_seed)


def _load_dram(args) -> DramParams:
    dram = load_dram_params(args.dram_config) if args.dram_config else DramParams()
    overrides = {}
    if args.dram_access_time is not None:
        overrides["access_time"] = args.dram_access_time
    if args.dram_bandwidth is not None:
        overrides["bandwidth"] = args.dram_bandwidth
    if args.dram_access_power is not None:
        overrides["access_power"] = args.dram_access_power
    if args.dram_size is not None:
        overrides["size"] = args.dram_size
    return replace(dram, **overrides) if overrides else dram


def _add_trace_options(parser) -> None:
    parser.add_argument("--trace", required=True, help="din trace file")
    parser.add_argument(
        "--max-records", type=int, default=None, metavar="N",
        help="ingest at most N trace records",
    )


def _add_table_options(parser) -> None:
    parser.add_argument("--table", default=None, help="characterization CSV file")
    parser.add_argument(
        "--strict-table", action="store_true",
        help="require all 256 hardware triples in --table",
    )
    parser.add_argument(
        "--surrogate-seed", type=int, default=0, metavar="SEED",
        help="generate a surrogate table with this seed when --table is absent",
    )


def _add_dram_options(parser) -> None:
    parser.add_argument("--dram-config", default=None, help="dram.* key-value file")
    parser.add_argument("--dram-access-time", type=float, default=None, metavar="S")
    parser.add_argument("--dram-bandwidth", type=float, default=None, metavar="BPS")
    parser.add_argument("--dram-access-power", type=float, default=None, metavar="W")
    parser.add_argument("--dram-size", type=int, default=None, metavar="BYTES")


def _add_model_options(parser) -> None:
    parser.add_argument(
        "--miss-mode", choices=[m.value for m in MissMode],
        default=MissMode.DEMAND_PLUS_PREFETCH.value,
        help="whether prefetch fills are priced like demand misses",
    )
    parser.add_argument(
        "--w-time", type=float, default=0.5, metavar="W",
        help="fitness weight on execution time (energy gets 1-W)",
    )
    parser.add_argument(
        "--baseline-flags", default=DEFAULT_BASELINE.to_flags(), metavar="FLAGS",
        help="baseline configuration as simulator flag text",
    )


def cmd_gentrace(args) -> None:
    records = gen_synthetic(args.profile, args.records, args.seed)
    text = to_din(records)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {len(records)} records to {args.out}")
    else:
        sys.stdout.write(text)


def cmd_characterize(args) -> None:
    if not args.surrogate:
        raise ValidationError("only surrogate generation is supported; pass --surrogate")
    table = surrogate_generate(args.seed)
    save_table(table, args.out)
    print(f"wrote {len(table)} characterization rows to {args.out}")


def cmd_simulate(args) -> None:
    trace = _load_trace(args)
    table = _load_char_table(args)
    dram = _load_dram(args)
    config = CacheConfig.from_flags(args.flags)
    verdict = validate(config)
    if not verdict:
        raise ValidationError("infeasible configuration: " + "; ".join(verdict.problems))
    istats, dstats = simulate(config, trace, rng_seed=config_sim_seed(config, args.seed))
    ichar = table.lookup(config.isize, config.ibsize, config.iassoc)
    dchar = table.lookup(config.dsize, config.dbsize, config.dassoc)
    metrics = metrics_from_stats(
        istats, dstats, ichar, dchar, config, dram, MissMode(args.miss_mode)
    )
    rows = [
        ("icache_accesses", istats.accesses),
        ("icache_demand_misses", istats.demand_misses),
        ("icache_prefetch_fills", istats.prefetch_fills),
        ("dcache_accesses", dstats.accesses),
        ("dcache_demand_misses", dstats.demand_misses),
        ("dcache_prefetch_fills", dstats.prefetch_fills),
        ("dcache_write_backs", dstats.write_backs),
        ("dcache_write_throughs", dstats.write_throughs),
        ("dcache_final_flush", dstats.final_flush),
        ("exec_time_s", _fmt(metrics.exec_time)),
        ("energy_j", _fmt(metrics.energy)),
    ]
    print(
        f"I-cache: accesses={istats.accesses} demand_misses={istats.demand_misses} "
        f"prefetch_fills={istats.prefetch_fills}"
    )
    print(
        f"D-cache: accesses={dstats.accesses} demand_misses={dstats.demand_misses} "
        f"prefetch_fills={dstats.prefetch_fills} write_backs={dstats.write_backs} "
        f"write_throughs={dstats.write_throughs} final_flush={dstats.final_flush}"
    )
    print(f"exec_time_s = {_fmt(metrics.exec_time)}")
    print(f"energy_j = {_fmt(metrics.energy)}")
    if args.out:
        with Path(args.out).open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("key", "value"))
            writer.writerows(rows)


@dataclass
class _RunOutcome:
    run: int
    seed: int
    result: EvolveResult


def run_optimize(rc: RunConfig) -> dict:
    """Execute the multi-run campaign and write the result bundle."""
    grammar = parse_bnf(rc.grammar_text)
    rc.outdir.mkdir(parents=True, exist_ok=True)

    def new_evaluator() -> Evaluator:
        evaluator = Evaluator(
            rc.trace, rc.table, rc.dram, rc.weights, rc.miss_mode,
            sim_seed_base=rc.seed,
        )
        evaluator.set_baseline(rc.baseline)
        return evaluator

    evaluator = new_evaluator()
    baseline = evaluator.baseline_metrics
    outcomes: list[_RunOutcome] = []
    total_sims = 0
    for run in range(rc.runs):
        if run and not rc.shared_memo:
            total_sims += evaluator.stats().sim_invocations
            evaluator = new_evaluator()
        params = replace(rc.params, rng_seed=rc.seed + run)
        result = evolve(params, grammar, evaluator, jobs=rc.jobs)
        outcomes.append(_RunOutcome(run, params.rng_seed, result))
        log_path = rc.outdir / f"run_{run:02d}_log.csv"
        with log_path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("generation", "best", "mean", "worst", "unique_evals", "memo_hits"))
            for row in result.log:
                writer.writerow(
                    (row.generation, _fmt(row.best), _fmt(row.mean), _fmt(row.worst),
                     row.unique_evals, row.memo_hits)
                )
    total_sims += evaluator.stats().sim_invocations

    best_fits = [o.result.best.fitness for o in outcomes]
    best_fitness = min(best_fits)
    best_outcome = outcomes[best_fits.index(best_fitness)]
    max_evals = rc.runs * rc.params.population * rc.params.generations
    savings_pct = 100.0 * (1.0 - total_sims / max_evals)

    with (rc.outdir / "runs.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ("run", "seed", "best_fitness", "exec_time_s", "energy_j",
             "pct_time", "pct_energy", "phenotype")
        )
        for o in outcomes:
            best = o.result.best
            if best.metrics is not None:
                t, e = best.metrics.exec_time, best.metrics.energy
                pct_t = 100.0 * t / baseline.exec_time
                pct_e = 100.0 * e / baseline.energy
                row = (o.run, o.seed, _fmt(best.fitness), _fmt(t), _fmt(e),
                       _fmt(pct_t), _fmt(pct_e), best.phenotype)
            else:
                row = (o.run, o.seed, _fmt(best.fitness), "", "", "", "", "")
            writer.writerow(row)

    feasible = [o for o in outcomes if o.result.best.metrics is not None]
    pct_times = [
        100.0 * o.result.best.metrics.exec_time / baseline.exec_time for o in feasible
    ]
    pct_energies = [
        100.0 * o.result.best.metrics.energy / baseline.energy for o in feasible
    ]
    summary = {
        "runs": rc.runs,
        "generations": rc.params.generations,
        "population": rc.params.population,
        "mean_best_fitness": statistics.fmean(best_fits),
        "stddev_best_fitness": statistics.stdev(best_fits) if len(best_fits) > 1 else 0.0,
        "best_fitness": best_fitness,
        "best_count": sum(1 for f in best_fits if f == best_fitness),
        "avg_pct_time": statistics.fmean(pct_times) if pct_times else float("nan"),
        "avg_pct_energy": statistics.fmean(pct_energies) if pct_energies else float("nan"),
        "unique_evals": total_sims,
        "max_evals": max_evals,
        "memo_savings_pct": savings_pct,
    }
    with (rc.outdir / "summary.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(summary.keys())
        writer.writerow(
            [_fmt(v) if isinstance(v, float) else v for v in summary.values()]
        )

    best = best_outcome.result.best
    lines = [best.phenotype or "", f"fitness = {_fmt(best.fitness)}"]
    if best.metrics is not None:
        lines.append(f"exec_time_s = {_fmt(best.metrics.exec_time)}")
        lines.append(f"energy_j = {_fmt(best.metrics.energy)}")
    (rc.outdir / "best.txt").write_text("\n".join(lines) + "\n")

    print(f"best fitness {_fmt(best_fitness)} over {rc.runs} run(s)")
    print(f"best phenotype: {best.phenotype}")
    print(f"memo savings: {savings_pct:.2f}% ({total_sims} of {max_evals} evaluations run)")
    return summary


def cmd_optimize(args) -> None:
    grammar_text = (
        Path(args.grammar).read_text() if args.grammar else DEFAULT_GRAMMAR
    )
    params = GEParams(
        generations=args.generations,
        population=args.population,
        p_crossover=args.p_crossover,
        p_mutation=args.p_mutation,
        elitism=args.elitism,
        tournament_size=args.tournament_size,
        max_wraps=args.max_wraps,
        codon_count=args.codon_count,
        rng_seed=args.seed,
    )
    rc = RunConfig(
        trace=_load_trace(args),
        table=_load_char_table(args),
        dram=_load_dram(args),
        baseline=CacheConfig.from_flags(args.baseline_flags),
        params=params,
        weights=FitnessWeights.from_time_weight(args.w_time),
        miss_mode=MissMode(args.miss_mode),
        grammar_text=grammar_text,
        outdir=Path(args.outdir),
        runs=args.runs,
        jobs=args.jobs,
        shared_memo=not args.no_shared_memo,
        seed=args.seed,
    )
    run_optimize(rc)


def cmd_exhaustive(args) -> None:
    trace = _load_trace(args)
    table = _load_char_table(args)
    dram = _load_dram(args)
    baseline_config = CacheConfig.from_flags(args.baseline_flags)
    verdict = validate(baseline_config)
    if not verdict:
        raise ValidationError(
            "baseline configuration is infeasible: " + "; ".join(verdict.problems)
        )
    weights = FitnessWeights.from_time_weight(args.w_time)
    miss_mode = MissMode(args.miss_mode)
    values = {}
    for name in _DOMAIN_FIELDS:
        raw = getattr(args, name)
        if raw is not None:
            parts = [p.strip() for p in raw.split(",") if p.strip()]
            values[name] = tuple(
                int(p) if p.isdigit() else p for p in parts
            )
    sub = Subspace(**values)
    ichar = table.lookup(
        baseline_config.isize, baseline_config.ibsize, baseline_config.iassoc
    )
    dchar = table.lookup(
        baseline_config.dsize, baseline_config.dbsize, baseline_config.dassoc
    )
    istats, dstats = simulate(
        baseline_config, trace, rng_seed=config_sim_seed(baseline_config, args.seed)
    )
    baseline = metrics_from_stats(
        istats, dstats, ichar, dchar, baseline_config, dram, miss_mode
    )
    result = exhaustive(
        sub, trace, table, dram, baseline, weights, miss_mode,
        cap=args.cap, sim_seed_base=args.seed,
    )
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    with (outdir / "ranked.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("fitness", "exec_time_s", "energy_j", "phenotype"))
        for r in result.ranked:
            writer.writerow(
                (_fmt(r.fitness), _fmt(r.metrics.exec_time), _fmt(r.metrics.energy),
                 r.config.to_flags())
            )
    with (outdir / "infeasible.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("phenotype", "problem"))
        for config, problems in result.infeasible:
            writer.writerow((config.to_flags(), "; ".join(problems)))
    print(
        f"evaluated {len(result.ranked)} feasible configurations "
        f"({len(result.infeasible)} infeasible)"
    )
    if result.ranked:
        top = result.ranked[0]
        print(f"optimum fitness {_fmt(top.fitness)}: {top.config.to_flags()}")


def cmd_report(args) -> None:
    rows = []
    for directory in args.rundirs:
        path = Path(directory) / "summary.csv"
        if not path.exists():
            raise ValidationError(f"no summary.csv under {directory}")
        with path.open(newline="") as fh:
            reader = csv.DictReader(fh)
            summary = next(reader, None)
        if summary is None:
            raise ValidationError(f"{path}: empty summary")
        rows.append(
            (Path(directory).name, summary["avg_pct_energy"], summary["avg_pct_time"])
        )
    with Path(args.out).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("benchmark", "pct_energy", "pct_time"))
        writer.writerows(rows)
    for name, pct_e, pct_t in rows:
        print(f"{name}: energy {pct_e}% of baseline, time {pct_t}% of baseline")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cacheopt",
        description="Search L1 instruction/data cache configurations for a "
        "memory-access trace by grammatical evolution.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gentrace", help="generate a synthetic din trace")
    p.add_argument("--profile", choices=PROFILES, required=True)
    p.add_argument("-n", "--records", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", default=None, help="output din file (default stdout)")
    p.set_defaults(func=cmd_gentrace)

    p = sub.add_parser("characterize", help="emit a characterization table CSV")
    p.add_argument("--surrogate", action="store_true",
                   help="generate the surrogate table (the only supported source)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_characterize)

    p = sub.add_parser("simulate", help="simulate one configuration over a trace")
    _add_trace_options(p)
    _add_table_options(p)
    _add_dram_options(p)
    p.add_argument("--flags", default=DEFAULT_BASELINE.to_flags(),
                   help="configuration as simulator flag text (default: baseline)")
    p.add_argument("--miss-mode", choices=[m.value for m in MissMode],
                   default=MissMode.DEMAND_PLUS_PREFETCH.value)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", default=None, help="also write counters as CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize", help="evolve cache configurations against a trace")
    _add_trace_options(p)
    _add_table_options(p)
    _add_dram_options(p)
    _add_model_options(p)
    p.add_argument("--grammar", default=None, help="BNF grammar file (default: built-in)")
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--generations", type=int, default=100)
    p.add_argument("--population", type=int, default=50)
    p.add_argument("--p-crossover", type=float, default=0.9)
    p.add_argument("--p-mutation", type=float, default=0.01)
    p.add_argument("--elitism", type=int, default=1)
    p.add_argument("--tournament-size", type=int, default=2)
    p.add_argument("--max-wraps", type=int, default=3)
    p.add_argument("--codon-count", type=int, default=11)
    p.add_argument("--seed", type=int, default=0, help="master seed; run i uses seed+i")
    p.add_argument("--jobs", type=int, default=1, help="parallel evaluations per generation")
    p.add_argument("--no-shared-memo", action="store_true",
                   help="give each run its own evaluation memo")
    p.add_argument("-o", "--outdir", required=True)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("exhaustive", help="rank every configuration of a subspace")
    _add_trace_options(p)
    _add_table_options(p)
    _add_dram_options(p)
    _add_model_options(p)
    for name in _DOMAIN_FIELDS:
        p.add_argument(f"--{name}", default=None, metavar="V1,V2,...",
                       help=f"allowed {name} values (default: full set)")
    p.add_argument("--cap", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--outdir", required=True)
    p.set_defaults(func=cmd_exhaustive)

    p = sub.add_parser("report", help="merge optimize outputs into a percent-of-baseline CSV")
    p.add_argument("rundirs", nargs="+", help="optimize output directories")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ValidationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CacheOptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
