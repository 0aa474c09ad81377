import csv

import pytest

from cacheopt.charmodel import DramParams, surrogate_generate
from cacheopt.cli import main
from cacheopt.cachesim import DEFAULT_BASELINE, simulate
from cacheopt.objectives import metrics_from_stats
from cacheopt.trace import parse_din

ONE_POINT_GRAMMAR = """\
<DineroParams> ::= -l1-isize <S> -l1-ibsize <B> -l1-irepl <R> -l1-iassoc <A>
                   -l1-ifetch <F> -l1-dsize <S> -l1-dbsize <B> -l1-drepl <R>
                   -l1-dassoc <A> -l1-dfetch <F> -l1-dwback <W>
<S> ::= 16384
<B> ::= 32
<R> ::= l
<A> ::= 4
<F> ::= d
<W> ::= a
"""


def write_trace(path, n=200, profile="mixed", seed=3):
    assert main(["gentrace", "--profile", profile, "-n", str(n),
                 "--seed", str(seed), "-o", str(path)]) == 0
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# --- gentrace / characterize ----------------------------------------------

def test_gentrace_writes_din_file(tmp_path):
    out = tmp_path / "t.din"
    assert main(["gentrace", "--profile", "sequential", "-n", "3", "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines == ["2 0", "2 4", "2 8"]
    with out.open() as fh:
        assert len(parse_din(fh)) == 3


def test_gentrace_stdout(capsys):
    assert main(["gentrace", "--profile", "sequential", "-n", "2"]) == 0
    assert capsys.readouterr().out == "2 0\n2 4\n"


def test_characterize_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["characterize", "--surrogate", "--seed", "1", "-o", str(a)]) == 0
    assert main(["characterize", "--surrogate", "--seed", "1", "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) == 257  # header + 256 rows


def test_characterize_requires_surrogate_flag(tmp_path, capsys):
    assert main(["characterize", "-o", str(tmp_path / "x.csv")]) == 2
    assert "surrogate" in capsys.readouterr().err


# --- simulate ----------------------------------------------------------------

def test_simulate_repeat_trace_matches_library(tmp_path, capsys):
    trace_path = tmp_path / "t.din"
    trace_path.write_text("2 0\n2 0\n")
    out_csv = tmp_path / "stats.csv"
    assert main(["simulate", "--trace", str(trace_path), "-o", str(out_csv)]) == 0
    printed = capsys.readouterr().out
    assert "accesses=2" in printed and "demand_misses=1" in printed
    rows = {r["key"]: r["value"] for r in read_csv(out_csv)}
    assert rows["icache_accesses"] == "2"
    assert rows["icache_demand_misses"] == "1"
    # the CLI must price the counters exactly like the library
    table = surrogate_generate(0)
    istats, dstats = simulate(DEFAULT_BASELINE, parse_din(["2 0", "2 0"]))
    expected = metrics_from_stats(
        istats, dstats,
        table.lookup(16384, 32, 4), table.lookup(16384, 32, 4),
        DEFAULT_BASELINE, DramParams(),
    )
    assert float(rows["exec_time_s"]) == expected.exec_time
    assert float(rows["energy_j"]) == expected.energy


def test_simulate_infeasible_flags_exit_2(tmp_path, capsys):
    trace_path = write_trace(tmp_path / "t.din", n=10)
    flags = DEFAULT_BASELINE.to_flags().replace(
        "-l1-isize 16384", "-l1-isize 512"
    ).replace("-l1-ibsize 32", "-l1-ibsize 32").replace("-l1-iassoc 4", "-l1-iassoc 64")
    rc = main(["simulate", "--trace", str(trace_path), "--flags", flags])
    assert rc == 2
    err = capsys.readouterr().err
    assert "I-cache" in err and "exceeds" in err


def test_simulate_empty_trace_zero_metrics(tmp_path, capsys):
    trace_path = tmp_path / "e.din"
    trace_path.write_text("")
    assert main(["simulate", "--trace", str(trace_path)]) == 0
    out = capsys.readouterr().out
    assert "exec_time_s = 0.0" in out
    assert "energy_j = 0.0" in out


def test_simulate_max_records(tmp_path, capsys):
    trace_path = write_trace(tmp_path / "t.din", n=100, profile="sequential")
    assert main(["simulate", "--trace", str(trace_path), "--max-records", "10"]) == 0
    assert "accesses=10" in capsys.readouterr().out


def test_simulate_missing_trace_exit_2(tmp_path, capsys):
    rc = main(["simulate", "--trace", str(tmp_path / "absent.din")])
    assert rc == 2
    assert "absent.din" in capsys.readouterr().err


# --- optimize / report --------------------------------------------------------

def test_optimize_one_point_grammar_savings(tmp_path, capsys):
    trace_path = write_trace(tmp_path / "t.din")
    grammar_path = tmp_path / "one.bnf"
    grammar_path.write_text(ONE_POINT_GRAMMAR)
    outdir = tmp_path / "run"
    rc = main([
        "optimize", "--trace", str(trace_path), "--grammar", str(grammar_path),
        "--runs", "1", "--generations", "3", "--population", "6",
        "-o", str(outdir),
    ])
    assert rc == 0
    summary = read_csv(outdir / "summary.csv")[0]
    # a single memoized phenotype out of 18 possible evaluations
    assert float(summary["unique_evals"]) == 1
    assert float(summary["memo_savings_pct"]) == pytest.approx(
        100.0 * (1 - 1 / 18), abs=1e-9
    )
    assert int(summary["best_count"]) <= 1
    best = (outdir / "best.txt").read_text().splitlines()
    assert best[0] == DEFAULT_BASELINE.to_flags()
    assert best[1] == "fitness = 1.0"  # the only point is the baseline


def test_optimize_outputs_and_best_count(tmp_path):
    trace_path = write_trace(tmp_path / "t.din", n=400)
    outdir = tmp_path / "run"
    rc = main([
        "optimize", "--trace", str(trace_path), "--runs", "3",
        "--generations", "4", "--population", "8", "--seed", "5",
        "-o", str(outdir),
    ])
    assert rc == 0
    runs = read_csv(outdir / "runs.csv")
    assert [r["run"] for r in runs] == ["0", "1", "2"]
    assert [r["seed"] for r in runs] == ["5", "6", "7"]
    summary = read_csv(outdir / "summary.csv")[0]
    assert 1 <= int(summary["best_count"]) <= 3
    best_fits = [float(r["best_fitness"]) for r in runs]
    assert float(summary["best_fitness"]) == min(best_fits)
    for i in range(3):
        assert (outdir / f"run_{i:02d}_log.csv").exists()


def test_optimize_deterministic_outputs(tmp_path):
    trace_path = write_trace(tmp_path / "t.din", n=300)
    args = ["--trace", str(trace_path), "--runs", "2", "--generations", "3",
            "--population", "6", "--seed", "1", "--jobs", "2"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["optimize", *args, "-o", str(a)]) == 0
    assert main(["optimize", *args, "-o", str(b)]) == 0
    files = sorted(p.name for p in a.iterdir())
    assert files == sorted(p.name for p in b.iterdir())
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_report_identity_runs_are_100_percent(tmp_path, capsys):
    trace_path = write_trace(tmp_path / "t.din")
    grammar_path = tmp_path / "one.bnf"
    grammar_path.write_text(ONE_POINT_GRAMMAR)
    outdir = tmp_path / "adpcm_like"
    assert main([
        "optimize", "--trace", str(trace_path), "--grammar", str(grammar_path),
        "--runs", "2", "--generations", "2", "--population", "4",
        "-o", str(outdir),
    ]) == 0
    report_csv = tmp_path / "report.csv"
    assert main(["report", str(outdir), "-o", str(report_csv)]) == 0
    rows = read_csv(report_csv)
    assert rows[0]["benchmark"] == "adpcm_like"
    assert float(rows[0]["pct_energy"]) == pytest.approx(100.0)
    assert float(rows[0]["pct_time"]) == pytest.approx(100.0)


def test_optimize_no_shared_memo_resimulates(tmp_path):
    trace_path = write_trace(tmp_path / "t.din")
    grammar_path = tmp_path / "one.bnf"
    grammar_path.write_text(ONE_POINT_GRAMMAR)
    args = ["--trace", str(trace_path), "--grammar", str(grammar_path),
            "--runs", "2", "--generations", "3", "--population", "6"]
    shared, solo = tmp_path / "shared", tmp_path / "solo"
    assert main(["optimize", *args, "-o", str(shared)]) == 0
    assert main(["optimize", *args, "--no-shared-memo", "-o", str(solo)]) == 0
    assert int(read_csv(shared / "summary.csv")[0]["unique_evals"]) == 1
    assert int(read_csv(solo / "summary.csv")[0]["unique_evals"]) == 2


def test_gentrace_negative_count_exit_2(tmp_path, capsys):
    rc = main(["gentrace", "--profile", "mixed", "-n", "-5",
               "-o", str(tmp_path / "t.din")])
    assert rc == 2
    assert ">= 0" in capsys.readouterr().err


def test_report_rejects_missing_summary(tmp_path, capsys):
    rc = main(["report", str(tmp_path / "nowhere"), "-o", str(tmp_path / "r.csv")])
    assert rc == 2
    assert "summary.csv" in capsys.readouterr().err


# --- exhaustive ----------------------------------------------------------------

def test_exhaustive_cli_ranked_output(tmp_path):
    trace_path = write_trace(tmp_path / "t.din", n=300)
    outdir = tmp_path / "exh"
    rc = main([
        "exhaustive", "--trace", str(trace_path),
        "--isize", "512,65536", "--ibsize", "8", "--irepl", "l",
        "--iassoc", "1,64", "--ifetch", "d", "--dsize", "512",
        "--dbsize", "8", "--drepl", "l", "--dassoc", "1", "--dfetch", "d",
        "--dwback", "a", "-o", str(outdir),
    ])
    assert rc == 0
    ranked = read_csv(outdir / "ranked.csv")
    infeasible = read_csv(outdir / "infeasible.csv")
    # 512B with 64 ways x 8B blocks is feasible (1 set); all 4 points rank
    assert len(ranked) + len(infeasible) == 4
    fits = [float(r["fitness"]) for r in ranked]
    assert fits == sorted(fits)
