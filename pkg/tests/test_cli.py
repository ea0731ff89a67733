import csv
import io
import subprocess
import sys

import pytest

from gtp import bench, cli, conversion
from gtp.bench import BenchConfig


def _run(*args, env_cache=None):
    import os

    env = dict(os.environ)
    if env_cache is not None:
        env["GTP_CACHE_DIR"] = str(env_cache)
    return subprocess.run([sys.executable, "-m", "gtp.cli", *args], capture_output=True,
                          text=True, env=env)


# --- tables ----------------------------------------------------------------

def test_tables_writes_valid_files(tmp_path):
    assert cli.main(["tables", "--lmax", "4", "--cache", str(tmp_path)]) == 0
    files = sorted(tmp_path.glob("*.gntb"))
    assert [f.name for f in files] == [f"gaunt_L{L:03d}.gntb" for L in range(5)]
    for L, f in enumerate(files):
        assert conversion.read_table(f, expect_L=L).L == L


def test_tables_rerun_is_byte_identical(tmp_path):
    cli.main(["tables", "--lmax", "3", "--cache", str(tmp_path)])
    before = {f.name: f.read_bytes() for f in tmp_path.glob("*.gntb")}
    cli.main(["tables", "--lmax", "3", "--cache", str(tmp_path)])
    after = {f.name: f.read_bytes() for f in tmp_path.glob("*.gntb")}
    assert before == after


def test_tables_rebuilds_corrupted_file(tmp_path):
    cli.main(["tables", "--lmax", "2", "--cache", str(tmp_path)])
    f = tmp_path / "gaunt_L002.gntb"
    good = f.read_bytes()
    f.write_bytes(good[:30] + b"\x00\x01" + good[32:])
    cli.main(["tables", "--lmax", "2", "--cache", str(tmp_path)])
    assert f.read_bytes() == good


def test_tables_usage_error(tmp_path):
    r = _run("tables", "--lmax", "999", env_cache=tmp_path)
    assert r.returncode == 2


def test_tables_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    r = _run("tables", "--lmax", "1", "--cache", str(blocker / "sub"))
    assert r.returncode == 3
    assert "I/O error" in r.stderr


def test_env_cache_dir(tmp_path):
    r = _run("tables", "--lmax", "1", env_cache=tmp_path)
    assert r.returncode == 0
    assert (tmp_path / "gaunt_L001.gntb").exists()


# --- verify ----------------------------------------------------------------

def test_verify_quick_passes():
    out = io.StringIO()
    assert cli.cmd_verify("quick", out=out) == 0
    lines = out.getvalue().splitlines()
    assert all(line.startswith("PASS") for line in lines[:-1])
    assert "residual=" in lines[0] and "tol=" in lines[0]


def test_verify_detects_injected_fault():
    out = io.StringIO()
    assert cli.cmd_verify("quick", inject_fault=True, out=out) == 1
    assert "FAIL" in out.getvalue()
    # the fault is scoped to the check run
    assert cli.cmd_verify("quick", out=io.StringIO()) == 0


@pytest.mark.slow
def test_verify_full_passes():
    assert cli.cmd_verify("full", out=io.StringIO()) == 0


def test_verify_exit_code_via_subprocess(tmp_path):
    assert _run("verify", "--level", "quick", env_cache=tmp_path).returncode == 0
    assert _run("verify", "--inject-fault", env_cache=tmp_path).returncode == 1


# --- bench -----------------------------------------------------------------

def test_bench_row_arithmetic(tmp_path):
    out = tmp_path / "fi.csv"
    assert cli.main(["bench", "--op", "feature_interaction", "--l", "2,4,8", "--repeats", "5",
                     "--out", str(out)]) == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == bench.CSV_COLUMNS
    assert len(rows) == 2 * 3 * (5 + 1)
    med = [r for r in rows if r["repeat"] == "-1"]
    assert len(med) == 6


def test_bench_seed_determines_work(tmp_path):
    cfg = BenchConfig("convolution", [2, 3], repeats=3, seed=7)
    a = [r["work_ops"] for r in bench.run(cfg)]
    b = [r["work_ops"] for r in bench.run(cfg)]
    assert a == b


def test_bench_many_body_monotone(tmp_path):
    rows = bench.run(BenchConfig("many_body", [1, 2, 3], nu=3, repeats=5))
    for path in ("tree", "leftfold"):
        work = bench.medians(rows, path, "work_ops")
        assert work[1] < work[2] < work[3]
        wall = bench.medians(rows, path)
        assert wall[1] < wall[3]


def test_bench_csv_roundtrip(tmp_path):
    rows = bench.run(BenchConfig("feature_interaction", [1, 2], repeats=3))
    bench.write_csv(rows, tmp_path / "r.csv")
    back = bench.read_csv(tmp_path / "r.csv")
    assert back == rows


@pytest.mark.parametrize("kwargs", [
    dict(op_class="nope", L_list=[2]),
    dict(op_class="many_body", L_list=[]),
    dict(op_class="many_body", L_list=[2], repeats=1),
    dict(op_class="many_body", L_list=[2], nu=0),
    dict(op_class="convolution", L_list=[2], paths=("tree",)),
    dict(op_class="convolution", L_list=[2], seed=-1),
])
def test_bench_config_validation(kwargs):
    with pytest.raises(ValueError):
        BenchConfig(**kwargs)


def test_bench_usage_error(tmp_path):
    r = _run("bench", "--op", "convolution", "--l", "x,y", "--out", str(tmp_path / "o.csv"))
    assert r.returncode == 2


def test_slope_helper():
    rows = [dict(path="p", L=L, repeat=-1, work_ops=L ** 3) for L in (2, 4, 8)]
    assert bench.loglog_slope(rows, "p", "work_ops") == pytest.approx(3.0)
