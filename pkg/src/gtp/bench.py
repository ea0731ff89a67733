"""Timing harness comparing fast paths with their references.

Rows are written as CSV with the columns in ``CSV_COLUMNS``. For every
``(path, L)`` there is one row per timed repeat (``repeat = 0..R-1``) and a
final row holding the median (``repeat = -1``). ``work_ops`` is the
multiply-add count of one call, measured by an instrumented run that also
warms every coefficient cache before timing starts.
"""

from __future__ import annotations

import csv
import logging
import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from . import so3
from .conversion import WorkCounter, get_table
from .convolution import dense_convolution, edge_frame, equiv_convolution
from .many_body import MAX_BODY_ORDER, leftfold_tp, multi_tp
from .oracle import cg_tp_reference, gaunt_tp_reference
from .tensor_product import CHANNEL_WISE, gaunt_tp_batch

log = logging.getLogger(__name__)

CSV_COLUMNS = ["op_class", "path", "L", "channels", "batch", "nu", "repeat", "wall_ns", "work_ops"]

OP_CLASSES = ("feature_interaction", "convolution", "many_body")
DEFAULT_PATHS = {
    "feature_interaction": ("gaunt_fft", "oracle_gaunt"),
    "convolution": ("sparse_filter", "dense_filter"),
    "many_body": ("tree", "leftfold"),
}
ALLOWED_PATHS = {
    "feature_interaction": ("gaunt_fft", "oracle_gaunt", "oracle_cg"),
    "convolution": ("sparse_filter", "dense_filter"),
    "many_body": ("tree", "leftfold"),
}


@dataclass
class BenchConfig:
    op_class: str
    L_list: list[int]
    channels: int = 1
    batch: int = 1
    nu: int = 2
    repeats: int = 5
    warmup: int = 1
    seed: int = 0
    threads: int = 1
    paths: tuple[str, ...] | None = field(default=None)

    def __post_init__(self):
        if self.op_class not in OP_CLASSES:
            raise ValueError(f"op_class must be one of {OP_CLASSES}")
        if not self.L_list or any(not 0 <= L <= so3.MAX_DEGREE for L in self.L_list):
            raise ValueError(f"degrees must lie in [0, {so3.MAX_DEGREE}]")
        if self.channels < 1 or self.batch < 1 or self.threads < 1:
            raise ValueError("channels, batch and threads must be positive")
        if self.repeats < 3:
            raise ValueError("repeats must be at least 3")
        if self.warmup < 0:
            raise ValueError("warmup must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not 1 <= self.nu <= MAX_BODY_ORDER:
            raise ValueError(f"nu must lie in [1, {MAX_BODY_ORDER}]")
        if self.paths is None:
            self.paths = DEFAULT_PATHS[self.op_class]
        bad = set(self.paths) - set(ALLOWED_PATHS[self.op_class])
        if bad:
            raise ValueError(f"paths {sorted(bad)} not available for {self.op_class}")


def _inputs(cfg: BenchConfig, L: int, rng: np.random.Generator):
    n = so3.num_coeffs(L)
    shape = (cfg.batch, cfg.channels, n)
    if cfg.op_class == "feature_interaction":
        return rng.standard_normal(shape), rng.standard_normal(shape)
    if cfg.op_class == "convolution":
        x = rng.standard_normal(shape)
        edges = [edge_frame(np.zeros(3), rng.standard_normal(3)) for _ in range(cfg.batch)]
        h = rng.standard_normal(L + 1)
        return x, edges, h
    return (rng.standard_normal(shape),)


def _call(cfg: BenchConfig, path: str, L: int, inputs, counter=None):
    if path == "gaunt_fft":
        X, Y = inputs
        return gaunt_tp_batch(X, Y, CHANNEL_WISE, L_out=L, threads=cfg.threads, counter=counter)
    if path == "oracle_gaunt":
        X, Y = inputs
        return gaunt_tp_reference(X, Y, L, counter=counter)
    if path == "oracle_cg":
        X, Y = inputs
        return cg_tp_reference(X, Y, L, counter=counter)
    if path in ("sparse_filter", "dense_filter"):
        x, edges, h = inputs
        fn = equiv_convolution if path == "sparse_filter" else dense_convolution
        return [fn(x[b], e, h, L, counter=counter) for b, e in enumerate(edges)]
    (x,) = inputs
    fn = multi_tp if path == "tree" else leftfold_tp
    return fn([x] * cfg.nu, L, counter=counter)


def run(cfg: BenchConfig) -> list[dict]:
    """Execute the benchmark and return rows in ``CSV_COLUMNS`` order."""
    rows = []
    for L in cfg.L_list:
        # the many-body paths need tables for nu * L, the others for 2L
        get_table(max(2, cfg.nu) * L if cfg.op_class == "many_body" else 2 * L)
        for path in cfg.paths:
            rng = np.random.default_rng([cfg.seed, L])
            inputs = _inputs(cfg, L, rng)
            counter = WorkCounter()
            _call(cfg, path, L, inputs, counter)
            for _ in range(cfg.warmup):
                _call(cfg, path, L, inputs)
            times = []
            base = dict(op_class=cfg.op_class, path=path, L=L, channels=cfg.channels,
                        batch=cfg.batch, nu=cfg.nu if cfg.op_class == "many_body" else 0)
            for rep in range(cfg.repeats):
                t0 = time.perf_counter_ns()
                _call(cfg, path, L, inputs)
                dt = time.perf_counter_ns() - t0
                times.append(dt)
                rows.append(dict(base, repeat=rep, wall_ns=dt, work_ops=counter.ops))
            rows.append(dict(base, repeat=-1, wall_ns=int(statistics.median(times)),
                             work_ops=counter.ops))
            log.info("%s L=%d %s: median %.3f ms", cfg.op_class, L, path,
                     statistics.median(times) / 1e6)
    return rows


def write_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        w.writerows(rows)


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for k in ("L", "channels", "batch", "nu", "repeat", "wall_ns", "work_ops"):
            r[k] = int(r[k])
    return rows


def loglog_slope(rows: list[dict], path: str, column: str, L_values=None) -> float:
    """Least-squares slope of ``log(column)`` against ``log(L)`` over median rows."""
    pts = sorted(
        (r["L"], r[column]) for r in rows
        if r["path"] == path and r["repeat"] == -1 and (L_values is None or r["L"] in L_values)
    )
    if len(pts) < 2:
        raise ValueError(f"need at least two degrees for path {path!r}")
    L, v = np.array(pts, dtype=float).T
    return float(np.polyfit(np.log(L), np.log(v), 1)[0])


def medians(rows: list[dict], path: str, column: str = "wall_ns") -> dict[int, int]:
    return {r["L"]: r[column] for r in rows if r["path"] == path and r["repeat"] == -1}
