"""Command-line entry point: ``gtp tables | verify | bench``.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import sys

import numpy as np

from . import conversion, so3

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("gtp")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def cmd_tables(L_max: int, cache_dir=None) -> list:
    """Write validated cache files for ``L = 0..L_max``; returns their paths."""
    if not 0 <= L_max <= conversion.TABLE_CAP:
        raise ValueError(f"--lmax must lie in [0, {conversion.TABLE_CAP}]")
    rng = np.random.default_rng(0)
    paths = []
    for L in range(L_max + 1):
        path = conversion.cache_path(L, cache_dir)
        table = conversion.build_conversion_table(L)
        data = conversion.table_to_bytes(table)
        if not path.exists() or path.read_bytes() != data:
            conversion.write_table(table, path)
        check = conversion.read_table(path, expect_L=L)
        x = rng.standard_normal(so3.num_coeffs(L))
        back = conversion.fourier_to_sh(conversion.sh_to_fourier(x, check), check, L)
        resid = float(np.max(np.abs(back - x)))
        if resid > 1e-10:
            raise RuntimeError(f"{path}: round-trip residual {resid:.3e}")
        log.info("%s ok (%d y, %d z entries)", path, len(check.y_entries), len(check.z_entries))
        paths.append(path)
    return paths


def cmd_verify(level: str, seed: int = 0, inject_fault: bool = False, out=sys.stdout) -> int:
    from . import verify

    ctx = verify.injected_sign_flip(range(0, 17)) if inject_fault else contextlib.nullcontext()
    with ctx:
        results = verify.run_suite(level, seed)
    width = max(len(r.name) for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.name:<{width}}  residual={r.residual:.3e}  tol={r.tol:.1e}"
              f"  ({r.seconds:.2f}s)", file=out)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed", file=out)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_bench(cfg, out_path) -> list[dict]:
    from . import bench

    rows = bench.run(cfg)
    bench.write_csv(rows, out_path)
    return rows


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gtp", description="Gaunt tensor products via 2D FFTs")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("tables", help="precompute coefficient cache files")
    t.add_argument("--lmax", type=int, required=True)
    t.add_argument("--cache", default=None, help="cache directory (default: $GTP_CACHE_DIR)")

    v = sub.add_parser("verify", help="run the correctness suites")
    v.add_argument("--level", choices=("quick", "full"), default="quick")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)

    b = sub.add_parser("bench", help="time fast paths against references")
    b.add_argument("--op", required=True, choices=("feature_interaction", "convolution", "many_body"))
    b.add_argument("--l", dest="L_list", type=_int_list, required=True)
    b.add_argument("--channels", type=int, default=1)
    b.add_argument("--batch", type=int, default=1)
    b.add_argument("--nu", type=int, default=2)
    b.add_argument("--repeats", type=int, default=5)
    b.add_argument("--warmup", type=int, default=1)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--threads", type=int, default=1)
    b.add_argument("--paths", type=lambda s: tuple(s.split(",")), default=None)
    b.add_argument("--out", required=True)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "tables":
            try:
                cmd_tables(args.lmax, args.cache)
            except ValueError as exc:
                parser.error(str(exc))
            return EXIT_OK
        if args.command == "verify":
            return cmd_verify(args.level, args.seed, args.inject_fault)
        from .bench import BenchConfig

        try:
            cfg = BenchConfig(args.op, args.L_list, args.channels, args.batch, args.nu,
                              args.repeats, args.warmup, args.seed, args.threads, args.paths)
        except ValueError as exc:
            parser.error(str(exc))
        cmd_bench(cfg, args.out)
        return EXIT_OK
    except OSError as exc:
        print(f"gtp: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
