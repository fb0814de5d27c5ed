"""Command-line driver.

Subcommands: geometry-check, oracle-check, optimize and sweep. Exit codes:
0 success, 1 validation failure, 2 usage error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .amplitudes import RadialIntegrals
from .bell import SETTINGS_COLUMNS, TSIRELSON
from .config import build_configuration, geometry, geometry_checks, report
from .errors import TruncationError
from .optimizer import (
    DEFAULT_BUDGET, DEFAULT_RESTARTS, OptimizationResult, maximize_chsh, phi_grid, sweep,
)
from .oracle import DEFAULT_CUTOFF, compare_suite

EXIT_OK, EXIT_VALIDATION, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
DEFAULT_FIXTURE_SEED = 42
ORACLE_TOL = 1e-7
LOSSY_TOL = 1e-6
LOSSY_ETAS = (0.6, 0.8)
CSV_HEADER = ["phi", "eta", "max_abs_B", "lambda", "seed", "evaluations", *SETTINGS_COLUMNS]


@dataclass(frozen=True)
class SweepRecord:
    phi: float
    eta: float
    max_abs_B: float
    settings: tuple  # flattened MeasurementSettings, 20 floats
    lam: float
    seed: int
    evaluations: int

    def __post_init__(self):
        if not 0 <= self.max_abs_B <= TSIRELSON + 1e-9:
            raise ValueError(f"max_abs_B={self.max_abs_B} outside [0, 2 sqrt 2]")
        if len(self.settings) != len(SETTINGS_COLUMNS):
            raise ValueError(f"expected {len(SETTINGS_COLUMNS)} settings, got {len(self.settings)}")

    @classmethod
    def from_result(cls, res: OptimizationResult) -> "SweepRecord":
        return cls(res.phi, res.eta, res.best_value, tuple(float(v) for v in res.best_settings.flat()),
                   res.best_lambda, res.seed, res.evaluations)

    def row(self) -> list[str]:
        nums = [self.phi, self.eta, self.max_abs_B, self.lam]
        return [repr(float(v)) for v in nums] + [str(self.seed), str(self.evaluations)] + [
            repr(float(v)) for v in self.settings
        ]

    @classmethod
    def from_row(cls, row: dict) -> "SweepRecord":
        return cls(float(row["phi"]), float(row["eta"]), float(row["max_abs_B"]),
                   tuple(float(row[c]) for c in SETTINGS_COLUMNS), float(row["lambda"]),
                   int(row["seed"]), int(row["evaluations"]))


def write_csv(records, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for rec in records:
            w.writerow(rec.row())


def read_csv(path) -> list[SweepRecord]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"unexpected CSV header in {path}")
        return [SweepRecord.from_row(r) for r in reader]


PLOT_TEMPLATE = '''"""Plot max |<B>| against phi, one curve per eta. Generated file."""
import math

import matplotlib.pyplot as plt

DATA = {data!r}

fig, ax = plt.subplots(figsize=(6, 4))
for eta in sorted(DATA):
    phis, values = zip(*sorted(DATA[eta]))
    ax.plot(phis, values, marker=".", label=f"eta = {{eta:g}}")
ax.axhline(2.0, color="k", lw=0.8, ls="--", label="classical bound")
ax.axhline(2 * math.sqrt(2), color="k", lw=0.8, ls=":", label="Tsirelson bound")
ax.set_xlabel("phi")
ax.set_ylabel("max |<B>|")
ax.legend(fontsize="small")
fig.tight_layout()
fig.savefig({image!r}, dpi=150)
'''


def plot_script(records, image: str) -> str:
    data: dict[float, list] = {}
    for r in records:
        data.setdefault(r.eta, []).append((r.phi, r.max_abs_B))
    return PLOT_TEMPLATE.format(data=data, image=image)


def _eta_list(text: str) -> list[float]:
    parts = [p for p in text.split(",") if p.strip()]
    if not parts:
        raise argparse.ArgumentTypeError("eta list is empty")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad eta list {text!r}") from None


def _complex_pair(text: str) -> complex:
    try:
        re, im = (float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 're,im', got {text!r}") from None
    return complex(re, im)


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _available_cpus() -> int:
    if hasattr(os, "sched_getaffinity"):
        return len(os.sched_getaffinity(0))
    return os.cpu_count() or 1


def _radial(args) -> RadialIntegrals:
    if args.radial is not None:
        try:
            return RadialIntegrals.load(args.radial)
        except OSError as exc:
            raise OSError(f"cannot read radial integrals: {exc}") from exc
    return RadialIntegrals.random(args.fixture_seed)


def _check_writable(path) -> None:
    """Fail before any long computation if ``path`` cannot be written."""
    p = Path(path)
    existed = p.exists()
    with open(p, "a", encoding="utf-8"):
        pass
    if not existed:
        p.unlink()


def cmd_geometry_check(args) -> int:
    geo = geometry()
    if args.perturb_eps_2c:
        # test hook: tilt eps_2c toward k_2c so transversality fails
        eps = dict(geo.eps)
        e = eps["2c"] + args.perturb_eps_2c * geo.k["2c"]
        eps["2c"] = e / np.sqrt(np.vdot(e, e).real)
        geo = dataclasses.replace(geo, eps=eps)
    print(report(build_configuration(_radial(args), 1.0, 0.0, args.d2)))
    print()
    ok = True
    for name, passed, resid in geometry_checks(geo):
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}  (residual {resid:.2e})")
    print("geometry check:", "PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_oracle_check(args) -> int:
    rad = _radial(args)
    suites = [(1.0, args.draws, ORACLE_TOL)] + [(e, args.lossy_draws, LOSSY_TOL) for e in LOSSY_ETAS]
    ok = True
    for eta, draws, tol in suites:
        try:
            dev = compare_suite(rad, draws, eta, args.cutoff, args.seed)
        except TruncationError as exc:
            print(f"FAIL  eta={eta:g}: truncation error: {exc}")
            ok = False
            continue
        passed = dev <= tol
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  eta={eta:g}  draws={draws}  "
              f"max deviation {dev:.3e}  (tolerance {tol:g})")
    print("oracle check:", "PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_optimize(args) -> int:
    if args.out is not None:
        _check_writable(args.out)
    res = maximize_chsh(_radial(args), args.phi, args.eta, args.d2, args.seed, args.restarts, args.budget)
    rec = SweepRecord.from_result(res)
    print(f"phi = {rec.phi!r}")
    print(f"eta = {rec.eta!r}")
    print(f"max_abs_B = {rec.max_abs_B!r}")
    print(f"lambda = {rec.lam!r}")
    print(f"evaluations = {rec.evaluations}")
    for name, v in zip(SETTINGS_COLUMNS, rec.settings):
        print(f"{name} = {v!r}")
    if args.out is not None:
        write_csv([rec], args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    _check_writable(args.out)
    if args.emit_plot is not None:
        _check_writable(args.emit_plot)
    points = sweep(_radial(args), phi_grid(args.phi_grid), args.eta, args.d2, args.seed,
                   args.restarts, args.budget, args.jobs)
    records = [SweepRecord.from_result(p.result) for p in points if p.result is not None]
    failed = [p for p in points if p.error is not None]
    write_csv(records, args.out)
    if args.emit_plot is not None:
        image = str(Path(args.emit_plot).with_suffix(".png"))
        Path(args.emit_plot).write_text(plot_script(records, image), encoding="utf-8")
    for eta in args.eta:
        vals = [r.max_abs_B for r in records if r.eta == eta]
        if vals:
            print(f"eta={eta:g}: min {min(vals):.6f}  max {max(vals):.6f}  over {len(vals)} points")
    for p in failed:
        print(f"point phi={p.phi:g} eta={p.eta:g} failed: {p.error}", file=sys.stderr)
    print(f"wrote {len(records)} records to {args.out}")
    return EXIT_VALIDATION if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--radial", metavar="FILE", help="radial integrals file (KEY = re,im per line)")
    src.add_argument("--fixture-seed", type=int, default=DEFAULT_FIXTURE_SEED,
                     help="seed of the random radial-integral fixture (default %(default)s)")
    common.add_argument("--d2", type=_complex_pair, default=None, metavar="RE,IM",
                        help="override the D5/2 bias parameter")
    common.add_argument("-v", "--verbose", action="store_true")

    opt = argparse.ArgumentParser(add_help=False)
    opt.add_argument("--seed", type=int, default=0)
    opt.add_argument("--restarts", type=_positive_int, default=DEFAULT_RESTARTS)
    opt.add_argument("--budget", type=_positive_int, default=DEFAULT_BUDGET,
                     help="evaluations per CMA-ES run (default %(default)s)")

    p = argparse.ArgumentParser(prog="ccibell", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("geometry-check", parents=[common], help="print geometry and check invariants")
    g.add_argument("--perturb-eps-2c", type=float, default=0.0, help=argparse.SUPPRESS)
    g.set_defaults(func=cmd_geometry_check)

    o = sub.add_parser("oracle-check", parents=[common], help="compare closed forms with the Fock-space oracle")
    o.add_argument("--cutoff", type=_positive_int, default=DEFAULT_CUTOFF)
    o.add_argument("--draws", type=_positive_int, default=100)
    o.add_argument("--lossy-draws", type=_positive_int, default=20)
    o.add_argument("--seed", type=int, default=0)
    o.set_defaults(func=cmd_oracle_check)

    m = sub.add_parser("optimize", parents=[common, opt], help="maximize |<B>| at one (phi, eta)")
    m.add_argument("--phi", type=float, required=True)
    m.add_argument("--eta", type=float, default=1.0)
    m.add_argument("--out", metavar="CSV", default=None)
    m.set_defaults(func=cmd_optimize)

    s = sub.add_parser("sweep", parents=[common, opt], help="maximize |<B>| over a phi grid and eta list")
    s.add_argument("--phi-grid", type=_positive_int, default=64, metavar="N")
    s.add_argument("--eta", type=_eta_list, default=[1.0], metavar="A,B,C")
    s.add_argument("--jobs", type=_positive_int, default=_available_cpus(),
                   help="worker processes (default: available CPUs, %(default)s here)")
    s.add_argument("--out", metavar="CSV", default="sweep.csv")
    s.add_argument("--emit-plot", metavar="PY", default=None, help="write a matplotlib script")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:  # domain errors from the physics layers
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
