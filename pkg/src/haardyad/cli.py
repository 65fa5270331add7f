"""Command-line interface.

Two entry styles share the executable:

* suites: ``haardyad <suite> [--seed S] [--json [PATH]] [--config FILE]``
  with suite one of lattice, haar, kernel, figiel, martingale, bourgain,
  all. Exit code 0 iff every check passes. ``--list`` enumerates checks.
* module operations: ``haardyad lattice sample|pibad``, ``haardyad haar
  roundtrip``, ``haardyad kernel decay``, ``haardyad figiel verify``,
  ``haardyad martingale partition|ratio``, ``haardyad bourgain
  smoothing|translate|stein``.

The default seed comes from the HAARDYAD_SEED environment variable.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from fractions import Fraction

import numpy as np

from . import bourgain as bg
from . import figiel, haar
from . import kernel as kmod
from . import lattice as lat
from . import martingale as mart
from .checks import SUITES
from .errors import ConfigError, HaardyadError
from .harness import DEFAULT_SEED_ENV, ExperimentConfig, list_checks, run


def _default_seed() -> int:
    return int(os.environ.get(DEFAULT_SEED_ENV, "0"))


def _emit(payload: dict, dest: str | None):
    text = json.dumps(payload, indent=2, sort_keys=True)
    if dest is None or dest == "-":
        print(text)
    else:
        with open(dest, "w") as fh:
            fh.write(text + "\n")


def _parse_levels(spec: str) -> tuple[int, int]:
    try:
        lo, hi = spec.split("..")
        return int(lo), int(hi)
    except ValueError:
        raise ConfigError(f"bad level range {spec!r}; expected JMIN..JMAX") from None


# ---------------------------------------------------------------------------
# suite mode


def _run_suite(argv: list[str]) -> int:
    parser = argparse.ArgumentParser(prog="haardyad",
                                     description="run a named check suite")
    parser.add_argument("suite", choices=sorted(SUITES))
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--json", nargs="?", const="-", default=None,
                        metavar="PATH")
    parser.add_argument("--config", default=None, metavar="FILE")
    parser.add_argument("--list", action="store_true",
                        help="list the suite's checks and exit")
    args = parser.parse_args(argv)
    if args.list:
        for name in list_checks(args.suite):
            print(name)
        return 0
    overrides = {"seed": args.seed}
    if args.config:
        config = ExperimentConfig.from_file(args.config, **overrides)
    else:
        config = ExperimentConfig(seed=args.seed if args.seed is not None
                                  else _default_seed())

    def progress(name, result):
        mark = "pass" if result.passed else "FAIL"
        print(f"[{mark}] {name}", file=sys.stderr)

    report = run(config, args.suite, progress=progress)
    text = report.to_json(None if args.json in (None, "-") else args.json)
    if args.json == "-" or args.json is None:
        print(text)
    return 0 if report.overall_pass else 1


# ---------------------------------------------------------------------------
# module operations


def _op_lattice_sample(args) -> int:
    j_min, j_max = _parse_levels(args.levels)
    beta = lat.sample_beta(args.seed, j_min, j_max, args.n)
    payload = {
        "experiment": "lattice.sample",
        "seed": args.seed,
        "levels": [j_min, j_max],
        "n": args.n,
        "bits": beta.bits.tolist(),
    }
    _emit(payload, args.json)
    return 0


def _op_lattice_pibad(args) -> int:
    params = lat.BadnessParams(args.r if args.r is not None
                               else lat.default_r(args.n, Fraction(args.gamma)),
                               Fraction(args.gamma))
    out = lat.estimate_pi_bad(args.n, params, args.trials, args.seed)
    payload = {
        "experiment": "lattice.pibad",
        "n": args.n,
        "r": params.r,
        "gamma": str(params.gamma),
        "trials": args.trials,
        "seed": args.seed,
        "estimate": out.estimate.mean,
        "stderr": out.estimate.standard_error,
        "bound": out.bound,
        "tail_bound": out.tail_bound,
        "pass": out.passes_bound,
    }
    _emit(payload, args.json)
    return 0


def _op_haar_roundtrip(args) -> int:
    if args.n != 1:
        raise ConfigError("the roundtrip driver ships for n = 1")
    levels = int(np.log2(args.cells))
    if 2 ** levels != args.cells:
        raise ConfigError("cells must be a power of two")
    box = lat.Box((0,), (args.cells,))
    system = lat.DyadicSystem(lat.ShiftParameter.zero(0, levels, 1), box)
    f = haar.random_grid_function(box, levels, seed=args.seed)
    coeffs = haar.analyze(f, system)
    g = haar.synthesize(coeffs, system, box=box)
    err = float(np.abs(g.values - f.values).max())
    if args.dump:
        with open(args.dump, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["level", "corner", "theta", "value"])
            for j in range(system.j_min, system.j_max):
                arr = coeffs.details[j]
                size = system.size(j)
                for idx in range(arr.shape[0]):
                    writer.writerow([j, coeffs.box.lo[0] + idx * size, 1,
                                     arr[idx, 0, 0]])
    payload = {"experiment": "haar.roundtrip", "cells": args.cells,
               "seed": args.seed, "max_error": err, "pass": err <= 1e-12}
    _emit(payload, args.json)
    return 0


def _op_kernel_decay(args) -> int:
    kern = kmod.kernel_by_name(args.kernel)
    cube = lat.DyadicCube(0, (0,) * kern.n)
    rep = kmod.decay_check(kern, cube, args.mmax)
    summ = kmod.summability_check(rep)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"m{i}" for i in range(kern.n)]
                            + [f"eta{i}" for i in range(kern.n)]
                            + [f"theta{i}" for i in range(kern.n)] + ["value"])
            for m, eta, th, value in rep.table.to_rows():
                writer.writerow(list(m) + list(eta) + list(th) + [value])
    payload = {
        "experiment": "kernel.decay",
        "kernel": kern.name,
        "m_max": args.mmax,
        "fitted_slope": rep.fitted_slope,
        "ls_constant": rep.ls_constant,
        "envelope_constant": rep.fitted_constant,
        "envelope_holds": rep.envelope_holds(),
        "summability_partial": summ.partial_sum,
        "summability_tail": summ.tail_bound,
    }
    _emit(payload, args.json)
    return 0


def _op_figiel_verify(args) -> int:
    kern = kmod.kernel_by_name(args.kernel)
    if kern.n != 1:
        raise ConfigError("the verify driver ships for n = 1")
    j0, j1 = _parse_levels(args.levels)
    fine = 1 << (j1 - j0)
    window = lat.Box((0,), ((4 * args.mmax + 12) * fine,))
    system = lat.DyadicSystem(
        lat.ShiftParameter.zero(j0 - 2, j1, 1), window)
    sup = lat.Box((args.mmax * fine,), ((args.mmax + 12) * fine,))
    f = haar.random_grid_function(sup, j1, seed=args.seed, stream=1)
    g = haar.random_grid_function(sup, j1, seed=args.seed, stream=2)
    fw, gw = haar.pad_to(f, window), haar.pad_to(g, window)
    direct = kmod.pairing(gw, kern, fw)
    gaps = {}
    for mm in (args.mmax // 2, args.mmax):
        terms = figiel.decompose(kern, f, g, system, mm, coarse_level=j0)
        gaps[mm] = abs(terms.total - direct)
    from .checks import _a_tail_bound
    tail = _a_tail_bound(kern, f, g, system, args.mmax, j0)
    params = lat.BadnessParams(3, Fraction(1, 2))
    avg = figiel.average_good_identity(
        lambda cube, system: 1.0, params, n=1, level=0,
        levels_above=max(3, args.enumerate_levels - 1), levels_below=1,
        ref_span=4)
    payload = {
        "experiment": "figiel.verify",
        "kernel": kern.name,
        "m_max": args.mmax,
        "direct": direct,
        "gaps": {str(k): v for k, v in gaps.items()},
        "gap_ratio": gaps[args.mmax // 2] / gaps[args.mmax],
        "tail_bound": tail,
        "averaging_lhs_minus_rhs": avg["lhs"] - avg["rhs"],
        # the gap is a random signed tail sum; the robust gate is the
        # analytic bound on the dropped translate mass
        "pass": bool(gaps[args.mmax] <= tail
                     and abs(avg["lhs"] - avg["rhs"]) <= 1e-12),
    }
    _emit(payload, args.json)
    return 0 if payload["pass"] else 1


def _op_martingale_partition(args) -> int:
    j0, j1 = _parse_levels(args.levels)
    params = lat.BadnessParams(args.r, Fraction(args.gamma))
    levels = j1 - j0
    width = 2 << levels
    margin = (abs(args.m) + 8) * (1 << levels)
    window = lat.Box((-margin,), (width + margin,))
    system = lat.DyadicSystem(
        lat.ShiftParameter.zero(j0 - max(4, args.r), j1, 1), window)
    inner = lat.Box((0,), (width,))
    good = mart.collect_good_cubes(system, params, range(j0, j1), inner,
                                   k_max=max(4, args.r))
    psi = mart.ShiftMap.constant((args.m,))
    big_m = mart.shift_complexity(psi, params)
    classes = mart.partition(good, psi, params, system, inner)
    pairs_ok = True
    if args.check_pairs:
        pairs_ok = all(c.check_all_pairs(psi, system) for c in classes)
    payload = {
        "experiment": "martingale.partition",
        "m": args.m, "r": params.r, "gamma": str(params.gamma),
        "good_cubes": len(good),
        "M": big_m,
        "class_count": len(classes),
        "expected_class_count": 2 * (big_m + 1),
        "class_sizes": [len(c.cubes) for c in classes],
        "pairs_checked": bool(args.check_pairs),
        "pass": bool(len(classes) == 2 * (big_m + 1) and pairs_ok
                     and sum(len(c.cubes) for c in classes) == len(good)),
    }
    _emit(payload, args.json)
    return 0 if payload["pass"] else 1


def _op_martingale_ratio(args) -> int:
    est = mart.estimate_transform_ratio(args.p, d=args.d, trials=args.trials,
                                        seed=args.seed)
    bound = max(args.p, args.p / (args.p - 1.0)) - 1.0 + 0.05
    payload = {
        "experiment": "martingale.ratio",
        "p": args.p, "d": args.d, "trials": args.trials, "seed": args.seed,
        "max_ratio": est.value,
        "stderr": est.standard_error,
        "skipped": est.skipped,
        "bound": bound,
        "pass": est.value <= bound,
    }
    _emit(payload, args.json)
    return 0 if payload["pass"] else 1


def _op_bourgain_smoothing(args) -> int:
    size = 1 << args.enumerate
    box = lat.Box((0,), (size * 20,))
    f = haar.random_grid_function(lat.Box((size * 7,), (size * 13,)),
                                  args.j + args.enumerate, seed=args.seed)
    fw = haar.pad_to(f, box)
    rep = bg.smoothing_average(fw, args.j, args.m, args.enumerate)
    payload = {
        "experiment": "bourgain.smoothing",
        "j": args.j, "m": args.m, "enumerated_levels": args.enumerate,
        "seed": args.seed,
        "max_deviation": rep["max_deviation"],
        "pass": rep["max_deviation"] <= 1e-10,
    }
    _emit(payload, args.json)
    return 0 if payload["pass"] else 1


def _op_bourgain_translate(args) -> int:
    ys = [float(v) for v in args.ys.split(",")]
    signs = bg.SignEnsemble("exhaustive") if args.p == 2.0 else \
        bg.SignEnsemble("sampled", count=args.sign_samples, seed=args.seed)
    rep = bg.translation_experiment(args.p, args.J, ys, seed=args.seed,
                                    signs=signs)
    payload = {
        "experiment": "bourgain.translate",
        "p": args.p, "J": args.J, "seed": args.seed,
        "rows": rep["rows"],
    }
    _emit(payload, args.json)
    return 0


def _op_bourgain_stein(args) -> int:
    rep = bg.stein_check(args.p, args.J, seed=args.seed)
    bound = 1.0 + 1e-12 if args.p == 2.0 else \
        max(args.p, args.p / (args.p - 1.0)) - 1.0 + 0.05
    payload = {
        "experiment": "bourgain.stein",
        "p": args.p, "J": args.J, "seed": args.seed,
        "lhs": rep["lhs"], "rhs": rep["rhs"], "ratio": rep["ratio"],
        "bound": bound,
        "pass": rep["ratio"] <= bound,
    }
    _emit(payload, args.json)
    return 0 if payload["pass"] else 1


def _module_parser(module: str, op: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog=f"haardyad {module} {op}")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--json", nargs="?", const="-", default=None, metavar="PATH")
    if (module, op) == ("lattice", "sample"):
        p.add_argument("--levels", default="0..16")
        p.add_argument("--n", type=int, default=1)
    elif (module, op) == ("lattice", "pibad"):
        p.add_argument("--r", type=int, default=None)
        p.add_argument("--gamma", default="1/2")
        p.add_argument("--trials", type=int, default=100_000)
        p.add_argument("--n", type=int, default=1)
    elif (module, op) == ("haar", "roundtrip"):
        p.add_argument("--cells", type=int, default=1024)
        p.add_argument("--n", type=int, default=1)
        p.add_argument("--dump", default=None, metavar="CSV")
    elif (module, op) == ("kernel", "decay"):
        p.add_argument("--kernel", default="hilbert")
        p.add_argument("--mmax", type=int, default=64)
        p.add_argument("--csv", default=None, metavar="CSV")
    elif (module, op) == ("figiel", "verify"):
        p.add_argument("--kernel", default="hilbert")
        p.add_argument("--mmax", type=int, default=16)
        p.add_argument("--levels", default="0..6")
        p.add_argument("--enumerate-levels", dest="enumerate_levels",
                       type=int, default=4)
    elif (module, op) == ("martingale", "partition"):
        p.add_argument("--m", type=int, default=8)
        p.add_argument("--r", type=int, default=4)
        p.add_argument("--gamma", default="1/2")
        p.add_argument("--levels", default="0..8")
        p.add_argument("--check-pairs", dest="check_pairs",
                       action="store_true")
    elif (module, op) == ("martingale", "ratio"):
        p.add_argument("--p", type=float, default=4.0)
        p.add_argument("--d", type=int, default=1)
        p.add_argument("--trials", type=int, default=1000)
    elif (module, op) == ("bourgain", "smoothing"):
        p.add_argument("--j", type=int, default=0)
        p.add_argument("--m", type=int, default=5)
        p.add_argument("--enumerate", type=int, default=6)
    elif (module, op) == ("bourgain", "translate"):
        p.add_argument("--p", type=float, default=4.0)
        p.add_argument("--J", type=int, default=6)
        p.add_argument("--ys", default="2,8,32,128")
        p.add_argument("--sign-samples", dest="sign_samples", type=int,
                       default=1000)
    elif (module, op) == ("bourgain", "stein"):
        p.add_argument("--p", type=float, default=4.0)
        p.add_argument("--J", type=int, default=6)
    return p


_OPS = {
    ("lattice", "sample"): _op_lattice_sample,
    ("lattice", "pibad"): _op_lattice_pibad,
    ("haar", "roundtrip"): _op_haar_roundtrip,
    ("kernel", "decay"): _op_kernel_decay,
    ("figiel", "verify"): _op_figiel_verify,
    ("martingale", "partition"): _op_martingale_partition,
    ("martingale", "ratio"): _op_martingale_ratio,
    ("bourgain", "smoothing"): _op_bourgain_smoothing,
    ("bourgain", "translate"): _op_bourgain_translate,
    ("bourgain", "stein"): _op_bourgain_stein,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ("-h", "--help"):
        print(__doc__)
        return 0
    if argv[0] == "--list":
        for suite in sorted(SUITES):
            print(f"{suite}: {', '.join(SUITES[suite])}")
        return 0
    try:
        head = argv[0]
        if len(argv) > 1 and (head, argv[1]) in _OPS:
            parser = _module_parser(head, argv[1])
            args = parser.parse_args(argv[2:])
            return _OPS[(head, argv[1])](args)
        if head in SUITES:
            return _run_suite(argv)
        raise ConfigError(
            f"unknown command {head!r}; suites: {sorted(SUITES)}; "
            f"ops: {sorted(' '.join(k) for k in _OPS)}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except HaardyadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
