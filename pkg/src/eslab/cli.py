"""Command-line front end.

Verbs map one-to-one onto the experiment harness: `sweep` runs the error
measures over a (kind, n, c, lambda, translation) grid, `perturb-ref` runs
the perturbed-identity reference, `density` writes the single-mutation and
winning-value histogram comparisons, `order-stat` sweeps with l-th degree
selection, and `hessian-info` prints one family's spectrum facts.

Option precedence: command line > config file (--config) > built-in
defaults. The ES_LAB_SEED environment variable backs --seed.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from .landscape import HessianKind, hadamard_matrix, make_hessian
from .harness import (
    DEFAULT_ITERS,
    DEFAULT_LAMBDAS,
    SweepSpec,
    density_experiment,
    read_config,
    run_perturbation_reference,
    run_sweep,
    write_csv,
    write_histogram_csv,
)
from .metrics import ErrorReport
from .sampling import Best, LthDegree, MuAverage

__all__ = ["parse_args", "dispatch", "main"]

DEFAULT_SEED = 1234

_DEFAULTS = {
    "kind": "H4",
    "dim": "4",
    "cond": "10",
    "lambdas": ",".join(str(v) for v in DEFAULT_LAMBDAS),
    "lam": "1000",
    "iters": str(DEFAULT_ITERS),
    "samples": "100000",
    "mode": "best",
    "ell": "1",
    "mu": "1",
    "translation": "1",
    "epsilon": "0.05",
    "trials": "10000",
    "workers": str(os.cpu_count() or 1),
    "out": "eslab_out.csv",
}


class Command:
    """Parsed verb plus fully resolved options.

    `provided` records which keys the user actually set (config file or
    flag), letting verbs distinguish explicit values from defaults.
    """

    def __init__(self, verb: str, options: dict, provided: set):
        self.verb = verb
        self.options = options
        self.provided = provided


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eslab",
        description="Covariance-learning laboratory for rank-selected Gaussian sampling on quadratic landscapes.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    def add_common(p, flags):
        if "kind" in flags:
            p.add_argument("--kind", help=f"Hessian families, comma-separated H1..H5 (default {_DEFAULTS['kind']})")
        if "dim" in flags:
            p.add_argument("--dim", help=f"dimensions, comma-separated (default {_DEFAULTS['dim']})")
        if "cond" in flags:
            p.add_argument("--cond", help=f"condition numbers, comma-separated (default {_DEFAULTS['cond']})")
        if "lambdas" in flags:
            p.add_argument("--lambdas", help=f"population sizes, comma-separated (default {_DEFAULTS['lambdas']})")
            p.add_argument("--lambda", dest="lambdas_single", metavar="LAMBDA", help="single population size (alias)")
        if "lambda" in flags:
            p.add_argument("--lambda", dest="lam", help=f"population size (default {_DEFAULTS['lam']})")
        if "iters" in flags:
            p.add_argument("--iters", help=f"iterations per cell (default {_DEFAULTS['iters']})")
        if "samples" in flags:
            p.add_argument("--samples", help=f"single-mutation sample count (default {_DEFAULTS['samples']})")
        if "mode" in flags:
            p.add_argument("--mode", choices=["best", "ell", "mu"], help="selection mode (default best)")
            p.add_argument("--ell", help="degree for mode=ell (default 1)")
            p.add_argument("--mu", help="parent count for mode=mu (default 1)")
        if "ell-only" in flags:
            p.add_argument("--ell", help="order-statistic degree (default 1)")
        if "translation" in flags:
            p.add_argument("--translation", help=f"translation scales, comma-separated (default {_DEFAULTS['translation']})")
        if "perturb" in flags:
            p.add_argument("--epsilon", help=f"perturbation scale (default {_DEFAULTS['epsilon']})")
            p.add_argument("--trials", help=f"perturbation trials (default {_DEFAULTS['trials']})")
        p.add_argument("--seed", help=f"master seed (default {DEFAULT_SEED}; env ES_LAB_SEED as fallback)")
        p.add_argument("--workers", help=f"parallel workers (default {_DEFAULTS['workers']})")
        p.add_argument("--out", help=f"output CSV path (default {_DEFAULTS['out']})")
        p.add_argument("--config", help="flat key=value config file; flags override it")

    sweep = sub.add_parser("sweep", help="error-measure sweep over a parameter grid")
    add_common(sweep, {"kind", "dim", "cond", "lambdas", "iters", "mode", "translation"})

    perturb = sub.add_parser("perturb-ref", help="perturbed-identity reference for e1/e2")
    add_common(perturb, {"kind", "dim", "cond", "perturb"})

    density = sub.add_parser("density", help="value-density comparisons against the analytic laws")
    add_common(density, {"kind", "dim", "cond", "lambda", "samples", "iters", "ell-only"})

    order_stat = sub.add_parser("order-stat", help="sweep with l-th degree selection")
    add_common(order_stat, {"kind", "dim", "cond", "lambdas", "iters", "ell-only", "translation"})

    info = sub.add_parser("hessian-info", help="print spectrum facts for one family")
    add_common(info, {"kind", "dim", "cond"})

    return parser


def _resolve(args: argparse.Namespace) -> tuple[dict, set]:
    """Merge CLI values over config-file values over defaults."""
    options = dict(_DEFAULTS)
    options["seed"] = os.environ.get("ES_LAB_SEED", str(DEFAULT_SEED))
    provided = set()
    config_path = getattr(args, "config", None)
    if config_path:
        for key, value in read_config(config_path).items():
            key = key.replace("-", "_")
            if key == "lambda":  # config alias for the density population size
                key = "lam"
            options[key] = value
            provided.add(key)
    for key, value in vars(args).items():
        if key in ("verb", "config") or value is None:
            continue
        options[key] = value
        provided.add(key)
    if getattr(args, "lambdas_single", None) is not None:
        options["lambdas"] = args.lambdas_single
        provided.add("lambdas")
    return options, provided


def _int_list(text) -> list[int]:
    return [int(part) for part in str(text).split(",") if part.strip() != ""]


def _float_list(text) -> list[float]:
    return [float(part) for part in str(text).split(",") if part.strip() != ""]


def _kind_list(text) -> list[HessianKind]:
    return [HessianKind.parse(part) for part in str(text).split(",") if part.strip() != ""]


def parse_args(argv) -> Command:
    """Parse and validate; exits with a one-line diagnostic on bad input."""
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        options, provided = _resolve(args)
        command = Command(args.verb, options, provided)
        _validate(command)
    except (ValueError, OSError) as exc:
        parser.error(str(exc))
    return command


def _selection_mode(options):
    mode_name = options["mode"]
    if mode_name == "best":
        return Best()
    if mode_name == "ell":
        return LthDegree(int(options["ell"]))
    if mode_name == "mu":
        return MuAverage(int(options["mu"]))
    raise ValueError(f"unknown selection mode {mode_name!r}")


def _validate(command: Command) -> None:
    options = command.options
    int(options["seed"])
    if command.verb in ("sweep", "order-stat"):
        lambdas = _int_list(options["lambdas"])
        if command.verb == "order-stat":
            degree = int(options["ell"])
        else:
            mode = _selection_mode(options)
            degree = mode.ell if isinstance(mode, LthDegree) else (mode.mu if isinstance(mode, MuAverage) else 1)
        if any(degree > lam for lam in lambdas):
            raise ValueError(f"selection degree {degree} exceeds a population size in {lambdas}")
        if int(options["iters"]) < 1:
            raise ValueError("iters must be >= 1")
    if command.verb == "density":
        if int(options["ell"]) > int(options["lam"]):
            raise ValueError("selection degree exceeds the population size")
    _kind_list(options["kind"])
    _int_list(options["dim"])
    _float_list(options["cond"])


def _print_summary(rows: int, path, started: float) -> None:
    print(f"wrote {rows} rows to {path} in {time.perf_counter() - started:.1f}s")


def _run_sweep_verb(options, mode) -> int:
    started = time.perf_counter()
    spec = SweepSpec(
        kinds=tuple(_kind_list(options["kind"])),
        dims=tuple(_int_list(options["dim"])),
        conds=tuple(_float_list(options["cond"])),
        lambdas=tuple(sorted(_int_list(options["lambdas"]))),
        translations=tuple(_float_list(options["translation"])),
        mode=mode,
        iters=int(options["iters"]),
        seed=int(options["seed"]),
        workers=int(options["workers"]),
    )
    reports = run_sweep(spec)
    write_csv(reports, options["out"], columns=ErrorReport.CSV_COLUMNS)
    _print_summary(len(reports), options["out"], started)
    return 0 if all(r.status == "ok" for r in reports) else 1


def dispatch(command: Command) -> int:
    """Execute a parsed command; returns the process exit status."""
    options = command.options
    try:
        if command.verb == "sweep":
            return _run_sweep_verb(options, _selection_mode(options))

        if command.verb == "order-stat":
            return _run_sweep_verb(options, LthDegree(int(options["ell"])))

        if command.verb == "perturb-ref":
            started = time.perf_counter()
            reports = []
            for n in _int_list(options["dim"]):
                reports.extend(
                    run_perturbation_reference(
                        n=n,
                        conds=_float_list(options["cond"]),
                        epsilon=float(options["epsilon"]),
                        trials=int(options["trials"]),
                        seed=int(options["seed"]),
                        kinds=tuple(k.label for k in _kind_list(options["kind"])),
                    )
                )
            write_csv(reports, options["out"], columns=reports[0].CSV_COLUMNS)
            _print_summary(len(reports), options["out"], started)
            return 0

        if command.verb == "density":
            started = time.perf_counter()
            kind = _kind_list(options["kind"])[0]
            psi_hist, omega_hist = density_experiment(
                kind=kind,
                n=_int_list(options["dim"])[0],
                c=_float_list(options["cond"])[0],
                lam=int(options["lam"]),
                samples=int(options["samples"]),
                seed=int(options["seed"]),
                competitions=int(options["iters"]) if "iters" in command.provided else None,
                ell=int(options["ell"]),
            )
            stem = str(options["out"])
            if stem.endswith(".csv"):
                stem = stem[:-4]
            psi_path, omega_path = f"{stem}_psi.csv", f"{stem}_omega.csv"
            write_histogram_csv(psi_hist, psi_path)
            write_histogram_csv(omega_hist, omega_path)
            print(
                f"wrote {psi_hist.masses.size} bins to {psi_path} and {omega_path} "
                f"in {time.perf_counter() - started:.1f}s"
            )
            return 0

        if command.verb == "hessian-info":
            kind = _kind_list(options["kind"])[0]
            n = _int_list(options["dim"])[0]
            c = _float_list(options["cond"])[0]
            hessian = make_hessian(kind, n, c)
            print(f"kind: {hessian.kind.label} ({hessian.kind.value})")
            print(f"dimension: {hessian.n}")
            print("spectrum: " + " ".join(format(v, ".9g") for v in hessian.spectrum))
            print(f"condition number: {hessian.condition_number:.9g}")
            if hessian.kind is HessianKind.HADAMARD_ELLIPSE:
                s = hadamard_matrix(n) / np.sqrt(n)
                diag = np.diagonal(s @ np.diag(hessian.spectrum) @ s)
                print(f"constant-diagonal spread: {diag.max() - diag.min():.3e}")
            return 0

        raise ValueError(f"unknown verb {command.verb!r}")
    except Exception as exc:
        print(f"eslab {command.verb}: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    command = parse_args(sys.argv[1:] if argv is None else argv)
    return dispatch(command)


if __name__ == "__main__":
    raise SystemExit(main())
