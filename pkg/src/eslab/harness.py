"""Experiment orchestration: sweeps, reference runs, density comparisons, CSV.

Every cell of a sweep derives its own RNG seed by hashing the master seed
together with the cell coordinates, so adding or removing cells never
perturbs the others, and identical specs produce byte-identical CSV files.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .landscape import Hessian, HessianKind, Objective, make_hessian, spectrum_sums
from .distributions import gamma_cdf, gamma_params, gamma_quantile, order_stat_cdf
from .metrics import (
    ErrorReport,
    alpha_posteriori,
    commutator_frobenius,
    max_diag_deviation,
    max_offdiag,
    normalize_hc,
)
from .sampling import (
    Best,
    LthDegree,
    MuAverage,
    SampleConfig,
    SelectionMode,
    perturbed_identities,
    run_sampling,
)

__all__ = [
    "DEFAULT_LAMBDAS",
    "SweepSpec",
    "PerturbationReport",
    "Histogram",
    "run_sweep",
    "run_perturbation_reference",
    "density_experiment",
    "write_csv",
    "write_histogram_csv",
    "read_config",
    "derive_cell_seed",
    "ks_distance",
    "mode_tag",
]

DEFAULT_LAMBDAS = (5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000)
DEFAULT_ITERS = 100_000
HISTOGRAM_BINS = 80

PERTURBATION_KINDS = ("H1", "H2", "H3", "H4", "H5")


def mode_tag(mode: SelectionMode) -> tuple[str, int]:
    """(short name, degree) pair used in seeds and CSV rows."""
    if isinstance(mode, Best):
        return "best", 1
    if isinstance(mode, LthDegree):
        return "ell", mode.ell
    if isinstance(mode, MuAverage):
        return "mu", mode.mu
    raise TypeError(f"unknown selection mode: {mode!r}")


def derive_cell_seed(master_seed: int, *parts) -> int:
    """Stable 64-bit seed from the master seed and the cell coordinates."""
    pieces = [str(int(master_seed))]
    for part in parts:
        if isinstance(part, float):
            pieces.append(repr(part))
        else:
            pieces.append(str(part))
    digest = hashlib.blake2b("|".join(pieces).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class SweepSpec:
    """Grid of sweep cells: (kind, n, c, lambda, translation scale)."""

    kinds: tuple
    dims: tuple
    conds: tuple
    lambdas: tuple = DEFAULT_LAMBDAS
    translations: tuple = (1.0,)
    mode: SelectionMode = Best()
    iters: int = DEFAULT_ITERS
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        kinds = tuple(HessianKind.parse(k) for k in self.kinds)
        object.__setattr__(self, "kinds", kinds)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "conds", tuple(float(c) for c in self.conds))
        object.__setattr__(self, "lambdas", tuple(int(v) for v in self.lambdas))
        object.__setattr__(self, "translations", tuple(float(s) for s in self.translations))
        for name in ("kinds", "dims", "conds", "lambdas", "translations"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be nonempty")
        if list(self.lambdas) != sorted(self.lambdas):
            raise ValueError("lambda values must be sorted ascending")


def _nan_report(kind, n, c, lam, mode_name, degree, scale, iters, seed, status) -> ErrorReport:
    nan = float("nan")
    return ErrorReport(
        kind=kind,
        n=n,
        c=c,
        lam=lam,
        mode=mode_name,
        ell_or_mu=degree,
        translation_scale=scale,
        iters=iters,
        seed=seed,
        e0=nan,
        e1=nan,
        e2=nan,
        commutator_frob=nan,
        alpha=nan,
        status=status,
    )


def run_sweep(spec: SweepSpec) -> list[ErrorReport]:
    """Run every cell of the spec in deterministic order; failures become rows."""
    mode_name, degree = mode_tag(spec.mode)
    reports: list[ErrorReport] = []
    for kind, n, c, lam, scale in product(spec.kinds, spec.dims, spec.conds, spec.lambdas, spec.translations):
        label = kind.label
        seed = derive_cell_seed(spec.seed, label, n, float(c), lam, float(scale), mode_name, degree)
        try:
            hessian = make_hessian(kind, n, c)
            objective = Objective(hessian, scale * np.ones(n))
            config = SampleConfig(
                objective=objective,
                lam=lam,
                mode=spec.mode,
                iters=spec.iters,
                seed=seed,
                workers=spec.workers,
            )
            accumulator, _ = run_sampling(config)
            _, covariance, e0 = accumulator.finalize()
            tilde = normalize_hc(hessian, covariance)
            reports.append(
                ErrorReport(
                    kind=label,
                    n=n,
                    c=float(c),
                    lam=lam,
                    mode=mode_name,
                    ell_or_mu=degree,
                    translation_scale=float(scale),
                    iters=spec.iters,
                    seed=seed,
                    e0=e0,
                    e1=max_diag_deviation(tilde),
                    e2=max_offdiag(tilde) if n >= 2 else 0.0,
                    commutator_frob=commutator_frobenius(hessian, covariance),
                    alpha=alpha_posteriori(hessian, covariance),
                )
            )
        except Exception as exc:  # per-cell isolation: the sweep continues
            reports.append(
                _nan_report(label, n, float(c), lam, mode_name, degree, float(scale), spec.iters, seed, f"error: {exc}")
            )
    return reports


@dataclass(frozen=True)
class PerturbationReport:
    """Mean/std of the error measures for perturbed-identity covariances."""

    kind: str
    n: int
    c: float
    epsilon: float
    trials: int
    seed: int
    e1_mean: float
    e1_std: float
    e2_mean: float
    e2_std: float

    CSV_COLUMNS = ("kind", "n", "c", "epsilon", "trials", "seed", "e1_mean", "e1_std", "e2_mean", "e2_std")

    def csv_row(self) -> tuple:
        return (
            self.kind,
            self.n,
            self.c,
            self.epsilon,
            self.trials,
            self.seed,
            self.e1_mean,
            self.e1_std,
            self.e2_mean,
            self.e2_std,
        )


def _batch_error_measures(hessian: Hessian, covariances: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized e1/e2 over a stack of covariance matrices."""
    products = np.matmul(hessian.entries, covariances)
    largest = np.abs(products).max(axis=(1, 2))
    tilde = products / largest[:, None, None]
    diags = np.diagonal(tilde, axis1=1, axis2=2)
    e1 = np.abs(diags - 1.0).max(axis=1)
    off = tilde.copy()
    idx = np.arange(tilde.shape[1])
    off[:, idx, idx] = 0.0
    e2 = np.abs(off).max(axis=(1, 2))
    return e1, e2


def run_perturbation_reference(
    n: int,
    conds,
    epsilon: float,
    trials: int,
    seed: int,
    kinds=PERTURBATION_KINDS,
) -> list[PerturbationReport]:
    """Evaluate e1/e2 of I + E covariances against each Hessian family.

    For each (kind, c) cell, `trials` independent symmetric perturbations are
    drawn and the mean and standard deviation of both measures are reported.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    batch = 2048
    reports = []
    for kind in kinds:
        kind = HessianKind.parse(kind)
        for c in conds:
            hessian = make_hessian(kind, n, c)
            cell_seed = derive_cell_seed(seed, "perturb", kind.label, n, float(c), repr(float(epsilon)), trials)
            rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(cell_seed)))
            e1_parts, e2_parts = [], []
            remaining = trials
            while remaining > 0:
                m = min(batch, remaining)
                covs = perturbed_identities(rng, n, epsilon, m)
                e1, e2 = _batch_error_measures(hessian, covs)
                e1_parts.append(e1)
                e2_parts.append(e2)
                remaining -= m
            e1_all = np.concatenate(e1_parts)
            e2_all = np.concatenate(e2_parts)
            reports.append(
                PerturbationReport(
                    kind=kind.label,
                    n=n,
                    c=float(c),
                    epsilon=float(epsilon),
                    trials=trials,
                    seed=cell_seed,
                    e1_mean=float(e1_all.mean()),
                    e1_std=float(e1_all.std()),
                    e2_mean=float(e2_all.mean()),
                    e2_std=float(e2_all.std()),
                )
            )
    return reports


@dataclass(frozen=True)
class Histogram:
    """Empirical bin masses next to the analytic masses of a reference law.

    Bins are equal-probability under the reference, so the analytic masses
    are uniform by construction and the comparison is stable in heavy tails.
    Analytic masses always come from CDF differences, never from point
    densities (which may be singular at zero).
    """

    edges: np.ndarray
    masses: np.ndarray
    analytic_masses: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        masses = np.asarray(self.masses, dtype=float)
        analytic = np.asarray(self.analytic_masses, dtype=float)
        if edges.ndim != 1 or edges.size != masses.size + 1 or masses.shape != analytic.shape:
            raise ValueError("edges must bound the mass arrays")
        if not np.all(np.diff(edges) > 0.0):
            raise ValueError("edges must be strictly increasing")
        if abs(masses.sum() - 1.0) > 1e-9:
            raise ValueError("empirical masses must sum to 1")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "analytic_masses", analytic)

    CSV_COLUMNS = ("bin_lo", "bin_hi", "empirical_mass", "analytic_mass")

    def csv_rows(self) -> list[tuple]:
        return [
            (self.edges[i], self.edges[i + 1], self.masses[i], self.analytic_masses[i])
            for i in range(self.masses.size)
        ]


def _equal_mass_histogram(values: np.ndarray, cdf, quantile, bins: int = HISTOGRAM_BINS) -> Histogram:
    qs = np.arange(1, bins) / bins
    interior = np.array([quantile(q) for q in qs])
    edges = np.concatenate(([0.0], interior, [math.inf]))
    counts, _ = np.histogram(values, bins=edges)
    masses = counts / values.size
    cdf_at = np.concatenate(([0.0], np.atleast_1d(cdf(interior)), [1.0]))
    analytic = np.diff(cdf_at)
    return Histogram(edges=edges, masses=masses, analytic_masses=analytic)


def _bisect_quantile(cdf, q: float, hi_start: float) -> float:
    hi = hi_start
    while cdf(hi) < q:
        hi *= 2.0
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if cdf(mid) < q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def density_experiment(
    kind,
    n: int,
    c: float,
    lam: int,
    samples: int,
    seed: int,
    competitions: int | None = None,
    ell: int = 1,
) -> tuple[Histogram, Histogram]:
    """Histograms of single-mutation values and winning values at the optimum.

    The single-mutation histogram is compared against the moment-matched
    gamma law; the winning-value histogram against the induced law of the
    ell-th best of lam. Sampling is translation-free (the analytic laws are
    stated for the near-optimum case). `competitions` defaults to
    samples // 10.
    """
    if samples < 1000:
        raise ValueError("density comparisons need at least 1e3 samples")
    if competitions is None:
        competitions = max(1000, samples // 10)
    kind = HessianKind.parse(kind)
    hessian = make_hessian(kind, n, c)
    objective = Objective(hessian, np.zeros(n))
    approx = gamma_params(spectrum_sums(hessian))

    single_seed = derive_cell_seed(seed, "density-psi", kind.label, n, float(c), samples)
    single_cfg = SampleConfig(objective=objective, lam=1, mode=Best(), iters=samples, seed=single_seed)
    _, psi_values = run_sampling(single_cfg, collect_values=True)
    psi_hist = _equal_mass_histogram(
        psi_values,
        cdf=lambda v: gamma_cdf(v, approx),
        quantile=lambda q: gamma_quantile(q, approx),
    )

    winner_seed = derive_cell_seed(seed, "density-omega", kind.label, n, float(c), lam, ell, competitions)
    mode = Best() if ell == 1 else LthDegree(ell)
    winner_cfg = SampleConfig(objective=objective, lam=lam, mode=mode, iters=competitions, seed=winner_seed)
    _, omega_values = run_sampling(winner_cfg, collect_values=True)

    def winner_cdf(v):
        return order_stat_cdf(v, ell, lam, approx)

    hi_start = max(approx.mean, 1.0)
    omega_hist = _equal_mass_histogram(
        omega_values,
        cdf=winner_cdf,
        quantile=lambda q: _bisect_quantile(winner_cdf, q, hi_start),
    )
    return psi_hist, omega_hist


def _format_cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".9g")


def write_csv(rows, path, columns=None) -> None:
    """Header plus one row per report; deterministic bytes for given input.

    Rows may be report objects exposing csv_row()/CSV_COLUMNS or plain
    sequences (then `columns` is required). Floats are rendered with nine
    significant digits.
    """
    if columns is None:
        if not rows:
            raise ValueError("columns are required for an empty row list")
        columns = type(rows[0]).CSV_COLUMNS
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as stream:
            stream.write(",".join(columns) + "\n")
            for row in rows:
                cells = row.csv_row() if hasattr(row, "csv_row") else row
                stream.write(",".join(_format_cell(cell) for cell in cells) + "\n")
    except OSError as exc:
        raise OSError(f"failed writing CSV to {path}: {exc}") from exc


def write_histogram_csv(histogram: Histogram, path) -> None:
    write_csv(histogram.csv_rows(), path, columns=Histogram.CSV_COLUMNS)


def read_config(path) -> dict[str, str]:
    """Flat key=value file; '#' starts a comment, lists stay comma-separated."""
    options: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as stream:
        for lineno, raw in enumerate(stream, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw.rstrip()!r}")
            key, value = line.split("=", 1)
            options[key.strip()] = value.strip()
    return options


def ks_distance(values, cdf) -> float:
    """One-sample Kolmogorov-Smirnov sup distance |F_emp - F|.

    `cdf` is either a callable evaluated on the sorted sample or a
    precomputed array of CDF values aligned with the sorted sample.
    """
    ordered = np.sort(np.asarray(values, dtype=float))
    f = np.asarray(cdf(ordered) if callable(cdf) else cdf, dtype=float)
    if f.shape != ordered.shape:
        raise ValueError("CDF values must align with the sample")
    n = ordered.size
    positions = np.arange(1, n + 1) / n
    return float(max((positions - f).max(), (f - (positions - 1.0 / n)).max()))
