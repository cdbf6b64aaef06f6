"""Error measures on (Hessian, covariance) pairs.

The product of the Hessian with an empirical winner covariance, normalized
by its largest absolute entry, should approach the identity as selection
pressure grows. The measures quantify the deviation: largest diagonal
deviation from one (e1), largest off-diagonal magnitude (e2), plus the
commutator norm and the a-posteriori proportionality constant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .landscape import Hessian

__all__ = [
    "ErrorReport",
    "normalize_hc",
    "max_diag_deviation",
    "max_offdiag",
    "commutator_frobenius",
    "alpha_posteriori",
]


def _entries(matrix) -> np.ndarray:
    if isinstance(matrix, Hessian):
        return matrix.entries
    out = np.asarray(matrix, dtype=float)
    if out.ndim != 2 or out.shape[0] != out.shape[1]:
        raise ValueError("expected a square matrix")
    return out


def normalize_hc(hessian, covariance) -> np.ndarray:
    """H C divided by its largest absolute entry (that entry maps to +-1)."""
    h = _entries(hessian)
    c = _entries(covariance)
    if h.shape != c.shape:
        raise ValueError(f"shape mismatch: {h.shape} vs {c.shape}")
    product = h @ c
    largest = np.abs(product).max()
    if largest == 0.0:
        raise ValueError("product is identically zero; nothing to normalize")
    return product / largest


def max_diag_deviation(tilde) -> float:
    """Largest |diagonal entry - 1| of a normalized product (the e1 measure)."""
    t = _entries(tilde)
    return float(np.abs(np.diagonal(t) - 1.0).max())


def max_offdiag(tilde) -> float:
    """Largest off-diagonal magnitude of a normalized product (the e2 measure)."""
    t = _entries(tilde)
    if t.shape[0] < 2:
        raise ValueError("off-diagonal measure needs dimension >= 2")
    mask = ~np.eye(t.shape[0], dtype=bool)
    return float(np.abs(t[mask]).max())


def commutator_frobenius(hessian, covariance) -> float:
    """Frobenius norm of H C - C H."""
    h = _entries(hessian)
    c = _entries(covariance)
    if h.shape != c.shape:
        raise ValueError(f"shape mismatch: {h.shape} vs {c.shape}")
    return float(np.linalg.norm(h @ c - c @ h))


def alpha_posteriori(hessian, covariance) -> float:
    """Proportionality constant 1 / max (C H)_ij (signed maximum)."""
    h = _entries(hessian)
    c = _entries(covariance)
    if h.shape != c.shape:
        raise ValueError(f"shape mismatch: {h.shape} vs {c.shape}")
    beta = float((c @ h).max())
    if beta <= 0.0:
        raise ValueError(f"largest entry of C H must be positive, got {beta}")
    return 1.0 / beta


@dataclass(frozen=True)
class ErrorReport:
    """One row of a sweep: error measures plus the cell that produced them."""

    kind: str
    n: int
    c: float
    lam: int
    mode: str
    ell_or_mu: int
    translation_scale: float
    iters: int
    seed: int
    e0: float
    e1: float
    e2: float
    commutator_frob: float
    alpha: float
    status: str = "ok"

    CSV_COLUMNS = (
        "kind",
        "n",
        "c",
        "lambda",
        "mode",
        "ell_or_mu",
        "translation_scale",
        "iters",
        "seed",
        "e0",
        "e1",
        "e2",
        "commutator_frob",
        "alpha",
        "status",
    )

    def csv_row(self) -> tuple:
        return (
            self.kind,
            self.n,
            self.c,
            self.lam,
            self.mode,
            self.ell_or_mu,
            self.translation_scale,
            self.iters,
            self.seed,
            self.e0,
            self.e1,
            self.e2,
            self.commutator_frob,
            self.alpha,
            self.status,
        )
