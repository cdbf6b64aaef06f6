"""Quadratic landscape construction: Hessian families, objectives, spectra.

Five parameterized SPD families share a single condition parameter c:

    H1  discus             diag(c, 1, ..., 1)
    H2  cigar              diag(1, c, ..., c)
    H3  ellipse            diag(c^((i-1)/(n-1))), i = 1..n
    H4  rotated ellipse    R H3 R^-1, R a plane rotation by pi/4 in the
                           plane spanned by (1,0,1,0,...) and (0,1,0,1,...)
    H5  hadamard ellipse   S H3 S^-1, S = Hadamard(n)/sqrt(n) (Sylvester)

The eigenvalues of H4/H5 are carried analytically from the H3 diagonal;
a cyclic Jacobi sweep is used only for user-supplied matrices.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "HessianKind",
    "Hessian",
    "Objective",
    "make_hessian",
    "custom_hessian",
    "hadamard_matrix",
    "plane_rotation",
    "eval_objective",
    "eval_objective_many",
    "minimizer",
    "spectrum_sums",
    "jacobi_spectrum",
]

SYMMETRY_TOL = 1e-12
MINIMIZER_RESIDUAL_TOL = 1e-10


class HessianKind(enum.Enum):
    DISCUS = "discus"
    CIGAR = "cigar"
    ELLIPSE = "ellipse"
    ROTATED_ELLIPSE = "rotated_ellipse"
    HADAMARD_ELLIPSE = "hadamard_ellipse"
    CUSTOM = "custom"

    @property
    def label(self) -> str:
        """Short tag used on the command line and in CSV rows (H1..H5)."""
        return _KIND_TO_LABEL[self]

    @classmethod
    def parse(cls, text) -> "HessianKind":
        if isinstance(text, cls):
            return text
        key = str(text).strip().lower().replace("-", "").replace("_", "").replace(" ", "")
        try:
            return _LABEL_TO_KIND[key]
        except KeyError:
            raise ValueError(f"unknown Hessian kind: {text!r}") from None


_KIND_TO_LABEL = {
    HessianKind.DISCUS: "H1",
    HessianKind.CIGAR: "H2",
    HessianKind.ELLIPSE: "H3",
    HessianKind.ROTATED_ELLIPSE: "H4",
    HessianKind.HADAMARD_ELLIPSE: "H5",
    HessianKind.CUSTOM: "custom",
}

_LABEL_TO_KIND = {
    "h1": HessianKind.DISCUS,
    "discus": HessianKind.DISCUS,
    "h2": HessianKind.CIGAR,
    "cigar": HessianKind.CIGAR,
    "h3": HessianKind.ELLIPSE,
    "ellipse": HessianKind.ELLIPSE,
    "h4": HessianKind.ROTATED_ELLIPSE,
    "rotatedellipse": HessianKind.ROTATED_ELLIPSE,
    "h5": HessianKind.HADAMARD_ELLIPSE,
    "hadamardellipse": HessianKind.HADAMARD_ELLIPSE,
    "custom": HessianKind.CUSTOM,
}


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Hessian:
    """Symmetric positive-definite matrix plus its eigenvalue spectrum.

    Instances are immutable (arrays are marked read-only) and safe to share
    across workers.
    """

    n: int
    kind: HessianKind
    entries: np.ndarray
    spectrum: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        spectrum = np.array(self.spectrum, dtype=float)
        if self.n < 1:
            raise ValueError("dimension must be a positive integer")
        if entries.shape != (self.n, self.n):
            raise ValueError(f"entries must be {self.n}x{self.n}, got {entries.shape}")
        if spectrum.shape != (self.n,):
            raise ValueError(f"spectrum must have length {self.n}, got {spectrum.shape}")
        if np.abs(entries - entries.T).max() > SYMMETRY_TOL:
            raise ValueError("entries must be symmetric to within 1e-12 per element")
        if not np.all(spectrum > 0.0):
            raise ValueError("spectrum must be strictly positive (full rank)")
        entries.flags.writeable = False
        spectrum.flags.writeable = False
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "spectrum", spectrum)

    @property
    def condition_number(self) -> float:
        return float(self.spectrum.max() / self.spectrum.min())


def _ellipse_spectrum(n: int, c: float) -> np.ndarray:
    if n == 1:
        return np.ones(1)
    return c ** (np.arange(n) / (n - 1.0))


def hadamard_matrix(n: int) -> np.ndarray:
    """Sylvester Hadamard matrix of order n (n a power of two), entries +-1."""
    if n < 1 or (n & (n - 1)) != 0:
        raise ValueError(f"Hadamard order must be a power of two, got {n}")
    h = np.ones((1, 1))
    while h.shape[0] < n:
        h = np.block([[h, h], [h, -h]])
    return h


def plane_rotation(n: int, theta: float) -> np.ndarray:
    """Rotation by theta in the plane spanned by the two alternating vectors.

    The plane is spanned by u ~ (1,0,1,0,...) and v ~ (0,1,0,1,...), each
    normalized; the complement of span{u, v} is left pointwise fixed.
    """
    if n < 2:
        raise ValueError("plane rotation needs dimension >= 2")
    u = np.zeros(n)
    u[0::2] = 1.0
    u /= np.linalg.norm(u)
    v = np.zeros(n)
    v[1::2] = 1.0
    v /= np.linalg.norm(v)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    r = np.eye(n)
    r += (cos_t - 1.0) * (np.outer(u, u) + np.outer(v, v))
    r += sin_t * (np.outer(v, u) - np.outer(u, v))
    return r


def make_hessian(kind, n: int, c: float = 1.0) -> Hessian:
    """Build one of the five parameterized families with condition number c."""
    kind = HessianKind.parse(kind)
    if n < 1:
        raise ValueError("dimension must be >= 1")
    if c < 1.0:
        raise ValueError(f"condition parameter must be >= 1, got {c}")
    if c > 1.0 and n < 2:
        raise ValueError("condition parameter > 1 needs dimension >= 2")
    c = float(c)

    if kind is HessianKind.DISCUS:
        spectrum = np.ones(n)
        spectrum[0] = c
        entries = np.diag(spectrum)
    elif kind is HessianKind.CIGAR:
        spectrum = np.full(n, c)
        spectrum[0] = 1.0
        entries = np.diag(spectrum)
    elif kind is HessianKind.ELLIPSE:
        spectrum = _ellipse_spectrum(n, c)
        entries = np.diag(spectrum)
    elif kind is HessianKind.ROTATED_ELLIPSE:
        spectrum = _ellipse_spectrum(n, c)
        r = plane_rotation(n, math.pi / 4.0)
        entries = r @ np.diag(spectrum) @ r.T
        entries = 0.5 * (entries + entries.T)
    elif kind is HessianKind.HADAMARD_ELLIPSE:
        if (n & (n - 1)) != 0:
            raise ValueError(f"Hadamard ellipse needs a power-of-two dimension, got {n}")
        spectrum = _ellipse_spectrum(n, c)
        s = hadamard_matrix(n) / math.sqrt(n)
        entries = s @ np.diag(spectrum) @ s  # S is symmetric orthogonal
        entries = 0.5 * (entries + entries.T)
    else:
        raise ValueError("use custom_hessian() for arbitrary matrices")

    return Hessian(n=n, kind=kind, entries=entries, spectrum=spectrum)


def jacobi_spectrum(matrix: np.ndarray, tol: float = 1e-12, max_sweeps: int = 60) -> np.ndarray:
    """Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.

    Sweeps until the off-diagonal Frobenius norm falls below tol; returns the
    eigenvalues in ascending order.
    """
    a = np.array(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    n = a.shape[0]
    if n == 1:
        return a.diagonal().copy()
    scale = max(np.abs(a).max(), 1.0)
    off_mask = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        off = math.sqrt(float((a[off_mask] ** 2).sum()))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                # classic 2x2 rotation angle: tan(2*phi) = 2*a_pq / (a_qq - a_pp)
                diff = a[q, q] - a[p, p]
                if abs(diff) + 100.0 * abs(apq) == abs(diff):
                    t = apq / diff
                else:
                    phi = diff / (2.0 * apq)
                    t = 1.0 / (abs(phi) + math.sqrt(phi * phi + 1.0))
                    if phi < 0.0:
                        t = -t
                cos_r = 1.0 / math.sqrt(t * t + 1.0)
                sin_r = t * cos_r
                rot_p = a[p, :].copy()
                rot_q = a[q, :].copy()
                a[p, :] = cos_r * rot_p - sin_r * rot_q
                a[q, :] = sin_r * rot_p + cos_r * rot_q
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = cos_r * col_p - sin_r * col_q
                a[:, q] = sin_r * col_p + cos_r * col_q
    else:
        raise RuntimeError("Jacobi sweep did not reach the requested off-diagonal norm")
    return np.sort(a.diagonal())


def custom_hessian(entries: np.ndarray) -> Hessian:
    """Wrap a user-supplied SPD matrix; the spectrum is extracted by Jacobi."""
    entries = np.asarray(entries, dtype=float)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise ValueError("entries must be a square matrix")
    spectrum = jacobi_spectrum(entries)
    return Hessian(n=entries.shape[0], kind=HessianKind.CUSTOM, entries=entries, spectrum=spectrum)


def minimizer(hessian: Hessian, translation: np.ndarray) -> np.ndarray:
    """Minimizer z* = -H^-1 a / 2 of z^T H z + a^T z, refined to a tiny residual."""
    a = np.asarray(translation, dtype=float)
    if a.shape != (hessian.n,):
        raise ValueError(f"translation must have length {hessian.n}")
    h = hessian.entries
    z = np.linalg.solve(h, -0.5 * a)
    for _ in range(3):
        residual = 2.0 * (h @ z) + a
        if np.abs(residual).max() <= MINIMIZER_RESIDUAL_TOL:
            break
        z -= np.linalg.solve(h, 0.5 * residual)
    else:
        raise ValueError("minimizer residual did not reach tolerance; matrix near singular?")
    return z


@dataclass(frozen=True)
class Objective:
    """Quadratic objective in sampling form: J(z) = z^T H z + a^T z."""

    hessian: Hessian
    translation: np.ndarray
    minimizer: np.ndarray = None

    def __post_init__(self):
        a = _frozen(self.translation)
        if a.shape != (self.hessian.n,):
            raise ValueError(f"translation must have length {self.hessian.n}")
        object.__setattr__(self, "translation", a)
        object.__setattr__(self, "minimizer", _frozen(minimizer(self.hessian, a)))

    @property
    def n(self) -> int:
        return self.hessian.n


def eval_objective(objective: Objective, z: np.ndarray) -> float:
    """Objective value at a single point: quadratic form first, then linear term."""
    z = np.asarray(z, dtype=float)
    if z.shape != (objective.n,):
        raise ValueError(f"point must have length {objective.n}, got shape {z.shape}")
    h = objective.hessian.entries
    return float(z @ (h @ z) + objective.translation @ z)


def eval_objective_many(objective: Objective, points: np.ndarray) -> np.ndarray:
    """Objective values for a stack of points, shape (m, n) -> (m,)."""
    z = np.asarray(points, dtype=float)
    if z.ndim != 2 or z.shape[1] != objective.n:
        raise ValueError(f"points must have shape (m, {objective.n})")
    h = objective.hessian.entries
    values = np.einsum("ij,jk,ik->i", z, h, z, optimize=True)
    if objective.translation.any():
        values = values + z @ objective.translation
    return values


def spectrum_sums(hessian: Hessian) -> tuple[float, float]:
    """Power sums (sum of eigenvalues, sum of squared eigenvalues)."""
    s = hessian.spectrum
    return float(s.sum()), float((s * s).sum())
