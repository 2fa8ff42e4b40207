"""Dense symmetric linear algebra kernels.

Sample covariance, symmetric eigendecomposition, inverse / Moore-Penrose
pseudo-inverse via the spectral route, and the three matrix norms used by the
estimators (squared Frobenius, trace norm, spectral norm).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import SingularMatrixError

REGIME_INVERTIBLE = "invertible"
REGIME_PSEUDO = "pseudo"

SYMMETRY_TOL = 1e-12


def frobenius_sq(a: np.ndarray) -> float:
    """Squared Frobenius norm, sum of squared entries."""
    return float(np.sum(a * a))


def trace_product(a: np.ndarray, b: np.ndarray) -> float:
    """tr(a @ b) computed elementwise; requires b (or a) symmetric."""
    return float(np.sum(a * b))


def is_symmetric(a: np.ndarray, tol: float = SYMMETRY_TOL) -> bool:
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    return bool(np.max(np.abs(a - a.T)) <= tol * scale)


def symmetrize(a: np.ndarray) -> np.ndarray:
    return (a + a.T) / 2.0


@dataclass(frozen=True)
class DataMatrix:
    """Observed p x n data matrix: rows are variables, columns observations."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError(f"data matrix must be 2-dimensional, got ndim={v.ndim}")
        if v.shape[0] < 1 or v.shape[1] < 2:
            raise ValueError(f"data matrix needs p >= 1 and n >= 2, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("data matrix contains non-finite entries")
        object.__setattr__(self, "values", v)

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class SampleStats:
    """Sample covariance with its eigendecomposition and cached (pseudo-)inverse.

    ``eigenvalues`` are ascending, ``eigenvectors`` holds the matching
    orthonormal eigenvectors as columns. ``inverse`` is the plain inverse in
    the invertible regime (p < n) and the Moore-Penrose pseudo-inverse
    otherwise. Instances are immutable and safe to share across threads.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    regime: str
    inverse: np.ndarray
    inverse_frobenius_sq: float
    inverse_trace_norm: float
    p: int
    n: int

    @property
    def ratio(self) -> float:
        return self.p / self.n


def rank_tolerance(eigenvalues: np.ndarray, p: int) -> float:
    """Cutoff below which an eigenvalue is treated as zero: p * eps * max."""
    largest = float(eigenvalues[-1]) if eigenvalues.size else 0.0
    return p * np.finfo(float).eps * max(largest, 0.0)


def _spectral_pseudo_inverse(
    eigenvalues: np.ndarray, eigenvectors: np.ndarray, tol: float
) -> np.ndarray:
    inv_vals = np.where(eigenvalues > tol, 1.0, 0.0) / np.where(
        eigenvalues > tol, eigenvalues, 1.0
    )
    if not np.any(eigenvalues > tol):
        warnings.warn(
            "all eigenvalues below rank tolerance; pseudo-inverse is degenerate "
            "(zero matrix)",
            RuntimeWarning,
            stacklevel=3,
        )
    return symmetrize((eigenvectors * inv_vals) @ eigenvectors.T)


def sample_covariance(data, center: bool = False) -> SampleStats:
    """Form S = (1/n) Y Y' and its eigendecomposition.

    No mean subtraction is performed unless ``center`` is set; centering is a
    convenience for real data and keeps the 1/n normalization.

    The regime is ``invertible`` iff p < n and the smallest eigenvalue clears
    the rank tolerance; p >= n always yields the ``pseudo`` regime.  A rank
    deficient S with p < n raises :class:`SingularMatrixError` rather than
    silently falling back to the pseudo-inverse.
    """
    if not isinstance(data, DataMatrix):
        data = DataMatrix(np.asarray(data, dtype=float))
    y = data.values
    if center:
        y = y - y.mean(axis=1, keepdims=True)
    p, n = data.p, data.n
    s = symmetrize((y @ y.T) / n)
    eigenvalues, eigenvectors = np.linalg.eigh(s)
    tol = rank_tolerance(eigenvalues, p)
    if p < n:
        if eigenvalues[0] <= tol:
            raise SingularMatrixError(
                f"sample covariance is numerically singular (min eigenvalue "
                f"{eigenvalues[0]:.3e} <= tolerance {tol:.3e}) although p={p} < n={n}"
            )
        regime = REGIME_INVERTIBLE
        inverse = symmetrize((eigenvectors / eigenvalues) @ eigenvectors.T)
        trace_norm = float(np.sum(1.0 / eigenvalues))
    else:
        regime = REGIME_PSEUDO
        inverse = _spectral_pseudo_inverse(eigenvalues, eigenvectors, tol)
        kept = eigenvalues[eigenvalues > tol]
        trace_norm = float(np.sum(1.0 / kept)) if kept.size else 0.0
    return SampleStats(
        matrix=s,
        eigenvalues=eigenvalues,
        eigenvectors=eigenvectors,
        regime=regime,
        inverse=inverse,
        inverse_frobenius_sq=frobenius_sq(inverse),
        inverse_trace_norm=trace_norm,
        p=p,
        n=n,
    )


def pseudo_inverse(stats: SampleStats) -> np.ndarray:
    """Moore-Penrose pseudo-inverse from the cached eigendecomposition.

    Eigenvalues at or below the rank tolerance are zeroed; for an invertible
    S this reduces to the plain inverse.
    """
    tol = rank_tolerance(stats.eigenvalues, stats.p)
    return _spectral_pseudo_inverse(stats.eigenvalues, stats.eigenvectors, tol)


def matrix_norms(a: np.ndarray) -> tuple[float, float, float]:
    """Return (squared Frobenius norm, trace norm, spectral norm).

    Symmetric inputs use the eigenvalue route (trace norm = sum |eig|,
    spectral = max |eig|); general matrices fall back to singular values.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix_norms expects a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    frob_sq = frobenius_sq(a)
    if is_symmetric(a):
        w = np.linalg.eigvalsh(a)
        return frob_sq, float(np.sum(np.abs(w))), float(np.max(np.abs(w)))
    sv = np.linalg.svd(a, compute_uv=False)
    return frob_sq, float(np.sum(sv)), float(sv[0])
