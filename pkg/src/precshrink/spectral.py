"""Population covariance models built from discrete eigenvalue spectra."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import frobenius_sq, symmetrize

WEIGHT_SUM_TOL = 1e-12
ORTHONORMAL_TOL = 1e-10
RECONSTRUCTION_TOL = 1e-10


@dataclass(frozen=True)
class SpectrumSpec:
    """Discrete eigenvalue distribution given as weighted point masses.

    ``atoms`` is a sequence of (weight, eigenvalue) pairs. Weights must sum
    to one and every eigenvalue must be strictly positive, so the spectrum
    stays bounded away from zero.
    """

    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        atoms = tuple((float(w), float(v)) for w, v in self.atoms)
        if not atoms:
            raise ValueError("spectrum needs at least one atom")
        weights = np.array([w for w, _ in atoms])
        values = np.array([v for _, v in atoms])
        if np.any(weights < 0.0) or np.any(weights > 1.0):
            raise ValueError("atom weights must lie in [0, 1]")
        if abs(weights.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"atom weights must sum to 1, got {weights.sum()!r}")
        if np.any(values <= 0.0) or not np.all(np.isfinite(values)):
            raise ValueError("atom eigenvalues must be finite and strictly positive")
        object.__setattr__(self, "atoms", atoms)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.atoms])

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.atoms])

    def inverted(self) -> "SpectrumSpec":
        """Spectrum of the inverse matrix: same weights, reciprocal values."""
        return SpectrumSpec(tuple((w, 1.0 / v) for w, v in self.atoms))

    @classmethod
    def identity(cls) -> "SpectrumSpec":
        return cls(((1.0, 1.0),))

    @classmethod
    def isotropic(cls, scale: float) -> "SpectrumSpec":
        return cls(((1.0, float(scale)),))


def spectral_moments(spec: SpectrumSpec) -> tuple[float, float]:
    """First and second inverse moments of the spectrum: sum w/v, sum w/v^2."""
    w = spec.weights
    v = spec.values
    return float(np.sum(w / v)), float(np.sum(w / v**2))


def apportion_counts(weights: np.ndarray, p: int) -> np.ndarray:
    """Largest-remainder apportionment of p slots to fractional weights.

    Remainder ties are broken by atom order, so the result is deterministic.
    """
    quota = np.asarray(weights, dtype=float) * p
    base = np.floor(quota + 1e-9).astype(int)
    remainder = quota - base
    extra = p - int(base.sum())
    if extra > 0:
        order = np.argsort(-remainder, kind="stable")
        base[order[:extra]] += 1
    return base


def realize_eigenvalues(spec: SpectrumSpec, p: int) -> np.ndarray:
    """Ascending length-p eigenvalue vector realizing the spectrum weights."""
    if p < 1:
        raise ValueError(f"dimension must be >= 1, got {p}")
    counts = apportion_counts(spec.weights, p)
    return np.sort(np.repeat(spec.values, counts))


@dataclass(frozen=True)
class CovarianceModel:
    """Population covariance with cached inverse, square roots and norms.

    ``eigenvalues`` are ascending; ``basis`` holds the orthonormal
    eigenvectors as columns (identity by default so the matrix is diagonal).
    Immutable after construction.
    """

    eigenvalues: np.ndarray
    basis: np.ndarray
    sigma: np.ndarray
    precision: np.ndarray
    sqrt: np.ndarray
    inv_sqrt: np.ndarray
    precision_frobenius_sq: float
    precision_trace_norm: float

    @property
    def p(self) -> int:
        return self.eigenvalues.size

    @classmethod
    def from_eigenvalues(cls, eigenvalues, basis: np.ndarray | None = None) -> "CovarianceModel":
        tau = np.sort(np.asarray(eigenvalues, dtype=float))
        if tau.size < 1:
            raise ValueError("need at least one eigenvalue")
        if np.any(tau <= 0.0) or not np.all(np.isfinite(tau)):
            raise ValueError("covariance eigenvalues must be finite and positive")
        p = tau.size
        if basis is None:
            b = np.eye(p)
        else:
            b = np.asarray(basis, dtype=float)
            if b.shape != (p, p):
                raise ValueError(f"basis must be {p}x{p}, got {b.shape}")
            if np.max(np.abs(b.T @ b - np.eye(p))) > ORTHONORMAL_TOL:
                raise ValueError("basis is not orthonormal")
        sigma = symmetrize((b * tau) @ b.T)
        precision = symmetrize((b / tau) @ b.T)
        sqrt_tau = np.sqrt(tau)
        sqrt = symmetrize((b * sqrt_tau) @ b.T)
        inv_sqrt = symmetrize((b / sqrt_tau) @ b.T)
        if np.max(np.abs(sigma @ precision - np.eye(p))) > RECONSTRUCTION_TOL:
            raise ValueError("covariance model inconsistent: sigma @ precision != I")
        return cls(
            eigenvalues=tau,
            basis=b,
            sigma=sigma,
            precision=precision,
            sqrt=sqrt,
            inv_sqrt=inv_sqrt,
            precision_frobenius_sq=frobenius_sq(precision),
            precision_trace_norm=float(np.trace(precision)),
        )

    @classmethod
    def isotropic(cls, p: int, scale: float) -> "CovarianceModel":
        return cls.from_eigenvalues(np.full(p, float(scale)))


def build_covariance(
    spec: SpectrumSpec, p: int, basis: np.ndarray | None = None
) -> CovarianceModel:
    """Realize a spectrum at dimension p as a covariance model.

    Eigenvalue multiplicities follow largest-remainder apportionment of
    weight * p, so the empirical spectrum converges to the specified
    distribution as p grows.
    """
    return CovarianceModel.from_eigenvalues(realize_eigenvalues(spec, p), basis)
