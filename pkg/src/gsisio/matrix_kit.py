"""Dense matrix helpers shared by every other module.

Thin, defensive wrappers around numpy.linalg plus the small sign-split
algebra that the observer gain formulas are written in. All functions
take and return plain float ndarrays and reject non-finite input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SvdResult",
    "abs_matrix",
    "as_matrix",
    "is_negative_semidefinite",
    "numeric_rank",
    "pinv",
    "sign_split",
    "spectral_norm",
    "svd",
    "sym_eig_extrema",
]


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float64 array, rejecting NaN and infinity."""
    m = np.asarray(a, dtype=float)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains NaN or infinite entries")
    return m


def sign_split(m) -> tuple[np.ndarray, np.ndarray]:
    """Split M into (M_plus, M_minus) with M = M_plus - M_minus.

    M_plus = max(M, 0) elementwise and M_minus = M_plus - M, so both
    parts are nonnegative.
    """
    m = as_matrix(m)
    plus = np.maximum(m, 0.0)
    return plus, plus - m


def abs_matrix(m) -> np.ndarray:
    """Elementwise absolute value, equal to M_plus + M_minus."""
    return np.abs(as_matrix(m))


def pinv(m, tol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudoinverse.

    ``tol`` is the relative cutoff below which singular values are
    treated as zero; the default matches numeric_rank's tolerance.
    """
    m = as_matrix(m)
    if tol is None:
        tol = max(m.shape) * np.finfo(float).eps
        return np.linalg.pinv(m, rcond=tol)
    smax = _sigma_max(m)
    if smax == 0.0:
        return np.zeros((m.shape[1], m.shape[0]))
    return np.linalg.pinv(m, rcond=tol / smax)


def numeric_rank(m, tol: float | None = None) -> int:
    """Number of singular values above ``tol``.

    Default tolerance: max(rows, cols) * eps * sigma_max, the usual
    numerical-rank convention.
    """
    m = as_matrix(m)
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0:
        return 0
    if tol is None:
        tol = max(m.shape) * np.finfo(float).eps * s[0]
    return int(np.count_nonzero(s > tol))


@dataclass(frozen=True)
class SvdResult:
    """Full singular value decomposition M = U diag(s) V^T.

    U is (rows x rows), V is (cols x cols), singular_values has
    min(rows, cols) entries in descending order.
    """

    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray

    def reconstruct(self) -> np.ndarray:
        rows, cols = self.u.shape[0], self.v.shape[0]
        sigma = np.zeros((rows, cols))
        k = self.singular_values.size
        sigma[:k, :k] = np.diag(self.singular_values)
        return self.u @ sigma @ self.v.T


def svd(m) -> SvdResult:
    m = as_matrix(m)
    u, s, vt = np.linalg.svd(m, full_matrices=True)
    return SvdResult(u=u, singular_values=s, v=vt.T)


def _sigma_max(m: np.ndarray) -> float:
    if m.size == 0:
        return 0.0
    return float(np.linalg.svd(m, compute_uv=False)[0])


def spectral_norm(m) -> float:
    """Largest singular value (operator 2-norm)."""
    return _sigma_max(as_matrix(m))


_SYM_TOL = 1e-12


def _require_symmetric(s: np.ndarray, what: str) -> np.ndarray:
    scale = max(1.0, float(np.max(np.abs(s))) if s.size else 0.0)
    skew = float(np.max(np.abs(s - s.T))) if s.size else 0.0
    if skew > _SYM_TOL * scale:
        raise ValueError(f"{what} expects a symmetric matrix, asymmetry {skew:.3e}")
    # symmetrize to kill representation noise before the eigensolve
    return 0.5 * (s + s.T)


def sym_eig_extrema(s) -> tuple[float, float]:
    """(lambda_min, lambda_max) of a symmetric matrix.

    Raises ValueError when the input is not symmetric to within a
    relative 1e-12.
    """
    s = as_matrix(s, "sym_eig_extrema input")
    if s.shape[0] != s.shape[1]:
        raise ValueError("sym_eig_extrema expects a square matrix")
    s = _require_symmetric(s, "sym_eig_extrema")
    w = np.linalg.eigvalsh(s)
    return float(w[0]), float(w[-1])


def is_negative_semidefinite(s, tol: float = 1e-9) -> bool:
    """True when the largest eigenvalue of symmetric S is <= tol."""
    s = as_matrix(s, "is_negative_semidefinite input")
    if s.shape[0] != s.shape[1]:
        raise ValueError("is_negative_semidefinite expects a square matrix")
    s = _require_symmetric(s, "is_negative_semidefinite")
    return bool(np.linalg.eigvalsh(s)[-1] <= tol)
