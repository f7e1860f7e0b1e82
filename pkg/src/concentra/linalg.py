"""Small dense matrices and singular-value helpers for coupling matrices.

Every matrix handled here is tiny (k <= ~16), so singular values are computed
by a cyclic Jacobi eigen-decomposition of A^t A rather than a general-purpose
factorization: deterministic, dependency-free, and accurate at this scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Off-diagonal Frobenius threshold for the Jacobi sweep, relative to the
# Frobenius norm of the (pre-normalized) input matrix.
_JACOBI_TOL = 1e-14
_MAX_SWEEPS = 60


@dataclass(frozen=True)
class SquareMatrix:
    """Dense k x k real matrix with finite entries."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=float, copy=True)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise ValueError(f"expected a square matrix, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("matrix entries must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def identity(cls, k: int) -> "SquareMatrix":
        return cls(np.eye(k))

    @classmethod
    def diagonal(cls, values) -> "SquareMatrix":
        return cls(np.diag(np.asarray(values, dtype=float)))

    def scaled(self, c: float) -> "SquareMatrix":
        return SquareMatrix(c * self.entries)


def as_square_matrix(a) -> SquareMatrix:
    """Coerce an array-like or SquareMatrix to SquareMatrix."""
    if isinstance(a, SquareMatrix):
        return a
    return SquareMatrix(np.asarray(a, dtype=float))


def _jacobi_eigenvalues(s: np.ndarray) -> np.ndarray:
    """Eigenvalues of a symmetric matrix via cyclic Jacobi rotations.

    The sweep stops once the off-diagonal Frobenius norm drops below
    _JACOBI_TOL; callers pre-scale so that tolerance is meaningful.
    """
    a = np.array(s, dtype=float, copy=True)
    k = a.shape[0]
    if k == 1:
        return np.array([a[0, 0]])
    for _ in range(_MAX_SWEEPS):
        # Off-diagonal Frobenius norm from the entries themselves; the
        # total-minus-diagonal form cancels catastrophically near convergence.
        strict = a[~np.eye(k, dtype=bool)]
        if math.sqrt(float(strict @ strict)) < _JACOBI_TOL:
            return np.diagonal(a).copy()
        for p in range(k - 1):
            for q in range(p + 1, k):
                apq = float(a[p, q])
                if apq == 0.0:
                    continue
                diff = float(a[q, q] - a[p, p])
                if abs(apq) * 1e15 < abs(diff):
                    # First-order angle; the exact formula would overflow.
                    t = apq / diff
                else:
                    tau = diff / (2.0 * apq)
                    t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * c
                app, aqq = a[p, p], a[q, q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = a[q, p] = 0.0
                for r in range(k):
                    if r == p or r == q:
                        continue
                    arp, arq = a[r, p], a[r, q]
                    a[r, p] = a[p, r] = c * arp - sn * arq
                    a[r, q] = a[q, r] = sn * arp + c * arq
    raise ArithmeticError("Jacobi sweep failed to converge")


def singular_values(a) -> np.ndarray:
    """All singular values of a, ascending.

    Computed as square roots of the eigenvalues of A^t A after normalizing A
    to unit Frobenius norm (keeps the stopping tolerance scale-invariant).
    Eigenvalues are clamped at zero before the square root to absorb
    -1e-16-style round-off.
    """
    m = as_square_matrix(a).entries
    scale = float(np.linalg.norm(m))
    if scale == 0.0:
        return np.zeros(m.shape[0])
    lam = _jacobi_eigenvalues((m / scale).T @ (m / scale))
    return scale * np.sqrt(np.sort(np.clip(lam, 0.0, None)))


def smallest_singular_value(a) -> float:
    """sigma_1(A): the smallest singular value."""
    return float(singular_values(a)[0])


def sigma1_lower_bound(a) -> float:
    """Determinant-trace lower bound on the smallest singular value.

    Returns sqrt(det(A^t A) / trace(A^t A)^(k-1)), which never exceeds
    sigma_1(A).  Evaluated as |det A| / ||A||_F^(k-1); the two forms agree
    because det(A^t A) = det(A)^2 and trace(A^t A) = ||A||_F^2.
    """
    m = as_square_matrix(a).entries
    k = m.shape[0]
    frob = float(np.linalg.norm(m))
    if frob == 0.0:
        raise ValueError("zero matrix: trace(A^t A) vanishes")
    if k == 1:
        return abs(float(m[0, 0]))
    # Work with the Frobenius-normalized matrix so the power stays tame.
    det_scaled = abs(float(np.linalg.det(m / frob)))
    return frob * det_scaled


def nu1(a) -> float:
    """1 / sigma_1(A): the scale factor in exchangeable-pair tail bounds."""
    sigma1 = smallest_singular_value(a)
    if sigma1 <= 0.0:
        raise ValueError("matrix is singular: nu1 is undefined")
    return 1.0 / sigma1
