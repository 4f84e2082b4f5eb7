"""Dense spectra and the spectral quantities used by the consensus theorems."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import EigenvalueError

__all__ = [
    "Spectrum",
    "eigenvalues",
    "zero_tolerance",
    "zero_eig_count",
    "min_nonzero_real_part",
    "min_real_part",
    "hurwitz_check",
    "match_multisets",
]

TOL_ENV = "GCL_TOL_ZERO"


def zero_tolerance(M: np.ndarray) -> float:
    """Zero-classification threshold ``1e-8 * (1 + ||M||_inf)``.

    The environment variable ``GCL_TOL_ZERO`` replaces it with an absolute value.
    """
    override = os.environ.get(TOL_ENV)
    if override:
        return float(override)
    M = np.asarray(M)
    norm = float(np.abs(M).sum(axis=1).max()) if M.size else 0.0
    return 1e-8 * (1.0 + norm)


@dataclass(frozen=True, eq=False)
class Spectrum:
    values: np.ndarray
    source_dim: int
    zero_tol: float

    def __len__(self):
        return len(self.values)

    @property
    def nonzero(self) -> np.ndarray:
        return self.values[np.abs(self.values) > self.zero_tol]


def _sort(vals: np.ndarray) -> np.ndarray:
    vals = np.asarray(vals, dtype=complex)
    return vals[np.lexsort((vals.imag, vals.real))]


def eigenvalues(M) -> Spectrum:
    """Full complex spectrum of a square real matrix, sorted by (Re, Im)."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    if M.shape[0] == 0:
        return Spectrum(np.zeros(0, dtype=complex), 0, zero_tolerance(M))
    try:
        vals = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise EigenvalueError(str(exc)) from exc
    return Spectrum(_sort(vals), M.shape[0], zero_tolerance(M))


def zero_eig_count(spec: Spectrum) -> int:
    return int(np.count_nonzero(np.abs(spec.values) <= spec.zero_tol))


def min_nonzero_real_part(spec: Spectrum) -> float:
    nz = spec.nonzero
    if nz.size == 0:
        raise ValueError("spectrum has no nonzero eigenvalue")
    return float(nz.real.min())


def min_real_part(spec: Spectrum) -> float:
    """Smallest real part; ``inf`` for an empty spectrum (nothing to stabilize)."""
    if len(spec) == 0:
        return math.inf
    return float(spec.values.real.min())


def hurwitz_check(A, B, K, delta: float, spec: Spectrum) -> tuple[bool, float]:
    """Stability of ``I (x) A - delta * M (x) BK`` for a matrix M with spectrum ``spec``.

    Uses the Kronecker spectral mapping: the product is Hurwitz iff
    ``A - delta*lam*BK`` is Hurwitz for every eigenvalue ``lam`` of M.
    Returns ``(is_hurwitz, margin)`` with margin the negated largest real part.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    K = np.asarray(K, dtype=float).reshape(B.shape[1], -1)
    if A.shape[0] != A.shape[1] or K.shape[1] != A.shape[0]:
        raise ValueError(f"dimension mismatch: A {A.shape}, B {B.shape}, K {K.shape}")
    if len(spec) == 0:
        return True, math.inf
    BK = B @ K
    worst = max(np.linalg.eigvals(A - delta * lam * BK).real.max() for lam in spec.values)
    return bool(worst < 0), float(-worst)


def match_multisets(a, b, tol: float = 1e-6) -> tuple[bool, float]:
    """Greedy pairing of two complex multisets.

    Each value of ``a`` (in (Re, Im) order) is paired with the nearest unused
    value of ``b``.  Returns whether every pair lies within ``tol`` and the
    largest pair distance.
    """
    a = _sort(np.asarray(a).ravel())
    b = _sort(np.asarray(b).ravel())
    if a.size != b.size:
        return False, math.inf
    used = np.zeros(b.size, dtype=bool)
    worst = 0.0
    for x in a:
        dist = np.where(used, np.inf, np.abs(b - x))
        j = int(np.argmin(dist))
        used[j] = True
        worst = max(worst, float(dist[j]))
    return worst <= tol, worst
