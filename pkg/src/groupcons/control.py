"""Riccati-based gain design and coupling-strength thresholds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InfeasibleTopologyError, RiccatiError
from .graph import ClusteredDigraph, laplacian
from .reduction import reduced_laplacian
from .spectral import eigenvalues, min_nonzero_real_part, min_real_part, zero_eig_count

__all__ = [
    "Dynamics",
    "ControlDesign",
    "CouplingThresholds",
    "oscillator",
    "single_integrator",
    "is_stabilizable",
    "solve_riccati",
    "riccati_residual",
    "gain",
    "coupling_thresholds",
    "design",
]


def is_stabilizable(A: np.ndarray, B: np.ndarray, tol: float = 1e-9) -> bool:
    """PBH test: ``[A - lam I, B]`` has full row rank for every Re(lam) >= 0."""
    n = A.shape[0]
    scale = 1.0 + np.linalg.norm(A, 1) + np.linalg.norm(B, 1)
    for lam in np.linalg.eigvals(A):
        if lam.real < -tol * scale:
            continue
        pencil = np.hstack([A - lam * np.eye(n), B])
        sv = np.linalg.svd(pencil, compute_uv=False)
        if sv[-1] <= tol * scale:
            return False
    return True


@dataclass(frozen=True, eq=False)
class Dynamics:
    """Agent model ``dx/dt = A x + B u`` with Riccati weight ``Q`` (identity by default)."""

    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray | None = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError(f"A must be square, got {A.shape}")
        B = np.asarray(self.B, dtype=float)
        if B.ndim < 2:
            B = B.reshape(n, -1)
        if B.shape[0] != n:
            raise ValueError(f"B must have {n} rows, got {B.shape}")
        Q = np.eye(n) if self.Q is None else np.atleast_2d(np.asarray(self.Q, dtype=float))
        if Q.shape != (n, n):
            raise ValueError(f"Q must be {n}x{n}, got {Q.shape}")
        if not np.allclose(Q, Q.T, rtol=0, atol=1e-12 * (1 + np.abs(Q).max())):
            raise ValueError("Q must be symmetric")
        if np.linalg.eigvalsh(Q).min() <= 0:
            raise ValueError("Q must be positive definite")
        if not is_stabilizable(A, B):
            raise ValueError("(A, B) is not stabilizable")
        for name, val in (("A", A), ("B", B), ("Q", Q)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.B.shape[1]


def oscillator() -> Dynamics:
    """Undamped harmonic oscillator driven through its velocity."""
    return Dynamics(np.array([[0.0, 1.0], [-1.0, 0.0]]), np.array([[0.0], [1.0]]))


def single_integrator() -> Dynamics:
    return Dynamics(np.zeros((1, 1)), np.ones((1, 1)))


def riccati_residual(P, A, B, Q) -> np.ndarray:
    return P @ A + A.T @ P - P @ B @ B.T @ P + Q


def solve_riccati(dyn: Dynamics) -> np.ndarray:
    """Stabilizing solution of ``PA + A'P - PBB'P + Q = 0``.

    Takes the stable invariant subspace ``[U1; U2]`` of the Hamiltonian
    ``[[A, -BB'], [-Q, -A']]`` from an ordered real Schur form, forms
    ``P = U2 U1^-1`` and polishes it with a few Newton-Kleinman steps.
    """
    A, B, Q = dyn.A, dyn.B, dyn.Q
    n = dyn.n
    H = np.block([[A, -B @ B.T], [-Q, -A.T]])
    try:
        _, Z, sdim = scipy.linalg.schur(H, output="real", sort="lhp")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise RiccatiError(f"ordered Schur decomposition failed: {exc}") from exc
    if sdim != n:
        raise RiccatiError(f"Hamiltonian has {sdim} stable eigenvalues, expected {n}")
    U1, U2 = Z[:n, :n], Z[n:, :n]
    try:
        P = np.linalg.solve(U1.T, U2.T).T
    except np.linalg.LinAlgError as exc:
        raise RiccatiError("stable subspace basis is singular") from exc
    P = _refine((P + P.T) / 2, A, B, Q)
    res = np.linalg.norm(riccati_residual(P, A, B, Q))
    # relative to the size of the individual terms
    scale = np.linalg.norm(Q) + 2 * np.linalg.norm(A) * np.linalg.norm(P) + np.linalg.norm(P @ B) ** 2
    if res > 1e-10 * scale:
        raise RiccatiError(f"Riccati residual {res:.3g} exceeds tolerance")
    try:
        np.linalg.cholesky(P)
    except np.linalg.LinAlgError as exc:
        raise RiccatiError("Riccati solution is not positive definite") from exc
    return P


def _refine(P, A, B, Q, steps: int = 3):
    """Newton-Kleinman corrections; each step is kept only if it lowers the residual."""
    best = np.linalg.norm(riccati_residual(P, A, B, Q))
    for _ in range(steps):
        K = B.T @ P
        Ac = A - B @ K
        if np.linalg.eigvals(Ac).real.max() >= 0:
            break
        try:
            cand = scipy.linalg.solve_continuous_lyapunov(Ac.T, -(Q + K.T @ K))
        except (np.linalg.LinAlgError, ValueError):
            break
        cand = (cand + cand.T) / 2
        res = np.linalg.norm(riccati_residual(cand, A, B, Q))
        if not res < best:
            break
        P, best = cand, res
    return P


def gain(P, B) -> np.ndarray:
    P = np.atleast_2d(np.asarray(P, dtype=float))
    B = np.asarray(B, dtype=float).reshape(P.shape[0], -1)
    if P.shape[0] != P.shape[1]:
        raise ValueError(f"P must be square, got {P.shape}")
    return B.T @ P


@dataclass(frozen=True)
class CouplingThresholds:
    """Lower bounds on the coupling strength.

    ``delta_group`` guarantees group consensus; ``delta_pattern`` (not smaller)
    additionally guarantees the predicted limit pattern.  Zero means any
    positive coupling works.
    """

    delta_group: float
    delta_pattern: float
    min_real_reduced: float
    min_nonzero_real: float | None


def coupling_thresholds(g: ClusteredDigraph) -> CouplingThresholds:
    """``1/(2 min Re sigma(Lhat))`` and ``1/(2 * lowest nonzero Re sigma(L))``.

    Raises ``InfeasibleTopologyError`` if the reduced matrix has an eigenvalue
    with nonpositive real part.
    """
    red = reduced_laplacian(g)
    spec_hat = red.split.reduced
    mr = min_real_part(spec_hat)
    if math.isfinite(mr) and (mr <= spec_hat.zero_tol or zero_eig_count(spec_hat) > 0):
        raise InfeasibleTopologyError(
            f"reduced Laplacian has min real part {mr:.3g}; group consensus is unreachable"
        )
    delta_group = 0.0 if math.isinf(mr) else 1.0 / (2.0 * mr)
    full = eigenvalues(laplacian(g))
    if full.nonzero.size:
        lam = min_nonzero_real_part(full)
        delta_pattern = 1.0 / (2.0 * lam)
    else:
        lam = None
        delta_pattern = 0.0
    return CouplingThresholds(delta_group, delta_pattern, mr, lam)


@dataclass(frozen=True, eq=False)
class ControlDesign:
    P: np.ndarray
    K: np.ndarray
    residual_norm: float
    delta_group: float
    delta_pattern: float


def design(g: ClusteredDigraph, dyn: Dynamics) -> ControlDesign:
    P = solve_riccati(dyn)
    th = coupling_thresholds(g)
    res = float(np.linalg.norm(riccati_residual(P, dyn.A, dyn.B, dyn.Q)))
    return ControlDesign(P, gain(P, dyn.B), res, th.delta_group, th.delta_pattern)
