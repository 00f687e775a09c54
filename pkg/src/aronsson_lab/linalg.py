"""Dense linear algebra on the small matrix space R^N (x) R^n.

A "matrix" P is a plain (N, n) float array housing a gradient-like object,
a Hessian is an (N, n, n) array symmetric in its trailing index pair, and
fourth-order tensors over the matrix space have shape (N, n, N, n).  N and
n are runtime values; everything here is desk scale (N, n <= 4), so the
implementations favour robustness and clarity over speed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch


def as_matrix(P, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-d float array."""
    arr = np.asarray(P, dtype=float)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-d, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_hessian(X, name: str = "hessian") -> np.ndarray:
    """Coerce to a finite (N, n, n) array, exactly symmetric in (i, j).

    Symmetry is enforced by averaging the trailing index pair, so the
    stored tensor satisfies X[a, i, j] == X[a, j, i] bit for bit.
    """
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise DimensionMismatch(f"{name} must have shape (N, n, n), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return 0.5 * (arr + arr.transpose(0, 2, 1))


@dataclass(frozen=True)
class Jet:
    """Second-order pointwise data (u(x), Du(x), D^2u(x)) of a map
    u: R^n -> R^N — the universal operator input.

    ``grad`` is (N, n) and ``hess`` is (N, n, n) with exact (i, j)
    symmetry; constructors reject non-finite entries.
    """

    point: np.ndarray
    value: np.ndarray
    grad: np.ndarray
    hess: np.ndarray

    def __post_init__(self):
        point = np.atleast_1d(np.asarray(self.point, dtype=float))
        value = np.atleast_1d(np.asarray(self.value, dtype=float))
        grad = as_matrix(self.grad, "jet gradient")
        hess = as_hessian(self.hess, "jet hessian")
        if not (np.all(np.isfinite(point)) and np.all(np.isfinite(value))):
            raise ValueError("jet point/value contain non-finite entries")
        N, n = grad.shape
        if point.shape != (n,) or value.shape != (N,) or hess.shape != (N, n, n):
            raise DimensionMismatch(
                f"inconsistent jet shapes: point {point.shape}, value {value.shape}, "
                f"grad {grad.shape}, hess {hess.shape}"
            )
        object.__setattr__(self, "point", point)
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "grad", grad)
        object.__setattr__(self, "hess", hess)

    @property
    def n(self) -> int:
        return self.grad.shape[1]

    @property
    def N(self) -> int:
        return self.grad.shape[0]


def pair_tensor(P, Q) -> np.ndarray:
    """Outer product P (x) Q as a fourth-order (N, n, N, n) tensor."""
    P = as_matrix(P, "P")
    Q = as_matrix(Q, "Q")
    return np.einsum("ai,bj->aibj", P, Q)


def identity_tensor(N: int, n: int) -> np.ndarray:
    """delta_{ab} delta_{ij} as an (N, n, N, n) tensor."""
    return np.einsum("ab,ij->aibj", np.eye(N), np.eye(n))


def contract(tensor, hess) -> np.ndarray:
    """Contraction (A : X)_a = A_{a i b j} X_{b i j} of a fourth-order
    tensor against a symmetric second-order slot."""
    A = np.asarray(tensor, dtype=float)
    X = np.asarray(hess, dtype=float)
    if A.ndim != 4 or X.ndim != 3:
        raise DimensionMismatch(f"contract expects 4-d and 3-d arrays, got {A.shape}, {X.shape}")
    N, n = A.shape[0], A.shape[1]
    if A.shape != (N, n, N, n) or X.shape != (N, n, n):
        raise DimensionMismatch(f"contract shape mismatch: tensor {A.shape}, hessian {X.shape}")
    return np.einsum("aibj,bij->a", A, X)


def operator_norm(P) -> float:
    """max over unit w of |P w|, i.e. the largest singular value of P."""
    P = as_matrix(P, "P")
    if not P.any():
        return 0.0
    return float(np.linalg.svd(P, compute_uv=False)[0])


def dual_operator_norm(P) -> float:
    """max over unit xi of |xi^T P| = max sigma(P P^T)^(1/2).

    Equals operator_norm(P) for every P; computed through the left Gram
    matrix so the two routes stay independent.
    """
    P = as_matrix(P, "P")
    lam = np.linalg.eigvalsh(P @ P.T)[-1]
    return float(np.sqrt(max(lam, 0.0)))


@dataclass(frozen=True)
class ProjectionPair:
    """Orthogonal projections of R^N onto the range of P (tangential) and
    onto the null space of P^T (normal), with the singular values used to
    decide the rank."""

    tangential: np.ndarray
    normal: np.ndarray
    rank: int
    singular_values: np.ndarray

    def rank_ambiguous(self, tol: float) -> bool:
        """True when some singular value falls in the band
        [0.1, 10] * tol * sigma_max, so the rank decision is fragile."""
        s = self.singular_values
        if s.size == 0 or s[0] == 0.0:
            return False
        cut = tol * s[0]
        return bool(np.any((s >= 0.1 * cut) & (s <= 10.0 * cut)))


def svd_projections(P, tol: float = 1e-9) -> ProjectionPair:
    """Split R^N into range(P) and null(P^T) by SVD.

    Rank counts singular values above the relative cutoff tol * sigma_max;
    P = 0 gives tangential = 0, normal = I, rank 0.
    """
    P = as_matrix(P, "P")
    if tol <= 0:
        raise ValueError("tol must be positive")
    N = P.shape[0]
    if not P.any():
        return ProjectionPair(np.zeros((N, N)), np.eye(N), 0, np.zeros(min(P.shape)))
    U, s, _ = np.linalg.svd(P)
    rank = int(np.sum(s > tol * s[0]))
    Ur = U[:, :rank]
    tangential = Ur @ Ur.T
    tangential = 0.5 * (tangential + tangential.T)
    normal = np.eye(N) - tangential
    return ProjectionPair(tangential, normal, rank, s)


def max_eigen_field(P, gap_tol: float = 1e-6) -> tuple[np.ndarray, bool]:
    """Top unit eigenvector e of P P^T and a strictness flag.

    strict is True iff (lam1 - lam2) / max(lam1, eps) > gap_tol; for N = 1
    the spectrum has a single point and the maximum is always strict.  The
    sign is fixed by making the first component with |e_a| > 1e-8
    positive.
    """
    P = as_matrix(P, "P")
    if gap_tol <= 0:
        raise ValueError("gap_tol must be positive")
    N = P.shape[0]
    lam, vecs = np.linalg.eigh(P @ P.T)
    e = vecs[:, -1].copy()
    if N == 1:
        strict = True
    else:
        lam1, lam2 = lam[-1], lam[-2]
        strict = (lam1 - lam2) / max(lam1, np.finfo(float).eps) > gap_tol
    for comp in e:
        if abs(comp) > 1e-8:
            if comp < 0:
                e = -e
            break
    return e, strict


def gram_jacobian(G) -> float:
    """Generalized Jacobian det(G^T G)^(1/2) for n <= N, det(G G^T)^(1/2)
    for n >= N; both branches agree for square G."""
    G = as_matrix(G, "G")
    N, n = G.shape
    M = G.T @ G if n <= N else G @ G.T
    return float(np.sqrt(max(np.linalg.det(M), 0.0)))


def h_jacobian(hamiltonian, P) -> float:
    """Jacobian of the Hamiltonian gradient H_P(P); for H = 1/2 |P|^2 this
    is the ordinary Jacobian (product of singular values of P)."""
    return gram_jacobian(hamiltonian.grad(as_matrix(P, "P")))
