"""Hamiltonian descriptors H(P), H_P(P), H_PP(P) on the matrix space.

Three concrete Hamiltonians are registered:

* ``euclidean``    — H(P) = scale * 1/2 |P|^2 (Frobenius),
* ``dual-op-norm`` — H(P) = 1/2 ||P||_*^2, the squared dual operator norm,
  with H_P = (e (x) e) P through the top eigenvector e of P P^T and a
  finite-difference Hessian guarded by an eigenvalue-gap check,
* ``segment-flat`` — half the squared Frobenius distance to the affine
  line through eta (x) a and eta (x) b; identically zero with zero
  gradient on the segment, so the rank-one singular family has a flat
  Hamiltonian level set along it.

Only x- and eta-independent Hamiltonians are supported.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, DimensionMismatch, EigenvalueCoalescence
from .linalg import as_matrix, identity_tensor, max_eigen_field

_FD_HESS_STEP = 1e-6


@dataclass(frozen=True)
class Hamiltonian:
    """Immutable bundle of H, H_P, H_PP evaluators for (N, n) matrices."""

    name: str
    N: int
    n: int
    smooth_everywhere: bool
    _value: Callable[[np.ndarray], float]
    _grad: Callable[[np.ndarray], np.ndarray]
    _hess: Callable[[np.ndarray], np.ndarray]
    _value_many: Callable[[np.ndarray], np.ndarray] | None = field(default=None)
    _grad_many: Callable[[np.ndarray], np.ndarray] | None = field(default=None)

    def _check(self, P) -> np.ndarray:
        P = as_matrix(P, "P")
        if P.shape != (self.N, self.n):
            raise DimensionMismatch(
                f"Hamiltonian {self.name} expects {(self.N, self.n)}, got {P.shape}"
            )
        return P

    def value(self, P) -> float:
        return float(self._value(self._check(P)))

    def grad(self, P) -> np.ndarray:
        return self._grad(self._check(P))

    def hess(self, P) -> np.ndarray:
        return self._hess(self._check(P))

    def value_many(self, Ps: np.ndarray) -> np.ndarray:
        """Vectorized H over a stack of matrices (..., N, n)."""
        Ps = np.asarray(Ps, dtype=float)
        if self._value_many is not None:
            return self._value_many(Ps)
        flat = Ps.reshape(-1, self.N, self.n)
        return np.array([self._value(P) for P in flat]).reshape(Ps.shape[:-2])

    def grad_many(self, Ps: np.ndarray) -> np.ndarray:
        """Vectorized H_P over a stack of matrices (..., N, n)."""
        Ps = np.asarray(Ps, dtype=float)
        if self._grad_many is not None:
            return self._grad_many(Ps)
        flat = Ps.reshape(-1, self.N, self.n)
        return np.stack([self._grad(P) for P in flat]).reshape(Ps.shape)


def euclidean_hamiltonian(N: int, n: int, scale: float = 1.0) -> Hamiltonian:
    """H(P) = scale * 1/2 |P|^2 with H_P = scale * P and constant identity
    Hessian tensor."""
    if N < 1 or n < 1:
        raise ValueError("N, n must be >= 1")
    ident = scale * identity_tensor(N, n)
    return Hamiltonian(
        name="euclidean" if scale == 1.0 else f"euclidean*{scale:g}",
        N=N,
        n=n,
        smooth_everywhere=True,
        _value=lambda P: 0.5 * scale * float(np.sum(P * P)),
        _grad=lambda P: scale * P,
        _hess=lambda P: ident,
        _value_many=lambda Ps: 0.5 * scale * np.sum(Ps * Ps, axis=(-2, -1)),
        _grad_many=lambda Ps: scale * Ps,
    )


def _fd_hessian_of_grad(grad: Callable[[np.ndarray], np.ndarray], P: np.ndarray,
                        step: float = _FD_HESS_STEP) -> np.ndarray:
    """Central finite differences of an analytic gradient, symmetrized in
    the (alpha i) <-> (beta j) pair."""
    N, n = P.shape
    hess = np.zeros((N, n, N, n))
    for b in range(N):
        for j in range(n):
            bump = np.zeros_like(P)
            bump[b, j] = step
            hess[:, :, b, j] = (grad(P + bump) - grad(P - bump)) / (2.0 * step)
    return 0.5 * (hess + hess.transpose(2, 3, 0, 1))


def dual_norm_hamiltonian(N: int, n: int, gap_tol: float = 1e-6) -> Hamiltonian:
    """H(P) = 1/2 ||P||_*^2 built on the top eigenvector e of P P^T.

    H_P(P) = (e (x) e) P wherever the top eigenvalue is strict; at
    coalescent spectra the gradient and Hessian raise
    EigenvalueCoalescence.  The Hessian is finite-differenced from the
    analytic gradient (the dual norm is nonsmooth, so there is no global
    analytic H_PP to write down).
    """
    if N < 1 or n < 1:
        raise ValueError("N, n must be >= 1")

    def value(P: np.ndarray) -> float:
        lam = np.linalg.eigvalsh(P @ P.T)[-1]
        return 0.5 * float(max(lam, 0.0))

    def grad(P: np.ndarray) -> np.ndarray:
        e, strict = max_eigen_field(P, gap_tol)
        if not strict:
            raise EigenvalueCoalescence(
                "top eigenvalue of P P^T is not strict within gap_tol; "
                "dual-norm gradient undefined"
            )
        return np.outer(e, e) @ P

    def hess(P: np.ndarray) -> np.ndarray:
        grad(P)  # degeneracy guard at the expansion point itself
        return _fd_hessian_of_grad(grad, P)

    def value_many(Ps: np.ndarray) -> np.ndarray:
        gram = np.einsum("...ai,...bi->...ab", Ps, Ps)
        lam = np.linalg.eigvalsh(gram)[..., -1]
        return 0.5 * np.maximum(lam, 0.0)

    return Hamiltonian(
        name="dual-op-norm",
        N=N,
        n=n,
        smooth_everywhere=False,
        _value=value,
        _grad=grad,
        _hess=hess,
        _value_many=value_many,
    )


def segment_flat_hamiltonian(eta, a, b) -> Hamiltonian:
    """Half the squared Frobenius distance to the affine line through
    eta (x) a and eta (x) b.

    H and H_P vanish identically on the segment [eta (x) a, eta (x) b],
    and H_PP is the constant projection tensor complementary to the line
    direction.
    """
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    N, n = eta.size, a.size
    if b.size != n:
        raise DimensionMismatch("a and b must have the same length")
    A0 = np.outer(eta, a)
    direction = np.outer(eta, b) - A0
    dnorm = np.linalg.norm(direction)
    if dnorm <= 1e-14:
        raise ValueError("degenerate segment: eta(x)a and eta(x)b coincide")
    D = direction / dnorm
    # residual of the orthogonal projection onto {A0 + t D}
    proj_tensor = identity_tensor(N, n) - np.einsum("ai,bj->aibj", D, D)

    def residual(P: np.ndarray) -> np.ndarray:
        Q = P - A0
        return Q - float(np.sum(Q * D)) * D

    def residual_many(Ps: np.ndarray) -> np.ndarray:
        Q = Ps - A0
        coef = np.sum(Q * D, axis=(-2, -1))
        return Q - coef[..., None, None] * D

    return Hamiltonian(
        name="segment-flat",
        N=N,
        n=n,
        smooth_everywhere=True,
        _value=lambda P: 0.5 * float(np.sum(residual(P) ** 2)),
        _grad=residual,
        _hess=lambda P: proj_tensor,
        _value_many=lambda Ps: 0.5 * np.sum(residual_many(Ps) ** 2, axis=(-2, -1)),
        _grad_many=residual_many,
    )


@dataclass(frozen=True)
class MonotonicityReport:
    holds: bool
    worst_margin: float
    worst_matrix: np.ndarray
    worst_direction: np.ndarray


def rank1_monotonicity_probe(H: Hamiltonian, samples: int,
                             seed: int = 0, scale: float = 1.0) -> MonotonicityReport:
    """Sample (Q, xi) pairs and check the radial rank-one monotonicity
    H_P(Q) Q^T : xi (x) xi >= omega(|xi^T Q|) with omega(t) = t^2.

    Returns the minimal margin LHS - omega; ``holds`` is True iff no
    sampled pair violates the inequality.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    worst = np.inf
    worst_Q = np.zeros((H.N, H.n))
    worst_xi = np.zeros(H.N)
    worst_xi[0] = 1.0
    for _ in range(samples):
        Q = scale * rng.standard_normal((H.N, H.n))
        xi = rng.standard_normal(H.N)
        norm = np.linalg.norm(xi)
        if norm < 1e-12:
            continue
        xi /= norm
        lhs = float(xi @ (H.grad(Q) @ Q.T) @ xi)
        omega = float(np.sum((xi @ Q) ** 2))
        margin = lhs - omega
        if margin < worst:
            worst, worst_Q, worst_xi = margin, Q, xi
    return MonotonicityReport(worst >= -1e-12, worst, worst_Q, worst_xi)


def hamiltonian_from_config(config, N: int, n: int) -> Hamiltonian:
    """Build a Hamiltonian from a CLI config entry (a name or a dict with
    a ``name`` key plus parameters)."""
    if isinstance(config, str):
        config = {"name": config}
    if not isinstance(config, dict) or "name" not in config:
        raise ConfigError("hamiltonian config must be a name or a dict with 'name'")
    name = config["name"]
    if name == "euclidean":
        return euclidean_hamiltonian(N, n, scale=float(config.get("scale", 1.0)))
    if name == "dual-op-norm":
        return dual_norm_hamiltonian(N, n, gap_tol=float(config.get("gap_tol", 1e-6)))
    if name == "segment-flat":
        try:
            return segment_flat_hamiltonian(config["eta"], config["a"], config["b"])
        except KeyError as exc:
            raise ConfigError("segment-flat requires 'eta', 'a' and 'b'") from exc
    raise ConfigError(f"unknown hamiltonian {name!r}")
