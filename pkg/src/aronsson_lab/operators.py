"""Pointwise PDE operators on second-order jets.

All operators take a :class:`~aronsson_lab.linalg.Jet` and return either a
plain residual vector in R^N or an :class:`OperatorReport` carrying the
tangential/normal split.  The normal terms of the limit operators use the
coefficient 2 H(Du), which equals |H_P(Du)|^2 for every registered
Hamiltonian; with the Euclidean choice this reproduces
Delta_inf u = Du (x) Du : D^2 u + |Du|^2 [Du]^perp Lap(u) exactly, so the
specialization chain full system -> infinity-Laplacian -> contracted system
holds to roundoff.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hamiltonians import Hamiltonian
from .linalg import (
    Jet,
    ProjectionPair,
    contract,
    gram_jacobian,
    h_jacobian,
    max_eigen_field,
    svd_projections,
)
from .errors import EigenvalueCoalescence


@dataclass(frozen=True)
class OperatorReport:
    """Operator value with its tangential/normal decomposition.

    ``degenerate`` flags fragile rank decisions (a singular value inside
    the band [0.1, 10] * rank_tol * sigma_max); the value is still the
    literal formula evaluation, never silently regularized.
    """

    value: np.ndarray
    tangential_part: np.ndarray
    normal_part: np.ndarray
    rank: int
    degenerate: bool = False
    reason: str | None = None


def _tangential(G: np.ndarray, hess: np.ndarray) -> np.ndarray:
    # (G (x) G : X)_a = G_{a i} G_{b j} X_{b i j}
    return np.einsum("ai,bj,bij->a", G, G, hess)


def _laplacian(hess: np.ndarray) -> np.ndarray:
    return np.einsum("aii->a", hess)


def _split_report(tang, normal, pair: ProjectionPair, rank_tol: float) -> OperatorReport:
    ambiguous = pair.rank_ambiguous(rank_tol)
    return OperatorReport(
        value=tang + normal,
        tangential_part=tang,
        normal_part=normal,
        rank=pair.rank,
        degenerate=ambiguous,
        reason="rank ambiguity" if ambiguous else None,
    )


def tangential_aronsson(H: Hamiltonian, jet: Jet) -> np.ndarray:
    """Tangential Aronsson system H_P(Du) (x) H_P(Du) : D^2u."""
    return _tangential(H.grad(jet.grad), jet.hess)


def tangential_inf_laplacian(jet: Jet) -> np.ndarray:
    """Euclidean tangential infinity-Laplacian
    D_i u_a D_j u_b D^2_{ij} u_b (index-formula evaluation)."""
    return np.einsum("ai,bj,bij->a", jet.grad, jet.grad, jet.hess)


def full_aronsson(H: Hamiltonian, jet: Jet, rank_tol: float = 1e-9) -> OperatorReport:
    """Complete Aronsson system: tangential part H_P (x) H_P : D^2u plus
    the normal term 2 H(Du) [H_P(Du)]^perp (H_PP(Du) : D^2u).

    Propagates EigenvalueCoalescence from nonsmooth Hamiltonians.
    """
    G = H.grad(jet.grad)
    tang = _tangential(G, jet.hess)
    pair = svd_projections(G, rank_tol)
    contraction = contract(H.hess(jet.grad), jet.hess)
    normal = 2.0 * H.value(jet.grad) * (pair.normal @ contraction)
    return _split_report(tang, normal, pair, rank_tol)


def inf_laplacian(jet: Jet, rank_tol: float = 1e-9) -> OperatorReport:
    """Euclidean infinity-Laplacian
    Du (x) Du : D^2u + |Du|^2 [Du]^perp Lap(u)."""
    Du = jet.grad
    tang = _tangential(Du, jet.hess)
    pair = svd_projections(Du, rank_tol)
    normal = float(np.sum(Du * Du)) * (pair.normal @ _laplacian(jet.hess))
    return _split_report(tang, normal, pair, rank_tol)


def gamma_inf(jet: Jet, rank_tol: float = 1e-9,
              hamiltonian: Hamiltonian | None = None) -> OperatorReport:
    """Varifold modification: the normal coefficient is the squared
    Jacobian (Ju)^2 (or (J_H u)^2 for a general Hamiltonian), which is
    continuous and vanishes when rank(Du) drops below min(n, N)."""
    Du = jet.grad
    if hamiltonian is None:
        tang = _tangential(Du, jet.hess)
        pair = svd_projections(Du, rank_tol)
        coef = gram_jacobian(Du) ** 2
        normal = coef * (pair.normal @ _laplacian(jet.hess))
    else:
        G = hamiltonian.grad(Du)
        tang = _tangential(G, jet.hess)
        pair = svd_projections(G, rank_tol)
        coef = h_jacobian(hamiltonian, Du) ** 2
        normal = coef * (pair.normal @ contract(hamiltonian.hess(Du), jet.hess))
    return _split_report(tang, normal, pair, rank_tol)


def dual_inf_laplacian(jet: Jet, e: np.ndarray, De: np.ndarray,
                       gap_tol: float = 1e-6) -> np.ndarray:
    """Dual-norm infinity-Laplacian
    (e^T Du) (x) (e^T Du) : (e^T D^2u) e + e^perp Div(e (x) e Du),
    where e is the top eigenvector field of Du Du^T and De its spatial
    derivative (analytic when the family registers it, finite differences
    otherwise).  The divergence is expanded by the product rule:

        Div(e (x) e Du)_a = (De w)_a + e_a (De : Du + e^T Lap u),
        w := Du^T e.

    Raises EigenvalueCoalescence when the top eigenvalue is not strict,
    i.e. where the operator is undefined.
    """
    Du, hess = jet.grad, jet.hess
    _, strict = max_eigen_field(Du, gap_tol)
    if not strict:
        raise EigenvalueCoalescence(
            "dual infinity-Laplacian undefined: coalescent top eigenvalue"
        )
    e = np.asarray(e, dtype=float)
    De = np.asarray(De, dtype=float)
    w = Du.T @ e
    scalar = float(w @ np.einsum("b,bij->ij", e, hess) @ w)
    div = De @ w + e * (float(np.sum(De * Du)) + float(e @ _laplacian(hess)))
    e_perp = np.eye(jet.N) - np.outer(e, e)
    return scalar * e + e_perp @ div


def contracted_inf_system(jet: Jet, rank_tol: float = 1e-9) -> np.ndarray:
    """First-order-contracted infinity-Laplacian
    Du D(1/2 |Du|^2) + |Du|^2 [Du]^perp Div(Du); equals the
    infinity-Laplacian on C^2 jets."""
    Du, hess = jet.grad, jet.hess
    half_grad = np.einsum("bi,bij->j", Du, hess)  # D_j(1/2 |Du|^2)
    pair = svd_projections(Du, rank_tol)
    return Du @ half_grad + float(np.sum(Du * Du)) * (pair.normal @ _laplacian(hess))


def contracted_aronsson_system(H: Hamiltonian, jet: Jet, rank_tol: float = 1e-9,
                               hp_divergence: np.ndarray | None = None) -> np.ndarray:
    """Contracted Aronsson system
    H_P(Du) D(H(Du)) + 2 H(Du) [H_P(Du)]^perp Div(H_P(Du)).

    Both first-order factors come from the chain rule on the jet:
    D(H(Du))_j = H_{P_{ai}} D^2_{ij} u_a and
    Div(H_P(Du))_a = H_PP : D^2u; an analytic divergence may be supplied
    to override the latter.
    """
    G = H.grad(jet.grad)
    dH = np.einsum("ai,aij->j", G, jet.hess)
    div = contract(H.hess(jet.grad), jet.hess) if hp_divergence is None else np.asarray(hp_divergence, dtype=float)
    pair = svd_projections(G, rank_tol)
    return G @ dH + 2.0 * H.value(jet.grad) * (pair.normal @ div)


def p_euler_lagrange_residual(H: Hamiltonian, jet: Jet, p: float) -> np.ndarray:
    """Expanded Euler-Lagrange residual of the p-energy of H(Du):
    H_P (x) H_P : D^2u + (H(Du)/(p-1)) H_PP : D^2u."""
    if p <= 1:
        raise ValueError("p must exceed 1")
    G = H.grad(jet.grad)
    return _tangential(G, jet.hess) + (H.value(jet.grad) / (p - 1.0)) * contract(
        H.hess(jet.grad), jet.hess
    )


def residual_split(H: Hamiltonian, jet: Jet, p: float,
                   rank_tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Projection-renormalized split of the p-Euler-Lagrange system.

    LHS is the full Aronsson value; RHS = -(H(Du)/(p-1)) [H_P]^par
    (H_PP : D^2u) lies in range(H_P) by construction.  At an exact
    p-critical jet the two sides agree, and RHS -> 0 as p -> infinity.
    """
    if p <= 1:
        raise ValueError("p must exceed 1")
    report = full_aronsson(H, jet, rank_tol)
    G = H.grad(jet.grad)
    pair = svd_projections(G, rank_tol)
    contraction = contract(H.hess(jet.grad), jet.hess)
    rhs = -(H.value(jet.grad) / (p - 1.0)) * (pair.tangential @ contraction)
    return report.value, rhs
