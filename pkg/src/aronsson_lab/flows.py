"""Parametrized gradient flows with invariant monitors, and the
horizontal/vertical phase decomposition.

Flows are integrated with classical fixed-step RK4: they are smooth where
defined and desk scale, so adaptivity is unnecessary.  Traces terminate at
the domain boundary or at a rank-jump interface with an explicit exit flag
rather than extrapolating across it.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import StartInVerticalSet, StartOutsideXi
from .families import MapFamily
from .hamiltonians import Hamiltonian
from .linalg import Jet, ProjectionPair, svd_projections


@dataclass
class FlowTrace:
    """Time-stamped trajectory samples with monitored invariants.

    ``exit_reason`` is one of ``t_end``, ``boundary``, ``rank_jump``.
    """

    times: np.ndarray
    points: np.ndarray
    monitors: dict[str, np.ndarray]
    params: dict = field(default_factory=dict)
    exit_reason: str = "t_end"

    def write_csv(self, path) -> None:
        n = self.points.shape[1]
        names = list(self.monitors)
        with open(path, "w", newline="") as fh:
            for key in sorted(self.params):
                fh.write(f"# {key} = {self.params[key]}\n")
            fh.write(f"# exit_reason = {self.exit_reason}\n")
            writer = csv.writer(fh)
            writer.writerow(["t"] + [f"x_{i + 1}" for i in range(n)] + names)
            for k in range(self.times.size):
                row = [repr(float(self.times[k]))]
                row += [repr(float(v)) for v in self.points[k]]
                row += [repr(float(self.monitors[name][k])) for name in names]
                writer.writerow(row)


def _rk4_trace(velocity: Callable[[np.ndarray], np.ndarray], x0: np.ndarray,
               t_end: float, step: float, keep_going: Callable[[np.ndarray], bool]):
    """Fixed-step RK4; stops before a step whose endpoint fails
    ``keep_going``.  Returns (times, points, exit_reason)."""
    if step <= 0 or t_end <= 0:
        raise ValueError("step and t_end must be positive")
    steps = int(round(t_end / step))
    times = [0.0]
    points = [np.array(x0, dtype=float)]
    reason = "t_end"
    x = points[0]
    for k in range(steps):
        k1 = velocity(x)
        k2 = velocity(x + 0.5 * step * k1)
        k3 = velocity(x + 0.5 * step * k2)
        k4 = velocity(x + step * k3)
        x_next = x + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not keep_going(x_next):
            reason = "boundary"
            break
        x = x_next
        times.append((k + 1) * step)
        points.append(x)
    return np.array(times), np.array(points), reason


def tangential_flow(family: MapFamily, x0, xi, t_end: float, step: float) -> FlowTrace:
    """Flow of dx/dt = (xi^T Du(x))^T starting inside the admissible set
    {xi^T Du(x) != 0}; monitors |Du| (conserved along tangentially
    infinity-harmonic maps) and xi^T u (increasing)."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    xi = xi / np.linalg.norm(xi)
    if np.linalg.norm(family.grad(x0).T @ xi) < 1e-12:
        raise StartOutsideXi(f"xi^T Du vanishes at {x0.tolist()}")

    velocity = lambda x: family.grad(x).T @ xi
    times, points, reason = _rk4_trace(
        velocity, x0, t_end, step, keep_going=lambda x: family.domain.contains(x)
    )
    grad_norm = np.array([np.linalg.norm(family.grad(p)) for p in points])
    xi_dot_u = np.array([float(xi @ family.value(p)) for p in points])
    return FlowTrace(
        times, points,
        {"grad_norm": grad_norm, "xi_dot_u": xi_dot_u},
        params={"family": family.name, "x0": x0.tolist(), "xi": xi.tolist(),
                "step": step, "method": "rk4"},
        exit_reason=reason,
    )


@dataclass(frozen=True)
class IdentityReport:
    """Discrepancies between finite-difference time derivatives along a
    trace and their closed-form expressions."""

    first_derivative_max_error: float
    second_derivative_max_error: float
    samples: int
    step: float


def trajectory_identities(trace: FlowTrace, family: MapFamily, xi, eta) -> IdentityReport:
    """Check, along a computed trace of the tangential flow,

        d/dt (eta^T u(Phi))    = [xi (x) eta : Du Du^T](Phi)
        d^2/dt^2 (eta^T u(Phi)) = [D(xi^T u)^T D(xi (x) eta : Du Du^T)](Phi)

    (for eta = xi the second right-hand side is twice the scalar
    infinity-Laplacian of xi^T u).  Discrepancies are O(step^2).
    """
    if trace.times.size < 5:
        raise ValueError("trace too short for second time differences")
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    dt = float(trace.times[1] - trace.times[0])
    proj = np.array([float(eta @ family.value(p)) for p in trace.points])

    first_formula = np.empty(trace.times.size)
    second_formula = np.empty(trace.times.size)
    for k, p in enumerate(trace.points):
        jet = family.jet(p)
        wxi = jet.grad.T @ xi
        weta = jet.grad.T @ eta
        first_formula[k] = float(wxi @ weta)
        # D_j (xi (x) eta : Du Du^T) via the product rule on the jet
        dcross = (np.einsum("a,aij,i->j", xi, jet.hess, weta)
                  + np.einsum("i,b,bij->j", wxi, eta, jet.hess))
        second_formula[k] = float(wxi @ dcross)

    fd1 = (proj[2:] - proj[:-2]) / (2.0 * dt)
    fd2 = (proj[2:] - 2.0 * proj[1:-1] + proj[:-2]) / (dt * dt)
    err1 = float(np.max(np.abs(fd1 - first_formula[1:-1])))
    err2 = float(np.max(np.abs(fd2 - second_formula[1:-1])))
    return IdentityReport(err1, err2, trace.times.size, dt)


@dataclass(frozen=True)
class PhaseSplit:
    """Orthogonal split e = h + v into the range of H_P(Du) and the null
    space of H_P(Du)^T; membership in the horizontal/vertical cover is
    decided at tolerance 1e-10."""

    horizontal: np.ndarray
    vertical: np.ndarray
    in_horizontal_set: bool
    in_vertical_set: bool
    projections: ProjectionPair


def phase_split(H: Hamiltonian, jet: Jet, e, rank_tol: float = 1e-9) -> PhaseSplit:
    e = np.atleast_1d(np.asarray(e, dtype=float))
    pair = svd_projections(H.grad(jet.grad), rank_tol)
    h = pair.tangential @ e
    v = pair.normal @ e
    return PhaseSplit(h, v,
                      bool(np.linalg.norm(h) > 1e-10),
                      bool(np.linalg.norm(v) > 1e-10),
                      pair)


def horizontal_flow(H: Hamiltonian, family: MapFamily, x0, e_field,
                    t_end: float, step: float, rank_tol: float = 1e-9) -> FlowTrace:
    """Flow of dx/dt = H_P(Du(x))^T h(x), h = [H_P(Du)]^par e; monitors
    H(Du) (conserved), the monotonicity pairing h^T d/dt u = H_P Du^T :
    h (x) h, and the rank of H_P(Du) (a jump terminates the trace)."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    e_fn = e_field if callable(e_field) else (
        lambda _x, _e=np.atleast_1d(np.asarray(e_field, dtype=float)): _e)

    def split_at(x):
        G = H.grad(family.grad(x))
        pair = svd_projections(G, rank_tol)
        return G, pair, pair.tangential @ e_fn(x)

    G0, pair0, h0 = split_at(x0)
    if np.linalg.norm(h0) < 1e-12:
        raise StartInVerticalSet(f"horizontal component vanishes at {x0.tolist()}")
    rank0 = pair0.rank

    def velocity(x):
        G, _, h = split_at(x)
        return G.T @ h

    def keep_going(x):
        if not family.domain.contains(x):
            return False
        return split_at(x)[1].rank == rank0

    times, points, reason = _rk4_trace(velocity, x0, t_end, step, keep_going)
    if reason == "boundary":
        # distinguish a genuine boundary exit from a rank jump
        last = points[-1]
        probe = last + step * velocity(last)
        if family.domain.contains(probe) and split_at(probe)[1].rank != rank0:
            reason = "rank_jump"

    ham, pairing, omega, ranks = [], [], [], []
    for p in points:
        G, pr, h = split_at(p)
        Du = family.grad(p)
        ham.append(H.value(Du))
        pairing.append(float((G @ Du.T * np.outer(h, h)).sum()))
        omega.append(float(np.sum((Du.T @ h) ** 2)))
        ranks.append(float(pr.rank))
    return FlowTrace(
        times, points,
        {"hamiltonian": np.array(ham), "monotone_pairing": np.array(pairing),
         "omega": np.array(omega), "rank": np.array(ranks)},
        params={"family": family.name, "hamiltonian": H.name, "x0": x0.tolist(),
                "step": step, "method": "rk4"},
        exit_reason=reason,
    )


@dataclass(frozen=True)
class VerticalResidual:
    """Residuals of the vertical first-order system v^T Du = 0,
    Dv : H_P(Du) = 0; ``applicable`` is False where the vertical component
    vanishes (the point is not in the vertical set)."""

    r1: np.ndarray
    r2: float
    applicable: bool
    vertical: np.ndarray


def vertical_system_residual(H: Hamiltonian, jet: Jet, v, Dv,
                             rank_tol: float = 1e-9) -> VerticalResidual:
    v = np.atleast_1d(np.asarray(v, dtype=float))
    Dv = np.asarray(Dv, dtype=float).reshape(jet.N, jet.n)
    applicable = bool(np.linalg.norm(v) > 1e-10)
    r1 = v @ jet.grad
    r2 = float(np.sum(Dv * H.grad(jet.grad)))
    return VerticalResidual(r1, r2, applicable, v)


def vertical_residual_at(H: Hamiltonian, family: MapFamily, x, e,
                         rank_tol: float = 1e-9, fd_step: float = 1e-5) -> VerticalResidual:
    """Vertical residuals at a point of a family, with the vertical field
    v(x) = [H_P(Du)]^perp e differentiated by central finite differences."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    jet = family.jet(x)
    split = phase_split(H, jet, e, rank_tol)
    if not split.in_vertical_set:
        return VerticalResidual(np.zeros(family.n), 0.0, False, split.vertical)

    def v_at(pt):
        return phase_split(H, family.jet(pt), e, rank_tol).vertical

    Dv = np.zeros((family.N, family.n))
    for i in range(family.n):
        off = np.zeros(family.n)
        off[i] = fd_step
        Dv[:, i] = (v_at(x + off) - v_at(x - off)) / (2.0 * fd_step)
    return vertical_system_residual(H, jet, split.vertical, Dv, rank_tol)
