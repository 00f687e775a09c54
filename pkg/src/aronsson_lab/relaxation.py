"""Desk-scale grid discretization of the p-energy, the sup energy, and the
Lipschitz functional, with a descent solver for the p-Dirichlet problem,
p-sweep diagnostics, and the absolute-minimality perturbation probe.

The grid energy is E_p = sum_cells H(Du_cell)^p * area with midpoint-cell
gradients (exact on affine fields); for large p the energy is aggregated
in log form so reports stay finite.  The solver is plain gradient descent
with a backtracking Armijo line search: the functional is degenerate
elliptic for large p, and at desk scale a robust first-order method beats
a fragile second-order one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainMargin, NonDecreaseStall
from .families import Domain, MapFamily
from .hamiltonians import Hamiltonian
from .linalg import Jet
from .operators import residual_split
from .sampling import halton_ball, halton_pairs


# ---------------------------------------------------------------------------
# Grid fields

@dataclass
class GridField:
    """Sampled vector field on a rectangular n = 2 grid; boundary nodes are
    exactly the box edge nodes and stay fixed across solver iterations."""

    lower: np.ndarray
    upper: np.ndarray
    values: np.ndarray  # (mx, my, N)

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float).reshape(2)
        self.upper = np.asarray(self.upper, dtype=float).reshape(2)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 3:
            raise ValueError("grid values must have shape (mx, my, N)")
        if self.values.shape[0] < 3 or self.values.shape[1] < 3:
            raise ValueError("grid needs at least 3 nodes per axis")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid values contain non-finite entries")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape[0], self.values.shape[1]

    @property
    def N(self) -> int:
        return self.values.shape[2]

    @property
    def spacing(self) -> tuple[float, float]:
        mx, my = self.shape
        return (float((self.upper[0] - self.lower[0]) / (mx - 1)),
                float((self.upper[1] - self.lower[1]) / (my - 1)))

    def axis_coords(self) -> tuple[np.ndarray, np.ndarray]:
        mx, my = self.shape
        return (np.linspace(self.lower[0], self.upper[0], mx),
                np.linspace(self.lower[1], self.upper[1], my))

    def boundary_mask(self) -> np.ndarray:
        mx, my = self.shape
        mask = np.zeros((mx, my), dtype=bool)
        mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = True
        return mask

    def cell_gradients(self) -> np.ndarray:
        """Per-cell gradient (mx-1, my-1, N, 2) by bilinear-cell central
        differences; exact for affine data."""
        return _cell_gradients(self.values, *self.spacing)

    def copy(self) -> "GridField":
        return GridField(self.lower.copy(), self.upper.copy(), self.values.copy())

    @classmethod
    def from_family(cls, family: MapFamily, lower, upper, resolution,
                    init: str = "family") -> "GridField":
        """Sample the family on the boundary; initialize the interior from
        the family itself, the boundary mean, or zero."""
        lower = np.asarray(lower, dtype=float).reshape(2)
        upper = np.asarray(upper, dtype=float).reshape(2)
        mx, my = (resolution, resolution) if np.isscalar(resolution) else resolution
        xs = np.linspace(lower[0], upper[0], mx)
        ys = np.linspace(lower[1], upper[1], my)
        values = np.zeros((mx, my, family.N))
        if init == "family":
            for i, x in enumerate(xs):
                for j, y in enumerate(ys):
                    values[i, j] = family.value((x, y))
        else:
            boundary = []
            for i, x in enumerate(xs):
                for j, y in enumerate(ys):
                    if i in (0, mx - 1) or j in (0, my - 1):
                        values[i, j] = family.value((x, y))
                        boundary.append(values[i, j])
            if init == "mean":
                values[1:-1, 1:-1] = np.mean(boundary, axis=0)
            elif init != "zero":
                raise ValueError("init must be 'family', 'mean' or 'zero'")
        return cls(lower, upper, values)


def _cell_gradients(values: np.ndarray, hx: float, hy: float) -> np.ndarray:
    gx = (values[1:, :-1] + values[1:, 1:] - values[:-1, :-1] - values[:-1, 1:]) / (2.0 * hx)
    gy = (values[:-1, 1:] + values[1:, 1:] - values[:-1, :-1] - values[1:, :-1]) / (2.0 * hy)
    return np.stack([gx, gy], axis=-1)


# ---------------------------------------------------------------------------
# Energies

@dataclass(frozen=True)
class PEnergy:
    energy: float
    log_energy: float


def discrete_energy_p(grid: GridField, H: Hamiltonian, p: float) -> PEnergy:
    """Midpoint-cell quadrature of H(Du)^p; aggregated in log form so the
    report survives large p."""
    if p < 1:
        raise ValueError("p must be >= 1")
    hx, hy = grid.spacing
    hvals = H.value_many(grid.cell_gradients())
    area = hx * hy
    energy = float(np.sum(hvals ** p) * area)
    with np.errstate(divide="ignore"):
        logs = p * np.log(hvals.ravel()) + math.log(area)
    finite = logs[np.isfinite(logs)]
    if finite.size == 0:
        log_energy = -math.inf
    else:
        top = float(np.max(finite))
        log_energy = top + math.log(float(np.sum(np.exp(finite - top))))
    return PEnergy(energy, log_energy)


def discrete_energy_inf(grid: GridField, H: Hamiltonian) -> float:
    """Sup energy of a grid field: max of H over cell gradients."""
    return float(np.max(H.value_many(grid.cell_gradients())))


def family_energy_inf(family: MapFamily, H: Hamiltonian,
                      domain: Domain | None = None, counts=201,
                      margin: float = 0.0) -> float:
    """Sup energy of a family over a region by dense deterministic
    sampling of H(Du)."""
    dom = domain or family.domain
    points = dom.mesh(counts, margin)
    return float(max(H.value(family.grad(p)) for p in points))


def sup_pointwise(family: MapFamily, fn, domain: Domain | None = None,
                  counts=201, margin: float = 0.0) -> float:
    """Dense-mesh supremum of a pointwise functional of the family."""
    dom = domain or family.domain
    return float(max(fn(family, p) for p in dom.mesh(counts, margin)))


def lip_estimate(family: MapFamily, lower, upper, pairs: int = 100_000,
                 seed: int = 0) -> float:
    """Lower-bound estimator of the Lipschitz constant over a box:
    max |u(x) - u(y)| / |x - y| over seeded quasi-random pairs."""
    if pairs < 2:
        raise ValueError("need at least 2 sample pairs")
    first, second = halton_pairs(lower, upper, pairs, seed)
    best = 0.0
    for x, y in zip(first, second):
        dist = float(np.linalg.norm(x - y))
        if dist < 1e-12:
            continue
        ratio = float(np.linalg.norm(family.value(x) - family.value(y))) / dist
        best = max(best, ratio)
    return best


# ---------------------------------------------------------------------------
# Descent solver

@dataclass
class DirichletProblem:
    hamiltonian: Hamiltonian
    p: float
    grid: GridField
    max_iter: int = 5000
    grad_tol: float = 1e-8
    armijo: float = 1e-4
    step0: float = 1.0
    step_rule: str = "bb"  # "bb" (Barzilai-Borwein trial step) or "grow"

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.step_rule not in ("bb", "grow"):
            raise ValueError("step_rule must be 'bb' or 'grow'")


@dataclass(frozen=True)
class DescentReport:
    iterations: int
    energy: float
    log_energy: float
    grad_norm: float
    status: str  # converged | max_iter | stalled


def _scaled_energy(values, H, p, hx, hy, scale):
    hvals = H.value_many(_cell_gradients(values, hx, hy)) / scale
    return float(np.sum(hvals ** p) * hx * hy)


def _scaled_gradient(values, fixed, H, p, hx, hy, scale):
    cells = _cell_gradients(values, hx, hy)
    hvals = H.value_many(cells) / scale
    weight = (p / scale) * hvals ** (p - 1.0) * (hx * hy)
    hp = H.grad_many(cells)
    wx = weight[..., None] * hp[..., 0] / (2.0 * hx)
    wy = weight[..., None] * hp[..., 1] / (2.0 * hy)
    out = np.zeros_like(values)
    out[1:, :-1] += wx
    out[1:, 1:] += wx
    out[:-1, :-1] -= wx
    out[:-1, 1:] -= wx
    out[:-1, 1:] += wy
    out[1:, 1:] += wy
    out[:-1, :-1] -= wy
    out[1:, :-1] -= wy
    out[fixed] = 0.0
    return out


def p_descent_solve(problem: DirichletProblem) -> tuple[GridField, DescentReport]:
    """Gradient descent with backtracking (halving) line search and an
    Armijo sufficient-decrease test on the interior node values; boundary
    values never move.  The energy sequence is non-increasing across
    accepted steps (asserted)."""
    grid = problem.grid.copy()
    H, p = problem.hamiltonian, problem.p
    hx, hy = grid.spacing
    fixed = grid.boundary_mask()
    u = grid.values
    scale = max(float(np.max(H.value_many(_cell_gradients(u, hx, hy)))), 1e-300)

    energy = _scaled_energy(u, H, p, hx, hy, scale)
    step = problem.step0
    status = "max_iter"
    iterations = 0
    gnorm = math.inf
    prev_u = prev_g = None
    for iterations in range(1, problem.max_iter + 1):
        g = _scaled_gradient(u, fixed, H, p, hx, hy, scale)
        gnorm = float(np.max(np.abs(g)))
        if gnorm <= problem.grad_tol:
            status = "converged"
            iterations -= 1
            break
        if problem.step_rule == "bb" and prev_u is not None:
            du, dg = u - prev_u, g - prev_g
            denom = float(np.sum(du * dg))
            if denom > 0:
                step = min(max(float(np.sum(du * du)) / denom, 1e-12), 1e6)
        gsq = float(np.sum(g * g))
        prev_u, prev_g = u, g
        while True:
            trial = u - step * g
            trial_energy = _scaled_energy(trial, H, p, hx, hy, scale)
            if trial_energy <= energy - problem.armijo * step * gsq:
                break
            step *= 0.5
            if step < 1e-18:
                if gnorm > 1e3 * problem.grad_tol:
                    raise NonDecreaseStall(
                        f"line search stalled at gradient norm {gnorm:.3e}"
                    )
                status = "stalled"
                break
        if status == "stalled":
            break
        assert trial_energy <= energy, "energy increased across an accepted step"
        u, energy = trial, trial_energy
        if problem.step_rule == "grow":
            step = min(step * 2.0, 1e6)

    grid.values = u
    report = discrete_energy_p(grid, H, p)
    return grid, DescentReport(iterations, report.energy, report.log_energy,
                               gnorm, status)


# ---------------------------------------------------------------------------
# Node jets and p-sweep diagnostics

def node_jet(grid: GridField, i: int, j: int) -> tuple[Jet, bool]:
    """Central-difference jet of the grid field at an interior node.

    The flag marks first-interior-ring nodes, whose stencils touch the
    boundary layer of the discrete solution (lower effective accuracy).
    """
    mx, my = grid.shape
    if not (1 <= i <= mx - 2 and 1 <= j <= my - 2):
        raise IndexError("node jets are defined at interior nodes only")
    hx, hy = grid.spacing
    xs, ys = grid.axis_coords()
    U = grid.values
    grad = np.stack([
        (U[i + 1, j] - U[i - 1, j]) / (2.0 * hx),
        (U[i, j + 1] - U[i, j - 1]) / (2.0 * hy),
    ], axis=-1)
    hess = np.zeros((grid.N, 2, 2))
    hess[:, 0, 0] = (U[i + 1, j] - 2.0 * U[i, j] + U[i - 1, j]) / (hx * hx)
    hess[:, 1, 1] = (U[i, j + 1] - 2.0 * U[i, j] + U[i, j - 1]) / (hy * hy)
    mixed = (U[i + 1, j + 1] - U[i + 1, j - 1] - U[i - 1, j + 1] + U[i - 1, j - 1]) / (4.0 * hx * hy)
    hess[:, 0, 1] = hess[:, 1, 0] = mixed
    jet = Jet(point=np.array([xs[i], ys[j]]), value=U[i, j], grad=grad, hess=hess)
    ring = i in (1, mx - 2) or j in (1, my - 2)
    return jet, ring


def split_residual_field(grid: GridField, H: Hamiltonian, p: float,
                         rank_tol: float = 1e-9):
    """Norms of the renormalized split (LHS, RHS) at every interior node
    of a solved grid, from central-difference jets."""
    mx, my = grid.shape
    rhs_norms, gap_norms = [], []
    for i in range(1, mx - 1):
        for j in range(1, my - 1):
            jet, _ = node_jet(grid, i, j)
            lhs, rhs = residual_split(H, jet, p, rank_tol)
            rhs_norms.append(float(np.linalg.norm(rhs)))
            gap_norms.append(float(np.linalg.norm(lhs - rhs)))
    return np.array(rhs_norms), np.array(gap_norms)


@dataclass(frozen=True)
class SweepRow:
    p: float
    median_rhs: float
    median_gap: float
    iterations: int
    status: str
    log_energy: float


@dataclass(frozen=True)
class SweepReport:
    rows: list[SweepRow]
    slope: float


def p_sweep_diagnostics(H: Hamiltonian, boundary_family: MapFamily, lower, upper,
                        resolution, p_list, max_iter: int = 4000,
                        grad_tol: float = 1e-9, rank_tol: float = 1e-9) -> SweepReport:
    """Solve the p-Dirichlet problem along an increasing p list (each
    solve warm-started from the previous one), evaluate the split residual
    medians at interior nodes, and fit the slope of log(median ||RHS||)
    against log(p - 1)."""
    p_list = list(p_list)
    if any(q <= 1 for q in p_list) or any(b <= a for a, b in zip(p_list, p_list[1:])):
        raise ValueError("p_list must be increasing with every entry > 1")
    grid = GridField.from_family(boundary_family, lower, upper, resolution, init="family")
    rows = []
    for p in p_list:
        problem = DirichletProblem(H, p, grid, max_iter=max_iter, grad_tol=grad_tol)
        grid, report = p_descent_solve(problem)
        rhs, gap = split_residual_field(grid, H, p, rank_tol)
        rows.append(SweepRow(p, float(np.median(rhs)), float(np.median(gap)),
                             report.iterations, report.status, report.log_energy))
    slope = float("nan")
    if len(rows) >= 2:
        xs = np.log([row.p - 1.0 for row in rows])
        ys = np.log([max(row.median_rhs, 1e-300) for row in rows])
        slope = float(np.polyfit(xs, ys, 1)[0])
    return SweepReport(rows, slope)


# ---------------------------------------------------------------------------
# Absolute-minimality probe

@dataclass(frozen=True)
class ProbeReport:
    energy_map: float
    energy_perturbed: float
    margin: float
    samples: int


def am_perturbation_probe(family: MapFamily, x, eps: float, delta: float, xi,
                          H: Hamiltonian, samples: int = 4096,
                          seed: int = 0) -> ProbeReport:
    """Quadratic-bump comparison of sup energies on a ball.

    The competitor is w = u + g with g(z) = (delta/2)(eps^2 - |z - x|^2) xi,
    so Dg(z) = -delta xi (x) (z - x) and w = u on the sphere.  A negative
    margin E(w) - E(u) certifies that u is not absolutely minimizing for
    this (eps, delta, xi); a nonnegative margin is evidence only.
    """
    if not (0.0 < eps < 1.0 and 0.0 < delta < 1.0):
        raise ValueError("eps and delta must lie in (0, 1)")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    xi = xi / np.linalg.norm(xi)
    for i in range(family.n):
        for sign in (-1.0, 1.0):
            corner = x.copy()
            corner[i] += sign * eps
            if not family.domain.contains(corner):
                raise DomainMargin("perturbation ball leaves the family domain")
    points = halton_ball(x, eps, samples, seed)
    e_u, e_w = 0.0, 0.0
    for z in points:
        if not family.domain.contains(z):
            raise DomainMargin("perturbation ball leaves the family domain")
        Du = family.grad(z)
        e_u = max(e_u, H.value(Du))
        e_w = max(e_w, H.value(Du - delta * np.outer(xi, z - x)))
    return ProbeReport(e_u, e_w, e_w - e_u, samples)


def energy_comparison(family: MapFamily, competitor: MapFamily, H: Hamiltonian,
                      domain: Domain | None = None, counts=501,
                      boundary_tol: float = 1e-9) -> tuple[float, float]:
    """Sup energies of a map and of an arbitrary competitor with matching
    boundary values over a region (the general form of the minimality
    probe)."""
    dom = domain or family.domain
    if family.n == 1:
        boundary = [dom.lower.copy(), dom.upper.copy()]
    else:
        edges = dom.mesh(17, 0.0)
        mask = np.any((edges <= dom.lower + 1e-12) | (edges >= dom.upper - 1e-12), axis=1)
        boundary = list(edges[mask])
    for b in boundary:
        if float(np.linalg.norm(family.value(b) - competitor.value(b))) > boundary_tol:
            raise ValueError("competitor does not match the boundary values")
    e_fam = family_energy_inf(family, H, dom, counts)
    e_comp = family_energy_inf(competitor, H, dom, counts)
    return e_fam, e_comp
