"""Closed-form map families with analytic jets, plus the finite-difference
jet oracle and rank-interface detection.

Complex exponentials are realized as (cos, sin) pairs throughout; there is
no complex arithmetic.  Every family carries a domain with an interior
margin so finite-difference stencils never cross the boundary.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    ConfigError,
    DimensionMismatch,
    DomainMargin,
    EigenvalueCoalescence,
    NonSmoothPoint,
    UnitSpeedViolation,
)
from .linalg import Jet, max_eigen_field, svd_projections


# ---------------------------------------------------------------------------
# Domains

@dataclass(frozen=True)
class Domain:
    """Axis-aligned box, optionally cut down by an inequality constraint.

    ``margin`` shrinks the box per axis and is forwarded to the constraint
    as a functional inset (for the rhombus |x+-y| < c this means
    |x+-y| <= c - margin).
    """

    lower: np.ndarray
    upper: np.ndarray
    constraint: Callable[[np.ndarray, float], bool] | None = None
    label: str = "box"

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape or np.any(lower >= upper):
            raise ValueError("domain box must satisfy lower < upper")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.lower.size

    def contains(self, x, margin: float = 0.0) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(x < self.lower + margin) or np.any(x > self.upper - margin):
            return False
        if self.constraint is not None and not self.constraint(x, margin):
            return False
        return True

    def mesh(self, counts, margin: float = 0.0) -> np.ndarray:
        """Tensor grid of the (inset) box, filtered by the constraint.
        Returns an (m, dim) array of points."""
        if np.isscalar(counts):
            counts = (int(counts),) * self.dim
        axes = [
            np.linspace(self.lower[i] + margin, self.upper[i] - margin, counts[i])
            for i in range(self.dim)
        ]
        grids = np.meshgrid(*axes, indexing="ij")
        points = np.stack([g.ravel() for g in grids], axis=-1)
        if self.constraint is not None:
            keep = np.array([self.constraint(p, margin) for p in points])
            points = points[keep]
        return points

    def sample(self, count: int, rng: np.random.Generator,
               margin: float = 0.0) -> np.ndarray:
        """Uniform rejection sampling of ``count`` interior points."""
        lo, hi = self.lower + margin, self.upper - margin
        out = []
        while len(out) < count:
            cand = rng.uniform(lo, hi, size=(max(count, 32), self.dim))
            for p in cand:
                if self.constraint is None or self.constraint(p, margin):
                    out.append(p)
                    if len(out) == count:
                        break
        return np.array(out)


def box_domain(lower, upper) -> Domain:
    return Domain(np.asarray(lower, dtype=float), np.asarray(upper, dtype=float))


def rhombus_domain(half_width: float = math.pi) -> Domain:
    """The open rhombus {|x + y| < c} intersect {|x - y| < c}."""

    def inside(x: np.ndarray, margin: float) -> bool:
        return (abs(x[0] + x[1]) <= half_width - margin
                and abs(x[0] - x[1]) <= half_width - margin)

    return Domain(np.array([-half_width, -half_width]),
                  np.array([half_width, half_width]),
                  constraint=inside, label="rhombus")


# ---------------------------------------------------------------------------
# Auxiliary profiles K

@dataclass(frozen=True)
class KProfile:
    """Scalar auxiliary function K with its antiderivative.

    ``smooth`` marks profiles that are (at least) C^1 everywhere; the
    truncated Weierstrass sum is technically smooth but stands in for a
    nowhere differentiable function, so it is marked non-smooth and
    families built on it certify first-order data only.
    """

    kind: str
    bound: float
    smooth: bool
    deriv_bound: float
    _value: Callable[[np.ndarray], np.ndarray]
    _derivative: Callable[[np.ndarray], np.ndarray] | None
    _antiderivative: Callable[[np.ndarray], np.ndarray]
    _kink_distance: Callable[[float], float] | None = field(default=None)

    def value(self, t):
        return self._value(np.asarray(t, dtype=float))

    def derivative(self, t):
        if self._derivative is None:
            raise NonSmoothPoint(f"profile {self.kind!r} has no derivative")
        return self._derivative(np.asarray(t, dtype=float))

    def antiderivative(self, t):
        return self._antiderivative(np.asarray(t, dtype=float))

    def smooth_at(self, t: float) -> bool:
        if self._kink_distance is None:
            return True
        return self._kink_distance(float(t)) > 1e-9

    def sup_margin(self, samples: int = 10_000, half_width: float = 8.0) -> float:
        """bound - max |K| over a dense sample (>= 0 when the bound holds)."""
        ts = np.linspace(-half_width, half_width, samples)
        return self.bound - float(np.max(np.abs(self.value(ts))))


def k_profile(kind: str, bound: float, **params) -> KProfile:
    """Construct one of the registered profile kinds: ``constant``,
    ``smooth-sine``, ``piecewise-linear`` (triangle wave, kinks at odd
    integers), or ``weierstrass-truncated``."""
    if kind == "constant":
        c = float(bound)
        return KProfile(
            kind, abs(c), True, 0.0,
            _value=lambda t: np.full_like(t, c, dtype=float),
            _derivative=lambda t: np.zeros_like(t, dtype=float),
            _antiderivative=lambda t: c * t,
        )
    if kind == "smooth-sine":
        omega = float(params.get("omega", 1.0))
        return KProfile(
            kind, bound, True, bound * omega,
            _value=lambda t: bound * np.sin(omega * t),
            _derivative=lambda t: bound * omega * np.cos(omega * t),
            _antiderivative=lambda t: bound * (1.0 - np.cos(omega * t)) / omega,
        )
    if kind == "piecewise-linear":
        return _triangle_profile(bound)
    if kind == "weierstrass-truncated":
        amp = float(params.get("amplitude", 0.5))
        freq = float(params.get("frequency", 3.0))
        order = int(params.get("order", 12))
        if amp * freq <= 1.0:
            raise ValueError("weierstrass profile needs amplitude*frequency > 1")
        powers = amp ** np.arange(order + 1)
        freqs = freq ** np.arange(order + 1)
        scale = bound / float(np.sum(powers))

        def val(t):
            return scale * np.sum(powers * np.cos(np.multiply.outer(t, freqs)), axis=-1)

        def deriv(t):
            return -scale * np.sum(powers * freqs * np.sin(np.multiply.outer(t, freqs)), axis=-1)

        def anti(t):
            return scale * np.sum(powers / freqs * np.sin(np.multiply.outer(t, freqs)), axis=-1)

        return KProfile(
            kind, bound, False, scale * float(np.sum(powers * freqs)),
            _value=val, _derivative=deriv, _antiderivative=anti,
        )
    raise ConfigError(f"unknown profile kind {kind!r}")


def _triangle_profile(bound: float) -> KProfile:
    # periodic triangle wave: K(t) = bound*t on [-1, 1], reflected with
    # period 4; kinks at odd integers
    def reduce(t):
        return np.mod(t + 1.0, 4.0) - 1.0  # in [-1, 3)

    def val(t):
        r = reduce(t)
        return bound * np.where(r <= 1.0, r, 2.0 - r)

    def deriv(t):
        r = reduce(t)
        return bound * np.where(r <= 1.0, 1.0, -1.0)

    def anti_primitive(r):
        # antiderivative of the unit triangle over [0, r], r in [0, 4)
        r = np.asarray(r, dtype=float)
        a = np.where(r <= 1.0, 0.5 * r * r, 2.0 * r - 0.5 * r * r - 1.0)
        return np.where(r <= 3.0, a, 0.5 * r * r - 4.0 * r + 8.0)

    def anti(t):
        # K is odd, so its antiderivative is even; full periods integrate
        # to zero
        t = np.asarray(t, dtype=float)
        at = np.abs(t)
        rem = at - 4.0 * np.floor(at / 4.0)
        return bound * anti_primitive(rem)

    def kink_distance(t: float) -> float:
        # distance to the nearest odd integer
        r = (t - 1.0) % 2.0
        return min(r, 2.0 - r)

    return KProfile("piecewise-linear", bound, False, bound,
                    _value=val, _derivative=deriv, _antiderivative=anti,
                    _kink_distance=kink_distance)


def profile_from_config(config) -> KProfile:
    if isinstance(config, KProfile):
        return config
    if not isinstance(config, dict) or "kind" not in config:
        raise ConfigError("profile config must be a dict with 'kind' and 'bound'")
    cfg = dict(config)
    kind = cfg.pop("kind")
    bound = float(cfg.pop("bound"))
    return k_profile(kind, bound, **cfg)


# ---------------------------------------------------------------------------
# Curves (factors of separable maps, and n = 1 families)

@dataclass(frozen=True)
class Curve:
    name: str
    N: int
    value: Callable[[float], np.ndarray]
    d1: Callable[[float], np.ndarray]
    d2: Callable[[float], np.ndarray]


def circle_curve(k: float = 1.0, sign: float = 1.0, name: str | None = None) -> Curve:
    """Unit-speed circle t -> (sign/k)(cos kt, sin kt)."""
    r = sign / k
    return Curve(
        name or ("circle" if (k == 1.0 and sign == 1.0) else f"circle(k={k:g},sign={sign:g})"),
        2,
        value=lambda t: r * np.array([math.cos(k * t), math.sin(k * t)]),
        d1=lambda t: sign * np.array([-math.sin(k * t), math.cos(k * t)]),
        d2=lambda t: sign * k * np.array([-math.cos(k * t), -math.sin(k * t)]),
    )


def affine_curve(direction, name: str | None = None) -> Curve:
    xi = np.atleast_1d(np.asarray(direction, dtype=float))
    zero = np.zeros_like(xi)
    return Curve(name or "affine-curve", xi.size,
                 value=lambda t: t * xi, d1=lambda t: xi.copy(), d2=lambda t: zero.copy())


_CURVES: dict[str, Callable[[], Curve]] = {
    "circle": lambda: circle_curve(),
    "circle-neg": lambda: circle_curve(sign=-1.0, name="circle-neg"),
    "circle-2": lambda: circle_curve(k=2.0, name="circle-2"),
}


def curve_from_config(config) -> Curve:
    if isinstance(config, Curve):
        return config
    if isinstance(config, str):
        if config in _CURVES:
            return _CURVES[config]()
        raise ConfigError(f"unknown curve {config!r}")
    if isinstance(config, dict):
        kind = config.get("kind")
        if kind == "circle":
            return circle_curve(k=float(config.get("k", 1.0)),
                                sign=float(config.get("sign", 1.0)))
        if kind == "affine":
            return affine_curve(config["direction"])
        raise ConfigError(f"unknown curve kind {kind!r}")
    raise ConfigError("curve config must be a name or dict")


# ---------------------------------------------------------------------------
# Map families

@dataclass(frozen=True)
class MapFamily:
    """A named closed-form map with analytic jets.

    ``jet_order`` is 2 for fully C^2 families and 1 for families whose
    Hessian is not certified (truncated-Weierstrass profiles); ``jet``
    raises NonSmoothPoint for those and at non-smooth points of otherwise
    C^2 families (axes of the Aronsson pair, kinks of piecewise-linear
    profiles).
    """

    name: str
    n: int
    N: int
    domain: Domain
    jet_order: int
    _value: Callable[[np.ndarray], np.ndarray]
    _grad: Callable[[np.ndarray], np.ndarray]
    _hess: Callable[[np.ndarray], np.ndarray] | None
    _nonsmooth_distance: Callable[[np.ndarray], float] | None = None
    params: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def _point(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.n,):
            raise DimensionMismatch(f"{self.name} expects points in R^{self.n}")
        return x

    def value(self, x) -> np.ndarray:
        return np.atleast_1d(np.asarray(self._value(self._point(x)), dtype=float))

    def grad(self, x) -> np.ndarray:
        out = np.asarray(self._grad(self._point(x)), dtype=float)
        return out.reshape(self.N, self.n)

    def smooth_distance(self, x) -> float:
        """Distance from x to the non-C^2 set (inf for globally smooth
        families, 0 for first-order-only families)."""
        if self.jet_order < 2:
            return 0.0
        if self._nonsmooth_distance is None:
            return math.inf
        return float(self._nonsmooth_distance(self._point(x)))

    def smooth_at(self, x) -> bool:
        return self.smooth_distance(x) > 1e-12

    def jet(self, x) -> Jet:
        x = self._point(x)
        if self.jet_order < 2:
            raise NonSmoothPoint(
                f"family {self.name!r} certifies first-order data only"
            )
        if self.smooth_distance(x) <= 1e-12:
            raise NonSmoothPoint(f"family {self.name!r} is not C^2 at {x.tolist()}")
        hess = np.asarray(self._hess(x), dtype=float).reshape(self.N, self.n, self.n)
        return Jet(point=x, value=self.value(x), grad=self.grad(x), hess=hess)


def separable_map(f, g, domain: Domain | None = None, name: str | None = None) -> MapFamily:
    """u(x, y) = f(x) + g(y) for two curves f, g: R -> R^N."""
    f = curve_from_config(f)
    g = curve_from_config(g)
    if f.N != g.N:
        raise DimensionMismatch("separable factors must share the target dimension")
    N = f.N
    dom = domain or box_domain([-math.pi, -math.pi], [math.pi, math.pi])

    def hess(x):
        H = np.zeros((N, 2, 2))
        H[:, 0, 0] = f.d2(x[0])
        H[:, 1, 1] = g.d2(x[1])
        return H

    return MapFamily(
        name=name or f"separable({f.name},{g.name})",
        n=2, N=N, domain=dom, jet_order=2,
        _value=lambda x: f.value(x[0]) + g.value(x[1]),
        _grad=lambda x: np.column_stack([f.d1(x[0]), g.d1(x[1])]),
        _hess=hess,
        params={"f": f, "g": g},
        extras={"tangent_dot": lambda x: float(f.d1(x[0]) @ g.d1(x[1]))},
    )


def exp_diff_map() -> MapFamily:
    """u(x, y) = (cos x - cos y, sin x - sin y) on the rhombus
    {|x +- y| < pi}; infinity-harmonic there, rank interface on {x = y}."""
    fam = separable_map("circle", "circle-neg", rhombus_domain(), name="exp-diff")
    return fam


def exp_sum_map() -> MapFamily:
    """u(x, y) = (cos x + cos y, sin x + sin y); the normal term does not
    vanish on the diagonal, so it is not infinity-harmonic."""
    return separable_map("circle", "circle", rhombus_domain(), name="exp-sum")


def curve_map(curve, interval=(0.0, 2.0 * math.pi), name: str | None = None) -> MapFamily:
    """n = 1 family u(t) = curve(t) on an interval."""
    c = curve_from_config(curve)
    dom = Domain(np.array([interval[0]]), np.array([interval[1]]), label="interval")
    return MapFamily(
        name=name or f"curve({c.name})",
        n=1, N=c.N, domain=dom, jet_order=2,
        _value=lambda x: c.value(x[0]),
        _grad=lambda x: c.d1(x[0]).reshape(c.N, 1),
        _hess=lambda x: c.d2(x[0]).reshape(c.N, 1, 1),
        params={"curve": c},
    )


def constant_map(values, n: int, half_width: float = 2.0) -> MapFamily:
    vals = np.atleast_1d(np.asarray(values, dtype=float))
    N = vals.size
    dom = box_domain([-half_width] * n, [half_width] * n)
    return MapFamily(
        name="constant", n=n, N=N, domain=dom, jet_order=2,
        _value=lambda x: vals.copy(),
        _grad=lambda x: np.zeros((N, n)),
        _hess=lambda x: np.zeros((N, n, n)),
        params={"values": vals},
    )


def affine_map(matrix, offset=None, half_width: float = 2.0,
               name: str = "affine") -> MapFamily:
    A = np.atleast_2d(np.asarray(matrix, dtype=float))
    N, n = A.shape
    off = np.zeros(N) if offset is None else np.asarray(offset, dtype=float)
    dom = box_domain([-half_width] * n, [half_width] * n)
    return MapFamily(
        name=name, n=n, N=N, domain=dom, jet_order=2,
        _value=lambda x: A @ x + off,
        _grad=lambda x: A.copy(),
        _hess=lambda x: np.zeros((N, n, n)),
        params={"matrix": A, "offset": off},
    )


def quadratic_map(linear, quadratic, constant=None, center=None,
                  half_width: float = 2.0, name: str = "quadratic") -> MapFamily:
    """u(x) = c + A (x - x0) + 1/2 B[(x - x0), (x - x0)] with B symmetric
    in its trailing pair; the universal carrier for synthetic jets."""
    A = np.atleast_2d(np.asarray(linear, dtype=float))
    N, n = A.shape
    B = np.asarray(quadratic, dtype=float).reshape(N, n, n)
    B = 0.5 * (B + B.transpose(0, 2, 1))
    c = np.zeros(N) if constant is None else np.atleast_1d(np.asarray(constant, dtype=float))
    x0 = np.zeros(n) if center is None else np.atleast_1d(np.asarray(center, dtype=float))
    dom = box_domain(x0 - half_width, x0 + half_width)
    return MapFamily(
        name=name, n=n, N=N, domain=dom, jet_order=2,
        _value=lambda x: c + A @ (x - x0) + 0.5 * np.einsum("aij,i,j->a", B, x - x0, x - x0),
        _grad=lambda x: A + np.einsum("aij,j->ai", B, x - x0),
        _hess=lambda x: B.copy(),
        params={"linear": A, "quadratic": B, "constant": c, "center": x0},
    )


def quadratic_map_from_jet(jet: Jet, half_width: float = 2.0) -> MapFamily:
    """The unique quadratic map whose jet at ``jet.point`` is ``jet``."""
    return quadratic_map(jet.grad, jet.hess, constant=jet.value,
                         center=jet.point, half_width=half_width,
                         name="quadratic-from-jet")


def saddle_map(half_width: float = 2.0) -> MapFamily:
    """Scalar saddle u(x, y) = x^2 - y^2 (harmonic boundary data for the
    relaxation solver)."""
    return quadratic_map(np.zeros((1, 2)), np.array([[[2.0, 0.0], [0.0, -2.0]]]),
                         half_width=half_width, name="saddle")


def scalar_aronsson_map(sign_x: float = 1.0, sign_y: float = -1.0,
                        half_width: float = 2.0) -> MapFamily:
    """(x, y) -> sign_x |x|^{4/3} + sign_y |y|^{4/3}; C^2 off the axes,
    Hessian evaluation on an axis raises NonSmoothPoint."""
    sx, sy = float(sign_x), float(sign_y)

    def d1(t, s):
        return s * (4.0 / 3.0) * math.copysign(abs(t) ** (1.0 / 3.0), t)

    def d2(t, s):
        return s * (4.0 / 9.0) * abs(t) ** (-2.0 / 3.0)

    dom = box_domain([-half_width, -half_width], [half_width, half_width])
    suffix = f"{'+' if sx > 0 else '-'}{'+' if sy > 0 else '-'}"
    return MapFamily(
        name=f"aronsson({suffix})", n=2, N=1, domain=dom, jet_order=2,
        _value=lambda x: np.array([sx * abs(x[0]) ** (4.0 / 3.0)
                                   + sy * abs(x[1]) ** (4.0 / 3.0)]),
        _grad=lambda x: np.array([[d1(x[0], sx), d1(x[1], sy)]]),
        _hess=lambda x: np.array([[[d2(x[0], sx), 0.0], [0.0, d2(x[1], sy)]]]),
        _nonsmooth_distance=lambda x: min(abs(x[0]), abs(x[1])),
        params={"signs": (sx, sy)},
    )


def embedded_scalar_map(sign_x: float = 1.0, sign_y: float = -1.0,
                        half_width: float = 2.0) -> MapFamily:
    """The scalar Aronsson solution embedded as (w, 0): R^2 -> R^2."""
    base = scalar_aronsson_map(sign_x, sign_y, half_width)
    return MapFamily(
        name="aronsson-embedded", n=2, N=2, domain=base.domain, jet_order=2,
        _value=lambda x: np.array([base._value(x)[0], 0.0]),
        _grad=lambda x: np.vstack([base._grad(x), np.zeros((1, 2))]),
        _hess=lambda x: np.vstack([base._hess(x), np.zeros((1, 2, 2))]),
        _nonsmooth_distance=base._nonsmooth_distance,
        params=dict(base.params),
    )


# -- singular constructions -------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def _profile_integral(fn: Callable[[np.ndarray], np.ndarray], upper: float,
                      profile: KProfile) -> float:
    """integral_0^upper fn(K(t)) dt by composite Gauss-Legendre, with
    panel length tied to the oscillation rate of K."""
    if upper == 0.0:
        return 0.0
    a, b = (0.0, upper) if upper > 0 else (upper, 0.0)
    max_len = min(0.75, 3.0 / (1.0 + profile.deriv_bound))
    panels = max(1, int(math.ceil((b - a) / max_len)))
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    ts = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = fn(profile.value(ts))
    total = float(np.sum(half[:, None] * _GL_WEIGHTS[None, :] * vals))
    return total if upper > 0 else -total


def k_integral_map(profile, half_width: float = 2.0) -> MapFamily:
    """Planar map with unit-speed columns
    Du(x, y) = ((cos K(x), sin K(x)), (-sin K(y), cos K(y))); a local C^1
    diffeomorphism when sup|K| < pi/4, with rank 2 and |Du|^2 = 2
    identically.  Smooth profiles carry analytic Hessians; for the
    truncated Weierstrass profile only first-order data is certified."""
    profile = profile_from_config(profile)
    if profile.bound >= math.pi / 4.0:
        warnings.warn("profile bound >= pi/4: local-diffeomorphism property not guaranteed",
                      stacklevel=2)
    dom = box_domain([-half_width, -half_width], [half_width, half_width])

    def value(x):
        fc = _profile_integral(np.cos, x[0], profile)
        fs = _profile_integral(np.sin, x[0], profile)
        gc = _profile_integral(np.cos, x[1], profile)
        gs = _profile_integral(np.sin, x[1], profile)
        return np.array([fc - gs, fs + gc])

    def grad(x):
        kx, ky = float(profile.value(x[0])), float(profile.value(x[1]))
        return np.array([[math.cos(kx), -math.sin(ky)],
                         [math.sin(kx), math.cos(ky)]])

    def hess(x):
        kx, ky = float(profile.value(x[0])), float(profile.value(x[1]))
        dkx, dky = float(profile.derivative(x[0])), float(profile.derivative(x[1]))
        H = np.zeros((2, 2, 2))
        H[:, 0, 0] = dkx * np.array([-math.sin(kx), math.cos(kx)])
        H[:, 1, 1] = dky * np.array([-math.cos(ky), -math.sin(ky)])
        return H

    distance = None
    if profile._kink_distance is not None:
        distance = lambda x: min(profile._kink_distance(float(x[0])),
                                 profile._kink_distance(float(x[1])))

    return MapFamily(
        name=f"k-integral({profile.kind})", n=2, N=2, domain=dom,
        jet_order=2 if profile.smooth else 1,
        _value=value, _grad=grad,
        _hess=hess if (profile.smooth or profile._kink_distance is not None) else None,
        _nonsmooth_distance=distance,
        params={"profile": profile},
    )


def rank_one_map(eta, a, b, profile, half_width: float = 2.0) -> MapFamily:
    """u(x) = (x^T (b+a)/2 + int_0^{x^T (b-a)/2} K) eta; the gradient is
    the rank-one convex combination lambda(x) eta(x)a + (1-lambda) eta(x)b
    with lambda(x) = 1/2 - 1/2 K(x^T (b-a)/2) in (0, 1) for sup|K| < 1."""
    profile = profile_from_config(profile)
    if profile.bound >= 1.0:
        raise ValueError("rank-one family needs sup|K| < 1")
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    norm = np.linalg.norm(eta)
    if norm < 1e-12:
        raise ValueError("eta must be nonzero")
    eta = eta / norm
    if a.shape != b.shape:
        raise DimensionMismatch("a and b must share a length")
    n, N = a.size, eta.size
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    dom = box_domain([-half_width] * n, [half_width] * n)

    def lam(x):
        return 0.5 - 0.5 * float(profile.value(float(x @ half)))

    distance = None
    if profile._kink_distance is not None:
        half_norm = max(float(np.linalg.norm(half)), 1e-300)
        distance = lambda x: profile._kink_distance(float(x @ half)) / half_norm

    return MapFamily(
        name=f"rank-one({profile.kind})", n=n, N=N, domain=dom,
        jet_order=2 if profile.smooth else 1,
        _value=lambda x: (float(x @ mid)
                          + float(profile.antiderivative(float(x @ half)))) * eta,
        _grad=lambda x: np.outer(eta, mid + float(profile.value(float(x @ half))) * half),
        _hess=lambda x: float(profile.derivative(float(x @ half)))
        * np.einsum("a,i,j->aij", eta, half, half),
        _nonsmooth_distance=distance,
        params={"profile": profile, "eta": eta, "a": a, "b": b},
        extras={"lambda": lam},
    )


# ---------------------------------------------------------------------------
# Finite-difference jets and eigenvector fields

def fd_jet(family: MapFamily, x, h: float) -> Jet:
    """Second-order central-difference jet from values alone; the oracle
    against which analytic jets are cross-validated."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = family.n
    offsets = [np.zeros(n)]
    for i in range(n):
        for s in (-1.0, 1.0):
            e = np.zeros(n)
            e[i] = s * h
            offsets.append(e)
        for j in range(i + 1, n):
            for si in (-1.0, 1.0):
                for sj in (-1.0, 1.0):
                    e = np.zeros(n)
                    e[i], e[j] = si * h, sj * h
                    offsets.append(e)
    for off in offsets:
        if not family.domain.contains(x + off):
            raise DomainMargin(
                f"finite-difference stencil leaves the {family.name!r} domain at "
                f"{(x + off).tolist()}"
            )
    u0 = family.value(x)
    N = family.N
    grad = np.zeros((N, n))
    hess = np.zeros((N, n, n))
    plus, minus = [], []
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        up, um = family.value(x + e), family.value(x - e)
        plus.append(up)
        minus.append(um)
        grad[:, i] = (up - um) / (2.0 * h)
        hess[:, i, i] = (up - 2.0 * u0 + um) / (h * h)
    for i in range(n):
        for j in range(i + 1, n):
            ei, ej = np.zeros(n), np.zeros(n)
            ei[i], ej[j] = h, h
            upp = family.value(x + ei + ej)
            upm = family.value(x + ei - ej)
            ump = family.value(x - ei + ej)
            umm = family.value(x - ei - ej)
            hess[:, i, j] = hess[:, j, i] = (upp - upm - ump + umm) / (4.0 * h * h)
    return Jet(point=x, value=u0, grad=grad, hess=hess)


def eigen_field_jet(family: MapFamily, x, h: float = 1e-5,
                    gap_tol: float = 1e-6) -> tuple[np.ndarray, np.ndarray]:
    """(e, De) for the top eigenvector field of Du Du^T, by central finite
    differences with sign-continuity correction."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    e0, strict = max_eigen_field(family.grad(x), gap_tol)
    if not strict:
        raise EigenvalueCoalescence(f"eigenvector field undefined at {x.tolist()}")
    De = np.zeros((family.N, family.n))
    for i in range(family.n):
        off = np.zeros(family.n)
        off[i] = h
        ep, sp = max_eigen_field(family.grad(x + off), gap_tol)
        em, sm = max_eigen_field(family.grad(x - off), gap_tol)
        if not (sp and sm):
            raise EigenvalueCoalescence(
                f"eigenvector field degenerate in the stencil at {x.tolist()}"
            )
        if float(ep @ e0) < 0.0:
            ep = -ep
        if float(em @ e0) < 0.0:
            em = -em
        De[:, i] = (ep - em) / (2.0 * h)
    return e0, De


# ---------------------------------------------------------------------------
# Interface detection

@dataclass(frozen=True)
class LocusReport:
    points: np.ndarray
    ranks: np.ndarray
    tangent_dots: np.ndarray


def interface_locus(family: MapFamily, counts, tol: float,
                    margin: float = 0.0, rank_tol: float = 1e-9) -> LocusReport:
    """Grid points of a separable family where the two curve tangents are
    colinear within tol: | |f'(x)^T g'(y)| - 1 | <= tol, with the rank of
    Du at each hit.  Requires unit-speed factors."""
    if "f" not in family.params or "g" not in family.params:
        raise ConfigError("interface detection needs a separable family")
    f, g = family.params["f"], family.params["g"]
    ts = np.linspace(family.domain.lower.min(), family.domain.upper.max(), 64)
    for curve in (f, g):
        speeds = np.array([np.linalg.norm(curve.d1(t)) for t in ts])
        if np.max(np.abs(speeds - 1.0)) > 1e-10:
            raise UnitSpeedViolation(
                f"curve {curve.name!r} is not unit speed; interface "
                "characterization needs |f'| = |g'| = 1"
            )
    points = family.domain.mesh(counts, margin)
    hits, ranks, dots = [], [], []
    for p in points:
        dot = family.extras["tangent_dot"](p)
        if abs(abs(dot) - 1.0) <= tol:
            hits.append(p)
            ranks.append(svd_projections(family.grad(p), rank_tol).rank)
            dots.append(dot)
    return LocusReport(
        np.array(hits).reshape(-1, family.n),
        np.array(ranks, dtype=int),
        np.array(dots),
    )


# ---------------------------------------------------------------------------
# Diagnostics and registry

def hessian_blowup_diagnostic(bound: float = 0.7, orders=(2, 6, 10),
                              frequency: float = 3.0) -> list[dict]:
    """Growth of finite-difference Hessians of the k-integral map under a
    joint (truncation order up, step down) Weierstrass schedule, with the
    step resolving the top frequency; a diagnostic for the absence of a
    meaningful D^2u, not a theorem."""
    rows = []
    probes = [np.array([0.37, -0.21]), np.array([-0.83, 0.52]),
              np.array([1.24, 0.95]), np.array([0.05, -1.4])]
    for m in orders:
        profile = k_profile("weierstrass-truncated", bound, order=m,
                            frequency=frequency)
        family = k_integral_map(profile, half_width=2.0)
        h = 0.4 * frequency ** (-m)
        worst = max(float(np.max(np.abs(fd_jet(family, x, h).hess))) for x in probes)
        rows.append({"order": m, "step": h, "max_fd_hessian": worst})
    return rows


def family_from_config(config) -> MapFamily:
    """Build a registered family from a CLI config entry (name or dict
    with a ``family`` key plus parameters)."""
    if isinstance(config, str):
        config = {"family": config}
    if not isinstance(config, dict) or "family" not in config:
        raise ConfigError("family config must be a name or a dict with 'family'")
    cfg = dict(config)
    name = cfg.pop("family")
    if name == "exp-diff":
        return exp_diff_map()
    if name == "exp-sum":
        return exp_sum_map()
    if name == "separable":
        return separable_map(cfg["f"], cfg["g"])
    if name == "circle-curve":
        return curve_map("circle", interval=tuple(cfg.get("interval", (0.0, 2.0 * math.pi))),
                         name="circle-curve")
    if name == "constant":
        return constant_map(cfg.get("values", [0.0]), int(cfg.get("n", 2)))
    if name == "affine":
        return affine_map(cfg["matrix"], cfg.get("offset"))
    if name == "quadratic":
        return quadratic_map(cfg["linear"], cfg["quadratic"], cfg.get("constant"),
                             cfg.get("center"))
    if name == "saddle":
        return saddle_map()
    if name == "aronsson-minus":
        return scalar_aronsson_map(1.0, -1.0)
    if name == "aronsson-plus":
        return scalar_aronsson_map(1.0, 1.0)
    if name == "aronsson-embedded":
        return embedded_scalar_map()
    if name == "k-integral":
        return k_integral_map(cfg.get("profile", {"kind": "smooth-sine", "bound": 0.7}))
    if name == "rank-one":
        return rank_one_map(cfg["eta"], cfg["a"], cfg["b"],
                            cfg.get("profile", {"kind": "smooth-sine", "bound": 0.8}))
    raise ConfigError(f"unknown family {name!r}")
