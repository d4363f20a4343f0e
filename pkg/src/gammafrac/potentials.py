"""
Low-order potentials F(x, M, v)
===============================

A :class:`PotentialSpec` bundles a vectorized value function, its closed-form
recession ``F_inf(x, M) = lim (F(x, tM, 0) - F(x, 0, 0)) / t`` and the linear
growth constants ``sigma`` (lower) and ``ell`` (upper).  Factories build the
fracking, two-rocks, plastic-slip, Tresca and non-interpenetration potentials.

Array conventions: points ``x`` have shape ``(..., 2)``, strains ``M`` shape
``(..., 2, 2)`` and damage ``v`` shape ``(...)``; all three broadcast.

:func:`recession_numeric` is the independent oracle for closed-form
recessions, :func:`validate_bounds` checks admissibility by sampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConstructionError, InputError, NumericRecessionError
from .expr import compile_expr
from .geometry import segment_coordinates
from .material import DamageLaw, ElasticTensor, frobenius, sigma_max

_SQRT2 = np.sqrt(2.0)


def trace(M):
    M = np.asarray(M, dtype=float)
    return M[..., 0, 0] + M[..., 1, 1]


def eigen_gap(N):
    """lambda_max - lambda_min of symmetric 2x2 matrices."""
    N = np.asarray(N, dtype=float)
    a, d = N[..., 0, 0], N[..., 1, 1]
    b = 0.5 * (N[..., 0, 1] + N[..., 1, 0])
    return np.sqrt((a - d) ** 2 + 4.0 * b * b)


def spatial_field(f) -> Callable:
    """Turn a constant, an expression string or a callable into ``x -> array``."""
    if callable(f):
        return lambda x: np.asarray(f(np.asarray(x, dtype=float)), dtype=float)
    if isinstance(f, str):
        e = compile_expr(f, ("x", "y"))
        return lambda x: e(x=np.asarray(x)[..., 0], y=np.asarray(x)[..., 1])
    c = float(f)
    return lambda x: np.full(np.shape(x)[:-1], c)


def xv_field(f) -> Callable:
    """Turn a constant, an ``x, y, v`` expression or a callable into ``(x, v) -> array``."""
    if callable(f):
        return lambda x, v: np.asarray(f(np.asarray(x, dtype=float), np.asarray(v, dtype=float)),
                                       dtype=float)
    if isinstance(f, str):
        e = compile_expr(f, ("x", "y", "v"))
        return lambda x, v: e(x=np.asarray(x)[..., 0], y=np.asarray(x)[..., 1], v=v)
    c = float(f)
    return lambda x, v: np.full(np.broadcast_shapes(np.shape(x)[:-1], np.shape(v)), c)


def _sample_max(fun, bbox, n=64):
    x0, y0, x1, y1 = bbox
    gx, gy = np.meshgrid(np.linspace(x0, x1, n), np.linspace(y0, y1, n))
    pts = np.stack([gx, gy], axis=-1)
    return float(np.max(np.abs(fun(pts))))


# ---------------------------------------------------------------------------
# the interface
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PotentialSpec:
    """A low-order potential with its recession function and growth bounds.

    Optional structure used by the solver:

    ``pressure(x, v)``
        set when ``F = -pressure(x, v) tr(M)`` (affine in M at fixed v).
    ``v_coeffs(x, M)``
        returns ``(c0, c1, c2)`` with ``F = c0 + c1 v + c2 v^2``.
    """

    value: Callable = field(repr=False)
    recession_closed_form: Optional[Callable] = field(default=None, repr=False)
    sigma: float = 0.0
    ell: float = 0.0
    rho: float = 0.0
    kind: str = "custom"
    pressure: Optional[Callable] = field(default=None, repr=False)
    v_coeffs: Optional[Callable] = field(default=None, repr=False)
    params: dict = field(default_factory=dict)

    def __call__(self, x, M, v):
        return np.asarray(self.value(np.asarray(x, dtype=float), np.asarray(M, dtype=float),
                                     np.asarray(v, dtype=float)), dtype=float)

    def recession(self, x, M):
        if self.recession_closed_form is None:
            raise InputError(f"potential {self.kind!r} has no closed-form recession")
        return np.asarray(self.recession_closed_form(np.asarray(x, dtype=float),
                                                     np.asarray(M, dtype=float)), dtype=float)

    @property
    def is_zero(self) -> bool:
        return self.kind == "none"

    @property
    def affine_in_M(self) -> bool:
        return self.pressure is not None


def zero() -> PotentialSpec:
    def value(x, M, v):
        return np.zeros(np.broadcast_shapes(np.shape(x)[:-1], np.shape(M)[:-2], np.shape(v)))

    def rec(x, M):
        return np.zeros(np.broadcast_shapes(np.shape(x)[:-1], np.shape(M)[:-2]))

    def coeffs(x, M):
        z = rec(x, M)
        return z, z, z

    return PotentialSpec(value, rec, 0.0, 0.0, 0.0, "none",
                         pressure=lambda x, v: np.zeros(np.broadcast_shapes(np.shape(x)[:-1], np.shape(v))),
                         v_coeffs=coeffs)


# ---------------------------------------------------------------------------
# fracking
# ---------------------------------------------------------------------------

def soft_sign(tau):
    """(sqrt(1 + tau^2) - 1) / tau: odd, bounded by 1, tends to sign(tau)."""
    tau = np.asarray(tau, dtype=float)
    return tau / (np.sqrt(1.0 + tau * tau) + 1.0)


@dataclass(frozen=True)
class TraceLaw:
    """Bounded strain dependence ``g(M) = c - k soft_sign(tr M)``.

    ``-g(M) tr M = -c tr M + k (sqrt(1 + tr^2) - 1)`` is convex in M for
    ``k >= 0``, and ``g(tM) -> c - k sign(tr M)`` as t grows.  Custom laws may
    pass ``g`` and ``gamma`` callables instead; they must keep
    ``-g(M) tr M`` convex.
    """

    c: float = 1.0
    k: float = 0.0
    g: Optional[Callable] = field(default=None, repr=False)
    gamma: Optional[Callable] = field(default=None, repr=False)
    bound: Optional[float] = None

    def __post_init__(self):
        if self.g is None and self.k < 0:
            raise ConstructionError("trace law needs k >= 0 for convexity")
        if (self.g is None) != (self.gamma is None):
            raise ConstructionError("custom strain laws need both g and gamma")

    def __call__(self, M):
        if self.g is not None:
            return np.asarray(self.g(M), dtype=float)
        return self.c - self.k * soft_sign(trace(M))

    def limit(self, M):
        if self.gamma is not None:
            return np.asarray(self.gamma(M), dtype=float)
        return self.c - self.k * np.sign(trace(M))

    @property
    def sup(self):
        if self.bound is not None:
            return float(self.bound)
        if self.g is not None:
            raise ConstructionError("custom strain laws need an explicit bound")
        return abs(self.c) + self.k


@dataclass(frozen=True)
class PressureLaw:
    """Pressure p(x, M, v) for ``F = -p tr(M)``; build with the classmethods."""

    kind: str
    params: dict = field(default_factory=dict)

    @classmethod
    def affine_in_v(cls, m=0.0, q=0.0, rho=1.0, rho_lipschitz=0.0):
        """p = (m v + q) rho(x)."""
        return cls("affine", {"m": float(m), "q": float(q), "rho": rho,
                              "rho_lipschitz": float(rho_lipschitz)})

    @classmethod
    def strain_dependent(cls, rho_v=1.0, law: Optional[TraceLaw] = None, rho_x=1.0,
                         rho_lipschitz=0.0):
        """p = rho_x(x) rho_v(v) g(M)."""
        return cls("strain", {"rho_v": rho_v, "law": law or TraceLaw(), "rho_x": rho_x,
                              "rho_lipschitz": float(rho_lipschitz)})

    @classmethod
    def two_rocks(cls, law1: TraceLaw, law2: TraceLaw, interface, delta, rho_v=1.0):
        """p = w(x) rho_v(v) g_i(M), w = min(dist(x, S) / delta, 1), i = side of S.

        Rock 1 lies on the left of the oriented polyline ``interface``.
        """
        pts = np.asarray(interface, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 2:
            raise ConstructionError("interface must be a polyline of at least two points")
        if not delta > 0:
            raise ConstructionError("layer width delta must be positive")
        return cls("two_rocks", {"law1": law1, "law2": law2, "interface": pts,
                                 "delta": float(delta), "rho_v": rho_v})


def _v_fun(f):
    if callable(f):
        return lambda v: np.asarray(f(np.asarray(v, dtype=float)), dtype=float)
    if isinstance(f, str):
        e = compile_expr(f, ("v",))
        return lambda v: e(v=v)
    c = float(f)
    return lambda v: np.full(np.shape(v), c)


def polyline_side_distance(x, pts):
    """Distance to a polyline and side indicator (+1 left, -1 right) of the nearest segment."""
    x = np.asarray(x, dtype=float)
    best = np.full(x.shape[:-1], np.inf)
    side = np.ones(x.shape[:-1])
    for p0, p1 in zip(pts[:-1], pts[1:]):
        s, t, d = segment_coordinates(x, p0, p1)
        closer = d < best
        best = np.where(closer, d, best)
        side = np.where(closer, np.where(t >= 0, 1.0, -1.0), side)
    return best, side


def make_fracking(p: PressureLaw, bbox=(0.0, 0.0, 1.0, 1.0)) -> PotentialSpec:
    """F(x, M, v) = -p(x, M, v) tr(M) with its closed-form recession.

    ``bbox`` is only used to bound the spatial fields when registering sigma
    and ell.
    """
    if p.kind == "affine":
        m, q = p.params["m"], p.params["q"]
        rho = spatial_field(p.params["rho"])

        def pressure(x, v):
            return (m * np.asarray(v) + q) * rho(x)

        def value(x, M, v):
            return -pressure(x, v) * trace(M)

        def rec(x, M):
            return -q * rho(x) * trace(M)

        def coeffs(x, M):
            r = rho(x) * trace(M)
            return -q * r, -m * r, np.zeros_like(r)

        bound = max(abs(q), abs(m + q)) * _sample_max(rho, bbox) * _SQRT2
        return PotentialSpec(value, rec, bound, bound, p.params["rho_lipschitz"] * bound,
                             "fracking_affine", pressure=pressure, v_coeffs=coeffs,
                             params={"m": m, "q": q})

    if p.kind == "strain":
        rho_v = _v_fun(p.params["rho_v"])
        rho_x = spatial_field(p.params["rho_x"])
        law = p.params["law"]

        def value(x, M, v):
            return -rho_x(x) * rho_v(v) * law(M) * trace(M)

        def rec(x, M):
            return -rho_x(x) * rho_v(np.zeros(np.shape(x)[:-1])) * law.limit(M) * trace(M)

        vs = np.linspace(0, 1, 101)
        bound = _sample_max(rho_x, bbox) * float(np.max(np.abs(rho_v(vs)))) * law.sup * _SQRT2
        return PotentialSpec(value, rec, bound, bound, p.params["rho_lipschitz"] * bound,
                             "fracking_strain", params={"law": law})

    if p.kind == "two_rocks":
        law1, law2 = p.params["law1"], p.params["law2"]
        pts, delta = p.params["interface"], p.params["delta"]
        rho_v = _v_fun(p.params["rho_v"])

        def weights(x):
            d, side = polyline_side_distance(x, pts)
            return np.minimum(d / delta, 1.0), side

        def value(x, M, v):
            w, side = weights(x)
            g = np.where(side > 0, law1(M), law2(M))
            return -w * rho_v(v) * g * trace(M)

        def rec(x, M):
            w, side = weights(x)
            g = np.where(side > 0, law1.limit(M), law2.limit(M))
            return -w * rho_v(np.zeros(np.shape(w))) * g * trace(M)

        vs = np.linspace(0, 1, 101)
        bound = float(np.max(np.abs(rho_v(vs)))) * max(law1.sup, law2.sup) * _SQRT2
        return PotentialSpec(value, rec, bound, bound, bound / delta, "two_rocks",
                             params={"delta": delta})

    raise ConstructionError(f"unknown pressure law {p.kind!r}")


# ---------------------------------------------------------------------------
# plastic slip and Tresca
# ---------------------------------------------------------------------------

SUBLINEAR_T = 2.0 ** 20


def check_sublinear(g, g_inf):
    """Reject g whose slope g(t)/t is still growing at large t or misses g_inf."""
    t = SUBLINEAR_T
    g0 = float(g(np.array(0.0)))
    if abs(g0) > 1e-12:
        raise ConstructionError("g(0) must be 0")
    s1 = float(g(np.array(t))) / t
    s2 = float(g(np.array(2 * t))) / (2 * t)
    if s2 - s1 > 1e-6 * (1 + abs(s1)):
        raise ConstructionError("g is superlinear on samples: g(t)/t still grows at t = 2^20")
    if abs(s2 - g_inf) > 1e-4 * (1 + abs(g_inf)):
        raise ConstructionError(f"g(t)/t -> {s2:.6g} does not match g_inf = {g_inf:.6g}")
    ts = np.linspace(0.0, 10.0, 201)
    vals = np.asarray(g(ts), dtype=float)
    if np.any(np.diff(vals, 2) < -1e-9 * (1 + np.abs(vals).max())):
        raise ConstructionError("g must be convex")


G_LIBRARY = {
    "linear": (lambda t: np.asarray(t, dtype=float), 1.0),
    "smooth": (lambda t: np.sqrt(1.0 + np.asarray(t, dtype=float) ** 2) - 1.0, 1.0),
}


def _resolve_g(g, g_inf):
    if isinstance(g, str):
        if g not in G_LIBRARY:
            raise ConstructionError(f"unknown g {g!r}; choose from {sorted(G_LIBRARY)}")
        fn, gi = G_LIBRARY[g]
        return fn, gi if g_inf is None else float(g_inf)
    if g_inf is None:
        raise ConstructionError("custom g needs g_inf")
    return (lambda t: np.asarray(g(np.asarray(t, dtype=float)), dtype=float)), float(g_inf)


def make_plastic_slip(p_xv=1.0, g="linear", g_inf=None, bbox=(0.0, 0.0, 1.0, 1.0)) -> PotentialSpec:
    """F = p(x, v) g(|M|), F_inf = g_inf p(x, 0) |M|."""
    gfun, g_inf = _resolve_g(g, g_inf)
    check_sublinear(gfun, g_inf)
    p = xv_field(p_xv)

    def value(x, M, v):
        return p(x, v) * gfun(frobenius(M))

    def rec(x, M):
        return g_inf * p(x, np.zeros(np.shape(x)[:-1])) * frobenius(M)

    pmax = _p_range(p, bbox)
    return PotentialSpec(value, rec, pmax[1] * g_inf, pmax[0] * g_inf, 0.0, "plastic_slip",
                         params={"g_inf": g_inf})


def _p_range(p, bbox, n=32):
    """(max |p|, max negative part of p) over the bbox and v in [0, 1]."""
    x0, y0, x1, y1 = bbox
    gx, gy = np.meshgrid(np.linspace(x0, x1, n), np.linspace(y0, y1, n))
    pts = np.stack([gx, gy], axis=-1)[..., None, :]
    vals = p(pts, np.linspace(0, 1, 11))
    return float(np.abs(vals).max()), float(np.maximum(-vals, 0).max())


def make_tresca(p_xv=1.0, g="linear", g_inf=None, A: Optional[ElasticTensor] = None,
                bbox=(0.0, 0.0, 1.0, 1.0)) -> PotentialSpec:
    """F = p(x, v) g(lambda_max(A M) - lambda_min(A M))."""
    if A is None:
        A = ElasticTensor.scaled_identity(1.0)
    gfun, g_inf = _resolve_g(g, g_inf)
    check_sublinear(gfun, g_inf)
    p = xv_field(p_xv)

    def gap(M):
        return eigen_gap(A.apply(M))

    def value(x, M, v):
        return p(x, v) * gfun(gap(M))

    def rec(x, M):
        return g_inf * p(x, np.zeros(np.shape(x)[:-1])) * gap(M)

    pmax = _p_range(p, bbox)
    c = _SQRT2 * A.operator_norm * g_inf
    return PotentialSpec(value, rec, pmax[1] * c, pmax[0] * c, 0.0, "tresca",
                         params={"g_inf": g_inf})


# ---------------------------------------------------------------------------
# non-interpenetration
# ---------------------------------------------------------------------------

def make_non_interpenetration(p_field=1.0, bbox=(0.0, 0.0, 1.0, 1.0)) -> PotentialSpec:
    """F = (1 - v)^2 p(x) tr(M)^-, F_inf = p(x) tr(M)^-."""
    p = spatial_field(p_field)
    x0, y0, x1, y1 = bbox
    gx, gy = np.meshgrid(np.linspace(x0, x1, 64), np.linspace(y0, y1, 64))
    samples = p(np.stack([gx, gy], axis=-1))
    if np.any(samples < 0):
        raise ConstructionError("non-interpenetration coefficient must be non-negative")

    def value(x, M, v):
        return (1.0 - np.asarray(v)) ** 2 * p(x) * np.maximum(-trace(M), 0.0)

    def rec(x, M):
        return p(x) * np.maximum(-trace(M), 0.0)

    def coeffs(x, M):
        c = p(x) * np.maximum(-trace(M), 0.0)
        return c, -2.0 * c, c

    ell = float(samples.max()) * _SQRT2
    return PotentialSpec(value, rec, 0.0, ell, 0.0, "non_interpenetration", v_coeffs=coeffs)


# ---------------------------------------------------------------------------
# numeric recession
# ---------------------------------------------------------------------------

RECESSION_T = 2.0 ** np.arange(6, 21, 2)
# fallback rungs for kinks that sit beyond 2^16 (e.g. tr(L + tM) changing sign late)
RECESSION_T_EXT = 2.0 ** np.arange(22, 31, 2)


def difference_quotients(F: PotentialSpec, x, M, L=None, t=RECESSION_T):
    """(F(x, L + tM, 0) - F(x, L, 0)) / t for t in 2^6, 2^8, ..., 2^20 (last axis)."""
    x = np.asarray(x, dtype=float)
    M = np.asarray(M, dtype=float)
    L = np.zeros_like(M) if L is None else np.asarray(L, dtype=float)
    t = np.asarray(t, dtype=float)
    xs = x[..., None, :]
    zero_v = np.zeros(np.broadcast_shapes(x.shape[:-1], M.shape[:-2], L.shape[:-2]) + (len(t),))
    top = F(xs, L[..., None, :, :] + t[:, None, None] * M[..., None, :, :], zero_v)
    base = F(x, L, zero_v[..., 0])
    return (top - base[..., None]) / t


def _richardson(q):
    R = (4.0 * q[..., 1:] - q[..., :-1]) / 3.0
    val = R[..., -1]
    spread = R[..., -3:].max(axis=-1) - R[..., -3:].min(axis=-1)
    return val, spread


def recession_numeric(F: PotentialSpec, x, M, L=None, return_spread=False):
    """Richardson-stabilized limit of the recession difference quotients.

    The quotients at t and 4t (t = 2^6, ..., 2^20) are combined as
    ``(4 q(4t) - q(t)) / 3``, which removes the 1/t term; the last value is
    returned.  Samples whose last three combined values spread by more than
    ``1e-5 (1 + |value|)`` are retried on the rungs 2^22, ..., 2^30; if they
    still do not settle :class:`NumericRecessionError` is raised.
    """
    q = difference_quotients(F, x, M, L)
    val, spread = _richardson(q)
    bad = ~(spread <= 1e-5 * (1.0 + np.abs(val)))
    if np.any(bad):
        q2 = difference_quotients(F, x, M, L, RECESSION_T_EXT)
        val2, spread2 = _richardson(np.concatenate([q[..., -1:], q2], axis=-1))
        val = np.where(bad, val2, val)
        spread = np.where(bad, spread2, spread)
        bad = ~(spread <= 1e-5 * (1.0 + np.abs(val)))
    if np.any(bad):
        raise NumericRecessionError(
            f"recession quotients do not settle (max spread {float(np.max(spread)):.3g})")
    if return_spread:
        return val, spread
    return val


def recession_sup_affine(F: PotentialSpec, x, M, anchors=None, h=1e-6):
    """sup_j a_j . M over gradients a_j of F(x, ., 0) at anchor matrices.

    For convex F the supremum over all gradients equals F_inf(x, M); anchors
    default to ``t M`` for large t plus a few fixed matrices.
    """
    x = np.asarray(x, dtype=float)
    M = np.asarray(M, dtype=float)
    if anchors is None:
        anchors = [t * M for t in (1e2, 1e4, 1e6)]
        anchors += [np.broadcast_to(np.eye(2) * s, M.shape) for s in (-1.0, 0.0, 1.0)]
    basis = [np.array([[1.0, 0.0], [0.0, 0.0]]), np.array([[0.0, 0.0], [0.0, 1.0]]),
             np.array([[0.0, 1.0], [1.0, 0.0]]) / _SQRT2]
    Mm = np.stack([M[..., 0, 0], M[..., 1, 1], _SQRT2 * M[..., 0, 1]], axis=-1)
    best = np.full(np.broadcast_shapes(x.shape[:-1], M.shape[:-2]), -np.inf)
    v0 = np.zeros(best.shape)
    for Lj in anchors:
        scale = h * (1.0 + frobenius(Lj))[..., None, None]
        grad = np.stack([(F(x, Lj + scale * E, v0) - F(x, Lj - scale * E, v0)) / (2 * scale[..., 0, 0])
                         for E in basis], axis=-1)
        best = np.maximum(best, np.sum(grad * Mm, axis=-1))
    return best


# ---------------------------------------------------------------------------
# admissibility
# ---------------------------------------------------------------------------

OMEGA_S1 = (0.9, 0.99, 0.999)
OMEGA_S0 = (0.1, 0.01, 0.001)


@dataclass
class ValidationReport:
    sigma_hat: float
    ell_hat: float
    sigma_max: float
    convex_v0: bool
    convex_v1: bool
    zero_at_origin: bool
    omega_1: list
    omega_0: list
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def random_sym(rng, n, log_scale=(-3.0, 3.0)):
    """Random symmetric matrices with log-uniform Frobenius norms."""
    raw = rng.standard_normal((n, 2, 2))
    S = 0.5 * (raw + np.swapaxes(raw, -1, -2))
    S /= frobenius(S)[:, None, None]
    scale = 10.0 ** rng.uniform(*log_scale, size=n)
    return S * scale[:, None, None]


def _omega(F, x, dirs, s, ref):
    vs = np.full(dirs.shape[0], s)
    vr = np.full(dirs.shape[0], ref)
    out = 0.0
    for xi in x:
        xx = np.broadcast_to(xi, (dirs.shape[0], 2))
        diff = np.abs(F(xx, dirs, vs) - F(xx, dirs, vr))
        out = max(out, float(diff.max()))
    return out


def _monotone_to_zero(vals):
    vals = np.asarray(vals)
    return bool(np.all(np.diff(vals) <= 1e-12 * (1 + abs(vals[0])))
                and vals[-1] <= 0.05 * vals[0] + 1e-12)


def validate_bounds(F: PotentialSpec, law: DamageLaw, A: ElasticTensor, domain_area: float,
                    samples: int = 10_000, seed: int = 0, bbox=(0.0, 0.0, 1.0, 1.0),
                    directions: int = 256) -> ValidationReport:
    """Sample-based admissibility check of a potential.

    Estimates ``sigma_hat = max (-F / |M|)^+`` and ``ell_hat = max (F / |M|)^+``
    over random ``(x, M, v)``, runs midpoint-convexity tests in M at v = 0 and
    v = 1 and estimates the continuity moduli at the damage endpoints over
    ``directions`` unit matrices.  The report passes when sigma_hat is below
    :func:`sigma_max` and every test passes.
    """
    if samples < 10_000:
        raise InputError("validate_bounds needs at least 10^4 samples")
    ss = np.random.SeedSequence(seed)
    r_bound, r_cvx, r_dir = (np.random.default_rng(s) for s in ss.spawn(3))
    x0, y0, x1, y1 = bbox

    def points(rng, n):
        return np.stack([rng.uniform(x0, x1, n), rng.uniform(y0, y1, n)], axis=-1)

    failures = []
    x = points(r_bound, samples)
    M = random_sym(r_bound, samples)
    v = r_bound.uniform(0, 1, samples)
    v[:samples // 10] = 0.0
    v[samples // 10:samples // 5] = 1.0
    ratio = F(x, M, v) / frobenius(M)
    sigma_hat = float(max(0.0, np.max(-ratio)))
    ell_hat = float(max(0.0, np.max(ratio)))
    smax = sigma_max(law, A, domain_area)
    if sigma_hat > 0 and not sigma_hat < smax:
        failures.append(f"sigma_hat={sigma_hat:.6g} is not below sigma_max={smax:.6g}")

    zero_ok = bool(np.all(np.abs(F(x, np.zeros_like(M), v)) <= 1e-12))
    if not zero_ok:
        failures.append("F(x, 0, v) != 0")

    n = samples // 2
    xc = points(r_cvx, n)
    Ma, Mb = random_sym(r_cvx, n), random_sym(r_cvx, n)
    convex = []
    for vv in (0.0, 1.0):
        vs = np.full(n, vv)
        mid = F(xc, 0.5 * (Ma + Mb), vs)
        avg = 0.5 * (F(xc, Ma, vs) + F(xc, Mb, vs))
        tol = 1e-10 * (1 + np.abs(F(xc, Ma, vs)) + np.abs(F(xc, Mb, vs)))
        ok = bool(np.all(mid <= avg + tol))
        convex.append(ok)
        if not ok:
            failures.append(f"midpoint convexity fails at v={vv:g}")

    dirs = random_sym(r_dir, directions, (0.0, 0.0))
    xo = points(r_dir, 16)
    om1 = [_omega(F, xo, dirs, s, 1.0) for s in OMEGA_S1]
    om0 = [_omega(F, xo, dirs, s, 0.0) for s in OMEGA_S0]
    if not _monotone_to_zero(om1):
        failures.append(f"omega_F(s;1) does not vanish as s -> 1: {om1}")
    if not _monotone_to_zero(om0):
        failures.append(f"omega_F(s;0) does not vanish as s -> 0: {om0}")

    return ValidationReport(sigma_hat, ell_hat, smax, convex[0], convex[1], zero_ok,
                            om1, om0, failures)
