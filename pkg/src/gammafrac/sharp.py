"""
Sharp-interface energies
========================

Explicitly cracked displacements and the limit energy

    Phi(u) = int A e(u).e(u) + int F(x, e(u), 1)
             + a int_J sqrt(A([u] (.) nu).([u] (.) nu)) + b H^1(J) + int_J F_inf(z, [u] (.) nu)

together with the boundary price R(u, f) paid where the trace of u leaves a
Dirichlet datum f.

A :class:`CrackedDisplacement` is a finite set of disjoint straight segments
plus smooth *pieces*: each piece is a displacement formula valid up to the
segments, selected by a region indicator.  Bulk integrals use 3x3 Gauss
cells; cells cut by a segment that crosses them completely are split along
the segment line and integrated per side with a degree-5 triangle rule, the
remaining cut cells (crack tips, junctions) are refined until the increment
falls below ``1e-8`` of the total.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import AccuracyError, InputError
from .expr import compile_expr
from .geometry import Rectangle, gauss_legendre, segment_coordinates, segment_distance
from .material import DamageLaw, ElasticTensor, coefficients
from .potentials import PotentialSpec

JUMP_TOL = 1e-9
BULK_RTOL = 1e-8
MAX_LEVELS = 12
SURFACE_ORDER = 16


def symmetric_tensor_jump(jump, nu):
    """[u] (.) nu = ([u] x nu + nu x [u]) / 2, vectorized over leading axes."""
    j = np.asarray(jump, dtype=float)
    n = np.asarray(nu, dtype=float)
    if np.any(np.abs(np.linalg.norm(n, axis=-1) - 1.0) > 1e-12):
        raise InputError("normal must be a unit vector")
    d = j[..., :, None] * n[..., None, :]
    return 0.5 * (d + np.swapaxes(d, -1, -2))


def sym(G):
    return 0.5 * (G + np.swapaxes(G, -1, -2))


# ---------------------------------------------------------------------------
# data model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CrackSegment:
    """Closed straight segment with a fixed unit normal.

    ``nu`` defaults to the left normal of the direction ``p1 - p0``.  The plus
    side of the segment is the side ``nu`` points to.
    """

    p0: tuple
    p1: tuple
    nu: Optional[tuple] = None

    def __post_init__(self):
        p0 = np.asarray(self.p0, dtype=float)
        p1 = np.asarray(self.p1, dtype=float)
        d = p1 - p0
        ell = float(np.hypot(*d))
        if not ell > 0:
            raise InputError("crack segment must have positive length")
        tau = d / ell
        nu = np.array([-tau[1], tau[0]]) if self.nu is None else np.asarray(self.nu, dtype=float)
        if abs(np.hypot(*nu) - 1.0) > 1e-12:
            raise InputError("segment normal must be a unit vector")
        if abs(nu @ tau) > 1e-12:
            raise InputError("segment normal must be orthogonal to the segment")
        object.__setattr__(self, "p0", tuple(p0))
        object.__setattr__(self, "p1", tuple(p1))
        object.__setattr__(self, "nu", tuple(nu))

    @property
    def length(self) -> float:
        return float(np.hypot(self.p1[0] - self.p0[0], self.p1[1] - self.p0[1]))

    @property
    def tangent(self) -> np.ndarray:
        return (np.asarray(self.p1) - np.asarray(self.p0)) / self.length

    @property
    def normal(self) -> np.ndarray:
        return np.asarray(self.nu)

    def point(self, s):
        s = np.asarray(s, dtype=float)[..., None]
        return np.asarray(self.p0) + s * self.tangent

    def local(self, p):
        """(s, t, dist): arclength, signed offset along nu, distance to the closed segment."""
        s, t, dist = segment_coordinates(p, self.p0, self.p1)
        left = np.array([-self.tangent[1], self.tangent[0]])
        return s, t * float(left @ self.normal), dist


@dataclass
class Piece:
    """A smooth displacement formula, valid on the part of the domain where
    ``region`` is true (``None`` means everywhere not claimed by an earlier piece).

    ``grad(p)`` returns the full gradient ``G[i, j] = d u_i / d x_j``; when it
    is missing central differences are used.
    """

    value: Callable
    grad: Optional[Callable] = None
    region: Optional[Callable] = None
    name: str = ""
    fd_step: float = 1e-6

    def __call__(self, p):
        return np.asarray(self.value(np.asarray(p, dtype=float)), dtype=float)

    def gradient(self, p):
        p = np.asarray(p, dtype=float)
        if self.grad is not None:
            return np.asarray(self.grad(p), dtype=float)
        h = self.fd_step
        cols = []
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            cols.append((self(p + e) - self(p - e)) / (2 * h))
        return np.stack(cols, axis=-1)

    @classmethod
    def from_expressions(cls, ux, uy, region=None, name=""):
        """Piece from expression strings in x, y; ``region`` is true where its expression is > 0."""
        ex, ey = compile_expr(ux), compile_expr(uy)

        def value(p):
            return np.stack([ex(x=p[..., 0], y=p[..., 1]), ey(x=p[..., 0], y=p[..., 1])], axis=-1)

        def grad(p):
            _, gx = ex.value_and_grad(x=p[..., 0], y=p[..., 1])
            _, gy = ey.value_and_grad(x=p[..., 0], y=p[..., 1])
            return np.stack([gx, gy], axis=-2)

        reg = None
        if region is not None:
            er = compile_expr(region)

            def reg(p):
                return er(x=p[..., 0], y=p[..., 1]) > 0

        piece = cls(value, grad, reg, name)
        piece.source = {"ux": str(ux), "uy": str(uy), "region": region}
        return piece

    @classmethod
    def constant(cls, c, region=None, name=""):
        c = np.asarray(c, dtype=float)
        return cls(lambda p: np.broadcast_to(c, np.shape(p)).copy(),
                   lambda p: np.zeros(np.shape(p)[:-1] + (2, 2)), region, name)


class CrackedDisplacement:
    """Piecewise-smooth displacement with an explicit polyline jump set.

    Parameters
    ----------
    domain : Rectangle or another domain object
    segments : list of CrackSegment
    pieces : list of Piece
        A point belongs to the first piece whose region contains it; the last
        piece should have ``region=None``.
    sides : optional list of (plus_index, minus_index)
        Piece indices carrying the traces on each side of each segment.  By
        default they are found by probing just off the segment midpoint.
    """

    def __init__(self, domain, segments: Sequence[CrackSegment], pieces: Sequence[Piece],
                 sides=None, linf=None):
        self.domain = domain
        self.segments = list(segments)
        self.pieces = list(pieces)
        if not self.pieces:
            raise InputError("at least one piece is required")
        tol = 1e-12 * (1 + max(abs(c) for c in domain.bbox))
        for seg in self.segments:
            for q in (seg.p0, seg.p1):
                if not bool(domain.contains(np.asarray(q), tol)):
                    raise InputError(f"segment endpoint {q} lies outside the domain")
        for i in range(len(self.segments)):
            for j in range(i + 1, len(self.segments)):
                a, b = self.segments[i], self.segments[j]
                if not segment_distance(a.p0, a.p1, b.p0, b.p1) > 0:
                    raise InputError(f"segments {i} and {j} are not disjoint")
        if sides is None:
            sides = [self._probe_sides(seg) for seg in self.segments]
        self.sides = [tuple(int(k) for k in s) for s in sides]
        self._linf = linf

    # evaluation -------------------------------------------------------------
    def _probe_sides(self, seg):
        off = 1e-6 * max(1.0, seg.length)
        s = np.array([0.25, 0.5, 0.75]) * seg.length
        base = seg.point(s)
        plus = self.piece_index(base + off * seg.normal)
        minus = self.piece_index(base - off * seg.normal)
        if len(set(plus.tolist())) != 1 or len(set(minus.tolist())) != 1:
            raise InputError("piece regions do not give a consistent side along a segment")
        return int(plus[0]), int(minus[0])

    def piece_index(self, p):
        p = np.asarray(p, dtype=float)
        idx = np.full(p.shape[:-1], -1, dtype=int)
        for k, pc in enumerate(self.pieces):
            free = idx < 0
            if not np.any(free):
                break
            if pc.region is None:
                idx[free] = k
            else:
                hit = np.asarray(pc.region(p), dtype=bool)
                idx[free & hit] = k
        idx[idx < 0] = len(self.pieces) - 1
        return idx

    def _dispatch(self, p, method, idx=None):
        p = np.asarray(p, dtype=float)
        idx = self.piece_index(p) if idx is None else idx
        out = None
        for k in np.unique(idx):
            m = idx == k
            vals = getattr(self.pieces[k], method)(p[m])
            if out is None:
                out = np.zeros(p.shape[:-1] + vals.shape[1:])
            out[m] = vals
        if out is None:
            shape = (2,) if method == "__call__" else (2, 2)
            out = np.zeros(p.shape[:-1] + shape)
        return out

    def value(self, p, idx=None):
        return self._dispatch(p, "__call__", idx)

    def gradient(self, p, idx=None):
        return self._dispatch(p, "gradient", idx)

    def strain(self, p, idx=None):
        return sym(self.gradient(p, idx))

    def trace(self, k, s, side=+1):
        seg = self.segments[k]
        pc = self.pieces[self.sides[k][0 if side > 0 else 1]]
        return pc(seg.point(s))

    def jump(self, k, s):
        return self.trace(k, s, +1) - self.trace(k, s, -1)

    def sym_jump(self, k, s):
        seg = self.segments[k]
        j = self.jump(k, s)
        return symmetric_tensor_jump(j, np.broadcast_to(seg.normal, j.shape))

    def linf(self, n=257):
        """Sup norm (max over components) sampled on a grid plus segment traces."""
        if self._linf is not None:
            return float(self._linf)
        x0, y0, x1, y1 = self.domain.bbox
        gx, gy = np.meshgrid(np.linspace(x0, x1, n), np.linspace(y0, y1, n))
        p = np.stack([gx.ravel(), gy.ravel()], axis=-1)
        p = p[self.domain.contains(p)]
        vals = [np.abs(self.value(p)).max(initial=0.0)]
        s = np.linspace(0, 1, n)
        for k, seg in enumerate(self.segments):
            for side in (+1, -1):
                vals.append(np.abs(self.trace(k, s * seg.length, side)).max())
        return float(max(vals))

    def jump_support(self, k, tol=JUMP_TOL):
        """Maximal sub-intervals of segment k where |[u]| > tol."""
        seg = self.segments[k]
        return support_intervals(lambda s: np.linalg.norm(self.jump(k, s), axis=-1) > tol,
                                 seg.length)


def support_intervals(mask_fn, length, n=1024, iters=60):
    """Intervals of [0, length] where ``mask_fn`` is true, with bisected ends."""
    s = np.linspace(0.0, length, n + 1)
    m = np.asarray(mask_fn(s), dtype=bool)
    out = []
    k = 0
    while k <= n:
        if not m[k]:
            k += 1
            continue
        j = k
        while j + 1 <= n and m[j + 1]:
            j += 1
        lo = s[k] if k == 0 else _bisect(mask_fn, s[k - 1], s[k], iters)
        hi = s[j] if j == n else _bisect(mask_fn, s[j + 1], s[j], iters)
        if hi > lo:
            out.append((float(lo), float(hi)))
        k = j + 1
    return out


def _bisect(mask_fn, off, on, iters):
    """Boundary between an 'off' point and an 'on' point."""
    for _ in range(iters):
        mid = 0.5 * (off + on)
        if bool(mask_fn(np.array([mid]))[0]):
            on = mid
        else:
            off = mid
    return 0.5 * (off + on)


def interval_rule(intervals, order=SURFACE_ORDER, panels=4):
    """Composite Gauss-Legendre nodes and weights on a list of intervals."""
    ss, ww = [], []
    for lo, hi in intervals:
        edges = np.linspace(lo, hi, panels + 1)
        for a, b in zip(edges[:-1], edges[1:]):
            s, w = gauss_legendre(order, a, b)
            ss.append(s)
            ww.append(w)
    if not ss:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(ss), np.concatenate(ww)


# ---------------------------------------------------------------------------
# energy breakdown
# ---------------------------------------------------------------------------

@dataclass
class SharpEnergyBreakdown:
    bulk_elastic: float = 0.0
    bulk_potential: float = 0.0
    surface_a: float = 0.0
    surface_b: float = 0.0
    surface_Finf: float = 0.0
    boundary_R: float = 0.0

    @property
    def total(self) -> float:
        return float(math.fsum([self.bulk_elastic, self.bulk_potential, self.surface_a,
                                self.surface_b, self.surface_Finf, self.boundary_R]))

    @property
    def bulk(self) -> float:
        return self.bulk_elastic + self.bulk_potential

    @property
    def surface(self) -> float:
        return self.surface_a + self.surface_b + self.surface_Finf

    def as_dict(self):
        return {"bulk_elastic": self.bulk_elastic, "bulk_potential": self.bulk_potential,
                "surface_a": self.surface_a, "surface_b": self.surface_b,
                "surface_Finf": self.surface_Finf, "boundary_R": self.boundary_R,
                "total": self.total}


# ---------------------------------------------------------------------------
# bulk quadrature
# ---------------------------------------------------------------------------

_G3, _W3 = np.polynomial.legendre.leggauss(3)
_G6, _W6 = np.polynomial.legendre.leggauss(6)

# 7-point degree-5 triangle rule (barycentric coordinates, weights sum to 1)
_R15 = math.sqrt(15.0)
_A1, _B1 = (6 - _R15) / 21, (9 + 2 * _R15) / 21
_A2, _B2 = (6 + _R15) / 21, (9 - 2 * _R15) / 21
TRI_BARY = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [_A1, _A1, _B1], [_A1, _B1, _A1], [_B1, _A1, _A1],
    [_A2, _A2, _B2], [_A2, _B2, _A2], [_B2, _A2, _A2],
])
TRI_W = np.array([9 / 40] + [(155 - _R15) / 1200] * 3 + [(155 + _R15) / 1200] * 3)


def _cell_gauss(cells):
    """3x3 Gauss points (N, 9, 2) and weights (N, 9) on axis-aligned cells."""
    x0, y0, x1, y1 = cells.T
    gx = 0.5 * (x0 + x1)[:, None] + 0.5 * (x1 - x0)[:, None] * _G3[None, :]
    gy = 0.5 * (y0 + y1)[:, None] + 0.5 * (y1 - y0)[:, None] * _G3[None, :]
    X = np.repeat(gx, 3, axis=1)
    Y = np.tile(gy, (1, 3))
    W = np.outer(_W3, _W3).ravel()[None, :] * (0.25 * (x1 - x0) * (y1 - y0))[:, None]
    return np.stack([X, Y], axis=-1), W


def _cell_chord(cells, domain, order=6):
    """Points and weights on cells intersected with a convex domain.

    Sections are taken across the boundary: vertical chords where the outward
    normal at the cell centre is closer to vertical, horizontal ones otherwise.
    The abscissa range is split where the boundary leaves through a cell side
    so the chord ends stay smooth on every sub-interval.
    """
    g, gw = np.polynomial.legendre.leggauss(order)
    cen = 0.5 * (cells[:, :2] + cells[:, 2:])
    nu = domain.project(cen)[1]
    pts_all, w_all = [], []
    for c, n in zip(cells, nu):
        axis = 1 if abs(n[0]) > abs(n[1]) else 0
        a0, b0, a1, b1 = c if axis == 0 else c[[1, 0, 3, 2]]
        brk = [a0, a1]
        for b in (b0, b1):
            brk.extend(np.concatenate(domain.chord(np.array([b]), 1 - axis)).tolist())
        brk = np.unique(np.clip(brk, a0, a1))
        P, W = [], []
        for lo_a, hi_a in zip(brk[:-1], brk[1:]):
            ga = 0.5 * (lo_a + hi_a) + 0.5 * (hi_a - lo_a) * g
            wa = 0.5 * (hi_a - lo_a) * gw
            lo, hi = domain.chord(ga, axis)
            lo, hi = np.maximum(lo, b0), np.minimum(hi, b1)
            span = np.maximum(hi - lo, 0.0)
            B = 0.5 * (lo + hi)[:, None] + 0.5 * span[:, None] * g[None, :]
            Aa = np.broadcast_to(ga[:, None], B.shape)
            P.append(np.stack([Aa, B] if axis == 0 else [B, Aa], axis=-1).reshape(-1, 2))
            W.append((wa[:, None] * 0.5 * span[:, None] * gw[None, :]).ravel())
        pts_all.append(np.concatenate(P))
        w_all.append(np.concatenate(W))
    m = max(len(w) for w in w_all) if w_all else 0
    Pout = np.zeros((len(cells), m, 2))
    Wout = np.zeros((len(cells), m))
    for i, (p, w) in enumerate(zip(pts_all, w_all)):
        Pout[i, :len(w)] = p
        Pout[i, len(w):] = p[0]
        Wout[i, :len(w)] = w
    return Pout, Wout


def _clip_halfplane(poly, n, c, sign):
    """Sutherland-Hodgman clip of a convex polygon to sign * (n.p - c) >= 0."""
    out = []
    m = len(poly)
    for i in range(m):
        P, Q = poly[i], poly[(i + 1) % m]
        fp = sign * (n @ P - c)
        fq = sign * (n @ Q - c)
        if fp >= 0:
            out.append(P)
        if (fp >= 0) != (fq >= 0):
            t = fp / (fp - fq)
            out.append(P + t * (Q - P))
    return out


def _polygon_rule(poly):
    """Degree-5 points and weights on a convex polygon (fan triangulation)."""
    if len(poly) < 3:
        return np.zeros((0, 2)), np.zeros(0)
    pts, wts = [], []
    A = poly[0]
    for B, C in zip(poly[1:-1], poly[2:]):
        area = 0.5 * abs((B[0] - A[0]) * (C[1] - A[1]) - (B[1] - A[1]) * (C[0] - A[0]))
        if area <= 0:
            continue
        pts.append(TRI_BARY @ np.array([A, B, C]))
        wts.append(TRI_W * area)
    if not pts:
        return np.zeros((0, 2)), np.zeros(0)
    return np.concatenate(pts), np.concatenate(wts)


def _line_box(seg, box):
    """Parameter range (arclength) of the segment's infinite line inside a closed box, or None."""
    p0 = np.asarray(seg.p0)
    d = seg.tangent
    lo, hi = -np.inf, np.inf
    for ax in range(2):
        a, b = box[ax], box[ax + 2]
        if abs(d[ax]) < 1e-15:
            if p0[ax] < a - 1e-14 or p0[ax] > b + 1e-14:
                return None
        else:
            t1, t2 = (a - p0[ax]) / d[ax], (b - p0[ax]) / d[ax]
            lo, hi = max(lo, min(t1, t2)), min(hi, max(t1, t2))
    if lo > hi + 1e-14:
        return None
    return lo, hi


class _Integrand:
    def __init__(self, u, A, F):
        self.u, self.A, self.F = u, A, F

    def __call__(self, p, idx=None):
        e = self.u.strain(p, idx)
        el = self.A.density(e)
        pot = np.zeros_like(el) if self.F.is_zero else self.F(p, e, np.ones(el.shape))
        return el, pot


def bulk_integrals(u: CrackedDisplacement, A: ElasticTensor, F: PotentialSpec,
                   n0: int = 16, rtol: float = BULK_RTOL, max_levels: int = MAX_LEVELS):
    """(int A e.e, int F(x, e, 1)) over the domain, with crack-aware refinement."""
    g = _Integrand(u, A, F)
    dom = u.domain
    x0, y0, x1, y1 = dom.bbox
    hc = max(x1 - x0, y1 - y0) / n0
    nx = max(1, int(math.ceil((x1 - x0) / hc - 1e-9)))
    ny = max(1, int(math.ceil((y1 - y0) / hc - 1e-9)))
    xs, ys = np.linspace(x0, x1, nx + 1), np.linspace(y0, y1, ny + 1)
    X0, Y0 = np.meshgrid(xs[:-1], ys[:-1])
    X1, Y1 = np.meshgrid(xs[1:], ys[1:])
    cells = np.stack([X0.ravel(), Y0.ravel(), X1.ravel(), Y1.ravel()], axis=-1)
    curved = not isinstance(dom, Rectangle)

    total = np.zeros(2)
    prev = None
    for level in range(max_levels + 1):
        inc, unresolved = _integrate_cells(cells, u, g, dom, curved)
        total = total + inc
        if len(unresolved) == 0:
            return float(total[0]), float(total[1])
        scale = max(abs(total[0]) + abs(total[1]), 1e-300)
        if level > 0 and abs(inc[0]) + abs(inc[1]) <= rtol * scale:
            rest = _pointwise_estimate(np.asarray(unresolved), g, dom, curved)
            return float(total[0] + rest[0]), float(total[1] + rest[1])
        prev = total.copy()
        cells = _split(np.asarray(unresolved))
    raise AccuracyError(
        f"bulk quadrature did not converge after {max_levels} refinement levels",
        (float(prev.sum()) if prev is not None else float("nan"), float(total.sum())))


def _pointwise_estimate(cells, g, dom, curved):
    """Plain Gauss estimate on leftover cells, each point taking its own piece."""
    if curved:
        pts, w = _cell_chord(cells, dom)
    else:
        pts, w = _cell_gauss(cells)
    el, pot = g(pts)
    return np.array([np.sum(el * w), np.sum(pot * w)])


def _split(cells):
    x0, y0, x1, y1 = cells.T
    xm, ym = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    return np.concatenate([
        np.stack([x0, y0, xm, ym], -1), np.stack([xm, y0, x1, ym], -1),
        np.stack([x0, ym, xm, y1], -1), np.stack([xm, ym, x1, y1], -1)])


def _probe_points(cells):
    x0, y0, x1, y1 = cells.T
    cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    f = 1.0 - 1e-9
    pts = [np.stack([cx, cy], -1)]
    for sx in (-1, 1):
        for sy in (-1, 1):
            pts.append(np.stack([cx + sx * f * 0.5 * (x1 - x0), cy + sy * f * 0.5 * (y1 - y0)], -1))
    return np.stack(pts, axis=1)


def _integrate_cells(cells, u, g, dom, curved):
    """Integrate resolvable cells; return (increment, unresolved cells)."""
    n = cells.shape[0]
    inc = np.zeros(2)
    status = np.zeros(n, dtype=int)  # 0 smooth, 1 cut, 2 unresolved, 3 outside
    hit_seg = np.full(n, -1)
    if curved:
        corners = np.stack([cells[:, [0, 1]], cells[:, [2, 1]], cells[:, [2, 3]], cells[:, [0, 3]]], 1)
        inside_all = np.all(dom.contains(corners), axis=1)
        cen = 0.5 * (cells[:, :2] + cells[:, 2:])
        halfdiag = 0.5 * np.hypot(cells[:, 2] - cells[:, 0], cells[:, 3] - cells[:, 1])
        outside = dom.sdf(cen) > halfdiag
        status[outside] = 3
        boundary = ~inside_all & ~outside
    else:
        boundary = np.zeros(n, dtype=bool)
    for k, seg in enumerate(u.segments):
        # distance from cell to segment <= 0 means contact
        for i in np.nonzero(status != 3)[0]:
            box = cells[i]
            rng = _line_box(seg, box)
            if rng is None:
                continue
            lo, hi = max(rng[0], 0.0), min(rng[1], seg.length)
            if lo > hi + 1e-14:
                continue
            if hit_seg[i] >= 0 or boundary[i]:
                status[i] = 2
                continue
            hit_seg[i] = k
            full = rng[0] >= -1e-12 * seg.length and rng[1] <= seg.length * (1 + 1e-12)
            status[i] = 1 if full else 2
    # smooth cells
    sm = np.nonzero(status == 0)[0]
    if sm.size:
        c = cells[sm]
        probes = _probe_points(c)
        if curved:
            pts_in, w_in = _cell_gauss(c)
            pts_b, w_b = _cell_chord(c, dom)
            bmask = boundary[sm]
            probes_all = np.concatenate([probes, np.where(bmask[:, None, None], pts_b[:, :9], pts_in)], 1)
        else:
            pts_in, w_in = _cell_gauss(c)
            probes_all = np.concatenate([probes, pts_in], 1)
            bmask = np.zeros(len(sm), dtype=bool)
        pidx = u.piece_index(probes_all)
        if curved:
            inside = dom.contains(probes_all, 1e-12)
            pidx = np.where(inside, pidx, pidx[:, :1])
        uniform = np.all(pidx == pidx[:, :1], axis=1)
        status[sm[~uniform]] = 2
        for mask, pts, w in ((~bmask & uniform, pts_in, w_in),):
            if np.any(mask):
                el, pot = g(pts[mask], np.repeat(pidx[mask, :1], pts.shape[1], axis=1))
                inc += [np.sum(el * w[mask]), np.sum(pot * w[mask])]
        if np.any(bmask & uniform):
            m = bmask & uniform
            pts, w = pts_b[m], w_b[m]
            el, pot = g(pts, np.repeat(pidx[m, :1], pts.shape[1], axis=1))
            inc += [np.sum(el * w), np.sum(pot * w)]
    # cut cells: split along the segment line
    for i in np.nonzero(status == 1)[0]:
        seg = u.segments[hit_seg[i]]
        x0, y0, x1, y1 = cells[i]
        poly = [np.array(q, dtype=float) for q in ((x0, y0), (x1, y0), (x1, y1), (x0, y1))]
        nrm = seg.normal
        c = float(nrm @ np.asarray(seg.p0))
        parts = []
        ok = True
        for sign in (+1, -1):
            sub = _clip_halfplane(poly, nrm, c, sign)
            pts, w = _polygon_rule(sub)
            if pts.shape[0] == 0:
                continue
            pidx = u.piece_index(pts)
            side_piece = u.sides[hit_seg[i]][0 if sign > 0 else 1]
            if not np.all(pidx == pidx[0]):
                ok = False
                break
            # the side's trace piece owns the polygon even where regions are ambiguous
            parts.append((pts, w, np.full(pts.shape[0], side_piece)))
        if not ok:
            status[i] = 2
            continue
        for pts, w, idx in parts:
            el, pot = g(pts, idx)
            inc += [np.sum(el * w), np.sum(pot * w)]
    return inc, cells[status == 2]


# ---------------------------------------------------------------------------
# surface terms
# ---------------------------------------------------------------------------

def _surface_terms(z, J, nu, A, a, F):
    M = symmetric_tensor_jump(J, nu)
    ta = a * np.sqrt(np.maximum(A.density(M), 0.0))
    tf = np.zeros_like(ta) if F.is_zero else F.recession(z, M)
    return ta, tf


def evaluate_phi(u: CrackedDisplacement, A: ElasticTensor, law: DamageLaw,
                 F: PotentialSpec) -> SharpEnergyBreakdown:
    """Sharp energy of a cracked displacement, split into its parts."""
    a, b = coefficients(law)
    el, pot = bulk_integrals(u, A, F)
    sa = sb = sf = 0.0
    for k, seg in enumerate(u.segments):
        iv = u.jump_support(k)
        s, w = interval_rule(iv)
        if s.size:
            z = seg.point(s)
            J = u.jump(k, s)
            ta, tf = _surface_terms(z, J, np.broadcast_to(seg.normal, J.shape), A, a, F)
            sa += float(np.sum(w * ta))
            sf += float(np.sum(w * tf))
        sb += b * sum(hi - lo for lo, hi in iv)
    return SharpEnergyBreakdown(el, pot, sa, sb, sf, 0.0)


def boundary_trace(u: CrackedDisplacement, p, nu):
    """Trace of u at boundary points p (outward normals nu)."""
    p = np.asarray(p, dtype=float)
    idx = u.piece_index(p - 1e-9 * nu)
    return u.value(p, idx)


def evaluate_R_parts(u: CrackedDisplacement, f: Callable, A: ElasticTensor, law: DamageLaw,
                     F: PotentialSpec, domain=None, tol=JUMP_TOL):
    """(a-part, b-part, F_inf-part) of the boundary price R(u, f).

    The jump across the boundary is taken as ``f - tr(u)`` with the outward
    normal, the orientation produced by extending u by f outside the domain.
    """
    a, b = coefficients(law)
    dom = u.domain if domain is None else domain
    pa = pb = pf = 0.0
    for pc in dom.pieces():
        def mismatch(s, pc=pc):
            p = pc.point(s)
            n = pc.normal(s)
            return np.linalg.norm(np.asarray(f(p), dtype=float) - boundary_trace(u, p, n), axis=-1)

        iv = support_intervals(lambda s: mismatch(s) > tol, pc.length)
        pb += b * sum(hi - lo for lo, hi in iv)
        s, w = interval_rule(iv)
        if s.size:
            p, n = pc.point(s), pc.normal(s)
            J = np.asarray(f(p), dtype=float) - boundary_trace(u, p, n)
            ta, tf = _surface_terms(p, J, n, A, a, F)
            pa += float(np.sum(w * ta))
            pf += float(np.sum(w * tf))
    return pa, pb, pf


def evaluate_R(u, f, A, law, F, domain=None) -> float:
    return float(math.fsum(evaluate_R_parts(u, f, A, law, F, domain)))


def sharp_total(u, f, A, law, F, domain=None) -> SharpEnergyBreakdown:
    """Phi(u) plus, when a datum is given, R(u, f)."""
    br = evaluate_phi(u, A, law, F)
    if f is not None:
        br.boundary_R = evaluate_R(u, f, A, law, F, domain)
    return br


def vertical_crack(delta=1.0, x_crack=0.5, domain=None, opening=(1.0, 0.0)) -> CrackedDisplacement:
    """Unit square cut by the full vertical line x = x_crack; u = 0 left, delta * opening right."""
    dom = domain or Rectangle(0.0, 0.0, 1.0, 1.0)
    seg = CrackSegment((x_crack, dom.y0), (x_crack, dom.y1), (1.0, 0.0))
    right = Piece.constant(delta * np.asarray(opening, dtype=float),
                           region=lambda p: p[..., 0] > x_crack, name="right")
    left = Piece.constant((0.0, 0.0), name="left")
    return CrackedDisplacement(dom, [seg], [right, left])
