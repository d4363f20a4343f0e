"""
Planar domains and segment utilities.

Three domains are provided.  :class:`Rectangle` is the axis-aligned box used
by the sharp evaluator and the grid solver; it has corners and therefore no
well-defined normal projection.  :class:`RoundedRectangle` and :class:`Disk`
have C^1 boundaries with closed-form signed distance, projection and outward
normal, which the boundary-datum recovery needs.

Signed distance is negative inside.  Every boundary is a chain of pieces
(straight edges and circular arcs, counter-clockwise), each parametrized by
arclength.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, UnsupportedDomainError


# ---------------------------------------------------------------------------
# boundary pieces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EdgePiece:
    p0: tuple
    p1: tuple
    name: str = ""

    kind = "edge"

    @property
    def length(self):
        return float(np.hypot(self.p1[0] - self.p0[0], self.p1[1] - self.p0[1]))

    @property
    def tangent(self):
        d = np.subtract(self.p1, self.p0)
        return d / np.linalg.norm(d)

    def point(self, s):
        s = np.asarray(s, dtype=float)[..., None]
        return np.asarray(self.p0) + s * self.tangent

    def normal(self, s):
        tx, ty = self.tangent
        n = np.array([ty, -tx])  # outward for a counter-clockwise boundary
        return np.broadcast_to(n, np.shape(s) + (2,)).copy()

    def curvature(self, s):
        return np.zeros(np.shape(s))


@dataclass(frozen=True)
class ArcPiece:
    center: tuple
    radius: float
    angle0: float
    angle1: float
    name: str = ""

    kind = "arc"

    @property
    def length(self):
        return float(self.radius * (self.angle1 - self.angle0))

    def _angle(self, s):
        return self.angle0 + np.asarray(s, dtype=float) / self.radius

    def point(self, s):
        a = self._angle(s)
        return np.stack([self.center[0] + self.radius * np.cos(a),
                         self.center[1] + self.radius * np.sin(a)], axis=-1)

    def normal(self, s):
        a = self._angle(s)
        return np.stack([np.cos(a), np.sin(a)], axis=-1)

    def curvature(self, s):
        return np.full(np.shape(s), 1.0 / self.radius)


def gauss_legendre(n, a=0.0, b=1.0):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


def boundary_quadrature(pieces, n_panels=64, order=16):
    """Composite Gauss-Legendre nodes on a chain of pieces.

    Returns ``(points, weights, normals, piece_index, s)``.
    """
    pts, wts, nrm, idx, ss = [], [], [], [], []
    for k, pc in enumerate(pieces):
        edges = np.linspace(0.0, pc.length, n_panels + 1)
        for a, b in zip(edges[:-1], edges[1:]):
            s, w = gauss_legendre(order, a, b)
            pts.append(pc.point(s))
            nrm.append(pc.normal(s))
            wts.append(w)
            ss.append(s)
            idx.append(np.full(order, k))
    return (np.concatenate(pts), np.concatenate(wts), np.concatenate(nrm),
            np.concatenate(idx), np.concatenate(ss))


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Rectangle:
    x0: float = 0.0
    y0: float = 0.0
    x1: float = 1.0
    y1: float = 1.0

    is_c1 = False

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise InputError("rectangle must have positive width and height")

    @property
    def width(self):
        return self.x1 - self.x0

    @property
    def height(self):
        return self.y1 - self.y0

    @property
    def area(self):
        return self.width * self.height

    @property
    def bbox(self):
        return (self.x0, self.y0, self.x1, self.y1)

    def contains(self, p, tol=0.0):
        p = np.asarray(p, dtype=float)
        return ((p[..., 0] >= self.x0 - tol) & (p[..., 0] <= self.x1 + tol)
                & (p[..., 1] >= self.y0 - tol) & (p[..., 1] <= self.y1 + tol))

    def pieces(self):
        a, b, c, d = (self.x0, self.y0), (self.x1, self.y0), (self.x1, self.y1), (self.x0, self.y1)
        return [EdgePiece(a, b, "bottom"), EdgePiece(b, c, "right"),
                EdgePiece(c, d, "top"), EdgePiece(d, a, "left")]

    def chord(self, x, axis=0):
        """Section of the domain along a vertical line at abscissae ``x``
        (``axis=0``), or along a horizontal line at ordinates ``x`` (``axis=1``)."""
        x = np.asarray(x, dtype=float)
        lo, hi = (self.y0, self.y1) if axis == 0 else (self.x0, self.x1)
        return np.full(x.shape, lo), np.full(x.shape, hi)

    def project(self, p):
        raise UnsupportedDomainError(
            "a rectangle with sharp corners has no C^1 boundary; use RoundedRectangle")


@dataclass(frozen=True)
class RoundedRectangle:
    """Axis-aligned rectangle whose corners are quarter circles of radius ``r``."""

    x0: float = 0.0
    y0: float = 0.0
    x1: float = 1.0
    y1: float = 1.0
    r: float = 0.25

    is_c1 = True

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise InputError("rectangle must have positive width and height")
        if not 0 < self.r <= 0.5 * min(self.x1 - self.x0, self.y1 - self.y0):
            raise UnsupportedDomainError("corner radius must be in (0, min(width, height)/2]")

    @property
    def area(self):
        w, h = self.x1 - self.x0, self.y1 - self.y0
        return w * h - (4.0 - np.pi) * self.r ** 2

    @property
    def bbox(self):
        return (self.x0, self.y0, self.x1, self.y1)

    @property
    def reach(self):
        """Inner reach: the normal projection is unique on {-reach < d}."""
        return self.r

    def _centre_half(self):
        c = np.array([0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1)])
        half = np.array([0.5 * (self.x1 - self.x0), 0.5 * (self.y1 - self.y0)])
        return c, half

    def pieces(self):
        r = self.r
        x0, y0, x1, y1 = self.x0, self.y0, self.x1, self.y1
        out = []
        if x1 - x0 > 2 * r:
            out.append(EdgePiece((x0 + r, y0), (x1 - r, y0), "bottom"))
        out.append(ArcPiece((x1 - r, y0 + r), r, -0.5 * np.pi, 0.0, "corner_br"))
        if y1 - y0 > 2 * r:
            out.append(EdgePiece((x1, y0 + r), (x1, y1 - r), "right"))
        out.append(ArcPiece((x1 - r, y1 - r), r, 0.0, 0.5 * np.pi, "corner_tr"))
        if x1 - x0 > 2 * r:
            out.append(EdgePiece((x1 - r, y1), (x0 + r, y1), "top"))
        out.append(ArcPiece((x0 + r, y1 - r), r, 0.5 * np.pi, np.pi, "corner_tl"))
        if y1 - y0 > 2 * r:
            out.append(EdgePiece((x0, y1 - r), (x0, y0 + r), "left"))
        out.append(ArcPiece((x0 + r, y0 + r), r, np.pi, 1.5 * np.pi, "corner_bl"))
        return out

    def project(self, p):
        """Closest boundary point, outward normal there, signed distance and arc data.

        Returns ``(P, nu, d, on_arc, centre)``; ``centre`` is the arc centre for
        points projecting onto a corner (undefined otherwise).
        """
        p = np.asarray(p, dtype=float)
        c, half = self._centre_half()
        rel = p - c
        sgn = np.where(rel >= 0, 1.0, -1.0)
        q = np.abs(rel) - (half - self.r)
        on_arc = (q[..., 0] > 0) & (q[..., 1] > 0)
        centre = c + sgn * (half - self.r)
        # corner branch
        dc = p - centre
        rc = np.hypot(dc[..., 0], dc[..., 1])
        safe = np.where(rc > 0, rc, 1.0)[..., None]
        nu_arc = dc / safe
        # straight branch
        use_x = q[..., 0] >= q[..., 1]
        nu_edge = np.zeros_like(p)
        nu_edge[..., 0] = np.where(use_x, sgn[..., 0], 0.0)
        nu_edge[..., 1] = np.where(use_x, 0.0, sgn[..., 1])
        d_edge = np.where(use_x, q[..., 0], q[..., 1]) - self.r
        nu = np.where(on_arc[..., None], nu_arc, nu_edge)
        d = np.where(on_arc, rc - self.r, d_edge)
        P = p - d[..., None] * nu
        return P, nu, d, on_arc, centre

    def sdf(self, p):
        return self.project(p)[2]

    def contains(self, p, tol=0.0):
        return self.sdf(p) <= tol

    def chord(self, x, axis=0):
        x = np.asarray(x, dtype=float)
        r = self.r
        a0, a1, b0, b1 = ((self.x0, self.x1, self.y0, self.y1) if axis == 0
                          else (self.y0, self.y1, self.x0, self.x1))
        dx = np.maximum(np.maximum(a0 + r - x, x - (a1 - r)), 0.0)
        inset = r - np.sqrt(np.maximum(r * r - dx * dx, 0.0))
        return b0 + inset, b1 - inset

    def expanded(self, t):
        """The outer parallel set {d < t}, again a rounded rectangle."""
        return RoundedRectangle(self.x0 - t, self.y0 - t, self.x1 + t, self.y1 + t, self.r + t)


@dataclass(frozen=True)
class Disk:
    cx: float = 0.0
    cy: float = 0.0
    R: float = 1.0

    is_c1 = True

    def __post_init__(self):
        if not self.R > 0:
            raise InputError("disk radius must be positive")

    @property
    def area(self):
        return np.pi * self.R ** 2

    @property
    def bbox(self):
        return (self.cx - self.R, self.cy - self.R, self.cx + self.R, self.cy + self.R)

    @property
    def reach(self):
        return self.R

    def pieces(self):
        return [ArcPiece((self.cx, self.cy), self.R, 0.0, 2 * np.pi, "circle")]

    def project(self, p):
        p = np.asarray(p, dtype=float)
        centre = np.broadcast_to(np.array([self.cx, self.cy]), p.shape)
        dc = p - centre
        rc = np.hypot(dc[..., 0], dc[..., 1])
        nu = dc / np.where(rc > 0, rc, 1.0)[..., None]
        d = rc - self.R
        P = p - d[..., None] * nu
        return P, nu, d, np.ones(p.shape[:-1], dtype=bool), centre

    def sdf(self, p):
        return self.project(p)[2]

    def contains(self, p, tol=0.0):
        return self.sdf(p) <= tol

    def chord(self, x, axis=0):
        x = np.asarray(x, dtype=float)
        c, o = (self.cx, self.cy) if axis == 0 else (self.cy, self.cx)
        hh = np.sqrt(np.maximum(self.R ** 2 - (x - c) ** 2, 0.0))
        return o - hh, o + hh

    def expanded(self, t):
        return Disk(self.cx, self.cy, self.R + t)


# ---------------------------------------------------------------------------
# segments
# ---------------------------------------------------------------------------

def segment_coordinates(p, p0, p1):
    """Arclength ``s`` along the infinite line, signed offset ``t`` and the
    Euclidean distance to the closed segment, for points ``p``.

    The offset is positive on the side of the normal ``(-tau_y, tau_x)``
    rotated from the tangent ``tau = (p1 - p0) / |p1 - p0|``.
    """
    p = np.asarray(p, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    tau = np.subtract(p1, p0)
    ell = float(np.linalg.norm(tau))
    tau = tau / ell
    rel = p - p0
    s = rel @ tau
    t = rel @ np.array([-tau[1], tau[0]])
    sc = np.clip(s, 0.0, ell)
    dist = np.hypot(s - sc, t)
    return s, t, dist


def segment_distance(q0, q1, r0, r1):
    """Distance between closed segments [q0, q1] and [r0, r1]."""
    cands = [segment_coordinates(np.asarray(x), r0, r1)[2] for x in (q0, q1)]
    cands += [segment_coordinates(np.asarray(x), q0, q1)[2] for x in (r0, r1)]
    # proper intersection test
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    o1, o2 = orient(q0, q1, r0), orient(q0, q1, r1)
    o3, o4 = orient(r0, r1, q0), orient(r0, r1, q1)
    if o1 * o2 < 0 and o3 * o4 < 0:
        return 0.0
    return float(min(cands))
