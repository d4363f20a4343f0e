"""
Recovery sequences
==================

Explicit pairs (u_eps, v_eps) whose regularized energy converges to the sharp
energy of a :class:`~gammafrac.sharp.CrackedDisplacement`.

Around every sub-interval of a segment where the jump is non-zero a tube of
half-width ``theta(z) eps`` is cut out.  Inside it the displacement is the
affine interpolation across the tube of the values at its two faces and the
damage sits at ``alpha eps``; in a collar of width ``C eps`` the damage rises
affinely in the distance to the segment up to 1.  The collar factor

    C = max(1, (1 - alpha eps) sqrt(1 + eps^2 max|theta'|^2) * lip)

keeps ``|grad v_eps| <= 1/eps`` exactly (``lip`` is the Lipschitz constant of
an optional change of variables).

Energies are computed as the sharp bulk integral plus, per tube, the
integral of the difference between the regularized and the sharp
integrands, over tube-fitted coordinates.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from .errors import (DegenerateDamageLawError, InputError, ParameterError, TubeOverlapError,
                     UnsupportedDomainError)
from .geometry import gauss_legendre, segment_distance
from .material import DamageLaw, ElasticTensor, coefficients
from .potentials import PotentialSpec
from .sharp import (CrackedDisplacement, CrackSegment, Piece, bulk_integrals, evaluate_phi,
                    evaluate_R_parts, interval_rule, support_intervals, sym,
                    symmetric_tensor_jump)

CORE_POINTS = 32
COLLAR_POINTS = 16
S_PANELS = 32
S_ORDER = 8


# ---------------------------------------------------------------------------
# tube thickness
# ---------------------------------------------------------------------------

@dataclass
class ThetaProfile:
    """Per-segment tube half-width theta(s) (in units of eps) and its derivative.

    ``supports[k]`` lists the sub-intervals of segment k on which tubes are
    built; ``bound`` and ``dbound`` are sup-estimates of theta and |theta'|.
    """

    theta: list
    dtheta: list
    supports: list
    bound: list = field(default_factory=list)
    dbound: list = field(default_factory=list)
    scale: float = 1.0

    def __post_init__(self):
        if not self.bound:
            self.bound, self.dbound = [], []
            for k, iv in enumerate(self.supports):
                b, db = 0.0, 0.0
                for lo, hi in iv:
                    b = max(b, _sup(self.theta[k], lo, hi))
                    db = max(db, _sup(lambda s, k=k: np.abs(self.dtheta[k](s)), lo, hi))
                self.bound.append(b)
                self.dbound.append(db)

    def __call__(self, k, s):
        return self.theta[k](s)

    def scaled(self, c):
        """The profile c * theta."""
        return ThetaProfile([lambda s, f=f: c * f(s) for f in self.theta],
                            [lambda s, f=f: c * f(s) for f in self.dtheta],
                            self.supports, [c * b for b in self.bound],
                            [c * b for b in self.dbound], self.scale * c)

    @property
    def max_theta(self):
        return max(self.bound, default=0.0)

    @property
    def max_dtheta(self):
        return max(self.dbound, default=0.0)


def _sup(fun, lo, hi, n=2049):
    """Sampled maximum refined by a bounded scalar search around the best sample."""
    s = np.linspace(lo, hi, n)
    vals = np.asarray(fun(s), dtype=float)
    i = int(np.argmax(vals))
    best = float(vals[i])
    a, b = s[max(i - 1, 0)], s[min(i + 1, n - 1)]
    if b > a:
        res = optimize.minimize_scalar(lambda x: -float(fun(np.array([x]))[0]), bounds=(a, b),
                                       method="bounded", options={"xatol": 1e-12 * (1 + abs(b))})
        best = max(best, -float(res.fun))
    return best


def optimal_theta(u: CrackedDisplacement, A: ElasticTensor, law: DamageLaw,
                  scale: float = 1.0) -> ThetaProfile:
    """theta_bar(z) = sqrt(alpha) / (2 sqrt(psi(0))) * sqrt(A([u] (.) nu).([u] (.) nu)), times ``scale``."""
    if not law.psi0 > 0:
        raise DegenerateDamageLawError("psi(0) = 0: the optimal tube profile is undefined")
    coef = scale * math.sqrt(law.alpha) / (2.0 * math.sqrt(law.psi0))
    thetas, dthetas, supports = [], [], []
    for k, seg in enumerate(u.segments):
        nu = seg.normal
        tau = seg.tangent
        plus, minus = (u.pieces[i] for i in u.sides[k])

        def theta(s, k=k):
            M = u.sym_jump(k, s)
            return coef * np.sqrt(np.maximum(A.density(M), 0.0))

        def dtheta(s, k=k, plus=plus, minus=minus, nu=nu, tau=tau):
            s = np.asarray(s, dtype=float)
            p = u.segments[k].point(s)
            M = u.sym_jump(k, s)
            dJ = (plus.gradient(p) - minus.gradient(p)) @ tau
            dM = symmetric_tensor_jump(dJ, np.broadcast_to(nu, dJ.shape))
            q = np.maximum(A.density(M), 0.0)
            AM = A.apply(M)
            num = np.sum(AM * dM, axis=(-1, -2))
            with np.errstate(divide="ignore", invalid="ignore"):
                out = np.where(q > 0, num / np.sqrt(np.where(q > 0, q, 1.0)), 0.0)
            return coef * out

        thetas.append(theta)
        dthetas.append(dtheta)
        supports.append(u.jump_support(k))
    return ThetaProfile(thetas, dthetas, supports, scale=scale)


def constant_theta(u: CrackedDisplacement, value: float) -> ThetaProfile:
    """theta = value on each jump-support interval (used in tests and comparisons)."""
    n = len(u.segments)
    return ThetaProfile([lambda s, c=value: np.full(np.shape(s), c)] * n,
                        [lambda s: np.zeros(np.shape(s))] * n,
                        [u.jump_support(k) for k in range(n)])


# ---------------------------------------------------------------------------
# tubes
# ---------------------------------------------------------------------------

@dataclass
class Tube:
    """Tube around the sub-segment s in [s0, s1] of segment ``k``."""

    k: int
    s0: float
    s1: float
    origin: np.ndarray
    tau: np.ndarray
    nu: np.ndarray
    theta: Callable
    dtheta: Callable
    theta_max: float

    def local(self, p):
        """(s, t, clamped s, distance to the sub-segment)."""
        rel = np.asarray(p, dtype=float) - self.origin
        s = rel @ self.tau
        t = rel @ self.nu
        sc = np.clip(s, self.s0, self.s1)
        return s, t, sc, np.hypot(s - sc, t)

    def point(self, s):
        return self.origin + np.asarray(s, dtype=float)[..., None] * self.tau

    def width(self, eps, C):
        return (self.theta_max + C) * eps


def build_tubes(u: CrackedDisplacement, theta: ThetaProfile):
    tubes = []
    for k, seg in enumerate(u.segments):
        for lo, hi in theta.supports[k]:
            tubes.append(Tube(k, lo, hi, np.asarray(seg.p0, dtype=float), seg.tangent, seg.normal,
                              theta.theta[k], theta.dtheta[k], theta.bound[k]))
    return tubes


def collar_factor(eps, law, theta: ThetaProfile, lip=1.0):
    ae = law.alpha * eps
    return max(1.0, (1.0 - ae) * math.sqrt(1.0 + (eps * theta.max_dtheta) ** 2) * lip)


def _overlap_margin(tubes, eps, C):
    """Smallest gap between distinct tubes at this eps (inf with fewer than two tubes)."""
    gap = np.inf
    for i in range(len(tubes)):
        for j in range(i + 1, len(tubes)):
            a, b = tubes[i], tubes[j]
            d = segment_distance(a.point(a.s0), a.point(a.s1), b.point(b.s0), b.point(b.s1))
            gap = min(gap, d - a.width(eps, C) - b.width(eps, C))
    return gap


def eps_max(u: CrackedDisplacement, theta: ThetaProfile, law: DamageLaw, lip=1.0):
    """Largest eps for which the tubes of distinct jump pieces stay disjoint (and alpha eps < 1)."""
    tubes = build_tubes(u, theta)
    top = 1.0 / law.alpha
    if len(tubes) < 2:
        return top

    def gap(e):
        return _overlap_margin(tubes, e, collar_factor(e, law, theta, lip))

    if gap(top * (1 - 1e-12)) > 0:
        return top
    lo, hi = 0.0, top
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0:
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------------
# the recovery pair
# ---------------------------------------------------------------------------

class Recovery:
    """The pair (u_eps, v_eps) built on a cracked displacement.

    Parameters
    ----------
    u : CrackedDisplacement
    theta : ThetaProfile
    eps : float
    law : DamageLaw
    domain : optional
        Domain used to mask quadrature points (defaults to ``u.domain``).
    lip : float
        Extra Lipschitz factor folded into the collar width.
    """

    def __init__(self, u: CrackedDisplacement, theta: ThetaProfile, eps: float, law: DamageLaw,
                 domain=None, lip: float = 1.0):
        if not eps > 0:
            raise ParameterError("eps must be positive")
        if not law.alpha * eps < 1:
            raise ParameterError(f"alpha * eps = {law.alpha * eps} must be < 1")
        self.u = u
        self.theta = theta
        self.eps = float(eps)
        self.law = law
        self.domain = u.domain if domain is None else domain
        self.ae = law.alpha * eps
        self.C = collar_factor(eps, law, theta, lip)
        self.tubes = build_tubes(u, theta)
        if _overlap_margin(self.tubes, eps, self.C) <= 0:
            raise TubeOverlapError(
                f"tubes overlap at eps={eps}; eps_max={eps_max(u, theta, law, lip):.6g}")

    # damage ------------------------------------------------------------------
    def _v_tube(self, tube, p):
        _, _, sc, dist = tube.local(p)
        r = dist - tube.theta(sc) * self.eps
        ramp = np.clip(r / (self.C * self.eps), 0.0, 1.0)
        return self.ae + (1.0 - self.ae) * ramp

    def v(self, p):
        p = np.asarray(p, dtype=float)
        out = np.ones(p.shape[:-1])
        for tube in self.tubes:
            np.minimum(out, self._v_tube(tube, p), out=out)
        return out

    # displacement -------------------------------------------------------------
    def _faces(self, tube, s):
        """Side pieces, face points and face values at arclength s."""
        plus, minus = (self.u.pieces[i] for i in self.u.sides[tube.k])
        h = tube.theta(s) * self.eps
        base = tube.point(s)
        yp = base + h[..., None] * tube.nu
        ym = base - h[..., None] * tube.nu
        return plus, minus, h, yp, ym

    def _core_mask(self, tube, p):
        s, t, _, _ = tube.local(p)
        inside = (s >= tube.s0) & (s <= tube.s1)
        h = np.where(inside, tube.theta(np.clip(s, tube.s0, tube.s1)) * self.eps, 0.0)
        return inside & (np.abs(t) < h) & (h > 0), s, t

    def _core_value(self, tube, s, t):
        plus, minus, h, yp, ym = self._faces(tube, s)
        up, um = plus(yp), minus(ym)
        a = 0.5 * (up + um)
        b = (up - um) / (2.0 * h)[..., None]
        return a + t[..., None] * b

    def _core_grad(self, tube, s, t):
        plus, minus, h, yp, ym = self._faces(tube, s)
        eps = self.eps
        th = h / eps
        dth = tube.dtheta(s)
        up, um = plus(yp), minus(ym)
        dp = plus.gradient(yp)
        dm = minus.gradient(ym)
        dir_p = tube.tau + (eps * dth)[..., None] * tube.nu
        dir_m = tube.tau - (eps * dth)[..., None] * tube.nu
        dsp = np.einsum("...ij,...j->...i", dp, dir_p)
        dsm = np.einsum("...ij,...j->...i", dm, dir_m)
        S = up - um
        dS = dsp - dsm
        b = S / (2.0 * h)[..., None]
        db = dS / (2.0 * h)[..., None] - S * (dth / (2.0 * th * th * eps))[..., None]
        ds = 0.5 * (dsp + dsm) + t[..., None] * db
        return ds[..., :, None] * tube.tau + b[..., :, None] * tube.nu

    def u_eps(self, p):
        p = np.asarray(p, dtype=float)
        out = self.u.value(p)
        for tube in self.tubes:
            m, s, t = self._core_mask(tube, p)
            if np.any(m):
                out[m] = self._core_value(tube, s[m], t[m])
        return out

    def grad_u_eps(self, p):
        p = np.asarray(p, dtype=float)
        out = self.u.gradient(p)
        for tube in self.tubes:
            m, s, t = self._core_mask(tube, p)
            if np.any(m):
                out[m] = self._core_grad(tube, s[m], t[m])
        return out

    # quadrature ---------------------------------------------------------------
    def tube_rule(self, tube, s_panels=S_PANELS, s_order=S_ORDER, n_core=CORE_POINTS,
                  n_collar=COLLAR_POINTS, n_angle=32):
        """Points of a tube-fitted rule with their weights, region and side labels.

        ``region`` is 0 in the core, 1 in the side collars and 2 in the end caps;
        ``side`` is +1/-1 on the two sides of the segment and 0 in the caps.
        """
        eps, C = self.eps, self.C
        edges = np.linspace(tube.s0, tube.s1, s_panels + 1)
        s_nodes, s_w = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            x, w = gauss_legendre(s_order, a, b)
            s_nodes.append(x)
            s_w.append(w)
        s_nodes, s_w = np.concatenate(s_nodes), np.concatenate(s_w)
        h = tube.theta(s_nodes) * eps
        gc, wc = np.polynomial.legendre.leggauss(n_core)
        gl, wl = np.polynomial.legendre.leggauss(n_collar)
        P, W, R, S = [], [], [], []
        # core: t in (-h, 0) and (0, h), split so the sharp traces stay smooth
        for sgn in (1, -1):
            t = sgn * 0.5 * h[:, None] * (gc[None, :] + 1.0)
            wt = 0.5 * h[:, None] * wc[None, :]
            P.append(tube.point(s_nodes)[:, None, :] + t[..., None] * tube.nu)
            W.append(s_w[:, None] * wt)
            R.append(np.zeros(t.shape, dtype=int))
            S.append(np.full(t.shape, sgn))
        # collars: |t| in (h, h + C eps)
        for sgn in (1, -1):
            t = sgn * (h[:, None] + 0.5 * C * eps * (gl[None, :] + 1.0))
            wt = np.broadcast_to(0.5 * C * eps * wl[None, :], t.shape)
            P.append(tube.point(s_nodes)[:, None, :] + t[..., None] * tube.nu)
            W.append(s_w[:, None] * wt)
            R.append(np.ones(t.shape, dtype=int))
            S.append(np.full(t.shape, sgn))
        # caps: half disks beyond the ends
        ga, wa = np.polynomial.legendre.leggauss(n_angle)
        phi = 0.5 * np.pi * ga
        wphi = 0.5 * np.pi * wa
        for s_end, direction in ((tube.s0, -tube.tau), (tube.s1, tube.tau)):
            he = float(tube.theta(np.array([s_end]))[0]) * eps
            centre = tube.point(s_end)
            radial = []
            if he > 0:
                radial.append((0.0, he))
            radial.append((he, he + C * eps))
            for r0, r1 in radial:
                rr, wr = gauss_legendre(n_collar, r0, r1)
                dirs = (np.cos(phi)[:, None] * direction + np.sin(phi)[:, None] * tube.nu)
                pts = centre + rr[None, :, None] * dirs[:, None, :]
                P.append(pts)
                W.append(wphi[:, None] * wr[None, :] * rr[None, :])
                R.append(np.full(pts.shape[:-1], 2))
                S.append(np.zeros(pts.shape[:-1], dtype=int))
        pts = np.concatenate([p.reshape(-1, 2) for p in P])
        w = np.concatenate([x.ravel() for x in W])
        region = np.concatenate([x.ravel() for x in R])
        side = np.concatenate([x.ravel() for x in S])
        w = np.where(self.domain.contains(pts), w, 0.0)
        return pts, w, region, side

    def tube_fields(self, tube, pts, region, side):
        """(grad u_eps, sharp grad u, v_eps, u_eps - u) at tube rule points."""
        u = self.u
        plus, minus = u.sides[tube.k]
        idx = np.where(side > 0, plus, np.where(side < 0, minus, u.piece_index(pts)))
        g0 = u.gradient(pts, idx)
        u0 = u.value(pts, idx)
        g = g0.copy()
        ue = u0.copy()
        core = region == 0
        if np.any(core):
            s, t, _, _ = tube.local(pts[core])
            g[core] = self._core_grad(tube, s, t)
            ue[core] = self._core_value(tube, s, t)
        v = self._v_tube(tube, pts)
        return g, g0, v, ue - u0


# ---------------------------------------------------------------------------
# energies
# ---------------------------------------------------------------------------

@dataclass
class RecoveryEnergy:
    """F_eps of a recovery pair, split as bulk (v A e.e), damage (psi(v)/eps) and potential."""

    eps: float
    bulk: float
    damage: float
    potential: float

    @property
    def total(self) -> float:
        return float(math.fsum([self.bulk, self.damage, self.potential]))

    @property
    def W_eps(self) -> float:
        return self.bulk + self.damage


class _Identity:
    def inverse(self, y):
        return y

    def jacobian(self, x):
        return None


def _pulled_integrand(x, grad, v, DPhi, A, law, F, eps):
    """Energy densities per unit y-area: (bulk, damage, potential)."""
    if DPhi is None:
        E = sym(grad)
        jac = np.ones(grad.shape[:-2])
    else:
        E = sym(grad @ DPhi)
        jac = np.linalg.det(DPhi)
    bulk = v * A.density(E)
    dam = law(v) / eps
    pot = np.zeros_like(bulk) if F.is_zero else F(x, E, v)
    return bulk / jac, dam / jac, pot / jac


def tube_corrections(rec: Recovery, A, law, F, pull=None):
    """Sum over tubes of int (regularized - sharp) integrands, split in three parts."""
    pull = pull or _Identity()
    out = np.zeros(3)
    for tube in rec.tubes:
        pts, w, region, side = rec.tube_rule(tube)
        keep = w != 0
        pts, w, region, side = pts[keep], w[keep], region[keep], side[keep]
        if pts.size == 0:
            continue
        g, g0, v, _ = rec.tube_fields(tube, pts, region, side)
        x = pull.inverse(pts)
        DPhi = pull.jacobian(x)
        b1, d1, p1 = _pulled_integrand(x, g, v, DPhi, A, law, F, rec.eps)
        b0, d0, p0 = _pulled_integrand(x, g0, np.ones_like(v), DPhi, A, law, F, rec.eps)
        out += [np.sum(w * (b1 - b0)), np.sum(w * (d1 - d0)), np.sum(w * (p1 - p0))]
    return out


def evaluate_F_eps(rec: Recovery, A: ElasticTensor, law: DamageLaw, F: PotentialSpec,
                   base=None) -> RecoveryEnergy:
    """F_eps(u_eps, v_eps) on the domain of ``rec.u``.

    ``base`` may pass precomputed sharp bulk integrals ``(elastic, potential)``.
    """
    if base is None:
        base = bulk_integrals(rec.u, A, F)
    corr = tube_corrections(rec, A, law, F)
    return RecoveryEnergy(rec.eps, float(base[0] + corr[0]), float(corr[1]),
                          float(base[1] + corr[2]))


def l2_error(rec: Recovery):
    """||u_eps - u||_{L^2}; the two differ only inside the tube cores."""
    tot = 0.0
    for tube in rec.tubes:
        pts, w, region, side = rec.tube_rule(tube)
        core = (region == 0) & (w != 0)
        if not np.any(core):
            continue
        _, _, _, diff = rec.tube_fields(tube, pts[core], region[core], side[core])
        tot += float(np.sum(w[core] * np.sum(diff ** 2, axis=-1)))
    return math.sqrt(tot)


def sample_points(rec: Recovery, n_grid=101, per_tube=4000, seed=0):
    """Feasibility sample: a grid of the domain plus points from each tube rule."""
    x0, y0, x1, y1 = rec.domain.bbox
    gx, gy = np.meshgrid(np.linspace(x0, x1, n_grid), np.linspace(y0, y1, n_grid))
    pts = [np.stack([gx.ravel(), gy.ravel()], axis=-1)]
    rng = np.random.default_rng(seed)
    for tube in rec.tubes:
        p, w, _, _ = rec.tube_rule(tube)
        p = p[w != 0]
        if len(p) > per_tube:
            p = p[rng.choice(len(p), per_tube, replace=False)]
        pts.append(p)
        # points exactly on the segment carry v = alpha eps
        s = np.linspace(tube.s0, tube.s1, 65)
        pts.append(tube.point(s))
    pts = np.concatenate(pts)
    return pts[rec.domain.contains(pts)]


@dataclass
class Feasibility:
    min_v: float
    max_v: float
    max_grad_v_times_eps: float
    linf_u_eps: float


def feasibility(rec: Recovery, pts=None, h_rel=1e-5) -> Feasibility:
    """Sampled bounds of v_eps, numeric |grad v_eps| * eps and ||u_eps||_inf."""
    pts = sample_points(rec) if pts is None else pts
    v = rec.v(pts)
    h = h_rel * rec.eps
    gx = (rec.v(pts + [h, 0.0]) - rec.v(pts - [h, 0.0])) / (2 * h)
    gy = (rec.v(pts + [0.0, h]) - rec.v(pts - [0.0, h])) / (2 * h)
    ue = rec.u_eps(pts)
    return Feasibility(float(v.min()), float(v.max()), float(np.hypot(gx, gy).max() * rec.eps),
                       float(np.abs(ue).max()))


# ---------------------------------------------------------------------------
# eps ladders
# ---------------------------------------------------------------------------

def extrapolate(eps, values):
    """Richardson extrapolation of the last three values with a fitted order.

    Returns ``(limit, order)``; the order solves
    (E1 - E2) / (E2 - E3) = (e1^p - e2^p) / (e2^p - e3^p) when the
    differences have a consistent sign, and defaults to 1 otherwise.
    """
    e = np.asarray(eps, dtype=float)[-3:]
    E = np.asarray(values, dtype=float)[-3:]
    if len(e) < 2:
        return float(E[-1]), float("nan")
    if len(e) == 2:
        p = 1.0
    else:
        d1, d2 = E[0] - E[1], E[1] - E[2]
        p = 1.0
        if d1 * d2 > 0 and d2 != 0:
            ratio = d1 / d2

            def f(q):
                return (e[0] ** q - e[1] ** q) / (e[1] ** q - e[2] ** q) - ratio

            try:
                p = optimize.brentq(f, 0.05, 8.0, xtol=1e-12)
            except ValueError:
                p = 1.0
    e1, e2 = e[-2], e[-1]
    c = (E[-2] - E[-1]) / (e1 ** p - e2 ** p)
    return float(E[-1] - c * e2 ** p), float(p)


LADDER_COLUMNS = ("eps", "total_Feps", "total_sharp", "gap", "bulk_gap", "damage_gap",
                  "potential_gap", "linf_u", "min_v", "max_grad_v_times_eps")


@dataclass
class LadderRow:
    eps: float
    total_Feps: float
    total_sharp: float
    gap: float
    bulk_gap: float
    damage_gap: float
    potential_gap: float
    linf_u: float
    min_v: float
    max_grad_v_times_eps: float
    max_v: float = 1.0
    l2_error: float = 0.0


@dataclass
class ConvergenceTable:
    rows: list
    sharp_total: float
    limit_target: float
    extrapolated: float = float("nan")
    order: float = float("nan")
    linf_u: float = float("nan")

    @property
    def extrapolated_gap(self):
        return abs(self.extrapolated - self.sharp_total)

    def gaps(self):
        return [r.gap for r in self.rows]

    @property
    def monotone_tail(self):
        g = self.gaps()[-3:]
        return all(b < a for a, b in zip(g, g[1:]))

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(LADDER_COLUMNS)
        for r in self.rows:
            w.writerow([repr(float(getattr(r, c))) for c in LADDER_COLUMNS])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


def _surface_targets(u, theta: ThetaProfile, A, law):
    """Limits of the bulk and damage parts for a given tube profile.

    The core carries alpha q / (2 theta) of elastic energy and 2 theta psi(0) of
    damage per unit length (q = A([u] (.) nu).([u] (.) nu)); the collars carry b.
    """
    _, b = coefficients(law)
    bulk = dam = 0.0
    for k, seg in enumerate(u.segments):
        s, w = interval_rule(theta.supports[k])
        if s.size == 0:
            continue
        q = A.density(u.sym_jump(k, s))
        th = theta.theta[k](s)
        with np.errstate(divide="ignore", invalid="ignore"):
            el = np.where(th > 0, law.alpha * q / (2 * th), 0.0)
        bulk += float(np.sum(w * el))
        dam += float(np.sum(w * 2 * th * law.psi0)) + b * sum(hi - lo for lo, hi in theta.supports[k])
    return bulk, dam


def gamma_ladder(u: CrackedDisplacement, A: ElasticTensor, law: DamageLaw, F: PotentialSpec,
                 eps_list, theta: Optional[ThetaProfile] = None, theta_scale=1.0,
                 check_feasibility=True) -> ConvergenceTable:
    """Run the recovery construction along a decreasing eps ladder."""
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ParameterError("eps ladder must be strictly decreasing")
    if theta is None:
        theta = optimal_theta(u, A, law, theta_scale) if u.segments else ThetaProfile([], [], [])
    sharp = evaluate_phi(u, A, law, F)
    base = (sharp.bulk_elastic, sharp.bulk_potential)
    tb, td = _surface_targets(u, theta, A, law)
    target_bulk = sharp.bulk_elastic + tb
    target_dam = td
    target_pot = sharp.bulk_potential + sharp.surface_Finf
    linf = u.linf()
    rows = []
    for eps in eps_list:
        rec = Recovery(u, theta, eps, law)
        en = evaluate_F_eps(rec, A, law, F, base)
        if check_feasibility:
            fz = feasibility(rec)
            l2 = l2_error(rec)
        else:
            fz = Feasibility(float("nan"), float("nan"), float("nan"), float("nan"))
            l2 = float("nan")
        rows.append(LadderRow(eps, en.total, sharp.total, abs(en.total - sharp.total),
                              en.bulk - target_bulk, en.damage - target_dam,
                              en.potential - target_pot, fz.linf_u_eps, fz.min_v,
                              fz.max_grad_v_times_eps, fz.max_v, l2))
    lim, p = extrapolate(eps_list, [r.total_Feps for r in rows])
    return ConvergenceTable(rows, sharp.total, target_bulk + target_dam + target_pot, lim, p, linf)


# ---------------------------------------------------------------------------
# boundary datum
# ---------------------------------------------------------------------------

class BoundaryDiffeomorphism:
    """The map x -> x + nu(P x) (delta + d(x)) / delta * eps L on {-delta < d}, identity deeper.

    It pushes the boundary of the domain out by ``eps L`` along the normal and
    leaves everything farther than ``delta`` inside unchanged.
    """

    def __init__(self, domain, eps, L, delta):
        if not getattr(domain, "is_c1", False):
            raise UnsupportedDomainError("the boundary diffeomorphism needs a C^1 boundary")
        self.domain = domain
        self.eps, self.L, self.delta = float(eps), float(L), float(delta)
        self.shift = self.eps * self.L
        if not 0 < self.shift < self.delta:
            raise ParameterError(f"need 0 < eps L = {self.shift} < delta = {self.delta}")
        if not self.delta < domain.reach:
            raise ParameterError(f"delta = {delta} must be below the inner reach {domain.reach}")

    @property
    def lipschitz(self):
        """Operator-norm bound of the Jacobian: 1 + eps L / delta."""
        return 1.0 + self.shift / self.delta

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        _, nu, d, _, _ = self.domain.project(x)
        m = d > -self.delta
        fac = np.where(m, (self.delta + d) / self.delta, 0.0) * self.shift
        return x + fac[..., None] * nu

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        _, nu, d, _, _ = self.domain.project(y)
        m = d > -self.delta
        fac = np.where(m, (self.delta + d) / (self.delta + self.shift), 0.0) * self.shift
        return y - fac[..., None] * nu

    def jacobian(self, x):
        """grad Phi = I + (eps L / delta) [(delta + d) grad nu + nu (x) nu] inside the band."""
        x = np.asarray(x, dtype=float)
        _, nu, d, on_arc, centre = self.domain.project(x)
        rho = np.hypot(*(x - centre).T) if x.ndim == 2 else np.linalg.norm(x - centre, axis=-1)
        I = np.eye(2)
        nn = nu[..., :, None] * nu[..., None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            curv = np.where(on_arc, 1.0 / np.where(rho > 0, rho, 1.0), 0.0)
        gnu = curv[..., None, None] * (I - nn)
        m = (d > -self.delta)[..., None, None]
        inc = (self.shift / self.delta) * ((self.delta + d)[..., None, None] * gnu + nn)
        return I + np.where(m, inc, 0.0)

    def inverse_jacobian(self, y):
        return np.linalg.inv(self.jacobian(self.inverse(y)))


def boundary_diffeomorphism(domain, eps, L, delta) -> BoundaryDiffeomorphism:
    return BoundaryDiffeomorphism(domain, eps, L, delta)


def _exact_projection(domain, p):
    """Boundary projection that returns boundary points unchanged, bit for bit."""
    P, nu, d, on_arc, centre = domain.project(p)
    P = np.where((np.abs(d) < 1e-14)[..., None], p, P)
    return P, nu, d, on_arc, centre


def extension_piece(f: Piece, domain, name="datum") -> Piece:
    """The datum extended by f o P, with grad P = (I - nu nu) / (1 + kappa d)."""

    def value(y):
        return f(_exact_projection(domain, y)[0])

    def grad(y):
        P, nu, d, on_arc, centre = domain.project(y)
        r = np.linalg.norm(P - centre, axis=-1)
        kappa = np.where(on_arc, 1.0 / np.where(r > 0, r, 1.0), 0.0)
        nn = nu[..., :, None] * nu[..., None, :]
        GP = (np.eye(2) - nn) / (1.0 + kappa * d)[..., None, None]
        return f.gradient(P) @ GP

    return Piece(value, grad, lambda y: domain.sdf(y) > 0, name)


def mismatch_segments(u: CrackedDisplacement, f: Piece, tol=1e-9):
    """Straight boundary sub-arcs where the trace of u differs from f, as crack segments."""
    segs = []
    for pc in u.domain.pieces():
        def gap(s, pc=pc):
            p, n = pc.point(s), pc.normal(s)
            idx = u.piece_index(p - 1e-9 * n)
            return np.linalg.norm(f(p) - u.value(p, idx), axis=-1) > tol

        iv = support_intervals(gap, pc.length)
        if iv and pc.kind != "edge":
            raise UnsupportedDomainError(
                f"trace mismatch on the curved boundary piece {pc.name!r}; only straight edges are supported")
        for lo, hi in iv:
            n = pc.normal(np.array(0.5 * (lo + hi)))
            segs.append(CrackSegment(tuple(pc.point(lo)), tuple(pc.point(hi)), tuple(n)))
    return segs


def band_rule(domain, d0, d1, panels=16, order=8, n_d=16):
    """Boundary-fitted rule on {d0 < d < d1}: y = P(sigma) + d nu(sigma), weight (1 + kappa d)."""
    P, W = [], []
    gd, wd = gauss_legendre(n_d, d0, d1)
    for pc in domain.pieces():
        edges = np.linspace(0.0, pc.length, panels + 1)
        for a, b in zip(edges[:-1], edges[1:]):
            s, ws = gauss_legendre(order, a, b)
            base, n = pc.point(s), pc.normal(s)
            kappa = pc.curvature(s)
            pts = base[:, None, :] + gd[None, :, None] * n[:, None, :]
            P.append(pts.reshape(-1, 2))
            W.append((ws[:, None] * wd[None, :] * (1.0 + kappa[:, None] * gd[None, :])).ravel())
    return np.concatenate(P), np.concatenate(W)


class DatumRecovery:
    """Recovery pair with u_eps = f and v_eps = 1 on the boundary.

    The displacement is extended by ``f o P`` across the boundary, the plain
    recovery is built on the enlarged domain (the boundary mismatch becomes a
    crack on the boundary), and the result is pulled back through the
    boundary diffeomorphism.
    """

    def __init__(self, u: CrackedDisplacement, f: Piece, eps: float, A: ElasticTensor,
                 law: DamageLaw, delta: float, L: Optional[float] = None, theta_scale=1.0):
        dom = u.domain
        if not getattr(dom, "is_c1", False):
            raise UnsupportedDomainError("boundary-datum recovery needs a disk or rounded rectangle")
        self.u, self.f, self.A, self.law = u, f, A, law
        self.eps, self.delta = float(eps), float(delta)
        inner = dom.expanded(-self.delta)
        for seg in u.segments:
            for q in (seg.p0, seg.p1):
                if not bool(inner.contains(np.asarray(q))):
                    raise InputError("interior cracks must stay farther than delta from the boundary")
        self.inner = inner
        segs = mismatch_segments(u, f)
        ext = extension_piece(f, dom)
        pieces = [ext] + list(u.pieces)
        big = dom.expanded(self.delta)
        uhat = CrackedDisplacement.__new__(CrackedDisplacement)
        uhat.domain, uhat.segments, uhat.pieces, uhat._linf = big, list(u.segments) + segs, pieces, None
        # the minus side of a boundary segment is the interior piece of u next to it
        full_sides = []
        for k, seg in enumerate(uhat.segments):
            if k < len(u.segments):
                full_sides.append((u.sides[k][0] + 1, u.sides[k][1] + 1))
            else:
                mid = seg.point(0.5 * seg.length)
                full_sides.append((0, int(u.piece_index(mid - 1e-9 * seg.normal)) + 1))
        uhat.sides = full_sides
        self.uhat = uhat
        self.boundary_segments = segs
        self.theta = optimal_theta(uhat, A, law, theta_scale)
        k = math.sqrt(1.0 + (eps * self.theta.max_dtheta) ** 2)
        self.L = 2.0 * (self.theta.max_theta + 1.0) * k if L is None else float(L)
        self.phi = BoundaryDiffeomorphism(dom, eps, self.L, delta)
        self.outer = dom.expanded(self.phi.shift)
        self.rec = Recovery(uhat, self.theta, eps, law, domain=self.outer, lip=self.phi.lipschitz)
        for tube in self.rec.tubes:
            if tube.width(eps, self.rec.C) >= self.phi.shift:
                raise ParameterError("tube wider than the boundary shift eps L; increase L")

    # fields on the original domain -----------------------------------------
    def v(self, x):
        return self.rec.v(self.phi.forward(x))

    def u_eps(self, x):
        x = np.asarray(x, dtype=float)
        y = self.phi.forward(x)
        out = self.rec.u_eps(y)
        # outside the original domain and away from tube cores u_hat = f o P,
        # and P(Phi(x)) = P(x): evaluate it from x so boundary values are exact
        free = self.u.domain.sdf(y) > 0
        for tube in self.rec.tubes:
            free &= ~self.rec._core_mask(tube, y)[0]
        if np.any(free):
            out[free] = self.f(_exact_projection(self.u.domain, x[free])[0])
        return out

    def grad_u_eps(self, x):
        x = np.asarray(x, dtype=float)
        return self.rec.grad_u_eps(self.phi.forward(x)) @ self.phi.jacobian(x)

    # energy -------------------------------------------------------------------
    def energy(self, F: PotentialSpec) -> RecoveryEnergy:
        A, law, eps = self.A, self.law, self.eps
        u = self.u
        inner_u = CrackedDisplacement.__new__(CrackedDisplacement)
        inner_u.domain, inner_u.segments, inner_u.pieces = self.inner, u.segments, u.pieces
        inner_u.sides, inner_u._linf = u.sides, None
        el, pot = bulk_integrals(inner_u, A, F)
        parts = np.array([el, 0.0, pot])
        dom = u.domain
        for d0, d1, idx in ((-self.delta, 0.0, None), (0.0, self.phi.shift, 0)):
            y, w = band_rule(dom, d0, d1)
            if idx is None:
                pi = u.piece_index(y) + 1
            else:
                pi = np.zeros(len(y), dtype=int)
            g = self.uhat.gradient(y, pi)
            x = self.phi.inverse(y)
            b, dmg, p = _pulled_integrand(x, g, np.ones(len(y)), self.phi.jacobian(x), A, law, F, eps)
            parts += [np.sum(w * b), np.sum(w * dmg), np.sum(w * p)]
        parts += tube_corrections(self.rec, A, law, F, self.phi)
        return RecoveryEnergy(eps, float(parts[0]), float(parts[1]), float(parts[2]))


def build_recovery(u: CrackedDisplacement, theta: ThetaProfile, eps: float, law: DamageLaw) -> Recovery:
    """The recovery pair (u_eps, v_eps) as evaluable closures."""
    return Recovery(u, theta, eps, law)


def build_recovery_with_datum(u, f, eps, A, law, delta, L=None, theta_scale=1.0) -> DatumRecovery:
    return DatumRecovery(u, f, eps, A, law, delta, L, theta_scale)


def datum_ladder(u, f, A, law, F, eps_list, delta, theta_scale=1.0):
    """eps ladder for the datum recovery; rows carry energies and boundary checks."""
    sharp = evaluate_phi(u, A, law, F)
    R = evaluate_R_parts(u, f, A, law, F)
    reference = sharp.total + math.fsum(R)
    rows = []
    for eps in eps_list:
        dr = DatumRecovery(u, f, eps, A, law, delta, theta_scale=theta_scale)
        en = dr.energy(F)
        rows.append((eps, en, dr))
    lim, p = extrapolate([r[0] for r in rows], [r[1].total for r in rows])
    return rows, reference, lim, p
