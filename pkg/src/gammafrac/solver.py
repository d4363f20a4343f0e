"""
Grid solver
===========

Bilinear (Q1) discretization of

    F_eps(u, v) = int v A e(u).e(u) + psi(v) / eps + F(x, e(u), v)

on a uniform square grid with Dirichlet data ``u = f, v = 1`` on the
boundary, minimized by alternating between u and v.  Both sub-steps are only
accepted when the total energy does not increase, so the energy trace is
monotone by construction.

The damage constraint ``|grad v| <= 1/eps`` is enforced on the bilinear
gradient at cell centres.  Restoration bounds every difference between the
eight neighbours of a node by ``h / eps``: with the diagonal differences
bounded the centre gradient satisfies |dx v| + |dy v| <= 1/eps, which
implies the Euclidean bound.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from . import kernels
from .errors import InfeasibleStateError, InputError, SolverBreakdownError
from .material import DamageLaw, ElasticTensor, energy_bound_constant, from_mandel
from .potentials import PotentialSpec

log = logging.getLogger(__name__)

_R2 = 1.0 / math.sqrt(2.0)
# Mandel basis as full matrices
_MANDEL_BASIS = np.array([[[1.0, 0.0], [0.0, 0.0]],
                          [[0.0, 0.0], [0.0, 1.0]],
                          [[0.0, _R2], [_R2, 0.0]]])


@dataclass(frozen=True)
class Grid:
    x0: float
    y0: float
    x1: float
    y1: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise InputError("grid needs at least 3 nodes per direction")
        hx = (self.x1 - self.x0) / (self.nx - 1)
        hy = (self.y1 - self.y0) / (self.ny - 1)
        if abs(hx - hy) > 1e-12 * max(hx, hy):
            raise InputError(f"cells must be square (hx={hx}, hy={hy})")

    @classmethod
    def square(cls, n, x0=0.0, y0=0.0, x1=1.0, y1=1.0):
        return cls(x0, y0, x1, y1, n, n)

    @property
    def h(self):
        return (self.x1 - self.x0) / (self.nx - 1)

    @property
    def area(self):
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def nodes(self):
        """Node coordinates (ny, nx, 2)."""
        X, Y = np.meshgrid(np.linspace(self.x0, self.x1, self.nx),
                           np.linspace(self.y0, self.y1, self.ny))
        return np.stack([X, Y], axis=-1)

    def gauss_points(self):
        """Gauss point coordinates (ny-1, nx-1, 4, 2)."""
        n = self.nodes()
        centre = 0.25 * (n[:-1, :-1] + n[:-1, 1:] + n[1:, 1:] + n[1:, :-1])
        off = 0.5 * self.h * np.stack([kernels.GAUSS_XI, kernels.GAUSS_ETA], axis=-1)
        return centre[:, :, None, :] + off

    def boundary_mask(self):
        m = np.zeros((self.ny, self.nx), dtype=bool)
        m[0, :] = m[-1, :] = m[:, 0] = m[:, -1] = True
        return m

    def element_dofs(self):
        """Global dof indices (ny-1, nx-1, 8) in the kernel dof order."""
        j, i = np.meshgrid(np.arange(self.ny - 1), np.arange(self.nx - 1), indexing="ij")
        nodes = np.stack([j * self.nx + i, j * self.nx + i + 1,
                          (j + 1) * self.nx + i + 1, (j + 1) * self.nx + i], axis=-1)
        return np.stack([2 * nodes, 2 * nodes + 1], axis=-1).reshape(self.ny - 1, self.nx - 1, 8)


@dataclass
class DiscreteState:
    """Nodal displacement ``u`` (ny, nx, 2) and damage ``v`` (ny, nx)."""

    grid: Grid
    u: np.ndarray
    v: np.ndarray
    eps: float
    d: float = np.inf

    def copy(self):
        return DiscreteState(self.grid, self.u.copy(), self.v.copy(), self.eps, self.d)


@dataclass
class EnergyReport:
    bulk: float
    damage: float
    potential: float
    C_bound: float = float("nan")

    @property
    def W_eps(self):
        return self.bulk + self.damage

    @property
    def F_eps(self):
        # same summation as Discretization.energy, so accept tests and traces agree
        return math.fsum((self.bulk, self.damage, self.potential))

    @property
    def bound_holds(self):
        """W_eps <= C (F_eps + 1), with a relative slack for rounding."""
        if not np.isfinite(self.C_bound):
            return True
        rhs = self.C_bound * (self.F_eps + 1.0)
        return self.W_eps <= rhs + 1e-12 * max(1.0, abs(rhs))


TRACE_COLUMNS = ("iter", "bulk", "damage", "potential", "F_eps", "W_eps", "C_bound")


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

class Discretization:
    """Per-grid data reused across energy evaluations and solves."""

    def __init__(self, grid: Grid, A: ElasticTensor, law: DamageLaw, F: PotentialSpec, eps: float):
        self.grid, self.A, self.law, self.F, self.eps = grid, A, law, F, float(eps)
        h = grid.h
        self.w = 0.25 * h * h  # 2x2 Gauss weights on an h x h cell
        self.B = kernels.b_matrices(h)
        D = A.mandel
        self.D = D
        self.BDB = self.w * np.einsum("gia,ij,gjb->gab", self.B, D, self.B)
        self.dofs = grid.element_dofs()
        self.rows = np.repeat(self.dofs[..., :, None], 8, axis=-1).ravel()
        self.cols = np.repeat(self.dofs[..., None, :], 8, axis=-2).ravel()
        self.ndof = 2 * grid.nx * grid.ny
        self.xg = grid.gauss_points()
        fixed = np.repeat(grid.boundary_mask().ravel(), 2)
        self.free = np.nonzero(~fixed)[0]
        self.fixed = np.nonzero(fixed)[0]

    # fields ---------------------------------------------------------------
    def strains(self, u):
        return kernels.gauss_strains(u[..., 0], u[..., 1], self.grid.h)

    def stiffness(self, vg):
        data = kernels.element_stiffness(vg, self.BDB).ravel()
        return sparse.csr_matrix((data, (self.rows, self.cols)), shape=(self.ndof, self.ndof))

    def scatter(self, ge):
        """Sum element vectors (ny-1, nx-1, 8) into a global vector."""
        return np.bincount(self.dofs.ravel(), weights=ge.ravel(), minlength=self.ndof)

    def potential_density(self, m, vg):
        if self.F.is_zero:
            return np.zeros(vg.shape)
        return self.F(self.xg, from_mandel(m), vg)

    def energy_parts(self, u, v):
        m = kernels.gauss_strains(u[..., 0], u[..., 1], self.grid.h)
        vg = kernels.gauss_values(v)
        dens = np.einsum("...i,ij,...j->...", m, self.D, m)
        bulk = self.w * float(np.sum(vg * dens))
        dam = self.w * float(np.sum(self.law(vg))) / self.eps
        pot = self.w * float(np.sum(self.potential_density(m, vg)))
        return bulk, dam, pot

    def energy(self, u, v):
        return math.fsum(self.energy_parts(u, v))

    def linear_load(self, vg):
        """Gradient of int F in u when F is affine in M at fixed v."""
        base = self.F(self.xg, np.zeros(vg.shape + (2, 2)), vg)
        coef = np.stack([self.F(self.xg, np.broadcast_to(E, vg.shape + (2, 2)), vg) - base
                         for E in _MANDEL_BASIS], axis=-1)
        ge = self.w * np.einsum("...gi,gia->...a", coef, self.B)
        return self.scatter(ge)

    def potential_gradient(self, m, vg, rel=1e-7):
        """Central-difference gradient of int F in u (for non-affine F)."""
        coef = np.zeros(m.shape)
        for i in range(3):
            step = rel * (1.0 + np.abs(m[..., i]))
            mp, mm = m.copy(), m.copy()
            mp[..., i] += step
            mm[..., i] -= step
            coef[..., i] = (self.F(self.xg, from_mandel(mp), vg)
                            - self.F(self.xg, from_mandel(mm), vg)) / (2 * step)
        ge = self.w * np.einsum("...gi,gia->...a", coef, self.B)
        return self.scatter(ge)


def check_feasible(state: DiscreteState, law: DamageLaw, f: Optional[Callable] = None, tol=1e-12):
    """Raise InfeasibleStateError naming the first violated invariant."""
    g, v, eps = state.grid, state.v, state.eps
    ae = law.alpha * eps
    bad = np.argwhere((v < ae - tol) | (v > 1 + tol))
    if bad.size:
        j, i = bad[0]
        raise InfeasibleStateError(f"v={v[j, i]} outside [alpha eps, 1] at node ({j}, {i})")
    gx, gy = cell_gradient(v, g.h)
    gn = np.hypot(gx, gy) * eps
    bad = np.argwhere(gn > 1 + 1e-9)
    if bad.size:
        j, i = bad[0]
        raise InfeasibleStateError(f"|grad v| eps = {gn[j, i]} > 1 on cell ({j}, {i})")
    bad = np.argwhere(np.abs(state.u) > state.d * (1 + tol))
    if bad.size:
        j, i, c = bad[0]
        raise InfeasibleStateError(f"|u| exceeds the box d={state.d} at node ({j}, {i})")
    bm = g.boundary_mask()
    if np.any(v[bm] != 1.0):
        j, i = np.argwhere(bm & (v != 1.0))[0]
        raise InfeasibleStateError(f"boundary damage v != 1 at node ({j}, {i})")
    if f is not None:
        fb = f(g.nodes()[bm])
        if not np.array_equal(state.u[bm], fb):
            raise InfeasibleStateError("boundary displacement differs from the datum")


def cell_gradient(v, h):
    """Gradient of the bilinear interpolant at cell centres."""
    gx = 0.5 * ((v[:-1, 1:] - v[:-1, :-1]) + (v[1:, 1:] - v[1:, :-1])) / h
    gy = 0.5 * ((v[1:, :-1] - v[:-1, :-1]) + (v[1:, 1:] - v[:-1, 1:])) / h
    return gx, gy


def assemble_energy(state: DiscreteState, A: ElasticTensor, law: DamageLaw, F: PotentialSpec,
                    disc: Optional[Discretization] = None, check=True, C_bound=float("nan")) -> EnergyReport:
    """Energy of a discrete state with 2x2 Gauss points per cell."""
    if check:
        check_feasible(state, law)
    disc = disc or Discretization(state.grid, A, law, F, state.eps)
    b, d, p = disc.energy_parts(state.u, state.v)
    return EnergyReport(b, d, p, C_bound)


# ---------------------------------------------------------------------------
# u step
# ---------------------------------------------------------------------------

def _cg(K, rhs, x0, tol, maxiter=None):
    diag = K.diagonal()
    if np.any(diag <= 0):
        raise SolverBreakdownError("stiffness has a non-positive diagonal; check validate_bounds for F")
    M = spla.LinearOperator(K.shape, matvec=lambda r: r / diag)
    x, info = spla.cg(K, rhs, x0=x0, rtol=tol, atol=0.0, M=M, maxiter=maxiter)
    if info < 0 or not np.all(np.isfinite(x)):
        raise SolverBreakdownError("conjugate gradients broke down; check validate_bounds for F")
    return x


def _solve_affine(disc: Discretization, u, vg, tol):
    """Minimizer of u^T K u + l.u with the boundary dofs fixed."""
    K = disc.stiffness(vg)
    load = disc.linear_load(vg) if not disc.F.is_zero else np.zeros(disc.ndof)
    x = u.reshape(-1).copy()
    Kff = K[disc.free][:, disc.free]
    rhs = -0.5 * load[disc.free] - K[disc.free][:, disc.fixed] @ x[disc.fixed]
    x[disc.free] = _cg(Kff, rhs, x[disc.free], tol)
    return x.reshape(u.shape), K


def minimize_u(state: DiscreteState, A, law, F, tol=1e-10, disc=None, max_iter=50):
    """u-step: CG for potentials affine in M, preconditioned descent otherwise.

    The result is projected on the box |u| <= d and accepted only if the
    energy does not increase.
    """
    disc = disc or Discretization(state.grid, A, law, F, state.eps)
    vg = kernels.gauss_values(state.v)
    e_old = disc.energy(state.u, state.v)
    if F.is_zero or F.affine_in_M:
        u_new, _ = _solve_affine(disc, state.u, vg, tol)
        u_new = np.clip(u_new, -state.d, state.d)
        e_new = disc.energy(u_new, state.v)
        if e_new <= e_old:
            out = state.copy()
            out.u = u_new
            return out
    return _descent_u(state, disc, vg, tol, max_iter)


def _descent_u(state, disc, vg, tol, max_iter):
    """Gradient descent in the metric of the stiffness, with Armijo backtracking."""
    K = disc.stiffness(vg)
    Kff = K[disc.free][:, disc.free]
    u = state.u.reshape(-1).copy()
    shape = state.u.shape
    e = disc.energy(u.reshape(shape), state.v)
    for _ in range(max_iter):
        m = disc.strains(u.reshape(shape))
        grad = 2.0 * (K @ u)
        if not disc.F.is_zero:
            grad += disc.potential_gradient(m, vg)
        gf = grad[disc.free]
        d = np.zeros_like(u)
        d[disc.free] = -_cg(Kff, 0.5 * gf, np.zeros_like(gf), 1e-8)
        slope = float(grad @ d)
        if slope >= 0:
            break
        t = 1.0
        accepted = False
        for _ in range(40):
            trial = np.clip(u + t * d, -state.d, state.d)
            e_t = disc.energy(trial.reshape(shape), state.v)
            if e_t <= e + 1e-4 * t * slope:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        dec = e - e_t
        u, e = trial, e_t
        if dec < tol * (1.0 + abs(e)):
            break
    out = state.copy()
    out.u = u.reshape(shape)
    return out


# ---------------------------------------------------------------------------
# v step
# ---------------------------------------------------------------------------

def nodal_strains(disc: Discretization, u):
    """Mandel strain at nodes: mean over adjacent cells of the Gauss point nearest the node."""
    m = disc.strains(u)
    ny, nx = disc.grid.ny, disc.grid.nx
    acc = np.zeros((ny, nx, 3))
    cnt = np.zeros((ny, nx, 1))
    # gauss g of a cell is nearest to local node g
    offs = ((0, 0), (0, 1), (1, 1), (1, 0))
    for g, (dj, di) in enumerate(offs):
        acc[dj:dj + ny - 1, di:di + nx - 1] += m[:, :, g]
        cnt[dj:dj + ny - 1, di:di + nx - 1] += 1
    return acc / cnt


def pointwise_v(disc: Discretization, u, scan_points=64):
    """Node-wise minimizer of v q + psi(v)/eps + F(x, e, v) over [alpha eps, 1]."""
    law, F, eps = disc.law, disc.F, disc.eps
    ae = law.alpha * eps
    m = nodal_strains(disc, u)
    q = np.einsum("...i,ij,...j->...", m, disc.D, m)
    x = disc.grid.nodes()
    M = from_mandel(m)
    if law.kind == "quadratic" and F.v_coeffs is not None:
        _, c1, c2 = F.v_coeffs(x, M)
        denom = 2.0 / eps + 2.0 * c2
        if np.all(denom > 0):
            return np.clip((2.0 / eps - q - c1) / denom, ae, 1.0)
    # 64-point scan, then golden refinement in the best bracket; ties go to larger v
    grid = np.linspace(ae, 1.0, scan_points)

    def obj(v):
        v = np.broadcast_to(v, q.shape)
        pot = 0.0 if F.is_zero else F(x, M, v)
        return v * q + law(v) / eps + pot

    vals = np.stack([obj(np.full(q.shape, g)) for g in grid], axis=-1)
    k = scan_points - 1 - np.argmin(vals[..., ::-1], axis=-1)
    lo = grid[np.maximum(k - 1, 0)]
    hi = grid[np.minimum(k + 1, scan_points - 1)]
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo.copy(), hi.copy()
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = obj(c), obj(d)
    for _ in range(40):
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        d_new = np.where(left, c, a + invphi * (b - a))
        c_new = np.where(left, b - invphi * (b - a), d)
        c, d = c_new, d_new
        fc, fd = obj(c), obj(d)
    best = np.where(fc < fd, c, d)
    scan_best = grid[k]
    return np.where(obj(best) < obj(scan_best), best, scan_best)


def restore_lipschitz(v, h, eps, pinned):
    """Largest field below ``v`` with 8-neighbour differences <= h/eps, equal to 1 on ``pinned``.

    Nodes near the pinned set are first raised to 1 - dist_inf / eps (the
    lowest values compatible with the pins), then the inf-convolution
    v <- min_y (v(y) + dist_inf(x, y) / eps) is computed by distance sweeps.
    """
    step = h / eps
    seed = np.where(pinned, 0.0, np.inf)
    dist = kernels.lipschitz_restore(seed, step, pinned)
    w = np.maximum(v, 1.0 - dist)
    w[pinned] = 1.0
    return kernels.lipschitz_restore(w, step, np.zeros_like(pinned))


def minimize_v(state: DiscreteState, A, law, F, tol=0.0, disc=None):
    """v-step: pointwise optimum, Lipschitz restoration, accept if the energy does not increase.

    Returns ``(state, accepted)``.
    """
    disc = disc or Discretization(state.grid, A, law, F, state.eps)
    pinned = state.grid.boundary_mask()
    v_pt = pointwise_v(disc, state.u)
    v_new = restore_lipschitz(v_pt, state.grid.h, state.eps, pinned)
    v_new = np.clip(v_new, law.alpha * state.eps, 1.0)
    v_new[pinned] = 1.0
    e_old = disc.energy(state.u, state.v)
    e_new = disc.energy(state.u, v_new)
    if e_new <= e_old:
        out = state.copy()
        out.v = v_new
        return out, True
    return state, False


# ---------------------------------------------------------------------------
# alternating minimization
# ---------------------------------------------------------------------------

@dataclass
class SolverConfig:
    max_outer: int = 500
    tol: float = 1e-8
    window: int = 3
    cg_tol: float = 1e-10
    sigma: Optional[float] = None
    check: bool = True


@dataclass
class SolveResult:
    state: DiscreteState
    trace: list
    converged: bool
    stagnations: int = 0
    feasible: bool = True

    def trace_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for k, r in enumerate(self.trace):
            w.writerow([k] + [repr(float(x)) for x in (r.bulk, r.damage, r.potential, r.F_eps,
                                                       r.W_eps, r.C_bound)])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text

    @property
    def monotone(self):
        F = [r.F_eps for r in self.trace]
        return all(b <= a for a, b in zip(F, F[1:]))

    @property
    def bound_holds(self):
        return all(r.bound_holds for r in self.trace)


def initial_state(grid: Grid, f: Callable, eps: float, A, law, F, d=None, tol=1e-10) -> DiscreteState:
    """v = 1 and u the elastic (v = 1) solve with the boundary datum."""
    nodes = grid.nodes()
    u = np.zeros((grid.ny, grid.nx, 2))
    bm = grid.boundary_mask()
    u[bm] = f(nodes[bm])
    if d is None:
        fmax = float(np.abs(u[bm]).max()) if np.any(u[bm]) else 0.0
        d = 10.0 * fmax if fmax > 0 else np.inf
    state = DiscreteState(grid, u, np.ones((grid.ny, grid.nx)), float(eps), float(d))
    disc = Discretization(grid, A, law, F, eps)
    return minimize_u(state, A, law, F, tol, disc)


def alternate_minimize(initial: DiscreteState, A, law, F, config: Optional[SolverConfig] = None,
                       callback=None) -> SolveResult:
    """Alternate u- and v-steps until the relative energy decrease over
    ``config.window`` iterations falls below ``config.tol``."""
    cfg = config or SolverConfig()
    grid = initial.grid
    disc = Discretization(grid, A, law, F, initial.eps)
    sigma = F.sigma if cfg.sigma is None else cfg.sigma
    C = energy_bound_constant(sigma, law, A, grid.area) if sigma > 0 else 1.0
    state = initial
    if cfg.check:
        check_feasible(state, law)
    trace = [assemble_energy(state, A, law, F, disc, check=False, C_bound=C)]
    stagn = 0
    converged = False
    for it in range(cfg.max_outer):
        state = minimize_u(state, A, law, F, cfg.cg_tol, disc)
        state, ok = minimize_v(state, A, law, F, 0.0, disc)
        stagn += not ok
        if cfg.check:
            check_feasible(state, law)
        rep = assemble_energy(state, A, law, F, disc, check=False, C_bound=C)
        trace.append(rep)
        if callback is not None:
            callback(it, state, rep)
        if len(trace) > cfg.window:
            old = trace[-1 - cfg.window].F_eps
            if old - rep.F_eps <= cfg.tol * max(1.0, abs(rep.F_eps)):
                converged = True
                break
    log.info("alternate_minimize: %d outer iterations, converged=%s", len(trace) - 1, converged)
    return SolveResult(state, trace, converged, stagn)


# ---------------------------------------------------------------------------
# diagnostics and dumps
# ---------------------------------------------------------------------------

def sublevel_diagnostics(state: DiscreteState, lambdas):
    """Rows (lambda, area of {v <= lambda}, perimeter proxy).

    The area uses the bilinear v at the 2x2 Gauss points; the perimeter proxy is
    the total variation h * sum |jump| of the nodal indicator over grid edges.
    """
    h = state.grid.h
    vg = kernels.gauss_values(state.v)
    rows = []
    for lam in lambdas:
        if not 0 < lam < 1:
            raise InputError("lambda must lie in (0, 1)")
        area = 0.25 * h * h * float(np.count_nonzero(vg <= lam))
        chi = (state.v <= lam).astype(float)
        tv = h * (np.abs(np.diff(chi, axis=0)).sum() + np.abs(np.diff(chi, axis=1)).sum())
        rows.append((float(lam), area, float(tv)))
    return rows


def opening_indicator(state: DiscreteState):
    """int (1 - v)^2."""
    vg = kernels.gauss_values(state.v)
    return 0.25 * state.grid.h ** 2 * float(np.sum((1.0 - vg) ** 2))


def interpenetration_indicator(state: DiscreteState):
    """int (1 - v)^2 tr(e(u))^-."""
    h = state.grid.h
    m = kernels.gauss_strains(state.u[..., 0], state.u[..., 1], h)
    vg = kernels.gauss_values(state.v)
    neg = np.maximum(-(m[..., 0] + m[..., 1]), 0.0)
    return 0.25 * h * h * float(np.sum((1.0 - vg) ** 2 * neg))


def dump_fields(state: DiscreteState, path=None):
    """ASCII dump: header ``# grid nx ny h`` then ``x y ux uy v`` per node."""
    g = state.grid
    nodes = g.nodes().reshape(-1, 2)
    u = state.u.reshape(-1, 2)
    v = state.v.reshape(-1)
    lines = [f"# grid {g.nx} {g.ny} {float(g.h)!r}"]
    for row in np.column_stack([nodes, u, v]).tolist():
        lines.append(" ".join(repr(x) for x in row))
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def load_fields(path, eps, d=np.inf, origin=(0.0, 0.0)):
    """Read a field dump back into a DiscreteState."""
    with open(path, encoding="utf-8") as fh:
        head = fh.readline().split()
        nx, ny, h = int(head[2]), int(head[3]), float(head[4])
        data = np.loadtxt(fh)
    x0, y0 = data[0, 0], data[0, 1]
    grid = Grid(x0, y0, x0 + h * (nx - 1), y0 + h * (ny - 1), nx, ny)
    u = data[:, 2:4].reshape(ny, nx, 2)
    v = data[:, 4].reshape(ny, nx)
    return DiscreteState(grid, u, v, eps, d)


def elastic_energy_order(f: Callable, A, law, F, sizes=(33, 65, 129), exact=None, domain=(0, 0, 1, 1)):
    """Discrete elastic (v = 1) energies on a grid sequence and the fitted convergence order.

    With ``exact`` the order comes from consecutive error ratios, otherwise
    from the three-grid Richardson quotient.
    """
    energies = []
    for n in sizes:
        grid = Grid(*domain, n, n)
        st = initial_state(grid, f, 1.0, A, law, F, d=np.inf, tol=1e-13)
        disc = Discretization(grid, A, law, F, st.eps)
        energies.append(disc.energy(st.u, st.v))
    hs = [(domain[2] - domain[0]) / (n - 1) for n in sizes]
    if exact is not None:
        errs = [abs(e - exact) for e in energies]
        order = math.log(errs[-2] / errs[-1]) / math.log(hs[-2] / hs[-1])
    else:
        d1, d2 = energies[-3] - energies[-2], energies[-2] - energies[-1]
        order = math.log(abs(d1 / d2)) / math.log(hs[-3] / hs[-2])
    return energies, order
