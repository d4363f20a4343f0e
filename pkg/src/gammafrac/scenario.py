"""
Scenario files and the workflows behind the command line.

A scenario is one JSON object with the blocks ``material``, ``potential``,
``geometry``, ``boundary`` and ``run``.  Only the blocks a mode needs must be
present.  A minimal gamma-convergence scenario::

    {
      "material": {"elastic": {"kind": "scaled_identity", "c": 1.0},
                   "damage": {"kind": "quadratic", "alpha": 1.0}},
      "potential": {"kind": "none"},
      "geometry": {"domain": {"kind": "rectangle", "bbox": [0, 0, 1, 1]},
                   "segments": [{"p0": [0.5, 0], "p1": [0.5, 1], "nu": [1, 0]}],
                   "pieces": [{"ux": "1", "uy": "0", "region": "x - 0.5"},
                              {"ux": "0", "uy": "0"}]},
      "run": {"mode": "gamma-converge", "eps": [0.08, 0.04, 0.02, 0.01], "seed": 0}
    }

Every workflow returns a :class:`RunOutcome`; files are written with fixed
column order and ``repr`` floats so that identical inputs give identical bytes.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import geometry, material, potentials, recovery, sharp, solver
from .errors import ConfigError, InputError
from .expr import compile_expr

MODES = ("gamma-converge", "solve", "recession-check", "sigma-bound", "demo-fracking")
MODE_BLOCKS = {
    "gamma-converge": ("material", "geometry"),
    "solve": ("material", "boundary"),
    "recession-check": ("potential",),
    "sigma-bound": ("material",),
    "demo-fracking": ("material", "boundary"),
}


@dataclass
class RunOutcome:
    exit_code: int
    summary: dict
    files: list = field(default_factory=list)
    lines: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _get(block, key, where, default=None, required=False):
    if key in block:
        return block[key]
    if required:
        raise ConfigError(f"{where}: missing key {key!r}")
    return default


def _number(x, where):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {x!r}")
    return float(x)


def load_scenario(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario {path!r} is not valid JSON: {exc.msg} (line {exc.lineno})") from None
    return Scenario.from_dict(data)


def parse_elastic(block):
    kind = _get(block, "kind", "material.elastic", "scaled_identity")
    kappa = float(_get(block, "kappa", "material.elastic", 0.0))
    if kind == "scaled_identity":
        return material.ElasticTensor.scaled_identity(_number(_get(block, "c", "", 1.0), "elastic.c"), kappa)
    if kind == "isotropic":
        return material.ElasticTensor.isotropic(_number(_get(block, "mu", "elastic", required=True), "elastic.mu"),
                                                _number(_get(block, "lam", "elastic", 0.0), "elastic.lam"),
                                                kappa)
    if kind == "mandel":
        return material.ElasticTensor.from_mandel_matrix(_get(block, "matrix", "elastic", required=True), kappa)
    raise ConfigError(f"material.elastic: unknown kind {kind!r}")


def parse_damage(block):
    kind = _get(block, "kind", "material.damage", "quadratic")
    alpha = _number(_get(block, "alpha", "material.damage", 1.0), "damage.alpha")
    if kind == "quadratic":
        return material.DamageLaw.quadratic(alpha)
    if kind == "tabulated":
        return material.DamageLaw.tabulated(_get(block, "v", "material.damage", required=True),
                                            _get(block, "psi", "material.damage", required=True), alpha)
    if kind == "expression":
        e = compile_expr(_get(block, "psi", "material.damage", required=True), ("v",))
        return material.DamageLaw.from_callable(lambda v: e(v=v), alpha)
    raise ConfigError(f"material.damage: unknown kind {kind!r}")


def parse_domain(block):
    kind = _get(block, "kind", "geometry.domain", "rectangle")
    if kind in ("rectangle", "rounded_rectangle"):
        bbox = [float(c) for c in _get(block, "bbox", "geometry.domain", [0.0, 0.0, 1.0, 1.0])]
        if len(bbox) != 4:
            raise ConfigError("geometry.domain.bbox needs four numbers")
        if kind == "rectangle":
            return geometry.Rectangle(*bbox)
        return geometry.RoundedRectangle(*bbox, _number(_get(block, "r", "domain", required=True), "domain.r"))
    if kind == "disk":
        c = _get(block, "center", "geometry.domain", [0.0, 0.0])
        return geometry.Disk(float(c[0]), float(c[1]), _number(_get(block, "R", "domain", required=True), "domain.R"))
    raise ConfigError(f"geometry.domain: unknown kind {kind!r}")


def parse_potential(block, A, bbox):
    kind = _get(block, "kind", "potential", "none")
    w = f"potential[{kind}]"
    if kind == "none":
        return potentials.zero()
    if kind == "fracking_affine":
        law = potentials.PressureLaw.affine_in_v(_get(block, "m", w, 0.0), _get(block, "q", w, 0.0),
                                                 _get(block, "rho", w, 1.0), _get(block, "rho_lipschitz", w, 0.0))
        return potentials.make_fracking(law, bbox)
    if kind == "fracking_strain":
        tl = potentials.TraceLaw(float(_get(block, "c", w, 1.0)), float(_get(block, "k", w, 0.0)))
        law = potentials.PressureLaw.strain_dependent(_get(block, "rho_v", w, 1.0), tl,
                                                      _get(block, "rho_x", w, 1.0),
                                                      _get(block, "rho_lipschitz", w, 0.0))
        return potentials.make_fracking(law, bbox)
    if kind == "two_rocks":
        l1 = _get(block, "law1", w, {"c": 1.0})
        l2 = _get(block, "law2", w, {"c": 1.0})
        law = potentials.PressureLaw.two_rocks(
            potentials.TraceLaw(float(l1.get("c", 1.0)), float(l1.get("k", 0.0))),
            potentials.TraceLaw(float(l2.get("c", 1.0)), float(l2.get("k", 0.0))),
            _get(block, "interface", w, required=True), _number(_get(block, "delta", w, required=True), w),
            _get(block, "rho_v", w, 1.0))
        return potentials.make_fracking(law, bbox)
    if kind == "plastic_slip":
        return potentials.make_plastic_slip(_get(block, "p", w, 1.0), _get(block, "g", w, "linear"), bbox=bbox)
    if kind == "tresca":
        return potentials.make_tresca(_get(block, "p", w, 1.0), _get(block, "g", w, "linear"), A=A, bbox=bbox)
    if kind == "non_interpenetration":
        return potentials.make_non_interpenetration(_get(block, "p", w, 1.0), bbox)
    raise ConfigError(f"potential: unknown kind {kind!r}")


def parse_cracked(block, domain):
    if _get(block, "preset", "geometry") == "vertical_crack":
        return sharp.vertical_crack(float(_get(block, "delta", "geometry", 1.0)),
                                    float(_get(block, "x_crack", "geometry", 0.5)), domain,
                                    tuple(_get(block, "opening", "geometry", (1.0, 0.0))))
    segs = []
    for i, s in enumerate(_get(block, "segments", "geometry", [])):
        segs.append(sharp.CrackSegment(tuple(_get(s, "p0", f"segments[{i}]", required=True)),
                                       tuple(_get(s, "p1", f"segments[{i}]", required=True)),
                                       s.get("nu")))
    pieces = []
    for i, p in enumerate(_get(block, "pieces", "geometry", [{"ux": "0", "uy": "0"}])):
        pieces.append(sharp.Piece.from_expressions(_get(p, "ux", f"pieces[{i}]", "0"),
                                                   _get(p, "uy", f"pieces[{i}]", "0"),
                                                   p.get("region"), p.get("name", f"piece{i}")))
    if pieces[-1].region is not None:
        raise ConfigError("geometry.pieces: the last piece must have no region")
    return sharp.CrackedDisplacement(domain, segs, pieces)


class BoundaryDatum:
    """Dirichlet datum f from one default expression pair and per-edge overrides.

    ``{"ux": ..., "uy": ..., "edges": {"left": {"ux": ..., "uy": ...}}}``;
    a point takes the expression of the nearest named boundary piece that has
    an override (first listed wins ties), otherwise the default.
    """

    def __init__(self, block, domain):
        self.default = sharp.Piece.from_expressions(block.get("ux", "0"), block.get("uy", "0"))
        self.overrides = []
        named = {p.name: p for p in domain.pieces()}
        for name, sub in block.get("edges", {}).items():
            if name not in named:
                raise ConfigError(f"boundary.edges: unknown boundary piece {name!r}; have {sorted(named)}")
            self.overrides.append((named[name], sharp.Piece.from_expressions(sub.get("ux", "0"),
                                                                             sub.get("uy", "0"))))
        self.all_pieces = domain.pieces()

    @staticmethod
    def _dist(piece, p):
        if piece.kind == "edge":
            a, t = np.asarray(piece.p0), piece.tangent
            s = np.clip((p - a) @ t, 0.0, piece.length)
            return np.linalg.norm(p - piece.point(s), axis=-1)
        c = np.asarray(piece.center)
        ang = np.arctan2(p[..., 1] - c[1], p[..., 0] - c[0])
        ang = np.where(ang < piece.angle0 - 1e-12, ang + 2 * np.pi, ang)
        s = np.clip((ang - piece.angle0) * piece.radius, 0.0, piece.length)
        return np.linalg.norm(p - piece.point(s), axis=-1)

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        out = self.default(p)
        if not self.overrides:
            return out
        d_all = np.stack([self._dist(pc, p) for pc in self.all_pieces])
        dmin = d_all.min(axis=0)
        done = np.zeros(p.shape[:-1], dtype=bool)
        for pc, fpiece in self.overrides:
            sel = (self._dist(pc, p) <= dmin + 1e-12) & ~done
            if np.any(sel):
                out[sel] = fpiece(p[sel])
            done |= sel
        return out


@dataclass
class Scenario:
    raw: dict
    mode: str
    seed: Optional[int]

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("scenario must be a JSON object")
        run = data.get("run", {})
        mode = run.get("mode")
        if mode is not None and mode not in MODES:
            raise ConfigError(f"run.mode must be one of {MODES}, got {mode!r}")
        seed = run.get("seed")
        if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
            raise ConfigError("run.seed must be a non-negative integer")
        eps = run.get("eps")
        if isinstance(eps, list):
            if any(b >= a for a, b in zip(eps, eps[1:])):
                raise ConfigError("run.eps ladder must be strictly decreasing")
        return cls(data, mode, seed)

    def block(self, name):
        if name not in self.raw:
            raise ConfigError(f"scenario has no {name!r} block")
        return self.raw[name]

    def require(self, mode):
        for b in MODE_BLOCKS[mode]:
            self.block(b)
        if self.seed is None:
            raise ConfigError("run.seed is required (or pass --seed)")

    @property
    def run(self):
        return self.raw.get("run", {})

    def material(self):
        m = self.block("material")
        return parse_elastic(m.get("elastic", {})), parse_damage(m.get("damage", {}))

    def domain(self):
        g = self.raw.get("geometry", {})
        return parse_domain(g.get("domain", {}))

    def potential(self, A, domain=None):
        dom = domain or self.domain()
        return parse_potential(self.raw.get("potential", {"kind": "none"}), A, dom.bbox)

    def cracked(self, domain=None):
        return parse_cracked(self.block("geometry"), domain or self.domain())

    def boundary(self, domain=None):
        return BoundaryDatum(self.block("boundary"), domain or self.domain())


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _fmt(x):
    return repr(float(x))


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(c) if isinstance(c, (float, np.floating)) else c for c in r])
    return path


def write_series(path, xs, ys, comment):
    """Two-column whitespace-separated plot data."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {comment}\n")
        for x, y in zip(xs, ys):
            fh.write(f"{_fmt(x)} {_fmt(y)}\n")
    return path


# ---------------------------------------------------------------------------
# workflows
# ---------------------------------------------------------------------------

def run_gamma_converge(sc: Scenario, out: str) -> RunOutcome:
    """Recovery ladder against the sharp energy.

    Passes when the last three gaps decrease and the extrapolated energy is
    within ``run.rel_tol`` (default 1%) of the sharp total.  With a
    ``boundary`` block and ``run.datum_delta`` the boundary-datum recovery is
    used and the reference includes the boundary relaxation term.
    """
    A, law = sc.material()
    dom = sc.domain()
    F = sc.potential(A, dom)
    u = sc.cracked(dom)
    eps = [float(e) for e in sc.run.get("eps", [0.08, 0.04, 0.02, 0.01])]
    rel_tol = float(sc.run.get("rel_tol", 0.01))
    theta_scale = float(sc.run.get("theta_scale", 1.0))
    files = []
    if "datum_delta" in sc.run:
        f = sc.boundary(dom)
        rows, ref, lim, p = recovery.datum_ladder(u, f, A, law, F, eps, float(sc.run["datum_delta"]),
                                                  theta_scale)
        gaps = [abs(en.total - ref) for _, en, _ in rows]
        files.append(write_csv(os.path.join(out, "ladder.csv"),
                               ("eps", "total_Feps", "reference", "gap", "bulk", "damage", "potential"),
                               [(e, en.total, ref, abs(en.total - ref), en.bulk, en.damage, en.potential)
                                for e, en, _ in rows]))
        sharp_parts = sharp.sharp_total(u, f, A, law, F, dom)
        total = ref
    else:
        tab = recovery.gamma_ladder(u, A, law, F, eps, theta_scale=theta_scale,
                                    check_feasibility=bool(sc.run.get("check_feasibility", True)))
        path = os.path.join(out, "ladder.csv")
        tab.to_csv(path)
        files.append(path)
        gaps, lim, p, total = tab.gaps(), tab.extrapolated, tab.order, tab.sharp_total
        sharp_parts = sharp.evaluate_phi(u, A, law, F)
    files.append(write_csv(os.path.join(out, "sharp_breakdown.csv"), ("component", "value"),
                           [(k, float(v)) for k, v in sharp_parts.as_dict().items()]))
    files.append(write_series(os.path.join(out, "gap_vs_eps.dat"), eps, gaps,
                              "eps gap (plot on log-log axes)"))
    noise = 1e-9 * (1.0 + abs(total))
    tail = gaps[-3:]
    monotone = all(g <= noise for g in tail) or all(b < a for a, b in zip(tail, tail[1:]))
    ext_gap = abs(lim - total)
    ext_ok = ext_gap <= max(rel_tol * abs(total), noise)
    summary = {"mode": "gamma-converge", "sharp_total": total, "extrapolated": lim, "order": p,
               "extrapolated_gap": ext_gap, "relative_gap": ext_gap / abs(total) if total else 0.0,
               "monotone_tail": monotone, "passed": monotone and ext_ok}
    return RunOutcome(0 if summary["passed"] else 2, summary, files)


def _grid_and_eps(sc: Scenario, dom, n=None):
    if not isinstance(dom, geometry.Rectangle):
        raise ConfigError("the grid solver needs a rectangle domain")
    n = n or sc.run.get("grid", 65)
    nx, ny = (n, n) if isinstance(n, int) else (int(n[0]), int(n[1]))
    grid = solver.Grid(dom.x0, dom.y0, dom.x1, dom.y1, nx, ny)
    if "eps" in sc.run and not isinstance(sc.run["eps"], list):
        eps = float(sc.run["eps"])
    else:
        c = sc.run.get("eps_factor", 4)
        if c not in (2, 4, 8):
            raise ConfigError("run.eps_factor must be 2, 4 or 8")
        eps = c * grid.h
    return grid, eps


def _solve_once(sc, A, law, F, grid, eps, f, out, tag="", stride=0):
    cfg = solver.SolverConfig(max_outer=int(sc.run.get("max_outer", 500)),
                              tol=float(sc.run.get("tol", 1e-8)))
    d = sc.run.get("d")
    st = solver.initial_state(grid, f, eps, A, law, F, None if d is None else float(d))
    files = []

    def dump(it, state, rep):
        if stride and (it + 1) % stride == 0:
            path = os.path.join(out, f"fields{tag}_{it + 1:04d}.txt")
            solver.dump_fields(state, path)
            files.append(path)

    res = solver.alternate_minimize(st, A, law, F, cfg, callback=dump)
    p = os.path.join(out, f"trace{tag}.csv")
    res.trace_csv(p)
    files.append(p)
    p = os.path.join(out, f"fields{tag}_final.txt")
    solver.dump_fields(res.state, p)
    files.append(p)
    lams = sc.run.get("lambdas", [0.1, 0.25, 0.5, 0.75, 0.9])
    files.append(write_csv(os.path.join(out, f"sublevel{tag}.csv"), ("lambda", "area", "perimeter"),
                           solver.sublevel_diagnostics(res.state, lams)))
    return res, files


def run_solve(sc: Scenario, out: str) -> RunOutcome:
    A, law = sc.material()
    dom = sc.domain()
    F = sc.potential(A, dom)
    grid, eps = _grid_and_eps(sc, dom)
    f = sc.boundary(dom)
    res, files = _solve_once(sc, A, law, F, grid, eps, f, out, stride=int(sc.run.get("dump_stride", 0)))
    last = res.trace[-1]
    summary = {"mode": "solve", "nx": grid.nx, "ny": grid.ny, "eps": eps,
               "iterations": len(res.trace) - 1, "converged": res.converged,
               "monotone": res.monotone, "bound_holds": res.bound_holds,
               "stagnations": res.stagnations, "F_eps": last.F_eps, "W_eps": last.W_eps,
               "min_v": float(res.state.v.min())}
    ok = res.converged and res.monotone and res.bound_holds
    return RunOutcome(0 if ok else 2, summary, files)


def run_demo_fracking(sc: Scenario, out: str) -> RunOutcome:
    """Pressure ramp with the affine fracking law (m = 0): one solve per q.

    Passes when every solve converges and the opening indicator int (1 - v)^2
    does not decrease along the ramp.
    """
    A, law = sc.material()
    dom = sc.domain()
    grid, eps = _grid_and_eps(sc, dom)
    f = sc.boundary(dom)
    pot = dict(sc.raw.get("potential", {}))
    ramp = [float(q) for q in sc.run.get("ramp", [0.0, 0.05, 0.1, 0.15])]
    if any(b <= a for a, b in zip(ramp, ramp[1:])):
        raise ConfigError("run.ramp must be strictly increasing")
    files, rows, ok = [], [], True
    for i, q in enumerate(ramp):
        block = {"kind": "fracking_affine", "m": 0.0, "q": q, "rho": pot.get("rho", 1.0),
                 "rho_lipschitz": pot.get("rho_lipschitz", 0.0)}
        F = parse_potential(block, A, dom.bbox)
        res, fs = _solve_once(sc, A, law, F, grid, eps, f, out, tag=f"_q{i}")
        files += fs
        ok &= res.converged and res.monotone and res.bound_holds
        rows.append((q, res.trace[-1].F_eps, solver.opening_indicator(res.state),
                     float(res.state.v.min()), int(res.converged)))
    files.append(write_csv(os.path.join(out, "ramp.csv"),
                           ("q", "F_eps", "opening", "min_v", "converged"), rows))
    files.append(write_series(os.path.join(out, "opening_vs_q.dat"), [r[0] for r in rows],
                              [r[2] for r in rows], "q opening=int(1-v)^2"))
    opening = [r[2] for r in rows]
    grows = all(b >= a - 1e-12 for a, b in zip(opening, opening[1:]))
    summary = {"mode": "demo-fracking", "ramp": ramp, "opening": opening, "grows": grows,
               "all_converged": bool(ok)}
    return RunOutcome(0 if grows and ok else 2, summary, files)


def recession_errors(F, n, seed, bbox, domain=None):
    """Max relative errors of the numeric recession against the closed form.

    Returns ``(err_L0, err_L, base_independence)``; the relative error is
    taken against ``max(|F_inf|, |M|)`` so that samples where the recession
    vanishes are measured on the scale of M.
    """
    rng = np.random.default_rng(seed)
    x0, y0, x1, y1 = bbox
    x = np.stack([rng.uniform(x0, x1, n), rng.uniform(y0, y1, n)], axis=-1)
    M = potentials.random_sym(rng, n, (-2.0, 2.0))
    L = potentials.random_sym(rng, n, (-2.0, 1.0))
    exact = F.recession(x, M)
    num0 = potentials.recession_numeric(F, x, M)
    numL = potentials.recession_numeric(F, x, M, L)
    scale = np.maximum(np.abs(exact), material.frobenius(M))
    e0 = float(np.max(np.abs(num0 - exact) / scale))
    eL = float(np.max(np.abs(numL - exact) / scale))
    ind = float(np.max(np.abs(numL - num0) / scale))
    return e0, eL, ind


def run_recession_check(sc: Scenario, out: str) -> RunOutcome:
    A = parse_elastic(sc.raw.get("material", {}).get("elastic", {}))
    dom = sc.domain()
    F = sc.potential(A, dom)
    if F.is_zero:
        e0 = eL = ind = 0.0
    else:
        e0, eL, ind = recession_errors(F, int(sc.run.get("samples", 1000)), sc.seed, dom.bbox)
    tol = float(sc.run.get("tol", 1e-5))
    ok = max(e0, eL, ind) <= tol
    rows = [("max_rel_error_L0", e0), ("max_rel_error_L", eL), ("base_point_spread", ind)]
    files = [write_csv(os.path.join(out, "recession.csv"), ("quantity", "value"), rows)]
    summary = {"mode": "recession-check", "potential": F.kind, "max_rel_error": max(e0, eL),
               "base_point_spread": ind, "tol": tol, "passed": ok}
    return RunOutcome(0 if ok else 2, summary, files)


def run_sigma_bound(sc: Scenario, out: str) -> RunOutcome:
    A, law = sc.material()
    dom = sc.domain()
    F = sc.potential(A, dom)
    smax = material.sigma_max(law, A, dom.area)
    env = material.sigma_envelope(law, A)
    if F.is_zero:
        sigma_hat, failures = 0.0, []
    else:
        rep = potentials.validate_bounds(F, law, A, dom.area, samples=int(sc.run.get("samples", 10_000)),
                                         seed=sc.seed, bbox=dom.bbox)
        sigma_hat, failures = rep.sigma_hat, rep.failures
    ok = not failures and sigma_hat < smax
    C = material.energy_bound_constant(sigma_hat, law, A, dom.area) if ok else float("inf")
    table = [("sigma_max", smax), ("envelope", env), ("sigma_hat", sigma_hat), ("C", C)]
    lines = [f"{k:<10} {v:.6f}" for k, v in table] + [f"{'result':<10} {'pass' if ok else 'fail'}"]
    lines += [f"  {msg}" for msg in failures]
    files = [write_csv(os.path.join(out, "sigma_bound.csv"), ("quantity", "value"), table)]
    summary = {"mode": "sigma-bound", "sigma_max": smax, "envelope": env, "sigma_hat": sigma_hat,
               "C": C, "passed": ok, "failures": failures}
    return RunOutcome(0 if ok else 2, summary, files, lines)


WORKFLOWS = {
    "gamma-converge": run_gamma_converge,
    "solve": run_solve,
    "recession-check": run_recession_check,
    "sigma-bound": run_sigma_bound,
    "demo-fracking": run_demo_fracking,
}


def run(sc: Scenario, mode: Optional[str] = None, out: str = ".") -> RunOutcome:
    mode = mode or sc.mode
    if mode not in WORKFLOWS:
        raise ConfigError(f"unknown mode {mode!r}; choose from {MODES}")
    if sc.mode is not None and sc.mode != mode:
        raise ConfigError(f"scenario declares mode {sc.mode!r} but {mode!r} was requested")
    sc.require(mode)
    os.makedirs(out, exist_ok=True)
    return WORKFLOWS[mode](sc, out)
