"""Recovery pairs: tube profile, pointwise fields, feasibility, ladders and the boundary map."""

import math

import numpy as np
import pytest

from gammafrac.errors import ParameterError, TubeOverlapError
from gammafrac.geometry import Rectangle, RoundedRectangle
from gammafrac.material import DamageLaw, ElasticTensor
from gammafrac.potentials import zero
from gammafrac.recovery import (boundary_diffeomorphism, build_recovery, constant_theta, eps_max,
                                feasibility, gamma_ladder, l2_error, optimal_theta)
from gammafrac.sharp import CrackedDisplacement, CrackSegment, Piece, vertical_crack


@pytest.fixture
def crack():
    return vertical_crack()


@pytest.fixture
def rec(crack, A1, law1):
    return build_recovery(crack, optimal_theta(crack, A1, law1), 0.05, law1)


def two_cracks(gap=0.1):
    dom = Rectangle(0.0, 0.0, 1.0, 1.0)
    a, b = 0.5 - gap / 2, 0.5 + gap / 2
    segs = [CrackSegment((a, 0.0), (a, 1.0), (1.0, 0.0)), CrackSegment((b, 0.0), (b, 1.0), (1.0, 0.0))]
    pieces = [Piece.constant((2.0, 0.0), region=lambda p: p[..., 0] > b),
              Piece.constant((1.0, 0.0), region=lambda p: p[..., 0] > a),
              Piece.constant((0.0, 0.0))]
    return CrackedDisplacement(dom, segs, pieces)


# -- tube profile ------------------------------------------------------------

@pytest.mark.parametrize("delta", [0.5, 1.0, 3.0])
def test_optimal_theta_is_half_the_opening(delta, A1, law1):
    # A = identity, alpha = psi(0) = 1: theta = |[u]| / 2 for a normal opening
    u = vertical_crack(delta)
    th = optimal_theta(u, A1, law1)
    s = np.linspace(0.0, 1.0, 7)
    assert np.allclose(th(0, s), delta / 2)
    assert th.max_dtheta == pytest.approx(0.0, abs=1e-12)


def test_theta_scales_with_sqrt_alpha(crack, A1):
    t1 = optimal_theta(crack, A1, DamageLaw.quadratic(1.0))(0, np.array([0.4]))
    t4 = optimal_theta(crack, A1, DamageLaw.quadratic(4.0))(0, np.array([0.4]))
    assert t4[0] == pytest.approx(2 * t1[0])


def test_theta_scaled(crack, A1, law1):
    th = optimal_theta(crack, A1, law1)
    assert th.scaled(2.0).max_theta == pytest.approx(2 * th.max_theta)


# -- pointwise fields -------------------------------------------------------

def test_far_from_crack_is_untouched(rec, crack):
    p = np.array([[0.1, 0.3], [0.9, 0.7]])
    assert np.allclose(rec.v(p), 1.0)
    assert np.allclose(rec.u_eps(p), crack.value(p))


def test_on_crack_values(rec, law1):
    p = np.array([[0.5, 0.2], [0.5, 0.8]])
    assert np.allclose(rec.v(p), law1.alpha * 0.05)
    # the core interpolates affinely between 0 and 1
    assert np.allclose(rec.u_eps(p), [[0.5, 0.0], [0.5, 0.0]])


def test_v_continuous_across_core_edge(rec):
    edge = 0.5 + 0.5 * 0.05
    h = 1e-9
    p = np.array([[edge - h, 0.5], [edge + h, 0.5]])
    v = rec.v(p)
    assert abs(v[0] - v[1]) < 1e-6
    u = rec.u_eps(p)
    assert np.allclose(u[0], u[1], atol=1e-6)


def test_collar_reaches_one(rec):
    # core half-width theta eps plus collar C eps
    out = 0.5 + (0.5 + rec.C) * 0.05
    assert rec.v(np.array([[out + 1e-9, 0.5]]))[0] == pytest.approx(1.0)
    assert rec.v(np.array([[out - 0.5 * rec.C * 0.05, 0.5]]))[0] < 1.0


def test_feasibility(rec, law1):
    fz = feasibility(rec)
    assert fz.min_v >= law1.alpha * 0.05 - 1e-12
    assert fz.max_v <= 1.0
    assert fz.max_grad_v_times_eps <= 1.0 + 1e-6
    assert fz.linf_u_eps <= 1.0 + 1e-12


def test_gradient_matches_finite_differences(rec):
    rng = np.random.default_rng(3)
    p = np.stack([rng.uniform(0.49, 0.51, 40), rng.uniform(0.1, 0.9, 40)], axis=-1)
    h = 1e-6
    g = rec.grad_u_eps(p)
    for j, e in enumerate(np.eye(2)):
        fd = (rec.u_eps(p + h * e) - rec.u_eps(p - h * e)) / (2 * h)
        assert np.allclose(g[..., j], fd, atol=1e-5)


def test_l2_error_shrinks(crack, A1, law1):
    th = optimal_theta(crack, A1, law1)
    errs = [l2_error(build_recovery(crack, th, e, law1)) for e in (0.08, 0.04, 0.02)]
    assert errs[0] > errs[1] > errs[2]
    # the core has width eps and |u_eps - u| <= 1/2 on average squared 1/12
    assert errs[2] == pytest.approx(math.sqrt(0.02 / 12), rel=1e-6)


# -- parameters -------------------------------------------------------------

def test_alpha_eps_must_be_below_one(crack, A1):
    law = DamageLaw.quadratic(10.0)
    with pytest.raises(ParameterError):
        build_recovery(crack, optimal_theta(crack, A1, law), 0.1, law)


def test_tube_overlap(A1, law1):
    u = two_cracks(0.1)
    th = constant_theta(u, 0.5)
    em = eps_max(u, th, law1)
    # gap 0.1 minus two half-widths (0.5 + 1) eps
    assert em == pytest.approx(0.1 / 3, rel=1e-6)
    build_recovery(u, th, 0.9 * em, law1)
    with pytest.raises(TubeOverlapError):
        build_recovery(u, th, 1.1 * em, law1)


def test_single_tube_eps_max_is_one_over_alpha(crack, A1):
    law = DamageLaw.quadratic(2.0)
    assert eps_max(crack, optimal_theta(crack, A1, law), law) == pytest.approx(0.5)


# -- ladders ----------------------------------------------------------------

def test_ladder_converges_to_sharp(crack, A1, law1):
    tab = gamma_ladder(crack, A1, law1, zero(), [0.08, 0.04, 0.02, 0.01])
    # a |[u]| + b = 2 + 2/3
    assert tab.sharp_total == pytest.approx(8 / 3, rel=1e-10)
    assert tab.monotone_tail
    assert tab.extrapolated_gap <= 1e-3 * tab.sharp_total
    for r in tab.rows:
        assert r.max_grad_v_times_eps <= 1 + 1e-6
        assert r.min_v == pytest.approx(law1.alpha * r.eps)
    text = tab.to_csv()
    assert text.splitlines()[0].startswith("eps")
    assert len(text.splitlines()) == 5


def test_ladder_without_cracks_has_no_gap(A1, law1):
    u = CrackedDisplacement(Rectangle(0.0, 0.0, 1.0, 1.0), [], [Piece.from_expressions("0.1*x", "0.2*y")])
    tab = gamma_ladder(u, A1, law1, zero(), [0.1, 0.05, 0.025])
    assert max(tab.gaps()) < 1e-12


def test_ladder_must_decrease(crack, A1, law1):
    with pytest.raises(ParameterError):
        gamma_ladder(crack, A1, law1, zero(), [0.02, 0.04])


# -- boundary map -----------------------------------------------------------

@pytest.fixture
def rr():
    return RoundedRectangle(0.0, 0.0, 2.0, 2.0, 0.4)


def test_boundary_map_examples(rr):
    phi = boundary_diffeomorphism(rr, 0.01, 2.0, 0.3)
    deep = np.array([[1.0, 1.0], [0.5, 1.2]])
    assert np.array_equal(phi.forward(deep), deep)
    b = np.array([[0.0, 1.0], [1.0, 2.0]])
    assert np.allclose(phi.forward(b), [[-0.02, 1.0], [1.0, 2.02]])


def test_boundary_map_inverse(rr):
    phi = boundary_diffeomorphism(rr, 0.01, 2.0, 0.3)
    rng = np.random.default_rng(1)
    x = rng.uniform(0.0, 2.0, (500, 2))
    x = x[rr.contains(x)]
    assert np.max(np.abs(phi.inverse(phi.forward(x)) - x)) < 1e-10


def test_boundary_map_jacobian(rr):
    rng = np.random.default_rng(2)
    x = rng.uniform(0.0, 2.0, (400, 2))
    x = x[rr.contains(x)]
    sups = []
    for eps in (0.04, 0.02, 0.01):
        phi = boundary_diffeomorphism(rr, eps, 2.0, 0.3)
        J = phi.jacobian(x)
        h = 1e-6
        for j, e in enumerate(np.eye(2)):
            fd = (phi.forward(x + h * e) - phi.forward(x - h * e)) / (2 * h)
            ok = np.abs(rr.sdf(x)) > 1e-5
            assert np.allclose(J[ok][:, :, j], fd[ok], atol=1e-5)
        sups.append(np.linalg.norm(J, 2, axis=(-2, -1)).max())
        assert sups[-1] <= phi.lipschitz + 1e-12
    assert sups[0] > sups[1] > sups[2] > 1.0


def test_boundary_map_parameters(rr):
    with pytest.raises(ParameterError):
        boundary_diffeomorphism(rr, 0.2, 2.0, 0.3)


def test_theta_bar_is_optimal(crack, A1, law1):
    eps = [0.04, 0.02, 0.01]
    best = gamma_ladder(crack, A1, law1, zero(), eps, check_feasibility=False).extrapolated
    for s in (0.5, 2.0):
        other = gamma_ladder(crack, A1, law1, zero(), eps, theta_scale=s, check_feasibility=False)
        assert other.extrapolated > best + 1e-3


def test_sup_norm_and_gradient_bounds(crack, A1, law1):
    th = optimal_theta(crack, A1, law1)
    for eps in (0.08, 0.04, 0.02):
        rec = build_recovery(crack, th, eps, law1)
        fz = feasibility(rec)
        assert fz.linf_u_eps <= crack.linf() + 1e-12


# -- boundary datum ---------------------------------------------------------

def test_datum_matching_trace(rr, A1, law1):
    from gammafrac.recovery import build_recovery_with_datum
    f = Piece.from_expressions("0.1*x", "0")
    u = CrackedDisplacement(rr, [], [f])
    exact = 0.01 * rr.area
    gaps = []
    for eps in (0.02, 0.01):
        dr = build_recovery_with_datum(u, f, eps, A1, law1, 0.3)
        assert dr.boundary_segments == []
        gaps.append(dr.energy(zero()).total - exact)
    # the pull-back distorts the boundary band at first order in eps
    assert abs(gaps[1]) < abs(gaps[0])
    assert abs(2 * gaps[1] - gaps[0]) < 1e-3 * exact


def test_datum_boundary_values_exact(rr, A1, law1):
    from gammafrac.recovery import build_recovery_with_datum
    # a C^1 bump on the straight part of the right edge
    s1, s2 = "min(max((y-0.5)/0.1,0),1)", "min(max((1.5-y)/0.1,0),1)"
    bump = f"(3*{s1}^2-2*{s1}^3)*(3*{s2}^2-2*{s2}^3)"
    f = Piece.from_expressions(f"0.2*step(x-1.5)*{bump}", "0")
    u = CrackedDisplacement(rr, [], [Piece.constant((0.0, 0.0))])
    pts = np.concatenate([pc.point(np.linspace(0, pc.length, 50)) for pc in rr.pieces()])
    for eps in (0.02, 0.01):
        dr = build_recovery_with_datum(u, f, eps, A1, law1, 0.3)
        assert np.array_equal(dr.u_eps(pts), f(pts))
        assert np.all(dr.v(pts) == 1.0)
