import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gammafrac import potentials as P
from gammafrac import sharp as S
from gammafrac.errors import InputError
from gammafrac.geometry import Disk, Rectangle, RoundedRectangle
from gammafrac.material import DamageLaw, ElasticTensor

E1 = np.array([1.0, 0.0])
E2 = np.array([0.0, 1.0])
FRACK = P.make_fracking(P.PressureLaw.affine_in_v(0.0, 1.0, 0.1))


class TestJump:
    def test_aligned(self):
        assert np.allclose(S.symmetric_tensor_jump(2.0 * E1, E1), [[2.0, 0.0], [0.0, 0.0]])

    def test_shear(self):
        assert np.allclose(S.symmetric_tensor_jump(3.0 * E2, E1), [[0.0, 1.5], [1.5, 0.0]])

    def test_by_hand(self):
        assert np.allclose(S.symmetric_tensor_jump(np.array([1.0, 1.0]), E1), [[1.0, 0.5], [0.5, 0.0]])

    @given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0, 2 * np.pi))
    def test_trace_and_flip(self, a, b, th):
        j = np.array([a, b])
        nu = np.array([np.cos(th), np.sin(th)])
        M = S.symmetric_tensor_jump(j, nu)
        assert np.trace(M) == pytest.approx(j @ nu, abs=1e-12)
        assert np.allclose(M, S.symmetric_tensor_jump(-j, -nu))
        assert np.linalg.matrix_rank(M, tol=1e-12) <= 2


class TestPhi:
    def test_zero(self, A1, law1):
        u = S.CrackedDisplacement(Rectangle(), [], [S.Piece.constant((0.0, 0.0))])
        assert S.evaluate_phi(u, A1, law1, P.zero()).total == 0.0

    def test_vertical_crack(self, A1, law1):
        br = S.evaluate_phi(S.vertical_crack(), A1, law1, P.zero())
        assert br.surface_a == pytest.approx(2.0, abs=1e-12)
        assert br.surface_b == pytest.approx(2.0 / 3.0, abs=1e-12)
        assert br.bulk == 0.0 and br.total == pytest.approx(8.0 / 3.0, abs=1e-12)

    def test_vertical_crack_fracking(self, A1, law1):
        br = S.evaluate_phi(S.vertical_crack(), A1, law1, FRACK)
        assert br.surface_Finf == pytest.approx(-0.1, abs=1e-12)
        assert br.bulk_potential == 0.0
        assert br.total == pytest.approx(8.0 / 3.0 - 0.1, abs=1e-12)

    def test_total_is_sum(self, A1, law1):
        br = S.evaluate_phi(S.vertical_crack(delta=0.7), A1, law1, FRACK)
        parts = [br.bulk_elastic, br.bulk_potential, br.surface_a, br.surface_b, br.surface_Finf, br.boundary_R]
        assert br.total == pytest.approx(math.fsum(parts), rel=1e-12)

    @pytest.mark.parametrize("r", [0.5, 2.0, 3.0])
    def test_jump_homogeneity(self, A1, law1, r):
        b1 = S.evaluate_phi(S.vertical_crack(delta=1.0, opening=(0.6, 0.8)), A1, law1, FRACK)
        br = S.evaluate_phi(S.vertical_crack(delta=r, opening=(0.6, 0.8)), A1, law1, FRACK)
        assert br.surface_a == pytest.approx(r * b1.surface_a, rel=1e-12)
        assert br.surface_Finf == pytest.approx(r * b1.surface_Finf, rel=1e-12)
        assert br.surface_b == pytest.approx(b1.surface_b, rel=1e-12)

    def test_frame_flip(self, A1, law1):
        u = S.vertical_crack(opening=(0.6, 0.8))
        seg = u.segments[0]
        flipped = S.CrackedDisplacement(u.domain, [S.CrackSegment(seg.p0, seg.p1, (-1.0, 0.0))], u.pieces)
        a = S.evaluate_phi(u, A1, law1, FRACK).as_dict()
        b = S.evaluate_phi(flipped, A1, law1, FRACK).as_dict()
        for k in a:
            assert a[k] == pytest.approx(b[k], abs=1e-14)

    def test_partial_support(self, A1, law1):
        # jump only for y < 0.4
        right = S.Piece.from_expressions("step(0.4 - y) * (0.4 - y)", "0", "x - 0.5")
        u = S.CrackedDisplacement(Rectangle(), [S.CrackSegment((0.5, 0.0), (0.5, 1.0), (1.0, 0.0))],
                                  [right, S.Piece.constant((0.0, 0.0))])
        br = S.evaluate_phi(u, A1, law1, P.zero())
        # the support is {|[u]| > JUMP_TOL}, which ends JUMP_TOL below y = 0.4
        assert br.surface_b == pytest.approx(2.0 / 3.0 * (0.4 - S.JUMP_TOL), abs=1e-13)
        assert br.surface_a == pytest.approx(2.0 * 0.4 ** 2 / 2, abs=1e-10)

    def test_additive_over_subdomains(self, A1, law1):
        right = S.Piece.from_expressions("1 + x * y", "y^2", "x - 0.25")
        left = S.Piece.from_expressions("x^2", "0")
        seg = S.CrackSegment((0.25, 0.0), (0.25, 1.0), (1.0, 0.0))
        whole = S.evaluate_phi(S.CrackedDisplacement(Rectangle(0, 0, 1, 1), [seg], [right, left]),
                               A1, law1, P.zero())
        a = S.evaluate_phi(S.CrackedDisplacement(Rectangle(0, 0, 0.5, 1), [seg], [right, left]),
                           A1, law1, P.zero())
        b = S.evaluate_phi(S.CrackedDisplacement(Rectangle(0.5, 0, 1, 1), [], [right]), A1, law1, P.zero())
        assert whole.total == pytest.approx(a.total + b.total, rel=1e-9)

    def test_disjoint_segments_required(self):
        s1 = S.CrackSegment((0.2, 0.2), (0.8, 0.8))
        s2 = S.CrackSegment((0.2, 0.8), (0.8, 0.2))
        with pytest.raises(InputError):
            S.CrackedDisplacement(Rectangle(), [s1, s2], [S.Piece.constant((0, 0))], sides=[(0, 0), (0, 0)])


class TestBulkQuadrature:
    """Polynomial pieces against closed-form integrals."""

    def test_rectangle_tip_crack(self, A1):
        # e = [[2x, y/2], [y/2, x]], |e|^2 = 5x^2 + y^2/2
        u = S.CrackedDisplacement(Rectangle(), [S.CrackSegment((0.3, 0.2), (0.3, 0.7))],
                                  [S.Piece.from_expressions("x^2", "x*y")], sides=[(0, 0)])
        el, pot = S.bulk_integrals(u, A1, P.zero())
        assert el == pytest.approx(5 / 3 + 1 / 6, abs=1e-10) and pot == 0.0

    def test_disk(self, A1):
        u = S.CrackedDisplacement(Disk(0, 0, 1), [], [S.Piece.from_expressions("x^2", "x*y")])
        el, _ = S.bulk_integrals(u, A1, P.zero())
        assert el == pytest.approx(5 * np.pi / 4 + np.pi / 8, abs=1e-10)

    def test_rounded_rectangle_area(self):
        dom = RoundedRectangle(0, 0, 2, 1, 0.3)
        u = S.CrackedDisplacement(dom, [], [S.Piece.from_expressions("x", "0")])
        el, _ = S.bulk_integrals(u, ElasticTensor.scaled_identity(1.0), P.zero())
        assert el == pytest.approx(dom.area, abs=1e-10)

    def test_isotropic_quadratic(self):
        A = ElasticTensor.isotropic(1.0, 2.0)
        # u = (x y, 0): e = [[y, x/2], [x/2, 0]], A e . e = |e|^2 + tr^2 = y^2 + x^2/2 + y^2
        u = S.CrackedDisplacement(Rectangle(), [], [S.Piece.from_expressions("x*y", "0")])
        el, _ = S.bulk_integrals(u, A, P.zero())
        assert el == pytest.approx(2 / 3 + 1 / 6, abs=1e-10)

    def test_potential_bulk(self, A1):
        F = P.make_fracking(P.PressureLaw.affine_in_v(0.0, 1.0, 0.1))
        # tr e = 2x + x = 3x on the unit square, F = -0.1 * 3x
        u = S.CrackedDisplacement(Rectangle(), [], [S.Piece.from_expressions("x^2", "x*y")])
        _, pot = S.bulk_integrals(u, A1, F)
        assert pot == pytest.approx(-0.15, abs=1e-12)


class TestR:
    def test_matching(self, A1, law1):
        u = S.vertical_crack()
        f = S.Piece.from_expressions("step(x - 0.5)", "0")
        assert S.evaluate_R(u, f, A1, law1, FRACK) == pytest.approx(0.0, abs=1e-12)

    def test_right_edge(self, A1, law1):
        u = S.CrackedDisplacement(Rectangle(), [], [S.Piece.constant((0.0, 0.0))])
        delta = 0.7
        f = S.Piece.from_expressions(f"{delta} * step(x - 1)", "0")
        pa, pb, pf = S.evaluate_R_parts(u, f, A1, law1, FRACK)
        assert pa == pytest.approx(2 * delta, abs=1e-12)
        assert pb == pytest.approx(2 / 3, abs=1e-12)
        # jump f - tr u = delta e1 with outward normal e1: F_inf = -q rho delta
        assert pf == pytest.approx(-0.1 * delta, abs=1e-12)

    @pytest.mark.parametrize("r", [0.5, 3.0])
    def test_scaling(self, A1, law1, r):
        u = S.CrackedDisplacement(Rectangle(), [], [S.Piece.constant((0.0, 0.0))])
        f1 = S.Piece.from_expressions("step(x - 1) * (1 + y)", "0")
        fr = S.Piece.from_expressions(f"{r} * step(x - 1) * (1 + y)", "0")
        a1, b1, c1 = S.evaluate_R_parts(u, f1, A1, law1, FRACK)
        ar, br, cr = S.evaluate_R_parts(u, fr, A1, law1, FRACK)
        assert ar == pytest.approx(r * a1) and cr == pytest.approx(r * c1) and br == pytest.approx(b1)

    def test_sharp_total(self, A1, law1):
        u = S.vertical_crack()
        assert S.sharp_total(u, None, A1, law1, P.zero()).total == pytest.approx(8 / 3)
        f = S.Piece.from_expressions("step(x - 0.5)", "0")
        assert S.sharp_total(u, f, A1, law1, P.zero()).total == pytest.approx(8 / 3)
        aff = S.CrackedDisplacement(Rectangle(), [], [S.Piece.from_expressions("x", "0")])
        assert S.sharp_total(aff, S.Piece.from_expressions("x", "0"), A1, law1, P.zero()).total \
            == pytest.approx(1.0, abs=1e-12)
