import numpy as np
import pytest
from hypothesis import given, strategies as st

from gammafrac import potentials as P
from gammafrac.errors import ConstructionError, NumericRecessionError
from gammafrac.material import DamageLaw, ElasticTensor, frobenius

ID = np.eye(2)
E1 = np.array([[1.0, 0.0], [0.0, 0.0]])
X0 = np.array([0.3, 0.6])


def five_potentials():
    A = ElasticTensor.isotropic(1.0, 0.5)
    return {
        "fracking_affine": P.make_fracking(P.PressureLaw.affine_in_v(0.5, 0.2, "0.5 + 0.25 * x")),
        "fracking_strain": P.make_fracking(P.PressureLaw.strain_dependent(
            "1 - 0.5 * v", P.TraceLaw(0.2, 0.1), 1.0)),
        "plastic_slip": P.make_plastic_slip("1 + 0.5 * v + 0.25 * x", "smooth"),
        "tresca": P.make_tresca("1 + v", "smooth", A=A),
        "non_interpenetration": P.make_non_interpenetration("1 + y"),
    }


class TestFracking:
    def test_zero_pressure(self):
        F = P.make_fracking(P.PressureLaw.affine_in_v(0.0, 0.0, 1.0))
        assert F(X0, ID, 0.3) == 0.0 and F.recession(X0, ID) == 0.0

    def test_value(self):
        F = P.make_fracking(P.PressureLaw.affine_in_v(1.0, 2.0, 0.1))
        assert float(F(X0, ID, 1.0)) == pytest.approx(-0.6, abs=1e-15)

    def test_recession_negative_sign(self):
        F = P.make_fracking(P.PressureLaw.affine_in_v(3.0, 2.0, 0.1))
        assert float(F.recession(X0, ID)) == pytest.approx(-0.4, abs=1e-15)
        assert float(P.recession_numeric(F, X0, ID)) == pytest.approx(-0.4, abs=1e-12)

    def test_base_point_independence(self):
        F = P.make_fracking(P.PressureLaw.affine_in_v(0.0, 2.0, 0.1))
        assert float(P.recession_numeric(F, X0, ID, 5 * E1)) == pytest.approx(-0.4, abs=1e-12)

    def test_v_coeffs(self, rng):
        F = P.make_fracking(P.PressureLaw.affine_in_v(0.7, 0.2, "1 + x"))
        x = rng.uniform(0, 1, (20, 2))
        Ms = P.random_sym(rng, 20, (-1, 1))
        v = rng.uniform(0, 1, 20)
        c0, c1, c2 = F.v_coeffs(x, Ms)
        assert np.allclose(F(x, Ms, v), c0 + c1 * v + c2 * v * v, rtol=1e-13, atol=1e-14)

    def test_two_rocks_blend(self):
        F = P.make_fracking(P.PressureLaw.two_rocks(P.TraceLaw(1.0), P.TraceLaw(2.0),
                                                    [[0.5, 0.0], [0.5, 1.0]], 0.1))
        on = np.array([0.5, 0.5])
        assert float(F(on, ID, 1.0)) == 0.0
        # rock 1 lies left of the upward interface
        assert float(F(np.array([0.2, 0.5]), ID, 1.0)) == pytest.approx(-2.0)
        assert float(F(np.array([0.8, 0.5]), ID, 1.0)) == pytest.approx(-4.0)
        assert float(F(np.array([0.45, 0.5]), ID, 1.0)) == pytest.approx(-1.0)

    def test_trace_law_convex_and_bounded(self, rng):
        law = P.TraceLaw(1.0, 0.5)
        Ma, Mb = P.random_sym(rng, 1000), P.random_sym(rng, 1000)

        def f(M):
            return -law(M) * P.trace(M)

        mid = f(0.5 * (Ma + Mb))
        avg = 0.5 * (f(Ma) + f(Mb))
        assert np.all(mid <= avg + 1e-10 * (1 + np.abs(avg)))
        assert np.all(np.abs(law(Ma)) <= law.sup)


class TestSlipTresca:
    def test_slip_linear(self, rng):
        F = P.make_plastic_slip(1.0, "linear")
        Ms = P.random_sym(rng, 50)
        assert np.allclose(F(np.zeros((50, 2)), Ms, 0.5), frobenius(Ms))
        assert np.allclose(F.recession(np.zeros((50, 2)), Ms), frobenius(Ms))

    def test_slip_smooth_recession(self):
        F = P.make_plastic_slip(1.0, "smooth")
        assert float(F.recession(X0, 0.7 * E1)) == pytest.approx(0.7)
        assert float(P.recession_numeric(F, X0, 0.7 * E1)) == pytest.approx(0.7, rel=1e-6)
        assert float(F(X0, np.zeros((2, 2)), 0.3)) == 0.0

    def test_superlinear_rejected(self):
        with pytest.raises(ConstructionError):
            P.make_plastic_slip(1.0, lambda t: t * t, g_inf=1.0)

    def test_tresca_spherical(self):
        F = P.make_tresca(1.0, "linear")
        assert float(F(X0, ID, 0.2)) == pytest.approx(0.0, abs=1e-15)

    def test_tresca_diag(self):
        F = P.make_tresca(1.0, "linear")
        assert float(F(X0, np.diag([1.0, -1.0]), 0.5)) == pytest.approx(2.0)

    @given(st.floats(0.01, 100.0))
    def test_tresca_homogeneous(self, t):
        F = P.make_tresca(1.0, "linear")
        M = np.array([[0.3, 0.2], [0.2, -0.1]])
        assert float(F(X0, t * M, 0.0)) == pytest.approx(t * float(F(X0, M, 0.0)), rel=1e-12)


class TestNonInterpenetration:
    def test_sound_state(self, rng):
        F = P.make_non_interpenetration(2.0)
        Ms = P.random_sym(rng, 50)
        assert np.all(F(np.zeros((50, 2)), Ms, 1.0) == 0.0)

    def test_expansion(self):
        F = P.make_non_interpenetration(2.0)
        assert float(F(X0, ID, 0.0)) == 0.0

    def test_compression(self):
        F = P.make_non_interpenetration(3.0)
        assert float(F(X0, -ID, 0.0)) == pytest.approx(6.0)

    def test_negative_p_rejected(self):
        with pytest.raises(ConstructionError):
            P.make_non_interpenetration("x - 0.5")


class TestRecession:
    def test_linear_exact_each_t(self):
        F = P.make_fracking(P.PressureLaw.affine_in_v(0.0, 1.3, 1.0))
        q = P.difference_quotients(F, X0, E1)
        assert np.allclose(q, -1.3, rtol=0, atol=1e-13)

    @pytest.mark.parametrize("name", list(five_potentials()))
    def test_oracle(self, name, rng):
        F = five_potentials()[name]
        x = rng.uniform(0, 1, (1000, 2))
        Ms = P.random_sym(rng, 1000, (-2, 2))
        L = P.random_sym(rng, 1000, (-2, 1))
        exact = F.recession(x, Ms)
        for base in (None, L):
            num = P.recession_numeric(F, x, Ms, base)
            assert np.all(np.abs(num - exact) <= 1e-5 * (1 + np.abs(exact)))

    @pytest.mark.parametrize("name", list(five_potentials()))
    @pytest.mark.parametrize("r", [0.5, 2.0, 7.0])
    def test_homogeneous(self, name, r, rng):
        F = five_potentials()[name]
        x = rng.uniform(0, 1, (100, 2))
        Ms = P.random_sym(rng, 100)
        assert np.allclose(F.recession(x, r * Ms), r * F.recession(x, Ms), rtol=1e-12, atol=1e-12)

    @pytest.mark.parametrize("name", list(five_potentials()))
    def test_quotients_nondecreasing(self, name, rng):
        F = five_potentials()[name]
        x = rng.uniform(0, 1, (200, 2))
        q = P.difference_quotients(F, x, P.random_sym(rng, 200))
        assert np.all(np.diff(q, axis=-1) >= -1e-9 * (1 + np.abs(q[..., 1:])))

    @pytest.mark.parametrize("name", list(five_potentials()))
    def test_sup_affine_form(self, name, rng):
        F = five_potentials()[name]
        x = rng.uniform(0, 1, (50, 2))
        Ms = P.random_sym(rng, 50, (-1, 1))
        assert np.allclose(P.recession_sup_affine(F, x, Ms), F.recession(x, Ms), rtol=1e-4, atol=1e-5)

    def test_nonconvergent_raises(self):
        F = P.PotentialSpec(lambda x, M, v: frobenius(M) ** 1.5, kind="superlinear")
        with pytest.raises(NumericRecessionError):
            P.recession_numeric(F, X0, E1)

    @pytest.mark.parametrize("name", list(five_potentials()))
    def test_lipschitz_in_M(self, name, rng):
        F = five_potentials()[name]
        x = rng.uniform(0, 1, (500, 2))
        Ma, Mb = P.random_sym(rng, 500, (-1, 1)), P.random_sym(rng, 500, (-1, 1))
        diff = np.abs(F(x, Ma, 0.0) - F(x, Mb, 0.0))
        assert np.all(diff <= F.ell * frobenius(Ma - Mb) * (1 + 1e-9) + 1e-12)


class TestValidateBounds:
    def test_zero(self, A1, law1):
        rep = P.validate_bounds(P.zero(), law1, A1, 1.0)
        assert rep.passed and rep.sigma_hat == 0.0 and rep.ell_hat == 0.0

    def test_strong_fracking_fails(self, A1, law1):
        F = P.make_fracking(P.PressureLaw.affine_in_v(0.0, 1.0, 10.0))
        rep = P.validate_bounds(F, law1, A1, 1.0)
        assert not rep.passed and rep.sigma_hat > 2.0

    def test_non_interpenetration_passes(self, A1, law1):
        rep = P.validate_bounds(P.make_non_interpenetration(0.1), law1, A1, 1.0)
        assert rep.passed and rep.sigma_hat == 0.0
        assert rep.ell_hat == pytest.approx(0.1 * np.sqrt(2), rel=0.02)
        assert rep.ell_hat <= 0.1 * np.sqrt(2) * (1 + 1e-12)

    def test_reproducible(self, A1, law1):
        F = five_potentials()["fracking_strain"]
        r1 = P.validate_bounds(F, law1, A1, 1.0, seed=3)
        r2 = P.validate_bounds(F, law1, A1, 1.0, seed=3)
        assert r1 == r2

    def test_sample_floor(self, A1, law1):
        with pytest.raises(Exception):
            P.validate_bounds(P.zero(), law1, A1, 1.0, samples=100)

    @pytest.mark.parametrize("name", list(five_potentials()))
    def test_registered_bounds_hold(self, name, rng):
        F = five_potentials()[name]
        x = rng.uniform(0, 1, (5000, 2))
        Ms = P.random_sym(rng, 5000)
        v = rng.uniform(0, 1, 5000)
        val = F(x, Ms, v)
        n = frobenius(Ms)
        assert np.all(val >= -F.sigma * n * (1 + 1e-9))
        assert np.all(val <= F.ell * n * (1 + 1e-9))
