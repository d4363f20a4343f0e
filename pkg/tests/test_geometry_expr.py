import numpy as np
import pytest
from hypothesis import given, strategies as st

from gammafrac import geometry as G
from gammafrac.errors import ConfigError, UnsupportedDomainError
from gammafrac.expr import compile_expr


class TestExpr:
    def test_arithmetic(self):
        e = compile_expr("2 * x^2 - y / 4 + (x - 1)")
        assert float(e(x=3.0, y=8.0)) == pytest.approx(18 - 2 + 2)

    def test_functions(self):
        e = compile_expr("step(x - 0.5) + min(x, y) + max(x, y) + sqrt(abs(y))")
        assert float(e(x=0.5, y=-4.0)) == pytest.approx(1 - 4 + 0.5 + 2)
        assert float(e(x=0.49, y=-4.0)) == pytest.approx(0 - 4 + 0.49 + 2)

    @pytest.mark.parametrize("src", ["__import__('os')", "x.real", "[x]", "foo(x)", "z + 1", "x +"])
    def test_rejects(self, src):
        with pytest.raises(ConfigError):
            compile_expr(src)

    def test_broadcast_constant(self):
        assert compile_expr("1")(x=np.zeros((3, 4)), y=np.zeros((3, 4))).shape == (3, 4)

    @given(st.floats(-3, 3), st.floats(-3, 3))
    def test_gradient_matches_fd(self, x, y):
        e = compile_expr("x^3 * y - sqrt(1 + x^2 + y^2) + max(x, 0.5 * y)")
        val, g = e.value_and_grad(x=np.array(x), y=np.array(y))
        h = 1e-6
        if abs(x - 0.5 * y) < 1e-4:
            return
        fx = (e(x=x + h, y=y) - e(x=x - h, y=y)) / (2 * h)
        fy = (e(x=x, y=y + h) - e(x=x, y=y - h)) / (2 * h)
        assert g[0] == pytest.approx(float(fx), rel=1e-6, abs=1e-6)
        assert g[1] == pytest.approx(float(fy), rel=1e-6, abs=1e-6)


class TestDomains:
    def test_rectangle_has_no_projection(self):
        with pytest.raises(UnsupportedDomainError):
            G.Rectangle().project(np.zeros(2))

    def test_rounded_radius_range(self):
        with pytest.raises(UnsupportedDomainError):
            G.RoundedRectangle(0, 0, 1, 1, 0.6)

    @pytest.mark.parametrize("dom", [G.RoundedRectangle(0, 0, 2, 1, 0.3), G.Disk(0.2, -0.1, 0.7)])
    def test_perimeter_and_area(self, dom):
        per = sum(p.length for p in dom.pieces())
        if isinstance(dom, G.Disk):
            assert per == pytest.approx(2 * np.pi * dom.R)
            assert dom.area == pytest.approx(np.pi * dom.R ** 2)
        else:
            r = dom.r
            assert per == pytest.approx(2 * (2 - 2 * r) + 2 * (1 - 2 * r) + 2 * np.pi * r)
            assert dom.area == pytest.approx(2 - (4 - np.pi) * r * r)

    @pytest.mark.parametrize("dom", [G.RoundedRectangle(0, 0, 2, 1, 0.3), G.Disk(0.2, -0.1, 0.7)])
    def test_projection_oracle(self, dom, rng):
        # brute-force nearest boundary point from a dense boundary sample
        pts = np.concatenate([pc.point(np.linspace(0, pc.length, 4000)) for pc in dom.pieces()])
        x0, y0, x1, y1 = dom.bbox
        q = np.stack([rng.uniform(x0 - 0.3, x1 + 0.3, 300), rng.uniform(y0 - 0.3, y1 + 0.3, 300)], -1)
        P, nu, d, _, _ = dom.project(q)
        dist = np.linalg.norm(q[:, None] - pts[None], axis=-1).min(axis=1)
        assert np.allclose(np.abs(d), dist, atol=1e-3)
        assert np.allclose(np.linalg.norm(nu, axis=-1), 1.0)
        assert np.allclose(P + d[:, None] * nu, q, atol=1e-12)
        assert np.allclose(dom.sdf(P), 0.0, atol=1e-12)

    def test_expanded(self):
        dom = G.RoundedRectangle(0, 0, 1, 1, 0.2)
        e = dom.expanded(-0.1)
        p = np.array([[0.5, 0.05], [0.5, 0.15]])
        assert list(e.contains(p)) == [False, True]

    @pytest.mark.parametrize("dom", [G.Rectangle(0, 0, 2, 1), G.RoundedRectangle(0, 0, 2, 1, 0.3),
                                     G.Disk(0, 0, 1)])
    def test_chord_area(self, dom):
        for axis in (0, 1):
            lo_, hi_ = (dom.bbox[0], dom.bbox[2]) if axis == 0 else (dom.bbox[1], dom.bbox[3])
            s, w = G.gauss_legendre(400, lo_, hi_)
            a, b = dom.chord(s, axis)
            assert float(np.sum(w * (b - a))) == pytest.approx(dom.area, rel=1e-4)

    def test_outward_normals(self):
        dom = G.RoundedRectangle(0, 0, 1, 1, 0.2)
        for pc in dom.pieces():
            s = np.linspace(0, pc.length, 7)
            p = pc.point(s) + 1e-3 * pc.normal(s)
            assert np.all(~dom.contains(p))


class TestSegments:
    def test_coordinates(self):
        s, t, dist = G.segment_coordinates(np.array([[0.5, 0.2], [1.5, 0.0]]), (0, 0), (1, 0))
        assert np.allclose(s, [0.5, 1.5]) and np.allclose(t, [0.2, 0.0]) and np.allclose(dist, [0.2, 0.5])

    def test_distance(self):
        assert G.segment_distance((0, 0), (1, 0), (0, 1), (1, 1)) == pytest.approx(1.0)
        assert G.segment_distance((0, 0), (1, 1), (0, 1), (1, 0)) == 0.0
        assert G.segment_distance((0, 0), (1, 0), (2, 0), (3, 0)) == pytest.approx(1.0)

    def test_boundary_quadrature_length(self):
        dom = G.Disk(0, 0, 2)
        pts, w, *_ = G.boundary_quadrature(dom.pieces())
        assert float(np.sum(w)) == pytest.approx(4 * np.pi, rel=1e-12)
