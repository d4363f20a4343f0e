"""
Material data
=============

The elasticity tensor acting on symmetric 2x2 strains, the damage law psi and
the closed-form constants derived from them (surface coefficients ``a``, ``b``
and the admissible lower-growth threshold for the potential).

Symmetric matrices are handled in Mandel form ``(M11, M22, sqrt(2) M12)`` so
that the Frobenius product becomes the Euclidean one and the tensor is a
symmetric 3x3 matrix.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import InfeasibleSigmaError, InputError

_SQRT2 = np.sqrt(2.0)
SYM_TOL = 1e-12


def check_symmetric(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.shape[-2:] != (2, 2):
        raise InputError(f"expected (..., 2, 2) matrices, got shape {M.shape}")
    skew = np.abs(M[..., 0, 1] - M[..., 1, 0])
    scale = np.maximum(1.0, np.abs(M).max(axis=(-2, -1)))
    if np.any(skew > SYM_TOL * scale):
        raise InputError("matrix is not symmetric within 1e-12")
    return M


def to_mandel(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    off = 0.5 * (M[..., 0, 1] + M[..., 1, 0])
    return np.stack([M[..., 0, 0], M[..., 1, 1], _SQRT2 * off], axis=-1)


def from_mandel(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    off = m[..., 2] / _SQRT2
    row0 = np.stack([m[..., 0], off], axis=-1)
    row1 = np.stack([off, m[..., 1]], axis=-1)
    return np.stack([row0, row1], axis=-2)


def frobenius(M: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(np.asarray(M, dtype=float) ** 2, axis=(-2, -1)))


@dataclass(frozen=True)
class ElasticTensor:
    """Constant elasticity tensor on symmetric 2x2 matrices.

    Use the constructors :meth:`isotropic`, :meth:`scaled_identity` or
    :meth:`from_mandel_matrix`.  ``kappa`` is always computed from the
    eigenvalues of the Mandel matrix; a user value is only accepted when it is
    a valid ellipticity constant.
    """

    kind: str
    mandel: np.ndarray = field(repr=False)
    params: dict = field(default_factory=dict)
    kappa: float = 0.0

    def __post_init__(self):
        D = np.asarray(self.mandel, dtype=float)
        if D.shape != (3, 3) or not np.allclose(D, D.T, atol=1e-14):
            raise InputError("Mandel matrix must be symmetric 3x3")
        w = np.linalg.eigvalsh(D)
        if w[0] <= 0:
            raise InputError("elasticity tensor is not positive definite")
        object.__setattr__(self, "mandel", D)
        kappa = max(w[-1], 1.0 / w[0])
        if self.kappa:
            if self.kappa < kappa * (1 - 1e-12):
                raise InputError(
                    f"kappa={self.kappa} violates ellipticity (needs >= {kappa:.6g})"
                )
        else:
            object.__setattr__(self, "kappa", float(kappa))

    @classmethod
    def isotropic(cls, mu: float, lam: float = 0.0, kappa: float = 0.0) -> "ElasticTensor":
        """A M = mu M + (lam / 2) tr(M) Id."""
        if mu <= 0 or lam < 0:
            raise InputError("isotropic tensor needs mu > 0 and lam >= 0")
        D = mu * np.eye(3)
        D[:2, :2] += 0.5 * lam
        return cls("isotropic", D, {"mu": float(mu), "lam": float(lam)}, kappa)

    @classmethod
    def scaled_identity(cls, c: float = 1.0, kappa: float = 0.0) -> "ElasticTensor":
        if c <= 0:
            raise InputError("scaled identity needs c > 0")
        return cls("scaled_identity", c * np.eye(3), {"c": float(c)}, kappa)

    @classmethod
    def from_mandel_matrix(cls, D, kappa: float = 0.0) -> "ElasticTensor":
        return cls("anisotropic", np.asarray(D, dtype=float), {}, kappa)

    @property
    def operator_norm(self) -> float:
        return float(np.linalg.eigvalsh(self.mandel)[-1])

    def apply(self, M: np.ndarray) -> np.ndarray:
        M = check_symmetric(M)
        return from_mandel(to_mandel(M) @ self.mandel)

    def density(self, M: np.ndarray) -> np.ndarray:
        """A M . M (vectorized over leading axes)."""
        m = to_mandel(check_symmetric(M))
        return np.einsum("...i,ij,...j->...", m, self.mandel, m)


def apply_A(A: ElasticTensor, M) -> np.ndarray:
    return A.apply(M)


def elastic_density(A: ElasticTensor, M) -> np.ndarray:
    return A.density(M)


# ---------------------------------------------------------------------------
# Damage law
# ---------------------------------------------------------------------------

_CHECK_POINTS = 1001


@dataclass(frozen=True)
class DamageLaw:
    """Decreasing convex damage potential psi on [0, 1] with psi(1) = 0.

    ``kind`` is ``"quadratic"`` (psi = (1 - v)^2), ``"tabulated"`` (piecewise
    linear through a table) or ``"custom"`` (any callable).
    """

    psi: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    alpha: float
    psi0: float
    int_psi: float
    kind: str = "custom"
    table: Optional[tuple] = field(default=None, repr=False)

    def __post_init__(self):
        if not self.alpha > 0:
            raise InputError("alpha must be positive")
        t = np.linspace(0.0, 1.0, _CHECK_POINTS)
        vals = np.asarray(self.psi(t), dtype=float)
        if float(self.psi(np.array([1.0]))[0]) != 0.0:
            raise InputError("psi(1) must be exactly 0")
        scale = max(1.0, float(np.abs(vals).max()))
        if np.any(np.diff(vals) > 1e-12 * scale):
            raise InputError("psi must be non-increasing on [0, 1]")
        if np.any(np.diff(vals, 2) < -1e-9 * scale):
            raise InputError("psi must be convex on [0, 1]")

    # constructors -----------------------------------------------------------
    @classmethod
    def quadratic(cls, alpha: float = 1.0) -> "DamageLaw":
        return cls(_quadratic_psi, float(alpha), 1.0, 1.0 / 3.0, "quadratic")

    @classmethod
    def tabulated(cls, v, psi_values, alpha: float = 1.0) -> "DamageLaw":
        v = np.asarray(v, dtype=float)
        p = np.asarray(psi_values, dtype=float)
        order = np.argsort(v)
        v, p = v[order], p[order]
        if v[0] != 0.0 or v[-1] != 1.0:
            raise InputError("psi table must span [0, 1]")

        def psi(x, _v=v, _p=p):
            return np.interp(x, _v, _p)

        # the trapezoid rule is exact for the interpolant
        return cls(psi, float(alpha), float(p[0]), float(np.trapezoid(p, v)),
                   "tabulated", (v, p))

    @classmethod
    def from_callable(cls, psi, alpha: float = 1.0, int_psi: Optional[float] = None):
        def wrapped(x, _f=psi):
            return np.asarray(_f(np.asarray(x, dtype=float)), dtype=float) * np.ones_like(x, dtype=float)

        if int_psi is None:
            int_psi, _ = integrate.quad(lambda s: float(wrapped(np.array([s]))[0]), 0.0, 1.0,
                                        epsabs=0.0, epsrel=1e-10, limit=200)
        psi0 = float(wrapped(np.array([0.0]))[0])
        return cls(wrapped, float(alpha), psi0, float(int_psi), "custom")

    # derived quantities -----------------------------------------------------
    def __call__(self, v):
        return self.psi(np.asarray(v, dtype=float))

    def primitive(self, t):
        """h(t) = int_0^t psi."""
        t = np.asarray(t, dtype=float)
        if self.kind == "quadratic":
            return (1.0 - (1.0 - t) ** 3) / 3.0
        if self.kind == "tabulated":
            v, p = self.table
            cum = np.concatenate([[0.0], np.cumsum(0.5 * (p[1:] + p[:-1]) * np.diff(v))])
            k = np.clip(np.searchsorted(v, t, side="right") - 1, 0, len(v) - 2)
            pt = np.interp(t, v, p)
            return cum[k] + 0.5 * (p[k] + pt) * (t - v[k])
        out = np.empty_like(t)
        for i, ti in np.ndenumerate(t):
            out[i] = integrate.quad(lambda s: float(self.psi(np.array([s]))[0]), 0.0, ti,
                                    epsabs=0.0, epsrel=1e-10, limit=200)[0]
        return out

    @property
    def is_zero(self) -> bool:
        return self.psi0 == 0.0


def _quadratic_psi(v):
    return (1.0 - np.asarray(v, dtype=float)) ** 2


def coefficients(law: DamageLaw) -> tuple[float, float]:
    """Surface coefficients ``a = 2 sqrt(alpha psi(0))`` and ``b = 2 int_0^1 psi``."""
    return 2.0 * np.sqrt(law.alpha * law.psi0), 2.0 * law.int_psi


# ---------------------------------------------------------------------------
# Admissible lower bound on the potential
# ---------------------------------------------------------------------------

LAMBDA_MIN = 1e-6
SCAN_POINTS = 1024


def _threshold_integrand(law: DamageLaw, kappa: float, area: float):
    def g(lam):
        lam = np.asarray(lam, dtype=float)
        p = np.maximum(law(lam), 0.0)
        return 2.0 * np.sqrt(law.alpha * p) / (
            np.sqrt(kappa) * (1.0 + 2.0 * np.sqrt(law.alpha * area * p / lam)))
    return g


def sigma_max(law: DamageLaw, A: ElasticTensor, domain_area: float) -> float:
    """Largest admissible linear lower-growth constant of the potential.

    Maximizes ``2 sqrt(alpha psi(l)) / (sqrt(kappa) (1 + 2 sqrt(alpha |Omega| psi(l) / l)))``
    over l in (0, 1): a 1024-point scan starting at 1e-6 brackets the peak,
    golden-section search refines it to |dl| <= 1e-8.
    """
    if not domain_area > 0:
        raise InputError("domain_area must be positive")
    if law.is_zero and not np.any(law(np.linspace(0, 1, 65)) > 0):
        warnings.warn("potential must be negative-part free: psi vanishes identically",
                      stacklevel=2)
        return 0.0
    g = _threshold_integrand(law, A.kappa, domain_area)
    lam = np.linspace(LAMBDA_MIN, 1.0, SCAN_POINTS)
    vals = g(lam)
    k = int(np.argmax(vals))
    best = float(vals[k])
    lo = lam[max(k - 1, 0)]
    hi = lam[min(k + 1, SCAN_POINTS - 1)]
    if hi - lo > 0:
        x = _golden(lambda s: -float(g(s)), lo, hi, 1e-8)
        best = max(best, float(g(x)))
    return best


def _golden(f, a, b, tol):
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def sigma_envelope(law: DamageLaw, A: ElasticTensor) -> float:
    """Analytic upper envelope 2 sqrt(alpha psi(0) / kappa) of :func:`sigma_max`."""
    return 2.0 * np.sqrt(law.alpha * law.psi0 / A.kappa)


def energy_bound_constant(sigma: float, law: DamageLaw, A: ElasticTensor,
                          domain_area: float) -> float:
    """Constant C with W_eps <= C (F_eps + 1) for potentials bounded below by -sigma |M|."""
    if sigma < 0:
        raise InputError("sigma must be non-negative")
    if sigma == 0:
        return 1.0
    smax = sigma_max(law, A, domain_area)
    if sigma >= smax:
        raise InfeasibleSigmaError(
            f"sigma={sigma:.6g} is not below the admissible threshold {smax:.6g}")
    return 1.0 / (1.0 - sigma / smax)
