"""
Grid kernels for bilinear (Q1) elements on a uniform square grid.

Every kernel has a numba implementation and a pure-numpy twin with identical
results; :func:`use_backend` switches between them and ``GAMMAFRAC_NUMBA=0``
selects numpy at import time.  Node arrays are ``(ny, nx)``; element arrays
are ``(ny - 1, nx - 1, 4, ...)`` with the four Gauss points ordered
counter-clockwise starting at the lower-left one.
"""

import numpy as np

from . import _accel
from ._accel import njit

# local node order: (-1,-1), (1,-1), (1,1), (-1,1)
_XI = np.array([-1.0, 1.0, 1.0, -1.0])
_ETA = np.array([-1.0, -1.0, 1.0, 1.0])
_G = 1.0 / np.sqrt(3.0)
GAUSS_XI = _G * _XI
GAUSS_ETA = _G * _ETA

# shape values and reference derivatives at the Gauss points: (gauss, node)
N_REF = 0.25 * (1 + np.outer(GAUSS_XI, _XI)) * (1 + np.outer(GAUSS_ETA, _ETA))
DXI_REF = 0.25 * _XI[None, :] * (1 + np.outer(GAUSS_ETA, _ETA))
DETA_REF = 0.25 * _ETA[None, :] * (1 + np.outer(GAUSS_XI, _XI))

_SQRT2 = np.sqrt(2.0)
_INV_SQRT2 = 1.0 / _SQRT2


def b_matrices(h):
    """Strain-displacement matrices (4 gauss, 3 mandel, 8 dof), dof = (ux0, uy0, ux1, ...)."""
    dx = DXI_REF * (2.0 / h)
    dy = DETA_REF * (2.0 / h)
    B = np.zeros((4, 3, 8))
    B[:, 0, 0::2] = dx
    B[:, 1, 1::2] = dy
    B[:, 2, 0::2] = _INV_SQRT2 * dy
    B[:, 2, 1::2] = _INV_SQRT2 * dx
    return B


def _corners(a):
    return np.stack([a[:-1, :-1], a[:-1, 1:], a[1:, 1:], a[1:, :-1]], axis=-1)


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def _strains_np(ux, uy, h):
    cx = _corners(ux)
    cy = _corners(uy)
    dx = DXI_REF * (2.0 / h)
    dy = DETA_REF * (2.0 / h)
    exx = cx @ dx.T
    eyy = cy @ dy.T
    exy = _INV_SQRT2 * (cx @ dy.T + cy @ dx.T)
    return np.stack([exx, eyy, exy], axis=-1)


def _interp_np(v):
    # written relative to the first corner so constant fields stay exact
    c = _corners(v)
    return c[..., :1] + (c[..., 1:] - c[..., :1]) @ N_REF[:, 1:].T


def _stiffness_np(vg, BDB):
    return np.einsum("ijg,gab->ijab", vg, BDB)


def _restore_np(v, step, pinned):
    v = v.copy()
    free = ~pinned
    while True:
        w = v.copy()
        p = np.pad(v, 1, constant_values=np.inf)
        ny, nx = v.shape
        for dj in (-1, 0, 1):
            for di in (-1, 0, 1):
                if dj == 0 and di == 0:
                    continue
                nb = p[1 + dj:1 + dj + ny, 1 + di:1 + di + nx]
                np.minimum(w, nb + step, out=w)
        w[~free] = v[~free]
        if np.array_equal(w, v):
            return v
        v = w


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

@njit
def _strains_nb(ux, uy, h, dxi, deta):
    ny, nx = ux.shape
    out = np.empty((ny - 1, nx - 1, 4, 3))
    s = 2.0 / h
    r = 1.0 / np.sqrt(2.0)
    cx = np.empty(4)
    cy = np.empty(4)
    for j in range(ny - 1):
        for i in range(nx - 1):
            cx[0] = ux[j, i]
            cx[1] = ux[j, i + 1]
            cx[2] = ux[j + 1, i + 1]
            cx[3] = ux[j + 1, i]
            cy[0] = uy[j, i]
            cy[1] = uy[j, i + 1]
            cy[2] = uy[j + 1, i + 1]
            cy[3] = uy[j + 1, i]
            for g in range(4):
                a = 0.0
                b = 0.0
                c = 0.0
                d = 0.0
                for k in range(4):
                    gx = dxi[g, k] * s
                    gy = deta[g, k] * s
                    a += cx[k] * gx
                    b += cy[k] * gy
                    c += cx[k] * gy
                    d += cy[k] * gx
                out[j, i, g, 0] = a
                out[j, i, g, 1] = b
                out[j, i, g, 2] = r * (c + d)
    return out


@njit
def _interp_nb(v, nref):
    ny, nx = v.shape
    out = np.empty((ny - 1, nx - 1, 4))
    for j in range(ny - 1):
        for i in range(nx - 1):
            c0 = v[j, i]
            c1 = v[j, i + 1]
            c2 = v[j + 1, i + 1]
            c3 = v[j + 1, i]
            for g in range(4):
                out[j, i, g] = c0 + (nref[g, 1] * (c1 - c0) + nref[g, 2] * (c2 - c0)
                                     + nref[g, 3] * (c3 - c0))
    return out


@njit
def _stiffness_nb(vg, BDB):
    ny, nx = vg.shape[0], vg.shape[1]
    out = np.zeros((ny, nx, 8, 8))
    for j in range(ny):
        for i in range(nx):
            for g in range(4):
                w = vg[j, i, g]
                for a in range(8):
                    for b in range(8):
                        out[j, i, a, b] += w * BDB[g, a, b]
    return out


@njit
def _restore_nb(v, step, pinned):
    v = v.copy()
    ny, nx = v.shape
    changed = True
    while changed:
        changed = False
        for j in range(ny):
            for i in range(nx):
                if pinned[j, i]:
                    continue
                best = v[j, i]
                for dj, di in ((-1, -1), (-1, 0), (-1, 1), (0, -1)):
                    jj = j + dj
                    ii = i + di
                    if 0 <= jj < ny and 0 <= ii < nx:
                        c = v[jj, ii] + step
                        if c < best:
                            best = c
                if best < v[j, i]:
                    v[j, i] = best
                    changed = True
        for j in range(ny - 1, -1, -1):
            for i in range(nx - 1, -1, -1):
                if pinned[j, i]:
                    continue
                best = v[j, i]
                for dj, di in ((1, 1), (1, 0), (1, -1), (0, 1)):
                    jj = j + dj
                    ii = i + di
                    if 0 <= jj < ny and 0 <= ii < nx:
                        c = v[jj, ii] + step
                        if c < best:
                            best = c
                if best < v[j, i]:
                    v[j, i] = best
                    changed = True
    return v


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

_BACKEND = "numba" if _accel.USE_NUMBA else "numpy"


def backend():
    return _BACKEND


def use_backend(name):
    """Select ``"numba"`` or ``"numpy"``; returns the previous backend."""
    global _BACKEND
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not _accel.HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    prev, _BACKEND = _BACKEND, name
    return prev


def gauss_strains(ux, uy, h):
    """Mandel strains (ny-1, nx-1, 4, 3) of the bilinear interpolant."""
    ux = np.ascontiguousarray(ux, dtype=float)
    uy = np.ascontiguousarray(uy, dtype=float)
    if _BACKEND == "numba":
        return _strains_nb(ux, uy, float(h), DXI_REF, DETA_REF)
    return _strains_np(ux, uy, h)


def gauss_values(v):
    """Bilinear interpolation of a nodal field at the Gauss points."""
    v = np.ascontiguousarray(v, dtype=float)
    if _BACKEND == "numba":
        return _interp_nb(v, N_REF)
    return _interp_np(v)


def element_stiffness(vg, BDB):
    """Per-element 8x8 matrices sum_g vg[g] * BDB[g] (gauss weights folded into BDB)."""
    vg = np.ascontiguousarray(vg, dtype=float)
    if _BACKEND == "numba":
        return _stiffness_nb(vg, np.ascontiguousarray(BDB))
    return _stiffness_np(vg, BDB)


def lipschitz_restore(v, step, pinned):
    """Largest field below ``v`` whose 8-neighbour differences are <= ``step``.

    Pinned nodes keep their values but still constrain their neighbours.
    """
    v = np.ascontiguousarray(v, dtype=float)
    pinned = np.ascontiguousarray(pinned, dtype=np.bool_)
    if _BACKEND == "numba":
        return _restore_nb(v, float(step), pinned)
    return _restore_np(v, float(step), pinned)
