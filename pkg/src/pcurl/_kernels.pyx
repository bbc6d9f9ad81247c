# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot grid kernels.

Semantics are defined by :mod:`pcurl._kernels_py`; each loop here fuses the
array passes numpy would do separately.  Loops run serially so results are
reproducible bit for bit.
"""
import numpy as np
from libc.math cimport pow, sqrt

BACKEND = "cython"


def curl(const double[:, :, ::1] ux, const double[:, :, ::1] uy,
         const double[:, :, ::1] uz, double hx, double hy, double hz):
    cdef Py_ssize_t nx = ux.shape[0], ny = uy.shape[1], nz = uz.shape[2]
    cdef Py_ssize_t i, j, k
    cdef double ihx = 1.0 / hx, ihy = 1.0 / hy, ihz = 1.0 / hz
    wx_ = np.empty((nx + 1, ny, nz))
    wy_ = np.empty((nx, ny + 1, nz))
    wz_ = np.empty((nx, ny, nz + 1))
    cdef double[:, :, ::1] wx = wx_, wy = wy_, wz = wz_
    for i in range(nx + 1):
        for j in range(ny):
            for k in range(nz):
                wx[i, j, k] = (uz[i, j + 1, k] - uz[i, j, k]) * ihy - (uy[i, j, k + 1] - uy[i, j, k]) * ihz
    for i in range(nx):
        for j in range(ny + 1):
            for k in range(nz):
                wy[i, j, k] = (ux[i, j, k + 1] - ux[i, j, k]) * ihz - (uz[i + 1, j, k] - uz[i, j, k]) * ihx
    for i in range(nx):
        for j in range(ny):
            for k in range(nz + 1):
                wz[i, j, k] = (uy[i + 1, j, k] - uy[i, j, k]) * ihx - (ux[i, j + 1, k] - ux[i, j, k]) * ihy
    return wx_, wy_, wz_


def curl_t(const double[:, :, ::1] wx, const double[:, :, ::1] wy,
           const double[:, :, ::1] wz, double hx, double hy, double hz):
    cdef Py_ssize_t nx = wy.shape[0], ny = wx.shape[1], nz = wx.shape[2]
    cdef Py_ssize_t i, j, k
    cdef double ihx = 1.0 / hx, ihy = 1.0 / hy, ihz = 1.0 / hz
    cdef double a
    ux_ = np.zeros((nx, ny + 1, nz + 1))
    uy_ = np.zeros((nx + 1, ny, nz + 1))
    uz_ = np.zeros((nx + 1, ny + 1, nz))
    cdef double[:, :, ::1] ux = ux_, uy = uy_, uz = uz_
    # scatter each face value into the four edges of its boundary loop
    for i in range(nx + 1):
        for j in range(ny):
            for k in range(nz):
                a = wx[i, j, k]
                uz[i, j + 1, k] += a * ihy
                uz[i, j, k] -= a * ihy
                uy[i, j, k + 1] -= a * ihz
                uy[i, j, k] += a * ihz
    for i in range(nx):
        for j in range(ny + 1):
            for k in range(nz):
                a = wy[i, j, k]
                ux[i, j, k + 1] += a * ihz
                ux[i, j, k] -= a * ihz
                uz[i + 1, j, k] -= a * ihx
                uz[i, j, k] += a * ihx
    for i in range(nx):
        for j in range(ny):
            for k in range(nz + 1):
                a = wz[i, j, k]
                uy[i + 1, j, k] += a * ihx
                uy[i, j, k] -= a * ihx
                ux[i, j + 1, k] -= a * ihy
                ux[i, j, k] += a * ihy
    return ux_, uy_, uz_


def cell_sq(const double[:, :, ::1] wx, const double[:, :, ::1] wy,
            const double[:, :, ::1] wz):
    cdef Py_ssize_t nx = wy.shape[0], ny = wx.shape[1], nz = wx.shape[2]
    cdef Py_ssize_t i, j, k
    s_ = np.empty((nx, ny, nz))
    cdef double[:, :, ::1] s = s_
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                s[i, j, k] = 0.5 * (wx[i, j, k] * wx[i, j, k] + wx[i + 1, j, k] * wx[i + 1, j, k]
                                    + wy[i, j, k] * wy[i, j, k] + wy[i, j + 1, k] * wy[i, j + 1, k]
                                    + wz[i, j, k] * wz[i, j, k] + wz[i, j, k + 1] * wz[i, j, k + 1])
    return s_


cdef void _spread(const double[:, :, ::1] c, const double[:, :, ::1] wx,
                  const double[:, :, ::1] wy, const double[:, :, ::1] wz,
                  double[:, :, ::1] fx, double[:, :, ::1] fy, double[:, :, ::1] fz) noexcept nogil:
    cdef Py_ssize_t nx = c.shape[0], ny = c.shape[1], nz = c.shape[2]
    cdef Py_ssize_t i, j, k
    cdef double lo, hi
    for i in range(nx + 1):
        for j in range(ny):
            for k in range(nz):
                lo = c[i - 1, j, k] if i > 0 else 0.0
                hi = c[i, j, k] if i < nx else 0.0
                fx[i, j, k] = 0.5 * (lo + hi) * wx[i, j, k]
    for i in range(nx):
        for j in range(ny + 1):
            for k in range(nz):
                lo = c[i, j - 1, k] if j > 0 else 0.0
                hi = c[i, j, k] if j < ny else 0.0
                fy[i, j, k] = 0.5 * (lo + hi) * wy[i, j, k]
    for i in range(nx):
        for j in range(ny):
            for k in range(nz + 1):
                lo = c[i, j, k - 1] if k > 0 else 0.0
                hi = c[i, j, k] if k < nz else 0.0
                fz[i, j, k] = 0.5 * (lo + hi) * wz[i, j, k]


def spread(const double[:, :, ::1] c, const double[:, :, ::1] wx,
           const double[:, :, ::1] wy, const double[:, :, ::1] wz):
    fx_ = np.empty_like(np.asarray(wx))
    fy_ = np.empty_like(np.asarray(wy))
    fz_ = np.empty_like(np.asarray(wz))
    _spread(c, wx, wy, wz, fx_, fy_, fz_)
    return fx_, fy_, fz_


def cell_weight(const double[:, :, ::1] s, double p, double eps):
    cdef Py_ssize_t nx = s.shape[0], ny = s.shape[1], nz = s.shape[2]
    cdef Py_ssize_t i, j, k
    cdef double r, e2 = eps * eps, q = 0.5 * (p - 2.0)
    w_ = np.empty((nx, ny, nz))
    cdef double[:, :, ::1] w = w_
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                r = s[i, j, k] + e2
                if p == 2.0:
                    w[i, j, k] = 1.0
                elif r > 0.0:
                    w[i, j, k] = pow(r, q)
                else:
                    w[i, j, k] = 0.0
    return w_


cdef inline double _weight(double r, double p, double q) noexcept nogil:
    # r**q, with the common exponents done without pow()
    if p == 3.0:
        return sqrt(r)
    if p == 4.0:
        return r
    if p == 1.5:
        return 1.0 / sqrt(sqrt(r))
    return pow(r, q)


def energy_flux(const double[:, :, ::1] wx, const double[:, :, ::1] wy,
                const double[:, :, ::1] wz, double p, double eps):
    cdef Py_ssize_t nx = wy.shape[0], ny = wx.shape[1], nz = wx.shape[2]
    cdef Py_ssize_t i, j, k
    cdef double s, r, e2 = eps * eps, ep = pow(eps, p), q = 0.5 * (p - 2.0)
    cdef double total = 0.0
    c_ = np.empty((nx, ny, nz))
    cdef double[:, :, ::1] c = c_
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                s = 0.5 * (wx[i, j, k] * wx[i, j, k] + wx[i + 1, j, k] * wx[i + 1, j, k]
                           + wy[i, j, k] * wy[i, j, k] + wy[i, j + 1, k] * wy[i, j + 1, k]
                           + wz[i, j, k] * wz[i, j, k] + wz[i, j, k + 1] * wz[i, j, k + 1])
                r = s + e2
                if p == 2.0:
                    c[i, j, k] = 1.0
                    total += 0.5 * r - 0.5 * e2
                elif r > 0.0:
                    c[i, j, k] = _weight(r, p, q)
                    total += (r * c[i, j, k] - ep) / p
                else:
                    c[i, j, k] = 0.0
                    total += -ep / p
    fx_ = np.empty_like(np.asarray(wx))
    fy_ = np.empty_like(np.asarray(wy))
    fz_ = np.empty_like(np.asarray(wz))
    _spread(c, wx, wy, wz, fx_, fy_, fz_)
    return total, fx_, fy_, fz_


def laplacian(const double[:, :, ::1] phi, double hx, double hy, double hz):
    cdef Py_ssize_t nx = phi.shape[0], ny = phi.shape[1], nz = phi.shape[2]
    cdef Py_ssize_t i, j, k
    cdef double ax = 1.0 / (hx * hx), ay = 1.0 / (hy * hy), az = 1.0 / (hz * hz)
    cdef double c
    out_ = np.zeros((nx, ny, nz))
    cdef double[:, :, ::1] out = out_
    for i in range(1, nx - 1):
        for j in range(1, ny - 1):
            for k in range(1, nz - 1):
                c = phi[i, j, k]
                out[i, j, k] = ((phi[i + 1, j, k] - 2 * c + phi[i - 1, j, k]) * ax
                                + (phi[i, j + 1, k] - 2 * c + phi[i, j - 1, k]) * ay
                                + (phi[i, j, k + 1] - 2 * c + phi[i, j, k - 1]) * az)
    return out_


def wdot(const double[::1] a, const double[::1] b, const double[::1] w):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef double total = 0.0
    for i in range(n):
        total += a[i] * b[i] * w[i]
    return total
