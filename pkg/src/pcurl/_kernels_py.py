"""Pure numpy implementations of the grid kernels.

This module is the fallback used when the compiled ``_kernels`` extension is
not importable.  Both backends take and return C-contiguous float64 arrays
laid out as in :mod:`pcurl.grid` and must agree to round-off.
"""
import numpy as np

BACKEND = "python"


def _d(a, axis, h):
    return np.diff(a, axis=axis) / h


def _dt(b, axis, h):
    # transpose of the forward difference _d: output is one longer along axis
    shape = list(b.shape)
    shape[axis] += 1
    out = np.zeros(shape)
    lo = [slice(None)] * 3
    hi = [slice(None)] * 3
    lo[axis] = slice(0, -1)
    hi[axis] = slice(1, None)
    out[tuple(lo)] -= b
    out[tuple(hi)] += b
    return out / h


def curl(ux, uy, uz, hx, hy, hz):
    wx = _d(uz, 1, hy) - _d(uy, 2, hz)
    wy = _d(ux, 2, hz) - _d(uz, 0, hx)
    wz = _d(uy, 0, hx) - _d(ux, 1, hy)
    return wx, wy, wz


def curl_t(wx, wy, wz, hx, hy, hz):
    ux = _dt(wy, 2, hz) - _dt(wz, 1, hy)
    uy = _dt(wz, 0, hx) - _dt(wx, 2, hz)
    uz = _dt(wx, 1, hy) - _dt(wy, 0, hx)
    return ux, uy, uz


def cell_sq(wx, wy, wz):
    sx = wx * wx
    sy = wy * wy
    sz = wz * wz
    return 0.5 * (sx[:-1] + sx[1:] + sy[:, :-1] + sy[:, 1:] + sz[:, :, :-1] + sz[:, :, 1:])


def spread(c, wx, wy, wz):
    """Faces get half the sum of their adjacent cell values, times ``w``."""
    fx = np.zeros(wx.shape)
    fx[:-1] += c
    fx[1:] += c
    fy = np.zeros(wy.shape)
    fy[:, :-1] += c
    fy[:, 1:] += c
    fz = np.zeros(wz.shape)
    fz[:, :, :-1] += c
    fz[:, :, 1:] += c
    return 0.5 * fx * wx, 0.5 * fy * wy, 0.5 * fz * wz


def cell_weight(s, p, eps):
    """``(s + eps^2)^((p-2)/2)``, with zero where it would be ``0**negative``."""
    r = s + eps * eps
    if p == 2.0:
        return np.ones_like(s)
    if p > 2.0:
        return r ** (0.5 * (p - 2.0))
    out = np.zeros_like(s)
    pos = r > 0
    out[pos] = r[pos] ** (0.5 * (p - 2.0))
    return out


def energy_flux(wx, wy, wz, p, eps):
    """Sum of cell energy densities and the weighted face flux.

    The density is ``((s + eps^2)^(p/2) - eps^p) / p`` with ``s`` the
    cell-averaged squared magnitude; the flux is :func:`spread` of the
    density's derivative with respect to ``s`` (times two).
    """
    s = cell_sq(wx, wy, wz)
    r = s + eps * eps
    dens = (r ** (0.5 * p) - eps ** p) / p
    fx, fy, fz = spread(cell_weight(s, p, eps), wx, wy, wz)
    return float(dens.sum()), fx, fy, fz


def divergence(ux, uy, uz, hx, hy, hz):
    # zero padding outside the box, so boundary nodes see one-sided fluxes
    return -(_dt(ux, 0, hx) + _dt(uy, 1, hy) + _dt(uz, 2, hz))


def gradient(phi, hx, hy, hz):
    return _d(phi, 0, hx), _d(phi, 1, hy), _d(phi, 2, hz)


def laplacian(phi, hx, hy, hz):
    """7-point Laplacian on interior nodes; boundary entries of the result are 0."""
    out = np.zeros(phi.shape)
    c = phi[1:-1, 1:-1, 1:-1]
    out[1:-1, 1:-1, 1:-1] = (
        (phi[2:, 1:-1, 1:-1] - 2 * c + phi[:-2, 1:-1, 1:-1]) / (hx * hx)
        + (phi[1:-1, 2:, 1:-1] - 2 * c + phi[1:-1, :-2, 1:-1]) / (hy * hy)
        + (phi[1:-1, 1:-1, 2:] - 2 * c + phi[1:-1, 1:-1, :-2]) / (hz * hz)
    )
    return out


def wdot(a, b, w):
    """Weighted inner product ``sum(a * b * w)`` of flat arrays."""
    return float((a * b * w).sum())
