"""Brute-force 2D p-Laplace Dirichlet solver used as a cross-check.

For a source ``(0, 0, f(x, y))`` independent of ``z`` the 3D solution is
``(0, 0, phi(x, y))`` with

    -div(|grad phi|^(p-2) grad phi) = f,   phi = 0 on the boundary,

and ``|curl u| = |grad phi|``.  This module solves that scalar problem with
nothing in common with :mod:`pcurl.solver`: bilinear elements with 2x2 Gauss
quadrature for the energy, and Barzilai-Borwein gradient descent.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import ContractError

_GP = (0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0))


class OracleError(RuntimeError):
    def __init__(self, message, solution=None, grad_norm=None):
        super().__init__(message)
        self.solution = solution
        self.grad_norm = grad_norm


@dataclass(frozen=True)
class Grid2D:
    lengths: tuple[float, float]
    shape: tuple[int, int]

    def __post_init__(self):
        if len(self.shape) != 2 or min(self.shape) < 2:
            raise ContractError(f"2D grid needs two resolutions >= 2, got {self.shape}")
        if min(self.lengths) <= 0:
            raise ContractError("2D grid lengths must be positive")

    @classmethod
    def square(cls, n, length=1.0):
        return cls((float(length), float(length)), (int(n), int(n)))

    @property
    def spacing(self):
        return self.lengths[0] / self.shape[0], self.lengths[1] / self.shape[1]

    @property
    def node_shape(self):
        return self.shape[0] + 1, self.shape[1] + 1

    def nodes(self):
        hx, hy = self.spacing
        x = np.arange(self.shape[0] + 1) * hx
        y = np.arange(self.shape[1] + 1) * hy
        return np.meshgrid(x, y, indexing="ij")


@dataclass
class Scalar2DField:
    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        self.values = np.array(self.values, dtype=np.float64)
        if self.values.shape != self.grid.node_shape:
            raise ContractError(f"2D field shape {self.values.shape} != {self.grid.node_shape}")
        if not np.all(np.isfinite(self.values)):
            raise ContractError("2D field must be finite")

    @classmethod
    def sample(cls, grid: Grid2D, fn):
        X, Y = grid.nodes()
        return cls(grid, np.broadcast_to(fn(X, Y), X.shape))


def _gauss_gradients(phi, hx, hy):
    a = phi[1:, :-1] - phi[:-1, :-1]  # x-difference along the lower edge
    b = phi[1:, 1:] - phi[:-1, 1:]  # upper edge
    c = phi[:-1, 1:] - phi[:-1, :-1]  # y-difference along the left edge
    d = phi[1:, 1:] - phi[1:, :-1]  # right edge
    out = []
    for xi in _GP:
        for eta in _GP:
            out.append((xi, eta, ((1 - eta) * a + eta * b) / hx, ((1 - xi) * c + xi * d) / hy))
    return out


def energy_and_gradient(phi, f, p, eps, grid: Grid2D):
    """Energy and its Euclidean gradient with respect to the interior node values."""
    hx, hy = grid.spacing
    wq = 0.25 * hx * hy
    e2 = eps * eps
    E = 0.0
    G = np.zeros_like(phi)
    for xi, eta, gx, gy in _gauss_gradients(phi, hx, hy):
        r = gx * gx + gy * gy + e2
        E += wq * float(((r ** (0.5 * p) - eps ** p) / p).sum())
        with np.errstate(divide="ignore", invalid="ignore"):
            k = np.where(r > 0, r ** (0.5 * p - 1.0), 0.0) * wq
        kx = k * gx / hx
        ky = k * gy / hy
        # d gx / d phi at the four corners, then d gy / d phi
        G[:-1, :-1] += -(1 - eta) * kx - (1 - xi) * ky
        G[1:, :-1] += (1 - eta) * kx - xi * ky
        G[:-1, 1:] += -eta * kx + (1 - xi) * ky
        G[1:, 1:] += eta * kx + xi * ky
    mass = hx * hy
    E -= mass * float((f[1:-1, 1:-1] * phi[1:-1, 1:-1]).sum())
    G -= mass * f
    G[0, :] = G[-1, :] = G[:, 0] = G[:, -1] = 0.0
    return E, G


def solve_plaplace(f2d: Scalar2DField, p: float, tol: float = 1e-9, grid: Grid2D | None = None, *,
                   eps: float | None = None, max_iters: int = 500000) -> Scalar2DField:
    """Minimise ``sum (1/p)|grad phi|^p - f phi`` over zero-boundary node fields.

    Stops when the mass-scaled gradient norm drops below
    ``tol * max(1, ||f||)``.  ``eps`` regularises ``|grad phi|``; it defaults
    to 0 for ``p >= 2`` and must be given for ``p < 2``.
    """
    grid = grid or f2d.grid
    if f2d.grid != grid:
        raise ContractError("source lives on a different 2D grid")
    if not p > 1:
        raise ContractError(f"p must be > 1, got {p}")
    if eps is None:
        if p < 2:
            raise ContractError("p < 2 needs a positive eps")
        eps = 0.0
    f = f2d.values
    hx, hy = grid.spacing
    mass = hx * hy
    fnorm = np.sqrt(mass * float((f[1:-1, 1:-1] ** 2).sum()))
    stop = tol * max(1.0, fnorm)
    phi = np.zeros(grid.node_shape)
    if not np.any(f[1:-1, 1:-1]):
        return Scalar2DField(grid, phi)

    def riesz_norm(G):
        return np.sqrt(float((G * G).sum()) / mass)

    _, G = energy_and_gradient(phi, f, p, eps, grid)
    step = 0.1 * min(hx, hy) ** 2 / mass
    for it in range(max_iters):
        gn = riesz_norm(G)
        if gn <= stop:
            return Scalar2DField(grid, phi)
        phi_new = phi - step * G
        _, G_new = energy_and_gradient(phi_new, f, p, eps, grid)
        s = phi_new - phi
        y = G_new - G
        sy = float((s * y).sum())
        if sy > 0:
            # alternate the two Barzilai-Borwein step lengths
            step = float((s * s).sum()) / sy if it % 2 == 0 else sy / float((y * y).sum())
        else:
            step *= 0.5
        phi, G = phi_new, G_new
    raise OracleError(f"2D oracle did not converge in {max_iters} iterations (gradient {gn:.3e})",
                      Scalar2DField(grid, phi), gn)


def cell_gradient_magnitude(phi: Scalar2DField) -> np.ndarray:
    """Per cell: root of the mean squared x-differences plus mean squared y-differences.

    This is the same cell formula the 3D solver applies to ``curl u`` of the
    extruded field, so the comparison below is apples to apples.
    """
    hx, hy = phi.grid.spacing
    v = phi.values
    dx2 = (np.diff(v, axis=0) / hx) ** 2
    dy2 = (np.diff(v, axis=1) / hy) ** 2
    return np.sqrt(0.5 * (dx2[:, :-1] + dx2[:, 1:]) + 0.5 * (dy2[:-1, :] + dy2[1:, :]))


@dataclass(frozen=True)
class Discrepancy:
    field: float  # max |<u_z>_z - phi| / max |phi|
    magnitude: float  # relative gap between the largest cell magnitudes

    @property
    def value(self) -> float:
        return max(self.field, self.magnitude)


def compare_reduction(result3d, result2d: Scalar2DField) -> Discrepancy:
    """Compare a z-invariant 3D solve with the 2D oracle on the same horizontal grid."""
    u = result3d.u
    g = u.grid
    if g.shape[:2] != result2d.grid.shape or not np.allclose(g.lengths[:2], result2d.grid.lengths):
        raise ContractError(
            f"horizontal grid {g.shape[:2]} / {g.lengths[:2]} does not match 2D grid "
            f"{result2d.grid.shape} / {result2d.grid.lengths}"
        )
    uz = u.components[2].mean(axis=2)
    phi = result2d.values
    scale = np.abs(phi).max()
    if scale == 0:
        field = float(np.abs(uz).max())
    else:
        field = float(np.abs(uz - phi).max() / scale)
    m3 = float(result3d.curl_mag.data.max())
    m2 = float(cell_gradient_magnitude(result2d).max())
    magnitude = abs(m3 - m2) / m2 if m2 > 0 else abs(m3)
    return Discrepancy(field, magnitude)
