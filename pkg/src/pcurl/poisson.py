"""Dirichlet Poisson solves, the discrete Leray projector, and a vector
Laplacian solve used to precondition the nonlinear solver.

Two Poisson routes are provided: conjugate gradients on the 7-point
Laplacian, and a direct solve by sine transforms, which diagonalise that
Laplacian exactly on a uniform box grid.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import fft

from . import calculus, kernels
from .grid import BoxDomain, ContractError, EdgeField, NodeField

log = logging.getLogger(__name__)


class PoissonError(RuntimeError):
    """Conjugate gradients hit the iteration cap; ``residual`` is the relative residual reached."""

    def __init__(self, message, residual, solution=None):
        super().__init__(message)
        self.residual = residual
        self.solution = solution


@dataclass
class CGTrace:
    residuals: list = field(default_factory=list)  # relative 2-norm residuals
    energies: list = field(default_factory=list)  # 0.5 x.Ax - b.x with A = -Laplacian


def laplacian(phi: NodeField, g: BoxDomain) -> NodeField:
    """7-point Laplacian; boundary entries of the result are zero."""
    phi.check(g)
    return NodeField.from_components(g, kernels.laplacian(phi.values, *g.spacing))


def _symbols(n: int, h: float, kind: str) -> np.ndarray:
    # eigenvalues of minus the 1D second difference
    if kind == "dirichlet":  # n-1 interior points, DST-I
        k = np.arange(1, n)
    else:  # n points with mirrored ghosts, DCT-II
        k = np.arange(n)
    return (2.0 - 2.0 * np.cos(np.pi * k / n)) / (h * h)


def _interior(g):
    return (slice(1, -1),) * 3


def _dst_solve(rhs: NodeField, g: BoxDomain) -> NodeField:
    b = rhs.values[_interior(g)]
    lam = sum(
        np.expand_dims(_symbols(n, h, "dirichlet"), [a for a in range(3) if a != axis])
        for axis, (n, h) in enumerate(zip(g.shape, g.spacing))
    )
    x = fft.idstn(fft.dstn(b, type=1, norm="ortho") / -lam, type=1, norm="ortho")
    out = NodeField(g)
    out.values[_interior(g)] = x
    return out


def _cg_solve(rhs: NodeField, g: BoxDomain, tol: float, maxiter: int, trace: CGTrace | None):
    inner = _interior(g)
    b = -rhs.values[inner]  # solve (-L) x = -rhs, which is SPD
    bnorm = float(np.sqrt((b * b).sum()))
    out = NodeField(g)
    if bnorm == 0.0:
        if trace is not None:
            trace.residuals.append(0.0)
            trace.energies.append(0.0)
        return out
    work = np.zeros(g.node_shape)
    x = np.zeros_like(b)
    r = b.copy()
    d = r.copy()
    rr = float((r * r).sum())
    for it in range(maxiter + 1):
        rel = np.sqrt(rr) / bnorm
        if trace is not None:
            trace.residuals.append(float(rel))
            trace.energies.append(float(-0.5 * ((r + b) * x).sum()))
        if rel <= tol:
            out.values[inner] = x
            return out
        if it == maxiter:
            break
        work[inner] = d
        Ad = -kernels.laplacian(work, *g.spacing)[inner]
        alpha = rr / float((d * Ad).sum())
        x += alpha * d
        r -= alpha * Ad
        rr_new = float((r * r).sum())
        d *= rr_new / rr
        d += r
        rr = rr_new
    out.values[inner] = x
    raise PoissonError(
        f"CG did not reach {tol:g} in {maxiter} iterations (relative residual {rel:.3e})", rel, out
    )


def poisson_solve(rhs: NodeField, g: BoxDomain, tol: float = 1e-10, *, method: str = "cg",
                  maxiter: int | None = None, trace: CGTrace | None = None) -> NodeField:
    """Solve ``laplacian(phi) = rhs`` on interior nodes with ``phi = 0`` on the boundary.

    Boundary entries of ``rhs`` are ignored.  ``method="cg"`` iterates until
    the relative residual is below ``tol`` and raises :class:`PoissonError`
    after ``maxiter`` steps; ``method="dst"`` is a direct solve.
    """
    if not isinstance(rhs, NodeField):
        raise ContractError("poisson_solve takes a NodeField right-hand side")
    rhs.check(g)
    if not np.all(np.isfinite(rhs.data)):
        raise ContractError("right-hand side is not finite")
    if method == "dst":
        return _dst_solve(rhs, g)
    if method != "cg":
        raise ContractError(f"unknown Poisson method {method!r}")
    if maxiter is None:
        maxiter = 10 * max(g.shape) + 100
    return _cg_solve(rhs, g, tol, maxiter, trace)


def leray_project(v: EdgeField, g: BoxDomain, tol: float = 1e-10, *, method: str = "dst") -> EdgeField:
    """Remove the gradient part of a constrained edge field.

    Returns ``v - gradient(phi)`` where ``phi`` solves the Dirichlet Poisson
    problem with the interior divergence of ``v`` as data.  The projection is
    orthogonal for the edge inner product.
    """
    if not isinstance(v, EdgeField):
        raise ContractError("leray_project takes an EdgeField")
    v.check(g)
    if not v.is_constrained():
        raise ContractError("leray_project needs a tangentially constrained field")
    div = calculus.divergence(v, g)
    phi = poisson_solve(div, g, tol, method=method)
    out = v - calculus.gradient(phi, g)
    # round-off only; the gradient of a zero-boundary potential is already constrained
    out.data[~g.interior_edge_mask] = 0.0
    return out


def vector_laplacian_solve(v: EdgeField, g: BoxDomain) -> EdgeField:
    """Apply the inverse of ``curl_adjoint(curl(.)) - gradient(div0(.))``.

    ``div0`` is :func:`~pcurl.calculus.divergence` with boundary nodes set to
    zero, matching the Dirichlet potentials used by :func:`leray_project`.
    On constrained edge fields this operator is minus the componentwise
    Laplacian, Neumann along each component's own axis and Dirichlet across
    it, so it is inverted exactly by mixed cosine/sine transforms.  It maps
    divergence-free fields to divergence-free fields.
    """
    v.check(g)
    out = []
    for axis, comp in enumerate(v.components):
        sl = [slice(1, -1)] * 3
        sl[axis] = slice(None)
        sl = tuple(sl)
        block = comp[sl]
        lam = 0.0
        for a, (n, h) in enumerate(zip(g.shape, g.spacing)):
            sym = _symbols(n, h, "neumann" if a == axis else "dirichlet")
            lam = lam + np.expand_dims(sym, [b for b in range(3) if b != a])
        t = block
        for a in range(3):
            t = fft.dct(t, type=2, axis=a, norm="ortho") if a == axis else fft.dst(t, type=1, axis=a, norm="ortho")
        t = t / lam
        for a in range(3):
            t = fft.idct(t, type=2, axis=a, norm="ortho") if a == axis else fft.idst(t, type=1, axis=a, norm="ortho")
        full = np.zeros(comp.shape)
        full[sl] = t
        out.append(full)
    return EdgeField.from_components(g, *out)
