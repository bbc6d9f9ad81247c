"""Discrete curl, divergence and gradient on the staggered grid.

Edge fields carry ``u``, face fields carry ``curl u``; with the tangential
constraint imposed on boundary edges, ``curl(gradient(phi)) == 0`` and the
cell flux of ``curl(u)`` vanish identically, not just to truncation order.
"""
from __future__ import annotations

import numpy as np

from . import kernels
from .grid import BoxDomain, CellField, ContractError, EdgeField, FaceField, Field, NodeField


def _expect(field, cls, g: BoxDomain):
    if not isinstance(field, cls):
        raise ContractError(f"expected {cls.__name__}, got {type(field).__name__}")
    field.check(g)


def curl(u: EdgeField, g: BoxDomain) -> FaceField:
    """Circulation around each face divided by its area."""
    _expect(u, EdgeField, g)
    return FaceField.from_components(g, *kernels.curl(*u.components, *g.spacing))


def divergence(u: EdgeField, g: BoxDomain) -> NodeField:
    """Net flux out of each node's dual cell per unit volume.

    Edges outside the box count as zero, so boundary nodes get a one-sided
    value; only interior nodes are meaningful as constraints.
    """
    _expect(u, EdgeField, g)
    return NodeField.from_components(g, kernels.divergence(*u.components, *g.spacing))


def gradient(phi: NodeField, g: BoxDomain) -> EdgeField:
    _expect(phi, NodeField, g)
    return EdgeField.from_components(g, *kernels.gradient(phi.values, *g.spacing))


def curl_adjoint(w: FaceField, g: BoxDomain) -> EdgeField:
    """Adjoint of :func:`curl` for the measure-weighted inner products.

    Satisfies ``inner(curl(u), w) == inner(u, curl_adjoint(w))`` for every
    tangentially constrained ``u``.  Boundary edges come out as zero.
    """
    _expect(w, FaceField, g)
    scaled = FaceField(g, w.data * (g.face_weights / g.cell_volume))
    out = EdgeField.from_components(g, *kernels.curl_t(*scaled.components, *g.spacing))
    out.data[~g.interior_edge_mask] = 0.0
    return out


def cell_magnitude(w: FaceField, g: BoxDomain) -> CellField:
    """Per cell: root of the summed per-component mean squares of the two opposite faces."""
    _expect(w, FaceField, g)
    return CellField.from_components(g, np.sqrt(kernels.cell_sq(*w.components)))


def face_magnitude_max(w: FaceField) -> float:
    """Largest single face value in absolute terms (a diagnostic sup-norm)."""
    return w.max_abs()


def edge_cell_magnitude(u: EdgeField, g: BoxDomain) -> CellField:
    """Cell magnitude of an edge field.

    Each component is averaged in square over the four parallel edges of the
    cell, then the three averages are summed and square-rooted.  Used to turn
    a source term into a cellwise step function.
    """
    _expect(u, EdgeField, g)
    ux, uy, uz = (c * c for c in u.components)
    s = 0.25 * (ux[:, :-1, :-1] + ux[:, 1:, :-1] + ux[:, :-1, 1:] + ux[:, 1:, 1:])
    s += 0.25 * (uy[:-1, :, :-1] + uy[1:, :, :-1] + uy[:-1, :, 1:] + uy[1:, :, 1:])
    s += 0.25 * (uz[:-1, :-1, :] + uz[1:, :-1, :] + uz[:-1, 1:, :] + uz[1:, 1:, :])
    return CellField.from_components(g, np.sqrt(s))


def integrate(field: Field, g: BoxDomain) -> float:
    """Measure-weighted sum, the discrete analogue of the integral over the box."""
    field.check(g)
    return float((field.data * field.weights).sum())


def inner(a: Field, b: Field, g: BoxDomain) -> float:
    if type(a) is not type(b):
        raise ContractError(f"inner product of {type(a).__name__} and {type(b).__name__}")
    a.check(g)
    b.check(g)
    return float((a.data * b.data * a.weights).sum())


def norm(a: Field, g: BoxDomain) -> float:
    return float(np.sqrt(max(inner(a, a, g), 0.0)))


def interior_divergence_max(u: EdgeField, g: BoxDomain) -> float:
    d = divergence(u, g).data[g.interior_node_mask]
    return float(np.abs(d).max()) if d.size else 0.0


def sample_edges(g: BoxDomain, fx, fy, fz) -> EdgeField:
    """Evaluate a vector function at edge midpoints (each component on its own edges)."""
    comps = []
    for axis, fn in enumerate((fx, fy, fz)):
        axes = [g.coords(a, staggered=(a == axis)) for a in range(3)]
        X, Y, Z = np.meshgrid(*axes, indexing="ij")
        comps.append(np.broadcast_to(fn(X, Y, Z), X.shape).astype(float))
    return EdgeField.from_components(g, *comps)


def sample_faces(g: BoxDomain, fx, fy, fz) -> FaceField:
    """Evaluate a vector function at face centres (each component on its own faces)."""
    comps = []
    for axis, fn in enumerate((fx, fy, fz)):
        axes = [g.coords(a, staggered=(a != axis)) for a in range(3)]
        X, Y, Z = np.meshgrid(*axes, indexing="ij")
        comps.append(np.broadcast_to(fn(X, Y, Z), X.shape).astype(float))
    return FaceField.from_components(g, *comps)


def sample_cells(g: BoxDomain, fn) -> CellField:
    X, Y, Z = np.meshgrid(*(g.coords(a, staggered=True) for a in range(3)), indexing="ij")
    return CellField.from_components(g, np.broadcast_to(fn(X, Y, Z), X.shape).astype(float))
