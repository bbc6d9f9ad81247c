"""Box domains and the degree-of-freedom containers of the staggered grid.

Component arrays are indexed ``[i, j, k]`` along ``(x, y, z)``.  Every field
stores its components back to back in one flat float64 buffer so that the
optimizer can do vector arithmetic in a single numpy call; ``components``
returns reshaped views into that buffer.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


class ContractError(ValueError):
    """An operation received arguments that violate its preconditions."""


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box ``[0, Lx] x [0, Ly] x [0, Lz]`` with ``Nx x Ny x Nz`` cells."""

    lengths: tuple[float, float, float]
    shape: tuple[int, int, int]

    def __post_init__(self):
        lengths = tuple(float(v) for v in self.lengths)
        shape = tuple(int(n) for n in self.shape)
        if len(lengths) != 3 or len(shape) != 3:
            raise ContractError("a box needs three lengths and three resolutions")
        if not all(np.isfinite(v) and v > 0 for v in lengths):
            raise ContractError(f"lengths must be positive, got {lengths}")
        if any(n < 2 for n in shape):
            raise ContractError(f"resolutions must be >= 2, got {shape}")
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "shape", shape)

    @classmethod
    def cube(cls, n: int, length: float = 1.0) -> "BoxDomain":
        return cls((length, length, length), (n, n, n))

    @property
    def spacing(self) -> tuple[float, float, float]:
        return tuple(L / n for L, n in zip(self.lengths, self.shape))

    @property
    def cell_volume(self) -> float:
        hx, hy, hz = self.spacing
        return hx * hy * hz

    @property
    def measure(self) -> float:
        Lx, Ly, Lz = self.lengths
        return Lx * Ly * Lz

    @property
    def node_shape(self) -> tuple[int, int, int]:
        nx, ny, nz = self.shape
        return (nx + 1, ny + 1, nz + 1)

    @property
    def edge_shapes(self):
        nx, ny, nz = self.shape
        return ((nx, ny + 1, nz + 1), (nx + 1, ny, nz + 1), (nx + 1, ny + 1, nz))

    @property
    def face_shapes(self):
        nx, ny, nz = self.shape
        return ((nx + 1, ny, nz), (nx, ny + 1, nz), (nx, ny, nz + 1))

    def coords(self, axis: int, staggered: bool) -> np.ndarray:
        """Node coordinates along ``axis``, or cell midpoints if ``staggered``."""
        h = self.spacing[axis]
        n = self.shape[axis]
        if staggered:
            return (np.arange(n) + 0.5) * h
        return np.arange(n + 1) * h

    # Measure shares: a full dual cell has volume hx*hy*hz, halved once for
    # every axis along which the degree of freedom sits on the boundary.

    @cached_property
    def edge_weights(self) -> np.ndarray:
        parts = []
        for axis, shp in enumerate(self.edge_shapes):
            w = np.full(shp, self.cell_volume)
            for other in range(3):
                if other != axis:
                    _halve_ends(w, other)
            parts.append(w.ravel())
        return np.concatenate(parts)

    @cached_property
    def face_weights(self) -> np.ndarray:
        parts = []
        for axis, shp in enumerate(self.face_shapes):
            w = np.full(shp, self.cell_volume)
            _halve_ends(w, axis)
            parts.append(w.ravel())
        return np.concatenate(parts)

    @cached_property
    def node_weights(self) -> np.ndarray:
        w = np.full(self.node_shape, self.cell_volume)
        for axis in range(3):
            _halve_ends(w, axis)
        return w.ravel()

    @cached_property
    def cell_weights(self) -> np.ndarray:
        return np.full(int(np.prod(self.shape)), self.cell_volume)

    @cached_property
    def interior_edge_mask(self) -> np.ndarray:
        """True for edges that do not lie in the boundary surface."""
        parts = []
        for axis, shp in enumerate(self.edge_shapes):
            m = np.ones(shp, dtype=bool)
            for other in range(3):
                if other != axis:
                    _zero_ends(m, other)
            parts.append(m.ravel())
        return np.concatenate(parts)

    @cached_property
    def interior_node_mask(self) -> np.ndarray:
        m = np.ones(self.node_shape, dtype=bool)
        for axis in range(3):
            _zero_ends(m, axis)
        return m.ravel()


def _halve_ends(a: np.ndarray, axis: int) -> None:
    idx = [slice(None)] * 3
    for end in (0, -1):
        idx[axis] = end
        a[tuple(idx)] *= 0.5


def _zero_ends(a: np.ndarray, axis: int) -> None:
    idx = [slice(None)] * 3
    for end in (0, -1):
        idx[axis] = end
        a[tuple(idx)] = 0


class Field:
    """Flat storage plus per-component views.  Subclasses fix the layout."""

    kind = "field"

    def __init__(self, grid: BoxDomain, data=None):
        self.grid = grid
        shapes = self.component_shapes(grid)
        size = sum(int(np.prod(s)) for s in shapes)
        if data is None:
            data = np.zeros(size)
        else:
            data = np.ascontiguousarray(data, dtype=np.float64).ravel()
            if data.size != size:
                raise ContractError(
                    f"{type(self).__name__} on grid {grid.shape} needs {size} values, got {data.size}"
                )
        self.data = data

    @staticmethod
    def component_shapes(grid: BoxDomain):
        raise NotImplementedError

    @classmethod
    def from_components(cls, grid: BoxDomain, *arrays):
        shapes = cls.component_shapes(grid)
        if len(arrays) != len(shapes):
            raise ContractError(f"{cls.__name__} takes {len(shapes)} components")
        for a, s in zip(arrays, shapes):
            if np.shape(a) != s:
                raise ContractError(
                    f"{cls.__name__} component shape {np.shape(a)} does not match grid shape {s}"
                )
        return cls(grid, np.concatenate([np.asarray(a, dtype=np.float64).ravel() for a in arrays]))

    @property
    def components(self) -> tuple[np.ndarray, ...]:
        out = []
        start = 0
        for s in self.component_shapes(self.grid):
            n = int(np.prod(s))
            out.append(self.data[start:start + n].reshape(s))
            start += n
        return tuple(out)

    @property
    def weights(self) -> np.ndarray:
        raise NotImplementedError

    def copy(self):
        return type(self)(self.grid, self.data.copy())

    def check(self, grid: BoxDomain) -> None:
        if self.grid != grid:
            raise ContractError(
                f"{type(self).__name__} lives on {self.grid.shape}, operation expects {grid.shape}"
            )

    def _like(self, data):
        return type(self)(self.grid, data)

    def _other(self, other):
        if type(other) is not type(self):
            raise ContractError(f"cannot combine {type(self).__name__} with {type(other).__name__}")
        other.check(self.grid)
        return other.data

    def __add__(self, other):
        return self._like(self.data + self._other(other))

    def __sub__(self, other):
        return self._like(self.data - self._other(other))

    def __mul__(self, scalar):
        return self._like(self.data * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return self._like(-self.data)

    def max_abs(self) -> float:
        return float(np.abs(self.data).max()) if self.data.size else 0.0

    def __repr__(self):
        return f"{type(self).__name__}(grid={self.grid.shape}, max_abs={self.max_abs():.3g})"


class EdgeField(Field):
    """Tangential components on the x-, y- and z-directed edges."""

    kind = "edge"

    @staticmethod
    def component_shapes(grid):
        return grid.edge_shapes

    @property
    def weights(self):
        return self.grid.edge_weights

    def constrained(self) -> "EdgeField":
        """Copy with every edge lying in the boundary set to zero."""
        return self._like(np.where(self.grid.interior_edge_mask, self.data, 0.0))

    def is_constrained(self) -> bool:
        return not np.any(self.data[~self.grid.interior_edge_mask])


class FaceField(Field):
    """Normal components on the x-, y- and z-normal faces."""

    kind = "face"

    @staticmethod
    def component_shapes(grid):
        return grid.face_shapes

    @property
    def weights(self):
        return self.grid.face_weights


class NodeField(Field):
    kind = "node"

    @staticmethod
    def component_shapes(grid):
        return (grid.node_shape,)

    @property
    def weights(self):
        return self.grid.node_weights

    @property
    def values(self) -> np.ndarray:
        return self.data.reshape(self.grid.node_shape)


class CellField(Field):
    kind = "cell"

    @staticmethod
    def component_shapes(grid):
        return (grid.shape,)

    @property
    def weights(self):
        return self.grid.cell_weights

    @property
    def values(self) -> np.ndarray:
        return self.data.reshape(self.grid.shape)
