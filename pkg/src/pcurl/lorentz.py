"""Rearrangements and Lorentz quasi-norms of step functions.

A :class:`MeasuredSample` is a finite list of ``(value, weight)`` pairs: a
nonnegative function taking ``value`` on a set of measure ``weight``.  Every
quantity here is computed in closed form for such functions, so there is no
quadrature error.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import CellField, ContractError


@dataclass(frozen=True)
class MeasuredSample:
    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).ravel()
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        if v.shape != w.shape:
            raise ContractError(f"{v.size} values but {w.size} weights")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(w))):
            raise ContractError("values and weights must be finite")
        if np.any(v < 0):
            raise ContractError("values must be nonnegative; pass absolute values")
        if np.any(w <= 0):
            raise ContractError("weights must be positive")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_cells(cls, field: CellField) -> "MeasuredSample":
        """Piecewise-constant sample of a cell field, one step per cell."""
        return cls(np.abs(field.data), field.weights.copy())

    @property
    def total_measure(self) -> float:
        return float(self.weights.sum())

    def scaled(self, factor: float) -> "MeasuredSample":
        return MeasuredSample(self.values * float(factor), self.weights)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class Rearrangement:
    """Non-increasing step function: ``values[i]`` on ``[breaks[i], breaks[i+1])``.

    ``values`` is strictly decreasing (ties merged) and ``breaks[0] == 0``.
    """

    values: np.ndarray
    breaks: np.ndarray

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        idx = np.searchsorted(self.breaks, t, side="right") - 1
        out = np.where(idx < self.values.size, self.values[np.minimum(idx, self.values.size - 1)], 0.0)
        return np.where(t < 0, np.nan, out)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breaks)

    def as_sample(self) -> MeasuredSample:
        return MeasuredSample(self.values, self.widths)


def distribution_function(s: MeasuredSample, level: float) -> float:
    """Measure of the set where the function exceeds ``level``."""
    if not level >= 0:
        raise ContractError(f"level must be >= 0, got {level}")
    return float(s.weights[s.values > level].sum())


def rearrangement(s: MeasuredSample) -> Rearrangement:
    if len(s) == 0:
        raise ContractError("cannot rearrange an empty sample")
    vals, inv = np.unique(s.values, return_inverse=True)
    widths = np.bincount(inv.ravel(), weights=s.weights, minlength=vals.size)
    vals, widths = vals[::-1], widths[::-1]
    return Rearrangement(vals, np.concatenate(([0.0], np.cumsum(widths))))


def _power_increments(r: Rearrangement, q: float) -> np.ndarray:
    """``t_i**q - t_{i-1}**q`` for consecutive breakpoints, without cancellation."""
    lo = r.breaks[:-1]
    w = r.widths
    out = np.empty_like(w)
    first = lo == 0
    out[first] = w[first] ** q
    rest = ~first
    out[rest] = lo[rest] ** q * np.expm1(q * np.log1p(w[rest] / lo[rest]))
    return out


def _check_m(m):
    if not (np.isfinite(m) and m >= 1):
        raise ContractError(f"m must satisfy 1 <= m < inf, got {m}")


def lorentz_norm(s: MeasuredSample, m: float, p: float) -> float:
    """``(int_0^inf (t^(1/m) f*(t))^p dt/t)^(1/p)`` for ``1 <= m < inf``, ``1 <= p < inf``."""
    _check_m(m)
    if not (np.isfinite(p) and p >= 1):
        raise ContractError(f"p must satisfy 1 <= p < inf, got {p}; use lorentz_norm_inf")
    r = rearrangement(s)
    q = p / m
    total = float((r.values ** p * (m / p) * _power_increments(r, q)).sum())
    return total ** (1.0 / p)


def lorentz_norm_inf(s: MeasuredSample, m: float) -> float:
    """``sup_t t^(1/m) f*(t)``, attained at the right ends of the steps."""
    _check_m(m)
    r = rearrangement(s)
    return float((r.breaks[1:] ** (1.0 / m) * r.values).max())


def lp_norm(s: MeasuredSample, p: float) -> float:
    if p == np.inf:
        return float(s.values.max()) if len(s) else 0.0
    if not (np.isfinite(p) and p >= 1):
        raise ContractError(f"p must satisfy 1 <= p <= inf, got {p}")
    return float((s.values ** p * s.weights).sum()) ** (1.0 / p)
