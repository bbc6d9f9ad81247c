"""Minimisation of the p-curl energy over divergence-free constrained edge fields.

The discrete energy is

    J(u) = sum_cells V * ((|w|^2 + eps^2)^(p/2) - eps^p) / p  -  <f, u>

with ``w = curl(u)`` and ``|w|^2`` the cell-averaged squared magnitude.  Its
minimiser over tangentially constrained, discretely divergence-free fields is
the discrete solution of ``curl(|curl u|^(p-2) curl u) = f``.  We use
projected Polak-Ribiere nonlinear CG, preconditioned by the inverse vector
Laplacian, with a continuation in ``eps``.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import calculus, kernels
from .grid import BoxDomain, CellField, ContractError, EdgeField, FaceField
from .poisson import leray_project, vector_laplacian_solve

log = logging.getLogger(__name__)


class SourceWarning(UserWarning):
    pass


@dataclass
class SolverConfig:
    p: float
    epsilon_schedule: tuple | None = None
    grad_tol: float = 1e-8
    max_iters: int = 20000
    backtrack: float = 0.5
    armijo: float = 1e-4
    poisson_tol: float = 1e-10
    restart: int = 50
    precondition: bool = True
    poisson_method: str = "dst"
    # stopping tolerance for every stage but the last
    stage_tol: float = 1e-6

    def __post_init__(self):
        self.p = float(self.p)
        if not np.isfinite(self.p) or self.p <= 1.0:
            raise ContractError(f"p must be > 1, got {self.p}")
        if self.p < 1.05:
            raise ContractError(f"p = {self.p} is below the supported limit 1.05")
        if self.epsilon_schedule is None:
            self.epsilon_schedule = (1e-2, 1e-4, 1e-8, 0.0) if self.p >= 2 else (1e-2, 1e-4, 1e-6)
        sched = tuple(float(e) for e in self.epsilon_schedule)
        if not sched:
            raise ContractError("epsilon_schedule is empty")
        if any(e < 0 for e in sched) or any(b > a for a, b in zip(sched, sched[1:])):
            raise ContractError(f"epsilon_schedule must be nonnegative and non-increasing: {sched}")
        if self.p < 2 and sched[-1] == 0.0:
            raise ContractError("p < 2 needs a positive terminal eps")
        self.epsilon_schedule = sched
        for name in ("grad_tol", "poisson_tol", "armijo", "stage_tol"):
            if not getattr(self, name) > 0:
                raise ContractError(f"{name} must be positive")
        if not 0 < self.backtrack < 1:
            raise ContractError("backtrack factor must lie in (0, 1)")
        if int(self.max_iters) < 0 or int(self.restart) < 1:
            raise ContractError("max_iters must be >= 0 and restart >= 1")
        self.max_iters = int(self.max_iters)
        self.restart = int(self.restart)

    @property
    def terminal_eps(self) -> float:
        return self.epsilon_schedule[-1]


@dataclass
class SolveResult:
    u: EdgeField
    curl_u: FaceField
    curl_mag: CellField
    energy: float
    projected_grad_norm: float
    weak_residual: float
    iterations: list
    converged: bool
    message: str
    eps: float
    trace: list = field(default_factory=list, repr=False)

    @property
    def total_iterations(self) -> int:
        return int(sum(self.iterations))


def _check(u, f, p, eps, g):
    if not isinstance(u, EdgeField) or not isinstance(f, EdgeField):
        raise ContractError("u and f must be EdgeFields")
    u.check(g)
    f.check(g)
    if not p > 1:
        raise ContractError(f"p must be > 1, got {p}")
    if eps < 0:
        raise ContractError("eps must be nonnegative")


def energy(u: EdgeField, f: EdgeField, p: float, eps: float, g: BoxDomain) -> float:
    """Regularised p-curl energy; at ``eps = 0`` this is the unregularised functional."""
    _check(u, f, p, eps, g)
    w = kernels.curl(*u.components, *g.spacing)
    total, *_ = kernels.energy_flux(*w, float(p), float(eps))
    return g.cell_volume * total - calculus.inner(f, u, g)


def energy_gradient(u: EdgeField, f: EdgeField, p: float, eps: float, g: BoxDomain) -> EdgeField:
    """Riesz representative of the energy's derivative in the edge inner product.

    Equals ``curl_adjoint(W * curl u) - f`` where the face weight ``W`` is the
    adjacent-cell average of ``(|w|^2 + eps^2)^((p-2)/2)`` (the cell value
    itself on boundary faces).
    """
    _check(u, f, p, eps, g)
    return _Problem(f, p, g).gradient(u, eps)[0]


def _cell_avg(wx, wy, wz):
    return 0.5 * (wx[:-1] + wx[1:] + wy[:, :-1] + wy[:, 1:] + wz[:, :, :-1] + wz[:, :, 1:])


class _Problem:
    def __init__(self, f: EdgeField, p: float, g: BoxDomain):
        self.f = f
        self.p = float(p)
        self.g = g
        self.V = g.cell_volume
        self.mask = g.interior_edge_mask
        self.ew = g.edge_weights

    def dot(self, a, b) -> float:
        return kernels.wdot(a, b, self.ew)

    def gradient(self, u: EdgeField, eps: float):
        g = self.g
        w = kernels.curl(*u.components, *g.spacing)
        total, *flux = kernels.energy_flux(*w, self.p, float(eps))
        grad = EdgeField.from_components(g, *kernels.curl_t(*flux, *g.spacing))
        grad.data[~self.mask] = 0.0
        grad.data -= self.f.data
        J = self.V * total - self.dot(self.f.data, u.data)
        return grad, J, w

    def line(self, w0, cd, fd, eps):
        """Return callables for phi(a) - phi(0) and phi'(a) along a direction.

        ``w0`` is curl(u), ``cd`` is curl(d) and ``fd`` is <f, d>.  The
        difference is formed from ``a*cd*(2*w0 + a*cd)`` so it stays accurate
        when the step barely changes the energy.
        """
        p, V = self.p, self.V
        e2 = eps * eps
        r0 = kernels.cell_sq(*w0) + e2
        base = np.zeros_like(r0)
        pos = r0 > 0
        base[pos] = r0[pos] ** (0.5 * p) / p

        def delta(a):
            q = [a * c * (2.0 * w + a * c) for w, c in zip(w0, cd)]
            ds = _cell_avg(*q)
            out = np.empty_like(r0)
            out[pos] = base[pos] * np.expm1(0.5 * p * np.log1p(ds[pos] / r0[pos]))
            out[~pos] = np.maximum(ds[~pos], 0.0) ** (0.5 * p) / p
            return V * float(out.sum()) - a * fd

        def slope(a):
            w = tuple(x + a * c for x, c in zip(w0, cd))
            _, *flux = kernels.energy_flux(*w, p, float(eps))
            return V * sum(float((fl * c).sum()) for fl, c in zip(flux, cd)) - fd

        return delta, slope


def _random_feasible(g: BoxDomain, rng, scale: float, tol: float) -> EdgeField:
    u = EdgeField(g, rng.standard_normal(g.edge_weights.size) * scale).constrained()
    return leray_project(u, g, tol)


def project_source(f_raw: EdgeField, g: BoxDomain, tol: float = 1e-10, *, return_discarded: bool = False):
    """Remove the gradient part of a source so that it is discretely divergence-free.

    Warns with :class:`SourceWarning` if more than 10% of the source's norm is
    discarded.  With ``return_discarded`` the norm of the removed part is
    returned as well.
    """
    if not isinstance(f_raw, EdgeField):
        raise ContractError("project_source takes an EdgeField")
    f_raw.check(g)
    if not f_raw.is_constrained():
        raise ContractError("source must vanish on boundary edges (apply the tangential constraint first)")
    f = leray_project(f_raw, g, tol)
    discarded = calculus.norm(f_raw - f, g)
    total = calculus.norm(f_raw, g)
    if total > 0 and discarded > 0.1 * total:
        warnings.warn(
            f"source had a gradient part of relative size {discarded / total:.3g}; it was removed",
            SourceWarning,
            stacklevel=2,
        )
    if return_discarded:
        return f, discarded
    return f


def weak_residual(u: EdgeField, f: EdgeField, p: float, g: BoxDomain, trials: int = 8, *,
                  eps: float = 0.0, seed: int = 0) -> float:
    """Largest defect of the weak form over random unit divergence-free test fields."""
    _check(u, f, p, eps, g)
    grad, _, _ = _Problem(f, p, g).gradient(u, eps)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(int(trials)):
        phi = _random_feasible(g, rng, 1.0, 1e-12)
        phi = phi * (1.0 / calculus.norm(phi, g))
        worst = max(worst, abs(calculus.inner(grad, phi, g)))
    return worst


def solve(f: EdgeField, cfg: SolverConfig, g: BoxDomain, *, u0: EdgeField | None = None,
          residual_trials: int = 8) -> SolveResult:
    """Minimise the energy for source ``f`` (constrained and divergence-free).

    Each eps stage is warm-started from the previous one.  When an iteration
    cap or a line-search failure stops the run, the best iterate is returned
    with ``converged=False`` and the reason in ``message``.
    """
    if not isinstance(f, EdgeField):
        raise ContractError("source must be an EdgeField")
    f.check(g)
    if not f.is_constrained():
        raise ContractError("source must vanish on boundary edges")
    fnorm = calculus.norm(f, g)
    fdiv = calculus.interior_divergence_max(f, g)
    fscale = f.max_abs() / min(g.spacing)
    if fscale > 0 and fdiv > 1e-6 * fscale:
        raise ContractError(
            f"source is not discretely divergence-free (max interior divergence {fdiv:.3e}); use project_source"
        )

    # the gradient part of f pairs to zero with every admissible field, so the
    # minimiser is unchanged; removing it once keeps every energy gradient
    # divergence-free and lets each iteration get by with a single projection
    prob = _Problem(leray_project(f, g, cfg.poisson_tol, method=cfg.poisson_method), cfg.p, g)
    if u0 is None:
        u = EdgeField(g)
    else:
        u0.check(g)
        u = leray_project(u0.constrained(), g, cfg.poisson_tol, method=cfg.poisson_method)

    stop = cfg.grad_tol * max(1.0, fnorm)
    iterations = []
    trace = []
    converged = True
    message = "converged"

    def project(v):
        return leray_project(v, g, cfg.poisson_tol, method=cfg.poisson_method)

    def precondition(v):
        return project(vector_laplacian_solve(v, g) if cfg.precondition else v)

    sched = cfg.epsilon_schedule
    for stage, eps in enumerate(sched):
        final = stage == len(sched) - 1
        tol = stop if final else max(stop, cfg.stage_tol * max(1.0, fnorm))
        pg, J, w = prob.gradient(u, eps)
        gnorm = float(np.sqrt(max(prob.dot(pg.data, pg.data), 0.0)))
        trace.append((stage, eps, 0, J, gnorm))
        z = precondition(pg)
        d = -z
        alpha = 1.0
        it = 0
        since_restart = 0
        while gnorm > tol:
            if it >= cfg.max_iters:
                converged = False
                message = f"iteration cap {cfg.max_iters} reached at eps={eps:g} (gradient norm {gnorm:.3e})"
                break
            g0 = prob.dot(pg.data, d.data)
            if g0 >= 0 or since_restart >= cfg.restart:
                d = -z
                g0 = prob.dot(pg.data, d.data)
                since_restart = 0
            cd = kernels.curl(*d.components, *g.spacing)
            fd = prob.dot(prob.f.data, d.data)
            delta, slope = prob.line(w, cd, fd, eps)
            step = _line_search(delta, slope, g0, alpha, cfg)
            if step is None:
                if since_restart > 0:
                    d = -z
                    since_restart = cfg.restart
                    continue
                converged = False
                message = f"line search failed at eps={eps:g} (gradient norm {gnorm:.3e})"
                break
            alpha = step
            u = u + d * step
            it += 1
            since_restart += 1
            pg_new, J, w = prob.gradient(u, eps)
            z_new = precondition(pg_new)
            beta = prob.dot(pg_new.data, z_new.data - z.data) / prob.dot(pg.data, z.data)
            d = -z_new + d * max(beta, 0.0)
            pg, z = pg_new, z_new
            gnorm = float(np.sqrt(max(prob.dot(pg.data, pg.data), 0.0)))
            trace.append((stage, eps, it, J, gnorm))
        iterations.append(it)
        log.debug("eps=%g: %d iterations, J=%.12g, |Pg|=%.3e", eps, it, J, gnorm)
        if not converged:
            break

    eps = sched[len(iterations) - 1]
    curl_u = calculus.curl(u, g)
    if not converged:
        log.warning("solver did not converge: %s", message)
    return SolveResult(
        u=u,
        curl_u=curl_u,
        curl_mag=calculus.cell_magnitude(curl_u, g),
        energy=energy(u, f, cfg.p, eps, g),
        projected_grad_norm=float(gnorm),
        weak_residual=weak_residual(u, f, cfg.p, g, residual_trials, eps=eps),
        iterations=iterations,
        converged=converged,
        message=message,
        eps=eps,
        trace=trace,
    )


def _line_search(delta, slope, g0, alpha0, cfg: SolverConfig, secant_steps: int = 4):
    """Secant search on the directional derivative, then Armijo backtracking.

    ``delta(a)`` is the energy change for step ``a`` and ``slope(a)`` its
    derivative; ``g0 = slope(0) < 0``.  Returns an accepted step or None.
    """
    lo, s_lo = 0.0, g0
    hi = None
    a = alpha0
    for _ in range(secant_steps):
        s = slope(a)
        if abs(s) <= 0.1 * abs(g0):
            break
        if s < 0:
            lo, s_lo = a, s
            if hi is None:
                # still descending: secant extrapolation, at least doubling
                nxt = a * g0 / (g0 - s) if s > g0 else 2.0 * a
                a = max(nxt, 2.0 * a)
                continue
        else:
            hi, s_hi = a, s
        if hi is not None:
            a = lo - s_lo * (hi - lo) / (s_hi - s_lo)
            if not lo < a < hi:
                a = 0.5 * (lo + hi)
    for _ in range(60):
        if delta(a) <= cfg.armijo * a * g0:
            return a
        a *= cfg.backtrack
    return None
