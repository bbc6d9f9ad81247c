"""Estimate checks and experiment sweeps.

For each configuration the harness solves the problem and reports

    C_inf = max cell |curl u|  / ||f||_{L(3,1)}^(1/(p-1))
    C_p   = ||curl u||_{L^p}   / ||f||_{L(3,1)}^(1/(p-1))

whose boundedness under refinement is the desk-scale form of the a-priori
bounds.  Both ratios are invariant under ``f -> lam * f``.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import calculus
from .fieldio import read_field
from .grid import BoxDomain, ContractError, EdgeField
from .lorentz import MeasuredSample, lorentz_norm, lp_norm
from .solver import SolverConfig, project_source, solve

log = logging.getLogger(__name__)

SOURCE_KINDS = ("zero", "manufactured", "random-divfree", "file")
CSV_HEADER = ("p", "Nx", "Ny", "Nz", "seed", "lambda", "norm_curl_inf", "norm_curl_p",
              "norm_f_31", "c_emp_inf", "c_emp_p", "iters", "resid")
GROWTH_LIMIT = 0.10


# -- sources -----------------------------------------------------------------

def manufactured_solution(g: BoxDomain):
    """``u* = (0, 0, sin(pi x/Lx) sin(pi y/Ly))`` and the p = 2 source it solves for.

    Returns ``(u, curl_u, f)`` as callables of ``(x, y, z)``, each giving a
    3-tuple of arrays.
    """
    Lx, Ly, _ = g.lengths
    kx, ky = np.pi / Lx, np.pi / Ly

    def u(x, y, z):
        return 0 * x, 0 * x, np.sin(kx * x) * np.sin(ky * y) + 0 * z

    def curl_u(x, y, z):
        return (ky * np.sin(kx * x) * np.cos(ky * y) + 0 * z,
                -kx * np.cos(kx * x) * np.sin(ky * y) + 0 * z, 0 * x)

    def f(x, y, z):
        return 0 * x, 0 * x, (kx * kx + ky * ky) * np.sin(kx * x) * np.sin(ky * y) + 0 * z

    return u, curl_u, f


def _sample(g, fn):
    return calculus.sample_edges(g, *(lambda x, y, z, i=i: fn(x, y, z)[i] for i in range(3)))


def manufactured_source(g: BoxDomain, amplitude: float = 1.0) -> EdgeField:
    _, _, f = manufactured_solution(g)
    return _sample(g, f).constrained() * amplitude


def make_random_divfree_source(g: BoxDomain, seed: int, smoothness: int = 2, amplitude: float = 1.0) -> EdgeField:
    """Seeded smooth divergence-free source ``f = curl A``.

    ``A_c`` is a random combination of modes ``sin(k_c x_c) prod_{d != c} cos(k_d x_d)``
    with ``k_d = n_d pi / L_d`` and ``1 <= n_d <= smoothness``; coefficients
    decay like ``1/|n|^2`` and are normalised to unit Euclidean length.  Such
    an ``A`` has a curl with zero tangential trace.  The curl is evaluated
    analytically at edge midpoints and then projected to be discretely
    divergence-free.
    """
    smoothness = int(smoothness)
    if smoothness < 1:
        raise ContractError("smoothness must be >= 1")
    rng = np.random.default_rng(int(seed))
    n = np.arange(1, smoothness + 1)
    N2 = n[:, None, None] ** 2 + n[None, :, None] ** 2 + n[None, None, :] ** 2
    coef = rng.standard_normal((3, smoothness, smoothness, smoothness)) / N2
    coef /= np.sqrt((coef ** 2).sum())
    k = [n * np.pi / L for L in g.lengths]

    def tables(axis, staggered):
        x = g.coords(axis, staggered)
        arg = np.outer(x, k[axis])
        return {"s": np.sin(arg), "c": np.cos(arg), "ds": np.cos(arg) * k[axis], "dc": -np.sin(arg) * k[axis]}

    def dA(c, e, tabs):
        # partial derivative along e of A_c, on the points described by tabs
        kinds = []
        for d in range(3):
            base = "s" if d == c else "c"
            kinds.append(("d" + base) if d == e else base)
        return np.einsum("abc,ia,jb,kc->ijk", coef[c], tabs[0][kinds[0]], tabs[1][kinds[1]], tabs[2][kinds[2]])

    comps = []
    for comp, (a, b) in enumerate(((1, 2), (2, 0), (0, 1))):
        tabs = [tables(d, staggered=(d == comp)) for d in range(3)]
        # (curl A)_comp = d_a A_b - d_b A_a
        comps.append(dA(b, a, tabs) - dA(a, b, tabs))
    f_raw = EdgeField.from_components(g, *comps).constrained()
    return project_source(f_raw, g, 1e-12) * amplitude


def source_norm_31(f: EdgeField) -> float:
    """``||f||_{L(3,1)}`` of the cellwise magnitude of an edge field."""
    cells = calculus.edge_cell_magnitude(f, f.grid)
    return lorentz_norm(MeasuredSample.from_cells(cells), 3.0, 1.0)


# -- reports -----------------------------------------------------------------

@dataclass
class SweepSpec:
    p_values: tuple = (1.5, 2.0, 3.0)
    resolutions: tuple = (16, 32)
    source: str = "random-divfree"
    lambdas: tuple = (1.0,)
    seeds: tuple = (0, 1, 2, 3, 4)
    smoothness: int = 2
    amplitude: float = 1.0
    lengths: tuple = (1.0, 1.0, 1.0)
    source_file: str | None = None
    solver: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("p_values", "resolutions", "lambdas", "seeds"):
            val = tuple(getattr(self, name))
            if not val:
                raise ContractError(f"{name} must be nonempty")
            setattr(self, name, val)
        if any(not p > 1 for p in self.p_values):
            raise ContractError(f"p values must be > 1: {self.p_values}")
        if any(int(n) < 2 for n in self.resolutions):
            raise ContractError("resolutions must be >= 2")
        self.resolutions = tuple(int(n) for n in self.resolutions)
        self.seeds = tuple(int(s) for s in self.seeds)
        if any(not lam > 0 for lam in self.lambdas):
            raise ContractError("scaling factors must be positive")
        if self.source not in SOURCE_KINDS:
            raise ContractError(f"unknown source kind {self.source!r}; expected one of {SOURCE_KINDS}")
        if self.source == "file" and not self.source_file:
            raise ContractError("source 'file' needs source_file")
        self.lengths = tuple(float(v) for v in self.lengths)

    def grid(self, n: int) -> BoxDomain:
        return BoxDomain(self.lengths, (n, n, n))

    def configurations(self):
        for p in self.p_values:
            for n in self.resolutions:
                for seed in self.seeds:
                    for lam in self.lambdas:
                        yield (float(p), int(n), int(seed), float(lam))


@dataclass
class EstimateReport:
    p: float
    shape: tuple
    lengths: tuple
    seed: int
    lam: float
    source: str
    norm_curl_inf: float
    norm_curl_inf_faces: float
    norm_curl_p: float
    norm_f_31: float
    c_emp_inf: float | None
    c_emp_p: float | None
    iterations: list
    weak_residual: float
    projected_grad_norm: float
    energy: float
    eps: float
    converged: bool
    message: str
    flags: list = field(default_factory=list)

    @property
    def key(self):
        return (self.p, self.source, self.seed, self.lam, self.shape)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["shape"] = list(self.shape)
        d["lengths"] = list(self.lengths)
        return d

    def csv_row(self) -> list:
        def num(x):
            return "" if x is None else repr(float(x))

        return [repr(self.p), *map(str, self.shape), str(self.seed), repr(self.lam),
                num(self.norm_curl_inf), num(self.norm_curl_p), num(self.norm_f_31),
                num(self.c_emp_inf), num(self.c_emp_p), str(sum(self.iterations)), num(self.weak_residual)]


def build_source(spec: SweepSpec, g: BoxDomain, seed: int) -> EdgeField:
    if spec.source == "zero":
        return EdgeField(g)
    if spec.source == "manufactured":
        return manufactured_source(g, spec.amplitude)
    if spec.source == "random-divfree":
        return make_random_divfree_source(g, seed, spec.smoothness, spec.amplitude)
    f = read_field(spec.source_file)
    if not isinstance(f, EdgeField):
        raise ContractError(f"{spec.source_file} does not hold an edge field")
    if f.grid != g:
        raise ContractError(f"{spec.source_file} is on grid {f.grid.shape}, expected {g.shape}")
    return project_source(f.constrained(), g, 1e-12) * spec.amplitude


def estimate_report(result, f: EdgeField, p: float, g: BoxDomain, *, seed=0, lam=1.0, source="") -> EstimateReport:
    """Both sides of the two estimates for a finished solve."""
    curl_inf = float(result.curl_mag.data.max())
    curl_p = lp_norm(MeasuredSample.from_cells(result.curl_mag), p)
    f31 = source_norm_31(f)
    if f31 > 0:
        denom = f31 ** (1.0 / (p - 1.0))
        c_inf, c_p = curl_inf / denom, curl_p / denom
    else:
        c_inf = c_p = None
    return EstimateReport(
        p=float(p), shape=g.shape, lengths=g.lengths, seed=int(seed), lam=float(lam), source=source,
        norm_curl_inf=curl_inf, norm_curl_inf_faces=calculus.face_magnitude_max(result.curl_u),
        norm_curl_p=float(curl_p), norm_f_31=float(f31), c_emp_inf=c_inf, c_emp_p=c_p,
        iterations=list(result.iterations), weak_residual=float(result.weak_residual),
        projected_grad_norm=float(result.projected_grad_norm), energy=float(result.energy),
        eps=float(result.eps), converged=bool(result.converged), message=result.message,
    )


def run_configuration(spec: SweepSpec, p: float, n: int, seed: int, lam: float) -> EstimateReport:
    g = spec.grid(n)
    f = build_source(spec, g, seed) * lam
    cfg = SolverConfig(p=p, **spec.solver)
    result = solve(f, cfg, g)
    return estimate_report(result, f, p, g, seed=seed, lam=lam, source=spec.source)


def _run_packed(args):
    spec, conf = args
    return run_configuration(spec, *conf)


def run_sweep(spec: SweepSpec, threads: int = 1) -> list[EstimateReport]:
    """All configurations of ``spec``, sorted by (p, source, seed, lam, shape)."""
    confs = list(spec.configurations())
    if threads > 1 and len(confs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(_run_packed, [(spec, c) for c in confs]))
    else:
        reports = [run_configuration(spec, *c) for c in confs]
    return sorted(reports, key=lambda r: r.key)


def _refinement_flags(reports, attr):
    groups = {}
    for r in reports:
        groups.setdefault((r.p, r.source, r.seed, r.lam), []).append(r)
    for group in groups.values():
        group.sort(key=lambda r: r.shape)
        if len(group) < 2:
            continue
        coarse, fine = group[-2], group[-1]
        a, b = getattr(coarse, attr), getattr(fine, attr)
        if a is None or b is None:
            continue
        growth = b / a - 1.0
        if growth > GROWTH_LIMIT:
            fine.flags.append(f"{attr} grew by {100 * growth:.1f}% from N={coarse.shape[0]} to N={fine.shape[0]}")


def verify_linfty_estimate(spec: SweepSpec, threads: int = 1, reports=None) -> list[EstimateReport]:
    """Reports for the sup-norm bound, flagging C_inf growth above 10% between the two finest grids."""
    reports = run_sweep(spec, threads) if reports is None else reports
    _refinement_flags(reports, "c_emp_inf")
    return reports


def verify_lp_estimate(spec: SweepSpec, threads: int = 1, reports=None) -> list[EstimateReport]:
    """As :func:`verify_linfty_estimate` for C_p, plus ``C_p <= C_inf |Omega|^(1/p)``."""
    reports = run_sweep(spec, threads) if reports is None else reports
    _refinement_flags(reports, "c_emp_p")
    for r in reports:
        if r.c_emp_p is None:
            continue
        bound = r.c_emp_inf * math.prod(r.lengths) ** (1.0 / r.p)
        if r.c_emp_p > bound * (1 + 1e-12):
            r.flags.append(f"c_emp_p {r.c_emp_p!r} exceeds c_emp_inf*|Omega|^(1/p) = {bound!r}")
    return reports


# -- manufactured convergence ------------------------------------------------

@dataclass
class ConvergenceTable:
    errors: list  # one dict per resolution
    orders: list  # one dict per consecutive pair; empty for a single resolution

    def rows(self):
        keys = ("u_max", "u_l2", "curl_max", "curl_l2")
        out = [["N", *keys]]
        out += [[e["N"], *(repr(e[k]) for k in keys)] for e in self.errors]
        out += [[f"order {o['N_coarse']}->{o['N_fine']}", *(repr(o[k]) for k in keys)] for o in self.orders]
        return out


def manufactured_errors(result, g: BoxDomain) -> dict:
    u_ex, curl_ex, _ = manufactured_solution(g)
    du = result.u - _sample(g, u_ex)
    dw = result.curl_u - calculus.sample_faces(g, *(lambda x, y, z, i=i: curl_ex(x, y, z)[i] for i in range(3)))
    return {
        "N": g.shape[0],
        "u_max": du.max_abs(),
        "u_l2": calculus.norm(du, g),
        "curl_max": dw.max_abs(),
        "curl_l2": calculus.norm(dw, g),
    }


def convergence_study(resolutions, p: float = 2.0, lengths=(1.0, 1.0, 1.0), solver: dict | None = None) -> ConvergenceTable:
    """Errors and observed orders against the manufactured p = 2 solution."""
    resolutions = [int(n) for n in resolutions]
    if not resolutions:
        raise ContractError("need at least one resolution")
    if any(b <= a for a, b in zip(resolutions, resolutions[1:])):
        raise ContractError("resolutions must be strictly ascending")
    errors = []
    for n in resolutions:
        g = BoxDomain(lengths, (n, n, n))
        res = solve(manufactured_source(g), SolverConfig(p=p, **(solver or {})), g)
        errors.append(manufactured_errors(res, g))
    orders = []
    for a, b in zip(errors, errors[1:]):
        ratio = math.log(b["N"] / a["N"])
        orders.append({"N_coarse": a["N"], "N_fine": b["N"],
                       **{k: math.log(a[k] / b[k]) / ratio for k in ("u_max", "u_l2", "curl_max", "curl_l2")}})
    return ConvergenceTable(errors, orders)


# -- output ------------------------------------------------------------------

def write_reports(reports, path) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        for r in reports:
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")
    return path


def write_table(reports, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in reports:
            w.writerow(r.csv_row())
    return path


def max_refinement_change(reports, attr: str) -> float:
    """Largest relative change of ``attr`` between the two finest grids of any group."""
    groups = {}
    for r in reports:
        groups.setdefault((r.p, r.source, r.seed, r.lam), []).append(r)
    worst = 0.0
    for group in groups.values():
        group.sort(key=lambda r: r.shape)
        if len(group) >= 2 and getattr(group[-2], attr) is not None:
            worst = max(worst, abs(getattr(group[-1], attr) / getattr(group[-2], attr) - 1.0))
    return worst
