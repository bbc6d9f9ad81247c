import warnings

import numpy as np
import pytest
from scipy import integrate

from pcurl import BoxDomain, ContractError, EdgeField
from pcurl import calculus as dc
from pcurl.harness import make_random_divfree_source, manufactured_solution, manufactured_source
from pcurl.poisson import leray_project
from pcurl.solver import (
    SolverConfig,
    SourceWarning,
    energy,
    energy_gradient,
    project_source,
    solve,
    weak_residual,
)

from conftest import random_edges, random_nodes


@pytest.fixture(scope="module")
def g8():
    return BoxDomain((1.0, 1.2, 0.9), (8, 8, 8))


@pytest.fixture(scope="module")
def manufactured32():
    g = BoxDomain.cube(32)
    f = manufactured_source(g)
    return g, f, solve(f, SolverConfig(p=2), g)


def zinvariant_source(g, fz):
    return dc.sample_edges(g, lambda x, y, z: 0 * x, lambda x, y, z: 0 * x,
                           lambda x, y, z: fz(x, y) + 0 * z).constrained()


# -- configuration -------------------------------------------------------------

def test_default_schedules():
    assert SolverConfig(p=3).epsilon_schedule == (1e-2, 1e-4, 1e-8, 0.0)
    assert SolverConfig(p=1.5).epsilon_schedule == (1e-2, 1e-4, 1e-6)
    assert SolverConfig(p=1.5).terminal_eps == 1e-6


@pytest.mark.parametrize("kwargs", [
    {"p": 1.0}, {"p": 0.5}, {"p": 1.02}, {"p": float("nan")},
    {"p": 3, "epsilon_schedule": (1e-4, 1e-2)},
    {"p": 3, "epsilon_schedule": (-1e-2,)},
    {"p": 3, "epsilon_schedule": ()},
    {"p": 1.5, "epsilon_schedule": (1e-2, 0.0)},
    {"p": 3, "grad_tol": 0.0},
    {"p": 3, "backtrack": 1.0},
])
def test_config_validation(kwargs):
    with pytest.raises(ContractError):
        SolverConfig(**kwargs)


# -- energy and gradient -------------------------------------------------------

def test_energy_at_zero_and_positive_without_source(g8, rng):
    f = leray_project(random_edges(g8, rng), g8)
    assert energy(EdgeField(g8), f, 3.0, 0.0, g8) == 0.0
    u = random_edges(g8, rng)
    assert energy(u, EdgeField(g8), 3.0, 0.0, g8) > 0
    with pytest.raises(ContractError):
        energy(u, f, 1.0, 0.0, g8)
    with pytest.raises(ContractError):
        energy(u, f, 3.0, -1.0, g8)


def test_gradient_at_zero_is_minus_source(g8, rng):
    f = leray_project(random_edges(g8, rng), g8)
    grad = energy_gradient(EdgeField(g8), f, 3.0, 1e-2, g8)
    np.testing.assert_array_equal(grad.data, -f.data)


def test_gradient_linear_case(g8, rng):
    u, f = random_edges(g8, rng), random_edges(g8, rng)
    expect = dc.curl_adjoint(dc.curl(u, g8), g8) - f
    for eps in (0.0, 0.3):
        got = energy_gradient(u, f, 2.0, eps, g8)
        assert (got - expect).max_abs() <= 1e-12 * expect.max_abs()


def fd_check(u, f, p, eps, g, d):
    grad = energy_gradient(u, f, p, eps, g)
    t = 1e-5 * u.max_abs() / d.max_abs()
    fd = (energy(u + d * t, f, p, eps, g) - energy(u - d * t, f, p, eps, g)) / (2 * t)
    exact = dc.inner(grad, d, g)
    return abs(fd - exact) / abs(exact)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 4.0])
@pytest.mark.parametrize("eps", [1e-2, 0.0])
def test_gradient_matches_finite_differences(g8, p, eps):
    if p < 2 and eps == 0:
        pytest.skip("p < 2 needs eps > 0")
    rng = np.random.default_rng(int(10 * p))
    for _ in range(3):
        u, f, d = (random_edges(g8, rng) for _ in range(3))
        assert fd_check(u, f, p, eps, g8, d) <= 1e-6


def test_manufactured_energy_against_quadrature(manufactured32):
    g, _, res = manufactured32
    u, curl_u, f = manufactured_solution(g)

    def density(y, x):
        cx, cy, _ = curl_u(x, y, 0.0)
        return 0.5 * (cx * cx + cy * cy) - f(x, y, 0.0)[2] * u(x, y, 0.0)[2]

    J_exact, _ = integrate.dblquad(density, 0, 1, 0, 1, epsabs=1e-12)
    assert J_exact == pytest.approx(-np.pi**2 / 4, rel=1e-9)
    assert res.energy == pytest.approx(J_exact, rel=0.01)


# -- solve -------------------------------------------------------------------------

def test_zero_source_gives_zero_solution(g8):
    res = solve(EdgeField(g8), SolverConfig(p=3), g8)
    assert res.converged
    assert res.u.max_abs() == 0.0 and res.energy == 0.0
    assert res.total_iterations == 0


def test_manufactured_p2(manufactured32):
    g, f, res = manufactured32
    assert res.converged
    peak = res.curl_mag.data.max()
    assert abs(peak - np.pi) / np.pi < 0.02
    assert res.projected_grad_norm <= 1e-8 * max(1.0, dc.norm(f, g))
    assert dc.interior_divergence_max(res.u, g) <= 1e-10 * res.u.max_abs() / min(g.spacing)
    assert res.u.is_constrained()
    # u should be close to (0, 0, sin(pi x) sin(pi y))
    uz = res.u.components[2]
    assert np.abs(res.u.components[0]).max() < 1e-7 and np.abs(res.u.components[1]).max() < 1e-7
    assert abs(uz.max() - 1.0) < 0.01


def test_rejects_sources_that_are_not_admissible(g8, rng):
    with pytest.raises(ContractError):
        solve(random_edges(g8, rng, constrained=False), SolverConfig(p=3), g8)
    grad_source = dc.gradient(random_nodes(g8, rng, zero_boundary=True), g8)
    with pytest.raises(ContractError):
        solve(grad_source, SolverConfig(p=3), g8)


def test_descent_and_warm_start(g8):
    f = make_random_divfree_source(g8, 3)
    res = solve(f, SolverConfig(p=3), g8)
    assert res.converged and len(res.iterations) == 4
    by_stage = {}
    for stage, eps, it, J, _ in res.trace:
        by_stage.setdefault(stage, []).append(J)
    for J in by_stage.values():
        J = np.array(J)
        assert np.all(np.diff(J) <= 1e-13 * np.abs(J).max())
    # later stages start where the previous stage ended, so they need little work
    assert res.iterations[-1] < res.iterations[0]


@pytest.mark.parametrize("cap", [1, 3, 7])
def test_iterates_stay_admissible(g8, cap):
    f = make_random_divfree_source(g8, 1)
    res = solve(f, SolverConfig(p=3, max_iters=cap), g8)
    assert not res.converged and "iteration cap" in res.message
    assert res.iterations == [cap]
    assert res.u.is_constrained()
    assert dc.interior_divergence_max(res.u, g8) <= 1e-9 * max(res.u.max_abs(), 1.0) / min(g8.spacing)
    assert np.isfinite(res.energy) and res.energy < 0


def test_z_invariant_source_gives_z_invariant_solution():
    g = BoxDomain.cube(12)
    f = zinvariant_source(g, lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y))
    res = solve(f, SolverConfig(p=3), g)
    ux, uy, uz = res.u.components
    scale = res.u.max_abs()
    assert np.abs(ux).max() <= 1e-7 * scale and np.abs(uy).max() <= 1e-7 * scale
    assert np.abs(uz - uz[:, :, :1]).max() <= 1e-7 * scale


# -- weak residual -------------------------------------------------------------

def test_weak_residual_at_minimiser_and_at_zero(manufactured32):
    g, f, res = manufactured32
    assert res.weak_residual <= 10 * 1e-8 * dc.norm(f, g)
    r0 = weak_residual(EdgeField(g), f, 2.0, g, trials=4)
    assert r0 > 1e-3


def test_weak_residual_decreases_with_tolerance(g8):
    f = make_random_divfree_source(g8, 2)
    resids = [solve(f, SolverConfig(p=3, grad_tol=t), g8).weak_residual for t in (1e-4, 1e-6, 1e-8)]
    assert resids[0] > resids[1] > resids[2]


# -- project_source ------------------------------------------------------------

def test_project_source_cases(g8, rng):
    f = leray_project(random_edges(g8, rng), g8)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        out, discarded = project_source(f, g8, return_discarded=True)
    assert (out - f).max_abs() <= 1e-10 * f.max_abs()
    assert discarded <= 1e-10 * dc.norm(f, g8)

    grad_only = dc.gradient(random_nodes(g8, rng, zero_boundary=True), g8)
    with pytest.warns(SourceWarning):
        out = project_source(grad_only, g8)
    assert out.max_abs() <= 1e-9 * grad_only.max_abs()

    with pytest.raises(ContractError):
        project_source(random_edges(g8, rng, constrained=False), g8)


def test_project_source_keeps_manufactured_source():
    g = BoxDomain.cube(16)
    f = manufactured_source(g)
    assert (project_source(f, g) - f).max_abs() <= 1e-9 * f.max_abs()
