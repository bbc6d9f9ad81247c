"""Acceptance criteria 1-9.

Each test records one ``PASS``/``FAIL`` line with the measured numbers; the
lines are printed in the terminal summary (see ``conftest.py``).  Run with

    pytest tests/test_acceptance.py -v
"""
import csv
import json
import math
from contextlib import contextmanager

import numpy as np

from pcurl import BoxDomain
from pcurl import calculus as dc
from pcurl.cli import main as cli_main
from pcurl.harness import (
    convergence_study,
    estimate_report,
    make_random_divfree_source,
    manufactured_source,
)
from pcurl.lorentz import MeasuredSample, distribution_function, lorentz_norm, lp_norm, rearrangement
from pcurl.oracle2d import Grid2D, Scalar2DField, compare_reduction, solve_plaplace
from pcurl.poisson import leray_project
from pcurl.solver import SolverConfig, energy, energy_gradient, solve

from conftest import ACCEPTANCE_LINES, ROOT, cell_flux, random_edges, random_faces, random_nodes

PI = np.pi


@contextmanager
def criterion(number, title):
    notes = []
    try:
        yield notes
    except BaseException:
        ACCEPTANCE_LINES.append(f"FAIL  {number}. {title}  {'; '.join(notes)}")
        raise
    line = f"PASS  {number}. {title}  {'; '.join(notes)}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def test_criterion_1_discrete_exactness():
    with criterion(1, "discrete exactness") as notes:
        rng = np.random.default_rng(1)
        worst_cg = worst_flux = worst_adj = 0.0
        for n in (8, 16, 32):
            g = BoxDomain((1.0, 1.4, 0.8), (n, n, n))
            h2 = min(g.spacing) ** 2
            for _ in range(100):
                phi = random_nodes(g, rng)
                worst_cg = max(worst_cg, dc.curl(dc.gradient(phi, g), g).max_abs() * h2 / phi.max_abs())
                u = random_edges(g, rng, constrained=False)
                worst_flux = max(worst_flux, np.abs(cell_flux(dc.curl(u, g))).max() * h2 / u.max_abs())
                uc, w = u.constrained(), random_faces(g, rng)
                gap = abs(dc.inner(dc.curl(uc, g), w, g) - dc.inner(uc, dc.curl_adjoint(w, g), g))
                worst_adj = max(worst_adj, gap / (dc.norm(uc, g) * dc.norm(w, g)))
        notes += [f"curl(grad) {worst_cg:.1e}", f"flux(curl) {worst_flux:.1e}", f"adjoint {worst_adj:.1e}"]
        assert worst_cg <= 1e-13 and worst_flux <= 1e-13
        assert worst_adj <= 1e-12


def test_criterion_2_lorentz():
    with criterion(2, "Lorentz norms") as notes:
        rng = np.random.default_rng(2)
        worst = 0.0
        for _ in range(100):
            n = int(rng.integers(1, 60))
            s = MeasuredSample(rng.choice(rng.random(n) * 5, n), rng.random(n) + 1e-3)
            p = float(rng.uniform(1, 8))
            worst = max(worst, abs(lorentz_norm(s, p, p) / lp_norm(s, p) - 1))
            r = rearrangement(s).as_sample()
            for lvl in rng.random(20) * 5:
                # same weights summed in a different order: equal up to the last bit
                assert math.isclose(distribution_function(r, lvl), distribution_function(s, lvl), rel_tol=1e-15)
        ind = lorentz_norm(MeasuredSample([1.0], [8.0]), 3, 1)
        two = lorentz_norm(MeasuredSample([2.0, 1.0], [1.0, 7.0]), 3, 1)
        notes += [f"L(p,p)/L^p-1 {worst:.1e}", f"indicator {ind!r}", f"two-step {two!r}"]
        assert worst <= 1e-12
        assert abs(ind - 6.0) <= 4e-15 and abs(two - 9.0) <= 4e-15


def test_criterion_3_gradient():
    with criterion(3, "energy gradient vs finite differences") as notes:
        g = BoxDomain.cube(8)
        rng = np.random.default_rng(3)
        worst = 0.0
        for p in (1.5, 2.0, 3.0, 4.0):
            for eps in (1e-2, 0.0):
                if p < 2 and eps == 0:
                    continue
                for _ in range(3):
                    u, f, d = (random_edges(g, rng) for _ in range(3))
                    t = 1e-5 * u.max_abs() / d.max_abs()
                    fd = (energy(u + d * t, f, p, eps, g) - energy(u - d * t, f, p, eps, g)) / (2 * t)
                    exact = dc.inner(energy_gradient(u, f, p, eps, g), d, g)
                    worst = max(worst, abs(fd - exact) / abs(exact))
        notes.append(f"max relative error {worst:.1e}")
        assert worst <= 1e-6


def test_criterion_4_manufactured():
    with criterion(4, "manufactured p = 2") as notes:
        g = BoxDomain.cube(32)
        f = manufactured_source(g)
        res = solve(f, SolverConfig(p=2), g)
        rep = estimate_report(res, f, 2.0, g)
        table = convergence_study([16, 32])
        order = table.orders[0]["curl_max"]
        e_inf = abs(rep.norm_curl_inf - PI) / PI
        e_2 = abs(rep.norm_curl_p - PI / math.sqrt(2)) / (PI / math.sqrt(2))
        notes += [f"max|curl u| {rep.norm_curl_inf:.5f} ({100 * e_inf:.2f}%)",
                  f"L2 {rep.norm_curl_p:.5f} ({100 * e_2:.2f}%)", f"order {order:.3f}"]
        assert res.converged
        assert e_inf <= 0.02 and e_2 <= 0.02 and order >= 1.8


def test_criterion_5_uniqueness():
    with criterion(5, "uniqueness from random starts") as notes:
        g = BoxDomain.cube(16)
        f = make_random_divfree_source(g, 0)
        for p in (1.5, 3.0):
            curls = []
            for seed in (10, 11):
                rng = np.random.default_rng(seed)
                u0 = leray_project(random_edges(g, rng) * 0.1, g)
                res = solve(f, SolverConfig(p=p), g, u0=u0)
                assert res.converged
                curls.append(res.curl_u)
            gap = (curls[0] - curls[1]).max_abs() / curls[0].max_abs()
            notes.append(f"p={p:g} {gap:.1e}")
            assert gap <= 1e-6


def test_criterion_6_homogeneity():
    with criterion(6, "homogeneity") as notes:
        g = BoxDomain.cube(16)
        f = make_random_divfree_source(g, 1)
        cfg = SolverConfig(p=3)
        reports = []
        for lam in (1.0, 4.0, 16.0):
            fl = f * lam
            reports.append(estimate_report(solve(fl, cfg, g), fl, 3.0, g, lam=lam))
        ratio = reports[1].norm_curl_inf / reports[0].norm_curl_inf
        c = [r.c_emp_inf for r in reports]
        spread = max(c) / min(c) - 1
        notes += [f"curl ratio {ratio:.8f}", f"C_emp_inf spread {spread:.1e}"]
        assert abs(ratio / 2.0 - 1) <= 1e-4
        assert spread <= 1e-3


def test_criterion_7_oracle():
    with criterion(7, "cross-solver oracle") as notes:
        disc = {}
        for n in (16, 32):
            g = BoxDomain.cube(n)
            f = dc.sample_edges(g, lambda x, y, z: 0 * x, lambda x, y, z: 0 * x,
                                lambda x, y, z: np.sin(PI * x) * np.sin(PI * y) + 0 * z).constrained()
            res = solve(f, SolverConfig(p=3), g)
            g2 = Grid2D.square(n)
            phi = solve_plaplace(Scalar2DField.sample(g2, lambda x, y: np.sin(PI * x) * np.sin(PI * y)), 3.0, 1e-10)
            disc[n] = compare_reduction(res, phi)
        notes += [f"N={n} magnitude {d.magnitude:.2e} field {d.field:.2e}" for n, d in disc.items()]
        assert disc[32].magnitude <= 0.02 and disc[32].field <= 0.02
        assert disc[32].magnitude < disc[16].magnitude
        assert disc[32].field < disc[16].field


def test_criterion_8_estimate_boundedness(tmp_path):
    with criterion(8, "estimate boundedness sweep") as notes:
        out = tmp_path / "sweep"
        status = cli_main(["sweep", "--config", str(ROOT / "configs" / "acceptance_sweep.cfg"),
                           "--out", str(out), "--threads", "4"])
        rows = list(csv.DictReader(open(out / "table.csv")))
        reports = [json.loads(line) for line in open(out / "reports.jsonl")]
        groups = {}
        for r in rows:
            groups.setdefault((r["p"], r["seed"]), {})[int(r["Nx"])] = r
        worst = 0.0
        for pair in groups.values():
            for key in ("c_emp_inf", "c_emp_p"):
                a, b = float(pair[16][key]), float(pair[32][key])
                assert math.isfinite(a) and math.isfinite(b)
                worst = max(worst, abs(b / a - 1))
        for r in reports:
            bound = r["c_emp_inf"] * math.prod(r["lengths"]) ** (1 / r["p"])
            assert r["c_emp_p"] <= bound * (1 + 1e-12)
        notes += [f"exit {status}", f"{len(rows)} rows", f"max change {100 * worst:.2f}%"]
        assert status == 0 and len(rows) == 30
        assert worst <= 0.10


def test_criterion_9_cli_contract(tmp_path, capsys):
    with criterion(9, "CLI contract") as notes:
        def run(*argv):
            return cli_main([str(a) for a in argv])

        data = tmp_path / "two.txt"
        data.write_text("2 1\n1 7\n")
        assert run("lorentz", data, "--m", 3, "--p", 1, "--m", 3, "--p", "inf", "--lp", 2, "--lp", "inf") == 0
        assert capsys.readouterr().out == (ROOT / "tests" / "golden" / "lorentz_two_step.txt").read_text()
        (tmp_path / "empty.txt").write_text("")
        codes = {
            "ok": run("solve", "--out", tmp_path / "a", "--threads", 1, "p=3", "resolution=8", "seed=2"),
            "config": run("solve", "--out", tmp_path / "never"),
            "empty": run("lorentz", tmp_path / "empty.txt"),
            "nonconverged": run("sweep", "--out", tmp_path / "nc", "p_values=3", "resolutions=6", "max_iters=10"),
            "flagged": run("verify", "--out", tmp_path / "fl", "p_values=3", "resolutions=3,8",
                           "smoothness=1", "seed=5"),
        }
        assert run("solve", "--config", tmp_path / "a" / "resolved.cfg", "--out", tmp_path / "b",
                   "--threads", 1) == 0
        same = all((tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
                   for name in ("u.field", "curl_u.field", "summary.json", "trace.txt", "resolved.cfg"))
        golden = (ROOT / "tests" / "golden" / "solve_p3_n8" / "resolved.cfg").read_text()
        notes += [" ".join(f"{k}={v}" for k, v in codes.items()), f"bit-exact rerun {same}"]
        assert codes == {"ok": 0, "config": 2, "empty": 2, "nonconverged": 3, "flagged": 4}
        assert not (tmp_path / "never").exists()
        assert same and (tmp_path / "a" / "resolved.cfg").read_text() == golden
