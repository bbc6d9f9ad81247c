"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [N ...]

Prints one line per (kernel, N) with the best-of-5 wall time of each backend
and the speed-up, then the same for a full p = 3 solve.
"""
import sys
import timeit

import numpy as np

from pcurl import BoxDomain, EdgeField, FaceField, kernels
from pcurl import _kernels_py
from pcurl.harness import make_random_divfree_source
from pcurl.solver import SolverConfig, solve

try:
    from pcurl import _kernels as _compiled
except ImportError:
    _compiled = None


def _best(fn, number):
    return min(timeit.repeat(fn, number=number, repeat=5)) / number


def bench_kernels(n):
    g = BoxDomain.cube(n)
    rng = np.random.default_rng(0)
    u = EdgeField(g, rng.standard_normal(g.edge_weights.size))
    w = FaceField(g, rng.standard_normal(g.face_weights.size))
    h = g.spacing
    cases = {
        "curl": lambda m: m.curl(*u.components, *h),
        "curl_t": lambda m: m.curl_t(*w.components, *h),
        "cell_sq": lambda m: m.cell_sq(*w.components),
        "energy_flux": lambda m: m.energy_flux(*w.components, 3.0, 1e-4),
        "laplacian": lambda m: m.laplacian(np.ascontiguousarray(u.components[0][:, :, :n]), *h),
    }
    number = max(1, 20000 // n ** 2)
    for name, fn in cases.items():
        t_py = _best(lambda: fn(_kernels_py), number)
        if _compiled is None:
            print(f"{name:12s} N={n:3d}  python {t_py * 1e3:8.3f} ms  (no compiled backend)")
            continue
        t_cy = _best(lambda: fn(_compiled), number)
        print(f"{name:12s} N={n:3d}  python {t_py * 1e3:8.3f} ms  cython {t_cy * 1e3:8.3f} ms  x{t_py / t_cy:5.2f}")


def bench_solve(n):
    g = BoxDomain.cube(n)
    f = make_random_divfree_source(g, seed=0)
    cfg = SolverConfig(p=3.0)
    times = {}
    for backend in ("python", "cython"):
        if backend == "cython" and _compiled is None:
            continue
        kernels.use(backend)
        times[backend] = _best(lambda: solve(f, cfg, g), 1)
    kernels.use("auto")
    line = "  ".join(f"{k} {v:7.3f} s" for k, v in times.items())
    if len(times) == 2:
        line += f"  x{times['python'] / times['cython']:5.2f}"
    print(f"solve p=3    N={n:3d}  {line}")


if __name__ == "__main__":
    sizes = [int(a) for a in sys.argv[1:]] or [16, 32, 64]
    for n in sizes:
        bench_kernels(n)
    for n in sizes[:2]:
        bench_solve(n)
