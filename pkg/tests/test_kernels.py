import numpy as np
import pytest

from pcurl import _kernels_py, kernels

try:
    from pcurl import _kernels as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None

needs_compiled = pytest.mark.skipif(_compiled is None, reason="compiled kernels not built")

SHAPE = (5, 4, 6)
H = (0.3, 0.25, 0.1)


def _edges(rng):
    nx, ny, nz = SHAPE
    return (rng.standard_normal((nx, ny + 1, nz + 1)), rng.standard_normal((nx + 1, ny, nz + 1)),
            rng.standard_normal((nx + 1, ny + 1, nz)))


def _faces(rng):
    nx, ny, nz = SHAPE
    return (rng.standard_normal((nx + 1, ny, nz)), rng.standard_normal((nx, ny + 1, nz)),
            rng.standard_normal((nx, ny, nz + 1)))


def _close(a, b):
    for x, y in zip(a, b):
        np.testing.assert_allclose(x, y, rtol=1e-13, atol=1e-13)


@needs_compiled
def test_backends_agree_on_operators(rng):
    u = _edges(rng)
    w = _faces(rng)
    _close(_compiled.curl(*u, *H), _kernels_py.curl(*u, *H))
    _close(_compiled.curl_t(*w, *H), _kernels_py.curl_t(*w, *H))
    _close([_compiled.cell_sq(*w)], [_kernels_py.cell_sq(*w)])
    c = rng.random(SHAPE)
    _close(_compiled.spread(c, *w), _kernels_py.spread(c, *w))
    phi = rng.standard_normal(tuple(n + 1 for n in SHAPE))
    _close([_compiled.laplacian(phi, *H)], [_kernels_py.laplacian(phi, *H)])
    a, b, wt = rng.random(50), rng.random(50), rng.random(50)
    assert _compiled.wdot(a, b, wt) == pytest.approx(_kernels_py.wdot(a, b, wt), rel=1e-14)


@needs_compiled
@pytest.mark.parametrize("p", [1.5, 2.0, 2.5, 3.0, 4.0])
@pytest.mark.parametrize("eps", [0.0, 1e-2])
def test_backends_agree_on_energy_flux(rng, p, eps):
    if p < 2 and eps == 0:
        pytest.skip("weight is singular at zero curl")
    w = _faces(rng)
    e1, *f1 = _compiled.energy_flux(*w, p, eps)
    e2, *f2 = _kernels_py.energy_flux(*w, p, eps)
    assert e1 == pytest.approx(e2, rel=1e-13)
    _close(f1, f2)
    _close([_compiled.cell_weight(_compiled.cell_sq(*w), p, eps)],
           [_kernels_py.cell_weight(_kernels_py.cell_sq(*w), p, eps)])


def test_zero_curl_weight_is_finite():
    s = np.zeros((2, 2, 2))
    assert np.all(_kernels_py.cell_weight(s, 1.5, 0.0) == 0.0)
    assert np.all(_kernels_py.cell_weight(s, 3.0, 0.0) == 0.0)


def test_selector_switches_and_restores():
    before = kernels.BACKEND
    try:
        assert kernels.use("python") == "python"
        assert kernels.curl is _kernels_py.curl
        if _compiled is not None:
            assert kernels.use("cython") == "cython"
            assert kernels.curl is _compiled.curl
            # names the extension lacks fall back to numpy
            assert kernels.divergence is _kernels_py.divergence
    finally:
        kernels.use(before)
