from pathlib import Path

import numpy as np
import pytest

from pcurl import BoxDomain, EdgeField, FaceField, NodeField

DATA = Path(__file__).parent / "data"
ROOT = Path(__file__).parent.parent

# filled by test_acceptance.py, printed at the end of the session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def cell_flux(w: FaceField) -> np.ndarray:
    """Net outward flux of a face field per cell volume (test-only helper)."""
    hx, hy, hz = w.grid.spacing
    wx, wy, wz = w.components
    return np.diff(wx, axis=0) / hx + np.diff(wy, axis=1) / hy + np.diff(wz, axis=2) / hz


def random_edges(g, rng, constrained=True):
    u = EdgeField(g, rng.standard_normal(g.edge_weights.size))
    return u.constrained() if constrained else u


def random_faces(g, rng):
    return FaceField(g, rng.standard_normal(g.face_weights.size))


def random_nodes(g, rng, zero_boundary=False):
    phi = NodeField(g, rng.standard_normal(g.node_weights.size))
    if zero_boundary:
        phi.data[~g.interior_node_mask] = 0.0
    return phi


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


@pytest.fixture
def box():
    # deliberately anisotropic so spacings differ per axis
    return BoxDomain((1.0, 1.3, 0.7), (5, 6, 7))
