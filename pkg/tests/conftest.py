import numpy as np
import pytest

from heatflow.mesh import TriangleMesh


def pytest_addoption(parser):
    parser.addoption(
        "--runslow",
        action="store_true",
        default=False,
        help="run tests marked slow (large-mesh validation runs)",
    )


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: heavy validation runs, off by default")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def make_grid_mesh(nx, ny, spacing=1.0, bump=0.0):
    """Triangulated rectangular patch; bump > 0 bends it out of plane."""
    xs = np.arange(nx) * spacing
    ys = np.arange(ny) * spacing
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    gz = bump * np.sin(gx) * np.cos(gy)
    verts = np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])
    faces = []
    for i in range(nx - 1):
        for j in range(ny - 1):
            a = i * ny + j
            b = (i + 1) * ny + j
            c = (i + 1) * ny + j + 1
            d = i * ny + j + 1
            faces.append([a, b, c])
            faces.append([a, c, d])
    return TriangleMesh(verts, np.asarray(faces, dtype=np.int64))


@pytest.fixture
def equilateral_mesh():
    verts = np.array(
        [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, np.sqrt(3.0) / 2.0, 0.0]]
    )
    return TriangleMesh(verts, np.array([[0, 1, 2]]))


@pytest.fixture
def grid_mesh():
    return make_grid_mesh(8, 8)


ICOSAHEDRON_OFF = """OFF
12 20 0
-1 0 1.618033988749895
1 0 1.618033988749895
-1 0 -1.618033988749895
1 0 -1.618033988749895
0 1.618033988749895 1
0 1.618033988749895 -1
0 -1.618033988749895 1
0 -1.618033988749895 -1
1.618033988749895 1 0
1.618033988749895 -1 0
-1.618033988749895 1 0
-1.618033988749895 -1 0
3 0 4 1
3 0 1 6
3 1 4 8
3 1 8 9
3 1 9 6
3 0 6 11
3 0 11 10
3 0 10 4
3 4 10 5
3 4 5 8
3 3 8 5
3 3 5 2
3 3 2 7
3 3 7 9
3 3 9 8
3 2 5 10
3 2 10 11
3 2 11 7
3 7 11 6
3 7 6 9
"""
