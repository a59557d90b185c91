"""
OBJ-style mesh export of immersed tori.

Vertices are grid points z_ab = (a/P) gamma1 + (b/P) gamma2; every grid quad is
split into two triangles, wrapping around both periods.
"""
import numpy as np
import structlog

from conformal.geometry import stereographic_project, to_unit_sphere
from core.errors import InvalidInputError
from core.io import format_float, write_lines
from weierstrass.surface import sphere_fit

logger = structlog.get_logger(__name__)


def torus_faces(size):
    """1-based triangle indices of the wrapped size x size grid."""
    a, b = np.meshgrid(np.arange(size), np.arange(size), indexing='ij')
    a, b = a.ravel(), b.ravel()

    def vertex(i, j):
        return (i % size) * size + (j % size) + 1

    lower = np.stack([vertex(a, b), vertex(a + 1, b), vertex(a + 1, b + 1)], axis=1)
    upper = np.stack([vertex(a, b), vertex(a + 1, b + 1), vertex(a, b + 1)], axis=1)
    return np.concatenate([lower, upper])


def mesh_vertices(torus, size, stereographic=False):
    """Vertex coordinates, shape (size * size, 4) or (size * size, 3)."""
    points = torus.on_grid(size)
    if stereographic:
        fit = sphere_fit(torus, size)
        points = stereographic_project(to_unit_sphere(points, fit.center, fit.radius))
    return points.reshape(points.shape[0], -1).T


def obj_lines(torus, size, stereographic=False):
    if size < 3:
        raise InvalidInputError(f"mesh grid needs at least 3 points per period, got {size}")
    for vertex in mesh_vertices(torus, size, stereographic):
        yield 'v ' + ' '.join(format_float(v) for v in vertex)
    for face in torus_faces(size):
        yield 'f ' + ' '.join(str(int(i)) for i in face)


def write_obj(torus, path, size=32, stereographic=False):
    write_lines(path, obj_lines(torus, size, stereographic))
    logger.info("Mesh written", path=str(path), grid=size, stereographic=stereographic)
