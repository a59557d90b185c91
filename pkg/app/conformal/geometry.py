"""
Conformal vector field on R^4 and stereographic projection from S^3.
"""
import numpy as np

from core.errors import SingularInputError

POLE_TOL = 1e-12


def conformal_vector_field(x):
    """
    V(x) = (2 x1 x3, 2 x2 x3, x3^2 - x1^2 - x2^2 - x4^2, 2 x4 x3).

    Accepts a 4-vector or an array whose leading axis has length 4.
    """
    x1, x2, x3, x4 = np.asarray(x, dtype=float)
    return np.array([
        2 * x1 * x3,
        2 * x2 * x3,
        x3 ** 2 - x1 ** 2 - x2 ** 2 - x4 ** 2,
        2 * x4 * x3,
    ])


def stereographic_project(x):
    """(x1, x2, x3)/(1 - x4), for a point or a (4, ...) array of points."""
    x = np.asarray(x, dtype=float)
    denominator = 1 - x[3]
    if np.any(np.abs(denominator) <= POLE_TOL):
        raise SingularInputError("point at the projection pole x4 = 1")
    return x[:3] / denominator


def to_unit_sphere(points, center, radius):
    """Rescale points lying on the sphere (center, radius) onto S^3."""
    points = np.asarray(points, dtype=float)
    shape = (4,) + (1,) * (points.ndim - 1)
    return (points - np.reshape(center, shape)) / radius
