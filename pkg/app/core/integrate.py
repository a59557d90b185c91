"""
Fixed-step classical Runge-Kutta integration for array-valued states.
"""
import numpy as np

from core.errors import InvalidInputError


def rk4_step(rhs, t, y, h):
    k1 = rhs(t, y)
    k2 = rhs(t + h / 2, y + (h / 2) * k1)
    k3 = rhs(t + h / 2, y + (h / 2) * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4(rhs, y0, t0, t1, steps, callback=None):
    """
    Integrate y' = rhs(t, y) from t0 to t1 in ``steps`` equal steps.

    ``callback(step, t, y)`` runs after every step and may raise to stop.
    """
    if steps < 0:
        raise InvalidInputError(f"step count must be nonnegative, got {steps}")
    y = np.array(y0, dtype=complex)
    if steps == 0:
        return y
    h = (t1 - t0) / steps
    for step in range(steps):
        t = t0 + step * h
        y = rk4_step(rhs, t, y, h)
        if callback is not None:
            callback(step + 1, t + h, y)
    return y
