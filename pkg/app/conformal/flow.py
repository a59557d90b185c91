"""
Conformal flow of (U, Psi, Phi) generated by the infinitesimal Moebius
transformation with fixed point x(0) = 0.

Along the flow, with coordinates re-anchored at x(0) = 0 at every stage,

    dU     = Phi_1 conj(Psi_1) - conj(Phi_2) Psi_2
    dPsi_1 = w Psi_1 - i v conj(Psi_2),    dPsi_2 = w Psi_2 + i v conj(Psi_1)
    dPhi_1 = w' Phi_1 - i v conj(Phi_2),   dPhi_2 = w' Phi_2 + i v conj(Phi_1)

where v = x1 - i x2, w = x3 - i x4 and w' = x3 + i x4.
"""
from dataclasses import dataclass

import numpy as np
import structlog

from config import settings
from conformal.geometry import conformal_vector_field
from core import metrics
from core.errors import AbortedTrajectoryError, InvalidInputError, ObstructionError
from core.fields import PeriodicField, mul_fields
from core.integrate import rk4
from core.quasi import QuasiPeriodicFunction, quasi_product
from dirac2d.operator import DiracPotential, dirac_residual
from weierstrass.surface import coordinate_derivatives, integrate_surface

logger = structlog.get_logger(__name__)

FLOW_CUTOFF = 8


@dataclass(frozen=True, eq=False)
class FlowState:
    potential: DiracPotential
    Psi: QuasiPeriodicFunction
    Phi: QuasiPeriodicFunction
    tau: float = 0.0

    @property
    def cutoff(self):
        return self.potential.cutoff

    @property
    def lattice(self):
        return self.potential.lattice

    def residuals(self):
        """Relative residuals of D Psi and of the adjoint operator on Phi."""
        return (
            dirac_residual(self.potential, self.Psi, relative=True),
            dirac_residual(self.potential, self.Phi, adjoint=True, relative=True),
        )

    def max_residual(self):
        return max(self.residuals())


def initial_state(potential, Psi, Phi, cutoff=FLOW_CUTOFF, tau=0.0):
    """A flow state with U, Psi and Phi on one common mode box."""
    if cutoff < 1:
        raise InvalidInputError(f"cutoff must be at least 1, got {cutoff}")
    return FlowState(
        DiracPotential(potential.field.resize(cutoff)),
        Psi.resize(cutoff),
        Phi.resize(cutoff),
        float(tau),
    )


def surface_of(state, closing_tol=None):
    """Coordinates of the state, anchored at x(0) = 0."""
    closing_tol = settings.FLOW_RESIDUAL_TOL if closing_tol is None else closing_tol
    torus = integrate_surface(coordinate_derivatives(state.Psi, state.Phi))
    if not torus.is_closed(closing_tol):
        metrics.error_counter.labels(error_type='obstruction').inc()
        raise ObstructionError(
            f"surface does not close at tau={state.tau}: "
            f"period residual {float(np.max(torus.period_residuals())):.3e}"
        )
    return torus


def _conjugate_components(psi):
    """conj of every component, rewritten over psi's own exponents."""
    return psi.conj().rebase(psi.exponents).components


def tau_derivatives(state, closing_tol=None):
    """(dU, dPsi, dPhi) at the state, truncated to the state cutoff."""
    N = state.cutoff
    Psi, Phi = state.Psi, state.Phi
    x1, x2, x3, x4 = surface_of(state, closing_tol).periodic
    v = x1 - 1j * x2
    w = x3 - 1j * x4
    w_dual = x3 + 1j * x4

    def mul(f, g):
        return mul_fields(f, g, cutoff=N)

    psi1_bar, psi2_bar = _conjugate_components(Psi)
    phi1_bar, phi2_bar = _conjugate_components(Phi)
    dPsi = Psi.with_components((
        mul(w, Psi[0]) - 1j * mul(v, psi2_bar),
        mul(w, Psi[1]) + 1j * mul(v, psi1_bar),
    ))
    dPhi = Phi.with_components((
        mul(w_dual, Phi[0]) - 1j * mul(v, phi2_bar),
        mul(w_dual, Phi[1]) + 1j * mul(v, phi1_bar),
    ))
    dU = (
        quasi_product(Phi, Psi.conj(), 0, 0).to_periodic()
        - quasi_product(Phi.conj(), Psi, 1, 1).to_periodic()
    ).resize(N)
    return dU, dPsi, dPhi


def _pack(fields):
    return np.stack([f.coeffs for f in fields])


def _unpack(array, template, tau):
    lattice = template.lattice
    U, psi1, psi2, phi1, phi2 = (PeriodicField(lattice, a) for a in array)
    return FlowState(
        DiracPotential(U),
        template.Psi.with_components((psi1, psi2)),
        template.Phi.with_components((phi1, phi2)),
        float(tau),
    )


def _state_array(state):
    return _pack((state.potential.field,) + state.Psi.components + state.Phi.components)


def flow(s0, dtau, steps, residual_tol=None, closing_tol=None):
    """
    Fixed-step RK4 trajectory [s0, s1, ..., s_steps].

    Every new state is checked against ``residual_tol``; a failing step raises
    AbortedTrajectoryError carrying the last valid state.
    """
    residual_tol = settings.FLOW_RESIDUAL_TOL if residual_tol is None else residual_tol
    if steps < 0:
        raise InvalidInputError(f"step count must be nonnegative, got {steps}")
    trajectory = [s0]
    if steps == 0:
        return trajectory

    def rhs(tau, y):
        dU, dPsi, dPhi = tau_derivatives(_unpack(y, s0, tau), closing_tol)
        return _pack((dU,) + dPsi.components + dPhi.components)

    def record(step, tau, y):
        state = _unpack(y, s0, tau)
        residual = state.max_residual()
        metrics.flow_steps.inc()
        if not np.isfinite(residual) or residual > residual_tol:
            metrics.error_counter.labels(error_type='aborted_trajectory').inc()
            raise AbortedTrajectoryError(
                f"residual {residual:.3e} above {residual_tol:.1e} at step {step}",
                last_state=trajectory[-1],
            )
        trajectory.append(state)

    try:
        rk4(rhs, _state_array(s0), s0.tau, s0.tau + steps * dtau, steps, callback=record)
    except ObstructionError as e:
        logger.error(
            "Flow aborted",
            tau=trajectory[-1].tau,
            error=str(e),
            exception_type=type(e).__name__,
        )
        raise AbortedTrajectoryError(str(e), last_state=trajectory[-1]) from e
    except AbortedTrajectoryError as e:
        logger.error(
            "Flow aborted",
            tau=trajectory[-1].tau,
            error=str(e),
            exception_type=type(e).__name__,
        )
        raise

    logger.info(
        "Flow finished",
        steps=steps,
        dtau=dtau,
        tau=trajectory[-1].tau,
        max_residual=max(s.max_residual() for s in trajectory),
    )
    return trajectory


def coordinate_flow(points, tau, steps):
    """Integrate dx/dtau = V(x) pointwise from ``points`` (leading axis 4)."""
    def rhs(_, x):
        return conformal_vector_field(x.real).astype(complex)

    return rk4(rhs, points, 0.0, tau, steps).real


def coordinate_crosscheck(first, last, steps, size=32):
    """
    Sup distance between the coordinates reconstructed from ``last`` and the
    coordinates of ``first`` transported along the conformal vector field.
    """
    start = surface_of(first).on_grid(size)
    if steps == 0 or last.tau == first.tau:
        return float(np.max(np.abs(surface_of(last).on_grid(size) - start)))
    predicted = coordinate_flow(start, last.tau - first.tau, steps)
    evolved = surface_of(last).on_grid(size)
    return float(np.max(np.abs(evolved - predicted)))
