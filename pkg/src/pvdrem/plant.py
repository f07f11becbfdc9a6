"""Averaged boost converter charging a battery from the PV array.

States are the capacitor voltage ``v_C`` and the inductor (array) current
``I``.  The array voltage ``V`` is an algebraic variable recovered from ``I``
through the IV relation at every stage evaluation::

    C dv_C/dt = u I - (v_C - v_b) / R_b
    L dI/dt   = -u v_C + V
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ._validation import check_positive
from .exceptions import AlgebraicConstraintError, ConfigurationError, DomainError
from .integrators import rk4_step
from .pv_model import solve_current, voltage_at_current

# Algebraic solves run to machine precision: DREM amplifies regression
# errors by the conditioning of the extended regressor.
SOLVE_TOL = 1e-15


@dataclass(frozen=True)
class PlantParams:
    L: float = 5e-3  # H
    C: float = 1e-3  # F
    R_b: float = 0.5  # ohm
    v_b: float = 760.0  # V

    def __post_init__(self):
        for name in ("L", "C", "R_b", "v_b"):
            check_positive(name, getattr(self, name), ConfigurationError)


@dataclass(frozen=True)
class PlantState:
    v_C: float
    I: float
    V: float
    t: float = 0.0

    def is_finite(self):
        return all(math.isfinite(x) for x in (self.v_C, self.I, self.V, self.t))


@dataclass(frozen=True)
class ControlLaw:
    """``u(t) = bias + sum(A * sin(w * t))`` with ``u = 1 - d`` for duty cycle ``d``.

    ``harmonics`` is a sequence of ``(amplitude, angular_frequency)`` pairs.
    """

    bias: float = 0.8
    harmonics: tuple = field(default=((0.1, 3.0), (0.1, 4.0)))

    def __post_init__(self):
        object.__setattr__(self, "harmonics",
                           tuple((float(A), float(w)) for A, w in self.harmonics))
        if self.bias - sum(abs(A) for A, _ in self.harmonics) <= 0:
            raise ConfigurationError("control law can reach u <= 0")

    def __call__(self, t):
        return control(self, t)


BENCHMARK_CONTROL = ControlLaw()


def control(law, t):
    """Evaluate the control signal; ``u`` must stay in ``(0, 1]``."""
    if t < 0:
        raise DomainError(f"time must be non-negative, got {t}")
    u = law.bias
    for A, w in law.harmonics:
        u += A * math.sin(w * t)
    if not 0.0 < u <= 1.0 + 1e-12:
        raise ConfigurationError(f"control u({t}) = {u} outside (0, 1]")
    return u


def algebraic_voltage(a, state):
    """Array voltage consistent with the current ``state.I``.

    Raises
    ------
    AlgebraicConstraintError
        If ``state.I >= a1 + a2`` (no voltage carries that current).
    """
    try:
        return voltage_at_current(a, state.I, hint=state.V, tol=SOLVE_TOL)
    except DomainError as exc:
        raise AlgebraicConstraintError(
            f"t={state.t:.6g}: cannot solve IV relation for I={state.I:.6g}: {exc}") from exc


def time_derivative_I(params, state, u):
    """``dI/dt`` from the inductor equation; no numerical differentiation."""
    return (-u * state.v_C + state.V) / params.L


def plant_rhs(params, a, u, v_C, I, V_hint):
    """Return ``(dv_C/dt, dI/dt, V)`` at one stage evaluation."""
    V = voltage_at_current(a, I, hint=V_hint, tol=SOLVE_TOL)
    dv = (u * I - (v_C - params.v_b) / params.R_b) / params.C
    di = (-u * v_C + V) / params.L
    return dv, di, V


def _as_law(u):
    if isinstance(u, ControlLaw):
        return u
    u = float(u)
    if not 0.0 < u <= 1.0:
        raise ConfigurationError(f"control u = {u} outside (0, 1]")
    return ControlLaw(bias=u, harmonics=())


def step(params, a, state, u, dt):
    """Advance the plant one RK4 step of length ``dt``.

    ``u`` is either a constant control value or a :class:`ControlLaw`
    evaluated at the stage times.
    """
    check_positive("dt", dt)
    law = _as_law(u)
    hint = [state.V]

    def rhs(t, x):
        try:
            dv, di, hint[0] = plant_rhs(params, a, control(law, t), x[0], x[1], hint[0])
        except DomainError as exc:
            raise AlgebraicConstraintError(
                f"stage at t={t:.6g}, I={x[1]:.6g}: {exc}") from exc
        return [dv, di]

    v_C, I = rk4_step(rhs, state.t, [state.v_C, state.I], dt)
    new = PlantState(v_C, I, hint[0], state.t + dt)
    return PlantState(v_C, I, algebraic_voltage(a, new), new.t)


def initial_state(params, a, law, t0=0.0):
    """Start at ``v_C = v_b`` with ``I`` drawn from the IV curve at ``V = v_b u(t0)``."""
    V0 = params.v_b * control(law, t0)
    I0 = solve_current(a, V0, tol=SOLVE_TOL)
    return PlantState(params.v_b, I0, voltage_at_current(a, I0, hint=V0, tol=SOLVE_TOL), t0)


def stored_energy(params, state):
    return 0.5 * params.C * state.v_C ** 2 + 0.5 * params.L * state.I ** 2
