"""Maximum power point of the IV curve.

With ``I = F(V, I) = b1 - E - b3 V`` and ``E = b2 exp(a3 (V + a4 I))`` the
power ``P = V I`` is maximal where its derivative along the curve vanishes.
Eliminating ``E`` between that condition and the curve gives the MPP
current as an explicit function ``g(V)``; substituting it back yields a
scalar function ``H(V)`` that is strictly decreasing on ``V > 0`` with its
single root at the MPP voltage.  The observer ``dV_hat/dt = gamma_V H(V_hat)``
therefore converges to that root from any positive start.

Two forms are provided.  ``form="total"`` (default) differentiates ``P``
along the curve and its root is the exact maximiser of ``V I``.
``form="partial"`` holds ``I`` fixed while differentiating; it coincides
with the total form only when ``a4 = 0`` and otherwise places the root a
few volts below the true maximum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize

from ._validation import check_positive
from .exceptions import DomainError, ExponentOverflow
from .pv_model import EXP_CLAMP, open_circuit_voltage, solve_current

FORMS = ("total", "partial")


@dataclass(frozen=True)
class MppParams:
    b1: float
    b2: float
    b3: float
    a3: float
    a4: float

    def __post_init__(self):
        for name in ("b1", "b2", "b3", "a3", "a4"):
            check_positive(name, getattr(self, name))

    @classmethod
    def from_a(cls, a):
        b1, b2, b3 = a.compact()
        return cls(b1, b2, b3, a.a3, a.a4)


def _exp(p, V, I):
    arg = p.a3 * (V + p.a4 * I)
    if arg > EXP_CLAMP:
        return math.exp(EXP_CLAMP), True
    return math.exp(arg), False


def _h(p, V, I, form):
    e, clamped = _exp(p, V, I)
    E = p.b2 * e
    if form == "total":
        value = p.b1 - E - p.b3 * V - V * (p.a3 * E + p.b3) / (1.0 + p.a3 * p.a4 * E)
    elif form == "partial":
        value = p.b1 - E * (1.0 + p.a3 * V) - 2.0 * p.b3 * V
    else:
        raise DomainError(f"unknown form {form!r}; expected one of {FORMS}")
    if clamped:
        raise ExponentOverflow(f"exponent clamped at V={V:.6g}, I={I:.6g}", value)
    return value


def power_derivative_h(p, V, I, form="total"):
    """Derivative of ``P = V F(V, I)`` with respect to ``V`` at ``(V, I)``.

    Raises
    ------
    ExponentOverflow
        If the exponent had to be clamped; ``exc.value`` is the saturated result.
    """
    return _h(p, V, I, form)


def mpp_current_g(p, V, form="total"):
    """Current that the curve carries if ``V`` is the MPP voltage."""
    if form == "partial":
        return (2.0 * p.b3 * V - p.b1) / (1.0 + p.a3 * V) + p.b1 - p.b3 * V
    if form != "total":
        raise DomainError(f"unknown form {form!r}; expected one of {FORMS}")
    a3a4 = p.a3 * p.a4
    r = p.b1 - p.b3 * V
    B = 1.0 + a3a4 * r + p.a3 * V
    C = V * (p.a3 * r + p.b3)
    # Smaller root of a3 a4 I^2 - B I + C = 0; B > 0 always.
    return 2.0 * C / (B + math.sqrt(max(B * B - 4.0 * a3a4 * C, 0.0)))


def H(p, V, form="total"):
    """MPP residual ``h(V, g(V))``; positive below the MPP voltage, negative above."""
    return _h(p, V, mpp_current_g(p, V, form), form)


def _H_saturated(p, V, form):
    try:
        return H(p, V, form)
    except ExponentOverflow as exc:
        return exc.value


def mpp_voltage(p, form="total", xtol=1e-10):
    """Root of :func:`H` on the positive half line.

    ``H(0) = b1 - b2 > 0`` and ``H(b1/b3) < 0``, which brackets the root.
    """
    return optimize.brentq(lambda v: _H_saturated(p, v, form), 0.0, p.b1 / p.b3,
                           xtol=xtol, rtol=4 * np.finfo(float).eps)


@dataclass(frozen=True)
class MppObserver:
    V_hat: float = 0.0
    gamma_V: float = 0.5

    def __post_init__(self):
        check_positive("gamma_V", self.gamma_V)


EULER_STABILITY_LIMIT = 0.5


def _slope(p, V, form, delta=1e-3):
    lo = max(V - delta, 0.0)
    return (H(p, V + delta, form) - H(p, lo, form)) / (V + delta - lo)


def observer_step(obs, p, dt, form="total", max_halvings=20):
    """Euler step of ``dV_hat/dt = gamma_V H(V_hat)``, clamped at zero.

    The step is split while ``gamma_V |H'| dt >= 0.5``.  An overflowing
    evaluation of ``H`` leaves the observer unchanged.
    """
    check_positive("dt", dt)
    try:
        slope = abs(_slope(p, obs.V_hat, form))
    except ExponentOverflow:
        return obs
    n_sub = 1
    while obs.gamma_V * slope * dt / n_sub >= EULER_STABILITY_LIMIT and n_sub < 2 ** max_halvings:
        n_sub *= 2
    h = dt / n_sub
    V = obs.V_hat
    try:
        for _ in range(n_sub):
            V = max(V + obs.gamma_V * H(p, V, form) * h, 0.0)
    except ExponentOverflow:
        return obs
    return replace(obs, V_hat=V)


def brute_force_mpp(a, v_max=None, n=200, xtol=1e-5):
    """Maximiser of ``P(V) = V * I(V)`` found without the MPP equations.

    The power is sampled on ``n`` grid points over ``[0, v_max]`` (default:
    the open-circuit voltage) and the best bracket is refined by golden
    section search to ``xtol`` volts.

    Returns
    -------
    (V_star, I_star, P_star)

    Raises
    ------
    DomainError
        If the sampled maximum sits on the grid boundary.
    """
    if n < 3:
        raise DomainError("grid needs at least 3 points")
    if v_max is None:
        v_max = open_circuit_voltage(a)
    check_positive("v_max", v_max)
    grid = np.linspace(0.0, v_max, n)
    current = solve_current(a, grid)
    power = grid * current
    k = int(np.argmax(power))
    if k == 0 or k == n - 1:
        raise DomainError(f"power maximum on the grid boundary (index {k}); widen the range")
    hint = [float(current[k])]

    def neg_power(v):
        hint[0] = solve_current(a, v, hint=hint[0], tol=1e-16)
        return -v * hint[0]

    lo, mid, hi = float(grid[k - 1]), float(grid[k]), float(grid[k + 1])
    res = optimize.minimize_scalar(neg_power, bracket=(lo, mid, hi), method="golden",
                                   tol=xtol / (4.0 * hi))
    V = float(res.x)
    I = solve_current(a, V, hint=hint[0], tol=1e-16)
    return V, I, V * I
