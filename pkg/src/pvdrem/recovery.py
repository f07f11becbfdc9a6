"""Recover the IV parameters ``a`` from ``(theta1..theta4)`` and one point on the curve.

``a3``, ``a4`` and ``a5`` follow from ``theta`` alone; ``a1`` and ``a2`` need
a measured pair ``(V, I)`` lying on the IV curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ._validation import check_positive
from .exceptions import ConfigurationError, DomainError, RecoveryHold
from .pv_model import EXP_CLAMP, IVParams


@dataclass(frozen=True)
class RecoveryGuards:
    """Singularity guards.

    A denominator ``d`` is rejected when ``|d| <= eps_denominator * scale``,
    where ``scale`` is ``theta1**2`` for ``theta3*theta4 - theta1**2`` and
    ``|theta1|`` for ``theta1 - theta2*theta4``.
    """

    eps_denominator: float = 1e-12
    exp_clamp: float = EXP_CLAMP

    def __post_init__(self):
        check_positive("eps_denominator", self.eps_denominator, ConfigurationError)
        check_positive("exp_clamp", self.exp_clamp, ConfigurationError)


DEFAULT_GUARDS = RecoveryGuards()


def _denominators(t1, t2, t3, t4, guards):
    if not t1 > 0:
        raise RecoveryHold(f"theta1 must be positive, got {t1}")
    d_sq = t3 * t4 - t1 * t1
    d_lin = t1 - t2 * t4
    eps = guards.eps_denominator
    if abs(d_sq) <= eps * t1 * t1:
        raise RecoveryHold("theta3*theta4 - theta1^2 vanishes")
    if abs(d_lin) <= eps * t1:
        raise RecoveryHold("theta1 - theta2*theta4 vanishes")
    return d_sq, d_lin


def intermediate_b(theta1, theta2, theta3, theta4, guards=DEFAULT_GUARDS):
    """Proof-order quantities ``(b1, b3, a3, a4, a5)``.

    ``a4 = theta4/theta1`` and ``b3 = theta3/theta1``, then
    ``a3 = theta1 (1 - a4 b3) / (1 - theta2 a4)``,
    ``b1 = (theta2 - b3) / (theta1 (1 - a4 b3))`` and
    ``a5 = b3 / (1 - a4 b3)``.
    """
    _denominators(theta1, theta2, theta3, theta4, guards)
    a4 = theta4 / theta1
    b3 = theta3 / theta1
    one_m = 1.0 - a4 * b3
    a3 = theta1 * one_m / (1.0 - theta2 * a4)
    b1 = (theta2 - b3) / (theta1 * one_m)
    a5 = b3 / one_m
    return b1, b3, a3, a4, a5


def map_theta_to_a_raw(theta1, theta2, theta3, theta4, V, I, guards=DEFAULT_GUARDS):
    """Closed-form ``(a1, ..., a5)`` without the positivity check.

    Raises
    ------
    RecoveryHold
        When a guarded denominator vanishes or the exponent would be clamped.
    """
    t1, t2, t3, t4 = theta1, theta2, theta3, theta4
    d_sq, d_lin = _denominators(t1, t2, t3, t4, guards)
    arg = d_sq / d_lin * (V + t4 / t1 * I)
    if abs(arg) > guards.exp_clamp or not math.isfinite(arg):
        raise RecoveryHold(f"exponent {arg:.3g} outside the clamp")
    shift = t1 * t1 * (t1 * t2 - t3) / d_sq
    a2 = (t1 * t1 * I + t1 * t3 * V + shift) * math.exp(arg) / d_sq
    a1 = shift / d_sq - a2
    a3 = d_sq / (t2 * t4 - t1)
    a4 = t4 / t1
    a5 = t1 * t3 / (t1 * t1 - t3 * t4)
    return a1, a2, a3, a4, a5


def map_theta_to_a(theta1, theta2, theta3, theta4, V, I, guards=DEFAULT_GUARDS):
    """IV parameters from four regression parameters and a point ``(V, I)`` on the curve.

    Raises
    ------
    RecoveryHold
        When a guarded denominator vanishes, the exponent would be clamped,
        or the recovered vector is not strictly positive.
    """
    raw = map_theta_to_a_raw(theta1, theta2, theta3, theta4, V, I, guards)
    try:
        return IVParams(*raw)
    except DomainError as exc:
        raise RecoveryHold(f"recovered parameters not admissible: {exc}") from exc


class ParameterRecovery:
    """Stateful recovery that holds the last admissible estimate.

    Parameters
    ----------
    guards : RecoveryGuards
    smoothing_pole : float or None
        When set, the ``(V, I)`` pair is passed through a first-order
        low-pass filter with this pole (1/s) before use.  ``None`` uses the
        instantaneous pair, which lies on the curve exactly.

    Attributes
    ----------
    a_hat : IVParams or None
        Last admissible (strictly positive) estimate.
    a_raw : tuple or None
        Last non-singular closed-form output, admissible or not.
    holds : int
        Number of updates that kept the previous estimate.
    """

    def __init__(self, guards=DEFAULT_GUARDS, smoothing_pole=None):
        self.guards = guards
        self.smoothing_pole = smoothing_pole
        self.a_hat = None
        self.a_raw = None
        self.holds = 0
        self._vi = None

    def _point(self, V, I, dt):
        if self.smoothing_pole is None:
            return V, I
        if self._vi is None:
            self._vi = (V, I)
        else:
            w = -math.expm1(-self.smoothing_pole * dt)
            v0, i0 = self._vi
            self._vi = (v0 + w * (V - v0), i0 + w * (I - i0))
        return self._vi

    def update(self, theta_hat, V, I, dt):
        """Return the current admissible estimate; ``None`` before the first one."""
        Vp, Ip = self._point(V, I, dt)
        try:
            self.a_raw = map_theta_to_a_raw(*theta_hat[:4], Vp, Ip, self.guards)
            self.a_hat = IVParams(*self.a_raw)
        except (RecoveryHold, DomainError):
            self.holds += 1
        return self.a_hat
