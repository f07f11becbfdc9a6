"""Measurable linear regression ``y = Omega^T theta`` for the PV/boost plant.

Five first-order filters with pole ``lam`` act on the measured signals::

    xi1 = [lam/(p+lam)] I             xi2 = -[lam/(p+lam)] V
    xi3 = 1/2 [lam/(p+lam)] V^2       xi4 = 1/2 [lam/(p+lam)] I^2
    xi5 = -[lam/(p+lam)] (V dI/dt)

and ``chi = [1/(p+lam)](dI/dt * dxi2/dt)`` realises the swapping-lemma
correction that removes the unmeasured ``dV/dt``.  The regression reads::

    y = lam (I - xi1)
    Omega = (chi - I dxi2/dt, dxi2/dt, dxi3/dt, dxi4/dt, -xi5)

and holds, up to filter transients, with the all-positive ``theta`` of
:func:`map_a_to_theta`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import check_positive
from .integrators import rk4_step

N_THETA = 5
REGRESSION_COLUMNS = ("t", "y", "omega1", "omega2", "omega3", "omega4", "omega5")


@dataclass(frozen=True)
class FilterBank:
    lam: float = 100.0
    xi1: float = 0.0
    xi2: float = 0.0
    xi3: float = 0.0
    xi4: float = 0.0
    xi5: float = 0.0
    chi: float = 0.0
    t: float = 0.0

    def __post_init__(self):
        check_positive("lam", self.lam)

    @property
    def states(self):
        return [self.xi1, self.xi2, self.xi3, self.xi4, self.xi5, self.chi]

    def with_states(self, states, t):
        return replace(self, xi1=states[0], xi2=states[1], xi3=states[2],
                       xi4=states[3], xi5=states[4], chi=states[5], t=t)


@dataclass(frozen=True)
class RegressionSample:
    t: float
    y: float
    omega: tuple
    valid: bool = True

    def row(self):
        return (self.y,) + tuple(self.omega)


@dataclass(frozen=True)
class ThetaParams:
    theta1: float
    theta2: float
    theta3: float
    theta4: float
    theta5: float
    b1: float
    b2: float
    b3: float

    def to_array(self):
        return np.array([self.theta1, self.theta2, self.theta3, self.theta4, self.theta5])

    def constraint_residual(self):
        """``theta1*theta5 - theta3*theta4``; zero on the image of the mapping."""
        return self.theta1 * self.theta5 - self.theta3 * self.theta4


def filter_rhs(lam, states, V, I, Idot):
    """Time derivatives of ``(xi1, ..., xi5, chi)`` for given inputs."""
    xi1, xi2, xi3, xi4, xi5, chi = states
    dxi2 = lam * (-V - xi2)
    return [
        lam * (I - xi1),
        dxi2,
        lam * (0.5 * V * V - xi3),
        lam * (0.5 * I * I - xi4),
        lam * (-V * Idot - xi5),
        -lam * chi + Idot * dxi2,
    ]


def _signal(x):
    return x if callable(x) else (lambda t, _x=float(x): _x)


def filter_step(bank, V, I, Idot, dt):
    """Advance the filter bank one RK4 step.

    ``V``, ``I`` and ``Idot`` are either constants held over the step or
    callables of time evaluated at the stage instants.  In closed-loop runs
    the filters are co-integrated with the plant instead (see
    :mod:`pvdrem.harness.simulate`), so every stage sees consistent signals.
    """
    check_positive("dt", dt)
    fV, fI, fId = _signal(V), _signal(I), _signal(Idot)
    lam = bank.lam
    states = rk4_step(lambda t, x: filter_rhs(lam, x, fV(t), fI(t), fId(t)),
                      bank.t, bank.states, dt)
    return bank.with_states(states, bank.t + dt)


def regression_row(lam, states, V, I):
    """``(y, Omega_1..Omega_5)`` from filter states and instantaneous signals."""
    xi1, xi2, xi3, xi4, xi5, chi = states
    dxi2 = lam * (-V - xi2)
    return (
        lam * (I - xi1),
        chi - I * dxi2,
        dxi2,
        lam * (0.5 * V * V - xi3),
        lam * (0.5 * I * I - xi4),
        -xi5,
    )


def emit_sample(bank, V, I, Idot=None, warmup=5.0):
    """Regression sample at the bank's current time.

    Samples earlier than ``warmup / lam`` are flagged invalid: the filter
    initial-condition transient has not yet decayed.  ``Idot`` is accepted
    for signature symmetry with :func:`filter_step`; the sample itself only
    needs ``V`` and ``I``.
    """
    row = regression_row(bank.lam, bank.states, V, I)
    return RegressionSample(bank.t, row[0], row[1:], bank.t >= warmup / bank.lam)


def map_a_to_theta(a):
    """Regression parameters ``theta`` (with ``b1, b2, b3``) from the IV vector."""
    a1, a2, a3, a4, a5 = a.a1, a.a2, a.a3, a.a4, a.a5
    b1, b2, b3 = a.compact()
    den = 1.0 + a3 * a4 * b1
    return ThetaParams(
        theta1=a3 / den,
        theta2=(a3 * b1 + b3) / den,
        theta3=a3 * b3 / den,
        theta4=a3 * a4 / den,
        theta5=a3 * a4 * b3 / den,
        b1=b1, b2=b2, b3=b3,
    )


def write_regression_csv(path, t, y, omega):
    """Dump ``(t, y, omega1..omega5)`` rows with a header."""
    omega = np.asarray(omega, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(REGRESSION_COLUMNS)
        for ti, yi, oi in zip(t, y, omega):
            w.writerow([repr(float(ti)), repr(float(yi))] + [repr(float(v)) for v in oi])


class RegressorFilter(TransformerMixin, BaseEstimator):
    """Turn sampled plant measurements into regression samples.

    Parameters
    ----------
    lam : float
        Filter pole in 1/s.
    inductance : float
        Converter inductance ``L``; ``dI/dt`` follows from the inductor
        equation as ``(-u v_C + V) / L``.
    warmup : float
        Samples before ``warmup / lam`` seconds are marked invalid.

    Notes
    -----
    ``X`` has columns ``(t, V, I, v_C, u)`` on a uniform time grid.  Signals
    between samples are linearly interpolated for the RK4 stages, which
    adds an ``O(dt^2)`` error that co-integrated simulation avoids.
    """

    def __init__(self, lam=100.0, inductance=5e-3, warmup=5.0):
        self.lam = lam
        self.inductance = inductance
        self.warmup = warmup

    def fit(self, X, y=None):
        X = self._check(X)
        check_positive("lam", self.lam)
        check_positive("inductance", self.inductance)
        self.dt_ = float(X[1, 0] - X[0, 0]) if len(X) > 1 else 0.0
        self.n_features_in_ = X.shape[1]
        return self

    def _check(self, X):
        X = check_array(X, dtype=float, ensure_min_samples=2)
        if X.shape[1] != 5:
            raise ValueError(f"expected columns (t, V, I, v_C, u), got {X.shape[1]} columns")
        if np.any(np.diff(X[:, 0]) <= 0):
            raise ValueError("time column must be strictly increasing")
        return X

    def transform(self, X):
        """Return ``(n, 6)`` columns ``(y, omega1..omega5)``; see :meth:`valid_mask`."""
        check_is_fitted(self, "dt_")
        X = self._check(X)
        t, V, I, vC, u = X.T
        Idot = (-u * vC + V) / self.inductance
        lam = self.lam
        states = [0.0] * 6
        out = np.empty((len(X), 1 + N_THETA))
        out[0] = regression_row(lam, states, V[0], I[0])
        for n in range(len(X) - 1):
            t0, h = t[n], t[n + 1] - t[n]
            sig = (V[n], V[n + 1], I[n], I[n + 1], Idot[n], Idot[n + 1])

            def rhs(tt, x, t0=t0, h=h, sig=sig):
                w = (tt - t0) / h
                return filter_rhs(lam, x,
                                  sig[0] + w * (sig[1] - sig[0]),
                                  sig[2] + w * (sig[3] - sig[2]),
                                  sig[4] + w * (sig[5] - sig[4]))

            states = rk4_step(rhs, t0, states, h)
            out[n + 1] = regression_row(lam, states, V[n + 1], I[n + 1])
        return out

    def valid_mask(self, t):
        t = np.asarray(t, dtype=float)
        return t - t[0] >= self.warmup / self.lam

