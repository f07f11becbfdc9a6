"""Offline identification from recorded plant measurements."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .drem import DREMEstimator
from .exceptions import RecoveryHold
from .mpp import MppParams, mpp_voltage
from .pv_model import solve_current
from .recovery import map_theta_to_a
from .regressor import RegressorFilter


class PVArrayIdentifier(RegressorMixin, BaseEstimator):
    """Estimate the IV parameters and MPP voltage from sampled signals.

    ``fit`` takes ``X`` with columns ``(t, V, I, v_C, u)`` on a uniform
    grid, filters it into regression samples, runs DREM over the stream
    and recovers ``a`` at the last sample.  ``predict`` then returns the
    array current at the given voltages on the identified curve.

    Parameters
    ----------
    lam, inductance, warmup
        See :class:`RegressorFilter`.
    delays, beta, gamma, theta0, integrator
        See :class:`DREMEstimator`.

    Attributes
    ----------
    a_hat_ : IVParams
    theta_ : ndarray of shape (5,)
    mpp_voltage_ : float
    """

    def __init__(self, lam=100.0, inductance=5e-3, warmup=5.0,
                 delays=(0.1, 0.2, 0.3, 0.4), beta=1.25e-3, gamma=20.0,
                 theta0=(0.01, 0.006, 0.009, 0.001), integrator="exact"):
        self.lam = lam
        self.inductance = inductance
        self.warmup = warmup
        self.delays = delays
        self.beta = beta
        self.gamma = gamma
        self.theta0 = theta0
        self.integrator = integrator

    def fit(self, X, y=None):
        X = check_array(X, dtype=float, ensure_min_samples=2)
        filt = RegressorFilter(self.lam, self.inductance, self.warmup)
        rows = filt.fit_transform(X)
        dt = filt.dt_
        self.drem_ = DREMEstimator(dt=dt, delays=self.delays, beta=self.beta, gamma=self.gamma,
                                   theta0=self.theta0, integrator=self.integrator)
        self.drem_.fit(rows[:, 1:], rows[:, 0], valid=filt.valid_mask(X[:, 0]))
        self.theta_ = self.drem_.theta_
        try:
            self.a_hat_ = map_theta_to_a(*self.theta_[:4], X[-1, 1], X[-1, 2])
        except RecoveryHold as exc:
            raise RecoveryHold(f"no admissible estimate at the end of the record: {exc}") from exc
        self.mpp_voltage_ = mpp_voltage(MppParams.from_a(self.a_hat_))
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, V):
        """Array current at voltages ``V`` on the identified curve."""
        check_is_fitted(self, "a_hat_")
        V = np.asarray(V, dtype=float)
        if V.ndim == 2:
            V = check_array(V)[:, 0]
        return solve_current(self.a_hat_, V)
