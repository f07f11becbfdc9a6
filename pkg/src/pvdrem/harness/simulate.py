"""Closed-loop scenario runner: plant, filters, DREM, recovery and MPP observer.

The plant states ``(v_C, I)`` and the filter states ``(xi1..xi5, chi)`` are
advanced together by one RK4 step, so every stage evaluation feeds the
filters with the same ``V``, ``I`` and ``dI/dt`` the plant sees.  The
estimator, recovery and observer then run once per step on the new sample.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..drem import DremStage
from ..exceptions import PVDremError
from ..integrators import rk4_step
from ..mpp import H, MppObserver, MppParams, brute_force_mpp, observer_step
from ..plant import SOLVE_TOL, control, initial_state
from ..pv_model import voltage_at_current
from ..recovery import ParameterRecovery, RecoveryGuards
from ..regressor import REGRESSION_COLUMNS, RegressionSample, filter_rhs, map_a_to_theta, regression_row
from .metrics import RunMetrics, compute_metrics

SERIES_COLUMNS = {
    "plant": ("t", "v_C", "I", "V", "u"),
    "regression": REGRESSION_COLUMNS,
    "estimator": ("t", "delta", "excitation_integral",
                  "theta1", "theta2", "theta3", "theta4", "theta5"),
    "mpp": ("t", "V_hat", "V_star_true", "H_hat"),
    "params": ("t", "a1", "a2", "a3", "a4", "a5",
               "a1_hat", "a2_hat", "a3_hat", "a4_hat", "a5_hat", "a_hat_valid"),
}


@dataclass
class RunResult:
    """Logged series, metrics and failure diagnostic of one run.

    ``series`` maps each name in :data:`SERIES_COLUMNS` to an array whose
    columns follow that tuple.  ``failure`` is ``None`` for a complete run
    and holds the diagnostic otherwise; the series then stop at the last
    logged instant before the failure.
    """

    config: object
    series: dict
    metrics: RunMetrics
    failure: str | None = None
    wall_time: float = 0.0
    recovery_holds: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.failure is None


class _Log:
    def __init__(self, n_rows):
        self.rows = 0
        self.data = {k: np.empty((n_rows, len(c))) for k, c in SERIES_COLUMNS.items()}

    def append(self, **rows):
        for name, row in rows.items():
            self.data[name][self.rows] = row
        self.rows += 1

    def finish(self):
        return {k: v[:self.rows].copy() for k, v in self.data.items()}


class _Truth:
    """True IV parameters and brute-force MPP voltage over time."""

    def __init__(self, config):
        self.profile = config.environment
        self.reference = config.reference
        self._a0 = self.profile.params_at(self.reference, 0.0)
        self._vstar0 = brute_force_mpp(self._a0)[0] if self.profile.constant else None

    def a(self, t):
        if self.profile.constant:
            return self._a0
        return self.profile.params_at(self.reference, t)

    def v_star(self, t):
        if self.profile.constant:
            return self._vstar0
        return brute_force_mpp(self.a(t), n=64)[0]


def run(config):
    """Simulate ``config`` and return a :class:`RunResult`.

    Deterministic: identical configs give bit-identical series.  Library
    errors during the loop (plant abort, estimator step-size violation)
    end the run early with ``failure`` set.
    """
    start = time.perf_counter()
    dt, lam, L = config.dt, config.lam, config.plant.L
    plant = config.plant
    law = config.control
    truth = _Truth(config)
    n_steps = config.n_steps
    every = config.output.decimation
    log = _Log(n_steps // every + 1)

    stage = DremStage(config.drem, dt, config.theta0)
    recovery = ParameterRecovery(RecoveryGuards(eps_denominator=config.recovery.eps_denominator),
                                 config.recovery.smoothing_pole)
    obs = MppObserver(V_hat=config.observer.V_hat0, gamma_V=config.observer.gamma_V)
    form = config.observer.form
    warm_until = config.warmup / lam

    state0 = initial_state(plant, truth.a(0.0), law)
    x = [state0.v_C, state0.I, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
    V = state0.V
    hint = [V]
    delta, obs_p = 0.0, None

    def record(t, a_true, V, row):
        th = stage.state.theta_hat
        raw = recovery.a_raw
        if obs_p is None:
            H_hat = 0.0
        else:
            try:
                H_hat = H(obs_p, obs.V_hat, form)
            except PVDremError:
                H_hat = 0.0
        log.append(
            plant=(t, x[0], x[1], V, control(law, t)),
            regression=(t,) + row,
            estimator=(t, delta, stage.state.excitation_integral, *th),
            mpp=(t, obs.V_hat, truth.v_star(t), H_hat),
            params=(t, *a_true, *(raw if raw is not None else (0.0,) * 5),
                    float(recovery.a_hat is not None)),
        )

    def rhs(t, s):
        u = control(law, t)
        v_C, I = s[0], s[1]
        Vs = voltage_at_current(a_step, I, hint=hint[0], tol=SOLVE_TOL)
        hint[0] = Vs
        Idot = (-u * v_C + Vs) / L
        dv = (u * I - (v_C - plant.v_b) / plant.R_b) / plant.C
        return [dv, Idot] + filter_rhs(lam, s[2:], Vs, I, Idot)

    failure = None
    a_true = truth.a(0.0)
    row = regression_row(lam, x[2:], V, x[1])
    record(0.0, a_true, V, row)
    try:
        for n in range(n_steps):
            t = n * dt
            a_step = truth.a(t + 0.5 * dt)
            hint[0] = V
            x = rk4_step(rhs, t, x, dt)
            t_new = (n + 1) * dt
            # Truth is sampled once per step, at its midpoint.
            a_true = a_step
            V = voltage_at_current(a_true, x[1], hint=hint[0], tol=SOLVE_TOL)
            if not all(math.isfinite(v) for v in x):
                raise PVDremError(f"non-finite state at t={t_new:.6g}")
            row = regression_row(lam, x[2:], V, x[1])
            mixed = stage.update(RegressionSample(t_new, row[0], row[1:], t_new >= warm_until))
            delta = mixed[0] if mixed is not None else 0.0
            a_hat = recovery.update(stage.state.theta_hat, V, x[1], dt)
            if a_hat is not None and mixed is not None:
                try:
                    obs_p = MppParams.from_a(a_hat)
                except PVDremError:
                    obs_p = None
                if obs_p is not None:
                    obs = observer_step(obs, obs_p, dt, form)
            if (n + 1) % every == 0:
                record(t_new, a_true, V, row)
    except PVDremError as exc:
        failure = f"{type(exc).__name__}: {exc}"

    series = log.finish()
    metrics = compute_metrics(series, config, map_a_to_theta(truth.a(0.0)).to_array())
    return RunResult(config=config, series=series, metrics=metrics, failure=failure,
                     wall_time=time.perf_counter() - start, recovery_holds=recovery.holds)
