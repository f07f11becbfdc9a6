"""Run metrics, computed only from logged series."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..pv_model import IVParams
from ..regressor import N_THETA, map_a_to_theta


@dataclass(frozen=True)
class RunMetrics:
    """Summary of one run.

    Times are ``None`` when the event never happens within the logged
    horizon.  ``param_settling_time`` is the first logged instant after
    which ``||a - a_hat|| / ||a||`` stays below ``param_tol``;
    ``vmpp_settling_time`` is the analogue for ``|V* - V_hat|`` and
    ``vmpp_tol``.  ``quiescent_end`` is the first instant at which
    ``theta_hat`` has moved 5 % of the way towards the true ``theta``.
    Monotonicity of ``|V* - V_hat|`` is checked up to ``monotone_atol``,
    the resolution of the brute-force ``V*``.
    """

    final_time: float
    final_param_error_abs: float
    final_param_error_rel: float
    final_vmpp_error: float
    param_settling_time: float | None
    vmpp_settling_time: float | None
    vmpp_error_max_after_settling: float | None
    vmpp_error_monotone_after_param_settling: bool | None
    quiescent_end: float | None
    excitation_verdict: str
    regression_residual_rel: float | None
    signal_range: dict

    def to_dict(self):
        return asdict(self)


def settling_time(t, err, tol):
    """First ``t[k]`` with ``err[k:] < tol``; ``None`` if the last sample fails."""
    t, err = np.asarray(t), np.asarray(err)
    if len(err) == 0 or not err[-1] < tol:
        return None
    bad = np.nonzero(~(err < tol))[0]
    return float(t[0] if len(bad) == 0 else t[bad[-1] + 1])


def first_time(t, mask):
    idx = np.nonzero(mask)[0]
    return float(t[idx[0]]) if len(idx) else None


def is_monotone(err, atol):
    """True if ``err`` never rises more than ``atol`` above its running minimum."""
    err = np.asarray(err)
    if len(err) < 2:
        return True
    return bool(np.all(err[1:] <= np.minimum.accumulate(err)[:-1] + atol))


def param_errors(params):
    """Absolute and relative ``||a - a_hat||`` per logged row."""
    a, a_hat = params[:, 1:6], params[:, 6:11]
    # Diverged estimates overflow the squared norm; an infinite error is the right answer.
    with np.errstate(over="ignore"):
        abs_err = np.linalg.norm(a - a_hat, axis=1)
    return abs_err, abs_err / np.linalg.norm(a, axis=1)


def excitation_from_log(t, integral, window, floor):
    """Verdict from the growth of ``int Delta^2`` over the trailing window."""
    if len(t) == 0 or t[-1] - t[0] < window - 1e-12:
        return "undetermined"
    k = int(np.searchsorted(t, t[-1] - window + 1e-9, side="right")) - 1
    growth = integral[-1] - integral[max(k, 0)]
    if growth > floor:
        return "excited"
    if growth < 1e-3 * floor:
        return "unexcited"
    return "marginal"


def regression_residual(regression, params, t_min=0.2):
    """``max |y - Omega^T theta_true| / max |y|`` over ``t > t_min``."""
    t = regression[:, 0]
    keep = t > t_min
    if not keep.any():
        return None
    theta = np.array([map_a_to_theta(IVParams(*row)).to_array() for row in params[keep, 1:6]])
    y = regression[keep, 1]
    resid = y - np.einsum("ij,ij->i", regression[keep, 2:2 + N_THETA], theta)
    scale = np.max(np.abs(y))
    return float(np.max(np.abs(resid)) / scale) if scale > 0 else None


def compute_metrics(series, config, theta_true0):
    plant, est, mpp, params = (series[k] for k in ("plant", "estimator", "mpp", "params"))
    t = plant[:, 0]
    out = config.output
    abs_err, rel_err = param_errors(params)
    v_err = np.abs(mpp[:, 2] - mpp[:, 1])

    t_param = settling_time(t, rel_err, out.param_tol)
    t_vmpp = settling_time(t, v_err, out.vmpp_tol)
    inside = np.nonzero(v_err < out.vmpp_tol)[0]
    v_max_after = float(v_err[inside[0]:].max()) if len(inside) else None
    monotone = None
    if t_param is not None:
        monotone = is_monotone(v_err[t >= t_param], out.monotone_atol)

    theta = est[:, 3:3 + N_THETA]
    moved = np.linalg.norm(theta - theta[0], axis=1)
    reach = np.linalg.norm(np.asarray(theta_true0) - theta[0])
    quiescent_end = first_time(t, moved > 0.05 * reach) if reach > 0 else None

    signals = {name: plant[:, i] for i, name in enumerate(SIGNALS, start=1)}
    signals["V_hat"] = mpp[:, 1]
    signal_range = {k: (float(v.min()), float(v.max())) if len(v) else (None, None)
                    for k, v in signals.items()}

    last = len(t) - 1
    return RunMetrics(
        final_time=float(t[last]) if len(t) else 0.0,
        final_param_error_abs=float(abs_err[last]) if len(t) else float("nan"),
        final_param_error_rel=float(rel_err[last]) if len(t) else float("nan"),
        final_vmpp_error=float(v_err[last]) if len(t) else float("nan"),
        param_settling_time=t_param,
        vmpp_settling_time=t_vmpp,
        vmpp_error_max_after_settling=v_max_after,
        vmpp_error_monotone_after_param_settling=monotone,
        quiescent_end=quiescent_end,
        excitation_verdict=excitation_from_log(t, est[:, 2], out.verdict_window,
                                               out.excitation_floor),
        regression_residual_rel=regression_residual(series["regression"], params),
        signal_range=signal_range,
    )


SIGNALS = ("v_C", "I", "V", "u")

__all__ = ["RunMetrics", "compute_metrics", "settling_time", "first_time",
           "is_monotone", "param_errors", "excitation_from_log", "regression_residual"]
