"""Dynamic regressor extension and mixing (DREM).

The regression ``y = Omega^T theta`` is stacked with four scaled, delayed
copies into ``Y_e = M_e theta``.  Premultiplying by ``adj(M_e)`` decouples it
into five scalar regressions ``Y_i = Delta * theta_i`` with
``Delta = det(M_e)``, each estimated by
``d theta_i/dt = -gamma_i * Delta * (Delta * theta_i - Y_i)``.
Estimates converge iff ``Delta`` is not square integrable.
"""

from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import check_increasing, check_positive
from .exceptions import ConfigurationError, InsufficientHistory, StepSizeError
from .regressor import N_THETA, RegressionSample

EULER_STABILITY_LIMIT = 0.5
MAX_HALVINGS = 30


@dataclass(frozen=True)
class DremConfig:
    """Extension and adaptation settings.

    ``integrator`` selects how the scalar laws are advanced over one sample
    period: ``"exact"`` integrates them in closed form with ``Delta`` and
    ``Y`` held (unconditionally stable); ``"euler"`` takes explicit Euler
    steps, halving the step while ``gamma * Delta**2 * dt`` exceeds 0.5.
    """

    delays: tuple = (0.1, 0.2, 0.3, 0.4)
    beta: float = 1.25e-3
    gains: tuple = (20.0,) * N_THETA
    integrator: str = "exact"

    def __post_init__(self):
        delays = check_increasing("delays", self.delays)
        if len(delays) != N_THETA - 1:
            raise ConfigurationError(f"need {N_THETA - 1} delays, got {len(delays)}")
        check_positive("beta", self.beta, ConfigurationError)
        gains = self.gains
        if np.ndim(gains) == 0:
            gains = (float(gains),) * N_THETA
        gains = tuple(float(g) for g in gains)
        if len(gains) != N_THETA or min(gains) <= 0:
            raise ConfigurationError(f"need {N_THETA} positive gains, got {gains}")
        if self.integrator not in ("exact", "euler"):
            raise ConfigurationError(f"unknown integrator {self.integrator!r}")
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "gains", gains)


class DelayLine:
    """Ring buffer of regression rows ``(y, Omega)`` on a uniform time grid.

    Only valid (post warm-up) samples are stored.  Lookups at arbitrary
    times interpolate linearly between the two neighbouring samples.
    """

    def __init__(self, dt, max_delay, width=1 + N_THETA):
        self.dt = check_positive("dt", dt)
        self.capacity = int(math.ceil(max_delay / dt)) + 3
        self._buf = np.zeros((self.capacity, width))
        self._count = 0
        self._t0 = None

    def __len__(self):
        return min(self._count, self.capacity)

    def push(self, t, row):
        if self._t0 is None:
            self._t0 = t
        self._buf[self._count % self.capacity] = row
        self._count += 1

    @property
    def t_last(self):
        return None if self._t0 is None else self._t0 + (self._count - 1) * self.dt

    def _position(self, t):
        if self._t0 is None:
            raise InsufficientHistory("delay line is empty")
        k = (t - self._t0) / self.dt
        nearest = round(k)
        if abs(k - nearest) < 1e-6:
            k = float(nearest)
        oldest = max(0, self._count - self.capacity)
        if k < oldest or k > self._count - 1:
            raise InsufficientHistory(f"no stored sample around t={t:.6g}")
        return k

    def ready(self, t, delays):
        try:
            self._position(t - max(delays))
        except InsufficientHistory:
            return False
        return True

    def lookup(self, t):
        """Row at time ``t``, linearly interpolated."""
        k = self._position(t)
        i = int(math.floor(k))
        w = k - i
        row = self._buf[i % self.capacity]
        if w == 0.0:
            return row.copy()
        return (1.0 - w) * row + w * self._buf[(i + 1) % self.capacity]

    def lookup_many(self, times):
        return np.stack([self.lookup(t) for t in times])


def build_extended(sample, line, cfg):
    """Stack the current sample with its scaled delayed copies.

    Returns
    -------
    Y_e : ndarray of shape (5,)
    M_e : ndarray of shape (5, 5)

    Raises
    ------
    InsufficientHistory
        If any delayed sample is not yet stored.
    """
    delayed = cfg.beta * line.lookup_many([sample.t - d for d in cfg.delays])
    Y_e = np.empty(N_THETA)
    M_e = np.empty((N_THETA, N_THETA))
    Y_e[0] = sample.y
    M_e[0] = sample.omega
    Y_e[1:] = delayed[:, 0]
    M_e[1:] = delayed[:, 1:]
    return Y_e, M_e


def _minor_indices(n):
    keep = [[j for j in range(n) if j != i] for i in range(n)]
    rows = np.empty((n, n, n - 1, n - 1), dtype=int)
    cols = np.empty_like(rows)
    for i, j in product(range(n), range(n)):
        rows[i, j] = np.array(keep[i])[:, None]
        cols[i, j] = np.array(keep[j])[None, :]
    return rows, cols


_MINORS = {N_THETA: _minor_indices(N_THETA)}
_SIGNS = {}


def adjugate(M):
    """Adjugate (classical adjoint) of a square matrix.

    Built from cofactors, so it is well defined for singular ``M`` and
    satisfies ``adj(M) @ M == det(M) * I``.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if n == 1:
        return np.ones((1, 1))
    if n not in _MINORS:
        _MINORS[n] = _minor_indices(n)
    if n not in _SIGNS:
        idx = np.add.outer(np.arange(n), np.arange(n))
        _SIGNS[n] = np.where(idx % 2 == 0, 1.0, -1.0)
    rows, cols = _MINORS[n]
    # Singular minors are expected; LU-based det flags them with a spurious warning.
    with np.errstate(divide="ignore", invalid="ignore"):
        cof = _SIGNS[n] * np.linalg.det(M[rows, cols])
    return cof.T


def mix(Y_e, M_e):
    """Return ``(Delta, Y)`` with ``Delta = det(M_e)`` and ``Y = adj(M_e) @ Y_e``.

    No division by ``Delta`` takes place; a singular ``M_e`` yields
    ``Delta == 0`` and a valid adjugate.
    """
    M_e = np.asarray(M_e, dtype=float)
    adj = adjugate(M_e)
    # Cofactor expansion along the first row; consistent with adj @ M = Delta I.
    delta = float(M_e[0] @ adj[:, 0])
    return delta, adj @ np.asarray(Y_e, dtype=float)


class Excitation(enum.Enum):
    EXCITED = "excited"
    MARGINAL = "marginal"
    UNEXCITED = "unexcited"


@dataclass
class EstimatorState:
    """Estimates plus the running excitation integral ``int Delta^2 dt``.

    ``checkpoints`` records ``(t, excitation_integral)`` every
    ``checkpoint_dt`` seconds for :func:`excitation_verdict`.
    """

    theta_hat: np.ndarray
    excitation_integral: float = 0.0
    last_delta: float = 0.0
    t: float = 0.0
    checkpoint_dt: float = 1e-3
    checkpoints: list = field(default_factory=list)

    def __post_init__(self):
        self.theta_hat = np.asarray(self.theta_hat, dtype=float).copy()
        if self.theta_hat.shape != (N_THETA,):
            raise ConfigurationError(f"theta_hat must have {N_THETA} entries")
        if not self.checkpoints:
            self.checkpoints = [(self.t, self.excitation_integral)]


def initial_theta(theta0):
    """Complete a four-entry initial guess with ``theta5 = theta3*theta4/theta1``."""
    theta0 = [float(x) for x in theta0]
    if len(theta0) == N_THETA - 1:
        if theta0[0] == 0:
            raise ConfigurationError("theta1(0) must be non-zero to complete theta5(0)")
        theta0.append(theta0[2] * theta0[3] / theta0[0])
    if len(theta0) != N_THETA:
        raise ConfigurationError(f"theta0 needs {N_THETA - 1} or {N_THETA} entries")
    return np.array(theta0)


def _advance(theta, delta, Y, gains, dt, integrator):
    if delta == 0.0:
        return theta
    rate = gains * (delta * delta)
    if integrator == "exact":
        x = rate * dt
        # theta_tilde decays by exp(-x); -expm1(-x)/x -> 1 as x -> 0.
        phi = np.where(x > 0, -np.expm1(-x) / np.where(x > 0, x, 1.0), 1.0)
        return theta - gains * delta * dt * phi * (delta * theta - Y)
    worst = float(rate.max()) * dt
    n_sub = 1
    while worst / n_sub >= EULER_STABILITY_LIMIT:
        n_sub *= 2
        if n_sub > 2 ** MAX_HALVINGS:
            raise StepSizeError(
                f"gamma*Delta^2*dt = {worst:.3e}: Euler step unstable after {MAX_HALVINGS} halvings")
    h = dt / n_sub
    for _ in range(n_sub):
        theta = theta - h * gains * delta * (delta * theta - Y)
    return theta


def estimator_step(state, delta, Y, cfg, dt):
    """Advance the five scalar adaptation laws over ``dt`` with ``Delta``, ``Y`` held."""
    check_positive("dt", dt)
    gains = np.asarray(cfg.gains, dtype=float)
    theta = _advance(state.theta_hat, float(delta), np.asarray(Y, dtype=float),
                     gains, dt, cfg.integrator)
    integral = state.excitation_integral + delta * delta * dt
    t = state.t + dt
    # Append-only log, shared with the previous state object.
    checkpoints = state.checkpoints
    if t - checkpoints[-1][0] >= state.checkpoint_dt - 1e-12:
        checkpoints.append((t, integral))
    return replace(state, theta_hat=theta, excitation_integral=integral,
                   last_delta=float(delta), t=t, checkpoints=checkpoints)


def excitation_verdict(state, window, floor=1e-6):
    """Classify excitation from the growth of ``int Delta^2`` over a trailing window.

    ``EXCITED`` when the integral grew by more than ``floor`` during the
    last ``window`` seconds, ``UNEXCITED`` when it grew by less than
    ``1e-3 * floor``, ``MARGINAL`` otherwise.
    """
    check_positive("window", window)
    t_end, i_end = state.checkpoints[-1]
    if t_end - state.checkpoints[0][0] < window - 1e-12:
        raise ConfigurationError(
            f"run length {t_end - state.checkpoints[0][0]:.4g} s shorter than window {window} s")
    times = [c[0] for c in state.checkpoints]
    k = bisect.bisect_right(times, t_end - window + 1e-9) - 1
    growth = i_end - state.checkpoints[max(k, 0)][1]
    if growth > floor:
        return Excitation.EXCITED
    if growth < 1e-3 * floor:
        return Excitation.UNEXCITED
    return Excitation.MARGINAL


class DremStage:
    """Online DREM over a stream of regression samples at a fixed step.

    Holds the delay line and estimator state; :meth:`update` consumes one
    sample and returns the current ``(Delta, Y)`` or ``None`` while the
    delay line is still filling.
    """

    def __init__(self, cfg, dt, theta0, t0=0.0, checkpoint_dt=1e-3):
        self.cfg = cfg
        self.dt = dt
        self.line = DelayLine(dt, max(cfg.delays))
        self.state = EstimatorState(initial_theta(theta0), t=t0, checkpoint_dt=checkpoint_dt)
        self._gains = np.asarray(cfg.gains)

    def update(self, sample):
        """Store ``sample`` and advance the estimates by one step."""
        mixed = None
        if sample.valid:
            self.line.push(sample.t, sample.row())
            if self.line.ready(sample.t, self.cfg.delays):
                mixed = mix(*build_extended(sample, self.line, self.cfg))
        delta, Y = mixed if mixed is not None else (0.0, np.zeros(N_THETA))
        self.state = estimator_step(self.state, delta, Y, self.cfg, self.dt)
        return mixed


class DREMEstimator(RegressorMixin, BaseEstimator):
    """Estimate ``theta`` in ``y = Omega @ theta`` from a uniformly sampled stream.

    Parameters
    ----------
    dt : float
        Sample spacing in seconds.
    delays : tuple of 4 floats
        Extension delays ``d1 < d2 < d3 < d4`` in seconds.
    beta : float
        Scaling of the delayed rows.
    gamma : float or tuple of 5 floats
        Adaptation gains.
    theta0 : sequence of 4 or 5 floats
        Initial estimate; a 4-entry guess is completed through
        ``theta5 = theta3*theta4/theta1``.
    integrator : {"exact", "euler"}
        See :class:`DremConfig`.

    Attributes
    ----------
    theta_ : ndarray of shape (5,)
    theta_path_ : ndarray of shape (n_samples, 5)
    delta_path_ : ndarray of shape (n_samples,)
    excitation_integral_ : float
    """

    def __init__(self, dt=1e-4, delays=(0.1, 0.2, 0.3, 0.4), beta=1.25e-3, gamma=20.0,
                 theta0=(0.01, 0.006, 0.009, 0.001), integrator="exact"):
        self.dt = dt
        self.delays = delays
        self.beta = beta
        self.gamma = gamma
        self.theta0 = theta0
        self.integrator = integrator

    def _config(self):
        return DremConfig(delays=tuple(self.delays), beta=self.beta,
                          gains=self.gamma, integrator=self.integrator)

    def fit(self, X, y, valid=None):
        """Run the estimator over the stream ``(X, y)`` from the initial guess."""
        self._stage = DremStage(self._config(), check_positive("dt", self.dt), self.theta0)
        self._paths = ([], [])
        return self.partial_fit(X, y, valid)

    def partial_fit(self, X, y, valid=None):
        """Continue the stream with further samples."""
        X = check_array(X, dtype=float)
        y = np.asarray(y, dtype=float).reshape(-1)
        if X.shape[1] != N_THETA or len(y) != len(X):
            raise ValueError(f"X must be (n, {N_THETA}) and y (n,)")
        if not hasattr(self, "_stage"):
            return self.fit(X, y, valid)
        valid = np.ones(len(y), bool) if valid is None else np.asarray(valid, bool)
        stage = self._stage
        thetas, deltas = self._paths
        t = stage.state.t
        for xi, yi, ok in zip(X, y, valid):
            mixed = stage.update(RegressionSample(t, float(yi), tuple(xi), bool(ok)))
            deltas.append(mixed[0] if mixed is not None else 0.0)
            thetas.append(stage.state.theta_hat)
            t += self.dt
        self.theta_ = stage.state.theta_hat.copy()
        self.theta_path_ = np.array(thetas)
        self.delta_path_ = np.array(deltas)
        self.excitation_integral_ = stage.state.excitation_integral
        self.n_features_in_ = N_THETA
        return self

    def predict(self, X):
        check_is_fitted(self, "theta_")
        return check_array(X, dtype=float) @ self.theta_

    def excitation(self, window, floor=1e-6):
        check_is_fitted(self, "theta_")
        return excitation_verdict(self._stage.state, window, floor)
