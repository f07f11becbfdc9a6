import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pvdrem.drem import (DelayLine, DremConfig, DREMEstimator, DremStage, EstimatorState,
                         Excitation, adjugate, build_extended, estimator_step,
                         excitation_verdict, initial_theta, mix)
from pvdrem.exceptions import ConfigurationError, InsufficientHistory, StepSizeError
from pvdrem.regressor import RegressionSample


def det_cofactor(M):
    """Laplace expansion in plain Python."""
    n = len(M)
    if n == 1:
        return M[0][0]
    total = 0.0
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        total += (-1) ** j * M[0][j] * det_cofactor(minor)
    return total


def adj_cofactor(M):
    n = len(M)
    out = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:j] + row[j + 1:] for k, row in enumerate(M) if k != i]
            out[j][i] = (-1) ** (i + j) * det_cofactor(minor)
    return out


matrices = arrays(np.float64, (5, 5), elements=st.floats(-10, 10, allow_nan=False))


class TestAdjugate:
    @settings(max_examples=200, deadline=None)
    @given(matrices)
    def test_adj_times_m_is_det_identity(self, M):
        adj = adjugate(M)
        det = det_cofactor(M.tolist())
        scale = max(1.0, float(np.max(np.abs(M)))) ** 5
        np.testing.assert_allclose(adj @ M, det * np.eye(5), atol=1e-9 * scale)

    def test_matches_cofactor_oracle(self, rng):
        M = rng.normal(size=(5, 5))
        np.testing.assert_allclose(adjugate(M), adj_cofactor(M.tolist()), rtol=1e-10, atol=1e-12)

    def test_singular_matrix(self):
        M = np.arange(25.0).reshape(5, 5)
        adj = adjugate(M)
        assert np.all(np.isfinite(adj))
        np.testing.assert_allclose(adj @ M, 0.0, atol=1e-8)

    def test_small_sizes(self):
        assert adjugate([[3.0]]).tolist() == [[1.0]]
        np.testing.assert_allclose(adjugate([[1.0, 2.0], [3.0, 4.0]]), [[4.0, -2.0], [-3.0, 1.0]])

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            adjugate(np.zeros((2, 3)))


class TestMix:
    def test_identity(self):
        delta, Y = mix(np.arange(5.0), np.eye(5))
        assert delta == 1.0
        np.testing.assert_array_equal(Y, np.arange(5.0))

    def test_duplicate_rows(self, rng):
        M = rng.normal(size=(5, 5))
        M[3] = M[1]
        delta, Y = mix(M @ np.ones(5), M)
        assert delta == pytest.approx(0.0, abs=1e-12)
        assert np.all(np.isfinite(Y))

    @settings(max_examples=100, deadline=None)
    @given(matrices, arrays(np.float64, 5, elements=st.floats(-5, 5)))
    def test_decoupling(self, M, theta):
        delta, Y = mix(M @ theta, M)
        scale = max(1.0, float(np.max(np.abs(M)))) ** 5 * max(1.0, float(np.max(np.abs(theta))))
        np.testing.assert_allclose(Y, delta * theta, atol=1e-9 * scale)


class TestDelayLine:
    def test_lookup_and_interpolation(self):
        line = DelayLine(0.1, 0.3, width=1)
        for k in range(6):
            line.push(k * 0.1, [float(k)])
        assert line.lookup(0.3)[0] == 3.0
        assert line.lookup(0.35)[0] == pytest.approx(3.5)
        assert line.t_last == pytest.approx(0.5)

    def test_overwritten_samples(self):
        line = DelayLine(0.1, 0.2, width=1)
        for k in range(20):
            line.push(k * 0.1, [float(k)])
        with pytest.raises(InsufficientHistory):
            line.lookup(0.0)
        assert len(line) == line.capacity

    def test_empty(self):
        with pytest.raises(InsufficientHistory):
            DelayLine(0.1, 0.2).lookup(0.0)

    def test_build_extended_scaling(self):
        cfg = DremConfig(delays=(0.1, 0.2, 0.3, 0.4), beta=0.5)
        line = DelayLine(0.1, 0.4)
        for k in range(5):
            line.push(k * 0.1, [k] + [k * 10.0] * 5)
        sample = RegressionSample(0.4, 4.0, (40.0,) * 5)
        Y_e, M_e = build_extended(sample, line, cfg)
        np.testing.assert_allclose(Y_e, [4.0, 1.5, 1.0, 0.5, 0.0])
        np.testing.assert_allclose(M_e[:, 0], [40.0, 15.0, 10.0, 5.0, 0.0])


class TestEstimatorStep:
    def _state(self, theta=(1.0,) * 5):
        return EstimatorState(np.array(theta, dtype=float))

    def test_freeze_without_excitation(self):
        cfg = DremConfig(gains=5.0)
        s = estimator_step(self._state(), 0.0, np.ones(5), cfg, 0.01)
        np.testing.assert_array_equal(s.theta_hat, np.ones(5))
        assert s.excitation_integral == 0.0

    @pytest.mark.parametrize("integrator", ["exact", "euler"])
    def test_exponential_decay(self, integrator):
        gamma, delta, dt = 2.0, 0.5, 1e-3
        cfg = DremConfig(gains=gamma, integrator=integrator)
        theta = np.array([0.3, 1.0, -2.0, 4.0, 5.0])
        state = self._state(np.zeros(5))
        for _ in range(1000):
            state = estimator_step(state, delta, delta * theta, cfg, dt)
        expected = theta * (1 - math.exp(-gamma * delta ** 2 * 1.0))
        rtol = 1e-12 if integrator == "exact" else 1e-3
        np.testing.assert_allclose(state.theta_hat, expected, rtol=rtol)

    def test_exact_stable_for_large_rate(self):
        cfg = DremConfig(gains=1.0)
        state = estimator_step(self._state(np.zeros(5)), 1e8, 1e8 * np.arange(5.0), cfg, 1e-4)
        np.testing.assert_allclose(state.theta_hat, np.arange(5.0), rtol=1e-12)

    def test_euler_halving_limit(self):
        cfg = DremConfig(gains=1.0, integrator="euler")
        with pytest.raises(StepSizeError):
            estimator_step(self._state(), 1e300, np.ones(5), cfg, 1.0)

    def test_gain_ordering(self):
        # A larger gain reduces the error more over the same interval.
        theta = np.ones(5)
        errs = []
        for g in (0.3, 0.5, 0.7):
            state = self._state(np.zeros(5))
            for _ in range(100):
                state = estimator_step(state, 1.0, theta, DremConfig(gains=g), 1e-2)
            errs.append(np.linalg.norm(state.theta_hat - theta))
        assert errs[0] > errs[1] > errs[2]

    @settings(max_examples=100, deadline=None)
    @given(st.floats(-1e3, 1e3), st.floats(1e-3, 1e3), st.floats(1e-6, 1e-1))
    def test_error_never_grows(self, delta, gamma, dt):
        theta = np.array([1.0, -2.0, 3.0, 0.5, 0.1])
        state = self._state(np.zeros(5))
        new = estimator_step(state, delta, delta * theta, DremConfig(gains=gamma), dt)
        assert np.all(np.abs(new.theta_hat - theta) <= np.abs(theta) + 1e-12)


class TestExcitationVerdict:
    def _run(self, delta_of_t, horizon, dt=1e-2):
        cfg = DremConfig(gains=1.0)
        state = EstimatorState(np.zeros(5), checkpoint_dt=dt)
        t = 0.0
        while t < horizon - 1e-9:
            state = estimator_step(state, delta_of_t(t), np.zeros(5), cfg, dt)
            t += dt
        return state

    def test_excited(self):
        assert excitation_verdict(self._run(lambda t: 1.0, 5.0), 1.0) is Excitation.EXCITED

    def test_unexcited(self):
        assert excitation_verdict(self._run(lambda t: 0.0, 5.0), 1.0) is Excitation.UNEXCITED

    def test_square_integrable_decay(self):
        # int 1/(1+t)^2 converges: trailing growth ~ window/(1+t)^2 eventually drops below the floor.
        early = self._run(lambda t: 1.0 / (1.0 + t), 2.0)
        assert excitation_verdict(early, 1.0, floor=1e-3) is Excitation.EXCITED
        late = self._run(lambda t: 1.0 / (1.0 + t), 1e4, dt=0.5)
        assert excitation_verdict(late, 1.0, floor=1e-3) is Excitation.UNEXCITED

    def test_constant_excited_below_threshold(self):
        state = self._run(lambda t: 0.1, 3.0)
        assert excitation_verdict(state, 1.0, floor=0.9e-2) is Excitation.EXCITED

    def test_short_run(self):
        with pytest.raises(ConfigurationError):
            excitation_verdict(self._run(lambda t: 1.0, 0.5), 1.0)


class TestInvariants:
    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 4), st.floats(-10, 10))
    def test_decoupling(self, j, bump):
        cfg = DremConfig(gains=(1.0, 2.0, 3.0, 4.0, 5.0))
        theta = np.array([0.1, 0.2, 0.3, 0.4, 0.5])
        Y = np.array([1.0, -1.0, 2.0, 0.5, 0.0])
        base = estimator_step(EstimatorState(theta), 0.7, Y, cfg, 0.01).theta_hat
        moved = theta.copy()
        moved[j] += bump
        other = estimator_step(EstimatorState(moved), 0.7, Y, cfg, 0.01).theta_hat
        keep = np.arange(5) != j
        np.testing.assert_array_equal(base[keep], other[keep])

    def test_beta_scaling_fixed_point(self, rng):
        M = rng.normal(size=(5, 5))
        theta = rng.normal(size=5)
        for beta in (1.0, 1e-3):
            S = np.diag([1.0, beta, beta, beta, beta])
            delta, Y = mix(S @ M @ theta, S @ M)
            np.testing.assert_allclose(Y / delta, theta, rtol=1e-9)


class TestConfig:
    def test_initial_theta_completion(self):
        np.testing.assert_allclose(initial_theta((0.01, 0.006, 0.009, 0.001)),
                                   [0.01, 0.006, 0.009, 0.001, 0.0009])

    def test_initial_theta_zero_first(self):
        with pytest.raises(ConfigurationError):
            initial_theta((0.0, 1.0, 1.0, 1.0))

    @pytest.mark.parametrize("kwargs", [dict(delays=(0.1, 0.2, 0.3)),
                                        dict(delays=(0.2, 0.1, 0.3, 0.4)),
                                        dict(beta=0.0), dict(gains=(1.0, 1.0)),
                                        dict(gains=-1.0), dict(integrator="rk4")])
    def test_rejects(self, kwargs):
        with pytest.raises(ConfigurationError):
            DremConfig(**kwargs)


def synthetic_stream(theta, dt=1e-3, horizon=3.0):
    t = np.arange(0.0, horizon, dt)
    omega = np.column_stack([np.sin((k + 1) * 1.7 * t + k) + 0.3 * k for k in range(5)])
    return omega, omega @ theta


class TestDREMEstimator:
    def test_converges_on_persistent_stream(self):
        theta = np.array([0.02, 15.0, 0.0007, 0.0015, 5e-5])
        X, y = synthetic_stream(theta)
        est = DREMEstimator(dt=1e-3, beta=1.0, gamma=1e9).fit(X, y)
        np.testing.assert_allclose(est.theta_, theta, rtol=1e-8)
        assert est.excitation(1.0) is Excitation.EXCITED
        assert est.delta_path_[0] == 0.0
        np.testing.assert_allclose(est.predict(X[:3]), y[:3], rtol=1e-8)

    def test_beta_scaling_of_delta(self):
        X, y = synthetic_stream(np.ones(5), horizon=0.5)
        d1 = DREMEstimator(dt=1e-3, beta=1.0).fit(X, y).delta_path_
        d2 = DREMEstimator(dt=1e-3, beta=2.0).fit(X, y).delta_path_
        np.testing.assert_allclose(d2, 16.0 * d1, rtol=1e-9, atol=1e-300)

    def test_partial_fit_matches_fit(self):
        X, y = synthetic_stream(np.ones(5), horizon=1.0)
        whole = DREMEstimator(dt=1e-3, beta=1.0).fit(X, y)
        split = DREMEstimator(dt=1e-3, beta=1.0).fit(X[:400], y[:400]).partial_fit(X[400:], y[400:])
        np.testing.assert_array_equal(whole.theta_, split.theta_)

    def test_invalid_samples_not_stored(self):
        X, y = synthetic_stream(np.ones(5), horizon=1.0)
        valid = np.arange(len(y)) >= 300
        est = DREMEstimator(dt=1e-3, beta=1.0).fit(X, y, valid=valid)
        assert np.all(est.delta_path_[:700] == 0.0)
        assert est.delta_path_[-1] != 0.0

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            DREMEstimator().fit(np.zeros((3, 4)), np.zeros(3))

    def test_stage_none_while_filling(self):
        stage = DremStage(DremConfig(), 0.1, (0.01, 0.006, 0.009, 0.001))
        assert stage.update(RegressionSample(0.0, 1.0, (1.0,) * 5)) is None
