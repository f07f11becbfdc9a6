import math

import numpy as np
import pytest

from pvdrem.exceptions import AlgebraicConstraintError, ConfigurationError, DomainError
from pvdrem.plant import (BENCHMARK_CONTROL, ControlLaw, PlantParams, PlantState,
                          algebraic_voltage, control, initial_state, plant_rhs, step,
                          stored_energy, time_derivative_I)
from pvdrem.pv_model import IVParams, current_residual, solve_current


def run_plant(params, a, law, dt, horizon):
    state = initial_state(params, a, law)
    states = [state]
    for _ in range(int(round(horizon / dt))):
        state = step(params, a, state, law, dt)
        states.append(state)
    return states


class TestControl:
    def test_initial_value(self):
        assert control(BENCHMARK_CONTROL, 0.0) == pytest.approx(0.8)

    def test_bias_only(self):
        assert control(ControlLaw(0.5, ()), 12.3) == 0.5

    def test_closed_form(self):
        t = math.pi / 3
        assert control(BENCHMARK_CONTROL, t) == pytest.approx(0.8 - 0.1 * math.sqrt(3) / 2, abs=1e-15)

    def test_reachable_non_positive_rejected(self):
        with pytest.raises(ConfigurationError):
            ControlLaw(0.1, ((0.2, 1.0),))

    def test_above_one_rejected(self):
        law = ControlLaw(0.95, ((0.1, 1.0),))
        with pytest.raises(ConfigurationError):
            control(law, math.pi / 2)

    def test_negative_time(self):
        with pytest.raises(DomainError):
            control(BENCHMARK_CONTROL, -1.0)

    def test_callable(self):
        assert BENCHMARK_CONTROL(1.0) == control(BENCHMARK_CONTROL, 1.0)


class TestAlgebraicVoltage:
    def test_linear_limit(self):
        a = IVParams(100.0, 1e-300, 0.02, 0.1, 0.05)
        V = algebraic_voltage(a, PlantState(0.0, 20.0, 0.0))
        assert V == pytest.approx((100 - 20) / 0.05 - 0.1 * 20)

    def test_inverse_consistency(self, bench_a):
        I = solve_current(bench_a, 635.2)
        assert algebraic_voltage(bench_a, PlantState(700.0, I, 600.0)) == pytest.approx(635.2, abs=1e-6)

    def test_unsolvable(self, bench_a):
        with pytest.raises(AlgebraicConstraintError):
            algebraic_voltage(bench_a, PlantState(700.0, bench_a.a1 + bench_a.a2 + 1.0, 0.0))


class TestTimeDerivative:
    def test_balanced(self):
        assert time_derivative_I(PlantParams(), PlantState(700.0, 10.0, 560.0), 0.8) == pytest.approx(0.0)

    def test_formula(self):
        params = PlantParams(L=2.0)
        assert time_derivative_I(params, PlantState(0.0, 1.0, 10.0), 0.5) == 5.0


class TestStep:
    def test_equilibrium(self, bench_a):
        params = PlantParams()
        u = 0.8
        V = 640.0
        I = solve_current(bench_a, V, tol=1e-15)
        v_C = V / u
        # Choose v_b so that the battery branch absorbs u*I exactly.
        params = PlantParams(L=params.L, C=params.C, R_b=params.R_b, v_b=v_C - params.R_b * u * I)
        state = PlantState(v_C, I, V)
        new = step(params, bench_a, state, u, 1e-4)
        assert new.v_C == pytest.approx(v_C, rel=1e-12)
        assert new.I == pytest.approx(I, rel=1e-10)
        assert new.t == pytest.approx(1e-4)

    def test_energy_balance_order(self, bench_a):
        # Residual of the energy balance shrinks like dt^5 per step.
        params = PlantParams()
        law = BENCHMARK_CONTROL
        state = initial_state(params, bench_a, law)
        state = step(params, bench_a, state, law, 1e-3)

        def power_balance(s, t):
            return s.V * s.I - (s.v_C - params.v_b) * s.v_C / params.R_b

        errs = []
        for dt in (2e-5, 1e-5):
            new = step(params, bench_a, state, law, dt)
            mid = step(params, bench_a, state, law, dt / 2)
            # Simpson's rule on the supplied power over the step.
            supplied = dt / 6 * (power_balance(state, state.t) + 4 * power_balance(mid, mid.t)
                                 + power_balance(new, new.t))
            errs.append(abs(stored_energy(params, new) - stored_energy(params, state) - supplied))
        assert errs[1] < errs[0] / 8

    def test_halving_dt_fourth_order(self, bench_a):
        params = PlantParams()
        law = BENCHMARK_CONTROL
        finals = []
        for dt in (4e-4, 2e-4, 1e-4):
            finals.append(np.array([run_plant(params, bench_a, law, dt, 0.02)[-1].I]))
        e1 = abs(finals[0] - finals[2])[0]
        e2 = abs(finals[1] - finals[2])[0]
        assert e2 < e1 / 8

    def test_bounded_positive_trajectory(self, bench_a):
        states = run_plant(PlantParams(), bench_a, BENCHMARK_CONTROL, 1e-4, 1.0)
        for s in states[::50]:
            assert s.is_finite()
            assert s.v_C > 0 and s.I > 0 and s.V > 0
            assert abs(current_residual(bench_a, s.V, s.I)) < 1e-8

    def test_finite_difference_of_current(self, bench_a):
        params = PlantParams()
        dt = 1e-4
        states = run_plant(params, bench_a, BENCHMARK_CONTROL, dt, 0.01)
        k = 50
        fd = (states[k + 1].I - states[k - 1].I) / (2 * dt)
        s = states[k]
        exact = time_derivative_I(params, s, control(BENCHMARK_CONTROL, s.t))
        assert fd == pytest.approx(exact, rel=1e-3, abs=1e-2)

    def test_rejects_bad_dt(self, bench_a):
        with pytest.raises(DomainError):
            step(PlantParams(), bench_a, PlantState(700.0, 100.0, 650.0), 0.8, 0.0)

    def test_constant_u_validated(self, bench_a):
        with pytest.raises(ConfigurationError):
            step(PlantParams(), bench_a, PlantState(700.0, 100.0, 650.0), 1.5, 1e-4)

    def test_abort_diagnostic(self):
        a = IVParams(10.0, 1e-6, 0.02, 0.05, 0.01)
        state = PlantState(1.0, 9.9, 0.0)
        with pytest.raises(AlgebraicConstraintError, match="stage at t="):
            step(PlantParams(L=1e-6), a, state, 0.01, 1e-3)


class TestPlantParams:
    def test_defaults(self):
        p = PlantParams()
        assert (p.L, p.C, p.R_b, p.v_b) == (5e-3, 1e-3, 0.5, 760.0)

    def test_positive(self):
        with pytest.raises(ConfigurationError):
            PlantParams(L=0.0)

    def test_rhs_consistent_with_time_derivative(self, bench_a):
        params = PlantParams()
        dv, di, V = plant_rhs(params, bench_a, 0.8, 760.0, 600.0, None)
        assert di == pytest.approx(time_derivative_I(params, PlantState(760.0, 600.0, V), 0.8))

    def test_initial_state(self, bench_a):
        s = initial_state(PlantParams(), bench_a, BENCHMARK_CONTROL)
        assert s.v_C == 760.0
        assert s.V == pytest.approx(760.0 * 0.8, rel=1e-12)
