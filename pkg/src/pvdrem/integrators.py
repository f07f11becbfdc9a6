"""Fixed-step explicit integrators over plain float sequences."""


def rk4_step(fun, t, x, dt):
    """One classical fourth-order Runge-Kutta step of ``x' = fun(t, x)``.

    ``x`` is a sequence of floats; a new list is returned.  Plain lists keep
    the per-step overhead low for the small state vectors simulated here.
    """
    half = 0.5 * dt
    k1 = fun(t, x)
    k2 = fun(t + half, [xi + half * ki for xi, ki in zip(x, k1)])
    k3 = fun(t + half, [xi + half * ki for xi, ki in zip(x, k2)])
    k4 = fun(t + dt, [xi + dt * ki for xi, ki in zip(x, k3)])
    sixth = dt / 6.0
    return [xi + sixth * (p + 2.0 * q + 2.0 * r + s)
            for xi, p, q, r, s in zip(x, k1, k2, k3, k4)]
