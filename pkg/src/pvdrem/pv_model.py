"""Static five-parameter model of a PV array.

The array current obeys the implicit relation::

    I = a1 - a2 * (exp(a3 * (V + a4 * I)) - 1) - a5 * (V + a4 * I)

with lumped parameters ``a = (a1, ..., a5)``.  This module maps between the
lumped vector and the physical single-diode parameters, generates ``a`` from
reference data and the operating environment, and solves the implicit
relation for the current.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_grid, check_positive, check_positive_int
from .exceptions import ConvergenceError, DomainError, SingularMappingError

#: Largest exponent argument evaluated before clamping (exp overflows near 709).
EXP_CLAMP = 700.0


@dataclass(frozen=True)
class PhysicalConstants:
    q: float = 1.602e-19  # electron charge, C
    k: float = 1.3806503e-23  # Boltzmann constant, J/K


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class ReferenceParams:
    """Cell parameters at standard reference conditions plus array layout."""

    I_irr_ref: float
    I_0_ref: float
    R_S_ref: float
    R_P_ref: float
    n_ref: float
    N_S: int
    N_P: int
    alpha_T: float
    G_ref: float = 1000.0
    T_ref: float = 298.15

    def __post_init__(self):
        for name in ("I_irr_ref", "I_0_ref", "R_S_ref", "R_P_ref", "n_ref",
                     "alpha_T", "G_ref", "T_ref"):
            check_positive(name, getattr(self, name))
        check_positive_int("N_S", self.N_S)
        check_positive_int("N_P", self.N_P)


@dataclass(frozen=True)
class EnvironmentState:
    T: float  # cell temperature, K
    G: float  # irradiance, W/m^2

    def __post_init__(self):
        check_positive("T", self.T)
        check_positive("G", self.G)


@dataclass(frozen=True)
class IVParams:
    """Lumped IV-curve parameters; all five must be strictly positive."""

    a1: float
    a2: float
    a3: float
    a4: float
    a5: float

    def __post_init__(self):
        for i, value in enumerate(self, start=1):
            check_positive(f"a{i}", value)

    def __iter__(self):
        return iter((self.a1, self.a2, self.a3, self.a4, self.a5))

    def to_array(self):
        return np.array(tuple(self), dtype=float)

    @classmethod
    def from_array(cls, values):
        vals = [float(x) for x in np.asarray(values, dtype=float).reshape(-1)]
        if len(vals) != 5:
            raise DomainError(f"expected 5 parameters, got {len(vals)}")
        return cls(*vals)

    def compact(self):
        """Return ``(b1, b2, b3)`` of the form ``I = b1 - b2*exp(...) - b3*V``."""
        d = 1.0 + self.a5 * self.a4
        return (self.a1 + self.a2) / d, self.a2 / d, self.a5 / d


@dataclass(frozen=True)
class PhysicalParams:
    I_irr: float
    I_0: float
    n: float
    R_S: float
    R_P: float

    def __post_init__(self):
        for name in ("I_irr", "I_0", "n", "R_S", "R_P"):
            check_positive(name, getattr(self, name))


#: Reference data of the 1440 x 400 array used in the reproduced scenarios.
BENCHMARK_REFERENCE = ReferenceParams(
    I_irr_ref=2.4207,
    I_0_ref=1.996e-8,
    R_S_ref=1.526e-2,
    R_P_ref=6.4616,
    n_ref=1.1287,
    N_S=1440,
    N_P=400,
    alpha_T=0.01,
)

#: Benchmark lumped vector at T = 308.82 K, G = 967.71 W/m^2.
BENCHMARK_A = IVParams(726.21, 5.988e-6, 0.0231, 0.0732, 0.0322)
BENCHMARK_ENVIRONMENT = EnvironmentState(T=308.82, G=967.71)


def band_gap(T, variant="verbatim"):
    """Band-gap energy in eV.

    ``variant="verbatim"`` uses ``1.16 - 4.73e-4 * T / (T + 636)``;
    ``variant="varshni"`` uses the usual ``T**2 / (T + 636)`` numerator.
    """
    if variant == "verbatim":
        return 1.16 - 4.73e-4 * T / (T + 636.0)
    if variant == "varshni":
        return 1.16 - 4.73e-4 * T * T / (T + 636.0)
    raise DomainError(f"unknown band-gap variant {variant!r}")


def env_params(ref, env, constants=CONSTANTS, eg_variant="verbatim"):
    """Lumped parameters of the array at temperature ``env.T`` and irradiance ``env.G``."""
    T, G = env.T, env.G
    if not (T > 0 and G > 0):
        raise DomainError("temperature and irradiance must be positive")
    q, k = constants.q, constants.k
    eg = band_gap(T, eg_variant)
    eg_ref = band_gap(ref.T_ref, eg_variant)
    a1 = ref.N_P * ref.I_irr_ref * (G / ref.G_ref) * (1.0 + ref.alpha_T * (T - ref.T_ref))
    a2 = (ref.N_P * ref.I_0_ref * (T / ref.T_ref) ** 3
          * math.exp(eg_ref * q / (k * ref.T_ref) - eg * q / (k * T)))
    a3 = q / (ref.N_S * ref.n_ref * k * T)
    a4 = ref.R_S_ref * ref.N_S / ref.N_P
    a5 = ref.N_P / (ref.N_S * ref.R_P_ref) * (ref.G_ref / G)
    return IVParams(a1, a2, a3, a4, a5)


def a_to_physical(a, T, N_S, N_P, constants=CONSTANTS):
    """Physical single-diode parameters of one cell from the lumped vector."""
    check_positive("T", T)
    if a.a3 == 0 or a.a5 == 0:
        raise SingularMappingError("a3 and a5 must be non-zero")
    ratio = N_P / N_S
    return PhysicalParams(
        I_irr=a.a1 / N_P,
        I_0=a.a2 / N_P,
        n=constants.q / (N_S * constants.k * T * a.a3),
        R_S=ratio * a.a4,
        R_P=ratio / a.a5,
    )


def physical_to_a(p, T, N_S, N_P, constants=CONSTANTS):
    """Inverse of :func:`a_to_physical`."""
    check_positive("T", T)
    if p.n == 0 or p.R_P == 0:
        raise SingularMappingError("n and R_P must be non-zero")
    ratio = N_P / N_S
    return IVParams(
        a1=N_P * p.I_irr,
        a2=N_P * p.I_0,
        a3=constants.q / (N_S * constants.k * T * p.n),
        a4=p.R_S / ratio,
        a5=ratio / p.R_P,
    )


def _exp_clamped(x):
    if x > EXP_CLAMP:
        return math.exp(EXP_CLAMP), True
    return math.exp(x), False


def _safeguarded_newton(fun, lo, hi, x, tol, max_iter, what):
    """Root of an increasing ``fun`` in ``[lo, hi]``.

    ``fun(x)`` returns ``(residual, slope, clamped)``; a clamped evaluation is
    treated as lying above the root.  Newton steps leaving the bracket are
    replaced by bisection.
    """
    r = math.nan
    for _ in range(max_iter):
        r, dr, clamped = fun(x)
        if clamped or r > 0:
            hi = x
        else:
            lo = x
        if not clamped and abs(r) <= tol * max(1.0, abs(x)):
            return x
        x_new = math.nan if clamped else x - r / dr
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        if x_new == x:
            return x
        x = x_new
    raise ConvergenceError(f"{what} did not converge", residual=abs(r))


def _current_residual(a1, a2, a3, a4, a5, V):
    def fun(I):
        s = V + a4 * I
        e, clamped = _exp_clamped(a3 * s)
        r = I - a1 + a2 * (e - 1.0) + a5 * s
        return r, 1.0 + a4 * (a2 * a3 * e + a5), clamped
    return fun


def _solve_current_scalar(a, V, hint, tol, max_iter):
    a1, a2, a3, a4, a5 = a.a1, a.a2, a.a3, a.a4, a.a5
    fun = _current_residual(a1, a2, a3, a4, a5, V)
    hi = a1 + a2 + 1.0
    lo = -a1
    # The root may sit below -a1 far beyond open circuit.
    while fun(lo)[0] > 0:
        lo = 2.0 * lo - 1.0
        if lo < -1e15:
            raise ConvergenceError("no current bracket found", residual=math.inf)
    x = hint if hint is not None and lo < hint < hi else min(max(a1 - a5 * V, lo), hi)
    return _safeguarded_newton(fun, lo, hi, x, tol, max_iter, "current solve")


def solve_current(a, V, hint=None, tol=1e-10, max_iter=200):
    """Array current at terminal voltage ``V``.

    Solves ``I = F(V, I)`` by safeguarded Newton iteration; the residual
    ``I - F(V, I)`` is strictly increasing in ``I`` so the root is unique.
    ``V`` may be a scalar or an array; ``hint`` warm-starts the iteration.

    Raises
    ------
    DomainError
        If any ``V`` is negative.
    ConvergenceError
        If the iteration budget is exhausted.
    """
    if np.ndim(V) == 0:
        V = float(V)
        if not V >= 0:
            raise DomainError(f"voltage must be non-negative, got {V}")
        return _solve_current_scalar(a, V, hint, tol, max_iter)
    v = np.asarray(V, dtype=float)
    if np.any(~(v >= 0)):
        raise DomainError("voltages must be non-negative")
    out = np.empty_like(v)
    flat_v, flat_out = v.reshape(-1), out.reshape(-1)
    guess = hint
    for i, vi in enumerate(flat_v):
        guess = _solve_current_scalar(a, float(vi), guess, tol, max_iter)
        flat_out[i] = guess
    return out


def current_residual(a, V, I):
    """``I - F(V, I)`` for the implicit IV relation (vectorised)."""
    s = np.asarray(V) + a.a4 * np.asarray(I)
    return I - a.a1 + a.a2 * np.expm1(a.a3 * s) + a.a5 * s


def voltage_at_current(a, I, hint=None, tol=1e-10, max_iter=200):
    """Array voltage carrying current ``I``; the inverse of :func:`solve_current`.

    The relation is solved for ``s = V + a4*I`` from
    ``a2*(exp(a3*s) - 1) + a5*s = a1 - I``, which is strictly increasing in
    ``s``.  A solution exists only for ``I < a1 + a2``.
    """
    a1, a2, a3, a4, a5 = a.a1, a.a2, a.a3, a.a4, a.a5
    c = a1 + a2 - I
    if not c > 0:
        raise DomainError(f"current {I} outside the solvable range (< {a1 + a2})")

    def fun(s):
        e, clamped = _exp_clamped(a3 * s)
        return a2 * (e - 1.0) + a5 * s - (a1 - I), a2 * a3 * e + a5, clamped

    hi = min(c / a5, math.log1p(c / a2) / a3)
    lo = min(0.0, (a1 - I) / a5)
    s0 = hint + a4 * I if hint is not None else 0.5 * (lo + hi)
    if not lo < s0 < hi:
        s0 = 0.5 * (lo + hi)
    s = _safeguarded_newton(fun, lo, hi, s0, tol, max_iter, "voltage solve")
    return s - a4 * I


def open_circuit_voltage(a):
    """Voltage at which the array current crosses zero."""
    return voltage_at_current(a, 0.0, tol=1e-13)


def iv_curve(a, v_grid):
    """Tabulate the IV curve on an ascending grid.

    Returns
    -------
    ndarray of shape (n, 3)
        Columns ``V``, ``I`` and ``P = V * I``.
    """
    v = check_grid(v_grid)
    if v.size == 0:
        return np.empty((0, 3))
    i = solve_current(a, v)
    return np.column_stack([v, i, v * i])
