"""Scenario configuration, presets and the flat ``section.key = value`` format.

A config file holds one assignment per line; ``#`` starts a comment::

    preset = paper-sec8
    drem.gains = 0.5
    environment.dT = 4
    observer.gamma_V = 0.02

Unlisted keys keep the values of the preset (``paper-sec8`` if none is named).
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

from .._validation import check_nonnegative, check_positive, check_positive_int
from ..drem import DremConfig
from ..exceptions import ConfigurationError
from ..mpp import FORMS
from ..plant import ControlLaw, PlantParams
from ..pv_model import (BENCHMARK_A, BENCHMARK_REFERENCE, EnvironmentState, IVParams,
                        ReferenceParams, env_params)
from ..regressor import N_THETA

TRUTH_MODES = ("fixed", "environment")


@dataclass(frozen=True)
class EnvironmentProfile:
    """Ground truth for the array parameters over time.

    ``truth="fixed"`` holds ``a`` fixed.  ``truth="environment"`` derives
    ``a`` from the reference parameters at temperature
    ``T0 + dT * r(t)`` and irradiance ``G0 + dG * r(t)``, where ``r`` ramps
    linearly from 0 to 1 over ``[ramp_start, ramp_start + ramp_duration]``.
    ``T0`` and ``G0`` default to the reference conditions.
    """

    truth: str = "fixed"
    a: IVParams = BENCHMARK_A
    T0: float | None = None
    G0: float | None = None
    dT: float = 0.0
    dG: float = 0.0
    ramp_start: float = 0.0
    ramp_duration: float = 100.0
    eg_variant: str = "verbatim"

    def __post_init__(self):
        if self.truth not in TRUTH_MODES:
            raise ConfigurationError(f"truth must be one of {TRUTH_MODES}, got {self.truth!r}")
        check_nonnegative("ramp_start", self.ramp_start, ConfigurationError)
        check_positive("ramp_duration", self.ramp_duration, ConfigurationError)

    @property
    def constant(self):
        return self.truth == "fixed" or (self.dT == 0.0 and self.dG == 0.0)

    def environment(self, reference, t):
        r = min(max((t - self.ramp_start) / self.ramp_duration, 0.0), 1.0)
        T0 = reference.T_ref if self.T0 is None else self.T0
        G0 = reference.G_ref if self.G0 is None else self.G0
        return EnvironmentState(T=T0 + self.dT * r, G=G0 + self.dG * r)

    def params_at(self, reference, t):
        if self.truth == "fixed":
            return self.a
        return env_params(reference, self.environment(reference, t),
                          eg_variant=self.eg_variant)


@dataclass(frozen=True)
class ObserverSettings:
    gamma_V: float = 0.5
    V_hat0: float = 0.0
    form: str = "total"

    def __post_init__(self):
        check_positive("gamma_V", self.gamma_V, ConfigurationError)
        check_nonnegative("V_hat0", self.V_hat0, ConfigurationError)
        if self.form not in FORMS:
            raise ConfigurationError(f"observer form must be one of {FORMS}")


@dataclass(frozen=True)
class RecoverySettings:
    eps_denominator: float = 1e-12
    smoothing_pole: float | None = None


@dataclass(frozen=True)
class OutputSettings:
    """Logging and metric thresholds.

    ``log_every`` is the logging decimation in integration steps;
    ``log_full`` overrides it with 1.
    """

    log_every: int = 10
    log_full: bool = False
    param_tol: float = 0.01
    vmpp_tol: float = 0.5
    monotone_atol: float = 1e-3
    verdict_window: float = 1.0
    excitation_floor: float = 1e-6

    def __post_init__(self):
        check_positive_int("log_every", self.log_every, ConfigurationError)
        check_positive("param_tol", self.param_tol, ConfigurationError)
        check_positive("vmpp_tol", self.vmpp_tol, ConfigurationError)
        check_nonnegative("monotone_atol", self.monotone_atol, ConfigurationError)
        check_positive("verdict_window", self.verdict_window, ConfigurationError)

    @property
    def decimation(self):
        return 1 if self.log_full else self.log_every


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "paper-sec8"
    dt: float = 1e-4
    horizon: float = 20.0
    lam: float = 100.0
    warmup: float = 5.0
    theta0: tuple = (0.01, 0.006, 0.009, 0.001)
    plant: PlantParams = field(default_factory=PlantParams)
    reference: ReferenceParams = BENCHMARK_REFERENCE
    environment: EnvironmentProfile = field(default_factory=EnvironmentProfile)
    control: ControlLaw = field(default_factory=ControlLaw)
    drem: DremConfig = field(default_factory=DremConfig)
    observer: ObserverSettings = field(default_factory=ObserverSettings)
    recovery: RecoverySettings = field(default_factory=RecoverySettings)
    output: OutputSettings = field(default_factory=OutputSettings)

    def __post_init__(self):
        check_positive("dt", self.dt, ConfigurationError)
        check_positive("lam", self.lam, ConfigurationError)
        check_nonnegative("warmup", self.warmup, ConfigurationError)
        theta0 = tuple(float(x) for x in self.theta0)
        if len(theta0) not in (N_THETA - 1, N_THETA):
            raise ConfigurationError(f"theta0 needs {N_THETA - 1} or {N_THETA} entries")
        object.__setattr__(self, "theta0", theta0)
        needed = max(self.drem.delays) + self.warmup / self.lam
        if not self.horizon > needed:
            raise ConfigurationError(
                f"horizon {self.horizon} s must exceed d4 + warm-up = {needed:.4g} s")

    @property
    def n_steps(self):
        return int(round(self.horizon / self.dt))


PRESETS = {
    "paper-sec8": ScenarioConfig(),
    "temperature-ramp": ScenarioConfig(
        name="temperature-ramp",
        horizon=100.0,
        theta0=(0.01, 0.004, 0.006, 0.002),
        environment=EnvironmentProfile(truth="environment", dT=4.0),
        drem=DremConfig(gains=0.5),
        observer=ObserverSettings(gamma_V=0.02),
        output=OutputSettings(log_every=100),
    ),
    "combined-ramp": ScenarioConfig(
        name="combined-ramp",
        horizon=100.0,
        theta0=(0.01, 0.004, 0.006, 0.002),
        environment=EnvironmentProfile(truth="environment", dT=6.0, dG=5.0),
        drem=DremConfig(gains=0.5),
        observer=ObserverSettings(gamma_V=0.02),
        output=OutputSettings(log_every=100),
    ),
}


def preset(name):
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigurationError(f"unknown preset {name!r}; known: {sorted(PRESETS)}") from None


# Flat key-value codec ----------------------------------------------------

_SECTIONS = ("plant", "reference", "environment", "control", "drem",
             "observer", "recovery", "output")


def _format(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, IVParams):
        return ", ".join(repr(float(x)) for x in value)
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return ", ".join(f"{A!r}:{w!r}" for A, w in value)
        return ", ".join(repr(float(x)) for x in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _floats(text):
    return tuple(float(x) for x in text.replace(",", " ").split())


def _parse(key, text, current):
    text = text.strip()
    try:
        if isinstance(current, bool):
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return low in ("true", "1", "yes")
        if key == "control.harmonics":
            if text.lower() in ("", "none"):
                return ()
            return tuple(tuple(float(x) for x in pair.split(":")) for pair in text.split(","))
        if isinstance(current, IVParams):
            return IVParams(*_floats(text))
        if isinstance(current, tuple):
            values = _floats(text)
            return values[0] if key == "drem.gains" and len(values) == 1 else values
        if isinstance(current, int):
            return int(text)
        if isinstance(current, str):
            return text
        if text.lower() == "none":
            return None
        return float(text)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"bad value for {key}: {text!r} ({exc})") from exc


def to_flat(config):
    """``{dotted_key: text}`` for every field of ``config``."""
    flat = {}
    for f in fields(config):
        value = getattr(config, f.name)
        if f.name in _SECTIONS:
            for sub in fields(value):
                flat[f"{f.name}.{sub.name}"] = _format(getattr(value, sub.name))
        else:
            flat[f.name] = _format(value)
    return flat


def with_overrides(config, overrides):
    """Return a copy of ``config`` with dotted-key string overrides applied."""
    top, nested = {}, {}
    for key, text in overrides.items():
        section, _, name = key.partition(".")
        if not name:
            if section not in {f.name for f in fields(config)} or section in _SECTIONS:
                raise ConfigurationError(f"unknown key {key!r}")
            top[section] = _parse(key, text, getattr(config, section))
            continue
        if section not in _SECTIONS:
            raise ConfigurationError(f"unknown section in key {key!r}")
        current = getattr(config, section)
        if name not in {f.name for f in fields(current)}:
            raise ConfigurationError(f"unknown key {key!r}")
        nested.setdefault(section, {})[name] = _parse(key, text, getattr(current, name))
    try:
        for section, changes in nested.items():
            top[section] = replace(getattr(config, section), **changes)
        return replace(config, **top)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(str(exc)) from exc


def parse_lines(lines):
    """Parse ``key = value`` lines into a dict, ignoring blanks and comments."""
    out = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        out[key.strip()] = value.strip()
    return out


def load_config(path=None, preset_name=None, overrides=None):
    """Build a config from a preset, an optional file and optional overrides.

    A ``preset`` key inside the file is used when ``preset_name`` is not given.
    """
    values = {}
    if path is not None:
        with open(path) as fh:
            values = parse_lines(fh)
    name = preset_name or values.pop("preset", None) or "paper-sec8"
    values.pop("preset", None)
    values.update(overrides or {})
    return with_overrides(preset(name), values)


def dump_config(config):
    """Config as flat text, loadable by :func:`load_config`."""
    return "".join(f"{k} = {v}\n" for k, v in to_flat(config).items())


__all__ = [
    "EnvironmentProfile", "ObserverSettings", "RecoverySettings", "OutputSettings",
    "ScenarioConfig", "PRESETS", "TRUTH_MODES", "preset", "to_flat", "with_overrides",
    "parse_lines", "load_config", "dump_config",
]
