"""Line-based ``key = value`` configuration format.

Rules: one assignment per line, ``#`` starts a comment, keys are
case-sensitive, each key appears at most once, units are fixed per key:

==================== ========== ==========================================
key                  unit       meaning
==================== ========== ==========================================
n0                   1/m^3      atom density
cell_length          m          vapor cell length
probe_wavelength     m          probe wavelength
coupling_wavelength  m          coupling wavelength
temperature          K          vapor temperature
atom_mass            u          atomic mass
mu_p, mu_c           e*a0       probe and coupling dipole moments
mu1, mu2             e*a0       RF transition dipoles (3-4 and 3-5)
omega_p, omega_c     MHz        Omega/2pi of probe and coupling
delta_p ... delta_s2 MHz        Delta/2pi, default 0
gamma2 ... gamma5    MHz        Gamma/2pi, defaults 6.07, 0.01, 0.01, 0.01
dephasing_IJ         MHz        override gamma_IJ/2pi for levels I<J
user1_dipole         -          mu1 or mu2 (default mu1)
user2_dipole         -          mu1 or mu2 (default mu2)
doppler_points       count      odd, >= 11 (default 101)
doppler_method       -          poles or direct (default poles)
grid_points          count      nodes per axis including 0 (default 81)
grid_min, grid_max   mV/cm      first nonzero and last node (0.01, 10)
grid_spacing         -          log or linear (default log)
e_sat_multiplier     -          e_sat / largest grid value (default 50)
==================== ========== ==========================================
"""

from __future__ import annotations

import hashlib
import math
import re
from importlib import resources
from pathlib import Path

from .errors import ConfigError, DomainError
from .scenario import AtomicScenario, GridSpec

_FLOAT_KEYS = [
    "n0", "cell_length", "probe_wavelength", "coupling_wavelength", "temperature",
    "atom_mass", "mu_p", "mu_c", "mu1", "mu2", "omega_p", "omega_c",
    "delta_p", "delta_c", "delta_s1", "delta_s2",
    "gamma2", "gamma3", "gamma4", "gamma5", "e_sat_multiplier",
]
REQUIRED_KEYS = [
    "n0", "cell_length", "probe_wavelength", "coupling_wavelength", "temperature",
    "atom_mass", "mu_p", "mu_c", "mu1", "mu2", "omega_p", "omega_c",
]
_POSITIVE = {
    "n0", "cell_length", "probe_wavelength", "coupling_wavelength", "temperature",
    "atom_mass", "mu_p", "mu_c", "mu1", "mu2", "omega_p",
    "gamma2", "gamma3", "gamma4", "gamma5", "grid_min", "grid_max",
}
_NONNEG = {"omega_c"}
_CHOICES = {
    "user1_dipole": ("mu1", "mu2"),
    "user2_dipole": ("mu1", "mu2"),
    "doppler_method": ("poles", "direct"),
    "grid_spacing": ("log", "linear"),
}
_INT_KEYS = {"doppler_points", "grid_points"}
_GRID_KEYS = {"grid_points": "points", "grid_min": "vmin", "grid_max": "vmax", "grid_spacing": "spacing"}
_DEPHASING = re.compile(r"dephasing_([1-5])([1-5])$")

# serialization order
KEY_ORDER = (
    REQUIRED_KEYS
    + ["delta_p", "delta_c", "delta_s1", "delta_s2", "gamma2", "gamma3", "gamma4", "gamma5"]
    + ["user1_dipole", "user2_dipole", "doppler_points", "doppler_method"]
    + ["grid_points", "grid_min", "grid_max", "grid_spacing", "e_sat_multiplier"]
)


def format_float(x: float) -> str:
    """Shortest round-trip text with a compact exponent (``1.29e16``, ``7.8e-7``)."""
    text = repr(float(x))
    if "e" in text:
        mant, exp = text.split("e")
        text = f"{mant}e{int(exp)}"
    return text


def _parse_value(key, raw, lineno):
    if key in _CHOICES:
        if raw not in _CHOICES[key]:
            raise ConfigError(f"{key} must be one of {', '.join(_CHOICES[key])}, got {raw!r}", lineno, key)
        return raw
    if key in _INT_KEYS:
        try:
            value = int(raw)
        except ValueError:
            raise ConfigError(f"malformed integer for {key}: {raw!r}", lineno, key) from None
        if key == "doppler_points" and (value < 11 or value % 2 == 0):
            raise ConfigError(f"doppler_points must be odd and >= 11, got {value}", lineno, key)
        if key == "grid_points" and value < 2:
            raise ConfigError(f"grid_points must be >= 2, got {value}", lineno, key)
        return value
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"malformed number for {key}: {raw!r}", lineno, key) from None
    if not math.isfinite(value):
        raise ConfigError(f"{key} must be finite", lineno, key)
    if key in _POSITIVE and not value > 0:
        raise ConfigError(f"{key} must be > 0, got {raw}", lineno, key)
    if (key in _NONNEG or _DEPHASING.match(key)) and value < 0:
        raise ConfigError(f"{key} must be >= 0, got {raw}", lineno, key)
    if key == "e_sat_multiplier" and not value > 1:
        raise ConfigError(f"e_sat_multiplier must be > 1, got {raw}", lineno, key)
    return value


def parse_text(text: str, source="<config>") -> AtomicScenario:
    """Parse configuration text into an :class:`AtomicScenario`."""
    values, lines = {}, {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", lineno)
        key, raw = (part.strip() for part in body.split("=", 1))
        if not key:
            raise ConfigError("missing key", lineno)
        if not raw:
            raise ConfigError(f"missing value for {key}", lineno, key)
        m = _DEPHASING.match(key)
        if m and m.group(1) == m.group(2):
            raise ConfigError(f"{key}: dephasing needs two distinct levels", lineno, key)
        if m and int(m.group(1)) > int(m.group(2)):
            raise ConfigError(f"{key}: write the pair with the lower level first", lineno, key)
        if not (m or key in _FLOAT_KEYS or key in _CHOICES or key in _INT_KEYS or key in _GRID_KEYS):
            raise ConfigError(f"unknown key {key!r}", lineno, key)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[key]})", lineno, key)
        values[key] = _parse_value(key, raw, lineno)
        lines[key] = lineno

    for key in REQUIRED_KEYS:
        if key not in values:
            raise ConfigError(f"{source}: missing required key {key!r}", key=key)

    grid_kwargs = {_GRID_KEYS[k]: values.pop(k) for k in list(values) if k in _GRID_KEYS}
    dephasing = {}
    for key in [k for k in values if _DEPHASING.match(k)]:
        m = _DEPHASING.match(key)
        dephasing[(int(m.group(1)), int(m.group(2)))] = values.pop(key)
    try:
        grid = GridSpec(**grid_kwargs)
    except DomainError as exc:
        line = max((lines[k] for k in _GRID_KEYS if k in lines), default=None)
        raise ConfigError(str(exc), line) from None
    try:
        return AtomicScenario(**values, dephasing=dephasing, grid=grid)
    except DomainError as exc:
        line = _line_for_message(str(exc), lines)
        raise ConfigError(str(exc), line) from None


def _line_for_message(message, lines):
    for key, lineno in lines.items():
        if message.startswith(key) or f" {key} " in f" {message} ":
            return lineno
    return None


def parse_config(path) -> AtomicScenario:
    """Read and parse a configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_text(text, source=str(path))


def serialize(scenario: AtomicScenario) -> str:
    """Canonical text form: every key in a fixed order, overrides last."""
    grid = scenario.grid
    out = []
    for key in KEY_ORDER:
        if key in _GRID_KEYS:
            value = getattr(grid, _GRID_KEYS[key])
        else:
            value = getattr(scenario, key)
        if isinstance(value, str):
            text = value
        elif isinstance(value, int) and key in _INT_KEYS:
            text = str(value)
        else:
            text = format_float(value)
        out.append(f"{key} = {text}")
    for (i, j), rate in sorted(scenario.dephasing.items()):
        out.append(f"dephasing_{i}{j} = {format_float(rate)}")
    return "\n".join(out) + "\n"


def scenario_hash(scenario: AtomicScenario) -> str:
    """SHA-256 hex digest of the canonical serialization."""
    return hashlib.sha256(serialize(scenario).encode("utf-8")).hexdigest()


def preset_text(name="rb87_two_user") -> str:
    return resources.files("rydberg_link").joinpath("presets", f"{name}.cfg").read_text()


def load_preset(name="rb87_two_user") -> AtomicScenario:
    """Bundled preset scenario."""
    return parse_text(preset_text(name), source=f"preset:{name}")

