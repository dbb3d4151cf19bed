"""Normalized joint response coefficient G over the two RF field amplitudes.

The detector voltage is taken to be affine in probe transmittance, so the
normalization ``G = (T - T_s) / (T_0 - T_s)`` removes gain and offset and G
is computed from transmittance directly. ``T_0`` is the transmittance at
zero RF field and ``T_s`` at a saturating field ``e_sat`` on both carriers.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .config import scenario_hash
from .doppler import doppler_averaged_rho21_stack, transmittance_array
from .errors import DomainError, NormalizationError, RangeError
from .scenario import AtomicScenario

G_RANGE = (-0.05, 1.05)
SATURATION_RTOL = 1e-3


@dataclass(frozen=True)
class FieldPair:
    """RF amplitudes of user 1 and user 2 in V/m."""

    e_s1: float
    e_s2: float

    def __post_init__(self):
        for name in ("e_s1", "e_s2"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise DomainError(f"{name} must be finite and >= 0, got {value!r}")

    @classmethod
    def from_mvpcm(cls, e_s1, e_s2):
        return cls(0.1 * e_s1, 0.1 * e_s2)


@dataclass(frozen=True)
class NormalizationAnchors:
    """Raw responses at zero field (``v0``) and at saturation (``vs``).

    ``vs_check`` is the response at ``2 * e_sat``; it is kept so the
    saturation claim can be audited.
    """

    v0: float
    vs: float
    e_sat: float
    vs_check: float = float("nan")

    def __post_init__(self):
        if self.v0 == self.vs:
            raise NormalizationError("v0 equals vs; normalization undefined")

    @property
    def span(self) -> float:
        return self.v0 - self.vs

    def saturation_drift(self) -> float:
        """``|vs(2 e_sat) - vs(e_sat)| / |v0 - vs|``."""
        return abs(self.vs_check - self.vs) / abs(self.span)


def raw_response_many(e_s1, e_s2, scenario: AtomicScenario) -> np.ndarray:
    """Doppler-averaged probe transmittance at paired field arrays (V/m)."""
    e1 = np.atleast_1d(np.asarray(e_s1, dtype=float))
    e2 = np.atleast_1d(np.asarray(e_s2, dtype=float))
    e1, e2 = np.broadcast_arrays(e1, e2)
    rabis = [scenario.rabi(a, b) for a, b in zip(e1.ravel(), e2.ravel())]
    rho21 = doppler_averaged_rho21_stack(
        rabis, scenario.detuning(), scenario.decay(), scenario.cell(),
        scenario.doppler_points, scenario.doppler_method)
    return transmittance_array(rho21, rabis[0], scenario.cell()).reshape(e1.shape)


def raw_response(fields: FieldPair, scenario: AtomicScenario) -> float:
    """Probe transmittance for one field pair; stands in for the detector voltage."""
    return float(raw_response_many(fields.e_s1, fields.e_s2, scenario)[0])


def compute_anchors(scenario: AtomicScenario, e_sat=None) -> NormalizationAnchors:
    """Anchors from direct evaluation at (0, 0), (e_sat, e_sat) and (2 e_sat, 2 e_sat)."""
    e_sat = scenario.e_sat() if e_sat is None else float(e_sat)
    v0, vs, vs2 = raw_response_many([0.0, e_sat, 2 * e_sat], [0.0, e_sat, 2 * e_sat], scenario)
    return NormalizationAnchors(float(v0), float(vs), e_sat, float(vs2))


def normalize(raw, anchors: NormalizationAnchors):
    """``G = (raw - vs) / (v0 - vs)``."""
    if anchors.v0 == anchors.vs:
        raise NormalizationError("v0 equals vs; normalization undefined")
    return (raw - anchors.vs) / (anchors.v0 - anchors.vs)


@dataclass(frozen=True)
class ResponseSurface:
    """Immutable grid of G values; ``g[i, j]`` sits at ``(axis1[i], axis2[j])`` in V/m."""

    axis1: np.ndarray
    axis2: np.ndarray
    g: np.ndarray
    anchors: NormalizationAnchors | None
    scenario_hash: str

    def __post_init__(self):
        for name in ("axis1", "axis2", "g"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in ("axis1", "axis2"):
            axis = getattr(self, name)
            if axis.ndim != 1 or axis.size < 2 or not np.all(np.diff(axis) > 0):
                raise DomainError(f"{name} must be strictly increasing with >= 2 nodes")
        if self.g.shape != (self.axis1.size, self.axis2.size):
            raise DomainError("G matrix shape does not match the axes")

    def out_of_range(self):
        lo, hi = G_RANGE
        return np.count_nonzero((self.g < lo) | (self.g > hi))


def _check_axis(axis, name):
    axis = np.asarray(axis, dtype=float)
    if axis.ndim != 1 or axis.size < 2 or axis[0] != 0.0 or not np.all(np.diff(axis) > 0):
        raise DomainError(f"{name} must start at 0 and increase strictly")
    return axis


def build_surface(scenario: AtomicScenario, axis1=None, axis2=None, e_sat=None,
                  check_saturation=True) -> ResponseSurface:
    """Evaluate G on the tensor grid ``axis1 x axis2`` (V/m).

    Axes default to the scenario grid. The anchor ``v0`` is the grid value
    at (0, 0), so ``G(0, 0) == 1`` exactly.

    Raises
    ------
    NormalizationError
        If doubling ``e_sat`` moves ``vs`` by ``1e-3 |v0 - vs|`` or more.
    """
    axis1 = _check_axis(scenario.grid_vpm() if axis1 is None else axis1, "axis1")
    axis2 = _check_axis(scenario.grid_vpm() if axis2 is None else axis2, "axis2")
    e_sat = scenario.e_sat() if e_sat is None else float(e_sat)

    e1, e2 = np.meshgrid(axis1, axis2, indexing="ij")
    raw = raw_response_many(e1, e2, scenario)
    vs, vs2 = raw_response_many([e_sat, 2 * e_sat], [e_sat, 2 * e_sat], scenario)
    anchors = NormalizationAnchors(float(raw[0, 0]), float(vs), e_sat, float(vs2))
    if check_saturation and not anchors.saturation_drift() < SATURATION_RTOL:
        raise NormalizationError(
            f"saturation not reached at e_sat={e_sat:g} V/m "
            f"(drift {anchors.saturation_drift():.2e} of |v0 - vs|)")
    g = normalize(raw, anchors)
    surface = ResponseSurface(axis1, axis2, g, anchors, scenario_hash(scenario))
    n_out = surface.out_of_range()
    if n_out:
        warnings.warn(
            f"{n_out} G values outside [{G_RANGE[0]}, {G_RANGE[1]}] "
            f"(max {g.max():.4f}, min {g.min():.4f})", RuntimeWarning, stacklevel=2)
    return surface


def _locate(axis, x, name):
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x < axis[0]) or np.any(x > axis[-1]):
        raise RangeError(f"{name} outside grid [{axis[0]:g}, {axis[-1]:g}] V/m")
    i = np.clip(np.searchsorted(axis, x, side="right") - 1, 0, axis.size - 2)
    t = (x - axis[i]) / (axis[i + 1] - axis[i])
    return i, t


def lookup_many(surface: ResponseSurface, e_s1, e_s2) -> np.ndarray:
    """Bilinear interpolation of G at paired arrays of fields (V/m); no extrapolation."""
    e_s1, e_s2 = np.broadcast_arrays(np.asarray(e_s1, dtype=float), np.asarray(e_s2, dtype=float))
    i, t = _locate(surface.axis1, e_s1, "e_s1")
    j, s = _locate(surface.axis2, e_s2, "e_s2")
    g = surface.g
    # (1 - t) a + t b reproduces a at t = 0 and b at t = 1 bit for bit
    lo = (1.0 - s) * g[i, j] + s * g[i, j + 1]
    hi = (1.0 - s) * g[i + 1, j] + s * g[i + 1, j + 1]
    return (1.0 - t) * lo + t * hi


def lookup(surface: ResponseSurface, fields: FieldPair) -> float:
    """G at one field pair by bilinear interpolation."""
    return float(lookup_many(surface, fields.e_s1, fields.e_s2))


CSV_HEADER = ("e_s1_Vpm", "e_s2_Vpm", "G")


def write_surface_csv(surface: ResponseSurface, path) -> None:
    """Write ``# scenario_hash=...``, a column header, then row-major grid rows."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# scenario_hash={surface.scenario_hash}\n")
        fh.write(",".join(CSV_HEADER) + "\n")
        for i, a in enumerate(surface.axis1):
            for j, b in enumerate(surface.axis2):
                fh.write(f"{a:.17g},{b:.17g},{surface.g[i, j]:.17g}\n")


def read_surface_csv(path) -> ResponseSurface:
    """Inverse of :func:`write_surface_csv` (anchors are not stored)."""
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if not first.startswith("# scenario_hash="):
            raise DomainError(f"{path}: missing scenario_hash header")
        digest = first.split("=", 1)[1]
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise DomainError(f"{path}: expected columns {','.join(CSV_HEADER)}")
        rows = np.array([[float(x) for x in row] for row in reader if row])
    axis1 = np.unique(rows[:, 0])
    axis2 = np.unique(rows[:, 1])
    if rows.shape[0] != axis1.size * axis2.size:
        raise DomainError(f"{path}: rows do not form a full grid")
    g = rows[:, 2].reshape(axis1.size, axis2.size)
    return ResponseSurface(axis1, axis2, g, None, digest)
