"""Scenario objects in configuration units with conversions to the SI model types."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Mapping

import numpy as np

from .atomic import CellModel, DecayModel, DetuningSet, RabiSet, rabi_from_field
from .constants import ATOMIC_MASS_UNIT, EA0, mhz_to_rad, mvpcm_to_vpm
from .errors import DomainError


@dataclass(frozen=True)
class GridSpec:
    """One field axis in mV/cm: an explicit 0 node followed by ``points - 1``
    values from ``vmin`` to ``vmax`` (log or linear spacing)."""

    points: int = 81
    vmin: float = 0.01
    vmax: float = 10.0
    spacing: str = "log"

    def __post_init__(self):
        if self.points < 2:
            raise DomainError("grid needs at least 2 points")
        if not (0 < self.vmin < self.vmax) or not math.isfinite(self.vmax):
            raise DomainError("grid bounds must satisfy 0 < min < max")
        if self.spacing not in ("log", "linear"):
            raise DomainError(f"unknown grid spacing {self.spacing!r}")

    def values_mvpcm(self) -> np.ndarray:
        n = self.points - 1
        if n == 1:
            tail = np.array([self.vmax])
        elif self.spacing == "log":
            tail = np.geomspace(self.vmin, self.vmax, n)
            tail[0], tail[-1] = self.vmin, self.vmax
        else:
            tail = np.linspace(self.vmin, self.vmax, n)
        return np.concatenate([[0.0], tail])

    def values_vpm(self) -> np.ndarray:
        return mvpcm_to_vpm(self.values_mvpcm())


@dataclass(frozen=True)
class AtomicScenario:
    """All physical and numerical settings, held in configuration units.

    Frequencies are cyclic (Omega/2pi, Gamma/2pi, Delta/2pi) in MHz, dipoles
    in e*a0, mass in atomic mass units, fields in mV/cm. The ``cell``,
    ``decay``, ``detuning`` and ``probe_rabi`` helpers return SI objects.
    """

    n0: float
    cell_length: float
    probe_wavelength: float
    coupling_wavelength: float
    temperature: float
    atom_mass: float
    mu_p: float
    mu_c: float
    mu1: float
    mu2: float
    omega_p: float
    omega_c: float
    delta_p: float = 0.0
    delta_c: float = 0.0
    delta_s1: float = 0.0
    delta_s2: float = 0.0
    gamma2: float = 6.07
    gamma3: float = 0.01
    gamma4: float = 0.01
    gamma5: float = 0.01
    dephasing: Mapping[tuple[int, int], float] = field(default_factory=dict)
    user1_dipole: str = "mu1"
    user2_dipole: str = "mu2"
    doppler_points: int = 101
    doppler_method: str = "poles"
    grid: GridSpec = field(default_factory=GridSpec)
    e_sat_multiplier: float = 50.0

    def __post_init__(self):
        # building the SI objects runs every physical invariant check
        self.cell()
        self.decay()
        self.detuning()
        RabiSet(mhz_to_rad(self.omega_p), mhz_to_rad(self.omega_c))
        if not self.omega_p > 0:
            raise DomainError("omega_p must be > 0")
        for name in ("user1_dipole", "user2_dipole"):
            if getattr(self, name) not in ("mu1", "mu2"):
                raise DomainError(f"{name} must be 'mu1' or 'mu2'")
        if self.doppler_points < 11 or self.doppler_points % 2 == 0:
            raise DomainError("doppler_points must be odd and >= 11")
        if self.doppler_method not in ("poles", "direct"):
            raise DomainError("doppler_method must be 'poles' or 'direct'")
        if not (math.isfinite(self.e_sat_multiplier) and self.e_sat_multiplier > 1):
            raise DomainError("e_sat_multiplier must be > 1")

    def cell(self) -> CellModel:
        return CellModel(
            atom_density=self.n0,
            cell_length=self.cell_length,
            probe_wavelength=self.probe_wavelength,
            coupling_wavelength=self.coupling_wavelength,
            temperature=self.temperature,
            atom_mass=self.atom_mass * ATOMIC_MASS_UNIT,
            probe_dipole=self.mu_p * EA0,
            coupling_dipole=self.mu_c * EA0,
            rf_dipole_1=self.mu1 * EA0,
            rf_dipole_2=self.mu2 * EA0,
        )

    def decay(self) -> DecayModel:
        return DecayModel(
            mhz_to_rad(self.gamma2), mhz_to_rad(self.gamma3),
            mhz_to_rad(self.gamma4), mhz_to_rad(self.gamma5),
            {pair: mhz_to_rad(rate) for pair, rate in self.dephasing.items()},
        )

    def detuning(self) -> DetuningSet:
        return DetuningSet(mhz_to_rad(self.delta_p), mhz_to_rad(self.delta_c),
                           mhz_to_rad(self.delta_s1), mhz_to_rad(self.delta_s2))

    def user_dipoles(self) -> tuple[float, float]:
        """Dipoles (C m) through which user 1 and user 2 fields drive their transitions."""
        lookup = {"mu1": self.mu1 * EA0, "mu2": self.mu2 * EA0}
        return lookup[self.user1_dipole], lookup[self.user2_dipole]

    def rabi(self, e_s1: float = 0.0, e_s2: float = 0.0) -> RabiSet:
        """Rabi set for RF amplitudes ``e_s1``, ``e_s2`` in V/m."""
        d1, d2 = self.user_dipoles()
        return RabiSet(
            mhz_to_rad(self.omega_p), mhz_to_rad(self.omega_c),
            rabi_from_field(e_s1, d1), rabi_from_field(e_s2, d2),
        )

    def grid_vpm(self) -> np.ndarray:
        return self.grid.values_vpm()

    def e_sat(self) -> float:
        """Saturation field in V/m: multiplier times the largest grid value."""
        return self.e_sat_multiplier * float(self.grid_vpm()[-1])


def scenario_fields():
    return [f.name for f in fields(AtomicScenario)]
