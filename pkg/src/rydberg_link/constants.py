"""Physical constants (CODATA 2018), fixed here so results do not drift with
library upgrades."""

import math

E_CHARGE = 1.602176634e-19  # C
HBAR = 1.054571817e-34  # J s
BOHR_RADIUS = 5.29177210903e-11  # m
BOLTZMANN = 1.380649e-23  # J/K
EPSILON_0 = 8.8541878128e-12  # F/m
ATOMIC_MASS_UNIT = 1.66053906660e-27  # kg

#: Dipole moment unit e*a0 in C m.
EA0 = E_CHARGE * BOHR_RADIUS

TWO_PI = 2.0 * math.pi

#: Field unit conversion: 1 mV/cm = 0.1 V/m.
VPM_PER_MVPCM = 0.1


def mhz_to_rad(f_mhz: float) -> float:
    """Cyclic frequency in MHz to angular frequency in rad/s."""
    return TWO_PI * f_mhz * 1e6


def mvpcm_to_vpm(e_mvpcm):
    return e_mvpcm * VPM_PER_MVPCM


def vpm_to_mvpcm(e_vpm):
    return e_vpm / VPM_PER_MVPCM
