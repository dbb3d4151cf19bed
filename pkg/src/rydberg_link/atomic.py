"""Five-level ladder model: Hamiltonian, Lindblad dissipator, steady state and
time evolution.

Level ordering is |1> ground, |2> intermediate, |3> Rydberg state coupled by
the laser, |4> and |5> the Rydberg states reached by the two RF carriers.
Numerics run in angular-frequency units (H/hbar); :func:`build_hamiltonian`
returns joules for callers who want the physical operator.

Density matrices are plain ``(5, 5)`` complex arrays. Vectorization is
row-major, ``vec(rho)[5*i + j] = rho[i, j]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.linalg as sla

from .constants import HBAR
from .errors import (
    DomainError,
    InstabilityError,
    InvalidStateError,
    NumericalError,
    SingularSystemError,
)

N_LEVELS = 5
N_VEC = N_LEVELS * N_LEVELS
#: Flat indices of the diagonal in the row-major vectorization.
TRACE_INDICES = np.arange(N_LEVELS) * (N_LEVELS + 1)
#: Flat index of rho_21 (row 2, column 1 in 1-based notation).
RHO21_INDEX = 1 * N_LEVELS + 0

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-8


@dataclass(frozen=True)
class RabiSet:
    """Angular Rabi frequencies (rad/s) of probe, coupling and the two RF fields."""

    omega_p: float
    omega_c: float
    omega_s1: float = 0.0
    omega_s2: float = 0.0

    def __post_init__(self):
        for name in ("omega_p", "omega_c", "omega_s1", "omega_s2"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise DomainError(f"{name} must be finite and >= 0, got {value!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.omega_p, self.omega_c, self.omega_s1, self.omega_s2])


@dataclass(frozen=True)
class DetuningSet:
    """Angular detunings (rad/s); any sign."""

    delta_p: float = 0.0
    delta_c: float = 0.0
    delta_s1: float = 0.0
    delta_s2: float = 0.0

    def __post_init__(self):
        for name in ("delta_p", "delta_c", "delta_s1", "delta_s2"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")

    def level_shifts(self) -> np.ndarray:
        """Cumulative detunings of levels 1..5 (the diagonal of -H/hbar)."""
        two_photon = self.delta_p + self.delta_c
        return np.array([
            0.0,
            self.delta_p,
            two_photon,
            two_photon + self.delta_s1,
            two_photon + self.delta_s2,
        ])


@dataclass(frozen=True)
class DecayModel:
    """Population decay rates of |2>..|5> (rad/s) plus coherence damping.

    Coherence damping defaults to ``(Gamma_i + Gamma_j) / 2`` with
    ``Gamma_1 = 0``. ``dephasing_overrides`` maps 1-based level pairs
    ``(i, j)`` to a replacement rate; the matrix is kept symmetric.
    """

    gamma2: float
    gamma3: float
    gamma4: float
    gamma5: float
    dephasing_overrides: Mapping[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("gamma2", "gamma3", "gamma4", "gamma5"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise DomainError(f"{name} must be finite and > 0, got {value!r}")
        for (i, j), rate in self.dephasing_overrides.items():
            if not (1 <= i <= N_LEVELS and 1 <= j <= N_LEVELS) or i == j:
                raise DomainError(f"invalid dephasing pair ({i}, {j})")
            if not math.isfinite(rate) or rate < 0:
                raise DomainError(f"dephasing rate for ({i}, {j}) must be >= 0")

    @property
    def populations(self) -> np.ndarray:
        """Gamma_1..Gamma_5 with Gamma_1 = 0."""
        return np.array([0.0, self.gamma2, self.gamma3, self.gamma4, self.gamma5])

    def dephasing(self) -> np.ndarray:
        g = self.populations
        gam = 0.5 * (g[:, None] + g[None, :])
        for (i, j), rate in self.dephasing_overrides.items():
            gam[i - 1, j - 1] = gam[j - 1, i - 1] = rate
        np.fill_diagonal(gam, 0.0)
        return gam

    def max_rate(self) -> float:
        return float(max(self.gamma2, self.gamma3, self.gamma4, self.gamma5))


@dataclass(frozen=True)
class CellModel:
    """Vapor cell, beam and thermal constants (SI units; dipoles in C m)."""

    atom_density: float
    cell_length: float
    probe_wavelength: float
    coupling_wavelength: float
    temperature: float
    atom_mass: float
    probe_dipole: float
    coupling_dipole: float
    rf_dipole_1: float
    rf_dipole_2: float

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise DomainError(f"{name} must be finite and > 0, got {value!r}")

    @property
    def k_probe(self) -> float:
        return 2.0 * math.pi / self.probe_wavelength

    @property
    def k_coupling(self) -> float:
        return 2.0 * math.pi / self.coupling_wavelength


def rabi_from_field(field_amplitude: float, dipole: float) -> float:
    """Angular Rabi frequency ``|E| * mu / hbar`` for a field in V/m and a dipole in C m."""
    if not math.isfinite(field_amplitude) or field_amplitude < 0:
        raise DomainError(f"field amplitude must be >= 0, got {field_amplitude!r}")
    if not math.isfinite(dipole) or dipole <= 0:
        raise DomainError(f"dipole moment must be > 0, got {dipole!r}")
    return field_amplitude * dipole / HBAR


def hamiltonian_rates(rabi: RabiSet, detuning: DetuningSet) -> np.ndarray:
    """Rotating-frame Hamiltonian divided by hbar (rad/s)."""
    h = np.zeros((N_LEVELS, N_LEVELS), dtype=complex)
    h[0, 1] = h[1, 0] = 0.5 * rabi.omega_p
    h[1, 2] = h[2, 1] = 0.5 * rabi.omega_c
    h[2, 3] = h[3, 2] = 0.5 * rabi.omega_s1
    h[2, 4] = h[4, 2] = 0.5 * rabi.omega_s2
    # 0.0 - x keeps resonant diagonals at +0.0
    h[np.diag_indices(N_LEVELS)] = 0.0 - detuning.level_shifts()
    return h


def build_hamiltonian(rabi: RabiSet, detuning: DetuningSet) -> np.ndarray:
    """Rotating-frame Hamiltonian in joules."""
    return HBAR * hamiltonian_rates(rabi, detuning)


def build_lindblad(rho: np.ndarray, decay: DecayModel) -> np.ndarray:
    """Dissipator matrix: cascade decay 5,4 -> 3 -> 2 -> 1 on the diagonal,
    ``-gamma_ij * rho_ij`` off the diagonal."""
    rho = np.asarray(rho)
    g2, g3, g4, g5 = decay.gamma2, decay.gamma3, decay.gamma4, decay.gamma5
    out = -decay.dephasing() * rho
    p = np.diagonal(rho)
    out[0, 0] = g2 * p[1]
    out[1, 1] = -g2 * p[1] + g3 * p[2]
    out[2, 2] = -g3 * p[2] + g4 * p[3] + g5 * p[4]
    out[3, 3] = -g4 * p[3]
    out[4, 4] = -g5 * p[4]
    return out


def master_rhs(rho, rabi: RabiSet, detuning: DetuningSet, decay: DecayModel) -> np.ndarray:
    """``d rho / dt = -(i/hbar)[H, rho] + L(rho)`` in rad/s."""
    h = hamiltonian_rates(rabi, detuning)
    rho = np.asarray(rho, dtype=complex)
    return -1j * (h @ rho - rho @ h) + build_lindblad(rho, decay)


def lindblad_superoperator(decay: DecayModel) -> np.ndarray:
    """25x25 matrix of the dissipator, assembled column by column from
    :func:`build_lindblad` on the matrix-unit basis."""
    sup = np.zeros((N_VEC, N_VEC))
    for k in range(N_VEC):
        basis = np.zeros((N_LEVELS, N_LEVELS))
        basis.flat[k] = 1.0
        sup[:, k] = build_lindblad(basis, decay).ravel()
    return sup


def _commutator_superoperators(h: np.ndarray) -> np.ndarray:
    """Superoperator(s) of ``-i[h, .]`` for ``h`` of shape (..., 5, 5)."""
    eye = np.eye(N_LEVELS)
    lead = h.shape[:-2]
    left = np.einsum("...ij,kl->...ikjl", h, eye)
    right = np.einsum("ij,...lk->...ikjl", eye, h)
    return -1j * (left - right).reshape(lead + (N_VEC, N_VEC))


def liouvillian(rabi: RabiSet, detuning: DetuningSet, decay: DecayModel) -> np.ndarray:
    """Generator ``M`` with ``vec(d rho/dt) = M @ vec(rho)``."""
    return _commutator_superoperators(hamiltonian_rates(rabi, detuning)) + lindblad_superoperator(decay)


def liouvillian_stack(omegas: np.ndarray, shifts: np.ndarray, decay: DecayModel) -> np.ndarray:
    """Batched generators.

    ``omegas`` has shape (N, 4) (probe, coupling, RF1, RF2) and ``shifts``
    shape (N, 5) holds the cumulative level detunings.
    """
    omegas = np.asarray(omegas, dtype=float)
    shifts = np.asarray(shifts, dtype=float)
    n = omegas.shape[0]
    h = np.zeros((n, N_LEVELS, N_LEVELS), dtype=complex)
    for (i, j), col in (((0, 1), 0), ((1, 2), 1), ((2, 3), 2), ((2, 4), 3)):
        h[:, i, j] = h[:, j, i] = 0.5 * omegas[:, col]
    idx = np.arange(N_LEVELS)
    h[:, idx, idx] = 0.0 - shifts
    return _commutator_superoperators(h) + lindblad_superoperator(decay)[None]


def check_density_matrix(rho, herm_tol=HERMITIAN_TOL, trace_tol=TRACE_TOL, psd_tol=PSD_TOL) -> np.ndarray:
    """Raise :class:`InvalidStateError` unless ``rho`` is Hermitian, unit trace and PSD."""
    rho = np.asarray(rho)
    if rho.shape != (N_LEVELS, N_LEVELS):
        raise InvalidStateError(f"density matrix must be 5x5, got {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise InvalidStateError("density matrix has non-finite entries")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > herm_tol:
        raise InvalidStateError(f"not Hermitian (max deviation {herm:.3e})")
    tr = abs(np.trace(rho) - 1.0)
    if tr > trace_tol:
        raise InvalidStateError(f"trace deviates from 1 by {tr:.3e}")
    min_eig = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if min_eig < -psd_tol:
        raise InvalidStateError(f"not positive semidefinite (min eigenvalue {min_eig:.3e})")
    return rho


def ground_state() -> np.ndarray:
    rho = np.zeros((N_LEVELS, N_LEVELS), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def _trace_constrained(m: np.ndarray) -> np.ndarray:
    """Scale generator(s) to unit magnitude and replace the rho_11 equation
    (redundant by population conservation) with the unit-trace row."""
    scale = np.max(np.abs(m), axis=(-2, -1), keepdims=True)
    a = m / scale
    a[..., 0, :] = 0.0
    a[..., 0, TRACE_INDICES] = 1.0
    return a


def solve_steady_state(rabi: RabiSet, detuning: DetuningSet, decay: DecayModel,
                       rcond_limit: float = 1e-13) -> np.ndarray:
    """Stationary density matrix from dense LU on the trace-constrained generator.

    Raises
    ------
    SingularSystemError
        If the constrained system is numerically singular (non-unique steady state).
    NumericalError
        If the residual ``max|M vec(rho)|`` exceeds ``1e-10 * max(Gamma_2, Omega_p)``.
    """
    m = liouvillian(rabi, detuning, decay)
    a = _trace_constrained(m)
    rcond = 1.0 / np.linalg.cond(a)
    if not rcond > rcond_limit:
        raise SingularSystemError(f"steady-state system is singular (rcond={rcond:.2e})")
    b = np.zeros(N_VEC, dtype=complex)
    b[0] = 1.0
    lu = sla.lu_factor(a, check_finite=True)
    x = sla.lu_solve(lu, b)
    residual = np.max(np.abs(m @ x))
    limit = 1e-10 * max(decay.gamma2, rabi.omega_p)
    if not residual < limit:
        raise NumericalError(f"steady-state residual {residual:.3e} exceeds {limit:.3e}")
    return check_density_matrix(x.reshape(N_LEVELS, N_LEVELS))


def steady_state_stack(m: np.ndarray) -> np.ndarray:
    """Steady states for a stack of generators, shape (N, 25, 25) -> (N, 25).

    No per-item conditioning check; callers validate what they consume.
    """
    a = _trace_constrained(m)
    b = np.zeros(a.shape[:-1] + (1,), dtype=complex)
    b[..., 0, 0] = 1.0
    return np.linalg.solve(a, b)[..., 0]


def default_time_step(rabi: RabiSet, detuning: DetuningSet, decay: DecayModel) -> float:
    """``0.02 / max(|Omega|, Gamma, |Delta|)``."""
    return 0.02 / _max_rate(rabi, detuning, decay)


def _max_rate(rabi, detuning, decay) -> float:
    rates = np.concatenate([
        rabi.as_array(),
        np.abs([detuning.delta_p, detuning.delta_c, detuning.delta_s1, detuning.delta_s2]),
        [decay.max_rate()],
    ])
    return float(np.max(rates))


def rk4_step_matrix(m: np.ndarray, dt: float) -> np.ndarray:
    """Propagator of one classical fourth-order Runge-Kutta step for the linear
    system ``x' = M x``: ``I + hM + (hM)^2/2 + (hM)^3/6 + (hM)^4/24``."""
    hm = dt * m
    eye = np.eye(m.shape[0])
    return eye + hm @ (eye + hm @ (eye / 2 + hm @ (eye / 6 + hm / 24)))


def time_evolve(rho0, rabi: RabiSet, detuning: DetuningSet, decay: DecayModel,
                t_final: float, dt: float | None = None) -> np.ndarray:
    """Integrate the master equation from ``rho0`` to ``t_final`` with RK4.

    The system is linear and autonomous, so ``n`` RK4 steps equal the
    ``n``-th power of the one-step propagator; it is applied by binary
    powering. The step is shrunk so that ``n * dt == t_final`` exactly.

    Raises
    ------
    DomainError
        If ``dt * max(|Omega|, Gamma, |Delta|) >= 0.1`` or ``t_final < 0``.
    InstabilityError
        If the step propagator amplifies (spectral radius > 1) or the state
        norm grows beyond 10.
    """
    if t_final < 0:
        raise DomainError("t_final must be >= 0")
    rho0 = check_density_matrix(rho0, herm_tol=1e-8, trace_tol=1e-8)
    if t_final == 0:
        return np.array(rho0, dtype=complex)
    if dt is None:
        dt = default_time_step(rabi, detuning, decay)
    if not dt > 0:
        raise DomainError("dt must be > 0")
    if dt * _max_rate(rabi, detuning, decay) >= 0.1:
        raise DomainError("dt too large for stable explicit integration")

    n_steps = max(1, math.ceil(t_final / dt - 1e-9))
    step = rk4_step_matrix(liouvillian(rabi, detuning, decay), t_final / n_steps)
    radius = np.max(np.abs(np.linalg.eigvals(step)))
    if radius > 1.0 + 1e-12:
        raise InstabilityError(f"RK4 propagator amplifies (spectral radius {radius:.15f})")

    x = np.asarray(rho0, dtype=complex).ravel().copy()
    power = step
    k = n_steps
    while k:
        if k & 1:
            x = power @ x
            if np.max(np.abs(x)) > 10.0:
                raise InstabilityError("state norm grew beyond 10")
        k >>= 1
        if k:
            power = power @ power
    rho = x.reshape(N_LEVELS, N_LEVELS)
    try:
        return check_density_matrix(rho, herm_tol=1e-8, trace_tol=1e-8, psd_tol=1e-8)
    except InvalidStateError as exc:
        raise NumericalError(f"time evolution lost state validity: {exc}") from exc
