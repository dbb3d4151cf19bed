"""Thermal Doppler averaging of the probe coherence and probe transmittance.

Velocity ``v`` is measured along the probe beam; the coupling beam
counter-propagates, so the probe sees ``delta_p - k_p v`` and the coupling
laser ``delta_c + k_c v``. The velocity average is

    rho21_D = 1/(sqrt(pi) u) * int_{-3u}^{3u} rho21(v) exp(-v^2/u^2) dv,

with ``u = sqrt(k_B T / m)``.

Two evaluation routes are provided. ``method="direct"`` applies composite
Simpson to steady-state solves at the nodes. It is exact in the limit but
converges slowly at room temperature: the integrand carries resonances a few
MHz wide while ``k_p u`` is about 2 pi x 230 kHz per m/s times 170 m/s.

``method="poles"`` (default) uses the fact that the trace-constrained
generator is affine in ``v``, ``A + v B`` with ``B`` diagonal, so

    rho21(v) = sum_k a_k / (1 + v lambda_k)

where ``lambda_k`` are the eigenvalues of ``A^-1 B``. Each term is a simple
pole times the Gaussian; terms whose pole lies near the integration path are
integrated with singularity subtraction (Simpson on the smooth remainder plus
a closed-form logarithm), the rest with plain Simpson. The expansion is
checked against direct solves at a few velocities before it is trusted.
"""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from .atomic import (
    RHO21_INDEX,
    TRACE_INDICES,
    N_VEC,
    CellModel,
    DecayModel,
    DetuningSet,
    RabiSet,
    liouvillian_stack,
    steady_state_stack,
)
from .constants import BOLTZMANN, EPSILON_0, HBAR
from .errors import DomainError, NumericalError

DEFAULT_QUADRATURE_POINTS = 101
#: Velocities (in units of u) where the pole expansion is checked.
CHECK_VELOCITIES = (-2.0, -0.5, 0.0, 1.0)
CHECK_RTOL = 1e-7
_CHUNK = 256


def thermal_speed(cell: CellModel) -> float:
    """``u = sqrt(k_B T / m)`` in m/s."""
    return math.sqrt(BOLTZMANN * cell.temperature / cell.atom_mass)


def doppler_shift(detuning: DetuningSet, v: float, cell: CellModel) -> DetuningSet:
    """Detunings seen by an atom moving at ``v`` along the probe beam."""
    if not math.isfinite(v):
        raise DomainError("velocity must be finite")
    return replace(
        detuning,
        delta_p=detuning.delta_p - cell.k_probe * v,
        delta_c=detuning.delta_c + cell.k_coupling * v,
    )


def simpson_weights(n: int, h: float) -> np.ndarray:
    """Composite Simpson weights for ``n`` (odd) equally spaced nodes."""
    if n < 3 or n % 2 == 0:
        raise DomainError(f"Simpson rule needs an odd number of nodes >= 3, got {n}")
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (h / 3.0)


def _check_points(quadrature_points):
    if int(quadrature_points) != quadrature_points or quadrature_points < 11 or quadrature_points % 2 == 0:
        raise DomainError(f"quadrature_points must be an odd integer >= 11, got {quadrature_points!r}")
    return int(quadrature_points)


def _velocity_slopes(cell: CellModel) -> np.ndarray:
    """d(level shift)/dv for levels 1..5."""
    kp, kc = cell.k_probe, cell.k_coupling
    return np.array([0.0, -kp, kc - kp, kc - kp, kc - kp])


def _omega_rows(rabis) -> np.ndarray:
    return np.array([[r.omega_p, r.omega_c, r.omega_s1, r.omega_s2] for r in rabis], dtype=float)


def _direct_stack(omegas, shifts0, slopes, decay, velocities) -> np.ndarray:
    """rho21 at every (rabi row, velocity) pair; shape (N, V)."""
    n, nv = omegas.shape[0], len(velocities)
    om = np.repeat(omegas, nv, axis=0)
    sh = np.repeat(shifts0[None, :], n * nv, axis=0) + np.tile(np.outer(velocities, slopes), (n, 1))
    out = np.empty(n * nv, dtype=complex)
    for start in range(0, n * nv, _CHUNK):
        stop = start + _CHUNK
        m = liouvillian_stack(om[start:stop], sh[start:stop], decay)
        out[start:stop] = steady_state_stack(m)[:, RHO21_INDEX]
    return out.reshape(n, nv)


def _pencil_terms(omegas, shifts0, slopes, decay):
    """Residues ``a`` and eigenvalues ``lam`` of the velocity pencil, shapes (N, 25)."""
    m = liouvillian_stack(omegas, np.repeat(shifts0[None, :], omegas.shape[0], axis=0), decay)
    scale = np.max(np.abs(m), axis=(-2, -1))
    a = m / scale[:, None, None]
    a[:, 0, :] = 0.0
    a[:, 0, TRACE_INDICES] = 1.0
    # d/dv of -i(h_ii - h_jj), h_ii = -(level shift)
    dh = -slopes
    bdiag = (-1j * (dh[:, None] - dh[None, :])).ravel()
    bdiag[0] = 0.0
    b = bdiag[None, :, None] * np.eye(N_VEC)[None] / scale[:, None, None]
    rhs = np.zeros((omegas.shape[0], N_VEC, 1), dtype=complex)
    rhs[:, 0, 0] = 1.0
    x0 = np.linalg.solve(a, rhs)[..., 0]
    c = np.linalg.solve(a, b)
    lam, w = np.linalg.eig(c)
    coef = np.linalg.solve(w, x0[..., None])[..., 0]
    return w[:, RHO21_INDEX, :] * coef, lam


def _pole_integral(a, lam, u, n_points) -> np.ndarray:
    """Gaussian-weighted average of ``sum_k a_k/(1 + v lam_k)`` over [-3u, 3u]."""
    v = np.linspace(-3.0 * u, 3.0 * u, n_points)
    wts = simpson_weights(n_points, v[1] - v[0])
    g = np.exp(-(v / u) ** 2)
    gw = wts * g

    tiny = np.abs(lam) * 3.0 * u < 1e-12
    safe = np.where(tiny, 1.0, lam)
    p = -1.0 / safe
    r = a / safe
    near = (~tiny) & (np.abs(p.imag) < u) & (np.abs(p.real) < 5.0 * u)

    total = np.where(tiny, a * gw.sum(), 0.0)
    # plain Simpson for far poles: a/(1 + v lam) evaluated directly
    far = ~(tiny | near)
    if np.any(far):
        terms = (gw[None, None, :] / (1.0 + v[None, None, :] * np.where(far, lam, 0.0)[..., None])).sum(-1)
        total = total + np.where(far, a * terms, 0.0)
    if np.any(near):
        idx = np.nonzero(near)
        pn, rn = p[idx], r[idx]
        gp = np.exp(-(pn / u) ** 2)
        smooth = (wts[None, :] * (g[None, :] - gp[:, None]) / (v[None, :] - pn[:, None])).sum(-1)
        log_part = np.log(3.0 * u - pn) - np.log(-3.0 * u - pn)
        contrib = np.zeros(a.shape, dtype=complex)
        contrib[idx] = rn * (smooth + gp * log_part)
        total = total + contrib
    return total.sum(-1) / (math.sqrt(math.pi) * u)


def doppler_averaged_rho21_stack(rabis, detuning: DetuningSet, decay: DecayModel, cell: CellModel,
                                 quadrature_points=DEFAULT_QUADRATURE_POINTS, method="poles") -> np.ndarray:
    """Velocity-averaged rho21 for a sequence of :class:`RabiSet` sharing one
    detuning, decay model and cell. Returns a complex array of length ``len(rabis)``.

    Raises
    ------
    NumericalError
        If the pole expansion disagrees with direct solves (``method="poles"``)
        or a result is not finite.
    """
    n_points = _check_points(quadrature_points)
    omegas = _omega_rows(rabis)
    if omegas.size == 0:
        return np.zeros(0, dtype=complex)
    u = thermal_speed(cell)
    slopes = _velocity_slopes(cell)
    shifts0 = detuning.level_shifts()

    if method == "direct":
        v = np.linspace(-3.0 * u, 3.0 * u, n_points)
        wts = simpson_weights(n_points, v[1] - v[0]) * np.exp(-(v / u) ** 2)
        vals = _direct_stack(omegas, shifts0, slopes, decay, v)
        out = (vals * wts[None, :]).sum(-1) / (math.sqrt(math.pi) * u)
    elif method == "poles":
        out = np.empty(omegas.shape[0], dtype=complex)
        checks = np.asarray(CHECK_VELOCITIES) * u
        for start in range(0, omegas.shape[0], _CHUNK):
            block = omegas[start:start + _CHUNK]
            a, lam = _pencil_terms(block, shifts0, slopes, decay)
            recon = (a[:, None, :] / (1.0 + checks[None, :, None] * lam[:, None, :])).sum(-1)
            direct = _direct_stack(block, shifts0, slopes, decay, checks)
            err = np.max(np.abs(recon - direct), axis=1)
            ref = np.max(np.abs(direct), axis=1)
            bad = ~(err <= CHECK_RTOL * ref + 1e-300)
            if np.any(bad):
                k = int(np.argmax(bad))
                raise NumericalError(
                    f"pole expansion of the velocity dependence failed its check "
                    f"(relative error {err[k] / ref[k]:.2e}); use method='direct'")
            out[start:start + _CHUNK] = _pole_integral(a, lam, u, n_points)
    else:
        raise DomainError(f"unknown Doppler method {method!r}")
    if not np.all(np.isfinite(out)):
        raise NumericalError("non-finite Doppler-averaged coherence")
    return out


def doppler_averaged_rho21(rabi: RabiSet, detuning: DetuningSet, decay: DecayModel, cell: CellModel,
                           quadrature_points=DEFAULT_QUADRATURE_POINTS, method="poles") -> complex:
    """Velocity-averaged steady-state rho21 (see module docstring for the two methods).

    Parameters
    ----------
    quadrature_points : int
        Odd number of Simpson nodes on [-3u, 3u], at least 11.
    method : {"poles", "direct"}
    """
    return complex(doppler_averaged_rho21_stack([rabi], detuning, decay, cell, quadrature_points, method)[0])


def absorption_prefactor(rabi: RabiSet, cell: CellModel) -> float:
    """``2 N0 mu_p^2 k L / (eps0 hbar Omega_p)``, the factor multiplying Im(rho21)."""
    if not rabi.omega_p > 0:
        raise DomainError("probe Rabi frequency must be > 0 for transmittance")
    return (2.0 * cell.atom_density * cell.probe_dipole ** 2 * cell.k_probe * cell.cell_length
            / (EPSILON_0 * HBAR * rabi.omega_p))


def transmittance(rho21: complex, rabi: RabiSet, cell: CellModel) -> float:
    """Probe transmittance ``exp(prefactor * Im rho21)``.

    With the Hamiltonian sign used here, absorption shows up as
    ``Im rho21 < 0``; a positive imaginary part would mean gain and is
    rejected rather than silently flipped.
    """
    im = complex(rho21).imag
    if not math.isfinite(im):
        raise DomainError("rho21 must be finite")
    if im > 0:
        raise DomainError(f"Im(rho21) = {im:.3e} > 0 implies gain, not absorption")
    return math.exp(absorption_prefactor(rabi, cell) * im)


def transmittance_array(rho21, rabi: RabiSet, cell: CellModel) -> np.ndarray:
    im = np.asarray(rho21).imag
    if np.any(im > 0):
        raise DomainError("Im(rho21) > 0 implies gain, not absorption")
    return np.exp(absorption_prefactor(rabi, cell) * im)
