"""Simulation and analysis of two OOK users received by one Rydberg-atom sensor.

Modules
-------
atomic      five-level Hamiltonian, dissipator, steady state, time evolution
doppler     thermal velocity averaging and probe transmittance
surface     normalized joint response G over the two RF amplitudes
link        closed-form BER/SER for the four interference cases
montecarlo  waveform simulation, detection and empirical error rates
config      scenario file format and bundled preset
"""

__version__ = "0.1.0"

from .atomic import (  # noqa: F401
    CellModel,
    DecayModel,
    DetuningSet,
    RabiSet,
    build_hamiltonian,
    build_lindblad,
    rabi_from_field,
    solve_steady_state,
    time_evolve,
)
from .config import load_preset, parse_config, serialize  # noqa: F401
from .doppler import doppler_averaged_rho21, doppler_shift, transmittance  # noqa: F401
from .link import (  # noqa: F401
    CombinationMeans,
    NoiseModel,
    asymptotes,
    ber_case1,
    ber_case2,
    ber_case3,
    ber_case4,
    q_function,
    ser,
)
from .surface import FieldPair, build_surface, lookup, normalize, raw_response  # noqa: F401
