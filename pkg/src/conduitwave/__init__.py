"""Periodic traveling waves of the viscous fluid conduit equation.

Construction of the wave family, the wavenumber/mass/Q modulation system and
its characteristic speeds, Floquet-Bloch spectra of the linearization near
the spectral origin, small-oscillation asymptotics, and direct pseudospectral
time evolution.
"""

from .potential import WaveParams, CriticalPair, effective_potential, zeta
from .quadrature import WaveProfile, TurningPoints, reconstruct_profile, constant_state
from .reparam import ModParams, kmq_map, invert_to_aEc, from_kma
from .whitham import WhithamMatrix, whitham_matrix, classify_sweep
from .smallamp import StokesData, stokes_data, asymptotic_speeds, mi_threshold
from .bloch import BlochResult, bloch_spectrum, origin_slopes
from .evolution import evolve, traveling_wave_initial

__all__ = [
    "WaveParams",
    "CriticalPair",
    "effective_potential",
    "zeta",
    "WaveProfile",
    "TurningPoints",
    "reconstruct_profile",
    "constant_state",
    "ModParams",
    "kmq_map",
    "invert_to_aEc",
    "from_kma",
    "WhithamMatrix",
    "whitham_matrix",
    "classify_sweep",
    "StokesData",
    "stokes_data",
    "asymptotic_speeds",
    "mi_threshold",
    "BlochResult",
    "bloch_spectrum",
    "origin_slopes",
    "evolve",
    "traveling_wave_initial",
]

__version__ = "0.1.0"
