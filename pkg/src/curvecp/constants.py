"""Physical constants in the package's internal unit system (eV, micron, kelvin).

Energies (and frequencies, via hbar=1) are measured in eV, lengths in micron.
CODATA 2018 values.
"""

from __future__ import annotations

import math

# hbar * c in eV * micron
HBAR_C_EV_UM = 0.1973269804

# Boltzmann constant in eV / K
K_B_EV_PER_K = 8.617333262e-5

# First Matsubara frequency xi_1 = 2 pi k_B T / hbar at temperature T [K],
# returned in eV (photon energy hbar*xi_1).
def matsubara_spacing_ev(temperature_k: float) -> float:
    return 2.0 * math.pi * K_B_EV_PER_K * temperature_k
