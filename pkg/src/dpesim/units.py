"""Unit conventions shared across the package.

Energies are stored in meV, times in ps, rates in 1/ps. The master-equation
engine works in hbar = 1 units, so energies entering a Hamiltonian are
converted to angular frequencies in rad/ps.
"""

HBAR_MEV_PS = 0.6582119569
"""hbar in meV*ps."""

MEV_TO_RAD_PER_PS = 1.0 / HBAR_MEV_PS
"""Angular frequency (rad/ps) per meV; approximately 1.5193."""

MU_B_MEV_PER_T = 0.05788
"""Bohr magneton in meV/T."""


def mev_to_angular(energy_mev: float) -> float:
    """Convert an energy in meV to an angular frequency in rad/ps."""
    return energy_mev * MEV_TO_RAD_PER_PS
