"""Laser pulse envelopes, polarization, and pulse-area calibration.

A pulse is described by its Gaussian envelope of the Rabi rate,

    Omega(t) = Omega0 * exp(-4 ln2 (t - t0)^2 / fwhm^2)   [rad/ps]

together with a carrier energy (meV) and a unit Jones polarization vector.
Pulse areas are in radians of accumulated Rabi rotation.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .qd_model import jones_vector

#: integral of a unit-peak Gaussian of unit FWHM: sqrt(pi / (4 ln 2))
GAUSSIAN_AREA_FACTOR = math.sqrt(math.pi / (4.0 * math.log(2.0)))

#: envelope support half-width in units of FWHM (exp(-4 ln2 * 4^2) ~ 5e-20)
SUPPORT_FWHM = 4.0


@dataclass(frozen=True)
class PulseSpec:
    """One shaped laser pulse.

    fwhm           : intensity-envelope full width at half maximum (ps)
    center         : arrival time of the envelope peak (ps)
    carrier_energy : photon energy of the carrier (meV)
    polarization   : unit Jones vector in the (H, V) basis
    peak_rabi      : peak Rabi rate Omega0 (rad/ps), >= 0
    """

    fwhm: float
    center: float = 0.0
    carrier_energy: float = 0.0
    polarization: tuple = (1.0 + 0.0j, 0.0j)
    peak_rabi: float = 0.0
    shape: str = "gaussian"

    def __post_init__(self):
        if not self.fwhm > 0:
            raise ValueError("fwhm must be positive")
        if self.peak_rabi < 0:
            raise ValueError("peak_rabi must be >= 0")
        if self.shape != "gaussian":
            raise ValueError(f"unsupported pulse shape {self.shape!r}")
        pol = jones_vector(self.polarization)
        object.__setattr__(self, "polarization", (complex(pol[0]), complex(pol[1])))

    @property
    def jones(self) -> np.ndarray:
        return np.array(self.polarization, dtype=complex)

    def window(self) -> tuple[float, float]:
        """Time interval outside of which the envelope is numerically zero."""
        half = SUPPORT_FWHM * self.fwhm
        return (self.center - half, self.center + half)


def envelope(pulse: PulseSpec, t):
    """Instantaneous Rabi rate Omega(t) in rad/ps (vectorized over t)."""
    x = (np.asarray(t, dtype=float) - pulse.center) / pulse.fwhm
    return pulse.peak_rabi * np.exp(-4.0 * math.log(2.0) * x * x)


def area(pulse: PulseSpec) -> float:
    """Pulse area integral Omega(t) dt in radians (closed form)."""
    return pulse.peak_rabi * pulse.fwhm * GAUSSIAN_AREA_FACTOR


def scale_to_area(pulse: PulseSpec, target: float) -> PulseSpec:
    """Copy of the pulse with peak_rabi rescaled so its area equals target."""
    if target < 0:
        raise ValueError("target area must be >= 0")
    return replace(pulse, peak_rabi=target / (pulse.fwhm * GAUSSIAN_AREA_FACTOR))


@dataclass(frozen=True)
class PulseTrain:
    """Pulses of one excitation cycle plus the cycle repetition period."""

    pulses: tuple[PulseSpec, ...]
    repetition_period: float = 12500.0  # ps

    def __post_init__(self):
        if not self.repetition_period > 0:
            raise ValueError("repetition_period must be positive")
        object.__setattr__(self, "pulses", tuple(self.pulses))
