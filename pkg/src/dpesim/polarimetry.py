"""Mueller-calculus polarization optics and rotating-QWP Stokes extraction.

Conventions: waveplate and polarizer angles are measured in degrees from the
horizontal; S3 > 0 denotes right-circular light, and the Jones vector
(1, i)/sqrt(2) maps to S3 = +1. The retarder sense is fixed so that the
rotating quarter-wave-plate extraction below recovers any input Stokes
vector exactly; that round trip, not an absolute handedness, is the
contract.

The extraction follows the classic fixed-polarizer scheme: intensities
I(theta_n) recorded over a half turn of the QWP are reduced to the discrete
Fourier sums

    A = (2/N) sum I      B = (4/N) sum I sin(2 theta)
    C = (4/N) sum I cos(4 theta)      D = (4/N) sum I sin(4 theta)

and then to S1 = 2C/(A - C), S2 = 2D/(A - C), S3 = B/(A - C) with S0
normalized to one. (Published versions of these sums sometimes misprint the
fourth line as a second "B"; it is the sin(4 theta) coefficient D.)
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError

#: measurement slack on the polarization fraction; noisy extractions may
#: exceed unity by this much before the invariant trips
DOP_SLACK = 0.05


@dataclass(frozen=True)
class StokesVector:
    """Stokes parameters (S0, S1, S2, S3) with polarization-degree accessors."""

    s0: float
    s1: float
    s2: float
    s3: float

    def __post_init__(self):
        if not self.s0 > 0:
            raise ValueError("S0 must be positive")
        if self.polarized_fraction() > 1.0 + DOP_SLACK:
            raise ValueError(
                f"unphysical Stokes vector: |S| / S0 = {self.polarized_fraction():.4f}"
            )

    def as_array(self) -> np.ndarray:
        return np.array([self.s0, self.s1, self.s2, self.s3], dtype=float)

    def polarized_fraction(self) -> float:
        return math.sqrt(self.s1**2 + self.s2**2 + self.s3**2) / self.s0

    def dop(self) -> float:
        """Degree of polarization."""
        return self.polarized_fraction()

    def dlp(self) -> float:
        """Degree of linear polarization."""
        return math.sqrt(self.s1**2 + self.s2**2) / self.s0

    def dcp(self) -> float:
        """Degree of circular polarization."""
        return abs(self.s3) / self.s0

    @classmethod
    def from_array(cls, s) -> "StokesVector":
        s = np.asarray(s, dtype=float)
        return cls(*s)


def jones_to_stokes(field) -> StokesVector:
    """Stokes vector of a Jones vector or 2x2 coherency matrix (H, V basis)."""
    field = np.asarray(field, dtype=complex)
    if field.shape == (2,):
        coh = np.outer(field, field.conj())
    elif field.shape == (2, 2):
        coh = field
    else:
        raise ValueError("expected a Jones vector or a 2x2 coherency matrix")
    s0 = np.real(coh[0, 0] + coh[1, 1])
    s1 = np.real(coh[0, 0] - coh[1, 1])
    s2 = np.real(coh[0, 1] + coh[1, 0])
    s3 = np.real(1j * (coh[0, 1] - coh[1, 0]))
    # (1, i)/sqrt(2) -> S3 = +1 with this sign
    return StokesVector(float(s0), float(s1), float(s2), float(-s3))


def _rotator(theta_deg: float) -> np.ndarray:
    c = math.cos(2.0 * math.radians(theta_deg))
    s = math.sin(2.0 * math.radians(theta_deg))
    return np.array(
        [[1, 0, 0, 0], [0, c, s, 0], [0, -s, c, 0], [0, 0, 0, 1]], dtype=float
    )


def mueller_retarder(theta_deg: float, retardance_deg: float) -> np.ndarray:
    """Linear retarder with fast axis at theta and the given retardance."""
    d = math.radians(retardance_deg)
    c, s = math.cos(d), math.sin(d)
    core = np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, c, -s], [0, 0, s, c]], dtype=float
    )
    return _rotator(-theta_deg) @ core @ _rotator(theta_deg)


def mueller_qwp(theta_deg: float) -> np.ndarray:
    """Quarter-wave plate with fast axis at theta degrees from horizontal."""
    return mueller_retarder(theta_deg, 90.0)


def mueller_hwp(theta_deg: float) -> np.ndarray:
    """Half-wave plate with fast axis at theta degrees from horizontal."""
    return mueller_retarder(theta_deg, 180.0)


def mueller_polarizer(theta_deg: float) -> np.ndarray:
    """Ideal linear polarizer with transmission axis at theta degrees."""
    core = 0.5 * np.array(
        [[1, 1, 0, 0], [1, 1, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]], dtype=float
    )
    return _rotator(-theta_deg) @ core @ _rotator(theta_deg)


def rotating_qwp_intensities(stokes: StokesVector, angles_deg) -> np.ndarray:
    """Transmitted intensity behind QWP(theta) + horizontal polarizer."""
    s = stokes.as_array()
    pol = mueller_polarizer(0.0)
    return np.array(
        [(pol @ mueller_qwp(th) @ s)[0] for th in np.asarray(angles_deg, dtype=float)]
    )


def fourier_coefficients(angles_deg, intensities) -> tuple[float, float, float, float]:
    """Discrete Fourier sums (A, B, C, D) of a rotating-QWP intensity record.

    Requires at least 8 samples uniformly spaced over one half turn; the
    discrete sums are exact for the band-limited I(theta) produced by a
    quarter-wave plate.
    """
    angles = np.asarray(angles_deg, dtype=float)
    intensities = np.asarray(intensities, dtype=float)
    n = angles.size
    if n < 8:
        raise DegenerateDataError("need at least 8 QWP angles")
    steps = np.diff(angles)
    if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * steps[0]:
        raise DegenerateDataError("QWP angles must be uniformly spaced")
    if abs(angles[-1] - angles[0] + steps[0] - 180.0) > 1e-6:
        raise DegenerateDataError("QWP angles must cover one half turn (180 deg)")
    th = np.deg2rad(angles)
    a = 2.0 / n * float(np.sum(intensities))
    b = 4.0 / n * float(np.sum(intensities * np.sin(2.0 * th)))
    c = 4.0 / n * float(np.sum(intensities * np.cos(4.0 * th)))
    d = 4.0 / n * float(np.sum(intensities * np.sin(4.0 * th)))
    return a, b, c, d


def stokes_from_coefficients(a: float, b: float, c: float, d: float) -> StokesVector:
    """Normalized Stokes vector from the rotating-QWP Fourier coefficients."""
    denom = a - c
    if abs(denom) < 1e-12 * max(abs(a), abs(c), 1e-30):
        raise DegenerateDataError(
            "A - C vanishes; no transmitted DC component beyond the 4-theta term"
        )
    return StokesVector(1.0, 2.0 * c / denom, 2.0 * d / denom, b / denom)


def extract_stokes(angles_deg, intensities) -> StokesVector:
    """Full rotating-QWP pipeline: samples to normalized Stokes vector."""
    return stokes_from_coefficients(*fourier_coefficients(angles_deg, intensities))


def hwp_polarizer_scan(stokes: StokesVector, angles_deg) -> np.ndarray:
    """Intensity behind HWP(theta) + horizontal polarizer.

    The contrast (Imax - Imin) / (Imax + Imin) of the curve equals the
    degree of linear polarization of the input.
    """
    s = stokes.as_array()
    pol = mueller_polarizer(0.0)
    return np.array(
        [(pol @ mueller_hwp(th) @ s)[0] for th in np.asarray(angles_deg, dtype=float)]
    )


def scan_contrast(intensities) -> float:
    intensities = np.asarray(intensities, dtype=float)
    hi, lo = float(intensities.max()), float(intensities.min())
    if hi + lo == 0:
        raise DegenerateDataError("zero-intensity scan")
    return (hi - lo) / (hi + lo)
