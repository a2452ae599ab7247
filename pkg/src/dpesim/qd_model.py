"""Four-level quantum-dot model: level structure, transitions, laser energies.

State ordering is fixed throughout the package:

    0 = G (ground), 1 = X_a, 2 = X_b, 3 = XX (biexciton)

At zero magnetic field the exciton branches are the linearly polarized
eigenstates (X_a = H, X_b = V, split by the fine-structure splitting). At
nonzero field, in Faraday geometry, they are the circularly polarized Zeeman
branches; by default the sigma- branch is the upper one, which reproduces the
observed growth of the laser-to-exciton detuning with field. All energies are
in meV; the fine-structure splitting and diamagnetic coefficient are entered
in ueV and ueV/T^2.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateDataError, InvariantViolation
from .units import MU_B_MEV_PER_T

G, X_A, X_B, XX = 0, 1, 2, 3

_SQRT2 = np.sqrt(2.0)

#: Jones vectors in the (H, V) basis. sigma+ carries positive S3.
JONES = {
    "H": np.array([1.0, 0.0], dtype=complex),
    "V": np.array([0.0, 1.0], dtype=complex),
    "sigma+": np.array([1.0, 1.0j]) / _SQRT2,
    "sigma-": np.array([1.0, -1.0j]) / _SQRT2,
}


def jones_vector(polarization) -> np.ndarray:
    """Return a unit Jones vector in the (H, V) basis.

    Accepts a named polarization ("H", "V", "sigma+", "sigma-"), a linear
    polarization angle in degrees measured from H, or an explicit
    2-component sequence (which is normalized).
    """
    if isinstance(polarization, str):
        try:
            return JONES[polarization].copy()
        except KeyError:
            raise ValueError(f"unknown polarization name {polarization!r}") from None
    if np.isscalar(polarization):
        th = np.deg2rad(float(polarization))
        return np.array([np.cos(th), np.sin(th)], dtype=complex)
    vec = np.asarray(polarization, dtype=complex)
    if vec.shape != (2,):
        raise ValueError("polarization vector must have 2 components")
    norm = np.linalg.norm(vec)
    if norm == 0:
        raise ValueError("polarization vector must be nonzero")
    return vec / norm


@dataclass(frozen=True)
class LevelScheme:
    """Energies and magnetic parameters of the four-level dot.

    exciton_energy : mean neutral-exciton transition energy (meV)
    binding_energy : biexciton binding energy E_b > 0 (meV)
    fss            : fine-structure splitting (ueV), >= 0
    g_factor       : exciton g factor (dimensionless)
    diamagnetic    : diamagnetic coefficient (ueV/T^2)
    b_field        : magnetic field in Faraday geometry (T), >= 0
    upper_is_sigma_minus : which circular branch sits at higher energy
    """

    exciton_energy: float = 1363.9
    binding_energy: float = 0.90
    fss: float = 5.9
    g_factor: float = 3.11
    diamagnetic: float = 0.0
    b_field: float = 0.0
    upper_is_sigma_minus: bool = True

    def __post_init__(self):
        if not self.binding_energy > 0:
            raise InvariantViolation("binding_energy must be > 0 (bound biexciton)")
        if self.fss < 0:
            raise InvariantViolation("fss must be >= 0")
        if self.b_field < 0:
            raise InvariantViolation("b_field must be >= 0")

    @property
    def basis(self) -> str:
        """"linear" at zero field, "circular" otherwise."""
        return "linear" if self.b_field == 0 else "circular"

    def branch_labels(self) -> tuple[str, str]:
        """Polarization labels of (X_a, X_b)."""
        if self.basis == "linear":
            return ("H", "V")
        if self.upper_is_sigma_minus:
            return ("sigma-", "sigma+")
        return ("sigma+", "sigma-")

    def branch_index(self, label) -> int:
        """Map a branch label (or analyzer name/angle) to a state index."""
        labels = self.branch_labels()
        if label in labels:
            return (X_A, X_B)[labels.index(label)]
        raise ValueError(
            f"branch {label!r} not present at B={self.b_field} T; have {labels}"
        )

    def exciton_dipole(self, branch: int) -> np.ndarray:
        """Jones vector of the photon emitted on X_branch -> G."""
        label = self.branch_labels()[branch - X_A]
        return JONES[label].copy()

    def biexciton_dipole(self, branch: int) -> np.ndarray:
        """Jones vector of the photon emitted on XX -> X_branch.

        In the linear basis both cascade photons of a branch share its
        linear polarization; in the circular basis they carry opposite
        handedness (the XX -> X_sigma-+ photon is sigma+-).
        """
        d = self.exciton_dipole(branch)
        if self.basis == "linear":
            return d
        return np.conj(d)

    def with_field(self, b_field: float) -> "LevelScheme":
        return replace(self, b_field=b_field)


def level_energies(scheme: LevelScheme) -> np.ndarray:
    """Energies of (G, X_a, X_b, XX) in meV, with E_G = 0.

    At B = 0 the exciton branches are split by the fine-structure splitting.
    At B > 0 they are the Zeeman branches, shifted by +-(1/2) g mu_B B plus a
    diamagnetic term; the spin-singlet biexciton has no Zeeman shift and
    twice the single-exciton diamagnetic shift.
    """
    ex = scheme.exciton_energy
    eb = scheme.binding_energy
    b = scheme.b_field
    if b == 0:
        half_fss = 0.5 * scheme.fss * 1e-3
        e_a = ex + half_fss
        e_b = ex - half_fss
        e_xx = 2.0 * ex - eb
    else:
        zeeman = 0.5 * scheme.g_factor * MU_B_MEV_PER_T * b
        dia = scheme.diamagnetic * 1e-3 * b * b
        e_a = ex + zeeman + dia
        e_b = ex - zeeman + dia
        e_xx = 2.0 * ex - eb + 2.0 * dia
    return np.array([0.0, e_a, e_b, e_xx])


def laser_energies(scheme: LevelScheme, target: int = X_B) -> tuple[float, float]:
    """Carrier energies (E_TPE, E_trigger) in meV.

    The TPE carrier sits at half the G -> XX energy (two-photon resonance);
    the trigger carrier is resonant with the XX -> X_target transition, where
    ``target`` is the exciton branch selected by the trigger polarization.
    """
    if target not in (X_A, X_B):
        raise ValueError("target must be an exciton branch index (1 or 2)")
    e = level_energies(scheme)
    e_tpe = 0.5 * e[XX]
    e_trigger = e[XX] - e[target]
    return e_tpe, e_trigger


@dataclass(frozen=True)
class Transition:
    """One optical transition of the cascade."""

    from_state: int
    to_state: int
    energy: float  # meV
    polarization: np.ndarray  # unit Jones vector, (H, V) basis
    label: str


def transition_table(scheme: LevelScheme) -> list[Transition]:
    """The four dipole-allowed transitions with energies and polarizations."""
    e = level_energies(scheme)
    labels = scheme.branch_labels()
    table = []
    for branch, lab in zip((X_A, X_B), labels):
        table.append(
            Transition(branch, G, e[branch], scheme.exciton_dipole(branch), f"X_{lab}")
        )
    for branch, lab in zip((X_A, X_B), labels):
        table.append(
            Transition(
                XX,
                branch,
                e[XX] - e[branch],
                scheme.biexciton_dipole(branch),
                f"XX->X_{lab}",
            )
        )
    return table


def synthesize_spectrum(
    table: list[Transition],
    linewidths,
    weights,
    grid,
    profile: str = "gaussian",
    baseline: float = 0.0,
) -> np.ndarray:
    """Sampled intensity versus energy for a set of spectral lines.

    Each transition contributes a unit-peak Gaussian (emission line) or
    Lorentzian (cavity feature) of the given FWHM, scaled by its weight;
    negative weights produce dips in the baseline. Deterministic test-fixture
    generator for the fitting routines.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise DegenerateDataError("energy grid must not be empty")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("energy grid must be sorted ascending")
    linewidths = np.broadcast_to(np.asarray(linewidths, dtype=float), (len(table),))
    weights = np.broadcast_to(np.asarray(weights, dtype=float), (len(table),))
    if np.any(linewidths <= 0):
        raise ValueError("linewidths must be positive")
    out = np.full_like(grid, baseline)
    for tr, fwhm, w in zip(table, linewidths, weights):
        x = grid - tr.energy
        if profile == "gaussian":
            out += w * np.exp(-4.0 * np.log(2.0) * x * x / (fwhm * fwhm))
        elif profile == "lorentzian":
            hw = 0.5 * fwhm
            out += w * hw * hw / (x * x + hw * hw)
        else:
            raise ValueError(f"unknown profile {profile!r}")
    return out
