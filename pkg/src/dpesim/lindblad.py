"""Time-dependent Lindblad master-equation engine for the driven four-level dot.

The equation of motion is

    drho/dt = -i [H(t), rho] + sum_k ( L_k rho L_k^+ - 1/2 {L_k^+ L_k, rho} )

in a frame rotating at the two-photon-excitation carrier: every level n
rotates at n_photons * omega_TPE, so the Hamiltonian diagonal holds the
transition detunings and a drive whose carrier differs from the frame by
delta_omega enters its coupling with an explicit exp(-i delta_omega t) phase.
The rotating-wave approximation is applied only against optical frequencies;
cross-driving (the TPE field acting on XX <-> X and the trigger field acting
on G <-> X) is retained through the same phase mechanism.

Integration is hybrid: inside pulse windows an adaptive embedded Runge-Kutta
4(5) scheme with a capped step is used, while drive-free stretches are
propagated exactly with the matrix exponential of the static Liouvillian.
"""

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .errors import IntegrationError, InvariantViolation
from .pulses import PulseSpec, PulseTrain, envelope
from .qd_model import G, X_A, X_B, XX, LevelScheme, laser_energies, level_energies
from .units import mev_to_angular

DIM = 4

DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-14


@dataclass(frozen=True)
class DecayRates:
    """Decay and dephasing rates in 1/ps.

    gamma_xx   : total biexciton decay rate, split equally between branches
    gamma_x    : decay rate of each exciton branch
    gamma_deph : pure-dephasing rate applied to each excited level
    """

    gamma_xx: float = 1.0 / 250.0
    gamma_x: float = 1.0 / 394.0
    gamma_deph: float = 0.0

    def __post_init__(self):
        if self.gamma_xx < 0 or self.gamma_x < 0 or self.gamma_deph < 0:
            raise InvariantViolation("decay rates must be >= 0")


def basis_state(index: int) -> np.ndarray:
    """Density matrix of the pure basis state |index>."""
    rho = np.zeros((DIM, DIM), dtype=complex)
    rho[index, index] = 1.0
    return rho


def ground_state() -> np.ndarray:
    return basis_state(G)


def emission_operator(branch: int) -> np.ndarray:
    """Lowering operator |G><X_branch| of the collected exciton transition."""
    if branch not in (X_A, X_B):
        raise ValueError("branch must be an exciton index (1 or 2)")
    op = np.zeros((DIM, DIM), dtype=complex)
    op[G, branch] = 1.0
    return op


def collapse_operators(rates: DecayRates) -> list[np.ndarray]:
    """Collapse operators of the cascade plus pure dephasing.

    The XX decay feeds both exciton branches with rate gamma_xx/2 each; each
    exciton branch decays to the ground state with gamma_x. Pure dephasing
    enters as sqrt(2 gamma_deph) projectors on X_a, X_b and XX, which damps
    optical coherences while preserving populations.
    """
    ops = []
    if rates.gamma_xx > 0:
        for branch in (X_A, X_B):
            op = np.zeros((DIM, DIM), dtype=complex)
            op[branch, XX] = np.sqrt(rates.gamma_xx / 2.0)
            ops.append(op)
    if rates.gamma_x > 0:
        for branch in (X_A, X_B):
            op = np.zeros((DIM, DIM), dtype=complex)
            op[G, branch] = np.sqrt(rates.gamma_x)
            ops.append(op)
    if rates.gamma_deph > 0:
        for level in (X_A, X_B, XX):
            op = np.zeros((DIM, DIM), dtype=complex)
            op[level, level] = np.sqrt(2.0 * rates.gamma_deph)
            ops.append(op)
    return ops


def validate_density_matrix(
    rho: np.ndarray,
    herm_tol: float = 1e-10,
    trace_tol: float = 1e-8,
    eig_tol: float = 1e-8,
    where: str = "",
) -> None:
    """Raise InvariantViolation if rho is not a valid density matrix."""
    suffix = f" ({where})" if where else ""
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm >= herm_tol:
        raise InvariantViolation(f"hermiticity defect {herm:.3e}{suffix}")
    tr = abs(np.trace(rho).real - 1.0) + abs(np.trace(rho).imag)
    if tr >= trace_tol:
        raise InvariantViolation(f"trace defect {tr:.3e}{suffix}")
    min_eig = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
    if min_eig < -eig_tol:
        raise InvariantViolation(f"negative eigenvalue {min_eig:.3e}{suffix}")


@dataclass
class Drive:
    """One coherent drive term: z(t) C + conj(z(t)) C^+ with
    z(t) = (1/2) Omega(t) exp(-i delta_omega t)."""

    coupling: np.ndarray
    envelope: Callable[[float], float]
    delta_omega: float = 0.0  # rad/ps offset of the carrier from the frame
    window: tuple[float, float] | None = None  # None = always on
    max_step: float | None = None


class FourLevelSystem:
    """Hamiltonian, dissipator and propagators of one driven configuration."""

    def __init__(
        self,
        h_static: np.ndarray,
        drives: list[Drive],
        rates: DecayRates,
        scheme: LevelScheme | None = None,
    ):
        self.h_static = np.asarray(h_static, dtype=complex)
        self.drives = list(drives)
        self.rates = rates
        self.scheme = scheme
        self.collapse = collapse_operators(rates)
        self._dissipator = _dissipator_superoperator(self.collapse)
        self._free_liouvillian = None
        self._propagators: dict[float, np.ndarray] = {}

    def hamiltonian(self, t: float) -> np.ndarray:
        """H(t) in rad/ps, Hermitian by construction."""
        h = self.h_static.copy()
        for d in self.drives:
            if d.window is not None and not (d.window[0] <= t <= d.window[1]):
                continue
            z = 0.5 * d.envelope(t) * np.exp(-1j * d.delta_omega * t)
            h += z * d.coupling + np.conj(z) * d.coupling.conj().T
        return h

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        """Right-hand side of the master equation on vec(rho)."""
        rho = y.reshape(DIM, DIM)
        h = self.hamiltonian(t)
        drho = -1j * (h @ rho - rho @ h)
        return drho.reshape(-1) + self._dissipator @ y

    def liouvillian(self, t: float) -> np.ndarray:
        """Full 16x16 superoperator at time t (row-major vec convention)."""
        return _hamiltonian_superoperator(self.hamiltonian(t)) + self._dissipator

    @property
    def free_liouvillian(self) -> np.ndarray:
        """Superoperator with all drives off (time independent)."""
        if self._free_liouvillian is None:
            self._free_liouvillian = (
                _hamiltonian_superoperator(self.h_static) + self._dissipator
            )
        return self._free_liouvillian

    def free_propagator(self, dt: float) -> np.ndarray:
        """exp(L_free dt), cached per step size."""
        key = round(float(dt), 12)
        prop = self._propagators.get(key)
        if prop is None:
            prop = expm(self.free_liouvillian * dt)
            self._propagators[key] = prop
        return prop

    def driven_windows(self) -> list[tuple[float, float]] | None:
        """Merged time windows with an active drive; None = always driven."""
        windows = []
        for d in self.drives:
            if d.envelope is None:
                continue
            if d.window is None:
                return None
            windows.append(d.window)
        if not windows:
            return []
        windows.sort()
        merged = [list(windows[0])]
        for lo, hi in windows[1:]:
            if lo <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        return [tuple(w) for w in merged]

    def suggested_max_step(self) -> float | None:
        steps = [d.max_step for d in self.drives if d.max_step is not None]
        return min(steps) if steps else None


def _hamiltonian_superoperator(h: np.ndarray) -> np.ndarray:
    eye = np.eye(DIM)
    return -1j * (np.kron(h, eye) - np.kron(eye, h.T))

def _dissipator_superoperator(collapse: list[np.ndarray]) -> np.ndarray:
    eye = np.eye(DIM)
    d = np.zeros((DIM * DIM, DIM * DIM), dtype=complex)
    for op in collapse:
        opd_op = op.conj().T @ op
        d += np.kron(op, op.conj())
        d -= 0.5 * (np.kron(opd_op, eye) + np.kron(eye, opd_op.T))
    return d


def build_system(
    scheme: LevelScheme,
    pulses: PulseTrain | list[PulseSpec] | None,
    rates: DecayRates,
) -> FourLevelSystem:
    """Assemble the rotating-frame system for a scheme and pulse set.

    The frame carrier is the two-photon-excitation energy E_XX / 2, so the
    Hamiltonian diagonal holds (0, Delta_Xa, Delta_Xb, Delta_XX) with
    Delta_Xj = E_Xj - E_TPE and Delta_XX = E_XX - 2 E_TPE (= 0 on two-photon
    resonance). Each pulse couples G <-> X_j with weight <pol|d_j> and
    X_j <-> XX with weight <pol|e_j>, carrying exp(-i delta_omega t) when its
    carrier is offset from the frame.
    """
    e = level_energies(scheme)
    e_tpe, _ = laser_energies(scheme)
    h_static = np.diag(
        [
            0.0,
            mev_to_angular(e[X_A] - e_tpe),
            mev_to_angular(e[X_B] - e_tpe),
            mev_to_angular(e[XX] - 2.0 * e_tpe),
        ]
    ).astype(complex)

    pulse_list: tuple[PulseSpec, ...]
    if pulses is None:
        pulse_list = ()
    elif isinstance(pulses, PulseTrain):
        pulse_list = pulses.pulses
    else:
        pulse_list = tuple(pulses)

    drives = []
    for p in pulse_list:
        pol = p.jones
        if abs(np.linalg.norm(pol) - 1.0) > 1e-9:
            raise ValueError("pulse polarization must be a unit Jones vector")
        # raising part: z(t) multiplies |X_j><G| and |XX><X_j| so that a
        # carrier above the frame beats as exp(-i delta_omega t) on the
        # upward transitions (optical RWA already applied)
        coupling = np.zeros((DIM, DIM), dtype=complex)
        for branch in (X_A, X_B):
            coupling[branch, G] = np.vdot(pol, scheme.exciton_dipole(branch))
            coupling[XX, branch] = np.vdot(pol, scheme.biexciton_dipole(branch))
        drives.append(
            Drive(
                coupling=coupling,
                envelope=lambda t, _p=p: float(envelope(_p, t)),
                delta_omega=mev_to_angular(p.carrier_energy - e_tpe),
                window=p.window(),
                max_step=p.fwhm / 20.0,
            )
        )
    return FourLevelSystem(h_static, drives, rates, scheme=scheme)


def build_hamiltonian(
    scheme: LevelScheme, pulses: PulseTrain | list[PulseSpec], t: float
) -> np.ndarray:
    """Rotating-frame Hamiltonian (rad/ps) at time t; see build_system."""
    return build_system(scheme, pulses, DecayRates(0.0, 0.0, 0.0)).hamiltonian(t)


@dataclass(frozen=True)
class Trajectory:
    """Density-matrix samples on a uniform time grid."""

    t: np.ndarray  # (N,) ps, strictly increasing
    rho: np.ndarray  # (N, 4, 4) complex

    @property
    def populations(self) -> np.ndarray:
        """Real level populations, shape (N, 4)."""
        return np.real(np.einsum("nii->ni", self.rho))

    def population(self, index: int) -> np.ndarray:
        return np.real(self.rho[:, index, index])

    @property
    def step(self) -> float:
        return float(self.t[1] - self.t[0])

    def coherence_magnitudes(self) -> np.ndarray:
        """|rho_ij| for the six upper-triangle pairs, shape (N, 6)."""
        idx = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
        return np.stack([np.abs(self.rho[:, i, j]) for i, j in idx], axis=1)

    def csv_rows(self):
        """Rows (t, pop_G, pop_Xa, pop_Xb, pop_XX, 6 coherence magnitudes)."""
        pops = self.populations
        cohs = self.coherence_magnitudes()
        for k in range(len(self.t)):
            yield (self.t[k], *pops[k], *cohs[k])

    CSV_COLUMNS = (
        "t_ps",
        "pop_G",
        "pop_Xa",
        "pop_Xb",
        "pop_XX",
        "coh_G_Xa",
        "coh_G_Xb",
        "coh_G_XX",
        "coh_Xa_Xb",
        "coh_Xa_XX",
        "coh_Xb_XX",
    )


def _segments(windows, t0: float, t1: float):
    """Partition [t0, t1] into (lo, hi, driven) pieces from merged windows."""
    if windows is None:
        return [(t0, t1, True)]
    segs = []
    cur = t0
    for lo, hi in windows:
        lo, hi = max(lo, t0), min(hi, t1)
        if hi <= cur:
            continue
        if lo > cur:
            segs.append((cur, lo, False))
            cur = lo
        segs.append((cur, hi, True))
        cur = hi
        if cur >= t1:
            break
    if cur < t1:
        segs.append((cur, t1, False))
    return segs


def propagate_on_grid(
    system: FourLevelSystem,
    v0: np.ndarray,
    t_grid: np.ndarray,
    include_drive: bool = True,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    max_step: float | None = None,
) -> np.ndarray:
    """Propagate a vectorized 4x4 operator along t_grid, returning (N, 16).

    The operator need not be Hermitian (the quantum regression theorem
    applies the same generator to conditioned operators). Drive-free
    stretches use the cached matrix exponential; driven stretches use
    RK45 with the configured tolerances.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    out = np.empty((t_grid.size, DIM * DIM), dtype=complex)
    v = np.asarray(v0, dtype=complex).reshape(-1)
    out[0] = v
    if t_grid.size == 1:
        return out
    windows = system.driven_windows() if include_drive else []
    if max_step is None:
        max_step = system.suggested_max_step() or np.inf
    next_idx = 1
    for lo, hi, driven in _segments(windows, t_grid[0], t_grid[-1]):
        idx = []
        while next_idx < t_grid.size and t_grid[next_idx] <= hi + 1e-12:
            idx.append(next_idx)
            next_idx += 1
        if not driven:
            t_cur = lo
            for k in idx:
                v = system.free_propagator(t_grid[k] - t_cur) @ v
                t_cur = t_grid[k]
                out[k] = v
            if hi > t_cur:
                v = system.free_propagator(hi - t_cur) @ v
        else:
            t_eval = [t_grid[k] for k in idx]
            if not t_eval or t_eval[-1] < hi:
                t_eval.append(hi)
            sol = solve_ivp(
                system.rhs,
                (lo, hi),
                v,
                method="RK45",
                t_eval=np.asarray(t_eval),
                rtol=rtol,
                atol=atol,
                max_step=max_step,
            )
            if not sol.success:
                t_fail = sol.t[-1] if sol.t.size else lo
                raise IntegrationError(
                    f"master-equation integration failed at t = {t_fail:.6g} ps: "
                    f"{sol.message}"
                )
            for col, k in enumerate(idx):
                out[k] = sol.y[:, col]
            v = sol.y[:, -1]
    return out


def evolve(
    system: FourLevelSystem,
    rho0: np.ndarray,
    t_span: tuple[float, float],
    n_points: int,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    max_step: float | None = None,
    validate: bool = True,
) -> Trajectory:
    """Integrate the master equation, sampling on a uniform grid.

    Raises IntegrationError on solver failure (naming the time reached) and
    InvariantViolation if a requested sample breaks the density-matrix
    invariants beyond tolerance.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    validate_density_matrix(rho0, where="initial state")
    t_grid = np.linspace(t_span[0], t_span[1], n_points)
    vecs = propagate_on_grid(
        system, rho0.reshape(-1), t_grid, rtol=rtol, atol=atol, max_step=max_step
    )
    rho = vecs.reshape(-1, DIM, DIM)
    if validate:
        for k in (0, len(t_grid) // 2, len(t_grid) - 1):
            validate_density_matrix(rho[k], where=f"t = {t_grid[k]:.6g} ps")
    return Trajectory(t=t_grid, rho=rho)
