"""Parameter-scan drivers: Rabi scans, delay maps, polarization scans,
magneto maps, excitation efficiency and dephasing calibration.

Every scan is a deterministic pure function of its inputs. Intensities are
radiative flux integrals Gamma * integral n(t) dt of the detected branch
per excitation cycle, optionally projected through a polarization analyzer,
so cross-scan comparisons are shape- and location-based.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .correlations import hom_indistinguishability
from .errors import GridError
from .lindblad import (
    DecayRates,
    FourLevelSystem,
    Trajectory,
    X_A,
    X_B,
    XX,
    basis_state,
    build_system,
    emission_operator,
    evolve,
    ground_state,
)
from .polarimetry import StokesVector, jones_to_stokes
from .pulses import PulseSpec, scale_to_area
from .qd_model import LevelScheme, jones_vector, laser_energies, level_energies


@dataclass(frozen=True)
class ScanResult:
    """One scan axis with any number of observable series."""

    axis: np.ndarray
    axis_name: str
    series: dict
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(np.diff(self.axis) <= 0):
            raise ValueError("scan axis must be strictly monotone")
        for name, s in self.series.items():
            if len(s) != len(self.axis):
                raise ValueError(f"series {name!r} length mismatch")

    def csv_rows(self):
        cols = list(self.series.values())
        for k in range(len(self.axis)):
            yield (self.axis[k], *(c[k] for c in cols))

    @property
    def csv_columns(self):
        return (self.axis_name, *self.series.keys())


def tpe_pulse(
    scheme: LevelScheme,
    amplitude: float,
    fwhm: float = 10.0,
    center: float = 0.0,
    polarization="H",
) -> PulseSpec:
    """Two-photon-excitation pulse at half the G -> XX energy."""
    e_tpe, _ = laser_energies(scheme)
    return PulseSpec(
        fwhm=fwhm,
        center=center,
        carrier_energy=e_tpe,
        polarization=polarization,
        peak_rabi=amplitude,
    )


def trigger_pulse(
    scheme: LevelScheme,
    target: int = X_B,
    area: float = math.pi,
    fwhm: float = 15.0,
    delay: float = 20.0,
    polarization=None,
) -> PulseSpec:
    """De-excitation pulse resonant with the XX -> X_target transition.

    The polarization defaults to the XX -> X_target photon polarization, the
    one that drives only that branch.
    """
    _, e_trig = laser_energies(scheme, target=target)
    if polarization is None:
        polarization = scheme.biexciton_dipole(target)
    pulse = PulseSpec(
        fwhm=fwhm,
        center=delay,
        carrier_energy=e_trig,
        polarization=polarization,
    )
    return scale_to_area(pulse, area)


def simulate_cycle(
    scheme: LevelScheme,
    rates: DecayRates,
    pulses: list[PulseSpec],
    lifetimes: float = 8.0,
    n_points: int = 600,
    rho0: np.ndarray | None = None,
) -> tuple[FourLevelSystem, Trajectory]:
    """Evolve one excitation cycle from the ground state (by default).

    The span runs from just before the first pulse to ``lifetimes`` exciton
    lifetimes after the last one, which captures the emission integral to a
    relative accuracy of exp(-lifetimes).
    """
    system = build_system(scheme, pulses, rates)
    windows = [p.window() for p in pulses]
    t0 = min((w[0] for w in windows), default=0.0)
    t_on = max((w[1] for w in windows), default=0.0)
    t1 = t_on + lifetimes / rates.gamma_x
    traj = evolve(system, rho0 if rho0 is not None else ground_state(), (t0, t1), n_points)
    return system, traj


def branch_intensity(traj: Trajectory, rates: DecayRates, branch: int) -> float:
    """Emitted-photon number Gamma_X * integral n_branch(t) dt per cycle."""
    return float(rates.gamma_x * np.trapezoid(traj.population(branch), traj.t))


def analyzer_intensity_series(
    traj: Trajectory, scheme: LevelScheme, analyzer
) -> np.ndarray:
    """Instantaneous exciton emission projected on an analyzer Jones vector.

    Includes the interference of the two branches, so precessing
    superpositions produce quantum beats at intermediate analyzer angles.
    """
    p = jones_vector(analyzer)
    amp = [np.vdot(p, scheme.exciton_dipole(b)) for b in (X_A, X_B)]
    series = np.zeros(traj.t.size)
    for j, cj in zip((X_A, X_B), amp):
        for k, ck in zip((X_A, X_B), amp):
            series += np.real(cj * np.conj(ck) * traj.rho[:, j, k])
    return series


def analyzer_intensity(
    traj: Trajectory, scheme: LevelScheme, rates: DecayRates, analyzer
) -> float:
    series = analyzer_intensity_series(traj, scheme, analyzer)
    return float(rates.gamma_x * np.trapezoid(series, traj.t))


def excitation_efficiency(traj: Trajectory, rates: DecayRates, branch: int) -> float:
    """Probability of collecting one photon from the given branch per cycle."""
    return branch_intensity(traj, rates, branch)


def emission_stokes(
    traj: Trajectory, scheme: LevelScheme, rates: DecayRates
) -> StokesVector:
    """Time-integrated Stokes vector of the exciton emission.

    Built from the integrated 2x2 coherency matrix of the two branches in
    the (H, V) Jones basis.
    """
    dip = [scheme.exciton_dipole(b) for b in (X_A, X_B)]
    coherency = np.zeros((2, 2), dtype=complex)
    for j, dj in zip((X_A, X_B), dip):
        for k, dk in zip((X_A, X_B), dip):
            weight = rates.gamma_x * np.trapezoid(traj.rho[:, j, k], traj.t)
            coherency += weight * np.outer(dj, dk.conj())
    return jones_to_stokes(coherency)


def _map_scan(fn, values, threads: int = 1) -> list:
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, values))
    return [fn(v) for v in values]


def _first_interior_extremum(axis, series, kind: str) -> tuple[float, float]:
    """First interior local max/min, refined by a 3-point parabola."""
    s = series if kind == "max" else -np.asarray(series)
    for i in range(1, len(s) - 1):
        if s[i] >= s[i - 1] and s[i] > s[i + 1]:
            denom = s[i - 1] - 2.0 * s[i] + s[i + 1]
            shift = 0.0 if denom == 0 else 0.5 * (s[i - 1] - s[i + 1]) / denom
            shift = float(np.clip(shift, -1.0, 1.0))
            x = axis[i] + shift * (axis[min(i + 1, len(s) - 1)] - axis[i])
            return float(x), float(series[i])
    raise GridError(
        f"no interior {kind} found; refine or extend the scan grid"
    )


def rabi_scan_tpe(
    scheme: LevelScheme,
    rates: DecayRates,
    amplitudes,
    fwhm: float = 10.0,
    polarization="H",
    lifetimes: float = 6.0,
    n_points: int = 420,
    threads: int = 1,
) -> ScanResult:
    """X and XX emitted intensity versus TPE field amplitude (trigger off).

    The amplitude of the first XX-intensity maximum defines the operational
    TPE pi pulse and is reported in the metadata.
    """
    amplitudes = np.asarray(amplitudes, dtype=float)

    def run(amp):
        pulses = [] if amp == 0 else [tpe_pulse(scheme, amp, fwhm, 0.0, polarization)]
        _, traj = simulate_cycle(scheme, rates, pulses, lifetimes, n_points)
        x_total = branch_intensity(traj, rates, X_A) + branch_intensity(
            traj, rates, X_B
        )
        xx_total = float(
            rates.gamma_xx * np.trapezoid(traj.population(XX), traj.t)
        )
        xx_peak = float(traj.population(XX).max())
        return x_total, xx_total, xx_peak

    rows = _map_scan(run, amplitudes, threads)
    x_int = np.array([r[0] for r in rows])
    xx_int = np.array([r[1] for r in rows])
    xx_peak = np.array([r[2] for r in rows])
    pi_amp, _ = _first_interior_extremum(amplitudes, xx_int, "max")
    return ScanResult(
        axis=amplitudes,
        axis_name="tpe_amplitude_rad_per_ps",
        series={
            "x_intensity": x_int,
            "xx_intensity": xx_int,
            "xx_peak_population": xx_peak,
        },
        metadata={"pi_amplitude": pi_amp},
    )


def calibrate_tpe_pi(
    scheme: LevelScheme,
    rates: DecayRates,
    fwhm: float = 10.0,
    polarization="H",
    n_grid: int = 13,
) -> float:
    """Amplitude of the first XX maximum, refined by golden-section search."""
    delta = abs(level_energies(scheme)[X_A] - laser_energies(scheme)[0])
    guess = math.sqrt(
        2.0 * math.pi * delta * 1.5193 / (fwhm * math.sqrt(math.pi / (8 * math.log(2))))
    )
    grid = np.linspace(0.3 * guess, 2.0 * guess, n_grid)
    scan = rabi_scan_tpe(scheme, rates, grid, fwhm, polarization, lifetimes=4.0,
                         n_points=260)
    coarse = scan.metadata["pi_amplitude"]

    def neg_xx(amp):
        pulses = [tpe_pulse(scheme, amp, fwhm, 0.0, polarization)]
        _, traj = simulate_cycle(scheme, rates, pulses, lifetimes=4.0, n_points=260)
        return -float(rates.gamma_xx * np.trapezoid(traj.population(XX), traj.t))

    from scipy.optimize import minimize_scalar

    step = grid[1] - grid[0]
    res = minimize_scalar(
        neg_xx,
        bracket=None,
        bounds=(coarse - step, coarse + step),
        method="bounded",
        options={"xatol": 1e-3 * coarse},
    )
    return float(res.x)


def rabi_scan_trigger(
    scheme: LevelScheme,
    rates: DecayRates,
    tpe_amplitude: float,
    areas,
    target: int = X_B,
    tpe_fwhm: float = 10.0,
    trigger_fwhm: float = 15.0,
    delay: float = 20.0,
    lifetimes: float = 6.0,
    n_points: int = 420,
    threads: int = 1,
) -> ScanResult:
    """XX emitted intensity versus trigger pulse area, TPE fixed at pi.

    The first interior minimum marks the trigger pi pulse (complete
    de-excitation of the prepared biexciton) and is reported in metadata.
    """
    areas = np.asarray(areas, dtype=float)
    tpe = tpe_pulse(scheme, tpe_amplitude, tpe_fwhm)

    def run(area):
        pulses = [tpe]
        if area > 0:
            pulses = [tpe, trigger_pulse(scheme, target, area, trigger_fwhm, delay)]
        _, traj = simulate_cycle(scheme, rates, pulses, lifetimes, n_points)
        return float(rates.gamma_xx * np.trapezoid(traj.population(XX), traj.t))

    xx_int = np.array(_map_scan(run, areas, threads))
    min_area, _ = _first_interior_extremum(areas, xx_int, "min")
    return ScanResult(
        axis=areas,
        axis_name="trigger_area_rad",
        series={"xx_intensity": xx_int},
        metadata={"pi_area": min_area},
    )


@dataclass(frozen=True)
class DelayAreaMap:
    """Collected X intensity over (trigger delay, trigger area)."""

    delays: np.ndarray
    areas: np.ndarray
    intensity: np.ndarray  # shape (len(delays), len(areas))
    tpe_only_intensity: float

    def csv_rows(self):
        for i, d in enumerate(self.delays):
            for j, a in enumerate(self.areas):
                yield (d, a, self.intensity[i, j])

    CSV_COLUMNS = ("delay_ps", "trigger_area_rad", "x_intensity")


def delay_area_map(
    scheme: LevelScheme,
    rates: DecayRates,
    tpe_amplitude: float,
    delays,
    areas,
    target: int = X_B,
    tpe_fwhm: float = 10.0,
    trigger_fwhm: float = 15.0,
    lifetimes: float = 6.0,
    n_points: int = 420,
    threads: int = 1,
) -> DelayAreaMap:
    """X intensity co-polarized with the trigger versus delay and area."""
    delays = np.asarray(delays, dtype=float)
    areas = np.asarray(areas, dtype=float)
    tpe = tpe_pulse(scheme, tpe_amplitude, tpe_fwhm)

    def run(point):
        delay, area = point
        pulses = [tpe]
        if area > 0:
            pulses = [tpe, trigger_pulse(scheme, target, area, trigger_fwhm, delay)]
        _, traj = simulate_cycle(scheme, rates, pulses, lifetimes, n_points)
        return branch_intensity(traj, rates, target)

    points = [(d, a) for d in delays for a in areas]
    values = np.array(_map_scan(run, points, threads)).reshape(
        len(delays), len(areas)
    )
    _, traj0 = simulate_cycle(scheme, rates, [tpe], lifetimes, n_points)
    return DelayAreaMap(
        delays=delays,
        areas=areas,
        intensity=values,
        tpe_only_intensity=branch_intensity(traj0, rates, target),
    )


def polarization_scan(
    scheme: LevelScheme,
    rates: DecayRates,
    tpe_amplitude: float,
    angles_deg,
    trigger_area: float = math.pi,
    analyzer="V",
    tpe_fwhm: float = 10.0,
    trigger_fwhm: float = 15.0,
    delay: float = 20.0,
    lifetimes: float = 6.0,
    n_points: int = 420,
    threads: int = 1,
) -> ScanResult:
    """Analyzer-projected X intensity versus trigger linear-polarization angle.

    Zero field only: the trigger steers the biexciton into a superposition of
    the linear eigenstates, whose precession the master equation tracks.
    """
    if scheme.b_field != 0:
        raise ValueError("polarization scan is defined at B = 0")
    angles = np.asarray(angles_deg, dtype=float)
    tpe = tpe_pulse(scheme, tpe_amplitude, tpe_fwhm)
    _, e_trig = laser_energies(scheme, target=scheme.branch_index("V"))

    def run(angle):
        trig = scale_to_area(
            PulseSpec(
                fwhm=trigger_fwhm,
                center=delay,
                carrier_energy=e_trig,
                polarization=float(angle),
            ),
            trigger_area,
        )
        _, traj = simulate_cycle(scheme, rates, [tpe, trig], lifetimes, n_points)
        return analyzer_intensity(traj, scheme, rates, analyzer)

    values = np.array(_map_scan(run, angles, threads))
    return ScanResult(
        axis=angles,
        axis_name="trigger_angle_deg",
        series={"detected_intensity": values},
        metadata={"analyzer": str(analyzer)},
    )


def magneto_map(scheme: LevelScheme, b_values) -> ScanResult:
    """Transition-line positions of the four cascade lines versus field."""
    b_values = np.asarray(b_values, dtype=float)
    rows = []
    for b in b_values:
        e = level_energies(scheme.with_field(b))
        rows.append(
            (e[X_A], e[X_B], e[XX] - e[X_A], e[XX] - e[X_B])
        )
    rows = np.array(rows)
    return ScanResult(
        axis=b_values,
        axis_name="b_field_t",
        series={
            "x_a_mev": rows[:, 0],
            "x_b_mev": rows[:, 1],
            "xx_to_x_a_mev": rows[:, 2],
            "xx_to_x_b_mev": rows[:, 3],
        },
    )


def indistinguishability(
    scheme: LevelScheme,
    rates: DecayRates,
    tpe_amplitude: float | None,
    trigger: bool = True,
    target: int = X_B,
    tpe_fwhm: float = 10.0,
    trigger_fwhm: float = 15.0,
    delay: float = 20.0,
    trigger_area: float = math.pi,
    n: int = 400,
    lifetimes: float = 5.0,
    instantaneous: bool = False,
) -> float:
    """Mean wave-packet overlap of the collected photon for one configuration.

    With ``instantaneous`` the biexciton (or exciton, when triggered) is
    prepared at t = 0 with no pulses, which isolates the cascade timing
    physics from pulse-envelope effects.
    """
    if instantaneous:
        pulses: list[PulseSpec] = []
        rho0 = basis_state(target) if trigger else basis_state(XX)
        t0 = 0.0
    else:
        pulses = [tpe_pulse(scheme, tpe_amplitude, tpe_fwhm)]
        if trigger:
            pulses.append(
                trigger_pulse(scheme, target, trigger_area, trigger_fwhm, delay)
            )
        rho0 = ground_state()
        t0 = min(p.window()[0] for p in pulses)
    system = build_system(scheme, pulses, rates)
    h = (lifetimes / rates.gamma_x) / n
    n_total = 2 * n
    traj = evolve(system, rho0, (t0, t0 + (n_total - 1) * h), n_total)
    return hom_indistinguishability(system, traj, emission_operator(target), n, n)


def calibrate_dephasing(
    scheme: LevelScheme,
    rates: DecayRates,
    target_m: float,
    tpe_amplitude: float,
    bracket: tuple[float, float] = (1e-5, 5e-3),
    tol: float = 1e-6,
    **kwargs,
) -> tuple[float, dict]:
    """Pure-dephasing rate at which the double-pulse overlap equals target_m.

    Returns the rate and a report with the bracketing values. The overlap is
    monotone non-increasing in the dephasing rate, so a sign change over the
    bracket guarantees a root.
    """

    def m_of(gd: float) -> float:
        r = replace(rates, gamma_deph=gd)
        return indistinguishability(scheme, r, tpe_amplitude, trigger=True, **kwargs)

    m_lo, m_hi = m_of(bracket[0]), m_of(bracket[1])
    if not (m_hi <= target_m <= m_lo):
        raise GridError(
            f"target overlap {target_m} outside bracket values "
            f"[{m_hi:.4f}, {m_lo:.4f}]; widen the dephasing bracket"
        )
    root = brentq(lambda g: m_of(g) - target_m, *bracket, xtol=tol)
    report = {
        "gamma_deph": float(root),
        "m_at_root": m_of(float(root)),
        "bracket": bracket,
        "m_bracket": (m_lo, m_hi),
    }
    return float(root), report
