import math

import numpy as np
import pytest

from dpesim.errors import IntegrationError, InvariantViolation
from dpesim.lindblad import (
    DecayRates,
    Drive,
    FourLevelSystem,
    basis_state,
    build_hamiltonian,
    build_system,
    collapse_operators,
    evolve,
    ground_state,
    validate_density_matrix,
)
from dpesim.experiments import tpe_pulse, trigger_pulse
from dpesim.qd_model import G, X_A, X_B, XX, LevelScheme, laser_energies, level_energies
from dpesim.units import mev_to_angular

from reference import rate_populations, rk4_evolve


def test_hamiltonian_diagonal_detunings(scheme):
    h = build_hamiltonian(scheme, [], 0.0)
    e = level_energies(scheme)
    e_tpe, _ = laser_energies(scheme)
    assert np.allclose(np.diag(h).imag, 0)
    assert h[XX, XX] == pytest.approx(0.0, abs=1e-12)  # two-photon resonance
    assert h[X_B, X_B] == pytest.approx(mev_to_angular(e[X_B] - e_tpe))
    assert np.count_nonzero(h - np.diag(np.diag(h))) == 0


def test_h_polarized_pulse_selection_rule(scheme):
    pulse = tpe_pulse(scheme, amplitude=1.0, polarization="H")
    h = build_hamiltonian(scheme, [pulse], 0.0)
    assert h[X_B, G] == 0  # vertical branch dark for a horizontal field
    assert h[XX, X_B] == 0
    assert abs(h[X_A, G]) > 0
    assert abs(h[XX, X_A]) > 0


def test_sigma_plus_trigger_drives_sigma_minus_complement():
    s = LevelScheme(b_field=4.0)
    sm = s.branch_index("sigma-")
    sp = s.branch_index("sigma+")
    trig = trigger_pulse(s, target=sm, polarization="sigma+")
    h = build_hamiltonian(s, [trig], trig.center)
    # the sigma+ field addresses the XX transition whose photon is sigma+,
    # which leaves the dot in the sigma- exciton
    assert abs(h[XX, sm]) == pytest.approx(1.0 * abs(h[XX, sm]))
    assert abs(h[XX, sm]) > 0.9 * 0.5 * trig.peak_rabi
    assert abs(h[XX, sp]) < 1e-12


def test_hamiltonian_hermitian_under_drive(scheme):
    pulses = [tpe_pulse(scheme, 0.9), trigger_pulse(scheme)]
    for t in (-5.0, 0.0, 7.3, 20.0, 33.0):
        h = build_hamiltonian(scheme, pulses, t)
        assert np.max(np.abs(h - h.conj().T)) < 1e-14


def test_free_exponential_decay():
    rates = DecayRates(gamma_xx=0.0, gamma_x=1.0 / 394.0, gamma_deph=0.0)
    system = build_system(LevelScheme(), None, rates)
    traj = evolve(system, basis_state(X_A), (0.0, 394.0), 99)
    assert traj.population(X_A)[-1] == pytest.approx(math.exp(-1.0), abs=1e-6)


def test_trigger_pi_rotation_with_rates_off(scheme):
    trig = trigger_pulse(scheme, area=math.pi, delay=0.0)
    system = build_system(scheme, [trig], DecayRates(0.0, 0.0, 0.0))
    traj = evolve(system, basis_state(XX), (-65.0, 65.0), 131)
    assert traj.population(X_B)[-1] >= 0.999


def test_tpe_pi_reaches_biexciton_and_matches_rk4(scheme, tpe_pi_amplitude):
    pulse = tpe_pulse(scheme, tpe_pi_amplitude)
    system = build_system(scheme, [pulse], DecayRates(0.0, 0.0, 0.0))
    traj = evolve(system, ground_state(), (-42.0, 42.0), 85)
    assert traj.population(XX)[-1] >= 0.95

    ref = rk4_evolve(
        system.hamiltonian,
        collapse_operators(system.rates),
        ground_state(),
        -42.0,
        42.0,
        dt=0.005,
    )
    assert np.max(np.abs(traj.rho[-1] - ref)) < 1e-6


def test_populations_match_classical_rate_equations():
    rng = np.random.default_rng(11)
    for _ in range(4):
        rates = DecayRates(
            gamma_xx=1.0 / rng.uniform(150, 400),
            gamma_x=1.0 / rng.uniform(250, 600),
            gamma_deph=rng.uniform(0, 3e-3),
        )
        system = build_system(LevelScheme(), None, rates)
        rho0 = np.diag([0.1, 0.15, 0.05, 0.7]).astype(complex)
        rho0[X_A, X_B] = rho0[X_B, X_A] = 0.04  # coherence must not leak into pops
        times = np.linspace(0.0, 1500.0, 41)
        traj = evolve(system, rho0, (0.0, 1500.0), 41)
        expected = rate_populations(
            rates.gamma_xx, rates.gamma_x, np.diag(rho0).real, times
        )
        assert np.max(np.abs(traj.populations - expected)) < 1e-8


def test_self_convergence_on_tolerance(scheme, tpe_pi_amplitude):
    pulses = [tpe_pulse(scheme, tpe_pi_amplitude), trigger_pulse(scheme)]
    system = build_system(scheme, pulses, DecayRates())
    final = []
    for rtol in (1e-8, 5e-9):
        traj = evolve(system, ground_state(), (-42.0, 600.0), 200, rtol=rtol)
        final.append(traj.populations[-1])
    assert np.max(np.abs(final[0] - final[1])) < 1e-8


def test_generalized_rabi_formula():
    # constant drive on a detuned two-level subsystem, no dissipation
    omega, delta = 0.35, 0.22
    coupling = np.zeros((4, 4), dtype=complex)
    coupling[1, 0] = 1.0
    h_static = np.diag([0.0, delta, 0.0, 0.0]).astype(complex)
    system = FourLevelSystem(
        h_static,
        [Drive(coupling=coupling, envelope=lambda t: omega, window=None)],
        DecayRates(0.0, 0.0, 0.0),
    )
    t_end = 60.0
    traj = evolve(system, ground_state(), (0.0, t_end), 241, max_step=0.5)
    og = math.hypot(omega, delta)
    expected = (omega / og) ** 2 * np.sin(og * traj.t / 2.0) ** 2
    assert np.max(np.abs(traj.population(1) - expected)) < 1e-6


def test_integration_failure_names_time(scheme):
    bad = Drive(
        coupling=np.eye(4, k=1).astype(complex),
        envelope=lambda t: float("nan"),
        window=(0.0, 10.0),
    )
    system = FourLevelSystem(
        np.zeros((4, 4), dtype=complex), [bad], DecayRates(0.0, 0.0, 0.0)
    )
    with pytest.raises(IntegrationError, match="t ="):
        evolve(system, ground_state(), (0.0, 20.0), 21)


def test_validate_density_matrix_rejects_bad_states():
    good = np.diag([0.5, 0.5, 0.0, 0.0]).astype(complex)
    validate_density_matrix(good)
    bad_trace = np.diag([0.6, 0.5, 0.0, 0.0]).astype(complex)
    with pytest.raises(InvariantViolation, match="trace"):
        validate_density_matrix(bad_trace)
    bad_herm = good.copy()
    bad_herm[0, 1] = 0.1
    with pytest.raises(InvariantViolation, match="hermiticity"):
        validate_density_matrix(bad_herm)
    bad_eig = np.diag([1.1, -0.1, 0.0, 0.0]).astype(complex)
    with pytest.raises(InvariantViolation, match="eigenvalue"):
        validate_density_matrix(bad_eig)
    with pytest.raises(InvariantViolation):
        evolve(
            build_system(LevelScheme(), None, DecayRates()),
            bad_trace,
            (0.0, 10.0),
            5,
        )


def test_dephasing_damps_coherence_not_population():
    gd = 1e-3
    rates = DecayRates(gamma_xx=0.0, gamma_x=0.0, gamma_deph=gd)
    system = build_system(LevelScheme(fss=0.0), None, rates)
    rho0 = np.array(
        [[0.5, 0.5, 0, 0], [0.5, 0.5, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]],
        dtype=complex,
    )
    traj = evolve(system, rho0, (0.0, 800.0), 33)
    assert np.allclose(traj.population(G), 0.5, atol=1e-9)
    assert np.allclose(traj.population(X_A), 0.5, atol=1e-9)
    coh = np.abs(traj.rho[:, G, X_A])
    assert np.allclose(coh, 0.5 * np.exp(-gd * traj.t), atol=1e-8)


def test_trajectory_exports():
    system = build_system(LevelScheme(), None, DecayRates())
    traj = evolve(system, basis_state(XX), (0.0, 100.0), 11)
    rows = list(traj.csv_rows())
    assert len(rows) == 11
    assert len(rows[0]) == len(traj.CSV_COLUMNS)
    assert rows[0][4] == pytest.approx(1.0)  # initial biexciton population
