import numpy as np
import pytest

from dpesim.errors import DegenerateDataError, InvariantViolation
from dpesim.qd_model import (
    G,
    X_A,
    X_B,
    XX,
    LevelScheme,
    jones_vector,
    laser_energies,
    level_energies,
    synthesize_spectrum,
    transition_table,
)


def test_fss_splitting_at_zero_field():
    s = LevelScheme(fss=5.9)
    e = level_energies(s)
    assert e[G] == 0.0
    assert e[X_A] - e[X_B] == pytest.approx(5.9e-3, abs=1e-12)


def test_zero_fss_degenerate():
    e = level_energies(LevelScheme(fss=0.0))
    assert e[X_A] == e[X_B]


def test_zeeman_splitting_at_4t():
    s = LevelScheme(fss=5.9, g_factor=3.11, diamagnetic=0.0, b_field=4.0)
    e = level_energies(s)
    # 1/2 * 3.11 * 0.05788 meV/T * 4 T per branch, by hand
    assert e[X_A] - e[X_B] == pytest.approx(0.7200272, abs=1e-7)
    assert e[XX] == pytest.approx(2 * s.exciton_energy - s.binding_energy, abs=1e-12)


def test_biexciton_energy_diamagnetic_only():
    s = LevelScheme(diamagnetic=2.5, b_field=3.0)
    e = level_energies(s)
    dia_mev = 2.5e-3 * 9.0
    assert e[XX] == pytest.approx(
        2 * s.exciton_energy - s.binding_energy + 2 * dia_mev, abs=1e-12
    )


def test_energy_conservation_exact():
    rng = np.random.default_rng(3)
    for _ in range(20):
        s = LevelScheme(
            exciton_energy=1300 + 100 * rng.uniform(),
            binding_energy=0.2 + rng.uniform(),
            fss=rng.uniform(0, 30),
            diamagnetic=rng.uniform(0, 5),
            b_field=float(rng.choice([0.0, rng.uniform(0.1, 6)])),
        )
        e = level_energies(s)
        for tr in transition_table(s):
            if tr.from_state == XX:
                assert tr.energy == e[XX] - e[tr.to_state]
                # cascade closes exactly: XX line + X line = G -> XX energy
                assert tr.energy + e[tr.to_state] == e[XX]


def test_laser_energies_zero_field():
    s = LevelScheme(fss=0.0)
    e = level_energies(s)
    e_tpe, e_trig = laser_energies(s, target=X_B)
    assert e[X_B] - e_tpe == pytest.approx(0.45, abs=1e-12)
    assert e[X_B] - e_trig == pytest.approx(0.90, abs=1e-12)
    # with the 5.9 ueV splitting included the detunings move by fss/2, fss
    s2 = LevelScheme(fss=5.9)
    e2 = level_energies(s2)
    tpe2, trig2 = laser_energies(s2, target=X_B)
    assert e2[X_B] - tpe2 == pytest.approx(0.45, abs=0.005)
    assert e2[X_B] - trig2 == pytest.approx(0.90, abs=0.01)


def test_laser_energies_degenerate_binding_limit():
    s = LevelScheme(binding_energy=1e-9, fss=0.0)
    e = level_energies(s)
    e_tpe, e_trig = laser_energies(s, target=X_B)
    assert abs(e[X_B] - e_tpe) < 1e-9
    assert abs(e[X_B] - e_trig) < 1e-9


def test_detuning_grows_to_081_mev_at_4t():
    s = LevelScheme(g_factor=3.11, diamagnetic=0.0, b_field=4.0)
    e = level_energies(s)
    e_tpe, _ = laser_energies(s)
    upper = s.branch_index("sigma-")
    assert e[upper] - e_tpe == pytest.approx(0.81, abs=1e-3)


def test_detuning_monotone_in_field():
    prev = 0.0
    for b in np.linspace(0.0, 6.0, 13):
        s = LevelScheme(b_field=b, diamagnetic=1.0)
        e = level_energies(s)
        e_tpe, _ = laser_energies(s)
        det = e[X_A] - e_tpe  # upper branch moves away from the TPE carrier
        assert det >= prev
        prev = det


def test_zeeman_linear_diamagnetic_even():
    s = lambda b: LevelScheme(b_field=b, diamagnetic=1.7)
    fields = np.array([0.5, 1.0, 2.0, 4.0])
    split = np.array(
        [level_energies(s(b))[X_A] - level_energies(s(b))[X_B] for b in fields]
    )
    assert np.allclose(split / fields, split[0] / fields[0], rtol=1e-12)
    mean_shift = np.array(
        [
            0.5 * (level_energies(s(b))[X_A] + level_energies(s(b))[X_B])
            - LevelScheme().exciton_energy
            for b in fields
        ]
    )
    assert np.allclose(mean_shift / fields**2, 1.7e-3, rtol=1e-12)


def test_basis_rule_and_labels():
    assert LevelScheme(b_field=0.0).basis == "linear"
    assert LevelScheme(b_field=0.1).basis == "circular"
    assert LevelScheme().branch_labels() == ("H", "V")
    s4 = LevelScheme(b_field=4.0)
    assert s4.branch_labels() == ("sigma-", "sigma+")
    assert LevelScheme(b_field=4.0, upper_is_sigma_minus=False).branch_labels() == (
        "sigma+",
        "sigma-",
    )
    with pytest.raises(ValueError):
        s4.branch_index("H")


def test_cascade_photon_polarizations():
    s = LevelScheme()
    assert np.allclose(s.biexciton_dipole(X_A), s.exciton_dipole(X_A))
    s4 = LevelScheme(b_field=4.0)
    for branch in (X_A, X_B):
        # circular cascade photons carry opposite handedness
        assert np.allclose(
            s4.biexciton_dipole(branch), np.conj(s4.exciton_dipole(branch))
        )
        assert abs(np.vdot(s4.biexciton_dipole(branch), s4.exciton_dipole(branch))) < 1e-12


def test_scheme_invariants():
    with pytest.raises(InvariantViolation):
        LevelScheme(binding_energy=0.0)
    with pytest.raises(InvariantViolation):
        LevelScheme(fss=-1.0)
    with pytest.raises(InvariantViolation):
        LevelScheme(b_field=-0.5)


def test_jones_vector_forms():
    assert np.allclose(jones_vector("H"), [1, 0])
    assert np.allclose(jones_vector(90.0), [0, 1], atol=1e-15)
    v = jones_vector((3.0, 4.0j))
    assert np.linalg.norm(v) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        jones_vector("diagonal-ish")
    with pytest.raises(ValueError):
        jones_vector((0.0, 0.0))


def test_spectrum_single_line_peak_equals_weight():
    s = LevelScheme()
    table = [transition_table(s)[0]]
    grid = np.array([table[0].energy])
    out = synthesize_spectrum(table, 0.07, 0.7, grid)
    assert out[0] == pytest.approx(0.7, abs=1e-12)


def test_spectrum_resolves_binding_energy():
    s = LevelScheme(fss=0.0)
    table = transition_table(s)
    x_line = table[1]  # X_V
    xx_line = table[3]  # XX -> X_V
    grid = np.linspace(xx_line.energy - 0.5, x_line.energy + 0.5, 4001)
    out = synthesize_spectrum([x_line, xx_line], 0.07, (1.0, 0.8), grid)
    interior = (out[1:-1] > out[:-2]) & (out[1:-1] > out[2:])
    peaks = grid[1:-1][interior]
    assert len(peaks) == 2
    assert peaks[1] - peaks[0] == pytest.approx(0.90, abs=0.01)


def test_spectrum_errors():
    s = LevelScheme()
    table = transition_table(s)
    with pytest.raises(DegenerateDataError):
        synthesize_spectrum(table, 0.1, 1.0, np.array([]))
    with pytest.raises(ValueError):
        synthesize_spectrum(table, 0.1, 1.0, np.array([2.0, 1.0]))
    with pytest.raises(ValueError):
        synthesize_spectrum(table, -0.1, 1.0, np.array([1.0, 2.0]))
