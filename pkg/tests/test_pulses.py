import math

import numpy as np
import pytest

from dpesim.pulses import PulseSpec, PulseTrain, area, envelope, scale_to_area


def test_envelope_peak_and_fwhm():
    p = PulseSpec(fwhm=10.0, center=5.0, peak_rabi=0.8)
    assert envelope(p, 5.0) == pytest.approx(0.8)
    assert envelope(p, 0.0) == pytest.approx(0.4)
    assert envelope(p, 10.0) == pytest.approx(0.4)
    # smooth and even about the center
    t = np.linspace(-30, 40, 301)
    assert np.allclose(envelope(p, 5.0 + t), envelope(p, 5.0 - t))


def test_area_closed_form():
    p = PulseSpec(fwhm=10.0, peak_rabi=1.0)
    assert area(p) == pytest.approx(10.6447, abs=1e-4)


def test_area_linear_in_peak_rabi():
    rng = np.random.default_rng(7)
    base = PulseSpec(fwhm=13.0, peak_rabi=1.0)
    for amp in rng.uniform(0.1, 5.0, 10):
        p = PulseSpec(fwhm=13.0, peak_rabi=amp)
        assert area(p) == pytest.approx(amp * area(base), rel=1e-14)


def test_area_matches_quadrature():
    p = PulseSpec(fwhm=7.3, center=3.0, peak_rabi=0.6)
    t = np.linspace(3.0 - 5 * 7.3, 3.0 + 5 * 7.3, 20001)
    quad = np.trapezoid(envelope(p, t), t)
    assert quad == pytest.approx(area(p), rel=1e-9)


def test_scale_to_area_round_trip():
    p = scale_to_area(PulseSpec(fwhm=15.0), math.pi)
    assert area(p) == pytest.approx(math.pi, abs=1e-12)
    p0 = scale_to_area(p, 0.0)
    assert p0.peak_rabi == 0.0
    with pytest.raises(ValueError):
        scale_to_area(p, -1.0)


def test_trigger_pi_inverts_biexciton():
    # resonant pi pulse applied to a pure biexciton, decay off
    from dpesim.lindblad import DecayRates, XX, basis_state, build_system, evolve
    from dpesim.qd_model import LevelScheme, X_B, laser_energies

    s = LevelScheme()
    _, e_trig = laser_energies(s)
    trig = scale_to_area(
        PulseSpec(fwhm=15.0, center=0.0, carrier_energy=e_trig, polarization="V"),
        math.pi,
    )
    system = build_system(s, [trig], DecayRates(0.0, 0.0, 0.0))
    traj = evolve(system, basis_state(XX), (-65.0, 65.0), 131)
    assert traj.population(X_B)[-1] >= 0.999


def test_pulse_validation():
    with pytest.raises(ValueError):
        PulseSpec(fwhm=0.0)
    with pytest.raises(ValueError):
        PulseSpec(fwhm=10.0, peak_rabi=-0.1)
    with pytest.raises(ValueError):
        PulseSpec(fwhm=10.0, shape="square")
    p = PulseSpec(fwhm=10.0, polarization=(3.0, 4.0))
    assert np.linalg.norm(p.jones) == pytest.approx(1.0)


def test_pulse_train_defaults():
    train = PulseTrain(pulses=(PulseSpec(fwhm=10.0),))
    assert train.repetition_period == 12500.0
    with pytest.raises(ValueError):
        PulseTrain(pulses=(), repetition_period=0.0)
