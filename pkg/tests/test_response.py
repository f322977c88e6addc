import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import constants

from eitprop import atomic, response
from eitprop.drive import DriveProtocol, Envelope
from eitprop.errors import ParameterError, ZeroFieldError
from eitprop.propagation import coupling_constant
from eitprop.response import AtomSpec, calibrate_od, resonant_od

SPEC = calibrate_od(AtomSpec(density=5e16, length=1e-3), 2.0)


def test_atom_spec_rates_and_validation():
    assert SPEC.gamma31 + SPEC.gamma32 == pytest.approx(SPEC.gamma)
    with pytest.raises(ParameterError):
        AtomSpec(density=-1, length=1e-3)
    with pytest.raises(ParameterError):
        AtomSpec(density=1e16, length=0.0)
    with pytest.raises(ParameterError):
        AtomSpec(density=1e16, length=1e-3, branching_31=1.5)
    with pytest.raises(ParameterError):
        response.calibrate_od(AtomSpec(density=0, length=1e-3), 1.0)


@given(st.floats(1e-3, 50))
def test_calibration_reproduces_od(od):
    assert resonant_od(calibrate_od(SPEC, od)) == pytest.approx(od, rel=1e-12)


def test_od_matches_propagation_coupling():
    assert resonant_od(SPEC) == pytest.approx(2 * coupling_constant(SPEC) * SPEC.length / SPEC.gamma, rel=1e-12)


def test_prefactor_definition():
    expected = SPEC.density * SPEC.dipole**2 / (constants.epsilon_0 * constants.hbar)
    assert SPEC.coupling_prefactor == pytest.approx(expected, rel=1e-14)


def test_chi_from_zero_field():
    with pytest.raises(ZeroFieldError):
        response.chi_from_coherence(0.1j, 0.0, SPEC)


@pytest.mark.parametrize("omega", [0.02, 0.5, 2.0])
def test_dynamic_steady_chi_matches_closed_form(omega):
    g = SPEC.gamma
    deltas = np.linspace(-5, 5, 41)
    rho = atomic.steady_state(atomic.two_level_hamiltonian(deltas, omega), atomic.LindbladSet.two_level())
    chi = response.chi_from_coherence(rho[:, 1, 0], omega * g, SPEC)
    exact = response.two_level_chi(omega * g, deltas * g, SPEC)
    assert np.max(np.abs(chi - exact) / np.abs(exact)) < 1e-10


def test_resonant_chi_is_absorptive():
    chi = response.two_level_chi(0.0, 0.0, SPEC)
    assert chi.real == 0
    assert chi.imag == pytest.approx(SPEC.coupling_prefactor / SPEC.gamma)
    assert response.weak_chi(0.0, SPEC) == pytest.approx(1j * SPEC.coupling_prefactor / SPEC.gamma)


def test_saturation_lowers_absorption():
    g = SPEC.gamma
    assert response.two_level_chi(2 * g, 0.0, SPEC).imag < response.two_level_chi(0.02 * g, 0.0, SPEC).imag


def test_beer_lambert_weak_resonant_gives_exp_minus_od():
    chi = response.weak_chi(0.0, SPEC)
    out = response.beer_lambert(1.0, chi, SPEC.k, SPEC.length)
    assert abs(out) ** 2 == pytest.approx(math.exp(-resonant_od(SPEC)), rel=1e-12)


def test_beer_lambert_warns_on_large_chi():
    with pytest.warns(RuntimeWarning):
        response.beer_lambert(1.0, 0.8j, SPEC.k, 1e-6)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        response.beer_lambert(1.0, 1e-3j, SPEC.k, 1e-3)


def test_saturated_steady_transmission_is_exact():
    # steady two-level transmission is exp(-OD / (1 + 2 Omega^2 / Gamma^2)) on resonance
    drive = DriveProtocol(Envelope(0.02, "step"))
    trace = response.obe_transmission_trace(SPEC, drive, np.array([0.0, 60.0]))
    assert trace.transmission[-1] == pytest.approx(math.exp(-2.0 / (1 + 2 * 0.02**2)), rel=1e-9)


def test_obe_trace_starts_transparent_and_relaxes():
    drive = DriveProtocol(Envelope(2.0, "step"))
    tau = np.linspace(0, 20, 401)
    trace = response.obe_transmission_trace(SPEC, drive, tau)
    assert trace.gain[0] == pytest.approx(1.0, abs=1e-12)
    steady = math.exp(-2.0 / (1 + 2 * 4.0))
    assert trace.transmission[-1] == pytest.approx(steady, rel=1e-6)
    assert np.allclose(trace.transmission, trace.gain**2)


def test_single_atom_coherence_time_dependent_drive():
    drive = DriveProtocol(Envelope(1.0, "ramp", t_on=0.0, rise=2.0))
    tau = np.linspace(0, 40, 81)
    lb = atomic.LindbladSet.two_level()
    rho = response.single_atom_coherence(drive, lb, tau, atomic.IntegratorConfig(step=0.005))
    # resonant steady coherence -Omega (2 Delta - i) / (1 + 2 Omega^2) with Omega = 1
    assert rho[-1] == pytest.approx(1j / 3, abs=1e-8)
    with pytest.raises(ParameterError):
        response.single_atom_coherence(drive, lb, np.array([1.0, 0.5]))


def test_lambda_trace_shows_transient_gain_then_relaxes():
    spec = calibrate_od(AtomSpec(density=1e17, length=1e-3, dephasing=0.3 * response.DEFAULT_GAMMA), 2.6)
    drive = DriveProtocol(Envelope(0.1, "constant"), Envelope(1.6, "step"), preparation="pumped")
    trace = response.obe_transmission_trace(spec, drive, np.linspace(0, 30, 1501))
    assert trace.gain.max() > 1.0
    assert trace.gain[-1] < 1.0
