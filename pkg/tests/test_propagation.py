import math

import numpy as np
import pytest
from scipy.optimize import brentq

from eitprop import doppler
from eitprop.drive import DriveProtocol, Envelope
from eitprop.errors import GridRefinementError, ParameterError, ZeroFieldError
from eitprop.propagation import FieldGrid, PropagationGrid, gain_trace, peak_gain, propagate
from eitprop.response import DEFAULT_GAMMA, AtomSpec, calibrate_od

SMALL = PropagationGrid(n_zeta=60, dtau=0.01, tau_max=12.0, sample_dtau=0.04)


def two_level(od, omega):
    return calibrate_od(AtomSpec(density=5e16, length=1e-3), od), DriveProtocol(Envelope(omega, "step"))


def lambda_setup(od=2.6, dephasing=0.3, omega_c=1.6):
    spec = calibrate_od(AtomSpec(density=1e17, length=1.2e-3, dephasing=dephasing * DEFAULT_GAMMA), od)
    drive = DriveProtocol(Envelope(0.1, "constant"), Envelope(omega_c, "step"), preparation="pumped")
    return spec, drive


def saturable_output(od, omega0):
    """Steady resonant output of a saturable absorber: ln W + W^2 = ln W0 + W0^2 - OD/2."""
    rhs = math.log(omega0) + omega0**2 - od / 2
    return brentq(lambda w: math.log(w) + w**2 - rhs, 1e-12, omega0)


def test_grid_properties_and_validation():
    g = PropagationGrid(n_zeta=10, dtau=0.01, tau_max=1.0, sample_dtau=0.05)
    assert g.n_steps == 100 and g.steps_per_sample == 5
    assert np.allclose(g.tau, np.arange(21) * 0.05)
    assert len(g.zeta(2e-3)) == 11
    fine = g.refined()
    assert (fine.n_zeta, fine.dtau) == (20, 0.005)
    assert np.allclose(fine.tau, g.tau)
    with pytest.raises(ParameterError):
        PropagationGrid(n_zeta=1)
    with pytest.raises(ParameterError):
        PropagationGrid(dtau=0.003, sample_dtau=0.02)


@pytest.mark.parametrize("od, omega", [(2.0, 2.0), (2.0, 0.5), (5.5, 1.0)])
def test_steady_output_matches_saturable_absorber(od, omega):
    spec, drive = two_level(od, omega)
    grid = PropagationGrid(n_zeta=100, dtau=0.01, tau_max=30.0, sample_dtau=0.5)
    fields = propagate(spec, drive, grid).fields
    assert abs(fields.signal[-1, -1]) == pytest.approx(saturable_output(od, omega), rel=2e-4)


def test_input_face_carries_drive_and_front_is_unattenuated():
    spec, drive = two_level(2.0, 0.5)
    fields = propagate(spec, drive, SMALL).fields
    assert np.all(fields.signal[:, 0] == 0.5)
    assert gain_trace(fields)[0] == pytest.approx(1.0, abs=1e-14)
    assert isinstance(fields, FieldGrid)
    assert np.allclose(fields.signal_rad_s, fields.signal * spec.gamma)


def test_grid_refinement_converges():
    spec, drive = lambda_setup()
    coarse = gain_trace(propagate(spec, drive, SMALL).fields)
    fine = gain_trace(propagate(spec, drive, SMALL.refined()).fields)
    assert np.max(np.abs(coarse - fine) / fine) < 5e-3


def test_coarse_grid_trips_stability_monitor():
    spec, drive = two_level(60.0, 0.02)
    with pytest.raises(GridRefinementError) as err:
        propagate(spec, drive, PropagationGrid(n_zeta=10, dtau=0.01, tau_max=1.0, sample_dtau=0.1))
    assert err.value.suggested_n_zeta > 10


def test_frozen_control_stays_constant():
    spec, drive = lambda_setup()
    res = propagate(spec, drive, SMALL, control_frozen=True)
    assert np.all(res.fields.control == 1.6)
    free = propagate(spec, drive, SMALL)
    assert np.abs(free.fields.control[-1, -1]) < 1.6


def test_transient_gain_and_control_depletion():
    spec, drive = lambda_setup()
    res = propagate(spec, drive, SMALL)
    g = gain_trace(res.fields)
    assert peak_gain(g) > 1.0
    assert res.stability < 0.1


def test_runs_are_bitwise_reproducible():
    spec, drive = lambda_setup()
    a = propagate(spec, drive, SMALL).fields
    b = propagate(spec, drive, SMALL).fields
    assert np.array_equal(a.signal, b.signal) and np.array_equal(a.control, b.control)


def test_single_stationary_velocity_class_equals_cold_run():
    spec, drive = lambda_setup()
    ens = doppler.VelocityEnsemble(np.zeros(1), np.ones(1), 1.0, 1.0, spec.mass)
    a = propagate(spec, drive, SMALL).fields.signal
    b = propagate(spec, drive, SMALL, ensemble=ens).fields.signal
    assert np.allclose(a, b, atol=1e-14)


def test_keep_states_shapes():
    spec, drive = two_level(1.0, 0.5)
    grid = PropagationGrid(n_zeta=8, dtau=0.01, tau_max=0.5, sample_dtau=0.1)
    res = propagate(spec, drive, grid, keep_states=True)
    assert res.states.shape == (6, 9, 1, 2, 2)
    assert res.final_states.shape == (9, 1, 2, 2)
    assert np.allclose(np.trace(res.states, axis1=-2, axis2=-1), 1)


def test_gain_needs_nonzero_input():
    fields = FieldGrid(np.zeros(2), np.zeros(2), np.zeros((2, 2), complex), None, 1.0)
    with pytest.raises(ZeroFieldError):
        gain_trace(fields)


def test_peak_gain_skips_guard_window():
    assert peak_gain(np.array([5.0, 1.0, 2.0])) == 2.0
    assert peak_gain(np.array([5.0, 1.0, 2.0]), guard=0) == 5.0
    with pytest.raises(ParameterError):
        peak_gain(np.array([1.0]), guard=1)
