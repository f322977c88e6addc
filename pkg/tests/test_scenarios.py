import json
import math
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from eitprop import scenarios
from eitprop.errors import ParameterError, ScenarioError
from eitprop.propagation import PropagationGrid
from eitprop.response import resonant_od
from eitprop.scenarios import REGISTRY, compare, preset, ringing_amplitude, run

GOLDEN = json.loads((Path(__file__).parent / "golden" / "regression.json").read_text())
QUICK = PropagationGrid(n_zeta=40, dtau=0.01, tau_max=8.0, sample_dtau=0.04)


def test_registry_covers_every_study():
    for name in ["fig1a", "fig1b", "fig3a", "fig3b", "od8", "fig4a", "fig4b", "fig5", "fig4b-cold", "fig5-cold"]:
        assert name in REGISTRY
    for hot, cold in scenarios.COLD_COUNTERPART.items():
        assert preset(hot).doppler is not None and preset(cold).doppler is None


@pytest.mark.parametrize("name", list(REGISTRY))
def test_presets_reproduce_their_od_and_carry_notes(name):
    cfg = preset(name)
    assert cfg.name == name
    assert resonant_od(cfg.spec) == pytest.approx(cfg.target_od, rel=1e-9)
    assert cfg.notes


def test_fig3a_parameters():
    cfg = preset("fig3a")
    g = cfg.spec.gamma
    assert g == pytest.approx(2 * math.pi * 5.86e6)
    assert cfg.drive.control.amplitude == 1.6 and cfg.drive.signal.amplitude == 0.1
    assert cfg.spec.dephasing / g == pytest.approx(0.3)
    assert cfg.target_od == 1.2
    assert cfg.spec.density == pytest.approx(2e6 / (4 / 3 * math.pi * 0.6e-3**3))
    assert preset("fig3b").spec.density == pytest.approx(6 * cfg.spec.density)


def test_fig5_parameters():
    cfg = preset("fig5")
    assert cfg.spec.length == 0.025
    assert cfg.doppler.temperature == pytest.approx(333.15)
    assert cfg.drive.delta_s == cfg.drive.delta_c == 0
    assert cfg.drive.control.amplitude == 2.0
    assert cfg.spec.dephasing / cfg.spec.gamma == pytest.approx(0.001)


def test_unknown_preset_lists_registry():
    with pytest.raises(ScenarioError, match="fig3b"):
        preset("fig9")


def test_config_rejects_inconsistent_od_and_bad_pipeline():
    cfg = preset("fig3a")
    with pytest.raises(ParameterError):
        replace(cfg, target_od=2.0)
    with pytest.raises(ParameterError):
        replace(cfg, pipeline="hybrid")
    with pytest.raises(ParameterError):
        replace(cfg, pipeline="doppler-obe")


def test_with_od_recalibrates():
    cfg = preset("fig3a").with_od(2.6)
    assert resonant_od(cfg.spec) == pytest.approx(2.6, rel=1e-12)


def test_config_hash_ignores_notes_but_tracks_physics():
    cfg = preset("fig3b")
    assert replace(cfg, notes=()).config_hash() == cfg.config_hash()
    assert cfg.with_od(2.7).config_hash() != cfg.config_hash()
    assert cfg.with_pipeline("obe").config_hash() != cfg.config_hash()


def test_run_result_invariants():
    cfg = replace(preset("fig3b"), grid=QUICK)
    r = run(cfg)
    assert len(r.tau) == len(r.gain) == len(r.transmission)
    assert r.peak_gain == np.max(r.gain[scenarios.GUARD:])
    assert np.allclose(r.transmission, r.gain**2)
    assert r.steady_transmission == r.transmission[-1]
    assert r.fields is not None and r.extras["stability"] < 0.1


def test_runs_are_deterministic():
    cfg = replace(preset("fig3b"), grid=QUICK)
    a, b = run(cfg), run(cfg)
    assert a.config_hash == b.config_hash
    assert a.gain.tobytes() == b.gain.tobytes()


def test_errors_carry_scenario_context():
    cfg = replace(preset("fig1a").with_od(200.0), grid=PropagationGrid(n_zeta=4, dtau=0.01, tau_max=1.0, sample_dtau=0.1))
    with pytest.raises(scenarios.ScenarioRunError, match="fig1a") as err:
        run(cfg, "mbe")
    assert err.value.category == "compute"


def test_compare_self_is_neutral():
    r = run(preset("fig4a"))
    c = compare(r, r)
    assert c.peak_gain_ratio == 1 and c.steady_transmission_difference == 0
    assert c.ringing_ratio == 1


def test_compare_rejects_mixed_schemes():
    with pytest.raises(ParameterError):
        compare(run(preset("fig1a")), run(preset("fig4a")))


def test_compare_resamples_other_grid():
    cfg = preset("fig4a")
    a = run(cfg)
    b = run(replace(cfg, grid=replace(cfg.grid, sample_dtau=0.04)))
    assert compare(a, b).peak_gain_ratio == pytest.approx(1, abs=1e-3)


def test_ringing_amplitude():
    t = np.linspace(0, 20, 2001)
    assert ringing_amplitude(1 - np.exp(-t)) == 0.0
    damped = 1 + np.exp(-0.5 * t) * np.cos(3 * t)
    first = np.argmax(np.diff(np.sign(np.diff(damped[1:]))) != 0) + 2
    assert ringing_amplitude(damped) == pytest.approx(np.max(np.abs(damped[first + 1:] - damped[-1])))


def test_spectrum_attached_when_requested():
    r = run(preset("fig4b-cold"))
    assert r.spectrum is not None
    assert len(r.spectrum.detuning) == 201


@pytest.mark.parametrize("entry", GOLDEN["runs"], ids=lambda e: f"{e['scenario']}-{e['pipeline']}")
def test_golden_regression(entry):
    r = run(preset(entry["scenario"]), entry["pipeline"])
    assert r.config_hash == entry["config_hash"], "preset changed: review and refreeze the golden file"
    assert r.peak_gain == pytest.approx(entry["peak_gain"], rel=1e-9)
    assert r.steady_transmission == pytest.approx(entry["steady_transmission"], rel=1e-9)


def test_golden_ringing_ratio():
    c = compare(run(preset("fig5")), run(preset("fig5-cold")))
    assert c.ringing_ratio == pytest.approx(GOLDEN["fig5_ringing_ratio"], rel=1e-9)


def test_golden_gain_ordering():
    peaks = {(e["scenario"], e["pipeline"]): e["peak_gain"] for e in GOLDEN["runs"]}
    obe = [peaks[(n, "obe")] for n in ("fig3a", "fig3b", "od8")]
    mbe = [peaks[(n, "mbe")] for n in ("fig3a", "fig3b", "od8")]
    assert obe == sorted(obe) and all(o > m for o, m in zip(obe, mbe))
    assert max(mbe) < 2
