import math

import numpy as np
import pytest

from dicke_hp.errors import CutoffError, DimensionError, ValidationError
from dicke_hp.hilbert import (CatParams, HilbertSpec, ModelParams, cat_state, coherent_state,
                              fock_state, product_state)
from dicke_hp.hpx import hp_sx_hamiltonian, leading_hamiltonian
from dicke_hp.operators import OperatorMatrix
from dicke_hp import dynamics as dyn


def test_time_grid():
    g = dyn.TimeGrid(0.0, 1.0, 5)
    np.testing.assert_allclose(g.samples, [0, 0.25, 0.5, 0.75, 1.0])
    assert dyn.TimeGrid(0.0, 0.0, 1).samples.tolist() == [0.0]
    assert dyn.TimeGrid.periods(2.0, 1.0, 3).samples[-1] == pytest.approx(math.pi)
    for bad in [(0.0, 1.0, 0), (1.0, 1.0, 3), (0.0, 1.0, 2.5), (1.0, 0.0, 1)]:
        with pytest.raises(ValidationError):
            dyn.TimeGrid(*bad)


def test_time_series_csv():
    ts = dyn.TimeSeries(np.array([0.0, 0.1]), {"x": np.array([1 / 3, 2.0])})
    text = ts.to_csv(["hello=1"])
    lines = text.splitlines()
    assert lines[0] == "# hello=1" and lines[1] == "t,x"
    assert float(lines[2].split(",")[1]) == 1 / 3
    assert lines[2].split(",")[1] == "0.33333333333333331"
    assert ts["t"] is ts.times and ts.to_dict()["columns"]["x"] == [1 / 3, 2.0]


def test_simple_observables():
    spec = HilbertSpec(1, 40)
    psi = coherent_state(spec, 2.0)
    assert dyn.photon_number(psi) == pytest.approx(4.0, abs=1e-8)
    assert dyn.fidelity(psi, psi) == pytest.approx(1.0, abs=1e-14)
    assert dyn.field_mean(psi) == pytest.approx(2.0, abs=1e-8)
    obs = dyn.observables(coherent_state(spec, 1.0 - 0.5j))
    assert obs["x"] == pytest.approx(math.sqrt(2), abs=1e-8)
    assert obs["p"] == pytest.approx(-0.5 * math.sqrt(2), abs=1e-8)
    assert dyn.branch_visibility(0.0, 2.0) == pytest.approx(math.exp(-2.0))


def test_qamp_closed_forms():
    p = ModelParams(10, 0.0, 1.0, 0.1)
    beta = dyn.qamp_beta(p, math.pi)
    assert beta == pytest.approx(2.0)
    assert abs(beta) ** 2 == pytest.approx(4.0)
    assert dyn.qamp_beta(p, 0.0) == 0 and dyn.qamp_xi(p, 0.0) == 0
    t = np.linspace(0, 7, 50)
    np.testing.assert_allclose(np.abs(dyn.qamp_beta(p, t)) ** 2, 4 * np.sin(t / 2) ** 2, atol=1e-14)
    traj = dyn.qamp_trajectory(p, dyn.TimeGrid.periods(1.0, 1.0, 9))
    assert traj["photon_number"][4] == pytest.approx(4.0)


def test_evolve_exact_initial_and_one_sample():
    p = ModelParams(2, 0.5, 1.0, 0.4)
    spec = HilbertSpec(2, 30)
    h = hp_sx_hamiltonian(p, spec)
    psi0 = coherent_state(spec, 0.5)
    ts = dyn.evolve_exact(h, psi0, dyn.TimeGrid(0.0, 0.0, 1))
    assert len(ts) == 1
    assert np.array_equal(ts.states[0].amplitudes, psi0.amplitudes)
    assert ts["photon_number"][0] == pytest.approx(dyn.photon_number(psi0))


def test_evolve_exact_eigenstate_phase_only():
    spec = HilbertSpec(1, 5)
    h = OperatorMatrix(np.diag(np.arange(12.0)), True, spec)
    psi0 = fock_state(spec, 1, 2)
    ts = dyn.evolve_exact(h, psi0, dyn.TimeGrid(0.0, 3.0, 7))
    for s in ts.states:
        assert dyn.fidelity(psi0, s) == pytest.approx(1.0, abs=1e-14)


def test_evolve_exact_conserves_norm_and_energy():
    p = ModelParams(4, 0.5, 1.0, 0.6)
    spec = HilbertSpec(4, 60)
    h = hp_sx_hamiltonian(p, spec)
    ts = dyn.evolve_exact(h, cat_state(spec, CatParams(1.0, 0.8)), dyn.TimeGrid(0.0, 20.0, 41))
    assert np.abs(ts["norm"] - 1).max() < 1e-9
    assert np.abs(ts["energy"] - ts["energy"][0]).max() < 1e-9


def test_evolve_exact_guards():
    spec = HilbertSpec(1, 10)
    h = hp_sx_hamiltonian(ModelParams(1, 0.5, 1.0, 0.2), spec)
    with pytest.raises(CutoffError):
        dyn.evolve_exact(h, fock_state(spec, 0, 10), dyn.TimeGrid(0, 1, 2))
    with pytest.raises(DimensionError):
        dyn.evolve_exact(h, fock_state(HilbertSpec(1, 11), 0, 0), dyn.TimeGrid(0, 1, 2))


def test_qamp_exact_small():
    p = ModelParams(2, 0.0, 1.0, 0.5)
    spec = HilbertSpec(2, 40)
    grid = dyn.TimeGrid.periods(1.0, 1.0, 17)
    ts = dyn.evolve_exact(hp_sx_hamiltonian(p, spec), coherent_state(spec, 0.0), grid)
    for t, s in zip(grid.samples, ts.states):
        assert dyn.fidelity(dyn.qamp_state(p, spec, t), s) > 1 - 1e-10
        # the phase xi(t) is exact too
        assert dyn.qamp_state(p, spec, t).overlap(s) == pytest.approx(1.0, abs=1e-8)
    np.testing.assert_allclose(ts["photon_number"], 4 * np.sin(grid.samples / 2) ** 2, atol=1e-8)


def test_coherent_branch_exact():
    p = ModelParams(2, 0.0, 1.0, 0.5)
    spec = HilbertSpec(2, 50)
    beta0 = 0.7 - 0.4j
    grid = dyn.TimeGrid(0.0, 5.0, 11)
    ts = dyn.evolve_exact(hp_sx_hamiltonian(p, spec), coherent_state(spec, beta0), grid)
    for t, s in zip(grid.samples, ts.states):
        ref = dyn.coherent_branch_state(p, spec, beta0, t)
        assert ref.overlap(s) == pytest.approx(1.0, abs=1e-8)


def test_cat_schema_and_geometry():
    p = ModelParams(4, 0.0, 1.0, 0.3)
    cat = CatParams(1.2, 0.9)
    ts = dyn.cat_evolution(p, cat, dyn.TimeGrid.periods(1.0, 1.0, 33))
    for name in ("phi1", "phi2", "xi", "branch_distance", "macro_ratio", "visibility"):
        assert name in ts.columns
    np.testing.assert_allclose(ts["branch_distance"], 2 * 1.2 * math.sin(0.9), rtol=1e-12)
    assert ts["phi1"][0] == pytest.approx(0.0, abs=1e-15)
    assert ts["phi2"][0] == pytest.approx(0.0, abs=1e-15)
    t = ts.times
    expect = p.alpha * (np.exp(-1j * t) - 1) * -1 + 1.2 * np.exp(1j * 0.9 - 1j * t)
    np.testing.assert_allclose(ts["branch1_re"] + 1j * ts["branch1_im"], expect, atol=1e-14)


def test_cat_reconstruction_at_zero():
    p = ModelParams(4, 0.0, 1.0, 0.3)
    spec = HilbertSpec(4, 40)
    cat = CatParams(1.0, math.pi / 3)
    ts = dyn.cat_evolution(p, cat, dyn.TimeGrid(0.0, 0.0, 1), spec)
    assert np.abs(ts.states[0].amplitudes - cat_state(spec, cat).amplitudes).max() < 1e-14


def test_macro_ratio_halves():
    cat = CatParams(1.0, math.pi / 2)
    ratios = []
    for n in [8, 16, 32]:
        p = ModelParams(n, 0.0, 1.0, 0.2)
        ts = dyn.cat_evolution(p, cat, dyn.TimeGrid.periods(1.0, 1.0, 65))
        ratios.append(ts["macro_ratio"][0])
        assert ts["macro_ratio"][0] == pytest.approx(dyn.macro_ratio_closed_form(p, cat), rel=1e-12)
    np.testing.assert_allclose(np.array(ratios[1:]) / ratios[:-1], 0.5, rtol=1e-12)


def test_evolve_leading_single_component():
    p = ModelParams(4, 0.2, 1.0, 0.5)
    spec = HilbertSpec(4, 60)
    ts = dyn.evolve_leading(p, spec, {(1, 2): 1.0}, dyn.TimeGrid(0.0, 3.0, 5))
    for s in ts.states:
        assert dyn.fidelity(ts.states[0], s) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ValidationError):
        dyn.evolve_leading(p, spec, {(0, 0): 0.5}, dyn.TimeGrid(0.0, 1.0, 2))


def test_vacuum_decomposition_periodic():
    p = ModelParams(4, 0.3, 1.0, 0.4)
    spec = HilbertSpec(4, 100)
    psi0 = coherent_state(spec, 0.0)
    pairs = [(0, n) for n in range(25)]
    coeffs = dyn.leading_decomposition(p, spec, psi0, pairs)
    assert sum(abs(c) ** 2 for c in coeffs.values()) == pytest.approx(1.0, abs=1e-12)
    period = 2 * math.pi / p.omega
    ts = dyn.evolve_leading(p, spec, coeffs, dyn.TimeGrid(0.0, period, 2))
    overlap = psi0.overlap(ts.states[-1])
    assert overlap == pytest.approx(np.exp(1j * dyn.qamp_xi(p, period)), abs=1e-8)


def test_evolve_leading_matches_exact_under_h0():
    p = ModelParams(6, 0.3, 1.0, 1.0)
    spec = HilbertSpec(6, 130, spin_cutoff=2)
    rng = np.random.default_rng(7)
    pairs = [(m, n) for m in range(3) for n in range(3)]
    c = rng.normal(size=9) + 1j * rng.normal(size=9)
    c /= np.linalg.norm(c)
    coeffs = dict(zip(pairs, c))
    grid = dyn.TimeGrid(0.0, 4.0, 9)
    lead = dyn.evolve_leading(p, spec, coeffs, grid, frame="polaron")
    exact = dyn.evolve_exact(leading_hamiltonian(p, spec, "polaron"), lead.states[0], grid)
    for a, b in zip(lead.states, exact.states):
        assert np.abs(a.amplitudes - b.amplitudes).max() < 1e-8


def test_cat_phases_need_correct_sign():
    # interference between the branches pins phi1 - phi2; flipping the signs breaks it
    p = ModelParams(4, 0.0, 1.0, 0.25)
    spec = HilbertSpec(4, 40)
    cat = CatParams(1.0, math.pi / 3)
    grid = dyn.TimeGrid(0.0, 2.0, 3)
    exact = dyn.evolve_exact(hp_sx_hamiltonian(p, spec), cat_state(spec, cat), grid)
    ts = dyn.cat_evolution(p, cat, grid, spec)
    assert dyn.fidelity(ts.states[-1], exact.states[-1]) > 1 - 1e-10
    t = grid.samples[-1]
    c1, _ = dyn.branch_evolution(p, cat.gamma * np.exp(1j * cat.phi), t)
    c2, _ = dyn.branch_evolution(p, cat.gamma * np.exp(-1j * cat.phi), t)
    phi1, phi2 = dyn.cat_phases(p, cat, t)
    from dicke_hp.hilbert import coherent_amplitudes
    wrong = np.exp(-1j * phi1) * coherent_amplitudes(complex(c1), 40) \
        + np.exp(-1j * phi2) * coherent_amplitudes(complex(c2), 40)
    bad = product_state(spec, 0, wrong)
    assert dyn.fidelity(bad, exact.states[-1]) < 0.99
