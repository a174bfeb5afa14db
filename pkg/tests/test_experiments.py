import json
import math

import numpy as np
import pytest

from dicke_hp import experiments as ex
from dicke_hp.errors import ValidationError
from dicke_hp.hilbert import ModelParams, coherent_amplitudes, required_cutoff


def _coherent_photons(beta):
    def metric(m):
        amps = coherent_amplitudes(beta, m, allow_truncation=True)
        return float(np.sum(np.abs(amps) ** 2 * np.arange(m + 1)))
    return metric


def test_audit_pass_and_fail():
    ok = ex.cutoff_audit(_coherent_photons(1.0), 64)
    assert ok.passed and ok.n_max_doubled == 128
    with pytest.warns(RuntimeWarning):
        bad = ex.cutoff_audit(_coherent_photons(7.0), 16)
    assert not bad.passed and bad.change > 1.0
    with pytest.raises(ValidationError):
        ex.cutoff_audit(_coherent_photons(1.0), 64, kind="vibes")


def test_audit_records_tail_weight():
    from dicke_hp.hilbert import HilbertSpec, coherent_state

    def metric(m):
        s = coherent_state(HilbertSpec(1, m), 1.0, allow_truncation=True)
        return 0.0, s

    res = ex.cutoff_audit(metric, 30)
    assert res.tail_weight is not None and res.tail_weight < 1e-10


def test_qamp_cutoff_rule():
    # |beta|_max = 2 N g / omega = 6 for N g / omega = 3
    assert required_cutoff(6.0) == 82
    assert ex.cutoff_audit(_coherent_photons(6.0), 82).passed


def test_power_law_fit_exact():
    x = np.array([4, 8, 16, 32.0])
    fit = ex.power_law_fit(x, 3.0 * x**-1.25)
    assert fit.exponent == pytest.approx(-1.25, abs=1e-12)
    assert fit.prefactor == pytest.approx(3.0, rel=1e-12)
    assert fit.ci_low <= fit.exponent <= fit.ci_high
    two = ex.power_law_fit([1, 2], [1, 0.5])
    assert two.exponent == pytest.approx(-1.0) and two.to_dict()["stderr"] is None
    with pytest.raises(ValidationError):
        ex.power_law_fit([1], [1])


def test_convergence_in_n_schema():
    res = ex.convergence_in_N(ModelParams(4, 0.2, 1.0, 1.0), [16, 4, 8])
    assert res.values.tolist() == [4, 8, 16]
    assert len(res.rows()) == 3 and res.fit is not None and res.fit_drop_first is not None
    assert res.warnings == 0
    assert np.all(np.diff(res.metric("infidelity")) < 0)
    csv_text = res.to_csv(["x=1"])
    assert csv_text.splitlines()[1].startswith("N,infidelity")
    d = json.loads(res.to_json())
    assert d["experiment"] == "convergence" and len(d["rows"]) == 3
    assert res.filename() == "convergence-N"
    assert res.filename("20240101T000000Z") == "convergence-N-20240101T000000Z"


def test_convergence_exact_limit_delta_zero():
    res = ex.convergence_in_N(ModelParams(4, 0.0, 1.0, 1.0), [4, 8, 16])
    assert np.all(res.metric("infidelity") < 1e-14)
    res = ex.convergence_in_g(ModelParams(4, 0.0, 1.0, 1.0), [0.5, 1.0, 2.0])
    assert np.all(res.metric("infidelity") < 1e-14)


def test_weak_coupling_negative_control():
    infid, _ = ex.ground_infidelity(ModelParams(4, 0.2, 1.0, 0.05))
    assert infid > 0.5


def test_failing_audit_excluded_from_fit():
    res = ex.convergence_in_g(ModelParams(4, 0.2, 1.0, 1.0), [0.5, 0.7, 1.0, 2.0], n_max=6)
    flagged = [p for p in res.points if not p.audit.passed]
    assert flagged and res.warnings == len(flagged)
    assert all(row["audit_passed"] is False for row in res.rows() if row["g"] in
               [p.value for p in flagged])
    good = [p for p in res.points if p.audit.passed and p.metrics["infidelity"] > 0]
    if len(good) >= 2:
        assert res.fit.n_points == len(good)
    else:
        assert res.fit is None


def test_sweeps_reproducible_and_parallel():
    base = ModelParams(4, 0.2, 1.0, 1.0)
    a = ex.convergence_in_g(base, [0.5, 1.0, 2.0])
    b = ex.convergence_in_g(base, [0.5, 1.0, 2.0])
    c = ex.convergence_in_g(base, [2.0, 1.0, 0.5], workers=2)
    assert a.to_json() == b.to_json() == c.to_json()


def test_phase_transition_small():
    grid = np.arange(0.3, 0.9001, 0.01)
    res = ex.phase_transition_scan(1.0, 1.0, grid, [4, 6])
    assert res.experiment == "phase_transition"
    assert all(0.3 < v < 0.9 for v in res.metric("lambda_star"))
    assert res.metric("lambda_c")[0] == 0.5
    assert len(res.table) == 2 * grid.size
    assert all(p.audit.passed for p in res.points)


def test_phase_transition_grid_validation():
    with pytest.raises(ValidationError):
        ex.phase_transition_scan(1.0, 1.0, [0.1, 0.2, 0.3], [4])
    with pytest.raises(ValidationError):
        ex.phase_transition_scan(1.0, 1.0, np.linspace(0.05, 0.15, 11), [4])


def test_deficit_sweep_along_g():
    coeffs = {(0, 0): 2**-0.5, (0, 1): 2**-0.5}
    res = ex.deficit_sweep(ModelParams(4, 0.2, 1.0, 1.0), "g", [0.5, 1.0, 2.0, 4.0], coeffs,
                           steps=33)
    d = res.metric("deficit")
    assert np.all(np.diff(d) < 0)
    assert all(p.audit.passed for p in res.points)
    with pytest.raises(ValidationError):
        ex.deficit_sweep(ModelParams(4, 0.2, 1.0, 1.0), "delta", [0.1], coeffs)


def test_deficit_sweep_along_n():
    coeffs = {(0, 0): 2**-0.5, (0, 1): 2**-0.5}
    res = ex.deficit_sweep(ModelParams(4, 0.2, 1.0, 1.0), "N", [4, 8, 16, 32], coeffs, steps=33)
    assert np.all(np.diff(res.metric("deficit")) < 0)
    assert all(p.audit.passed for p in res.points)


def test_deficit_at_delta_zero():
    p = ModelParams(4, 0.0, 1.0, 1.0)
    grid = ex.TimeGrid(0, 6, 7)
    for coeffs in ({(0, 0): 0.6, (0, 3): 0.8}, {(1, 0): 0.6, (1, 2): 0.8}):
        assert ex.dynamics_deficit(p, coeffs, grid) < 1e-12
    # across c-sectors the omitted -4 g^2 m^2 / omega term dephases the components
    assert ex.dynamics_deficit(p, {(0, 0): 0.6, (1, 2): 0.8}, grid) > 0.1
