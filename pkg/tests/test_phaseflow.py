import math
import random
from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import semiqh.phaseflow as F
from oracles import both_odd_nf, random_rational
from semiqh.melnikov import (design_perturbation, hamiltonian_field, hamiltonian_level,
                             perturbed_field, section_point)
from semiqh.qhalg import NormalForm, ParityCase, QHPolynomial, coprime

NF31 = both_odd_nf(3, 1)
HAM = hamiltonian_field(NF31)              # x' = y^3, y' = -x
HARMONIC = F.VectorField(((1.0, 0, 1),), ((-1.0, 1, 0),))
SADDLE = F.VectorField(((1.0, 1, 0),), ((-1.0, 0, 3),))


def designed_field():
    return perturbed_field(NF31, design_perturbation(NF31, (1, 2), epsilon=1e-3))


def test_harmonic_oscillator_closes():
    tr = F.integrate(HARMONIC, 1.0, 0.0, 2 * math.pi)
    assert tr.xy[-1] == pytest.approx([1.0, 0.0], abs=1e-8)
    assert tr.tolerances == (1e-12, 1e-14)


def test_hamiltonian_conserved():
    tr = F.integrate(HAM, 1.0, 0.0, 30.0)
    h = hamiltonian_level(tr.xy[:, 0], tr.xy[:, 1], 2, 1)
    assert np.max(np.abs(h - 2.0)) / 2.0 <= 1e-8


def test_blowup_carries_trace():
    with pytest.raises(F.Blowup) as info:
        F.integrate(F.VectorField(((1.0, 1, 0),), ((1.0, 0, 1),)), 1e-3, 0.0, 100.0)
    last = info.value.trace.xy[-1]
    assert math.hypot(*last) == pytest.approx(1e6, rel=1e-6)


def test_step_limit_guard():
    cfg = F.FlowConfig(max_evals=50)
    with pytest.raises(F.StepLimitExceeded):
        F.integrate(HARMONIC, 1.0, 0.0, 100.0, cfg=cfg)


def test_integrate_rejects_bad_input():
    with pytest.raises(ValueError):
        F.integrate(HARMONIC, math.nan, 0.0, 1.0)
    with pytest.raises(ValueError):
        F.integrate(HARMONIC, 1.0, 0.0, 1.0, tol=(1e-14, 1e-14))


def test_section_events_are_polished():
    tr = F.integrate(HAM, 1.0, 0.0, 40.0)
    assert len(tr.events) >= 3
    assert all(abs(y) <= 1e-10 and x > 0 for _, x, y in tr.events)


@pytest.mark.parametrize("x_in", [0.5, 1.0, 2.0])
def test_hamiltonian_return_is_identity(x_in):
    s = F.return_map(HAM, x_in)
    assert abs(s.displacement) <= 1e-8 and s.turns == 1 and s.monotone


def test_return_period_matches_scaling():
    # the orbit at radius rho takes T * rho^(l1 + l2 - 2 l1 l2) = T / rho
    from semiqh.lyaptrig import TrigParams, period
    T = period(TrigParams(2, 1))
    for rho in (0.5, 2.0):
        s = F.return_map(HAM, section_point(rho, 2, 1))
        assert s.period == pytest.approx(T / rho, rel=1e-8)


def test_designed_sign_changes():
    vf = designed_field()
    ds = [F.return_map(vf, section_point(r, 2, 1)).displacement for r in (0.8, 1.4, 2.5)]
    assert ds[0] * ds[1] < 0 and ds[1] * ds[2] < 0


def test_saddle_no_return():
    with pytest.raises(F.NoReturn):
        F.return_map(SADDLE, 0.1)


def test_return_map_rejects_nonpositive():
    with pytest.raises(ValueError):
        F.return_map(HAM, -1.0)


def test_find_limit_cycles_designed():
    res = F.find_limit_cycles(designed_field(), section_point(0.5, 2, 1), section_point(3, 2, 1))
    rhos = [c.rho_equiv for c in res]
    assert len(rhos) == 2
    assert 0.9 <= rhos[0] <= 1.1 and 1.8 <= rhos[1] <= 2.2
    assert [c.stability for c in res] == ["Attracting", "Repelling"]
    for c in res:
        assert c.residual <= 1e-10 * c.x_fixed
        assert c.rho_equiv == pytest.approx(hamiltonian_level(c.x_fixed, 0.0, 2, 1) ** 0.25, rel=1e-8)


def test_find_limit_cycles_hamiltonian_empty():
    res = F.find_limit_cycles(HAM, 0.3, 3.0, grid=8)
    assert len(res) == 0 and res.skipped == 0
    assert all(abs(d) <= 1e-8 for _, d in res.samples)


def test_find_limit_cycles_b0_zero_family():
    # x' = y^3 + x^3, y' = y keeps y = 0 invariant
    vf = F.VectorField(((1.0, 0, 3), (1.0, 3, 0)), ((1.0, 0, 1),))
    res = F.find_limit_cycles(vf, 0.1, 1.0, grid=8)
    assert len(res) == 0 and res.skipped == 8


def test_find_limit_cycles_validates():
    with pytest.raises(ValueError):
        F.find_limit_cycles(HAM, 2.0, 1.0)
    with pytest.raises(ValueError):
        F.find_limit_cycles(HAM, 1.0, 2.0, grid=4)


def test_detect_center_cases():
    center = F.VectorField(((-1.0, 0, 3), (0.5, 2, 1)), ((1.0, 1, 0),))
    assert F.detect_center(center, 0.05, 0.2, samples=4)
    focus = F.VectorField(((-1.0, 0, 3), (0.1, 1, 2), (0.5, 2, 1)), ((1.0, 1, 0),))
    scan = F.center_scan(focus, 0.05, 0.2, samples=4)
    assert scan.max_rel > 1e-8 and scan.sign != 0
    inf_center = F.VectorField(((-1.0, 0, 5),), ((1.0, 3, 0), (0.5, 1, 2)))
    assert F.detect_center(inf_center, 10, 20, samples=4, tol=1e-6)


def test_energy_drift_ten_revolutions():
    for rho in (0.5, 1.0, 2.0):
        x0 = section_point(rho, 2, 1)
        T = F.return_map(HAM, x0).period
        tr = F.integrate(HAM, x0, 0.0, 10 * T)
        h0 = rho**4
        assert abs(hamiltonian_level(*tr.xy[-1], 2, 1) - h0) / h0 <= 1e-8


def test_linear_focus_rotates_monotonically():
    vf = F.VectorField(((1.0, 0, 1), (-0.9, 1, 0)), ((-1.0, 1, 0),))
    s = F.return_map(vf, 1.0)
    assert s.monotone and 0 < s.x_out < 1.0


@settings(max_examples=15, deadline=None)
@given(st.floats(0.3, 2.0), st.floats(0.5, 5.0))
def test_reversibility(x0, t):
    vf = designed_field()
    fwd = F.integrate(vf, x0, 0.0, t)
    xe, ye = fwd.xy[-1]
    back = F.integrate(vf, xe, ye, -t)
    assert np.allclose(back.xy[-1], [x0, 0.0], rtol=1e-7, atol=1e-7 * x0)


def _random_normal_form(rng):
    while True:
        r1, r2 = rng.choice([(3, 1), (5, 1), (5, 3), (1, 3), (3, 5)])
        a = tuple(random_rational(rng) for _ in range(r1 + 1))
        b = tuple(random_rational(rng) for _ in range(r2 + 1))
        nf = NormalForm(1, 1, r1, r2, r1, r2, a, b, ParityCase.BOTH_ODD)
        P, Q = nf.expand()
        if P and Q and coprime(P, Q):
            return P, Q


def test_unique_finite_singular_point():
    rng = random.Random(11)
    g = np.linspace(-2, 2, 401)
    X, Y = np.meshgrid(g, g)
    mask = np.hypot(X, Y) >= 0.5
    for _ in range(20):
        P, Q = _random_normal_form(rng)
        vf = F.VectorField.from_polynomials(P, Q)
        pv, qv = vf.rate(X, Y)
        assert np.min((np.abs(pv) + np.abs(qv))[mask]) > 1e-6


def test_export_portrait_csv_closes(tmp_path):
    tr = F.orbit(HAM, 1.0)
    path = tmp_path / "p.csv"
    F.export_portrait([tr], path)
    rows = path.read_text().splitlines()
    assert rows[0] == "t,x,y,trace_id"
    first = [float(v) for v in rows[1].split(",")[1:3]]
    last = [float(v) for v in rows[-1].split(",")[1:3]]
    assert first == pytest.approx(last, abs=1e-6)
    # 17 significant digits round-trip every double
    mid = rows[len(rows) // 2].split(",")
    k = len(rows) // 2 - 1
    assert float(mid[1]) == tr.xy[k, 0] and float(mid[2]) == tr.xy[k, 1]


def test_export_portrait_rejects_empty(tmp_path):
    with pytest.raises(ValueError):
        F.export_portrait([], tmp_path / "p.csv")


def test_export_portrait_svg_two_cycles(tmp_path):
    vf = designed_field()
    res = F.find_limit_cycles(vf, section_point(0.5, 2, 1), section_point(3, 2, 1))
    cycles = [F.orbit(vf, c.x_fixed) for c in res]
    F.export_portrait([F.orbit(vf, section_point(1.5, 2, 1))], tmp_path / "p.csv",
                      svg_path=tmp_path / "p.svg", cycles=cycles)
    svg = (tmp_path / "p.svg").read_text()
    assert svg.count('class="cycle"') == 2 and svg.count('class="orbit"') == 1


def test_io_errors_surface(tmp_path):
    with pytest.raises(OSError):
        F.export_portrait([F.orbit(HAM, 1.0)], tmp_path / "missing" / "p.csv")


@pytest.mark.slow
@pytest.mark.parametrize("P, Q, kind", [
    ({(1, 0): 1}, {(0, 3): 1}, "UnstableNode"),
    ({(1, 0): 1}, {(0, 3): -1}, "TopologicalSaddle"),
    ({(0, 1): 1}, {(3, 0): -1, (1, 2): Fr(1, 2)}, "Center"),
    ({(2, 0): 1}, {(0, 1): 1}, "SaddleNode"),
])
def test_simulated_local_types(P, Q, kind):
    vf = F.VectorField.from_polynomials(QHPolynomial(P), QHPolynomial(Q))
    assert F.simulate_local_type(vf) == kind
