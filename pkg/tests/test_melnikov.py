import math
import random
from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import semiqh.melnikov as M
from oracles import beta_moment, both_odd_nf, line_integral
from semiqh.lyaptrig import TrigParams, cs_sn
from semiqh.qhalg import NormalForm, ParityCase, QHError

NF31 = both_odd_nf(3, 1)
# Beta-function moments for (l1, l2) = (2, 1), frozen from tests/oracles.py
M22 = beta_moment(2, 2, 2, 1)   # mu_1 weight: Sn^2 Cs^2
M04 = beta_moment(0, 4, 2, 1)   # mu_3 weight: Cs^4
M40 = beta_moment(4, 0, 2, 1)   # nu_1 weight: Sn^4


def test_hamiltonian_level_examples():
    assert M.hamiltonian_level(1, 0, 1, 1) == 1
    assert M.hamiltonian_level(0, 1, 2, 1) == 1


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([(1, 1), (2, 1), (2, 3), (3, 2)]), st.floats(0.2, 3), st.floats(0, 20))
def test_level_set_identity(lp, rho, phi):
    l1, l2 = lp
    c, s = cs_sn(phi, TrigParams(l1, l2))
    h = M.hamiltonian_level(rho**l1 * c, rho**l2 * s, l1, l2)
    assert h == pytest.approx(rho ** (2 * l1 * l2), rel=1e-9)


def test_lower_bound_examples():
    assert M.lower_bound(1, 1, 3, 1) == 2
    with pytest.raises(QHError):
        M.lower_bound(1, 1, 1, 1)


@pytest.mark.parametrize("bad", [(1, 1, 2, 1), (1, 2, 3, 1), (3, 1, 2, 3)])
def test_lower_bound_rejects(bad):
    with pytest.raises(QHError):
        M.lower_bound(*bad)


def test_abelian_surviving_slots():
    pert = M.PerturbationSpec((0.3, -0.7, 1.1), (0.9,))
    af = M.abelian_coefficients(NF31, pert)
    assert af.mu[1] == 0.0
    assert af.mu[0] == pytest.approx(0.3 * M22, rel=1e-9)
    assert af.mu[2] == pytest.approx(1.1 * M04, rel=1e-9)
    assert af.nu[0] == pytest.approx(0.9 * M40, rel=1e-9)
    assert af.F == pytest.approx((af.nu[0], af.mu[0], af.mu[2]))
    assert af.base_power == 4 and af.exponent_step == 1 and af.xi_power == 2


def test_abelian_even_only_is_degenerate():
    af = M.abelian_coefficients(NF31, M.PerturbationSpec((0.0, 5.0, 0.0), (0.0,)))
    assert all(v == 0.0 for v in af.F)
    assert M.count_positive_simple_zeros(af).degenerate


def test_abelian_roots_one_and_two():
    # choose abar so that mu_3 = 1, mu_1 = -5, nu_1 = 4
    pert = M.PerturbationSpec((-5 / M22, 0.0, 1 / M04), (4 / M40,))
    af = M.abelian_coefficients(NF31, pert)
    assert af.F == pytest.approx((4.0, -5.0, 1.0), rel=1e-9)
    rep = M.count_positive_simple_zeros(af)
    assert [z.xi for z in rep.zeros] == pytest.approx([1.0, 4.0], rel=1e-10)
    assert [z.rho for z in rep.zeros] == pytest.approx([1.0, 2.0], rel=1e-10)


def test_abelian_rejects_q_even():
    nf = NormalForm(1, 2, 2, 4, 1, 5, (Fr(1), Fr(1)), (Fr(-1), Fr(1), Fr(0)), ParityCase.Q_EVEN)
    with pytest.raises(QHError):
        M.abelian_coefficients(nf, M.PerturbationSpec((0.0,), (0.0, 0.0, 0.0, 0.0, 0.0)))


def test_perturbation_shape_checked():
    with pytest.raises(ValueError):
        M.abelian_coefficients(NF31, M.PerturbationSpec((1.0,), (1.0,)))
    with pytest.raises(ValueError):
        M.PerturbationSpec((1.0,), (), epsilon=0.0)


@pytest.mark.parametrize("coeffs, xis, simple", [
    ([4, -5, 1], [1.0, 4.0], [True, True]),
    ([1, 1], [], []),
    ([1, -2, 1], [1.0], [False]),
    ([-6, 11, -6, 1], [1.0, 2.0, 3.0], [True, True, True]),
    ([0, -1, 1], [1.0], [True]),
])
def test_count_examples(coeffs, xis, simple):
    rep = M.count_positive_simple_zeros(coeffs)
    assert [z.xi for z in rep.zeros] == pytest.approx(xis, rel=1e-12)
    assert [z.simple for z in rep.zeros] == simple
    assert rep.zero_count == sum(simple)


def test_count_residual_certified():
    c = list(np.polynomial.polynomial.polyfromroots([0.3, 1.7, 5.0, 11.0]))
    rep = M.count_positive_simple_zeros(c)
    norm = sum(abs(v) for v in c)
    for z in rep.zeros:
        assert abs(np.polynomial.polynomial.polyval(z.xi, c)) <= 1e-12 * norm


def test_close_roots_raise(monkeypatch):
    monkeypatch.setattr(M, "_positive_roots", lambda c, tol: [(1.0, True), (1.0 + 5e-9, True)])
    with pytest.raises(M.IllConditioned) as info:
        M.count_positive_simple_zeros([1.0, -2.0, 1.0])
    assert len(info.value.report.zeros) == 2


def test_design_examples():
    pert = M.design_perturbation(NF31, (1, 2))
    assert pert.a[1] == 0.0
    ratios = (pert.a[2] * M04, pert.a[0] * M22, pert.b[0] * M40)
    assert ratios == pytest.approx((1.0, -5.0, 4.0), rel=1e-9)
    rep = M.count_positive_simple_zeros(M.abelian_coefficients(NF31, pert))
    assert [z.rho for z in rep.zeros] == pytest.approx([1.0, 2.0], rel=1e-8)


def test_design_empty_and_single():
    pert = M.design_perturbation(NF31, ())
    assert pert.a == (0.0, 0.0, 0.0) and pert.b == (0.0,)
    assert M.count_positive_simple_zeros(M.abelian_coefficients(NF31, pert)).degenerate
    pert = M.design_perturbation(NF31, (1.5,))
    rep = M.count_positive_simple_zeros(M.abelian_coefficients(NF31, pert))
    assert rep.zero_count == 1 and rep.zeros[0].rho == pytest.approx(1.5, rel=1e-10)


def test_design_insufficient_slots():
    with pytest.raises(M.InsufficientSlots):
        M.design_perturbation(NF31, (1, 2, 3))


def test_design_rejects_bad_radii():
    with pytest.raises(ValueError):
        M.design_perturbation(NF31, (1, 1))
    with pytest.raises(ValueError):
        M.design_perturbation(NF31, (-1,))


SHAPES = [(3, 1), (5, 1), (5, 3), (7, 3), (1, 3), (1, 5), (3, 5)]


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(SHAPES), st.data())
def test_design_round_trip(shape, data):
    nf = both_odd_nf(*shape)
    cap = M.lower_bound(1, 1, *shape)
    k = data.draw(st.integers(0, cap))
    radii = sorted(data.draw(st.lists(st.floats(0.3, 3.0), min_size=k, max_size=k, unique=True)))
    if any(b / a < 1.05 for a, b in zip(radii, radii[1:])):
        return
    rep = M.count_positive_simple_zeros(M.abelian_coefficients(nf, M.design_perturbation(nf, radii)))
    if not radii:
        assert rep.degenerate
        return
    assert [z.rho for z in rep.zeros] == pytest.approx(radii, rel=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(SHAPES), st.data())
def test_degree_and_parity(shape, data):
    nf = both_odd_nf(*shape)
    coef = st.floats(-2, 2, allow_nan=False)
    a = tuple(data.draw(coef) for _ in range(nf.r1))
    b = tuple(data.draw(coef) for _ in range(nf.r2))
    af = M.abelian_coefficients(nf, M.PerturbationSpec(a, b))
    assert len(af.F) - 1 <= M.lower_bound(1, 1, *shape)
    assert all(v == 0.0 for v in af.mu[1::2]) and all(v == 0.0 for v in af.nu[1::2])


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(SHAPES), st.floats(0.1, 50), st.data())
def test_scaling_invariance(shape, c, data):
    nf = both_odd_nf(*shape)
    coef = st.floats(-2, 2).filter(lambda v: v == 0 or abs(v) > 1e-6)
    a = tuple(data.draw(coef) for _ in range(nf.r1))
    b = tuple(data.draw(coef) for _ in range(nf.r2))
    af1 = M.abelian_coefficients(nf, M.PerturbationSpec(a, b))
    af2 = M.abelian_coefficients(nf, M.PerturbationSpec(tuple(c * v for v in a), tuple(c * v for v in b)))
    assert af2.F == pytest.approx(tuple(c * v for v in af1.F), rel=1e-12, abs=1e-300)
    try:
        r1 = M.count_positive_simple_zeros(af1)
        r2 = M.count_positive_simple_zeros(af2)
    except M.IllConditioned:
        return
    assert r1.zero_count == r2.zero_count
    assert [z.rho for z in r1.zeros] == pytest.approx([z.rho for z in r2.zeros], rel=1e-9)


def test_branch_symmetry():
    """Swapping the roles of x and y maps (r1, r2) to (r2, r1) and mu to nu."""
    a, b = (0.4, 0.0, -1.3), (0.8,)
    af = M.abelian_coefficients(both_odd_nf(3, 1), M.PerturbationSpec(a, b))
    # x' = y, y' = -x^3 is the mirror of x' = y^3, y' = -x after x <-> y and time reversal
    mirror = M.abelian_coefficients(both_odd_nf(1, 3), M.PerturbationSpec(b, a))
    assert mirror.exponent_step == -af.exponent_step
    assert sorted(np.abs(mirror.F)) == pytest.approx(sorted(np.abs(af.F)), rel=1e-9)
    r1 = [z.rho for z in M.count_positive_simple_zeros(af).zeros]
    r2 = [z.rho for z in M.count_positive_simple_zeros(mirror).zeros]
    assert len(r1) == len(r2)


@pytest.mark.parametrize("shape", [(3, 1), (1, 3), (5, 3)])
def test_closed_form_matches_line_integral(shape):
    rng = random.Random(7)
    nf = both_odd_nf(*shape)
    a = [rng.uniform(-1, 1) for _ in range(nf.r1)]
    b = [rng.uniform(-1, 1) for _ in range(nf.r2)]
    af = M.abelian_coefficients(nf, M.PerturbationSpec(tuple(a), tuple(b)))
    for rho in (0.5, 1.0, 2.0):
        assert af.integral(rho) == pytest.approx(line_integral(nf, a, b, rho), rel=1e-6)


def test_divergence_integral_examples():
    assert M.divergence_integral(1, NF31) == pytest.approx(-M22, rel=1e-9)
    assert M.divergence_integral(3, NF31) == pytest.approx(-M04, rel=1e-9)
    assert M.divergence_integral(1, NF31) < 0
    with pytest.raises(ValueError):
        M.divergence_integral(2, NF31)
    with pytest.raises(ValueError):
        M.divergence_integral(5, NF31)


def test_section_point_lies_on_level():
    for rho in (0.5, 1.0, 2.0):
        x = M.section_point(rho, 2, 1)
        assert M.hamiltonian_level(x, 0.0, 2, 1) == pytest.approx(rho**4, rel=1e-14)


def test_report_json_shape():
    rep = M.count_positive_simple_zeros([4, -5, 1], xi_power=2, lower=2)
    js = rep.to_json()
    assert set(js) >= {"lower_bound", "F_coeffs", "zeros"}
    assert js["zeros"][1]["rho"] == pytest.approx(2.0)
    assert math.isclose(js["zeros"][1]["xi"], 4.0)
