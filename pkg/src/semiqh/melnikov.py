"""First-order Melnikov analysis around the Hamiltonian  x' = y^r1, y' = -x^r2.

For the perturbation  x' = y^r1 + eps * sum_i a_i x^(iq) y^(r1-ip),
y' = -x^r2 + eps * sum_j b_j x^(r2-jq) y^(jp)  the Abelian integral over
the level curve H = rho^(2 l1 l2) is

    I(rho) = sum_i mu_i rho^(i d + 2 l1 l2) + sum_j nu_j rho^(-j d + 2 l1 l2),

d = (m - n)/2, taken along the flow. Only odd i, j contribute. Dividing out
a power of rho leaves a polynomial F in xi = rho^|m - n| whose simple
positive zeros are the limit cycles born at first order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .lyaptrig import MomentTable, TrigParams, moment_table
from .phaseflow import DEFAULT, FlowConfig, VectorField, find_limit_cycles
from .qhalg import NormalForm, ParityCase, QHError


class InsufficientSlots(ValueError):
    pass


class IllConditioned(ValueError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


def hamiltonian_level(x, y, l1: int, l2: int):
    return l1 * x ** (2 * l2) + l2 * y ** (2 * l1)


def _slots(r1: int, r2: int, p: int, q: int) -> tuple[int, int]:
    return (r1 // p + 1) // 2, (r2 // q + 1) // 2


def lower_bound(p: int, q: int, m: int, n: int) -> int:
    """[([r1/p]+1)/2] + [([r2/q]+1)/2] - 1 for systems in the both-odd case."""
    if m == n:
        raise QHError("m = n is outside the semi-quasi-homogeneous class")
    if math.gcd(p, q) != 1 or p % 2 == 0 or q % 2 == 0:
        raise QHError(f"need p, q odd and coprime, got ({p}, {q})")
    if (p + m - 1) % q or (q + n - 1) % p:
        raise QHError("divisibility fails: no periodic orbits")
    r1, r2 = (p + m - 1) // q, (q + n - 1) // p
    if not all(v % 2 for v in (m, n, r1, r2)):
        raise QHError("m, n, r1, r2 must all be odd")
    k1, k2 = _slots(r1, r2, p, q)
    return k1 + k2 - 1


@dataclass(frozen=True)
class PerturbationSpec:
    """Perturbation coefficients; ``a[k]`` multiplies index i = k + 1."""

    a: tuple[float, ...]
    b: tuple[float, ...]
    epsilon: float = 1e-3

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    def check(self, nf: NormalForm) -> None:
        if len(self.a) != nf.r1 // nf.p or len(self.b) != nf.r2 // nf.q:
            raise ValueError(f"need {nf.r1 // nf.p} a-coefficients and {nf.r2 // nf.q} b-coefficients, "
                             f"got {len(self.a)} and {len(self.b)}")

    def to_json(self) -> dict:
        return {"a": list(self.a), "b": list(self.b), "epsilon": self.epsilon}


def _check_both_odd(nf: NormalForm) -> TrigParams:
    if nf.parity_case is not ParityCase.BOTH_ODD:
        raise QHError("the Abelian-integral machinery needs the both-odd parity case")
    if nf.m == nf.n:
        raise QHError("m = n")
    l1, l2 = nf.l1, nf.l2
    # exponent identity behind the closed form
    if 2 * (l1 * nf.q - l2 * nf.p) != nf.m - nf.n:
        raise QHError("l1 q - l2 p != (m - n)/2")  # pragma: no cover
    return TrigParams(l1, l2)


def _mu_moment(i, nf, mt):
    return mt(nf.r1 - i * nf.p, i * nf.q + 2 * nf.l2 - 1)


def _nu_moment(j, nf, mt):
    return mt(j * nf.p + 2 * nf.l1 - 1, nf.r2 - j * nf.q)


@dataclass(frozen=True)
class AbelianForm:
    """mu[k], nu[k] belong to indices k + 1; F is stored low degree first."""

    mu: tuple[float, ...]
    nu: tuple[float, ...]
    exponent_step: Fraction
    base_power: int
    F: tuple[float, ...]
    k1: int
    k2: int

    @property
    def xi_power(self) -> int:
        """rho^xi_power = xi."""
        return abs(int(2 * self.exponent_step))

    def integral(self, rho):
        """Closed-form I(rho)."""
        d = float(self.exponent_step)
        total = 0.0
        for k, v in enumerate(self.mu, start=1):
            if v:
                total = total + v * rho ** (k * d + self.base_power)
        for k, v in enumerate(self.nu, start=1):
            if v:
                total = total + v * rho ** (-k * d + self.base_power)
        return total

    def to_json(self) -> dict:
        return {"mu": list(self.mu), "nu": list(self.nu), "exponent_step": str(self.exponent_step),
                "base_power": self.base_power, "F_coeffs": list(self.F)}


def _assemble_F(mu, nu, k1, k2, m_gt_n: bool) -> tuple[float, ...]:
    F = [0.0] * (k1 + k2)
    if m_gt_n:
        for j in range(1, k2 + 1):
            F[k2 - j] = nu[2 * j - 2]
        for i in range(1, k1 + 1):
            F[i + k2 - 1] = mu[2 * i - 2]
    else:
        for i in range(1, k1 + 1):
            F[k1 - i] = mu[2 * i - 2]
        for j in range(1, k2 + 1):
            F[j + k1 - 1] = nu[2 * j - 2]
    return tuple(F)


def abelian_coefficients(nf: NormalForm, pert: PerturbationSpec,
                         mt: MomentTable | None = None) -> AbelianForm:
    t = _check_both_odd(nf)
    pert.check(nf)
    mt = mt or moment_table(t)
    if mt.params != t:
        raise ValueError(f"moment table is for {mt.params}, need {t}")
    mu = tuple(a * _mu_moment(i, nf, mt) if i % 2 else 0.0 for i, a in enumerate(pert.a, start=1))
    nu = tuple(b * _nu_moment(j, nf, mt) if j % 2 else 0.0 for j, b in enumerate(pert.b, start=1))
    k1, k2 = _slots(nf.r1, nf.r2, nf.p, nf.q)
    F = _assemble_F(mu, nu, k1, k2, nf.m > nf.n)
    return AbelianForm(mu, nu, Fraction(nf.m - nf.n, 2), 2 * t.l1 * t.l2, F, k1, k2)


@dataclass(frozen=True)
class Zero:
    xi: float
    rho: float
    simple: bool


@dataclass
class CycleReport:
    zero_count: int
    zeros: tuple[Zero, ...]
    lower_bound: int | None = None
    confirmed: list = field(default_factory=list)
    F: tuple[float, ...] = ()
    degenerate: bool = False

    def to_json(self) -> dict:
        return {
            "lower_bound": self.lower_bound,
            "F_coeffs": list(self.F),
            "zero_count": self.zero_count,
            "degenerate": self.degenerate,
            "zeros": [{"xi": z.xi, "rho": z.rho, "simple": z.simple} for z in self.zeros],
            "confirmed": list(self.confirmed),
        }


BOUND_CAP = 1e40  # roots beyond this xi are not searched


def _polyval(c, x):
    return np.polynomial.polynomial.polyval(x, c)


def _positive_roots(c: list[float], tol: float) -> list[tuple[float, bool]]:
    """Positive roots of sum c_k x^k, isolated through the roots of the derivative.

    Between consecutive critical points the polynomial is monotone, so each
    sign change brackets exactly one root. A critical point where |F| <= tol
    is a multiple root unless F changes sign on both sides of it.
    """
    while c and c[-1] == 0.0:
        c = c[:-1]
    if len(c) <= 1:
        return []
    lead = abs(c[-1])
    # Cauchy bound, capped so that evaluation cannot overflow
    bound = min(1.0 + max(abs(v) for v in c[:-1]) / lead, BOUND_CAP)
    if len(c) == 2:
        crit = []
    else:
        dc = [k * c[k] for k in range(1, len(c))]
        crit = [r for r, _ in _positive_roots(dc, tol * len(c))]
    knots = [0.0] + [x for x in crit if 0 < x < bound] + [bound]
    vals = [_polyval(c, x) for x in knots]
    out: list[tuple[float, bool]] = []
    multiple = set()
    for k in range(1, len(knots) - 1):
        fx = vals[k]
        if abs(fx) > tol:
            continue
        # a dip through zero between two same-signed neighbours is a root
        # pair; leave it to bracketing so the closeness check can see it
        if fx != 0.0 and vals[k - 1] * fx < 0 and vals[k + 1] * fx < 0:
            continue
        multiple.add(k)
        out.append((knots[k], False))
    for k in range(len(knots) - 1):
        if k in multiple or k + 1 in multiple:
            continue
        lo, hi = knots[k], knots[k + 1]
        if vals[k] * vals[k + 1] < 0:
            r = brentq(lambda x: _polyval(c, x), lo, hi, xtol=1e-15 * max(hi, 1.0), rtol=1e-15)
            out.append((r, True))
    return sorted(out)


def count_positive_simple_zeros(af: AbelianForm | Sequence[float], xi_power: int | None = None,
                                lower: int | None = None) -> CycleReport:
    """Positive zeros of F with simplicity flags; rho = xi^(1/xi_power).

    Accepts an ``AbelianForm`` or raw ascending coefficients. An identically
    zero F yields a report with ``degenerate=True``.
    """
    if isinstance(af, AbelianForm):
        coeffs = list(af.F)
        xi_power = af.xi_power
        lower = af.k1 + af.k2 - 1 if lower is None else lower
    else:
        coeffs = [float(v) for v in af]
        xi_power = xi_power or 1
    norm = sum(abs(v) for v in coeffs)
    if norm == 0.0:
        return CycleReport(0, (), lower, F=tuple(coeffs), degenerate=True)
    tol = 1e-12 * norm
    roots = _positive_roots(coeffs, tol)
    zeros = []
    for x, simple in roots:
        if simple:
            deriv = sum(k * coeffs[k] * x ** (k - 1) for k in range(1, len(coeffs)))
            scale = sum(k * abs(coeffs[k]) * x ** (k - 1) for k in range(1, len(coeffs)))
            simple = abs(deriv) > 1e-8 * scale
        zeros.append(Zero(float(x), float(x ** (1.0 / xi_power)), simple))
    report = CycleReport(sum(z.simple for z in zeros), tuple(zeros), lower, F=tuple(coeffs))
    for z1, z2 in zip(zeros, zeros[1:]):
        if z2.xi - z1.xi <= 1e-8 * z2.xi:
            raise IllConditioned(f"roots {z1.xi!r} and {z2.xi!r} are closer than 1e-8 relative", report)
    return report


def design_perturbation(nf: NormalForm, target_radii: Sequence[float],
                        mt: MomentTable | None = None, epsilon: float = 1e-3) -> PerturbationSpec:
    """Perturbation whose F has simple zeros exactly at xi = radius^|m-n|.

    The monic polynomial with those roots is matched slot by slot (so the
    leading surviving coefficient is 1) and divided by the moments.
    """
    t = _check_both_odd(nf)
    mt = mt or moment_table(t)
    radii = [float(r) for r in target_radii]
    if any(not r > 0 for r in radii):
        raise ValueError("radii must be positive")
    if len(set(radii)) != len(radii):
        raise ValueError("radii must be distinct")
    k1, k2 = _slots(nf.r1, nf.r2, nf.p, nf.q)
    if len(radii) > k1 + k2 - 1:
        raise InsufficientSlots(f"{len(radii)} radii requested but only {k1 + k2 - 1} can be placed")
    step = abs(nf.m - nf.n)
    poly = np.polynomial.polynomial.polyfromroots([r ** step for r in radii]) if radii else np.array([])
    a = [0.0] * (nf.r1 // nf.p)
    b = [0.0] * (nf.r2 // nf.q)
    for power, c in enumerate(poly):
        if nf.m > nf.n:
            if power < k2:
                j = k2 - power
                b[2 * j - 2] = c / _nu_moment(2 * j - 1, nf, mt)
            else:
                i = power - k2 + 1
                a[2 * i - 2] = c / _mu_moment(2 * i - 1, nf, mt)
        else:
            if power < k1:
                i = k1 - power
                a[2 * i - 2] = c / _mu_moment(2 * i - 1, nf, mt)
            else:
                j = power - k1 + 1
                b[2 * j - 2] = c / _nu_moment(2 * j - 1, nf, mt)
    return PerturbationSpec(tuple(float(v) for v in a), tuple(float(v) for v in b), epsilon)


def divergence_integral(i: int, nf: NormalForm, mt: MomentTable | None = None) -> float:
    """Integral of div(-x^(iq) y^(r1-ip), 0) over the unit disc of H."""
    t = _check_both_odd(nf)
    if i % 2 == 0:
        raise ValueError("the divergence integral vanishes for even i")
    if not 1 <= i <= nf.r1 // nf.p:
        raise ValueError(f"i must lie in 1..{nf.r1 // nf.p}")
    mt = mt or moment_table(t)
    return -_mu_moment(i, nf, mt)


def hamiltonian_field(nf: NormalForm) -> VectorField:
    """x' = y^r1, y' = -x^r2 for the normal form's (r1, r2)."""
    return VectorField(((1.0, 0, nf.r1),), ((-1.0, nf.r2, 0),), level=(nf.l1, nf.l2), label="hamiltonian")


def perturbed_field(nf: NormalForm, pert: PerturbationSpec) -> VectorField:
    pert.check(nf)
    eps = pert.epsilon
    P = [(1.0, 0, nf.r1)] + [(eps * a, i * nf.q, nf.r1 - i * nf.p)
                             for i, a in enumerate(pert.a, start=1) if a]
    Q = [(-1.0, nf.r2, 0)] + [(eps * b, nf.r2 - j * nf.q, j * nf.p)
                              for j, b in enumerate(pert.b, start=1) if b]
    return VectorField(tuple(P), tuple(Q), level=(nf.l1, nf.l2), label="perturbed")


def section_point(rho: float, l1: int, l2: int) -> float:
    """x-coordinate where the level curve of radius rho meets y = 0, x > 0."""
    return rho ** l1 * l1 ** (-1.0 / (2 * l2))


def confirm_cycles(report: CycleReport, nf: NormalForm, pert: PerturbationSpec,
                   rel_tol: float = 0.1, grid: int = 24, cfg: FlowConfig = DEFAULT):
    """Search the perturbed flow for the predicted cycles.

    Fills ``report.confirmed`` with one record per predicted simple zero and
    returns ``(all_matched, search)``; extra cycles found in the window are
    kept in ``search`` for the caller to judge.
    """
    predicted = [z.rho for z in report.zeros if z.simple]
    if not predicted:
        return True, None
    lo, hi = 0.5 * min(predicted), 1.5 * max(predicted)
    search = find_limit_cycles(perturbed_field(nf, pert), section_point(lo, nf.l1, nf.l2),
                               section_point(hi, nf.l1, nf.l2), grid, cfg)
    report.confirmed = []
    ok = True
    for rho in predicted:
        best = min(search.cycles, key=lambda c: abs(c.rho_equiv - rho), default=None)
        hit = best is not None and abs(best.rho_equiv - rho) <= rel_tol * rho
        ok &= hit
        report.confirmed.append({
            "rho_predicted": rho,
            "rho_found": best.rho_equiv if best else None,
            "x_section": best.x_fixed if best else None,
            "residual": best.residual if best else None,
            "stability": best.stability if best else None,
            "matched": hit,
        })
    return ok, search
