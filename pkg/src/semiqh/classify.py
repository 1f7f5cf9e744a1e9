"""Center/focus verdicts at the origin and at infinity, and local types of
degenerate singular points.

Verdicts carry reason codes such as ``"thm1.3.i"`` or ``"thm1.4.ii.b.2"``
so callers can assert the decision path, not only the outcome.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping, Sequence

from . import melnikov
from .lyaptrig import MomentTable, TrigParams, period
from .phaseflow import CenterScan, FlowConfig, DEFAULT, VectorField, center_scan
from .qhalg import NormalForm, NotCoprime, ParityCase, QHError, QHPolynomial, coprime


class SeriesOrderExhausted(ArithmeticError):
    pass


class LocalKind(str, enum.Enum):
    TOPOLOGICAL_SADDLE = "TopologicalSaddle"
    UNSTABLE_NODE = "UnstableNode"
    STABLE_NODE = "StableNode"
    SADDLE_NODE = "SaddleNode"
    CENTER = "Center"
    FOCUS = "Focus"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class LocalType:
    kind: LocalKind
    witness: str
    code: str
    leading_coeff: object = None
    leading_exponent: int | None = None

    def to_json(self) -> dict:
        out = {"kind": self.kind.value, "code": self.code, "witness": self.witness}
        if self.leading_exponent is not None:
            out["leading_exponent"] = self.leading_exponent
            out["leading_coeff"] = str(self.leading_coeff)
        return out


@dataclass(frozen=True)
class CenterVerdict:
    """Outcome at the origin for  x' = sum a_i x^(iq) y^(r1-ip),  y' = b0 x^r2.

    ``stability_sign`` is sign(abar_{2i-1} * I_{2i-1}) with I the (negative)
    divergence integral; +1 means the focus attracts. The expected sign of
    the return-map displacement x_out - x_in is ``displacement_sign``.
    """

    kind: str                       # "Center" | "WeakFocus" | "Undetermined"
    code: str
    kappa: int
    cyclicity: int
    reason: str | None = None       # "OddCoeffsVanish" | "Symmetry"
    order_index: int | None = None
    stability_sign: int | None = None
    producible_cycles: int | None = None
    rescaled_a: tuple = field(default=(), compare=False)

    @property
    def displacement_sign(self) -> int | None:
        return None if self.stability_sign is None else -self.stability_sign

    def to_json(self) -> dict:
        return {"kind": self.kind, "code": self.code, "reason": self.reason, "kappa": self.kappa,
                "cyclicity": self.cyclicity, "order_index": self.order_index,
                "stability_sign": self.stability_sign, "displacement_sign": self.displacement_sign,
                "producible_cycles": self.producible_cycles}


@dataclass(frozen=True)
class InfinityVerdict:
    kind: str                       # "CenterAtInfinity" | "FocusAtInfinity"
    code: str
    mu: int
    cyclicity: int
    order_index: int | None = None
    stability_sign: int | None = None
    producible_cycles: int | None = None
    orientation: int | None = None  # observed sign(displacement) * stability_sign

    def to_json(self) -> dict:
        return {"kind": self.kind, "code": self.code, "mu": self.mu, "cyclicity": self.cyclicity,
                "order_index": self.order_index, "stability_sign": self.stability_sign,
                "producible_cycles": self.producible_cycles, "orientation": self.orientation}


def _sign(v) -> int:
    return (v > 0) - (v < 0)


def _odd_threshold(k: int) -> int:
    if k <= 0:
        return 0
    return k if k % 2 else k - 1


def kappa_threshold(r1: int, p: int) -> int:
    if p % 2 == 0:
        raise ValueError(f"p = {p} must be odd")
    return _odd_threshold(r1 // p)


# -- exact rational powers ----------------------------------------------------

def _iroot(n: int, k: int) -> int | None:
    if n < 0:
        return None
    r = round(n ** (1.0 / k)) if n else 0
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand**k == n:
            return cand
    return None


def rational_power(base, exponent: Fraction):
    """base**exponent, exact when base is rational with an exact root."""
    exponent = Fraction(exponent)
    if isinstance(base, (int, Fraction)) and base > 0:
        base = Fraction(base)
        k = exponent.denominator
        num, den = _iroot(base.numerator, k), _iroot(base.denominator, k)
        if num is not None and den is not None:
            return Fraction(num, den) ** exponent.numerator
    return float(base) ** float(exponent)


def _check_origin_family(nf: NormalForm) -> None:
    if nf.parity_case is not ParityCase.BOTH_ODD:
        raise QHError("need the both-odd parity case")
    if not (nf.r1 > nf.r2 and nf.m > nf.n):
        raise QHError("need r1 > r2 and m > n")
    if any(b != 0 for b in nf.b[1:]):
        raise QHError("y' must be b0 x^r2 alone")


def rescale_origin_family(nf: NormalForm) -> tuple:
    """Coefficients after the change of variables that sends a0 -> -1, b0 -> 1.

    When a0 > 0 > b0 the reflection y -> -y is applied first; it keeps the
    odd-index coefficients and flips the even ones.
    """
    a0, b0 = nf.a0, nf.b0
    if a0 * b0 >= 0:
        raise QHError("need a0 * b0 < 0")
    a = list(nf.a)
    if a0 > 0:
        a = [c if i % 2 else -c for i, c in enumerate(a)]
        b0 = -b0
    neg_a0 = -a[0]
    out = []
    for i, c in enumerate(a):
        f1 = rational_power(neg_a0, Fraction(i * nf.p, nf.r1 + 1) - 1)
        f2 = rational_power(b0, Fraction(-i * nf.q, nf.r2 + 1))
        out.append(c * f1 * f2)
    return tuple(out)


def symmetry_center_check(nf: NormalForm) -> bool:
    """P(-x, y) == P(x, y) and Q(-x, y) == -Q(x, y), checked exactly."""
    P, Q = nf.expand()
    return P.reflect_x() == P and Q.reflect_x() == -Q


def center_at_origin(nf: NormalForm, mt: MomentTable | None = None) -> CenterVerdict:
    _check_origin_family(nf)
    kappa = kappa_threshold(nf.r1, nf.p)
    cyc = max((kappa - 1) // 2, 0)
    if nf.a0 * nf.b0 == 0:
        return CenterVerdict("Undetermined", "thm1.3.boundary", kappa, cyc)
    if nf.a0 * nf.b0 > 0:
        raise QHError("need a0 * b0 < 0")
    abar = rescale_origin_family(nf)
    for k in range(1, kappa + 1, 2):
        if abar[k] != 0:
            i = (k + 1) // 2
            div = melnikov.divergence_integral(k, nf, mt)
            return CenterVerdict("WeakFocus", "thm1.3.ii", kappa, cyc, None, i,
                                 _sign(float(abar[k]) * div), i - 1, abar)
    return CenterVerdict("Center", "thm1.3.i", kappa, cyc, "OddCoeffsVanish", rescaled_a=abar)


def origin_section_points(nf: NormalForm, count: int = 3, budget: float = 0.05) -> list[float]:
    """Section points near the origin where the lowest-order terms dominate.

    Radii are chosen in rescaled coordinates so that every perturbing term
    is at most ``budget`` relative to the leading one.
    """
    abar = rescale_origin_family(nf)
    d = (nf.m - nf.n) / 2
    rho = 1.0
    for k, c in enumerate(abar[1:], start=1):
        if c:
            rho = min(rho, (budget / abs(float(c))) ** (1.0 / (k * d)))
    l1, l2 = nf.l1, nf.l2
    beta = abs(float(nf.b0)) ** (1.0 / (nf.r2 + 1))
    x_max = melnikov.section_point(rho, l1, l2) / beta
    return [x_max * s for s in ([1.0] if count == 1 else
                                [0.5 + 0.5 * k / (count - 1) for k in range(count)])]


def normal_form_field(nf: NormalForm) -> VectorField:
    P, Q = nf.expand()
    level = (nf.l1, nf.l2) if nf.l1 and nf.l2 else None
    return VectorField.from_polynomials(P, Q, level=level)


def _revolution_time(nf: NormalForm, x: float) -> float:
    """Unperturbed revolution time through (x, 0); grows like rho^(l1+l2-2 l1 l2) as rho -> 0."""
    l1, l2 = nf.l1, nf.l2
    a0, b0 = abs(float(nf.a0)), abs(float(nf.b0))
    xbar = x * b0 ** (1.0 / (nf.r2 + 1))
    rho = melnikov.hamiltonian_level(xbar, 0.0, l1, l2) ** (1.0 / (2 * l1 * l2))
    scale = a0 ** (1.0 / (nf.r1 + 1)) * b0 ** (1.0 / (nf.r2 + 1))
    return period(TrigParams(l1, l2)) * rho ** (l1 + l2 - 2 * l1 * l2) / scale


def oracle_center(nf: NormalForm, count: int = 3, cfg: FlowConfig = DEFAULT) -> CenterScan:
    xs = origin_section_points(nf, count)
    t_need = 50 * _revolution_time(nf, xs[0])
    if t_need > cfg.t_max:
        cfg = replace(cfg, t_max=t_need)
    return center_scan(normal_form_field(nf), xs[0], xs[-1], len(xs), cfg)


# -- local types ---------------------------------------------------------------

def local_type_m1(a0, a1, b: Sequence, p: int, n: int) -> LocalType:
    """Local type of  x' = a1 x + a0 y^p,  y' = sum_j b_j x^(n/p - j) y^(jp)."""
    if p % 2 == 0 or n % p:
        raise QHError("need p odd and p | n")
    if all(isinstance(v, (int, Fraction)) for v in (a0, a1, *b)):
        a0, a1, b = Fraction(a0), Fraction(a1), [Fraction(v) for v in b]
    r2 = n // p
    if r2 % 2 == 0:
        raise QHError("n/p must be odd")
    if len(b) != r2 + 1:
        raise QHError(f"need {r2 + 1} b-coefficients")
    if a0 == 0 and a1 == 0:
        raise QHError("P vanishes identically")
    if all(v == 0 for v in b):
        raise QHError("Q vanishes identically")
    P = QHPolynomial({(1, 0): Fraction(a1), (0, p): Fraction(a0)})
    Q = QHPolynomial({(r2 - j, j * p): Fraction(v) for j, v in enumerate(b)})
    if not coprime(P, Q):
        raise NotCoprime("P1 and Qn share a factor")

    if a0 == 0:
        bn = b[-1]
        if a1 > 0 and bn > 0:
            return LocalType(LocalKind.UNSTABLE_NODE, "a0=0, a1>0, b_{n/p}>0", "thm1.4.i")
        if a1 < 0 and bn < 0:
            return LocalType(LocalKind.STABLE_NODE, "a0=0, a1<0, b_{n/p}<0", "thm1.4.i")
        return LocalType(LocalKind.TOPOLOGICAL_SADDLE, "a0=0, a1*b_{n/p}<0", "thm1.4.i")

    if a1 != 0:
        if p == 1:
            S = sum((-1) ** (n - j) * bj / (a0 ** (j - 1) * a1 ** (n - j + 1)) for j, bj in enumerate(b))
            tag, name = "thm1.4.ii.a", "S1"
        else:
            S = a1 * sum(bj * (-a0 / a1) ** (r2 - j) for j, bj in enumerate(b))
            tag, name = "thm1.4.ii.b", "S2"
        if S > 0:
            kind = LocalKind.UNSTABLE_NODE if a1 > 0 else LocalKind.STABLE_NODE
            return LocalType(kind, f"{name}={S}>0, a1={a1}", tag + ".1", S)
        if S < 0:
            return LocalType(LocalKind.TOPOLOGICAL_SADDLE, f"{name}={S}<0", tag + ".2", S)
        return LocalType(LocalKind.UNDETERMINED, f"{name}=0 is not covered", tag, S)

    if a0 * b[0] < 0 and n > p * p:
        if all(b[j] == 0 for j in range(1, r2 + 1, 2)):
            return LocalType(LocalKind.CENTER, "a1=0, odd b_j vanish", "thm1.4.iii")
        return LocalType(LocalKind.FOCUS, "a1=0, some odd b_j nonzero", "thm1.4.iii")
    return LocalType(LocalKind.UNDETERMINED, "a1=0 outside a0*b0<0, n>p^2", "thm1.4.iii")


def _trunc_mul(f: list, g: list, order: int) -> list:
    out = [0] * (order + 1)
    for i, fi in enumerate(f):
        if fi == 0:
            continue
        for j in range(0, order + 1 - i):
            if j < len(g) and g[j] != 0:
                out[i + j] += fi * g[j]
    return out


def _compose(poly: Mapping, f: list, order: int) -> list:
    """Truncated series of poly(x, f(x))."""
    max_j = max((j for (_, j) in poly), default=0)
    powers = [[1] + [0] * order]
    for _ in range(max_j):
        powers.append(_trunc_mul(powers[-1], f, order))
    out = [0] * (order + 1)
    for (i, j), c in poly.items():
        if i > order:
            continue
        pj = powers[j]
        for k in range(0, order + 1 - i):
            if pj[k] != 0:
                out[i + k] += c * pj[k]
    return out


def _exact_terms(poly) -> dict:
    items = poly.terms.items() if isinstance(poly, QHPolynomial) else dict(poly).items()
    return {(int(i), int(j)): Fraction(c) for (i, j), c in items if c != 0}


def classify_degenerate(lam, A, B, order: int = 40) -> LocalType:
    """Local type of  x' = A(x, y),  y' = lam*y + B(x, y)  with lam > 0.

    Solves lam*y + B(x, y) = 0 for y = f(x) as a power series and reads the
    leading term c x^e of A(x, f(x)). A linear x-term in A is allowed (the
    hyperbolic case e = 1).
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    A, B = _exact_terms(A), _exact_terms(B)
    lam = Fraction(lam)
    if (0, 0) in A or (0, 0) in B or (0, 1) in A or (1, 0) in B or (0, 1) in B:
        raise ValueError("A and B must vanish to second order (A may carry a c*x term)")
    f = [Fraction(0)] * (order + 1)
    for _ in range(order + 1):
        nxt = [-v / lam for v in _compose(B, f, order)]
        if nxt == f:
            break
        f = nxt
    g = _compose(A, f, order)
    for e, c in enumerate(g):
        if c != 0:
            if e % 2 == 0:
                kind, code = LocalKind.SADDLE_NODE, "thm2.4.iii"
            elif c > 0:
                kind, code = LocalKind.UNSTABLE_NODE, "thm2.4.ii"
            else:
                kind, code = LocalKind.TOPOLOGICAL_SADDLE, "thm2.4.i"
            return LocalType(kind, f"A(x,f(x)) = {c} x^{e} + ...", code, c, e)
    raise SeriesOrderExhausted(f"A(x, f(x)) vanishes through order {order}")


# -- infinity ------------------------------------------------------------------

def _check_infinity_family(nf: NormalForm) -> None:
    if nf.parity_case is not ParityCase.BOTH_ODD:
        raise QHError("need the both-odd parity case")
    if not (nf.r1 > nf.r2 and nf.m > nf.n):
        raise QHError("need r1 > r2 and m > n")
    if not (nf.a0 < 0 < nf.b0) or any(a != 0 for a in nf.a[1:]):
        raise QHError("need x' = a0 y^r1 with a0 < 0 alone and b0 > 0")


def infinity_analysis(nf: NormalForm, mt: MomentTable | None = None,
                      orientation: int | None = None) -> InfinityVerdict:
    """Center/focus at infinity for  x' = -y^r1,  y' = x^r2 + sum_j b_j x^(r2-jq) y^(jp).

    ``stability_sign`` is sign(b_{2i-1}); ``orientation`` is whatever a
    reference simulation observed (see ``infinity_orientation``).
    """
    _check_infinity_family(nf)
    mu = _odd_threshold(nf.r2 // nf.q)
    cyc = max((mu - 1) // 2, 0)
    for k in range(1, mu + 1, 2):
        if nf.b[k] != 0:
            i = (k + 1) // 2
            return InfinityVerdict("FocusAtInfinity", "thm1.5.ii", mu, cyc, i, _sign(nf.b[k]), i - 1, orientation)
    return InfinityVerdict("CenterAtInfinity", "thm1.5.i", mu, cyc)


def infinity_scan(nf: NormalForm, x_lo: float = 10.0, x_hi: float = 20.0, samples: int = 4,
                  cfg: FlowConfig = DEFAULT) -> CenterScan:
    return center_scan(normal_form_field(nf), x_lo, x_hi, samples, cfg)


def infinity_orientation(nf: NormalForm, verdict: InfinityVerdict, scan: CenterScan) -> int | None:
    """Observed sign(displacement) * sign(b_{2i-1}) on a large annulus."""
    if verdict.stability_sign is None or scan.sign == 0:
        return None
    return scan.sign * verdict.stability_sign
