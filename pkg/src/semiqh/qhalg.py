"""Exact polynomial algebra for (p, q) semi-quasi-homogeneous vector fields.

Everything here works over ``fractions.Fraction``. Floating point only enters
downstream (``lyaptrig``, ``melnikov``, ``phaseflow``).
"""
from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import sympy

Exponent = tuple[int, int]


class QHError(ValueError):
    """Base class for invalid algebraic input."""


class PolynomialSyntaxError(QHError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class NotQuasiHomogeneous(QHError):
    pass


class EqualDegrees(QHError):
    pass


class NotCoprime(QHError):
    pass


class InvalidWeights(QHError):
    pass


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("boolean is not a coefficient")
    if isinstance(value, (int, str)):
        return Fraction(value)
    if isinstance(value, float):
        # floats are taken at their exact binary value
        return Fraction(value)
    raise TypeError(f"cannot use {value!r} as an exact coefficient")


class QHPolynomial:
    """Sparse bivariate polynomial with exact rational coefficients.

    Terms are kept in a canonical order (descending x exponent, then
    descending y exponent) so that text and JSON output are deterministic.
    Instances are immutable and hashable.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Exponent, object] | Iterable[tuple[Exponent, object]] = ()):
        merged: dict[Exponent, Fraction] = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for (i, j), c in items:
            i, j = int(i), int(j)
            if i < 0 or j < 0:
                raise QHError(f"negative exponent in term x^{i} y^{j}")
            merged[(i, j)] = merged.get((i, j), Fraction(0)) + _as_fraction(c)
        ordered = sorted(((e, c) for e, c in merged.items() if c != 0), reverse=True)
        self._terms: tuple[tuple[Exponent, Fraction], ...] = tuple(ordered)
        self._hash = hash(self._terms)

    @classmethod
    def monomial(cls, i: int, j: int, coeff=1) -> "QHPolynomial":
        return cls({(i, j): coeff})

    @property
    def terms(self) -> dict[Exponent, Fraction]:
        return dict(self._terms)

    def items(self):
        return iter(self._terms)

    def coeff(self, i: int, j: int) -> Fraction:
        return dict(self._terms).get((i, j), Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, QHPolynomial):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"QHPolynomial({self.to_text()!r})"

    def __neg__(self) -> "QHPolynomial":
        return QHPolynomial([(e, -c) for e, c in self._terms])

    def __add__(self, other: "QHPolynomial") -> "QHPolynomial":
        return QHPolynomial(list(self._terms) + list(other._terms))

    def __sub__(self, other: "QHPolynomial") -> "QHPolynomial":
        return self + (-other)

    def __mul__(self, other) -> "QHPolynomial":
        if not isinstance(other, QHPolynomial):
            c = _as_fraction(other)
            return QHPolynomial([(e, c * v) for e, v in self._terms])
        out = []
        for (i1, j1), c1 in self._terms:
            for (i2, j2), c2 in other._terms:
                out.append(((i1 + i2, j1 + j2), c1 * c2))
        return QHPolynomial(out)

    __rmul__ = __mul__

    def __call__(self, x, y):
        """Evaluate; exact when x and y are Fractions or ints."""
        total = 0
        for (i, j), c in self._terms:
            total += c * x**i * y**j
        return total

    def reflect_x(self) -> "QHPolynomial":
        """Return f(-x, y)."""
        return QHPolynomial([((i, j), -c if i % 2 else c) for (i, j), c in self._terms])

    def swap_xy(self) -> "QHPolynomial":
        return QHPolynomial([((j, i), c) for (i, j), c in self._terms])

    def restrict_x0(self) -> "QHPolynomial":
        """f(0, y)."""
        return QHPolynomial([(e, c) for e, c in self._terms if e[0] == 0])

    def restrict_y0(self) -> "QHPolynomial":
        """f(x, 0)."""
        return QHPolynomial([(e, c) for e, c in self._terms if e[1] == 0])

    def float_terms(self) -> tuple[tuple[float, int, int], ...]:
        return tuple((float(c), i, j) for (i, j), c in self._terms)

    # -- serialization -------------------------------------------------

    def to_text(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for k, ((i, j), c) in enumerate(self._terms):
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            factors = []
            if i:
                factors.append("x" if i == 1 else f"x^{i}")
            if j:
                factors.append("y" if j == 1 else f"y^{j}")
            if mag != 1 or not factors:
                factors.insert(0, str(mag))
            body = "*".join(factors)
            if k == 0:
                parts.append(body if sign == "+" else "-" + body)
            else:
                parts.append(f" {sign} {body}")
        return "".join(parts)

    def to_json(self) -> list[list]:
        return [[str(c), i, j] for (i, j), c in self._terms]

    @classmethod
    def from_json(cls, rows) -> "QHPolynomial":
        terms = []
        for row in rows:
            if len(row) != 3:
                raise QHError(f"term must be [coeff, i, j], got {row!r}")
            num, i, j = row
            if not isinstance(i, int) or not isinstance(j, int):
                raise QHError(f"exponents must be integers, got {row!r}")
            try:
                c = Fraction(str(num))
            except (ValueError, ZeroDivisionError) as exc:
                raise QHError(f"non-rational coefficient {num!r}") from exc
            terms.append(((i, j), c))
        return cls(terms)

    def to_sympy(self, x, y):
        return sum((sympy.Rational(c.numerator, c.denominator) * x**i * y**j for (i, j), c in self._terms),
                   sympy.Integer(0))


# -- parsing ---------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+/\d+|\d+\.\d*|\.\d+|\d+)|(?P<var>[xy])|(?P<op>[-+*^−]))"
)


def parse_polynomial(text: str) -> QHPolynomial:
    """Parse text such as ``"x^2*y - 3/2*y^5"`` into a polynomial.

    Accepts integer, ``a/b`` and decimal coefficients, implicit
    multiplication (``3x^2y``) and the unicode minus sign.
    """
    tokens: list[tuple[str, str, int]] = []
    pos = 0
    stripped_end = len(text.rstrip())
    while pos < stripped_end:
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            while text[pos].isspace():
                pos += 1
            raise PolynomialSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        val = m.group(kind)
        tokens.append((kind, "-" if val == "−" else val, m.start(kind)))
        pos = m.end()
    if not tokens:
        raise PolynomialSyntaxError("empty polynomial", 0)

    terms: list[tuple[Exponent, Fraction]] = []
    k = 0
    n = len(tokens)
    first = True
    while k < n:
        sign = 1
        if tokens[k][0] == "op" and tokens[k][1] in "+-":
            sign = -1 if tokens[k][1] == "-" else 1
            k += 1
        elif not first:
            raise PolynomialSyntaxError("expected '+' or '-'", tokens[k][2])
        first = False
        if k >= n:
            raise PolynomialSyntaxError("dangling sign", len(text))
        coeff = Fraction(1)
        i = j = 0
        seen_factor = False
        if tokens[k][0] == "num":
            try:
                coeff = Fraction(tokens[k][1])
            except ZeroDivisionError as exc:
                raise PolynomialSyntaxError("zero denominator", tokens[k][2]) from exc
            seen_factor = True
            k += 1
        while k < n:
            kind, val, at = tokens[k]
            if kind == "op" and val == "*":
                if k + 1 >= n or tokens[k + 1][0] != "var":
                    raise PolynomialSyntaxError("expected variable after '*'", at)
                k += 1
                continue
            if kind != "var":
                break
            k += 1
            power = 1
            if k < n and tokens[k][0] == "op" and tokens[k][1] == "^":
                if k + 1 < n and tokens[k + 1][0] == "op" and tokens[k + 1][1] == "-":
                    raise QHError(f"negative exponent at position {tokens[k + 1][2]}")
                if k + 1 >= n or tokens[k + 1][0] != "num" or not tokens[k + 1][1].isdigit():
                    pos_err = tokens[k + 1][2] if k + 1 < n else len(text)
                    raise PolynomialSyntaxError("exponent must be a non-negative integer", pos_err)
                power = int(tokens[k + 1][1])
                k += 2
            if val == "x":
                i += power
            else:
                j += power
            seen_factor = True
        if not seen_factor:
            at = tokens[k][2] if k < n else len(text)
            raise PolynomialSyntaxError("expected coefficient or variable", at)
        terms.append(((i, j), sign * coeff))
    poly = QHPolynomial(terms)
    return poly


# -- weights and degrees -----------------------------------------------------

@dataclass(frozen=True)
class WeightVector:
    """Weights (p, q). ``check_convention`` enforces p odd and gcd(p, q) = 1."""

    p: int
    q: int

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise InvalidWeights(f"weights must be positive, got ({self.p}, {self.q})")

    def check_convention(self) -> None:
        if math.gcd(self.p, self.q) != 1:
            raise InvalidWeights(f"gcd({self.p}, {self.q}) != 1")
        if self.p % 2 == 0:
            raise InvalidWeights(f"p = {self.p} is even")


def weighted_degree(f: QHPolynomial, w: WeightVector) -> int:
    if f.is_zero():
        raise QHError("zero polynomial has no weighted degree")
    degrees = {w.p * i + w.q * j for (i, j), _ in f.items()}
    if len(degrees) != 1:
        raise NotQuasiHomogeneous(
            f"{f.to_text()} has weighted degrees {sorted(degrees)} for weights ({w.p}, {w.q})")
    return degrees.pop()


def reduce_weights(p: int, q: int, m: int, n: int) -> tuple[int, int, int, int]:
    k = math.gcd(p, q)
    if (m - 1) % k or (n - 1) % k:
        raise InvalidWeights(f"gcd(p, q) = {k} does not divide m-1 = {m - 1} and n-1 = {n - 1}")
    return p // k, q // k, 1 + (m - 1) // k, 1 + (n - 1) // k


def coprime(P: QHPolynomial, Q: QHPolynomial) -> bool:
    """True iff gcd(P, Q) over Q[x, y] is a nonzero constant."""
    if P.is_zero() or Q.is_zero():
        raise QHError("coprimality is undefined for the zero polynomial")
    x, y = sympy.symbols("x y")
    g = sympy.Poly(P.to_sympy(x, y), x, y, domain="QQ").gcd(sympy.Poly(Q.to_sympy(x, y), x, y, domain="QQ"))
    return g.total_degree() == 0


@dataclass(frozen=True)
class SemiQHSystem:
    """Validated pair (P, Q) in convention coordinates.

    ``swapped`` records whether x and y were exchanged to make p odd; the
    original input is kept in ``original``.
    """

    P: QHPolynomial
    Q: QHPolynomial
    w: WeightVector
    m: int
    n: int
    swapped: bool = False
    original: tuple[QHPolynomial, QHPolynomial, WeightVector] | None = field(default=None, compare=False)

    @property
    def p(self) -> int:
        return self.w.p

    @property
    def q(self) -> int:
        return self.w.q

    def to_json(self) -> dict:
        return {"p": self.p, "q": self.q, "P": self.P.to_json(), "Q": self.Q.to_json()}


def classify_system(P: QHPolynomial, Q: QHPolynomial, w: WeightVector) -> SemiQHSystem:
    if P.is_zero() or Q.is_zero():
        raise QHError("P and Q must be nonzero")
    dP = weighted_degree(P, w)
    dQ = weighted_degree(Q, w)
    m = dP - w.p + 1
    n = dQ - w.q + 1
    if m < 1 or n < 1:
        raise QHError(f"weighted degrees give m = {m}, n = {n}; both must be positive")
    if m == n:
        raise EqualDegrees(f"m = n = {m}: quasi-homogeneous, out of class")
    p, q, m, n = reduce_weights(w.p, w.q, m, n)
    swapped = False
    P2, Q2 = P, Q
    if p % 2 == 0:
        # exchange x and y so that the first weight is odd
        P2, Q2 = Q.swap_xy(), P.swap_xy()
        p, q, m, n = q, p, n, m
        swapped = True
    if not coprime(P2, Q2):
        raise NotCoprime(f"{P.to_text()} and {Q.to_text()} share a nonconstant factor")
    wr = WeightVector(p, q)
    wr.check_convention()
    return SemiQHSystem(P2, Q2, wr, m, n, swapped, (P, Q, w))


def system_from_json(data: Mapping | str) -> SemiQHSystem:
    if isinstance(data, str):
        data = json.loads(data)
    try:
        w = WeightVector(int(data["p"]), int(data["q"]))
        P = QHPolynomial.from_json(data["P"])
        Q = QHPolynomial.from_json(data["Q"])
    except KeyError as exc:
        raise QHError(f"system JSON is missing key {exc}") from exc
    return classify_system(P, Q, w)


# -- normal form and the existence screen ------------------------------------

class ParityCase(str, enum.Enum):
    BOTH_ODD = "BothOdd"
    Q_EVEN = "QEven"


@dataclass(frozen=True)
class NormalForm:
    """Coefficients of  x' = sum a_i x^{iq} y^{r1-ip},  y' = sum b_j x^{r2-jq} y^{jp}.

    ``parity_case`` is None when the parity screen rejected the system; the
    coefficients are still meaningful in that case.
    """

    p: int
    q: int
    m: int
    n: int
    r1: int
    r2: int
    a: tuple[Fraction, ...]
    b: tuple[Fraction, ...]
    parity_case: ParityCase | None = None

    def __post_init__(self):
        if self.q * self.r1 != self.p + self.m - 1 or self.p * self.r2 != self.q + self.n - 1:
            raise QHError("r1, r2 inconsistent with (p, q, m, n)")
        if len(self.a) != self.r1 // self.p + 1 or len(self.b) != self.r2 // self.q + 1:
            raise QHError("coefficient vectors have the wrong length")
        if self.parity_case is ParityCase.BOTH_ODD:
            if not all(v % 2 for v in (self.m, self.n, self.r1, self.r2)):
                raise QHError("BothOdd requires m, n, r1, r2 odd")

    @property
    def l1(self) -> int | None:
        return (self.r1 + 1) // 2 if self.r1 % 2 else None

    @property
    def l2(self) -> int | None:
        return (self.r2 + 1) // 2 if self.r2 % 2 else None

    @property
    def a0(self) -> Fraction:
        return self.a[0]

    @property
    def b0(self) -> Fraction:
        return self.b[0]

    def expand(self) -> tuple[QHPolynomial, QHPolynomial]:
        P = QHPolynomial([((i * self.q, self.r1 - i * self.p), c) for i, c in enumerate(self.a)])
        Q = QHPolynomial([((self.r2 - j * self.q, j * self.p), c) for j, c in enumerate(self.b)])
        return P, Q

    def to_json(self) -> dict:
        return {
            "p": self.p, "q": self.q, "m": self.m, "n": self.n,
            "r1": self.r1, "r2": self.r2, "l1": self.l1, "l2": self.l2,
            "a": [str(c) for c in self.a], "b": [str(c) for c in self.b],
            "parity_case": self.parity_case.value if self.parity_case else None,
        }


@dataclass(frozen=True)
class NoPeriodicOrbit:
    """Negative verdict with a machine-readable reason code."""

    code: str
    reason: str
    normal_form: NormalForm | None = None


def normal_form(s: SemiQHSystem) -> NormalForm | None:
    """Coefficients in the normal-form layout, or None when divisibility fails."""
    p, q, m, n = s.p, s.q, s.m, s.n
    if (p + m - 1) % q or (q + n - 1) % p:
        return None
    r1 = (p + m - 1) // q
    r2 = (q + n - 1) // p
    a = tuple(s.P.coeff(i * q, r1 - i * p) for i in range(r1 // p + 1))
    b = tuple(s.Q.coeff(r2 - j * q, j * p) for j in range(r2 // q + 1))
    return NormalForm(p, q, m, n, r1, r2, a, b)


def _with_case(nf: NormalForm, case: ParityCase | None) -> NormalForm:
    return NormalForm(nf.p, nf.q, nf.m, nf.n, nf.r1, nf.r2, nf.a, nf.b, case)


def existence_screen(s: SemiQHSystem) -> NormalForm | NoPeriodicOrbit:
    """Apply the nonexistence criteria; return the normal form if none fires.

    For q even the parity rule is read as "m and n both even and r1 and r2
    both odd".
    """
    p, q, m, n = s.p, s.q, s.m, s.n
    if (p + m - 1) % q:
        return NoPeriodicOrbit("thm1.2.i", f"q={q} does not divide p+m-1={p + m - 1}: x=0 is invariant")
    if (q + n - 1) % p:
        return NoPeriodicOrbit("thm1.2.i", f"p={p} does not divide q+n-1={q + n - 1}: y=0 is invariant")
    nf = normal_form(s)
    assert nf is not None
    if nf.b0 == 0:
        return NoPeriodicOrbit("thm1.2.iii.b", "b0 = 0: y=0 is an invariant line", nf)
    if nf.a0 == 0:
        return NoPeriodicOrbit("thm1.2.iii.b.sym", "a0 = 0: x=0 is an invariant line", nf)
    if q % 2:
        bad = [name for name, v in (("m", m), ("n", n), ("r1", nf.r1), ("r2", nf.r2)) if v % 2 == 0]
        if bad:
            return NoPeriodicOrbit("thm1.2.ii.1", f"p, q odd but {', '.join(bad)} even", nf)
        return _with_case(nf, ParityCase.BOTH_ODD)
    if n % 2:
        return NoPeriodicOrbit("lemma3.2", f"q={q} even and n={n} odd: flow on y=0 keeps one direction", nf)
    bad = [name for name, v in (("m", m % 2 == 0), ("r1", nf.r1 % 2), ("r2", nf.r2 % 2)) if not v]
    if bad:
        return NoPeriodicOrbit("thm1.2.ii.2", f"q even but parity of {', '.join(bad)} fails", nf)
    return _with_case(nf, ParityCase.Q_EVEN)
