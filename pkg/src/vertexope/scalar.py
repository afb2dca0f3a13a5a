"""Exact coefficient arithmetic in Q(k)((sqrt(hbar))).

A scalar is a finite-support Laurent polynomial in q = sqrt(hbar) whose
coefficients are rational functions of the level parameter k with rational
coefficients.  Exponent bookkeeping is in integer q-units, so hbar = q^2 and
hbar^(1/2) = q.  Everything is exact: rationals are fractions.Fraction,
polynomials in k are coefficient tuples, rational functions are reduced
num/den pairs with monic denominator.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Optional, Union


class ScalarError(Exception):
    pass


class DivisionByZero(ScalarError):
    pass


class NonUnitDivisor(ScalarError):
    """Division by a scalar that is not exactly invertible in the Laurent ring."""


class PoleAtSpecialization(ScalarError):
    """A denominator vanishes at the requested value of k."""


# ---------------------------------------------------------------------------
# polynomials over Q, represented as tuples of Fractions (index = degree)

_ZERO = Fraction(0)
_ONE = Fraction(1)


def _ptrim(c: list) -> tuple:
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def _padd(a: tuple, b: tuple) -> tuple:
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, x in enumerate(b):
        out[i] += x
    return _ptrim(out)


def _pneg(a: tuple) -> tuple:
    return tuple(-x for x in a)


def _pmul(a: tuple, b: tuple) -> tuple:
    if not a or not b:
        return ()
    out = [_ZERO] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    out[i + j] += x * y
    return _ptrim(out)


def _pdivmod(a: tuple, b: tuple) -> tuple:
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    q = [_ZERO] * max(0, len(a) - len(b) + 1)
    r = list(a)
    inv = 1 / b[-1]
    while len(r) >= len(b):
        c = r[-1] * inv
        d = len(r) - len(b)
        q[d] = c
        for i, y in enumerate(b):
            r[d + i] -= c * y
        while r and r[-1] == 0:
            r.pop()
    return _ptrim(q), _ptrim(r)


def _pgcd(a: tuple, b: tuple) -> tuple:
    while b:
        a, b = b, _pdivmod(a, b)[1]
    if a:
        inv = 1 / a[-1]
        a = tuple(x * inv for x in a)
    return a


def _peval(a: tuple, x: Fraction) -> Fraction:
    acc = _ZERO
    for c in reversed(a):
        acc = acc * x + c
    return acc


def _pstr(a: tuple) -> str:
    # descending degree, variable named k
    if not a:
        return "0"
    parts = []
    for deg in range(len(a) - 1, -1, -1):
        c = a[deg]
        if c == 0:
            continue
        if deg == 0:
            term = _fracstr(c)
        else:
            kpow = "k" if deg == 1 else "k^%d" % deg
            if c == 1:
                term = kpow
            elif c == -1:
                term = "-" + kpow
            else:
                term = _fracstr(c) + "*" + kpow
        if parts and not term.startswith("-"):
            parts.append("+" + term)
        else:
            parts.append(term)
    return "".join(parts)


def _fracstr(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else "%d/%d" % (c.numerator, c.denominator)


class RatK:
    """A rational function of k: reduced num/den pair, monic denominator."""

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num: tuple, den: tuple = (_ONE,), reduce: bool = True):
        if not den:
            raise DivisionByZero("rational function with zero denominator")
        if reduce and num:
            g = _pgcd(num, den)
            if len(g) > 1:
                num = _pdivmod(num, g)[0]
                den = _pdivmod(den, g)[0]
            lead = den[-1]
            if lead != 1:
                inv = 1 / lead
                num = tuple(x * inv for x in num)
                den = tuple(x * inv for x in den)
        elif reduce:
            den = (_ONE,)
        self.num = num
        self.den = den
        self._hash = None

    @staticmethod
    def const(c) -> "RatK":
        c = Fraction(c)
        return RatK((c,) if c else ())

    @staticmethod
    def k() -> "RatK":
        return RatK((_ZERO, _ONE))

    def is_zero(self) -> bool:
        return not self.num

    def __bool__(self) -> bool:
        return bool(self.num)

    def __eq__(self, other) -> bool:
        return isinstance(other, RatK) and self.num == other.num and self.den == other.den

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.num, self.den))
        return self._hash

    def __add__(self, other: "RatK") -> "RatK":
        return RatK(_padd(_pmul(self.num, other.den), _pmul(other.num, self.den)),
                    _pmul(self.den, other.den))

    def __sub__(self, other: "RatK") -> "RatK":
        return RatK(_padd(_pmul(self.num, other.den), _pneg(_pmul(other.num, self.den))),
                    _pmul(self.den, other.den))

    def __neg__(self) -> "RatK":
        r = RatK.__new__(RatK)
        r.num = _pneg(self.num)
        r.den = self.den
        r._hash = None
        return r

    def __mul__(self, other: "RatK") -> "RatK":
        if not self.num or not other.num:
            return _RATK_ZERO
        return RatK(_pmul(self.num, other.num), _pmul(self.den, other.den))

    def __truediv__(self, other: "RatK") -> "RatK":
        if not other.num:
            raise DivisionByZero("division by zero rational function")
        return RatK(_pmul(self.num, other.den), _pmul(self.den, other.num))

    def eval(self, k0: Fraction) -> Fraction:
        d = _peval(self.den, k0)
        if d == 0:
            raise PoleAtSpecialization("denominator vanishes at k=%s" % k0)
        return _peval(self.num, k0) / d

    def __str__(self) -> str:
        if self.den == (_ONE,):
            return _pstr(self.num)
        ns = _pstr(self.num)
        if len(self.num) > 1 or (self.num and self.num[0] < 0):
            ns = "(" + ns + ")"
        ds = _pstr(self.den)
        if len(self.den) > 1:
            ds = "(" + ds + ")"
        return "%s/%s" % (ns, ds)

    __repr__ = __str__


_RATK_ZERO = RatK(())
_RATK_ONE = RatK((_ONE,))


Rational = Union[int, Fraction]


class Scalar:
    """Element of Q(k)[q, q^-1] with q = sqrt(hbar).

    Immutable.  `terms` maps integer q-exponents to nonzero RatK coefficients;
    the zero scalar has an empty term map.
    """

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Optional[Mapping[int, RatK]] = None):
        t = {}
        if terms:
            for e, c in terms.items():
                if c:
                    t[e] = c
        self.terms = t
        self._hash = None

    # -- constructors ------------------------------------------------------
    @staticmethod
    def zero() -> "Scalar":
        return _S_ZERO

    @staticmethod
    def one() -> "Scalar":
        return _S_ONE

    @staticmethod
    def of(c: Rational) -> "Scalar":
        r = RatK.const(c)
        return Scalar({0: r}) if r else _S_ZERO

    @staticmethod
    def k() -> "Scalar":
        return Scalar({0: RatK.k()})

    @staticmethod
    def k_poly(*coeffs: Rational) -> "Scalar":
        """Polynomial in k from ascending coefficients: k_poly(3, 2) = 3 + 2k."""
        return Scalar({0: RatK(_ptrim([Fraction(c) for c in coeffs]))})

    @staticmethod
    def q_power(n: int, c: Rational = 1) -> "Scalar":
        r = RatK.const(c)
        return Scalar({n: r}) if r else _S_ZERO

    @staticmethod
    def hbar(n: int = 1, c: Rational = 1) -> "Scalar":
        return Scalar.q_power(2 * n, c)

    # -- structure ---------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def min_q(self) -> int:
        if not self.terms:
            raise ScalarError("zero scalar has no valuation")
        return min(self.terms)

    def max_q(self) -> int:
        if not self.terms:
            raise ScalarError("zero scalar has no valuation")
        return max(self.terms)

    def q_support(self) -> list:
        return sorted(self.terms)

    def coeff(self, e: int) -> RatK:
        return self.terms.get(e, _RATK_ZERO)

    def __eq__(self, other) -> bool:
        return isinstance(other, Scalar) and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other: "Scalar") -> "Scalar":
        if not self.terms:
            return other
        if not other.terms:
            return self
        t = dict(self.terms)
        for e, c in other.terms.items():
            s = t.get(e)
            c = c if s is None else s + c
            if c:
                t[e] = c
            elif s is not None:
                del t[e]
        out = Scalar.__new__(Scalar)
        out.terms = t
        out._hash = None
        return out

    def __sub__(self, other: "Scalar") -> "Scalar":
        return self + (-other)

    def __neg__(self) -> "Scalar":
        out = Scalar.__new__(Scalar)
        out.terms = {e: -c for e, c in self.terms.items()}
        out._hash = None
        return out

    def __mul__(self, other: "Scalar") -> "Scalar":
        if not self.terms or not other.terms:
            return _S_ZERO
        t = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                c = c1 * c2
                if not c:
                    continue
                e = e1 + e2
                s = t.get(e)
                c = c if s is None else s + c
                if c:
                    t[e] = c
                elif s is not None:
                    del t[e]
        out = Scalar.__new__(Scalar)
        out.terms = t
        out._hash = None
        return out

    def __truediv__(self, other: "Scalar") -> "Scalar":
        """Exact division in the Laurent ring.

        Succeeds when the quotient has finite q-support (always, e.g., for
        monomial divisors); otherwise raises NonUnitDivisor.
        """
        if not other.terms:
            raise DivisionByZero("scalar division by zero")
        if not self.terms:
            return _S_ZERO
        rem = dict(self.terms)
        v = min(other.terms)
        lead = other.terms[v]
        quot = {}
        # match from the lowest exponent upward; terminates iff division exact
        guard = len(self.terms) * (len(other.terms) + 1) + abs(self.max_q() - self.min_q()) + 4
        for _ in range(guard):
            if not rem:
                return Scalar(quot)
            e = min(rem)
            c = rem[e] / lead
            quot[e - v] = c
            for eo, co in other.terms.items():
                ee = e - v + eo
                s = rem.get(eo + e - v)
                cc = c * co
                s = -cc if s is None else s - cc
                if s:
                    rem[ee] = s
                elif ee in rem:
                    del rem[ee]
        raise NonUnitDivisor("inexact Laurent division")

    def scale(self, c: Rational) -> "Scalar":
        return self * Scalar.of(c)

    def shift_q(self, n: int) -> "Scalar":
        """Multiply by q^n."""
        if not self.terms or n == 0:
            return self
        out = Scalar.__new__(Scalar)
        out.terms = {e + n: c for e, c in self.terms.items()}
        out._hash = None
        return out

    # -- specialization / truncation ---------------------------------------
    def specialize_k(self, k0: Rational) -> "Scalar":
        k0 = Fraction(k0)
        t = {}
        for e, c in self.terms.items():
            v = c.eval(k0)
            if v:
                t[e] = RatK.const(v)
        return Scalar(t)

    def truncate(self, max_q: int) -> "Scalar":
        return Scalar({e: c for e, c in self.terms.items() if e <= max_q})

    # -- rendering ----------------------------------------------------------
    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e in sorted(self.terms):
            c = self.terms[e]
            cs = str(c)
            if e == 0:
                term = cs
            else:
                qs = _qpow_str(e)
                if cs == "1":
                    term = qs
                elif cs == "-1":
                    term = "-" + qs
                else:
                    if "+" in cs[1:] or "-" in cs[1:] or "/" in cs:
                        cs = "(" + cs + ")"
                    term = cs + "*" + qs
            if parts and not term.startswith("-"):
                parts.append("+" + term)
            else:
                parts.append(term)
        return "".join(parts)

    __repr__ = __str__


def _qpow_str(e: int) -> str:
    """Render q^e as a power of hb = hbar: hb^(e/2)."""
    if e == 2:
        return "hb"
    if e % 2 == 0:
        return "hb^%d" % (e // 2)
    if e == 1:
        return "hb^(1/2)"
    return "hb^(%d/2)" % e


_S_ZERO = Scalar()
_S_ONE = Scalar({0: _RATK_ONE})

K = Scalar.k()
HBAR = Scalar.hbar()
Q = Scalar.q_power(1)


class ScalarContext:
    """Optional evaluation context: q-truncation order and/or k specialization."""

    def __init__(self, truncation_order: Optional[int] = None,
                 k_specialization: Optional[Rational] = None):
        self.truncation_order = truncation_order
        self.k_specialization = None if k_specialization is None else Fraction(k_specialization)

    def apply(self, a: Scalar) -> Scalar:
        if self.k_specialization is not None:
            a = a.specialize_k(self.k_specialization)
        if self.truncation_order is not None:
            a = a.truncate(self.truncation_order)
        return a


def scalar_arith(a: Scalar, b: Scalar, op: str, ctx: Optional[ScalarContext] = None) -> Scalar:
    if op == "add":
        r = a + b
    elif op == "sub":
        r = a - b
    elif op == "mul":
        r = a * b
    elif op == "div":
        r = a / b
    else:
        raise ValueError("unknown op %r" % op)
    return ctx.apply(r) if ctx else r


def specialize_k(a: Scalar, k0: Rational) -> Scalar:
    return a.specialize_k(k0)
