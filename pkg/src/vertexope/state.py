"""Canonical states of (super)vertex algebras.

A state is a finite linear combination of canonical monomials with Scalar
coefficients.  A monomial is an ordered tuple of factors (gen, der, power)
interpreted as the right-nested sequence of (-1)-products applied to the
vacuum; factors are sorted by (table index, derivative order descending) and
equal (gen, der) units are merged into the integer power.  Odd generators
never repeat; negative powers are only allowed for invertible generators at
derivative order 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .scalar import Scalar

EVEN = 0
ODD = 1


class StateError(Exception):
    pass


class UnknownGenerator(StateError):
    pass


class NegativePowerOfNonInvertible(StateError):
    pass


class IncompatibleAlgebras(StateError):
    pass


@dataclass(frozen=True)
class Generator:
    """A strong generator with its grading data.

    kazhdan_weight is the weight under the t^{-h} rho(t) circle action in
    t-units (sqrt(hbar) itself carries weight 1); ad_h_weight is the sl2
    Cartan eigenvalue when the generator comes from reduction data.
    """

    name: str
    parity: int = EVEN
    conformal_weight: Fraction = Fraction(0)
    kazhdan_weight: Fraction = Fraction(0)
    ghost_number: int = 0
    ad_h_weight: Optional[Fraction] = None
    invertible: bool = False


class GeneratorTable:
    """Ordered set of generators; the order fixes the canonical monomial order."""

    def __init__(self, generators: Sequence[Generator]):
        self.generators: Tuple[Generator, ...] = tuple(generators)
        self.index: Dict[str, int] = {}
        for i, g in enumerate(self.generators):
            if g.name in self.index:
                raise StateError("duplicate generator name %r" % g.name)
            self.index[g.name] = i

    def __len__(self) -> int:
        return len(self.generators)

    def __getitem__(self, i: int) -> Generator:
        return self.generators[i]

    def lookup(self, name: str) -> int:
        try:
            return self.index[name]
        except KeyError:
            raise UnknownGenerator(name) from None


# A factor is (gen_index, der_order, power); a Monomial is a sorted tuple of
# factors.  The empty tuple is the vacuum.
Factor = Tuple[int, int, int]
Monomial = Tuple[Factor, ...]

VACUUM: Monomial = ()


def factor_key(f: Factor) -> Tuple[int, int]:
    return (f[0], -f[1])


def mono_is_canonical(m: Monomial) -> bool:
    for i in range(len(m) - 1):
        if factor_key(m[i]) >= factor_key(m[i + 1]):
            return False
    return all(f[2] != 0 for f in m)


def mono_units(m: Monomial) -> List[Tuple[int, int, int]]:
    """Expand merged powers into unit factors (power +-1 each)."""
    out = []
    for g, d, p in m:
        s = 1 if p > 0 else -1
        out.extend([(g, d, s)] * abs(p))
    return out


def mono_length(m: Monomial) -> int:
    return sum(abs(p) for _, _, p in m)


def mono_parity(m: Monomial, table: GeneratorTable) -> int:
    par = 0
    for g, _, p in m:
        if table[g].parity:
            par ^= abs(p) & 1
    return par


def mono_grading(m: Monomial, table: GeneratorTable, which: str) -> Fraction:
    """Additive grading of a monomial (scalar contribution excluded)."""
    total = Fraction(0)
    for g, d, p in m:
        gen = table[g]
        if which == "conformal":
            total += p * (gen.conformal_weight + d)
        elif which == "kazhdan":
            total += p * gen.kazhdan_weight
        elif which == "ghost":
            total += p * gen.ghost_number
        elif which == "depth":
            total += abs(p) * d
        else:
            raise ValueError("unknown grading %r" % which)
    return total


class State:
    """Finite linear combination of canonical monomials over Scalar."""

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Dict[Monomial, Scalar]] = None):
        t = {}
        if terms:
            for m, c in terms.items():
                if c:
                    t[m] = c
        self.terms = t

    @staticmethod
    def zero() -> "State":
        return State()

    @staticmethod
    def vacuum(c: Scalar = None) -> "State":
        return State({VACUUM: Scalar.one() if c is None else c})

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        return isinstance(other, State) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other: "State") -> "State":
        if not self.terms:
            return other
        if not other.terms:
            return self
        t = dict(self.terms)
        for m, c in other.terms.items():
            s = t.get(m)
            c = c if s is None else s + c
            if c:
                t[m] = c
            elif s is not None:
                del t[m]
        out = State.__new__(State)
        out.terms = t
        return out

    def __sub__(self, other: "State") -> "State":
        return self + (-other)

    def __neg__(self) -> "State":
        out = State.__new__(State)
        out.terms = {m: -c for m, c in self.terms.items()}
        return out

    def scale(self, c: Scalar) -> "State":
        if not c:
            return State.zero()
        out = State.__new__(State)
        out.terms = {m: s * c for m, s in self.terms.items()}
        return out

    def map_scalars(self, f) -> "State":
        t = {}
        for m, c in self.terms.items():
            c2 = f(c)
            if c2:
                t[m] = c2
        return State(t)

    def monomials(self) -> List[Monomial]:
        return sorted(self.terms)

    def __repr__(self):
        if not self.terms:
            return "<0>"
        return "<" + " ++ ".join("%r %s" % (c, m) for m, c in sorted(self.terms.items())) + ">"


def single(table: GeneratorTable, name: str, der: int = 0, power: int = 1,
           coeff: Scalar = None) -> State:
    """State consisting of one factor D^der(name)^power."""
    i = table.lookup(name)
    gen = table[i]
    if power < 0 and not gen.invertible:
        raise NegativePowerOfNonInvertible(name)
    if power < 0 and der != 0:
        raise NegativePowerOfNonInvertible("negative power of derivative %s" % name)
    if gen.parity == ODD and abs(power) > 1:
        return State.zero()
    if power == 0:
        return State.vacuum(coeff)
    m: Monomial = ((i, der, power),)
    return State({m: Scalar.one() if coeff is None else coeff})


def render_factor(f: Factor, table: GeneratorTable) -> str:
    g, d, p = f
    name = table[g].name
    core = name if d == 0 else ("D(%s)" % name if d == 1 else "D^%d(%s)" % (d, name))
    if p == 1:
        return core
    if d == 0:
        return "%s^%d" % (name, p)
    return "%s^%d" % (core, p)


def render_monomial(m: Monomial, table: GeneratorTable) -> str:
    if not m:
        return "1"
    body = " ".join(render_factor(f, table) for f in m)
    if len(m) == 1 and m[0][1] == 0:
        return body
    return ":" + body + ":"


def render_state(a: State, table: GeneratorTable) -> str:
    if not a.terms:
        return "0"
    parts = []
    for m in sorted(a.terms):
        c = a.terms[m]
        cs = str(c)
        ms = render_monomial(m, table)
        if cs == "1":
            term = ms
        elif cs == "-1":
            term = "-" + ms
        else:
            if ("+" in cs[1:]) or ("-" in cs[1:]):
                cs = "(" + cs + ")"
            term = cs if ms == "1" else cs + "*" + ms
        if parts and not term.startswith("-"):
            parts.append("+ " + term)
        else:
            parts.append(term)
    return " ".join(parts)


def state_grading(a: State, table: GeneratorTable, which: str):
    """Common grading value of a state, or None if inhomogeneous/zero.

    parity: 0/1.  conformal: monomial weights only.  kazhdan: monomial weight
    plus the q-exponent of the coefficient (q carries Kazhdan weight 1).
    ghost: monomial ghost numbers.
    """
    vals = set()
    for m, c in a.terms.items():
        if which == "parity":
            vals.add(mono_parity(m, table))
        elif which == "kazhdan":
            base = mono_grading(m, table, "kazhdan")
            for e in c.terms:
                vals.add(base + e)
        else:
            vals.add(mono_grading(m, table, which))
        if len(vals) > 1:
            return None
    if not vals:
        return None
    return vals.pop()
