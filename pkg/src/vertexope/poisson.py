"""Classical layer: finite Poisson (super)algebras with the Kostant-Kirillov
bracket, jet vertex Poisson algebras with localization, and the twisted
bracket identity for 2-form data on a chart.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .scalar import Scalar
from .state import (EVEN, ODD, Factor, Generator, GeneratorTable, Monomial,
                    NegativePowerOfNonInvertible, State, StateError, VACUUM,
                    factor_key, mono_parity, mono_units, single, state_grading)


class PoissonError(Exception):
    pass


class ZeroDivisorLocalization(PoissonError):
    pass


class ChiNotCharacter(PoissonError):
    pass


# ---------------------------------------------------------------------------
# finite super-polynomials over Q

# monomial: (even part as sorted tuple of (idx, exp>0), odd part as sorted tuple)
SMono = Tuple[Tuple[Tuple[int, int], ...], Tuple[int, ...]]
S_ONE_MONO: SMono = ((), ())


class SPoly:
    """Polynomial in even and odd coordinates with Fraction coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Dict[SMono, Fraction]] = None):
        self.terms = {m: c for m, c in (terms or {}).items() if c}

    @staticmethod
    def zero() -> "SPoly":
        return SPoly()

    @staticmethod
    def const(c) -> "SPoly":
        c = Fraction(c)
        return SPoly({S_ONE_MONO: c} if c else {})

    @staticmethod
    def coord(i: int, odd: bool = False) -> "SPoly":
        if odd:
            return SPoly({((), (i,)): Fraction(1)})
        return SPoly({(((i, 1),), ()): Fraction(1)})

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        return isinstance(other, SPoly) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other: "SPoly") -> "SPoly":
        t = dict(self.terms)
        for m, c in other.terms.items():
            s = t.get(m, Fraction(0)) + c
            if s:
                t[m] = s
            elif m in t:
                del t[m]
        out = SPoly.__new__(SPoly)
        out.terms = t
        return out

    def __neg__(self) -> "SPoly":
        out = SPoly.__new__(SPoly)
        out.terms = {m: -c for m, c in self.terms.items()}
        return out

    def __sub__(self, other: "SPoly") -> "SPoly":
        return self + (-other)

    def scale(self, c) -> "SPoly":
        c = Fraction(c)
        if not c:
            return SPoly.zero()
        out = SPoly.__new__(SPoly)
        out.terms = {m: c * x for m, x in self.terms.items()}
        return out

    def __mul__(self, other: "SPoly") -> "SPoly":
        out: Dict[SMono, Fraction] = {}
        for (ev1, od1), c1 in self.terms.items():
            for (ev2, od2), c2 in other.terms.items():
                sgn, od = _odd_merge(od1, od2)
                if sgn == 0:
                    continue
                ev = _even_merge(ev1, ev2)
                m = (ev, od)
                s = out.get(m, Fraction(0)) + sgn * c1 * c2
                if s:
                    out[m] = s
                elif m in out:
                    del out[m]
        return SPoly(out)

    def parity(self) -> Optional[int]:
        ps = {len(od) & 1 for (_, od) in self.terms}
        if len(ps) != 1:
            return None
        return ps.pop()

    def max_degree(self) -> int:
        deg = 0
        for (ev, od) in self.terms:
            deg = max(deg, sum(e for _, e in ev) + len(od))
        return deg

    def substitute_even(self, images: Dict[int, "SPoly"]) -> "SPoly":
        """Substitute polynomials for even coordinates (odd ones unchanged)."""
        out = SPoly.zero()
        for (ev, od), c in self.terms.items():
            acc = SPoly({((), od): c})
            for i, e in ev:
                img = images.get(i)
                img = SPoly.coord(i) if img is None else img
                for _ in range(e):
                    acc = acc * img
            out = out + acc
        return out

    def partial(self, i: int, odd: bool = False) -> "SPoly":
        """Left partial derivative with respect to coordinate i."""
        out: Dict[SMono, Fraction] = {}
        for (ev, od), c in self.terms.items():
            if odd:
                if i not in od:
                    continue
                pos = od.index(i)
                sgn = -1 if pos % 2 else 1
                m = (ev, od[:pos] + od[pos + 1:])
                s = out.get(m, Fraction(0)) + sgn * c
                if s:
                    out[m] = s
                elif m in out:
                    del out[m]
            else:
                for t, (j, e) in enumerate(ev):
                    if j == i:
                        newev = ev[:t] + (((j, e - 1),) if e > 1 else ()) + ev[t + 1:]
                        m = (newev, od)
                        s = out.get(m, Fraction(0)) + e * c
                        if s:
                            out[m] = s
                        elif m in out:
                            del out[m]
        return SPoly(out)

    def __str__(self):
        if not self.terms:
            return "0"
        return " + ".join("%s*%s" % (c, m) for m, c in sorted(self.terms.items()))

    __repr__ = __str__


def _even_merge(a, b):
    d: Dict[int, int] = {}
    for i, e in a:
        d[i] = d.get(i, 0) + e
    for i, e in b:
        d[i] = d.get(i, 0) + e
    return tuple(sorted((i, e) for i, e in d.items() if e))


def _odd_merge(a: Tuple[int, ...], b: Tuple[int, ...]):
    if not a:
        return 1, b
    if not b:
        return 1, a
    if set(a) & set(b):
        return 0, ()
    merged = list(a)
    sgn = 1
    for x in b:
        pos = 0
        for y in merged:
            if y < x:
                pos += 1
        # crossing the tail of merged from the right
        sgn *= (-1) ** (len(merged) - pos)
        merged.insert(pos, x)
    return sgn, tuple(merged)


class PoissonAlgebra:
    """Finite-dimensional Poisson superalgebra on named coordinates.

    bracket_table[(i, j)] for i <= j gives {x_i, x_j}; the rest follows from
    super-antisymmetry.  Antisymmetry and Jacobi are verified on coordinate
    triples at construction.
    """

    def __init__(self, coords: Sequence[Tuple[str, int]],
                 bracket_table: Dict[Tuple[int, int], SPoly],
                 check: bool = True):
        self.coords = list(coords)
        self.names = [n for n, _ in coords]
        self.parities = [p for _, p in coords]
        self.table: Dict[Tuple[int, int], SPoly] = dict(bracket_table)
        if check:
            self._check_axioms()

    def index(self, name: str) -> int:
        return self.names.index(name)

    def coord(self, name: str) -> SPoly:
        i = self.index(name)
        return SPoly.coord(i, odd=bool(self.parities[i]))

    def _pair(self, i: int, j: int) -> SPoly:
        if (i, j) in self.table:
            return self.table[(i, j)]
        if (j, i) in self.table:
            sgn = -(-1) ** (self.parities[i] * self.parities[j])
            return self.table[(j, i)].scale(sgn)
        return SPoly.zero()

    def _bracket_coord(self, i: int, q: SPoly) -> SPoly:
        """{x_i, q} by the super-Leibniz rule."""
        pi = self.parities[i]
        out = SPoly.zero()
        for (ev, od), c in q.terms.items():
            # walk the factors of the monomial
            factors: List[Tuple[int, bool]] = []
            for j, e in ev:
                factors.extend([(j, False)] * e)
            factors.extend((j, True) for j in od)
            for t, (j, is_odd) in enumerate(factors):
                br = self._pair(i, j)
                if not br:
                    continue
                sgn = 1
                if pi:
                    crossed = sum(1 for (jj, o) in factors[:t] if o)
                    if crossed % 2:
                        sgn = -1
                pre = _factors_to_spoly(factors[:t])
                post = _factors_to_spoly(factors[t + 1:])
                out = out + (pre * br * post).scale(sgn * c)
        return out

    def bracket(self, p: SPoly, q: SPoly) -> SPoly:
        out = SPoly.zero()
        for (ev, od), c in p.terms.items():
            factors: List[Tuple[int, bool]] = []
            for j, e in ev:
                factors.extend([(j, False)] * e)
            factors.extend((j, True) for j in od)
            if not factors:
                continue
            # {f1...fn, q} = sum_t f1..f_{t-1} {f_t, q} f_{t+1}..fn with signs
            qpar = q.parity()
            for t, (j, is_odd) in enumerate(factors):
                br = self._bracket_coord(j, q)
                if not br:
                    continue
                post_par = sum(1 for (jj, o) in factors[t + 1:] if o) % 2
                sgn = 1
                if post_par and (qpar or 0):
                    sgn = -1
                pre = _factors_to_spoly(factors[:t])
                post = _factors_to_spoly(factors[t + 1:])
                out = out + (pre * br * post).scale(sgn * c)
        return out

    def _check_axioms(self):
        n = len(self.coords)
        for i in range(n):
            for j in range(n):
                a = self._pair(i, j)
                b = self._pair(j, i)
                sgn = -(-1) ** (self.parities[i] * self.parities[j])
                if a != b.scale(sgn):
                    raise PoissonError("bracket table not antisymmetric at (%d,%d)" % (i, j))
        for i in range(n):
            xi = SPoly.coord(i, bool(self.parities[i]))
            for j in range(n):
                xj = SPoly.coord(j, bool(self.parities[j]))
                for l in range(n):
                    xl = SPoly.coord(l, bool(self.parities[l]))
                    pi, pj, pl = self.parities[i], self.parities[j], self.parities[l]
                    t1 = self.bracket(xi, self.bracket(xj, xl))
                    t2 = self.bracket(xj, self.bracket(xi, xl)).scale((-1) ** (pi * pj))
                    t3 = self.bracket(self.bracket(xi, xj), xl)
                    if t1 - t2 - t3:
                        raise PoissonError("Jacobi fails on coordinates (%d,%d,%d)" % (i, j, l))


def _factors_to_spoly(factors: List[Tuple[int, bool]]) -> SPoly:
    acc = SPoly.const(1)
    for j, is_odd in factors:
        acc = acc * SPoly.coord(j, odd=is_odd)
    return acc


def kk_poisson(lie) -> PoissonAlgebra:
    """Kostant-Kirillov Poisson structure on g*: {x_a, x_b} = x_[a,b]."""
    coords = [(nm, EVEN) for nm in lie.names]
    table: Dict[Tuple[int, int], SPoly] = {}
    n = len(lie.names)
    for i in range(n):
        for j in range(i + 1, n):
            br = lie.bracket(i, j)
            if br:
                table[(i, j)] = SPoly({(((k, 1),), ()): c for k, c in br.items()})
    return PoissonAlgebra(coords, table)


def kk_bracket(lie, p: SPoly, q: SPoly) -> SPoly:
    return kk_poisson(lie).bracket(p, q)


# ---------------------------------------------------------------------------
# jet vertex Poisson algebras


class PoissonVertexAlgebra:
    """Vertex Poisson algebra presented by a generator table, a commutative
    (-1) product, and the n >= 0 brackets of generators."""

    def __init__(self, table: GeneratorTable,
                 brackets: Dict[Tuple[str, int, str], State],
                 check_axioms: bool = True):
        self.table = table
        self._br: Dict[Tuple[int, int], Dict[int, State]] = {}
        for (ni, n, nj), st in brackets.items():
            if st:
                self._br.setdefault((table.lookup(ni), table.lookup(nj)), {})[n] = st
        self._complete_by_skew()
        if check_axioms:
            self.check_generator_axioms()

    # -- commutative product -------------------------------------------------
    def vac(self, c: Scalar = None) -> State:
        return State.vacuum(c)

    def gen(self, name: str, der: int = 0, power: int = 1, coeff: Scalar = None) -> State:
        return single(self.table, name, der, power, coeff)

    def grading(self, a: State, which: str):
        return state_grading(a, self.table, which)

    def _mul_mono(self, ma: Monomial, mb: Monomial) -> Tuple[int, Monomial]:
        units = mono_units(ma) + mono_units(mb)
        return _sort_units_super(units, self.table)

    def mul(self, a: State, b: State) -> State:
        out = State.zero()
        for ma, ca in a.terms.items():
            for mb, cb in b.terms.items():
                sgn, m = self._mul_mono(ma, mb)
                if sgn == 0 or m is None:
                    continue
                c = ca * cb
                if sgn < 0:
                    c = -c
                out = out + State({m: c})
        return out

    def derivative(self, a: State) -> State:
        out = State.zero()
        for m, c in a.terms.items():
            units = mono_units(m)
            for i, u in enumerate(units):
                g, d, s = u
                if s == 1:
                    rep = [(g, d + 1, 1)]
                else:
                    # d(x^-1) = -x^-2 dx
                    rep = [(g, d + 1, 1), (g, d, -1), (g, d, -1)]
                repl = units[:i] + rep + units[i + 1:]
                sgn, mono = _sort_units_super(repl, self.table)
                if sgn == 0 or mono is None:
                    continue
                coef = c if s == 1 else -c
                if sgn < 0:
                    coef = -coef
                out = out + State({mono: coef})
        return out

    def dpow(self, a: State, r: int) -> State:
        for i in range(1, r + 1):
            a = self.derivative(a).scale(Scalar.of(Fraction(1, i)))
        return a

    # -- brackets --------------------------------------------------------------
    def _zero_bracket_union(self, ma: Monomial, mb: Monomial) -> bool:
        gens = {g for g, _, _ in ma} | {g for g, _, _ in mb}
        for g in gens:
            for h in gens:
                if self._br.get((g, h)):
                    return False
        return True

    def bracket_all(self, ma: Monomial, mb: Monomial) -> Dict[int, State]:
        if not ma or not mb:
            return {}
        if self._zero_bracket_union(ma, mb):
            return {}
        if len(ma) == 1 and abs(ma[0][2]) == 1:
            return self._bracket_single(ma[0], mb)
        f, mu = _split_head(ma)
        pf = self.table[f[0]].parity
        pmu = mono_parity(mu, self.table)
        sgn = -1 if (pf and pmu) else 1
        out: Dict[int, State] = {}
        fstate = State({(f,): Scalar.one()})
        ustate = State({mu: Scalar.one()})
        bu = self.bracket_all(mu, mb)
        bf = self.bracket_all((f,), mb)
        for n in range(0, max(list(bu) + list(bf), default=-1) + 1):
            acc = State.zero()
            for N, st in bu.items():
                if N >= n:
                    acc = acc + self.mul(self.dpow(fstate, N - n), st)
            for N, st in bf.items():
                if N >= n:
                    term = self.mul(self.dpow(ustate, N - n), st)
                    acc = acc + (term if sgn > 0 else -term)
            if acc:
                out[n] = acc
        return out

    def _bracket_single(self, u: Factor, mb: Monomial) -> Dict[int, State]:
        g, d, s = u
        if s == -1:
            return self._skew_from(self.bracket_all(mb, (u,)), (u,), mb)
        if d > 0:
            prev = self.bracket_all(((g, d - 1, 1),), mb)
            return {n + 1: st.scale(Scalar.of(-(n + 1))) for n, st in prev.items() if st}
        if len(mb) == 1 and abs(mb[0][2]) == 1:
            h, e, t = mb[0]
            if t == -1:
                base = self.bracket_all((u,), ((h, 0, 1),))
                hinv2 = State({((h, 0, -2),): Scalar.of(-1)})
                return {n: self.mul(hinv2, st) for n, st in base.items() if st}
            if e > 0:
                prev = self.bracket_all((u,), ((h, e - 1, 1),))
                out: Dict[int, State] = {}
                for n in range(0, max(prev, default=-1) + 2):
                    acc = State.zero()
                    st = prev.get(n)
                    if st:
                        acc = acc + self.derivative(st)
                    st2 = prev.get(n - 1)
                    if st2 and n:
                        acc = acc + st2.scale(Scalar.of(n))
                    if acc:
                        out[n] = acc
                return out
            row = self._br.get((g, h))
            return dict(row) if row else {}
        # right Leibniz: a_(n)(f c) = (a_(n)f) c + (-1)^{|a||f|} f (a_(n)c)
        f, mt = _split_head(mb)
        pu = self.table[g].parity
        pf = self.table[f[0]].parity
        sgn = -1 if (pu and pf) else 1
        bf = self.bracket_all((u,), (f,))
        bt = self.bracket_all((u,), mt)
        out = {}
        fstate = State({(f,): Scalar.one()})
        tstate = State({mt: Scalar.one()})
        for n in set(bf) | set(bt):
            acc = State.zero()
            if n in bf:
                acc = acc + self.mul(bf[n], tstate)
            if n in bt:
                term = self.mul(fstate, bt[n])
                acc = acc + (term if sgn > 0 else -term)
            if acc:
                out[n] = acc
        return out

    def _skew_from(self, row: Dict[int, State], ma: Monomial, mb: Monomial) -> Dict[int, State]:
        par = mono_parity(ma, self.table) * mono_parity(mb, self.table)
        out: Dict[int, State] = {}
        top = max(row, default=-1)
        for n in range(0, top + 1):
            acc = State.zero()
            for j in range(0, top - n + 1):
                st = row.get(n + j)
                if st is None or not st:
                    continue
                term = self.dpow(st, j)
                if j % 2:
                    term = -term
                acc = acc + term
            if (-1) ** (n + 1 + par) < 0:
                acc = -acc
            if acc:
                out[n] = acc
        return out

    def _complete_by_skew(self):
        for (i, j), row in list(self._br.items()):
            expected = self._skew_from_row(row, i, j)
            if (j, i) not in self._br and i != j:
                if expected:
                    self._br[(j, i)] = expected
            else:
                given = self._br.get((j, i), {})
                for n in set(expected) | set(given):
                    if expected.get(n, State.zero()) != given.get(n, State.zero()):
                        raise PoissonError("bracket table violates skew-symmetry")

    def _skew_from_row(self, row: Dict[int, State], i: int, j: int) -> Dict[int, State]:
        par = self.table[i].parity * self.table[j].parity
        out: Dict[int, State] = {}
        top = max(row, default=-1)
        for n in range(0, top + 1):
            acc = State.zero()
            for jj in range(0, top - n + 1):
                st = row.get(n + jj)
                if st is None or not st:
                    continue
                term = self.dpow(st, jj)
                if jj % 2:
                    term = -term
                acc = acc + term
            if (-1) ** (n + 1 + par) < 0:
                acc = -acc
            if acc:
                out[n] = acc
        return out

    def nproduct(self, a: State, n: int, b: State) -> State:
        if n == -1:
            return self.mul(a, b)
        if n < -1:
            return self.mul(self.dpow(a, -n - 1), b)
        out = State.zero()
        for ma, ca in a.terms.items():
            for mb, cb in b.terms.items():
                st = self.bracket_all(ma, mb).get(n)
                if st:
                    out = out + st.scale(ca * cb)
        return out

    def substitute(self, a: State, images: Dict[str, State],
                   target: "PoissonVertexAlgebra") -> State:
        out = State.zero()
        for m, c in a.terms.items():
            acc = State.vacuum()
            for g, d, p in reversed(m):
                img = images.get(self.table[g].name)
                if img is None:
                    raise StateError("no image for generator %r" % self.table[g].name)
                if p < 0:
                    img = _invert_pva(img, target)
                    p = -p
                fac = img
                for _ in range(d):
                    fac = target.derivative(fac)
                for _ in range(p):
                    acc = target.mul(fac, acc)
            out = out + acc.scale(c)
        return out

    def max_bracket(self, a: State, b: State) -> int:
        top = -1
        for ma in a.terms:
            for mb in b.terms:
                top = max(top, max(self.bracket_all(ma, mb), default=-1))
        return top

    def check_skew(self, a: State, b: State, n: int) -> Tuple[bool, State]:
        pa = state_grading(a, self.table, "parity")
        pb = state_grading(b, self.table, "parity")
        lhs = self.nproduct(a, n, b)
        top = self.max_bracket(b, a)
        rhs = State.zero()
        for j in range(0, max(top - n, -1) + 1):
            st = self.nproduct(b, n + j, a)
            if not st:
                continue
            term = self.dpow(st, j)
            if j % 2:
                term = -term
            rhs = rhs + term
        if (-1) ** (n + 1 + (pa or 0) * (pb or 0)) < 0:
            rhs = -rhs
        res = lhs - rhs
        return (not res, res)

    def check_jacobi(self, a: State, b: State, c: State, m: int, k: int) -> Tuple[bool, State]:
        """a_(m)(b_(k)c) -+ b_(k)(a_(m)c) = sum_j C(m,j) (a_(j)b)_(m+k-j) c."""
        from .vertex import comb
        pa = state_grading(a, self.table, "parity") or 0
        pb = state_grading(b, self.table, "parity") or 0
        lhs = self.nproduct(a, m, self.nproduct(b, k, c))
        t2 = self.nproduct(b, k, self.nproduct(a, m, c))
        lhs = lhs - (t2 if (-1) ** (pa * pb) > 0 else -t2)
        rhs = State.zero()
        for j in range(0, m + 1):
            cmj = comb(m, j)
            if not cmj:
                continue
            x = self.nproduct(a, j, b)
            if x:
                t = self.nproduct(x, m + k - j, c)
                if t:
                    rhs = rhs + t.scale(Scalar.of(cmj))
        res = lhs - rhs
        return (not res, res)

    def check_derivation(self, a: State, n: int, b: State, c: State) -> Tuple[bool, State]:
        pa = state_grading(a, self.table, "parity") or 0
        pb = state_grading(b, self.table, "parity") or 0
        lhs = self.nproduct(a, n, self.mul(b, c))
        rhs = self.mul(self.nproduct(a, n, b), c)
        t = self.mul(b, self.nproduct(a, n, c))
        rhs = rhs + (t if (-1) ** (pa * pb) > 0 else -t)
        res = lhs - rhs
        return (not res, res)

    def check_generator_axioms(self):
        for i, gi in enumerate(self.table.generators):
            for j, gj in enumerate(self.table.generators):
                a = self.gen(gi.name)
                b = self.gen(gj.name)
                for n in range(0, 4):
                    ok, res = self.check_skew(a, b, n)
                    if not ok:
                        raise PoissonError("PVA skew fails on (%s,(%d),%s)"
                                           % (gi.name, n, gj.name))


def _invert_pva(img: State, target: "PoissonVertexAlgebra") -> State:
    if len(img.terms) != 1:
        raise NegativePowerOfNonInvertible("cannot invert a sum")
    (m, c), = img.terms.items()
    if len(m) != 1 or m[0][1] != 0 or abs(m[0][2]) != 1:
        raise NegativePowerOfNonInvertible("cannot invert a composite state")
    g, _, p = m[0]
    if not target.table[g].invertible:
        raise NegativePowerOfNonInvertible(target.table[g].name)
    return State({((g, 0, -p),): Scalar.one() / c})


def _split_head(m: Monomial) -> Tuple[Factor, Monomial]:
    g, d, p = m[0]
    s = 1 if p > 0 else -1
    rest = ((g, d, p - s),) + m[1:] if p != s else m[1:]
    return (g, d, s), rest


def _sort_units_super(units: List[Factor], table: GeneratorTable):
    """Sort unit factors; Koszul signs for odd swaps; zero on odd repetition.

    Returns (sign, monomial) with sign 0 for the zero result.  Opposite-power
    units of the same (gen, der) cancel freely (commutative algebra).
    """
    arr = list(units)
    sgn = 1
    # insertion sort tracking odd transpositions
    for i in range(1, len(arr)):
        j = i
        while j > 0 and factor_key(arr[j - 1]) > factor_key(arr[j]):
            if table[arr[j - 1][0]].parity and table[arr[j][0]].parity:
                sgn = -sgn
            arr[j - 1], arr[j] = arr[j], arr[j - 1]
            j -= 1
    out: List[Factor] = []
    for g, d, s in arr:
        if table[g].parity and out and out[-1][0] == g and out[-1][1] == d:
            return 0, None
        if out and out[-1][0] == g and out[-1][1] == d:
            p = out[-1][2] + s
            if p:
                out[-1] = (g, d, p)
            else:
                out.pop()
        else:
            out.append((g, d, s))
    for g, d, p in out:
        if p < 0 and (not table[g].invertible or d != 0):
            raise NegativePowerOfNonInvertible(table[g].name)
    return sgn, tuple(out)


def jet_pva(p: PoissonAlgebra, invertible: Sequence[str] = (),
            kazhdan: Optional[Dict[str, Fraction]] = None) -> PoissonVertexAlgebra:
    """Jet vertex Poisson algebra of a finite Poisson algebra: on coordinates,
    f_(0)g = {f, g} and f_(n)g = 0 for n > 0."""
    kazhdan = kazhdan or {}
    gens = [Generator(nm, par, Fraction(0), kazhdan.get(nm, Fraction(0)), 0, None,
                      nm in invertible)
            for nm, par in p.coords]
    table = GeneratorTable(gens)
    brackets: Dict[Tuple[str, int, str], State] = {}
    n = len(p.coords)
    for i in range(n):
        for j in range(n):
            br = p._pair(i, j)
            if br:
                brackets[(p.names[i], 0, p.names[j])] = spoly_to_state(br, table, p)
    return PoissonVertexAlgebra(table, brackets, check_axioms=False)


def spoly_to_state(q: SPoly, table: GeneratorTable, p: PoissonAlgebra) -> State:
    out: Dict[Monomial, Scalar] = {}
    for (ev, od), c in q.terms.items():
        factors = tuple((i, 0, e) for i, e in ev) + tuple((i, 0, 1) for i in od)
        factors = tuple(sorted(factors, key=factor_key))
        sc = Scalar.of(c)
        cur = out.get(factors)
        out[factors] = sc if cur is None else cur + sc
    return State(out)


def localize_pva(v: PoissonVertexAlgebra, s: str) -> PoissonVertexAlgebra:
    """Localization at a single even generator: marks it invertible so that
    the quotient-rule extensions of d and the brackets apply."""
    i = v.table.lookup(s)
    g = v.table[i]
    if g.parity == ODD:
        raise ZeroDivisorLocalization("cannot invert the odd generator %s" % s)
    gens = [Generator(x.name, x.parity, x.conformal_weight, x.kazhdan_weight,
                      x.ghost_number, x.ad_h_weight, x.invertible or x.name == s)
            for x in v.table.generators]
    table = GeneratorTable(gens)
    brackets: Dict[Tuple[str, int, str], State] = {}
    for (a, b), row in v._br.items():
        for n, st in row.items():
            brackets[(v.table[a].name, n, v.table[b].name)] = st
    return PoissonVertexAlgebra(table, brackets, check_axioms=False)


def pva_axiom_suite(v: PoissonVertexAlgebra, samples: Sequence[Tuple[State, State, State]],
                    n_range: Sequence[int] = (0, 1, 2)) -> Dict[str, bool]:
    """Runs skew-symmetry, the Jacobi-type identity, partial-derivation and the
    derivation property on the given sample triples."""
    report = {"skew": True, "jacobi": True, "partial": True, "derivation": True}
    for (a, b, c) in samples:
        for n in n_range:
            ok, _ = v.check_skew(a, b, n)
            report["skew"] = report["skew"] and ok
            for k in n_range:
                ok, _ = v.check_jacobi(a, b, c, n, k)
                report["jacobi"] = report["jacobi"] and ok
            ok, _ = v.check_derivation(a, n, b, c)
            report["derivation"] = report["derivation"] and ok
            # (da)_(n) b = -n a_(n-1) b and d(a_(n)b) = (da)_(n)b + a_(n)(db)
            lhs = v.nproduct(v.derivative(a), n, b)
            rhs = v.nproduct(a, n - 1, b).scale(Scalar.of(-n)) if n else State.zero()
            report["partial"] = report["partial"] and (lhs == rhs)
            lhs2 = v.derivative(v.nproduct(a, n, b))
            rhs2 = v.nproduct(v.derivative(a), n, b) + v.nproduct(a, n, v.derivative(b))
            report["partial"] = report["partial"] and (lhs2 == rhs2)
    return report


# ---------------------------------------------------------------------------
# polynomial exterior forms on a chart (coefficients are SPoly in the x's)

TwoForm = Dict[Tuple[int, int], SPoly]
ThreeFormData = Dict[Tuple[int, int, int], SPoly]
OneForm = Dict[int, SPoly]


def _sorted_sign(idx: Tuple[int, ...]):
    arr = list(idx)
    sgn = 1
    for i in range(1, len(arr)):
        j = i
        while j > 0 and arr[j - 1] > arr[j]:
            arr[j - 1], arr[j] = arr[j], arr[j - 1]
            sgn = -sgn
            j -= 1
    if len(set(arr)) != len(arr):
        return 0, ()
    return sgn, tuple(arr)


def form_d2(beta: TwoForm, dim: int) -> ThreeFormData:
    """Exterior derivative of a 2-form."""
    out: ThreeFormData = {}
    for (i, j), coef in beta.items():
        for k in range(dim):
            dc = coef.partial(k)
            if not dc:
                continue
            sgn, idx = _sorted_sign((k, i, j))
            if sgn == 0:
                continue
            cur = out.get(idx, SPoly.zero())
            cur = cur + dc.scale(sgn)
            if cur:
                out[idx] = cur
            elif idx in out:
                del out[idx]
    return out


def form_d3_is_closed(alpha: ThreeFormData, dim: int) -> bool:
    acc: Dict[Tuple[int, int, int, int], SPoly] = {}
    for (i, j, k), coef in alpha.items():
        for l in range(dim):
            dc = coef.partial(l)
            if not dc:
                continue
            sgn, idx = _sorted_sign((l, i, j, k))
            if sgn == 0:
                continue
            cur = acc.get(idx, SPoly.zero()) + dc.scale(sgn)
            if cur:
                acc[idx] = cur
            elif idx in acc:
                del acc[idx]
    return not acc


def iota_vector_twoform(i: int, beta: TwoForm, dim: int) -> OneForm:
    """iota_{d_i} beta for the coordinate field d_i."""
    out: OneForm = {}
    for (a, b), coef in beta.items():
        if a == i:
            out[b] = out.get(b, SPoly.zero()) + coef
        if b == i:
            out[a] = out.get(a, SPoly.zero()) - coef
    return {k: v for k, v in out.items() if v}


def iota_iota_threeform_poly(alpha: ThreeFormData, i: int, j: int, dim: int) -> OneForm:
    """iota_{d_j} iota_{d_i} alpha as a 1-form (alpha evaluated on d_i, d_j, .)."""
    out: OneForm = {}
    for (a, b, c), coef in alpha.items():
        for perm, sgn in _three_perms(a, b, c):
            if perm[0] == i and perm[1] == j:
                out[perm[2]] = out.get(perm[2], SPoly.zero()) + coef.scale(sgn)
    return {k: v for k, v in out.items() if v}


def _three_perms(a, b, c):
    base = (a, b, c)
    perms = [((a, b, c), 1), ((b, c, a), 1), ((c, a, b), 1),
             ((b, a, c), -1), ((a, c, b), -1), ((c, b, a), -1)]
    return perms


def oneform_to_state(w: OneForm, table: GeneratorTable, x_index) -> State:
    """Embed sum f_a dx_a as sum f_a * (d x_a) via Omega^1 = O dO."""
    out = State.zero()
    for a, coef in w.items():
        for (ev, od), c in coef.terms.items():
            factors = [(x_index(i), 0, e) for i, e in ev]
            factors.append((x_index(a), 1, 1))
            mono = tuple(sorted(factors, key=factor_key))
            # merge same (gen, der)
            merged: List[Factor] = []
            for f in mono:
                if merged and merged[-1][0] == f[0] and merged[-1][1] == f[1]:
                    merged[-1] = (f[0], f[1], merged[-1][2] + f[2])
                else:
                    merged.append(f)
            out = out + State({tuple(merged): Scalar.of(c)})
    return out


def iota_iota_threeform(alpha: ThreeFormData, i: int, j: int, dim: int) -> State:
    """Chart-table entry d_i (0) d_j = iota_{d_j} iota_{d_i} alpha as a state.

    Convention: the x generators occupy table indices 0..dim-1.
    """
    w = iota_iota_threeform_poly(alpha, i, j, dim)
    out = State.zero()
    for a, coef in w.items():
        for (ev, od), c in coef.terms.items():
            factors = [(ii, 0, e) for ii, e in ev]
            factors.append((a, 1, 1))
            factors.sort(key=factor_key)
            merged: List[Factor] = []
            for f in factors:
                if merged and merged[-1][0] == f[0] and merged[-1][1] == f[1]:
                    merged[-1] = (f[0], f[1], merged[-1][2] + f[2])
                else:
                    merged.append(f)
            out = out + State({tuple(merged): Scalar.of(c)})
    return out


def vector_field_bracket(xi: Dict[int, SPoly], eta: Dict[int, SPoly], dim: int) -> Dict[int, SPoly]:
    """[xi, eta] for polynomial vector fields sum f_i d_i (independent oracle)."""
    out: Dict[int, SPoly] = {}
    for j in range(dim):
        acc = SPoly.zero()
        for i in range(dim):
            fi = xi.get(i)
            gi = eta.get(i)
            gj = eta.get(j)
            fj = xi.get(j)
            if fi and gj:
                acc = acc + fi * gj.partial(i)
            if gi and fj:
                acc = acc - gi * fj.partial(i)
        if acc:
            out[j] = acc
    return out


def twisted_bracket_check(v: PoissonVertexAlgebra, xi: Dict[int, SPoly],
                          eta: Dict[int, SPoly], beta: TwoForm, dim: int) -> Tuple[bool, State]:
    """Verify (xi + i_xi beta)_(0)(eta + i_eta beta)
    = xi_(0)eta + i_[xi,eta] beta + i_eta i_xi d(beta) on the jet chart v.

    The chart's generators must be x1..x_dim then d1..d_dim.
    """
    def x_index(i):
        return i

    def d_index(i):
        return dim + i

    def vf_state(vf: Dict[int, SPoly]) -> State:
        out = State.zero()
        for i, coef in vf.items():
            for (ev, od), c in coef.terms.items():
                factors = [(x_index(a), 0, e) for a, e in ev]
                factors.append((d_index(i), 0, 1))
                factors.sort(key=factor_key)
                out = out + State({tuple(factors): Scalar.of(c)})
        return out

    def iota_state(vf: Dict[int, SPoly], form: TwoForm) -> State:
        out = State.zero()
        for i, coef in vf.items():
            w = iota_vector_twoform(i, form, dim)
            emb = oneform_to_state(w, v.table, x_index)
            for (ev, od), c in coef.terms.items():
                mult = State({tuple(sorted(((x_index(a), 0, e) for a, e in ev),
                                           key=factor_key)): Scalar.of(c)})
                out = out + v.mul(mult, emb)
        return out

    lhs_a = vf_state(xi) + iota_state(xi, beta)
    lhs_b = vf_state(eta) + iota_state(eta, beta)
    lhs = v.nproduct(lhs_a, 0, lhs_b)
    rhs = v.nproduct(vf_state(xi), 0, vf_state(eta))
    lie = vector_field_bracket(xi, eta, dim)
    rhs = rhs + iota_state(lie, beta)
    dbeta = form_d2(beta, dim)
    # i_eta i_xi d(beta): contract the 3-form with xi then eta
    acc = State.zero()
    for i, fi in xi.items():
        for j, gj in eta.items():
            oneform = iota_iota_threeform_poly(dbeta, i, j, dim)
            if not oneform:
                continue
            emb = oneform_to_state(oneform, v.table, x_index)
            coef = fi * gj
            for (ev, od), c in coef.terms.items():
                mult = State({tuple(sorted(((x_index(a), 0, e) for a, e in ev),
                                           key=factor_key)): Scalar.of(c)})
                acc = acc + v.mul(mult, emb)
    rhs = rhs + acc
    res = lhs - rhs
    return (not res, res)
