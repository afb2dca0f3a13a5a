"""The n-product engine for (super)vertex algebras.

An algebra is presented by a generator table plus the finitely many singular
products g_(n) h, n >= 0, between generators.  All other products are
computed by a rewriting system whose rules are specializations of the
Borcherds identity:

  commutator rule   a_(m)(b_(k)c) = +-b_(k)(a_(m)c) + sum_j C(m,j)(a_(j)b)_(m+k-j)c
  expansion rule    (a_(-1)b)_(m)c = sum_j a_(-1-j)(b_(m+j)c) +- sum_j b_(m-1-j)(a_(j)c)
  translation       (da)_(n) = -n a_(n-1),  a_(-1-r)b = (d^r a / r!)_(-1) b
  skew-symmetry     a_(n)b = (-1)^(n+1+|a||b|) sum_j ((-1)^j/j!) d^j (b_(n+j)a)

Inverses of invertible function-like generators are handled by the formal
quotient rule for finite-order differential operators; geometric series are
never materialized, so every result is an exact finite state.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .scalar import Scalar
from .state import (EVEN, ODD, Factor, Generator, GeneratorTable, IncompatibleAlgebras,
                    Monomial, NegativePowerOfNonInvertible, State, StateError, VACUUM,
                    factor_key, mono_grading, mono_parity, mono_units, single,
                    state_grading)


class EngineError(StateError):
    pass


class NonTerminatingLocalization(EngineError):
    pass


class SkewSymmetryViolation(EngineError):
    pass


class NotCommutativeModHbar(EngineError):
    pass


class ZeroState(EngineError):
    pass


def comb(m: int, j: int) -> Fraction:
    """Binomial coefficient C(m, j) for any integer m, j >= 0."""
    if j < 0:
        return Fraction(0)
    num = Fraction(1)
    for i in range(j):
        num *= m - i
    for i in range(1, j + 1):
        num /= i
    return num


_MAX_STRAIGHTEN = 8000


class VertexAlgebra:
    """A vertex (super)algebra strongly generated by a finite table.

    products maps (name_i, n, name_j) for n >= 0 to states; missing transposed
    pairs are completed by skew-symmetry at construction, and given transposes
    are checked against it.
    """

    def __init__(self, table: GeneratorTable, products: Dict[Tuple[str, int, str], State],
                 hbar_adic: bool = False, check_skew_table: bool = True):
        self.table = table
        self.hbar_adic = hbar_adic
        self._prod: Dict[Tuple[int, int], Dict[int, State]] = {}
        for (ni, n, nj), st in products.items():
            if n < 0:
                raise EngineError("table products must have n >= 0")
            i, j = table.lookup(ni), table.lookup(nj)
            if st:
                self._prod.setdefault((i, j), {})[n] = st
        self._memo_bracket: Dict[Tuple[Monomial, Monomial], Dict[int, State]] = {}
        self._memo_nf: Dict[Tuple[Monomial, Monomial], State] = {}
        self._memo_insert: Dict[Tuple[Factor, Monomial], State] = {}
        self._memo_deriv: Dict[Monomial, State] = {}
        self._depth = 0
        self._complete_by_skew(check_skew_table)

    # -- construction helpers ------------------------------------------------
    def _complete_by_skew(self, check: bool):
        pairs = list(self._prod.items())
        for (i, j), row in pairs:
            expected = self._skew_row(row, i, j)
            if (j, i) not in self._prod and i != j:
                if expected:
                    self._prod[(j, i)] = expected
            else:
                given = self._prod.get((j, i), {})
                if check:
                    for n in set(expected) | set(given):
                        if expected.get(n, State.zero()) != given.get(n, State.zero()):
                            raise SkewSymmetryViolation(
                                "table entry (%s,(%d),%s) violates skew-symmetry"
                                % (self.table[j].name, n, self.table[i].name))

    def _skew_row(self, row: Dict[int, State], i: int, j: int) -> Dict[int, State]:
        """Row of b_(n)a derived from the given a_(n)b row by skew-symmetry."""
        par = self.table[i].parity * self.table[j].parity
        out: Dict[int, State] = {}
        if not row:
            return out
        top = max(row)
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
            sign = (-1) ** (n + 1 + par)
            if sign < 0:
                acc = -acc
            if acc:
                out[n] = acc
        return out

    def clear_cache(self):
        self._memo_bracket.clear()
        self._memo_nf.clear()
        self._memo_insert.clear()
        self._memo_deriv.clear()

    # -- state constructors ---------------------------------------------------
    def vac(self, c: Scalar = None) -> State:
        return State.vacuum(c)

    def gen(self, name: str, der: int = 0, power: int = 1, coeff: Scalar = None) -> State:
        return single(self.table, name, der, power, coeff)

    def parity(self, a: State) -> Optional[int]:
        return state_grading(a, self.table, "parity")

    def grading(self, a: State, which: str):
        return state_grading(a, self.table, which)

    # -- derivation -----------------------------------------------------------
    def derivative(self, a: State) -> State:
        out = State.zero()
        for m, c in a.terms.items():
            out = out + self._deriv_mono(m).scale(c)
        return out

    def dpow(self, a: State, r: int) -> State:
        """d^r a / r!"""
        for i in range(1, r + 1):
            a = self.derivative(a).scale(Scalar.of(Fraction(1, i)))
        return a

    def _deriv_mono(self, m: Monomial) -> State:
        hit = self._memo_deriv.get(m)
        if hit is not None:
            return hit
        units = mono_units(m)
        out = State.zero()
        for i, u in enumerate(units):
            du = self._d_unit(u)
            if not du:
                continue
            base = self._mono_from_units(units[i + 1:])
            term = self._nf_states(du, State({base: Scalar.one()}))
            for pu in reversed(units[:i]):
                term = self._insert_state(pu, term)
            out = out + term
        self._memo_deriv[m] = out
        return out

    def _d_unit(self, u: Factor) -> State:
        g, d, s = u
        if s == 1:
            return State({((g, d + 1, 1),): Scalar.one()})
        # d(x^-1) = -x^-2 dx, valid in the commutative localized part
        return State({((g, 1, 1), (g, 0, -2)): Scalar.of(-1)})

    @staticmethod
    def _mono_from_units(units: List[Factor]) -> Monomial:
        # consecutive equal (g, d) units merge; the list is already sorted
        out: List[Factor] = []
        for g, d, s in units:
            if out and out[-1][0] == g and out[-1][1] == d:
                p = out[-1][2] + s
                if p:
                    out[-1] = (g, d, p)
                else:
                    out.pop()
            else:
                out.append((g, d, s))
        return tuple(out)

    # -- core recursion: brackets ----------------------------------------------
    def _zero_bracket_union(self, ma: Monomial, mb: Monomial) -> bool:
        """True when every table bracket among the constituent generators
        vanishes; all products in the recursion then vanish too."""
        gens = {g for g, _, _ in ma} | {g for g, _, _ in mb}
        for g in gens:
            for h in gens:
                if self._prod.get((g, h)):
                    return False
        return True

    def bracket_all(self, ma: Monomial, mb: Monomial) -> Dict[int, State]:
        """All singular products ma_(n) mb, n >= 0, as a finite dict."""
        if not ma or not mb:
            return {}
        key = (ma, mb)
        hit = self._memo_bracket.get(key)
        if hit is not None:
            return hit
        self._depth += 1
        if self._depth > _MAX_STRAIGHTEN:
            raise NonTerminatingLocalization("bracket recursion exceeded straightening bound")
        try:
            if self._zero_bracket_union(ma, mb):
                out: Dict[int, State] = {}
            elif len(ma) == 1 and abs(ma[0][2]) == 1:
                out = self._bracket_single(ma[0], mb)
            else:
                out = self._bracket_composite(ma, mb)
        finally:
            self._depth -= 1
        out = {n: st for n, st in out.items() if st}
        self._memo_bracket[key] = out
        return out

    def _bracket_single(self, u: Factor, mb: Monomial) -> Dict[int, State]:
        g, d, s = u
        if s == -1:
            # inverse on the left: use skew-symmetry
            return self._skew_from(self.bracket_all(mb, (u,)), (u,), mb)
        if d > 0:
            prev = self.bracket_all(((g, d - 1, 1),), mb)
            out: Dict[int, State] = {}
            for n, st in prev.items():
                if st:
                    out[n + 1] = st.scale(Scalar.of(-(n + 1)))
            return out
        # d == 0, s == 1
        if len(mb) == 1 and abs(mb[0][2]) == 1:
            h, e, t = mb[0]
            if t == -1:
                return self._bracket_inverse_right(g, h)
            if e > 0:
                prev = self.bracket_all((u,), ((h, e - 1, 1),))
                out = {}
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
            row = self._prod.get((g, h))
            return dict(row) if row else {}
        return self._bracket_wick(u, mb)

    def _bracket_inverse_right(self, g: int, h: int) -> Dict[int, State]:
        """g_(n)(h^-1) by the quotient rule; g_(n) acts as a derivation on the
        commutative subalgebra generated by h and its inverse."""
        gen = self.table[h]
        if not gen.invertible:
            raise NegativePowerOfNonInvertible(gen.name)
        base = self.bracket_all(((g, 0, 1),), ((h, 0, 1),))
        out: Dict[int, State] = {}
        hinv2 = State({((h, 0, -2),): Scalar.of(-1)})
        for n, st in base.items():
            for m, _ in st.terms.items():
                for gg, _, _ in m:
                    if (self._prod.get((gg, h)) or self._prod.get((h, gg))
                            or self._prod.get((gg, gg))):
                        raise NonTerminatingLocalization(
                            "bracket with %s is not function-valued; cannot localize"
                            % gen.name)
            out[n] = self._nf_states(hinv2, st)
        return out

    def _bracket_wick(self, u: Factor, mb: Monomial) -> Dict[int, State]:
        """a_(n)(f_(-1)t) for a single generator unit a, via the commutator rule."""
        f, mt = self._split_head(mb)
        pu = self.table[u[0]].parity
        pf = self.table[f[0]].parity
        swap_sign = -1 if (pu and pf) else 1
        bt = self.bracket_all((u,), mt)
        bf = self.bracket_all((u,), (f,))
        nmax = max(bt, default=-1)
        for j in bf:
            sup = [self._state_bracket_support(bf[j], mt)]
            nmax = max(nmax, 1 + j + max(sup))
        out: Dict[int, State] = {}
        for n in range(0, nmax + 1):
            acc = State.zero()
            st = bt.get(n)
            if st:
                term = self._insert_state(f, st)
                acc = acc + (term if swap_sign > 0 else -term)
            for j, sj in bf.items():
                if j > n:
                    continue
                c = comb(n, j)
                if not c:
                    continue
                m2 = n - 1 - j
                if m2 >= 0:
                    term = self._state_bracket(sj, mt, m2)
                else:
                    term = self._nf_states(sj, State({mt: Scalar.one()}))
                if term:
                    acc = acc + term.scale(Scalar.of(c))
            if acc:
                out[n] = acc
        return out

    def _bracket_composite(self, ma: Monomial, mc: Monomial) -> Dict[int, State]:
        """(f_(-1)U)_(n) mc via the expansion rule."""
        f, mu = self._split_head(ma)
        pf = self.table[f[0]].parity
        pmu = mono_parity(mu, self.table)
        sgn = -1 if (pf and pmu) else 1
        bu = self.bracket_all(mu, mc)
        bf = self.bracket_all((f,), mc)
        fstate = State({(f,): Scalar.one()})
        ustate = State({mu: Scalar.one()})
        nmax = max(bu, default=-1)
        for j, sj in bf.items():
            nmax = max(nmax, j, 1 + j + self._state_bracket_support_left(mu, sj))
        out: Dict[int, State] = {}
        for n in range(0, nmax + 1):
            acc = State.zero()
            for N, st in bu.items():
                if N < n:
                    continue
                acc = acc + self._nf_states(self.dpow(fstate, N - n), st)
            for j, sj in bf.items():
                m2 = n - 1 - j
                if m2 >= 0:
                    term = self._bracket_left_state(mu, sj, m2)
                else:
                    term = self._nf_states(self.dpow(ustate, j - n), sj)
                if term:
                    acc = acc + (term if sgn > 0 else -term)
            if acc:
                out[n] = acc
        return out

    def _split_head(self, m: Monomial) -> Tuple[Factor, Monomial]:
        g, d, p = m[0]
        s = 1 if p > 0 else -1
        rest = ((g, d, p - s),) + m[1:] if p != s else m[1:]
        return (g, d, s), rest

    def _state_bracket(self, a: State, mb: Monomial, n: int) -> State:
        out = State.zero()
        for m, c in a.terms.items():
            st = self.bracket_all(m, mb).get(n)
            if st:
                out = out + st.scale(c)
        return out

    def _bracket_left_state(self, ma: Monomial, b: State, n: int) -> State:
        out = State.zero()
        for m, c in b.terms.items():
            st = self.bracket_all(ma, m).get(n)
            if st:
                out = out + st.scale(c)
        return out

    def _state_bracket_support(self, a: State, mb: Monomial) -> int:
        s = -1
        for m in a.terms:
            s = max(s, max(self.bracket_all(m, mb), default=-1))
        return s

    def _state_bracket_support_left(self, ma: Monomial, b: State) -> int:
        s = -1
        for m in b.terms:
            s = max(s, max(self.bracket_all(ma, m), default=-1))
        return s

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
            sign = (-1) ** (n + 1 + par)
            if sign < 0:
                acc = -acc
            if acc:
                out[n] = acc
        return out

    # -- core recursion: normally ordered products ------------------------------
    def _nf_states(self, a: State, b: State) -> State:
        out = State.zero()
        for ma, ca in a.terms.items():
            for mb, cb in b.terms.items():
                out = out + self._nf(ma, mb).scale(ca * cb)
        return out

    def _nf(self, ma: Monomial, mb: Monomial) -> State:
        if not ma:
            return State({mb: Scalar.one()})
        if not mb:
            return State({ma: Scalar.one()})
        key = (ma, mb)
        hit = self._memo_nf.get(key)
        if hit is not None:
            return hit
        if len(ma) == 1 and abs(ma[0][2]) == 1:
            out = self._insert(ma[0], mb)
        else:
            f, mu = self._split_head(ma)
            pf = self.table[f[0]].parity
            pmu = mono_parity(mu, self.table)
            sgn = -1 if (pf and pmu) else 1
            t0 = self._insert_state(f, self._nf(mu, mb))
            out = t0
            fstate = State({(f,): Scalar.one()})
            ustate = State({mu: Scalar.one()})
            for j, sj in self.bracket_all(mu, mb).items():
                out = out + self._nf_states(self.dpow(fstate, j + 1), sj)
            for j, sj in self.bracket_all((f,), mb).items():
                term = self._nf_states(self.dpow(ustate, j + 1), sj)
                out = out + (term if sgn > 0 else -term)
        self._memo_nf[key] = out
        return out

    def _insert_state(self, u: Factor, a: State) -> State:
        out = State.zero()
        for m, c in a.terms.items():
            out = out + self._insert(u, m).scale(c)
        return out

    def _insert(self, u: Factor, m: Monomial) -> State:
        """u_(-1) m for a unit factor u and canonical monomial m."""
        if not m:
            return State({(u,): Scalar.one()})
        key = (u, m)
        hit = self._memo_insert.get(key)
        if hit is not None:
            return hit
        self._depth += 1
        if self._depth > _MAX_STRAIGHTEN:
            raise NonTerminatingLocalization("straightening bound exceeded in insert")
        try:
            out = self._insert_impl(u, m)
        finally:
            self._depth -= 1
        self._memo_insert[key] = out
        return out

    def _insert_impl(self, u: Factor, m: Monomial) -> State:
        g, d, s = u
        hg, hd, hp = m[0]
        ku, kh = (g, -d), (hg, -hd)
        if ku < kh:
            return State({(u,) + m: Scalar.one()})
        if ku == kh:
            gen = self.table[g]
            if gen.parity == ODD:
                # f(fT) = (f_( -1)f) T; the quasi-associativity corrections cancel
                _, tail = self._split_head(m)
                s0 = self._odd_self_square((g, d, 1))
                return self._nf_states(s0, State({tail: Scalar.one()})) if s0 else State.zero()
            if (s > 0) == (hp > 0):
                return State({((hg, hd, hp + s),) + m[1:]: Scalar.one()})
            # opposite signs: cancel one inverse unit against u
            uinv, rest = self._split_head(m)
            base = State({rest: Scalar.one()})
            out = base
            ustate = State({(u,): Scalar.one()})
            istate = State({(uinv,): Scalar.one()})
            for j, sj in self.bracket_all((uinv,), rest).items():
                out = out - self._nf_states(self.dpow(ustate, j + 1), sj)
            for j, sj in self.bracket_all((u,), rest).items():
                out = out - self._nf_states(self.dpow(istate, j + 1), sj)
            return out
        # ku > kh: commute u past one unit of the head block
        h, tail = self._split_head(m)
        ph = self.table[hg].parity
        pu = self.table[g].parity
        sgn = -1 if (pu and ph) else 1
        inner = self._insert(u, tail)
        out = self._insert_state(h, inner)
        if sgn < 0:
            out = -out
        tstate = State({tail: Scalar.one()})
        for j, sj in self.bracket_all((u,), (h,)).items():
            term = self._nf_states(self.dpow(sj, j + 1), tstate)
            if j % 2:
                term = -term
            out = out + term
        return out

    def _odd_self_square(self, u: Factor) -> State:
        row = self.bracket_all((u,), (u,))
        acc = State.zero()
        for j in range(1, max(row, default=-1) + 2):
            st = row.get(j - 1)
            if st is None or not st:
                continue
            term = self.dpow(st, j)
            if j % 2 == 0:
                term = -term
            acc = acc + term
        return acc.scale(Scalar.of(Fraction(1, 2)))

    # -- public products ---------------------------------------------------------
    def nproduct(self, a: State, n: int, b: State) -> State:
        if n >= 0:
            out = State.zero()
            for ma, ca in a.terms.items():
                for mb, cb in b.terms.items():
                    st = self.bracket_all(ma, mb).get(n)
                    if st:
                        out = out + st.scale(ca * cb)
            return out
        if n == -1:
            return self._nf_states(a, b)
        return self._nf_states(self.dpow(a, -n - 1), b)

    def normal_order(self, *factors: State) -> State:
        """Right-nested (-1)-product of the given states."""
        if not factors:
            return State.vacuum()
        acc = factors[-1]
        for f in reversed(factors[:-1]):
            acc = self.nproduct(f, -1, acc)
        return acc

    def ope(self, a: State, b: State) -> List[Tuple[int, State]]:
        """Finite singular part of a(z)b(w), ordered by descending pole order."""
        acc: Dict[int, State] = {}
        for ma, ca in a.terms.items():
            for mb, cb in b.terms.items():
                for n, st in self.bracket_all(ma, mb).items():
                    t = st.scale(ca * cb)
                    if not t:
                        continue
                    cur = acc.get(n)
                    cur = t if cur is None else cur + t
                    if cur:
                        acc[n] = cur
                    elif n in acc:
                        del acc[n]
        return [(n, acc[n]) for n in sorted(acc, reverse=True)]

    def max_bracket(self, a: State, b: State) -> int:
        top = -1
        for ma in a.terms:
            for mb in b.terms:
                top = max(top, max(self.bracket_all(ma, mb), default=-1))
        return top

    # -- axiom checks --------------------------------------------------------------
    def check_skew(self, a: State, b: State, n: int) -> Tuple[bool, State]:
        pa = self.parity(a)
        pb = self.parity(b)
        if pa is None or pb is None:
            raise EngineError("skew check requires homogeneous parities")
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
        if (-1) ** (n + 1 + pa * pb) < 0:
            rhs = -rhs
        res = lhs - rhs
        return (not res, res)

    def check_borcherds(self, a: State, b: State, c: State, m: int, n: int,
                        k: int) -> Tuple[bool, State]:
        pa = self.parity(a)
        pb = self.parity(b)
        if pa is None or pb is None:
            raise EngineError("Borcherds check requires homogeneous parities")
        sup_ab = self.max_bracket(a, b)
        lhs = State.zero()
        j = 0
        while True:
            if m >= 0 and j > m:
                break
            if n + j > max(sup_ab, -1) and n + j >= 0:
                break
            cmj = comb(m, j)
            if cmj:
                x = self.nproduct(a, n + j, b)
                if x:
                    t = self.nproduct(x, m + k - j, c)
                    if t:
                        lhs = lhs + t.scale(Scalar.of(cmj))
            j += 1
        sup_bc = self.max_bracket(b, c)
        sup_ac = self.max_bracket(a, c)
        rhs = State.zero()
        sgn_inner = (-1) ** (n + pa * pb)
        j = 0
        while True:
            if n >= 0 and j > n:
                break
            if n < 0 and k + j > sup_bc and m + j > sup_ac and k + j >= 0 and m + j >= 0:
                break
            cnj = comb(n, j)
            if cnj:
                t1 = self.nproduct(a, m + n - j, self.nproduct(b, k + j, c))
                t2 = self.nproduct(b, n + k - j, self.nproduct(a, m + j, c))
                term = t1 - (t2 if sgn_inner > 0 else -t2)
                if term:
                    coef = cnj if j % 2 == 0 else -cnj
                    rhs = rhs + term.scale(Scalar.of(coef))
            j += 1
        res = lhs - rhs
        return (not res, res)

    # -- hbar structure ---------------------------------------------------------
    def symbol(self, a: State) -> Tuple[int, State]:
        """Filtration level and leading part of a nonzero state.

        The lattice is spanned by monomials with coefficients of nonnegative
        q-exponent; level n means q^(-2n) a lies in the lattice.
        """
        if not a:
            raise ZeroState("symbol of the zero state")
        lev = None
        for m, c in a.terms.items():
            l = c.min_q() // 2 if c.min_q() >= 0 else -((-c.min_q() + 1) // 2)
            lev = l if lev is None else min(lev, l)
        img = {}
        for m, c in a.terms.items():
            keep = Scalar({e: r for e, r in c.terms.items() if e in (2 * lev, 2 * lev + 1)})
            if keep:
                img[m] = keep
        return lev, State(img)

    def quasiclassical_limit(self):
        """The vertex Poisson algebra on V/hbar V (requires an hbar-adic table)."""
        from .poisson import PoissonVertexAlgebra
        brackets: Dict[Tuple[str, int, str], State] = {}
        for (i, j), row in self._prod.items():
            for n, st in row.items():
                red = st.map_scalars(lambda c: Scalar(
                    {e - 2: r for e, r in c.terms.items() if e == 2}))
                bad = st.map_scalars(lambda c: Scalar(
                    {e: r for e, r in c.terms.items() if e < 2}))
                if bad:
                    raise NotCommutativeModHbar(
                        "product (%s,(%d),%s) does not lie in hbar * lattice"
                        % (self.table[i].name, n, self.table[j].name))
                if red:
                    brackets[(self.table[i].name, n, self.table[j].name)] = red
        return PoissonVertexAlgebra(GeneratorTable(self.table.generators), brackets,
                                    check_axioms=False)

    def rescale_hbar(self, q_weights: Dict[str, int]) -> "VertexAlgebra":
        """Conjugate the table by g -> q^w(g) g; w in q-exponent units."""
        gens = []
        for g in self.table.generators:
            w = q_weights.get(g.name, 0)
            gens.append(Generator(g.name, g.parity, g.conformal_weight,
                                  g.kazhdan_weight + w, g.ghost_number,
                                  g.ad_h_weight, g.invertible))
        products: Dict[Tuple[str, int, str], State] = {}
        for (i, j), row in self._prod.items():
            wi = q_weights.get(self.table[i].name, 0)
            wj = q_weights.get(self.table[j].name, 0)
            for n, st in row.items():
                t = {}
                for m, c in st.terms.items():
                    shift = wi + wj - sum(p * q_weights.get(self.table[g].name, 0)
                                          for g, _, p in m)
                    t[m] = c.shift_q(shift)
                products[(self.table[i].name, n, self.table[j].name)] = State(t)
        return VertexAlgebra(GeneratorTable(gens), products, hbar_adic=True,
                             check_skew_table=False)

    # -- substitution -----------------------------------------------------------
    def substitute(self, a: State, images: Dict[str, State],
                   target: "VertexAlgebra") -> State:
        """Apply the strong-generator substitution homomorphism to a state."""
        out = State.zero()
        for m, c in a.terms.items():
            acc = State.vacuum()
            for g, d, p in reversed(m):
                img = images.get(self.table[g].name)
                if img is None:
                    raise StateError("no image for generator %r" % self.table[g].name)
                if p < 0:
                    img = _invert_state(img, target)
                    p = -p
                fac = img
                for _ in range(d):
                    fac = target.derivative(fac)
                for _ in range(p):
                    acc = target.nproduct(fac, -1, acc)
            out = out + acc.scale(c)
        return out


def _invert_state(img: State, target: VertexAlgebra) -> State:
    """Invert a state of the form c * g^(+-1); anything else is not localizable."""
    if len(img.terms) != 1:
        raise NegativePowerOfNonInvertible("cannot invert a sum")
    (m, c), = img.terms.items()
    if len(m) != 1 or m[0][1] != 0 or abs(m[0][2]) != 1:
        raise NegativePowerOfNonInvertible("cannot invert a composite state")
    g, _, p = m[0]
    if not target.table[g].invertible:
        raise NegativePowerOfNonInvertible(target.table[g].name)
    return State({((g, 0, -p),): Scalar.one() / c})


def tensor(a: VertexAlgebra, b: VertexAlgebra, hbar_adic: Optional[bool] = None) -> VertexAlgebra:
    """Tensor product: disjoint union of tables with vanishing cross products."""
    gens = list(a.table.generators) + list(b.table.generators)
    products: Dict[Tuple[str, int, str], State] = {}
    off = len(a.table)
    for (i, j), row in a._prod.items():
        for n, st in row.items():
            products[(a.table[i].name, n, a.table[j].name)] = st
    for (i, j), row in b._prod.items():
        for n, st in row.items():
            shifted = State({tuple((g + off, d, p) for g, d, p in m): c
                             for m, c in st.terms.items()})
            products[(b.table[i].name, n, b.table[j].name)] = shifted
    if hbar_adic is None:
        hbar_adic = a.hbar_adic or b.hbar_adic
    return VertexAlgebra(GeneratorTable(gens), products, hbar_adic=hbar_adic,
                         check_skew_table=False)
