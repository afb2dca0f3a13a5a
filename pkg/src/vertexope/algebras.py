"""Constructors for the built-in algebras: sl_n data, affine vertex algebras
and their hbar-adic rescalings, Clifford and skewed Clifford ghosts, and
beta-gamma chart algebras with an optional closed 3-form twist.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .scalar import Scalar
from .state import EVEN, ODD, Generator, GeneratorTable, State
from .vertex import VertexAlgebra


class LieDataError(Exception):
    pass


class NotClosedThreeForm(Exception):
    pass


@dataclass
class LieData:
    """A finite-dimensional Lie algebra with invariant form and optional
    sl2-triple; structure constants are exact rationals."""

    names: List[str]
    # brackets[(i, j)] = {k: c} meaning [x_i, x_j] = sum c x_k; stored for i < j
    brackets: Dict[Tuple[int, int], Dict[int, Fraction]]
    form: Dict[Tuple[int, int], Fraction]  # symmetric, stored for i <= j
    dual_coxeter: Optional[int] = None
    triple: Optional[Tuple[str, str, str]] = None  # (e, h, f)
    ad_h: Optional[Dict[str, Fraction]] = None

    def index(self, name: str) -> int:
        return self.names.index(name)

    def bracket(self, i: int, j: int) -> Dict[int, Fraction]:
        if i == j:
            return {}
        if i < j:
            return self.brackets.get((i, j), {})
        return {k: -c for k, c in self.brackets.get((j, i), {}).items()}

    def pairing(self, i: int, j: int) -> Fraction:
        if i > j:
            i, j = j, i
        return self.form.get((i, j), Fraction(0))

    def check(self):
        n = len(self.names)
        for i in range(n):
            for j in range(n):
                for l in range(n):
                    # Jacobi: [[xi,xj],xl] + [[xj,xl],xi] + [[xl,xi],xj] = 0
                    acc: Dict[int, Fraction] = {}
                    for (a, b, c) in ((i, j, l), (j, l, i), (l, i, j)):
                        for m, cm in self.bracket(a, b).items():
                            for k, ck in self.bracket(m, c).items():
                                acc[k] = acc.get(k, Fraction(0)) + cm * ck
                    if any(v for v in acc.values()):
                        raise LieDataError("Jacobi fails on (%d,%d,%d)" % (i, j, l))
        for i in range(n):
            for j in range(n):
                for l in range(n):
                    # invariance ([xi,xj], xl) = (xi, [xj,xl])
                    lhs = sum((c * self.pairing(k, l) for k, c in self.bracket(i, j).items()),
                              Fraction(0))
                    rhs = sum((c * self.pairing(i, k) for k, c in self.bracket(j, l).items()),
                              Fraction(0))
                    if lhs != rhs:
                        raise LieDataError("form not invariant on (%d,%d,%d)" % (i, j, l))
        if self.triple:
            e, h, f = (self.index(x) for x in self.triple)
            if self._vec_ne(self.bracket(e, f), {h: Fraction(1)}):
                raise LieDataError("[e,f] != h")
            if self._vec_ne(self.bracket(h, e), {e: Fraction(2)}):
                raise LieDataError("[h,e] != 2e")
            if self._vec_ne(self.bracket(h, f), {f: Fraction(-2)}):
                raise LieDataError("[h,f] != -2f")

    @staticmethod
    def _vec_ne(a: Dict[int, Fraction], b: Dict[int, Fraction]) -> bool:
        keys = set(a) | set(b)
        return any(a.get(k, Fraction(0)) != b.get(k, Fraction(0)) for k in keys)

    def grading(self) -> Dict[str, Fraction]:
        if self.ad_h is not None:
            return self.ad_h
        raise LieDataError("no ad_h grading available")


@dataclass
class SubalgebraData:
    """A nilpotent subalgebra m with character chi = (f, .)."""

    lie: LieData
    basis: List[str]
    chi: Dict[str, Fraction]

    def check_character(self):
        idx = [self.lie.index(b) for b in self.basis]
        for i in idx:
            for j in idx:
                br = self.lie.bracket(i, j)
                for k, c in br.items():
                    if self.lie.names[k] not in self.basis and c:
                        raise LieDataError("m is not closed under bracket")
                val = sum((c * self.chi.get(self.lie.names[k], Fraction(0))
                           for k, c in br.items()), Fraction(0))
                if val:
                    raise LieDataError("chi is not a character of m")


def _sl_basis(n: int):
    """Matrix units E_ij (i != j) and Cartans H_i = E_ii - E_{i+1,i+1}."""
    names = []
    mats = []
    for i in range(n):
        for j in range(n):
            if i != j:
                names.append("E%d%d" % (i + 1, j + 1))
                m = [[Fraction(0)] * n for _ in range(n)]
                m[i][j] = Fraction(1)
                mats.append(m)
    for i in range(n - 1):
        names.append("H%d" % (i + 1))
        m = [[Fraction(0)] * n for _ in range(n)]
        m[i][i] = Fraction(1)
        m[i + 1][i + 1] = Fraction(-1)
        mats.append(m)
    return names, mats


def _mat_mul(a, b):
    n = len(a)
    return [[sum((a[i][k] * b[k][j] for k in range(n)), Fraction(0)) for j in range(n)]
            for i in range(n)]


def _mat_sub(a, b):
    n = len(a)
    return [[a[i][j] - b[i][j] for j in range(len(a))] for i in range(n)]


def _mat_trace(a) -> Fraction:
    return sum((a[i][i] for i in range(len(a))), Fraction(0))


def _expand_in_basis(m, mats) -> Dict[int, Fraction]:
    """Expand a traceless matrix in the sl_n basis."""
    n = len(m)
    out: Dict[int, Fraction] = {}
    work = [row[:] for row in m]
    idx = 0
    for i in range(n):
        for j in range(n):
            if i != j:
                if work[i][j]:
                    out[idx] = work[i][j]
                    work[i][j] = Fraction(0)
                idx += 1
    # remaining diagonal: express via H_i
    acc = Fraction(0)
    for i in range(n - 1):
        acc += work[i][i]
        if acc:
            out[idx] = acc
        idx += 1
    return out


def lie_sl(n: int) -> LieData:
    """sl_2 or sl_3 with trace form and the reduction sl2-triple."""
    if n not in (2, 3):
        raise LieDataError("only sl2 and sl3 are built in")
    names, mats = _sl_basis(n)
    brackets: Dict[Tuple[int, int], Dict[int, Fraction]] = {}
    form: Dict[Tuple[int, int], Fraction] = {}
    for i in range(len(names)):
        for j in range(len(names)):
            if i < j:
                comm = _mat_sub(_mat_mul(mats[i], mats[j]), _mat_mul(mats[j], mats[i]))
                vec = _expand_in_basis(comm, mats)
                if vec:
                    brackets[(i, j)] = vec
            if i <= j:
                tr = _mat_trace(_mat_mul(mats[i], mats[j]))
                if tr:
                    form[(i, j)] = tr
    if n == 2:
        triple = ("E12", "H1", "E21")
        hmat = mats[names.index("H1")]
    else:
        triple = ("E12", "H1", "E21")
        hmat = mats[names.index("H1")]
    ad_h: Dict[str, Fraction] = {}
    for nm, m in zip(names, mats):
        comm = _mat_sub(_mat_mul(hmat, m), _mat_mul(m, hmat))
        vec = _expand_in_basis(comm, mats)
        self_idx = names.index(nm)
        if not vec:
            ad_h[nm] = Fraction(0)
        elif set(vec) == {self_idx}:
            ad_h[nm] = vec[self_idx]
        else:
            raise LieDataError("ad h is not diagonal on %s" % nm)
    ld = LieData(names, brackets, form, dual_coxeter=n, triple=triple, ad_h=ad_h)
    ld.check()
    return ld


def sl3_m_subalgebra(lie: LieData) -> SubalgebraData:
    """m = l + g_{>=2} for sl3 minimal f = E21: basis {E12, E13}."""
    chi = {"E12": Fraction(1), "E13": Fraction(0)}
    sub = SubalgebraData(lie, ["E12", "E13"], chi)
    sub.check_character()
    return sub


def sl2_m_subalgebra(lie: LieData) -> SubalgebraData:
    chi = {"E12": Fraction(1)}
    sub = SubalgebraData(lie, ["E12"], chi)
    sub.check_character()
    return sub


def affine_vk(lie: LieData, level: Optional[Scalar] = None) -> VertexAlgebra:
    """V^k(g): x_(0)y = [x,y], x_(1)y = k (x,y) 1, higher products vanish."""
    if level is None:
        level = Scalar.k()
    ad_h = lie.ad_h or {}
    gens = [Generator(nm, EVEN, Fraction(1), -ad_h.get(nm, Fraction(0)), 0,
                      ad_h.get(nm)) for nm in lie.names]
    table = GeneratorTable(gens)
    products: Dict[Tuple[str, int, str], State] = {}
    n = len(lie.names)
    for i in range(n):
        for j in range(i, n):
            br = lie.bracket(i, j)
            if br:
                st = State({((k, 0, 1),): Scalar.of(c) for k, c in br.items()})
                products[(lie.names[i], 0, lie.names[j])] = st
            pr = lie.pairing(i, j)
            if pr:
                products[(lie.names[i], 1, lie.names[j])] = State.vacuum(level.scale(pr))
    return VertexAlgebra(table, products)


def affine_vk_hbar(lie: LieData, level: Optional[Scalar] = None) -> VertexAlgebra:
    """V^k(g)_hbar on hatted currents: x^_(0)y^ = hbar [x,y]^, x^_(1)y^ = hbar^2 k (x,y)."""
    base = affine_vk(lie, level)
    return base.rescale_hbar({nm: 2 for nm in lie.names})


def clifford(names: Sequence[str], pairing: Optional[Dict[Tuple[int, int], Fraction]] = None,
             ad_h: Optional[Dict[str, Fraction]] = None, hbar: bool = False) -> VertexAlgebra:
    """Clifford vertex algebra on odd pairs phi_i, phi*_i with
    phi_i (0) phi*_j = <i,j> 1 (identity pairing by default).

    The hbar variant rescales phi^ = hbar phi and phi*^ = phi*.
    """
    ad_h = ad_h or {}
    gens = []
    for nm in names:
        w = ad_h.get(nm, Fraction(0))
        gens.append(Generator("phi_" + nm, ODD, Fraction(1), -w, -1, w))
    for nm in names:
        w = ad_h.get(nm, Fraction(0))
        gens.append(Generator("phi*_" + nm, ODD, Fraction(0), w, 1, -w))
    table = GeneratorTable(gens)
    products: Dict[Tuple[str, int, str], State] = {}
    for a, na in enumerate(names):
        for b, nb in enumerate(names):
            c = Fraction(1) if (pairing is None and a == b) else (
                pairing.get((a, b), Fraction(0)) if pairing else Fraction(0))
            if c:
                products[("phi_" + na, 0, "phi*_" + nb)] = State.vacuum(Scalar.of(c))
    alg = VertexAlgebra(table, products)
    if hbar:
        alg = alg.rescale_hbar({"phi_" + nm: 2 for nm in names})
    return alg


def skewed_clifford(v_names: Sequence[str], w_names: Sequence[str],
                    pairing: Dict[Tuple[int, int], Fraction],
                    ad_h_v: Optional[Dict[str, Fraction]] = None,
                    ad_h_w: Optional[Dict[str, Fraction]] = None,
                    hbar: bool = False) -> VertexAlgebra:
    """Skewed Clifford algebra Cl(V, W): odd phi*_a (a in V) and phi_w (w in W)
    with only the cross products given by the pairing <a, w>."""
    ad_h_v = ad_h_v or {}
    ad_h_w = ad_h_w or {}
    gens = []
    for nm in w_names:
        h = ad_h_w.get(nm, Fraction(0))
        gens.append(Generator("phi_" + nm, ODD, Fraction(1), -h, -1, h))
    for nm in v_names:
        h = ad_h_v.get(nm, Fraction(0))
        gens.append(Generator("phi*_" + nm, ODD, Fraction(0), -h, 1, h))
    table = GeneratorTable(gens)
    products: Dict[Tuple[str, int, str], State] = {}
    for a, na in enumerate(v_names):
        for b, nb in enumerate(w_names):
            c = pairing.get((a, b), Fraction(0))
            if c:
                products[("phi*_" + na, 0, "phi_" + nb)] = State.vacuum(Scalar.of(c))
    alg = VertexAlgebra(table, products)
    if hbar:
        alg = alg.rescale_hbar({"phi_" + nm: 2 for nm in w_names})
    return alg


# -- beta-gamma charts --------------------------------------------------------

ThreeForm = Dict[Tuple[int, int, int], "object"]  # (i<j<k) -> SPoly in the x's


def betagamma_chart(dim: int, three_form: Optional[ThreeForm] = None,
                    hbar: bool = False, invertible_x: bool = True,
                    invertible_d: bool = False,
                    x_kazhdan: Optional[Sequence[Fraction]] = None,
                    d_kazhdan: Optional[Sequence[Fraction]] = None,
                    x_names: Optional[Sequence[str]] = None,
                    d_names: Optional[Sequence[str]] = None) -> VertexAlgebra:
    """Chart CDO: functions x_i and vector fields d_i with d_i (0) x_j = delta,
    and d_i (0) d_j twisted by a closed 3-form; hbar variant rescales d^ = hbar d.
    """
    from .poisson import SPoly, form_d3_is_closed, iota_iota_threeform
    if three_form:
        if not form_d3_is_closed(three_form, dim):
            raise NotClosedThreeForm("three-form is not closed")
    x_names = list(x_names) if x_names else ["x%d" % (i + 1) for i in range(dim)]
    d_names = list(d_names) if d_names else ["d%d" % (i + 1) for i in range(dim)]
    gens = []
    # the kazhdan arguments are the weights of the final (hatted) generators
    for i in range(dim):
        kz = x_kazhdan[i] if x_kazhdan else Fraction(0)
        gens.append(Generator(x_names[i], EVEN, Fraction(0), kz, 0, None, invertible_x))
    for i in range(dim):
        kz = (d_kazhdan[i] if d_kazhdan else Fraction(2 if hbar else 0))
        if hbar:
            kz -= 2
        gens.append(Generator(d_names[i], EVEN, Fraction(1), kz, 0, None, invertible_d))
    table = GeneratorTable(gens)
    products: Dict[Tuple[str, int, str], State] = {}
    for i in range(dim):
        products[(d_names[i], 0, x_names[i])] = State.vacuum()
    if three_form:
        for i in range(dim):
            for j in range(dim):
                # d_i (0) d_j = iota_{d_j} iota_{d_i} alpha, a 1-form
                st = iota_iota_threeform(three_form, i, j, dim)
                if st:
                    products[(d_names[i], 0, d_names[j])] = st
    alg = VertexAlgebra(table, products)
    if hbar:
        alg = alg.rescale_hbar({nm: 2 for nm in d_names})
    return alg


def symplectic_pair_hbar(names: Tuple[str, str], omega: Fraction) -> VertexAlgebra:
    """KRW neutral beta-gamma pair: Phi^_a (0) Phi^_b = omega(a,b) hbar with
    Phi^ = sqrt(hbar) Phi, so each field carries Kazhdan weight 1."""
    a, b = names
    gens = [Generator(a, EVEN, Fraction(1, 2), Fraction(1), 0, None),
            Generator(b, EVEN, Fraction(1, 2), Fraction(1), 0, None)]
    table = GeneratorTable(gens)
    products = {(a, 0, b): State.vacuum(Scalar.hbar(1, omega))}
    return VertexAlgebra(table, products, hbar_adic=True)
