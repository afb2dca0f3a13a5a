"""Chart atlas for the resolved sl3 Slodowy slice: three hbar-adic beta-gamma
charts with anomalous transition maps, their classical shadows, the quiver
presentation of the singularity, and generic gluing checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .scalar import Scalar
from .state import Generator, GeneratorTable, State, render_state
from .vertex import VertexAlgebra
from .poisson import (PoissonAlgebra, PoissonVertexAlgebra, SPoly, TwoForm,
                      ThreeFormData, form_d2, iota_vector_twoform, jet_pva,
                      oneform_to_state)
from .algebras import betagamma_chart, NotClosedThreeForm


class MorphismResidual(Exception):
    def __init__(self, residuals):
        self.residuals = residuals
        super().__init__("transition is not a vertex morphism: %r" % (residuals,))


class CocycleViolation(Exception):
    pass


@dataclass
class Chart:
    name: str
    algebra: VertexAlgebra
    classical: PoissonVertexAlgebra
    x_name: str
    d_name: str


@dataclass
class TransitionMap:
    source: str
    target: str
    images: Dict[str, State]
    classical_images: Dict[str, State]


@dataclass
class ChartAtlas:
    charts: Dict[str, Chart]
    transitions: Dict[Tuple[str, str], TransitionMap]

    def chart(self, name: str) -> Chart:
        return self.charts[name]

    def transition(self, src: str, tgt: str) -> TransitionMap:
        return self.transitions[(src, tgt)]


def _classical_chart(i: int) -> PoissonVertexAlgebra:
    xn, dn = "x%d" % i, "d%d" % i
    p = PoissonAlgebra([(xn, 0), (dn, 0)],
                       {(1, 0): SPoly.const(1)}, check=True)
    kz = {xn: Fraction(2 * (i - 2)), dn: Fraction(2 - 2 * (i - 2))}
    return jet_pva(p, invertible=[xn, dn], kazhdan=kz)


def build_slodowy_atlas() -> ChartAtlas:
    """Three charts U1, U2, U3 with the quantized transition maps

        x_{i+1} = :x_i^2 d_i: + 2 hbar dx_i,   d_{i+1} = x_i^{-1},
        x_i = d_{i+1}^{-1},                    d_i = :d_{i+1}^2 x_{i+1}: - 2 hbar d(d_{i+1}).
    """
    hb = Scalar.hbar()
    charts: Dict[str, Chart] = {}
    for i in (1, 2, 3):
        alg = betagamma_chart(
            1, hbar=True, invertible_x=True, invertible_d=True,
            x_names=["x%d" % i], d_names=["d%d" % i],
            x_kazhdan=[Fraction(2 * (i - 2))], d_kazhdan=[Fraction(2 - 2 * (i - 2))])
        charts["U%d" % i] = Chart("U%d" % i, alg, _classical_chart(i),
                                  "x%d" % i, "d%d" % i)
    transitions: Dict[Tuple[str, str], TransitionMap] = {}
    for i in (1, 2):
        j = i + 1
        ui, uj = charts["U%d" % i], charts["U%d" % j]
        ti, tj = ui.algebra, uj.algebra
        xi, di = "x%d" % i, "d%d" % i
        xj, dj = "x%d" % j, "d%d" % j
        # U_{i+1} generators inside localized U_i
        fwd = {
            xj: ti.normal_order(ti.gen(xi), ti.gen(xi), ti.gen(di))
                + ti.gen(xi, der=1).scale(hb.scale(2)),
            dj: ti.gen(xi, power=-1),
        }
        fwd_cl = {
            xj: ui.classical.mul(ui.classical.mul(ui.classical.gen(xi), ui.classical.gen(xi)),
                                 ui.classical.gen(di)),
            dj: ui.classical.gen(xi, power=-1),
        }
        # U_i generators inside localized U_{i+1}
        bwd = {
            xi: tj.gen(dj, power=-1),
            di: tj.normal_order(tj.gen(dj), tj.gen(dj), tj.gen(xj))
                - tj.gen(dj, der=1).scale(hb.scale(2)),
        }
        bwd_cl = {
            xi: uj.classical.gen(dj, power=-1),
            di: uj.classical.mul(uj.classical.mul(uj.classical.gen(dj), uj.classical.gen(dj)),
                                 uj.classical.gen(xj)),
        }
        transitions[("U%d" % j, "U%d" % i)] = TransitionMap("U%d" % j, "U%d" % i, fwd, fwd_cl)
        transitions[("U%d" % i, "U%d" % j)] = TransitionMap("U%d" % i, "U%d" % j, bwd, bwd_cl)
    return ChartAtlas(charts, transitions)


def transport(atlas: ChartAtlas, t: TransitionMap, a: State) -> State:
    src = atlas.chart(t.source).algebra
    tgt = atlas.chart(t.target).algebra
    return src.substitute(a, t.images, tgt)


def transport_classical(atlas: ChartAtlas, t: TransitionMap, a: State) -> State:
    src = atlas.chart(t.source).classical
    tgt = atlas.chart(t.target).classical
    return src.substitute(a, t.classical_images, tgt)


def check_transition_morphism(atlas: ChartAtlas, t: TransitionMap,
                              raise_on_fail: bool = False) -> List[Tuple[str, int, str, State]]:
    """Recompute all singular products of the transition images in the
    localized target and compare with the source table."""
    src = atlas.chart(t.source).algebra
    tgt = atlas.chart(t.target).algebra
    residuals = []
    names = [g.name for g in src.table.generators]
    for na in names:
        for nb in names:
            got = {n: st for n, st in tgt.ope(t.images[na], t.images[nb])}
            want_src = src.ope(src.gen(na), src.gen(nb))
            want = {n: src.substitute(st, t.images, tgt) for n, st in want_src}
            for n in set(got) | set(want):
                res = got.get(n, State.zero()) - want.get(n, State.zero())
                if res:
                    residuals.append((na, n, nb, res))
    if residuals and raise_on_fail:
        raise MorphismResidual(residuals)
    return residuals


def check_transition_morphism_classical(atlas: ChartAtlas, t: TransitionMap)\
        -> List[Tuple[str, int, str, State]]:
    src = atlas.chart(t.source).classical
    tgt = atlas.chart(t.target).classical
    residuals = []
    names = [g.name for g in src.table.generators]
    for na in names:
        for nb in names:
            for n in range(0, 3):
                got = tgt.nproduct(t.classical_images[na], n, t.classical_images[nb])
                want = src.substitute(src.nproduct(src.gen(na), n, src.gen(nb)),
                                      t.classical_images, tgt)
                if got - want:
                    residuals.append((na, n, nb, got - want))
    return residuals


def classical_shadow(atlas: ChartAtlas, chart_name: str, a: State) -> Tuple[int, State]:
    """hbar-symbol of a quantum chart state as a classical chart state."""
    ch = atlas.chart(chart_name)
    lev, img = ch.algebra.symbol(a)
    cl = State({m: c.shift_q(-2 * lev) for m, c in img.terms.items()})
    return lev, cl


# ---------------------------------------------------------------------------
# quiver presentation R = C[u,v]/<u1v1 = u2v2 = u3v3>

_QNAMES = ["u1", "u2", "u3", "v1", "v2", "v3"]


def _qreduce(mono: Tuple[int, ...]) -> Tuple[int, ...]:
    """Confluent rewriting: replace u2v2 and u3v3 by u1v1."""
    m = list(mono)
    # indices: u1 u2 u3 v1 v2 v3 = 0 1 2 3 4 5
    while m[1] and m[4]:
        m[1] -= 1
        m[4] -= 1
        m[0] += 1
        m[3] += 1
    while m[2] and m[5]:
        m[2] -= 1
        m[5] -= 1
        m[0] += 1
        m[3] += 1
    return tuple(m)


class QuiverPoly:
    """Polynomial in the quiver ring, kept in rewritten normal form."""

    def __init__(self, terms: Optional[Dict[Tuple[int, ...], Fraction]] = None):
        t: Dict[Tuple[int, ...], Fraction] = {}
        for m, c in (terms or {}).items():
            if not c:
                continue
            m = _qreduce(m)
            s = t.get(m, Fraction(0)) + c
            if s:
                t[m] = s
            elif m in t:
                del t[m]
        self.terms = t

    @staticmethod
    def var(name: str) -> "QuiverPoly":
        i = _QNAMES.index(name)
        m = [0] * 6
        m[i] = 1
        return QuiverPoly({tuple(m): Fraction(1)})

    @staticmethod
    def monomial(**exps) -> "QuiverPoly":
        m = [0] * 6
        for nm, e in exps.items():
            m[_QNAMES.index(nm)] = e
        return QuiverPoly({tuple(m): Fraction(1)})

    def __mul__(self, other: "QuiverPoly") -> "QuiverPoly":
        out: Dict[Tuple[int, ...], Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _qreduce(tuple(a + b for a, b in zip(m1, m2)))
                s = out.get(m, Fraction(0)) + c1 * c2
                if s:
                    out[m] = s
                elif m in out:
                    del out[m]
        return QuiverPoly(out)

    def __sub__(self, other: "QuiverPoly") -> "QuiverPoly":
        t = dict(self.terms)
        for m, c in other.terms.items():
            s = t.get(m, Fraction(0)) - c
            if s:
                t[m] = s
            elif m in t:
                del t[m]
        q = QuiverPoly.__new__(QuiverPoly)
        q.terms = t
        return q

    def __eq__(self, other):
        return isinstance(other, QuiverPoly) and self.terms == other.terms

    def __bool__(self):
        return bool(self.terms)

    def t_weight(self) -> Optional[Tuple[int, int, int]]:
        """Common T-weight; u_i has weight eps_{i-1} - eps_i (indices mod 3)."""
        ws = set()
        for m in self.terms:
            w = [0, 0, 0]
            for i in range(3):
                # u_{i+1}: eps_i - eps_{i+1}
                w[i % 3] += m[i]
                w[(i + 1) % 3] -= m[i]
                # v_{i+1}: eps_{i+1} - eps_i
                w[(i + 1) % 3] += m[3 + i]
                w[i % 3] -= m[3 + i]
            ws.add(tuple(w))
            if len(ws) > 1:
                return None
        return ws.pop() if ws else (0, 0, 0)


class QuiverFraction:
    """A fraction of quiver polynomials; equality by cross-multiplication."""

    def __init__(self, num: QuiverPoly, den: QuiverPoly):
        self.num = num
        self.den = den

    @staticmethod
    def of(num: QuiverPoly, den: Optional[QuiverPoly] = None) -> "QuiverFraction":
        return QuiverFraction(num, den or QuiverPoly({(0,) * 6: Fraction(1)}))

    def __mul__(self, other: "QuiverFraction") -> "QuiverFraction":
        return QuiverFraction(self.num * other.num, self.den * other.den)

    def inverse(self) -> "QuiverFraction":
        return QuiverFraction(self.den, self.num)

    def __eq__(self, other):
        return not (self.num * other.den - other.num * self.den)

    def t_weight(self):
        wn = self.num.t_weight()
        wd = self.den.t_weight()
        if wn is None or wd is None:
            return None
        return tuple(a - b for a, b in zip(wn, wd))


def quiver_coordinates() -> Dict[str, QuiverFraction]:
    """The chart coordinates as elements of the localized quiver ring."""
    Q = QuiverPoly.monomial
    return {
        "x1": QuiverFraction(Q(u1=1, v3=1), Q(v2=1, v3=2)),
        "x2": QuiverFraction(Q(u1=2, u2=1), Q(u1=1, v3=1)),
        "x3": QuiverFraction.of(Q(u1=1, u2=1, u3=1)),
        "d1": QuiverFraction.of(Q(v1=1, v2=1, v3=1)),
        "d2": QuiverFraction(Q(v2=1, v3=2), Q(u1=1, v3=1)),
        "d3": QuiverFraction(Q(u1=1, v3=1), Q(u1=2, u2=1)),
    }


def quiver_verify() -> Dict[str, bool]:
    """Check the classical transition relations and the torus weights in the
    quiver ring, and the singularity h^3 = ab for h = u1v1, a = u..., b = v...."""
    co = quiver_coordinates()
    report: Dict[str, bool] = {}
    for i in (1, 2):
        j = i + 1
        report["x%d = d%d^-1" % (i, j)] = co["x%d" % i] == co["d%d" % j].inverse()
        report["x%d = x%d^2 d%d" % (j, i, i)] = \
            co["x%d" % j] == co["x%d" % i] * co["x%d" % i] * co["d%d" % i]
        report["d%d = d%d^2 x%d" % (i, j, j)] = \
            co["d%d" % i] == co["d%d" % j] * co["d%d" % j] * co["x%d" % j]
    a = QuiverPoly.monomial(u1=1, u2=1, u3=1)
    b = QuiverPoly.monomial(v1=1, v2=1, v3=1)
    h = QuiverPoly.monomial(u1=1, v1=1)
    report["h^3 = ab"] = not (h * h * h - a * b)
    report["u1 weight"] = QuiverPoly.var("u1").t_weight() == (1, -1, 0)
    theta = (2, -1, -1)
    sections = {"u1^2 u2": QuiverPoly.monomial(u1=2, u2=1),
                "v2 v3^2": QuiverPoly.monomial(v2=1, v3=2),
                "u1 v3": QuiverPoly.monomial(u1=1, v3=1)}
    for nm, poly in sections.items():
        report["section %s has weight theta" % nm] = poly.t_weight() == theta
    for nm in ("x1", "x2", "x3", "d1", "d2", "d3"):
        report["%s is T-invariant" % nm] = co[nm].t_weight() == (0, 0, 0)
    for nm, poly in (("a", a), ("b", b), ("h", h)):
        report["%s invariant" % nm] = poly.t_weight() == (0, 0, 0)
    return report


# ---------------------------------------------------------------------------
# generic gluing checks on a model chart


def generic_glue_check(dim: int, phi: Dict[int, Dict[int, SPoly]],
                       alpha: Optional[ThreeFormData] = None,
                       beta: Optional[TwoForm] = None) -> List[Tuple[str, int, str, State]]:
    """Verify that d_j -> d_j + phi_j / d_j -> d_j + iota_{d_j} beta is a vertex
    morphism from the alpha-twisted chart to the (alpha + d beta)-twisted one.

    phi maps j -> one-form (dict i -> coefficient poly); if beta is given, phi
    is ignored and the one-forms iota_{d_j} beta are used with target twist
    alpha + d(beta).
    """
    src = betagamma_chart(dim, three_form=alpha, invertible_x=False)
    if beta is not None:
        target_alpha = _add_threeform(alpha, form_d2(beta, dim))
        phi = {j: iota_vector_twoform(j, beta, dim) for j in range(dim)}
    else:
        target_alpha = alpha
        phi = phi or {}
    tgt = betagamma_chart(dim, three_form=target_alpha, invertible_x=False)
    images: Dict[str, State] = {}
    for i in range(dim):
        images["x%d" % (i + 1)] = tgt.gen("x%d" % (i + 1))
        st = tgt.gen("d%d" % (i + 1))
        w = phi.get(i)
        if w:
            st = st + oneform_to_state(w, tgt.table, lambda a: a)
        images["d%d" % (i + 1)] = st
    residuals = []
    names = [g.name for g in src.table.generators]
    for na in names:
        for nb in names:
            got = dict(tgt.ope(images[na], images[nb]))
            want_src = src.ope(src.gen(na), src.gen(nb))
            want = {n: src.substitute(st, images, tgt) for n, st in want_src}
            for n in set(got) | set(want):
                res = got.get(n, State.zero()) - want.get(n, State.zero())
                if res:
                    residuals.append((na, n, nb, res))
    return residuals


def _add_threeform(a: Optional[ThreeFormData], b: ThreeFormData) -> ThreeFormData:
    out = dict(a or {})
    for idx, coef in b.items():
        cur = out.get(idx, SPoly.zero()) + coef
        if cur:
            out[idx] = cur
        elif idx in out:
            del out[idx]
    return out
