"""Exact linear algebra over the fraction field of Q(k)[q, q^-1].

Matrix entries are fractions of Scalars; elimination is plain Gaussian with
exact arithmetic (the scalars stay tiny at desk scale, so no fraction-free
optimizations are needed beyond monomial content stripping).
"""

from __future__ import annotations

from typing import List, Optional, Tuple

from .scalar import Scalar


class SFrac:
    """num/den with Scalar entries; den is never zero."""

    __slots__ = ("num", "den")

    def __init__(self, num: Scalar, den: Scalar = None):
        if den is None:
            den = Scalar.one()
        if not den:
            raise ZeroDivisionError("SFrac with zero denominator")
        if not num:
            den = Scalar.one()
        else:
            # strip a common q-monomial content to keep supports small
            nq = num.min_q()
            dq = den.min_q()
            shift = min(nq, dq)
            if shift:
                num = num.shift_q(-shift)
                den = den.shift_q(-shift)
        self.num = num
        self.den = den

    @staticmethod
    def of(s: Scalar) -> "SFrac":
        return SFrac(s)

    @staticmethod
    def zero() -> "SFrac":
        return SFrac(Scalar.zero())

    @staticmethod
    def one() -> "SFrac":
        return SFrac(Scalar.one())

    def is_zero(self) -> bool:
        return not self.num

    def __bool__(self):
        return bool(self.num)

    def __add__(self, o: "SFrac") -> "SFrac":
        if not self.num:
            return o
        if not o.num:
            return self
        if self.den == o.den:
            return SFrac(self.num + o.num, self.den)
        return SFrac(self.num * o.den + o.num * self.den, self.den * o.den)

    def __sub__(self, o: "SFrac") -> "SFrac":
        return self + (-o)

    def __neg__(self) -> "SFrac":
        return SFrac(-self.num, self.den)

    def __mul__(self, o: "SFrac") -> "SFrac":
        if not self.num or not o.num:
            return SFrac.zero()
        return SFrac(self.num * o.num, self.den * o.den)

    def __truediv__(self, o: "SFrac") -> "SFrac":
        if not o.num:
            raise ZeroDivisionError("division by zero SFrac")
        return SFrac(self.num * o.den, self.den * o.num)

    def __eq__(self, o) -> bool:
        return isinstance(o, SFrac) and not (self - o)

    def __repr__(self):
        if self.den == Scalar.one():
            return repr(self.num)
        return "(%r)/(%r)" % (self.num, self.den)


Matrix = List[List[SFrac]]


def row_echelon(m: Matrix) -> Tuple[Matrix, List[int]]:
    """In-place row echelon form; returns (matrix, pivot column list)."""
    if not m:
        return m, []
    rows, cols = len(m), len(m[0])
    pivots = []
    r = 0
    for c in range(cols):
        pr = None
        for i in range(r, rows):
            if m[i][c]:
                pr = i
                break
        if pr is None:
            continue
        m[r], m[pr] = m[pr], m[r]
        inv = SFrac.one() / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(rows):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return m, pivots


def rank(m: Matrix) -> int:
    if not m:
        return 0
    work = [row[:] for row in m]
    _, piv = row_echelon(work)
    return len(piv)


def kernel_basis(m: Matrix, ncols: int) -> List[List[SFrac]]:
    """Basis of the kernel of the linear map given by columns acting on R^ncols."""
    if not m:
        return [[SFrac.one() if i == j else SFrac.zero() for j in range(ncols)]
                for i in range(ncols)]
    work = [row[:] for row in m]
    _, piv = row_echelon(work)
    pivset = set(piv)
    free = [c for c in range(ncols) if c not in pivset]
    basis = []
    for fc in free:
        vec = [SFrac.zero()] * ncols
        vec[fc] = SFrac.one()
        for r, pc in enumerate(piv):
            vec[pc] = -work[r][fc]
        basis.append(vec)
    return basis


def solve(m: Matrix, b: List[SFrac]) -> Optional[List[SFrac]]:
    """One solution of M x = b, or None if inconsistent."""
    if not m:
        return None if any(x for x in b) else []
    rows, cols = len(m), len(m[0])
    aug = [m[i][:] + [b[i]] for i in range(rows)]
    _, piv = row_echelon(aug)
    if cols in piv:
        return None
    x = [SFrac.zero()] * cols
    for r, pc in enumerate(piv):
        x[pc] = aug[r][cols]
    return x
