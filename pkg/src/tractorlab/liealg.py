"""The graded real Lie algebra of infinitesimal CR symmetries of the sphere.

Everything is realized concretely as (n+2)x(n+2) matrices over exact
Gaussian rationals: su(n+1,1) sits inside sl(n+2,C) as the fixed points
of the real-form conjugation for the Hermitian form with unit corners and
identity middle block.  The |2|-grading comes from the diagonal grading
element; bases of the -1/-2 and +1/+2 parts and their Killing-dual bases
drive the homology module.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from .exactnum import QI, QI_ONE, QI_ZERO
from . import linalg

Matrix = List[List[QI]]


def _zeros(size: int) -> Matrix:
    return [[QI_ZERO for _ in range(size)] for _ in range(size)]


def matrix_unit(size: int, r: int, c: int, value: QI = QI_ONE) -> Matrix:
    m = _zeros(size)
    m[r][c] = value
    return m


@dataclass
class BasisTables:
    """Distinguished bases of the -/+ graded parts, indexed 0, 1..n, 1bar..nbar.

    Index convention for directions: 0 is the Reeb slot, 1..n the
    holomorphic slots, n+1..2n their conjugates.
    """

    xi: List[Matrix]
    zeta: List[Matrix]
    xi_dual: List[Matrix]
    pairing_sign: List[int]


@dataclass
class AlgebraContext:
    n: int
    size: int
    herm_form: Matrix
    grading_element: Matrix
    basis: BasisTables = field(repr=False, default=None)

    # -- index utilities ----------------------------------------------

    @property
    def num_directions(self) -> int:
        return 2 * self.n + 1

    def bar_index(self, a: int) -> int:
        """Conjugate direction: fixes 0, swaps sigma and sigma-bar."""
        if a == 0:
            return 0
        if a <= self.n:
            return a + self.n
        return a - self.n

    def is_barred(self, a: int) -> bool:
        return a > self.n

    def direction_weight(self, a: int) -> int:
        """Homogeneity weight of an evaluation slot (2 for Reeb, 1 else)."""
        return 2 if a == 0 else 1

    def all_directions(self) -> range:
        return range(2 * self.n + 1)

    # -- structure ----------------------------------------------------

    def bracket(self, x: Matrix, y: Matrix) -> Matrix:
        return linalg.bracket(x, y)

    def killing_form(self, x: Matrix, y: Matrix) -> QI:
        return linalg.trace(linalg.mat_mul(x, y)) * QI(2 * (self.n + 2))

    def conj_real_form(self, x: Matrix) -> Matrix:
        """Complex conjugation of the complexified algebra relative to the real form."""
        hxh = linalg.mat_mul(self.herm_form,
                             linalg.mat_mul(linalg.conj_transpose(x), self.herm_form))
        return linalg.mat_neg(hxh)

    def grade_of_position(self, r: int, c: int) -> int:
        d = lambda i: 1 if i == 0 else (-1 if i == self.size - 1 else 0)
        return d(r) - d(c)

    def grade_part(self, x: Matrix, grade: int) -> Matrix:
        out = _zeros(self.size)
        for r in range(self.size):
            for c in range(self.size):
                if self.grade_of_position(r, c) == grade:
                    out[r][c] = x[r][c]
        return out

    def grades(self, x: Matrix) -> Dict[int, Matrix]:
        return {g: self.grade_part(x, g) for g in range(-2, 3)
                if not linalg.mat_is_zero(self.grade_part(x, g))}

    def minus_part(self, x: Matrix) -> Matrix:
        return linalg.mat_add(self.grade_part(x, -1), self.grade_part(x, -2))


@dataclass
class GradedElement:
    """A matrix in the (complexified) algebra together with its grading data."""

    ctx: AlgebraContext
    matrix: Matrix

    def grade_part(self, g: int) -> "GradedElement":
        return GradedElement(self.ctx, self.ctx.grade_part(self.matrix, g))

    def grades(self) -> Dict[int, Matrix]:
        return self.ctx.grades(self.matrix)

    def bracket(self, other: "GradedElement") -> "GradedElement":
        return GradedElement(self.ctx, self.ctx.bracket(self.matrix, other.matrix))

    def killing(self, other: "GradedElement") -> QI:
        return self.ctx.killing_form(self.matrix, other.matrix)

    def conj(self) -> "GradedElement":
        return GradedElement(self.ctx, self.ctx.conj_real_form(self.matrix))

    def is_real(self) -> bool:
        return linalg.mat_eq(self.ctx.conj_real_form(self.matrix), self.matrix)


def build_algebra(n: int) -> AlgebraContext:
    if n < 1:
        raise ValueError("CR dimension n must be at least 1")
    size = n + 2
    herm = _zeros(size)
    herm[0][size - 1] = QI_ONE
    herm[size - 1][0] = QI_ONE
    for i in range(1, size - 1):
        herm[i][i] = QI_ONE
    grading = _zeros(size)
    grading[0][0] = QI_ONE
    grading[size - 1][size - 1] = -QI_ONE

    i_unit = QI(0, 1)
    xi: List[Matrix] = [matrix_unit(size, size - 1, 0, i_unit)]
    zeta: List[Matrix] = [matrix_unit(size, 0, size - 1, i_unit)]
    for s in range(1, n + 1):
        xi.append(matrix_unit(size, s, 0))
        zeta.append(matrix_unit(size, 0, s))
    for s in range(1, n + 1):
        xi.append(matrix_unit(size, size - 1, s, -QI_ONE))
        zeta.append(matrix_unit(size, s, size - 1, -QI_ONE))

    # Killing-dual basis of p_+ against xi: the 0-slot pairing is negative.
    pairing_sign = [-1] + [1] * (2 * n)
    half = QI(1, 0) / QI(2 * (n + 2))
    xi_dual = [linalg.mat_scale(z, half * QI(sgn))
               for z, sgn in zip(zeta, pairing_sign)]

    ctx = AlgebraContext(n=n, size=size, herm_form=herm, grading_element=grading)
    ctx.basis = BasisTables(xi=xi, zeta=zeta, xi_dual=xi_dual,
                            pairing_sign=pairing_sign)
    return ctx


def centralizer_in_g0_of_negative_part(ctx: AlgebraContext) -> List[List[QI]]:
    """Solve {F in g0 : [F, xi_0] = [F, xi_sigma] = 0 for all sigma} over R.

    The grade-0 part of the real form is parameterized by real coordinates
    (Re a, Im a, entries of the anti-Hermitian middle block); the returned
    list is a basis of the solution space, so the no-ideal statement is
    the assertion that it is empty.
    """
    n = ctx.n
    size = ctx.size
    # Real parameters: a = p + iq, A = S + iT with S skew-symmetric,
    # T symmetric (A anti-Hermitian), and tr A = a-bar - a = -2iq.
    params: List[Tuple[str, int, int]] = [("p", 0, 0), ("q", 0, 0)]
    for r in range(n):
        for c in range(r + 1, n):
            params.append(("S", r, c))
    for r in range(n):
        for c in range(r, n):
            params.append(("T", r, c))

    def realize(vals: List[QI]) -> Matrix:
        m = _zeros(size)
        p, q = vals[0], vals[1]
        m[0][0] = p + QI(0, 1) * q
        m[size - 1][size - 1] = -(p - QI(0, 1) * q)
        for idx, (kind, r, c) in enumerate(params):
            v = vals[idx]
            if kind == "S":
                m[1 + r][1 + c] = m[1 + r][1 + c] + v
                m[1 + c][1 + r] = m[1 + c][1 + r] - v
            elif kind == "T":
                m[1 + r][1 + c] = m[1 + r][1 + c] + QI(0, 1) * v
                if r != c:
                    m[1 + c][1 + r] = m[1 + c][1 + r] + QI(0, 1) * v
        return m

    # Linear system over the real parameters: the su trace constraint
    # a + tr A - abar = 0 plus all bracket conditions, split into real
    # and imaginary parts so elimination happens over the rationals.
    columns: List[List[QI]] = []
    for j in range(len(params)):
        vals = [QI_ONE if i == j else QI_ZERO for i in range(len(params))]
        F = realize(vals)
        eqs: List[QI] = []
        tr = QI_ZERO
        for r in range(n):
            tr = tr + F[1 + r][1 + r]
        c0 = F[0][0] + tr + F[size - 1][size - 1]
        eqs.extend([QI(c0.re), QI(c0.im)])
        for target in [ctx.basis.xi[s] for s in range(0, n + 1)]:
            br = ctx.bracket(F, target)
            for r in range(size):
                for c in range(size):
                    eqs.append(QI(br[r][c].re))
                    eqs.append(QI(br[r][c].im))
        columns.append(eqs)
    system = [[columns[j][i] for j in range(len(params))]
              for i in range(len(columns[0]))]
    return linalg.nullspace(system)
