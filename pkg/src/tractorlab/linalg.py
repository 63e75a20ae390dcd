"""Linear algebra over the scalar backends and over jet rings.

Matrices are lists of lists.  Over scalars, Gaussian elimination is exact
for the rational backend; over jets, elimination works in the local ring
of jets invertible at the base point (pivots need a nonzero constant
term), which covers every frame, Levi-form and connection solve here.
"""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

from .exactnum import EXACT, Jet, Scalar, scalar, scalar_is_zero

Matrix = List[List[Scalar]]


def zeros(rows: int, cols: int, backend: str = EXACT) -> Matrix:
    z = scalar(backend, 0)
    return [[z for _ in range(cols)] for _ in range(rows)]


def identity(size: int, backend: str = EXACT) -> Matrix:
    m = zeros(size, size, backend)
    one = scalar(backend, 1)
    for i in range(size):
        m[i][i] = one
    return m


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    rows, inner, cols = len(a), len(b), len(b[0])
    out = []
    for i in range(rows):
        row = []
        ai = a[i]
        for j in range(cols):
            s = ai[0] * b[0][j]
            for k in range(1, inner):
                s = s + ai[k] * b[k][j]
            row.append(s)
        out.append(row)
    return out


def mat_add(a: Matrix, b: Matrix) -> Matrix:
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_sub(a: Matrix, b: Matrix) -> Matrix:
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_scale(a: Matrix, c: Scalar) -> Matrix:
    return [[x * c for x in row] for row in a]


def mat_neg(a: Matrix) -> Matrix:
    return [[-x for x in row] for row in a]


def bracket(a: Matrix, b: Matrix) -> Matrix:
    return mat_sub(mat_mul(a, b), mat_mul(b, a))


def trace(a: Matrix) -> Scalar:
    s = a[0][0]
    for i in range(1, len(a)):
        s = s + a[i][i]
    return s


def conj_transpose(a: Matrix) -> Matrix:
    return [[a[j][i].conjugate() for j in range(len(a))]
            for i in range(len(a[0]))]


def mat_conj(a: Matrix) -> Matrix:
    return [[x.conjugate() for x in row] for row in a]


def mat_is_zero(a: Matrix, tol: float = 0.0) -> bool:
    return all(scalar_is_zero(x, tol) for row in a for x in row)


def mat_eq(a: Matrix, b: Matrix, tol: float = 0.0) -> bool:
    return mat_is_zero(mat_sub(a, b), tol)


def _pivot_ok(x: Scalar, float_backend: bool) -> bool:
    if float_backend:
        return abs(x) > 1e-12
    return not scalar_is_zero(x)


def rref(m: Matrix, float_backend: bool = False) -> Tuple[Matrix, List[int]]:
    """Reduced row echelon form; returns (matrix, pivot column list)."""
    a = [list(row) for row in m]
    rows = len(a)
    cols = len(a[0]) if rows else 0
    pivots: List[int] = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        best = None
        if float_backend:
            mag = -1.0
            for i in range(r, rows):
                if abs(a[i][c]) > max(mag, 1e-12):
                    mag = abs(a[i][c])
                    best = i
        else:
            for i in range(r, rows):
                if not scalar_is_zero(a[i][c]):
                    best = i
                    break
        if best is None:
            continue
        a[r], a[best] = a[best], a[r]
        inv = 1 / a[r][c] if float_backend else None
        piv = a[r][c]
        a[r] = [x / piv for x in a[r]] if inv is None else [x * inv for x in a[r]]
        for i in range(rows):
            if i != r and _pivot_ok(a[i][c], float_backend):
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
    return a, pivots


def rank(m: Matrix, float_backend: bool = False) -> int:
    if not m or not m[0]:
        return 0
    return len(rref(m, float_backend)[1])


def nullspace(m: Matrix, backend: str = EXACT) -> List[List[Scalar]]:
    """Basis of the right kernel, one vector per free column."""
    if not m:
        return []
    cols = len(m[0])
    float_backend = backend != EXACT
    red, pivots = rref(m, float_backend)
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    zero = scalar(backend, 0)
    one = scalar(backend, 1)
    for fc in free:
        v = [zero] * cols
        v[fc] = one
        for r, pc in enumerate(pivots):
            v[pc] = -red[r][fc]
        basis.append(v)
    return basis


def solve(m: Matrix, rhs: Sequence[Scalar], backend: str = EXACT) -> List[Scalar]:
    """Unique solution of a consistent (possibly overdetermined) system."""
    cols = len(m[0])
    aug = [list(row) + [b] for row, b in zip(m, rhs)]
    float_backend = backend != EXACT
    red, pivots = rref(aug, float_backend)
    if cols in pivots:
        raise ValueError("inconsistent linear system")
    if len(pivots) != cols:
        raise ValueError("linear system is underdetermined")
    x = [scalar(backend, 0)] * cols
    for r, pc in enumerate(pivots):
        x[pc] = red[r][cols]
    return x


# -- elimination over jets -------------------------------------------------

JetMatrix = List[List[Jet]]


def jet_mat_mul(a: JetMatrix, b: JetMatrix) -> JetMatrix:
    rows, inner, cols = len(a), len(b), len(b[0])
    out = []
    for i in range(rows):
        row = []
        for j in range(cols):
            s = a[i][0] * b[0][j]
            for k in range(1, inner):
                s = s + a[i][k] * b[k][j]
            row.append(s)
        out.append(row)
    return out


def jet_solve(m: JetMatrix, rhs: List[List[Jet]], order: Optional[int]) -> List[List[Jet]]:
    """Solve M X = B over the jet ring, M invertible at the base point.

    ``rhs`` holds one column per solution wanted.  Consistent extra rows
    (an overdetermined but solvable system) are checked exactly.
    """
    rows = len(m)
    cols = len(m[0])
    ncols_rhs = len(rhs[0])
    aug = [[e.truncate(order) for e in row] + [b.truncate(order) for b in rhs[i]]
           for i, row in enumerate(m)]
    float_backend = m[0][0].backend != EXACT
    tol = 1e-12 if float_backend else 0.0
    r = 0
    pivots = []
    for c in range(cols):
        best = None
        if float_backend:
            mag = -1.0
            for i in range(r, rows):
                v = abs(aug[i][c].constant_term)
                if v > max(mag, 1e-12):
                    mag = v
                    best = i
        else:
            for i in range(r, rows):
                if not scalar_is_zero(aug[i][c].constant_term):
                    best = i
                    break
        if best is None:
            continue
        aug[r], aug[best] = aug[best], aug[r]
        inv = aug[r][c].invert(order)
        aug[r] = [x * inv for x in aug[r]]
        for i in range(rows):
            if i != r and not aug[i][c].is_zero(tol):
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[r])]
        pivots.append(c)
        r += 1
    if len(pivots) != cols:
        raise ValueError("jet system is singular at the base point")
    for i in range(r, rows):
        for e in aug[i][cols:]:
            if not e.is_zero(1e-9 if float_backend else 0.0):
                raise ValueError("inconsistent jet system")
    x = [[None] * ncols_rhs for _ in range(cols)]
    for rr, pc in enumerate(pivots):
        for j in range(ncols_rhs):
            x[pc][j] = aug[rr][cols + j]
    return x


def jet_mat_inverse(m: JetMatrix, order: Optional[int]) -> JetMatrix:
    size = len(m)
    nv = m[0][0].num_vars
    backend = m[0][0].backend
    one = Jet.constant(nv, scalar(backend, 1), backend)
    zero = Jet.zero(nv, backend)
    rhs = [[one if i == j else zero for j in range(size)] for i in range(size)]
    return jet_solve(m, rhs, order)
