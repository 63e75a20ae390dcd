"""Tests for the graded symmetry algebra of the model sphere.

The bracket table of the distinguished basis is frozen here after
deriving it by hand from the defining matrices; the Killing pairings are
checked against the ad-trace definition once for small ranks.
"""

import random

import pytest

from tractorlab import linalg
from tractorlab.exactnum import QI, QI_I, QI_ONE, QI_ZERO, rational
from tractorlab.homology import RepSpec
from tractorlab.liealg import (
    build_algebra, centralizer_in_g0_of_negative_part, matrix_unit,
)


@pytest.fixture(scope="module")
def ctx2():
    return build_algebra(2)


def test_build_algebra_validates_rank():
    with pytest.raises(ValueError):
        build_algebra(0)


def test_hermitian_form_and_grading(ctx2):
    h = ctx2.herm_form
    assert h[0][3] == QI_ONE and h[3][0] == QI_ONE
    assert h[1][1] == QI_ONE and h[2][2] == QI_ONE
    e = ctx2.grading_element
    assert e[0][0] == QI_ONE and e[3][3] == QI(-1)


def test_negative_basis_brackets(ctx2):
    xi = ctx2.basis.xi
    n = ctx2.n
    # [xi_s, xi_tbar] = -i delta_st xi_0, holomorphic pairs commute
    for s in range(1, n + 1):
        for t in range(1, n + 1):
            br = ctx2.bracket(xi[s], xi[n + t])
            expected = linalg.mat_scale(xi[0], QI(0, -1)) if s == t \
                else linalg.zeros(ctx2.size, ctx2.size)
            assert linalg.mat_eq(br, expected)
            assert linalg.mat_is_zero(ctx2.bracket(xi[s], xi[t]))
    assert linalg.mat_is_zero(ctx2.bracket(xi[0], xi[1]))


def test_positive_negative_brackets(ctx2):
    xi, zeta = ctx2.basis.xi, ctx2.basis.zeta
    n, size = ctx2.n, ctx2.size
    for s in range(1, n + 1):
        assert linalg.mat_eq(ctx2.bracket(zeta[s], xi[0]),
                             linalg.mat_scale(xi[n + s], QI_I))
        assert linalg.mat_eq(ctx2.bracket(zeta[n + s], xi[0]),
                             linalg.mat_scale(xi[s], QI(0, -1)))
        for t in range(1, n + 1):
            br = ctx2.bracket(zeta[s], zeta[n + t])
            expected = linalg.mat_scale(zeta[0], QI_I) if s == t \
                else linalg.zeros(size, size)
            assert linalg.mat_eq(br, expected)
            br = ctx2.bracket(zeta[s], xi[t])
            expected = linalg.mat_sub(
                linalg.mat_scale(matrix_unit(size, 0, 0), QI(1 if s == t else 0)),
                matrix_unit(size, t, s))
            assert linalg.mat_eq(br, expected)
    assert linalg.mat_eq(ctx2.bracket(zeta[0], xi[0]),
                         linalg.mat_scale(ctx2.grading_element, QI(-1)))


def test_grading_element_eigenvalues(ctx2):
    e = ctx2.grading_element
    for a in ctx2.all_directions():
        weight = ctx2.direction_weight(a)
        br = ctx2.bracket(e, ctx2.basis.xi[a])
        assert linalg.mat_eq(br, linalg.mat_scale(ctx2.basis.xi[a], QI(-weight)))
        br = ctx2.bracket(e, ctx2.basis.zeta[a])
        assert linalg.mat_eq(br, linalg.mat_scale(ctx2.basis.zeta[a], QI(weight)))


def test_killing_pairings_n2(ctx2):
    B = ctx2.killing_form
    xi, zeta = ctx2.basis.xi, ctx2.basis.zeta
    assert B(xi[0], zeta[0]) == QI(-8)
    for s in range(1, 3):
        for t in range(1, 3):
            assert B(xi[s], zeta[t]) == (QI(8) if s == t else QI_ZERO)
            assert B(xi[s], zeta[2 + t]) == QI_ZERO
            assert B(xi[2 + s], zeta[t]) == QI_ZERO
    # dual basis pairs to the identity
    for a in ctx2.all_directions():
        for b in ctx2.all_directions():
            assert B(ctx2.basis.xi_dual[a], xi[b]) == (QI_ONE if a == b else QI_ZERO)


@pytest.mark.parametrize("n", [1, 2])
def test_killing_form_matches_ad_trace(n):
    ctx = build_algebra(n)
    rep = RepSpec(name="adjoint", ctx=ctx)

    def ad_matrix(x):
        cols = []
        for j in range(rep.dim):
            unit = [QI_ONE if t == j else QI_ZERO for t in range(rep.dim)]
            cols.append(rep.flatten(ctx.bracket(x, rep.unflatten(unit))))
        return [[cols[j][i] for j in range(rep.dim)] for i in range(rep.dim)]

    rng = random.Random(7)
    elements = [ctx.basis.xi[1], ctx.basis.zeta[0], ctx.grading_element]
    for _ in range(2):
        m = [[QI(rng.randint(-3, 3), rng.randint(-3, 3)) for _ in range(ctx.size)]
             for _ in range(ctx.size)]
        tr = sum((m[i][i] for i in range(ctx.size)), QI_ZERO)
        m[0][0] = m[0][0] - tr
        elements.append(m)
    for x in elements:
        for y in elements:
            ad_trace = linalg.trace(linalg.mat_mul(ad_matrix(x), ad_matrix(y)))
            assert ctx.killing_form(x, y) == ad_trace


def _table_elements(ctx):
    out = list(ctx.basis.xi) + list(ctx.basis.zeta) + [ctx.grading_element]
    return out


def test_jacobi_identity_on_basis_triples(ctx2):
    elems = _table_elements(ctx2)
    for x in elems:
        for y in elems:
            for z in elems:
                total = ctx2.bracket(x, ctx2.bracket(y, z))
                total = linalg.mat_add(total, ctx2.bracket(y, ctx2.bracket(z, x)))
                total = linalg.mat_add(total, ctx2.bracket(z, ctx2.bracket(x, y)))
                assert linalg.mat_is_zero(total)


def test_killing_invariance_on_basis_triples(ctx2):
    elems = _table_elements(ctx2)
    B = ctx2.killing_form
    for x in elems:
        for y in elems:
            for z in elems:
                assert B(ctx2.bracket(x, y), z) + B(y, ctx2.bracket(x, z)) == QI_ZERO


def test_bracket_respects_grading(ctx2):
    graded = [(-2, ctx2.basis.xi[0]), (-1, ctx2.basis.xi[1]), (-1, ctx2.basis.xi[3]),
              (0, ctx2.grading_element), (1, ctx2.basis.zeta[1]),
              (1, ctx2.basis.zeta[3]), (2, ctx2.basis.zeta[0])]
    for gx, x in graded:
        for gy, y in graded:
            br = ctx2.bracket(x, y)
            for g, part in ctx2.grades(br).items():
                if not linalg.mat_is_zero(part):
                    assert g == gx + gy


def test_conjugation_real_form(ctx2):
    n = ctx2.n
    for s in range(1, n + 1):
        assert linalg.mat_eq(ctx2.conj_real_form(ctx2.basis.xi[s]),
                             ctx2.basis.xi[n + s])
    assert linalg.mat_eq(ctx2.conj_real_form(ctx2.basis.xi[0]), ctx2.basis.xi[0])
    assert linalg.mat_eq(ctx2.conj_real_form(ctx2.basis.zeta[0]), ctx2.basis.zeta[0])
    rng = random.Random(3)
    for _ in range(5):
        m = [[QI(rational(rng.randint(-9, 9), 4), rational(rng.randint(-9, 9), 4))
              for _ in range(ctx2.size)] for _ in range(ctx2.size)]
        assert linalg.mat_eq(ctx2.conj_real_form(ctx2.conj_real_form(m)), m)
    # the involution is a Lie algebra automorphism of the complexification
    x, y = ctx2.basis.zeta[1], ctx2.basis.xi[2]
    assert linalg.mat_eq(
        ctx2.conj_real_form(ctx2.bracket(x, y)),
        ctx2.bracket(ctx2.conj_real_form(x), ctx2.conj_real_form(y)))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_g0_centralizer_of_negative_part_is_trivial(n):
    ctx = build_algebra(n)
    assert centralizer_in_g0_of_negative_part(ctx) == []
