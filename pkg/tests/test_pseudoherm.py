"""Tests for the pseudohermitian calculus layer."""

import itertools

import pytest
from hypothesis import given, settings, strategies as st

from tractorlab.exactnum import EXACT, FLOAT, Jet, QI, poly_from_terms, rational, scalar
from tractorlab.pseudoherm import (
    ChartSpec,
    DegenerateContactError,
    JetOrderError,
    SignatureError,
    WeightedTensor,
    build_structure,
    covariant_derivative,
    curvature,
    density_rescale_factor,
    divergence_nijenhuis_skew,
    divergence_nijenhuis_sym,
    exterior_derivative,
    first_structure_equation_residuals,
    form_apply,
    heisenberg_chart,
    levi_tensor,
    lie_bracket,
    metric_compatibility_residuals,
    nijenhuis_norm_sq,
    nijenhuis_skew,
    nijenhuis_sym,
    nijenhuis_tensor,
    rescale_contact_form,
    rescaled_connection_prediction,
    rescaled_reeb_prediction,
    rescaled_schouten_prediction,
    rescaled_torsion_prediction,
    tanaka_webster,
    torsion_tensor,
    two_form_apply,
    vf_conj,
    wt_from_array,
    wt_scalar,
)

NV = 5  # chart variables for n = 2


def jets(nv, *terms):
    return poly_from_terms(nv, [(idx, QI(re, im)) for idx, re, im in terms])


@pytest.fixture(scope="module")
def flat2():
    return build_structure(heisenberg_chart(2, order=4))


def _mixed_spec():
    spec = heisenberg_chart(2, order=4)
    z2 = Jet.coordinate(NV, 1, EXACT)
    zb1 = Jet.coordinate(NV, 2, EXACT)
    t = Jet.coordinate(NV, 4, EXACT)
    return spec.deform([[z2, zb1 * zb1], [zb1 * zb1, t * z2]])


@pytest.fixture(scope="module")
def mixed():
    """Non-integrable deformation with t dependence."""
    return build_structure(_mixed_spec())


@pytest.fixture(scope="module")
def linear():
    """Simplest non-integrable deformation: phi_11 = z^2."""
    spec = heisenberg_chart(2, order=4)
    z2 = Jet.coordinate(NV, 1, EXACT)
    zero = Jet.zero(NV, EXACT)
    return build_structure(spec.deform([[z2, zero], [zero, zero]]))


@pytest.fixture(scope="module")
def quadratic():
    """Deformation quadratic in barred coordinates."""
    spec = heisenberg_chart(2, order=4)
    zb1 = Jet.coordinate(NV, 2, EXACT)
    zb2 = Jet.coordinate(NV, 3, EXACT)
    zero = Jet.zero(NV, EXACT)
    return build_structure(spec.deform([[zb1 * zb2, zb2 * zb2], [zb2 * zb2, zero]]))


@pytest.fixture(scope="module")
def all_deformed(mixed, linear, quadratic):
    return [mixed, linear, quadratic]


@pytest.fixture(scope="module")
def real_u():
    return jets(NV, ((1, 0, 1, 0, 0), 1, 0), ((1, 0, 0, 0, 1), 0, 1),
                ((0, 0, 1, 0, 1), 0, -1), ((0, 2, 0, 0, 0), 1, 1),
                ((0, 0, 0, 2, 0), 1, -1), ((0, 0, 0, 0, 2), 3, 0))


# ---------------------------------------------------------------------------
# the flat model


class TestFlatModel:
    def test_levi_form_is_identity(self, flat2):
        for a in range(2):
            for b in range(2):
                expect = QI(1 if a == b else 0)
                assert flat2.h[a][b].constant_term == expect
                assert len(flat2.h[a][b].coeffs) == (1 if a == b else 0)

    def test_reeb_is_time_translation(self, flat2):
        for i in range(4):
            assert flat2.reeb[i].is_zero()
        assert flat2.reeb[4].constant_term == QI(1)

    def test_coframe_is_dz(self, flat2):
        for a in range(2):
            for i in range(NV):
                expect = QI(1) if i == a else QI(0)
                assert flat2.coframe[a][i].constant_term == expect
                assert all(k == (0,) * NV for k in flat2.coframe[a][i].coeffs)

    def test_frame_commutator_is_reeb(self, flat2):
        minus_i = scalar(EXACT, 0, -1)
        for a in range(2):
            for b in range(2):
                br = lie_bracket(list(flat2.frame[a]), list(flat2.frame_bar[b]))
                for i, c in enumerate(br):
                    expect = flat2.reeb[i] * minus_i if a == b else None
                    if expect is None:
                        assert c.is_zero()
                    else:
                        assert (c - expect).is_zero()

    def test_everything_flat(self, flat2):
        gamma, torsion = tanaka_webster(flat2)
        assert all(gamma[d][a][b].is_zero()
                   for d in range(5) for a in range(2) for b in range(2))
        assert all(torsion[a][b].is_zero() for a in range(2) for b in range(2))
        assert nijenhuis_tensor(flat2).is_zero()
        assert all(d.is_zero() for d in flat2.dens)
        pkg = curvature(flat2)
        assert pkg.ricci.is_zero()
        assert pkg.schouten.is_zero()

    def test_heisenberg_sizes(self):
        for n in (1, 3):
            s = build_structure(heisenberg_chart(n, order=3))
            assert s.n == n
            assert s.h[0][0].constant_term == QI(1)


# ---------------------------------------------------------------------------
# validation and error cases


class TestValidation:
    def test_frame_not_tangent(self):
        spec = heisenberg_chart(1, order=3)
        bad = list(list(z) for z in spec.frame)
        bad[0][2] = Jet.constant(3, QI(1), EXACT)  # t-component breaks theta(Z) = 0
        with pytest.raises(ValueError, match="tangent"):
            ChartSpec(1, 3, EXACT, spec.theta, (tuple(bad[0]),)).validate()

    def test_degenerate_contact(self):
        nv = 3
        zero = Jet.zero(nv, EXACT)
        one = Jet.constant(nv, QI(1), EXACT)
        theta = (zero, zero, one)  # dt alone: dtheta = 0
        z = (one, zero, zero)
        with pytest.raises(DegenerateContactError):
            build_structure(ChartSpec(1, 3, EXACT, theta, (z,)))

    def test_vanishing_contact_form(self):
        nv = 3
        zero = Jet.zero(nv, EXACT)
        t = Jet.coordinate(nv, 2, EXACT)
        theta = (zero, zero, t)  # vanishes at the base point
        z = (Jet.constant(nv, QI(1), EXACT), zero, zero)
        with pytest.raises(DegenerateContactError):
            build_structure(ChartSpec(1, 3, EXACT, theta, (z,)))

    def test_wrong_orientation_signature(self):
        spec = heisenberg_chart(2, order=3)
        neg = tuple(c * scalar(EXACT, -1) for c in spec.theta)
        with pytest.raises(SignatureError):
            build_structure(ChartSpec(2, 3, EXACT, neg, spec.frame))

    def test_degenerate_frame(self):
        spec = heisenberg_chart(2, order=3)
        z1 = spec.frame[0]
        z2_bad = tuple(vf_conj(list(z1), 2))  # conjugate of Z_1
        with pytest.raises((SignatureError, ValueError)):
            build_structure(ChartSpec(2, 3, EXACT, spec.theta, (z1, z2_bad)))

    def test_asymmetric_deformation_rejected(self):
        spec = heisenberg_chart(2, order=3)
        z1 = Jet.coordinate(NV, 0, EXACT)
        zero = Jet.zero(NV, EXACT)
        with pytest.raises(ValueError, match="symmetric"):
            spec.deform([[zero, z1], [zero, zero]])

    def test_asymmetric_frame_mix_rejected(self):
        # a frame built from an asymmetric mix is not compatible with theta
        spec = heisenberg_chart(2, order=3)
        frame = [list(z) for z in spec.frame]
        fbar = [vf_conj(z, 2) for z in frame]
        z1c = Jet.coordinate(NV, 0, EXACT)
        new0 = [x + z1c * y for x, y in zip(frame[0], fbar[1])]
        with pytest.raises(ValueError, match="compatible"):
            build_structure(ChartSpec(2, 3, EXACT, spec.theta,
                                      (tuple(new0), spec.frame[1])))

    def test_rescale_complex_factor_rejected(self):
        spec = heisenberg_chart(1, order=3)
        z = Jet.coordinate(3, 0, EXACT)
        with pytest.raises(ValueError, match="real"):
            spec.rescale(z)

    def test_rescale_nonzero_at_base_rejected(self):
        spec = heisenberg_chart(1, order=3)
        one = Jet.constant(3, QI(1), EXACT)
        with pytest.raises(ValueError, match="base point"):
            spec.rescale(one)

    def test_jet_order_exhaustion(self):
        s = build_structure(heisenberg_chart(2, order=2))
        j = Jet.coordinate(NV, 0, EXACT).truncate(0)
        with pytest.raises(JetOrderError):
            s.dirderiv(j, 1)


# ---------------------------------------------------------------------------
# structure equations and torsion tensors on deformed structures


class TestDeformedStructures:
    def test_nontrivial_and_nonintegrable(self, all_deformed):
        for s in all_deformed:
            assert not nijenhuis_tensor(s).is_zero()

    def test_structure_equation_residuals(self, all_deformed, flat2):
        for s in all_deformed + [flat2]:
            for resid in first_structure_equation_residuals(s):
                assert all(x.is_zero() for row in resid for x in row)
            res2 = metric_compatibility_residuals(s)
            for row in res2:
                for form in row:
                    assert all(x.is_zero() for x in form)

    def test_torsion_symmetric(self, all_deformed):
        for s in all_deformed:
            for a in range(2):
                for b in range(2):
                    assert (s.torsion[a][b] - s.torsion[b][a]).is_zero()

    def test_nijenhuis_pair_antisymmetry(self, all_deformed):
        for s in all_deformed:
            n3 = nijenhuis_tensor(s)
            for a in range(2):
                for b in range(2):
                    for g in range(2):
                        assert (n3.at(g, a, b) + n3.at(g, b, a)).is_zero()

    def test_nijenhuis_cyclic_identity(self, all_deformed):
        for s in all_deformed:
            n3 = nijenhuis_tensor(s)
            for a in range(2):
                for b in range(2):
                    for g in range(2):
                        tot = n3.at(a, b, g) + n3.at(b, g, a) + n3.at(g, a, b)
                        assert tot.is_zero()

    def test_skew_part_closed_form(self, all_deformed):
        half = scalar(EXACT, rational(1, 2))
        for s in all_deformed:
            n3 = nijenhuis_tensor(s)
            nsk = nijenhuis_skew(s)
            for a in range(2):
                for b in range(2):
                    for g in range(2):
                        assert (nsk.at(a, b, g) + n3.at(g, a, b) * half).is_zero()

    def test_norm_decomposition(self, all_deformed):
        def normsq(t3):
            up = t3.conj().raise_(0).raise_(1).raise_(2)
            return t3.otimes(up).trace(0, 3).trace(0, 2).trace(0, 1).comps

        for k, s in enumerate(all_deformed):
            nn = nijenhuis_norm_sq(s).comps
            if k < 2:
                # the third fixture has |N|^2 of higher degree than the jet order
                assert not nn.is_zero()
            q = scalar(EXACT, rational(1, 4))
            assert (normsq(nijenhuis_skew(s)) - nn * q).is_zero()
            q3 = scalar(EXACT, rational(3, 4))
            assert (normsq(nijenhuis_sym(s)) - nn * q3).is_zero()

    def test_levi_form_parallel(self, mixed):
        grad = covariant_derivative(levi_tensor(mixed), mixed)
        assert grad.is_zero()

    def test_deformed_frame_stays_tangent(self, all_deformed):
        for s in all_deformed:
            for z in s.frame:
                assert form_apply(list(s.theta), list(z)).is_zero()


# ---------------------------------------------------------------------------
# curvature


@pytest.fixture(scope="module")
def pkg(mixed):
    return curvature(mixed)


class TestCurvature:

    def test_wv_components_match_closed_formulas(self, pkg):
        n = 2
        for i in itertools.product(range(n), repeat=3):
            a, b, g = i
            assert (pkg.w_holo[a][b][g] - pkg.w_holo_formula[a][b][g]).is_zero()
            assert (pkg.w_anti[a][b][g] - pkg.w_anti_formula[a][b][g]).is_zero()
        for i in itertools.product(range(n), repeat=4):
            a, b, x, y = i
            assert (pkg.v_holo[a][b][x][y] - pkg.v_holo_formula[a][b][x][y]).is_zero()
            assert (pkg.v_anti[a][b][x][y] - pkg.v_anti_formula[a][b][x][y]).is_zero()

    def test_v_trace_free_symmetric_part(self, pkg, mixed):
        # V_a^b_{(st)} = 0 away from the torsion terms is false; the stated
        # property is antisymmetry of the form indices.
        n = 2
        for a in range(n):
            for b in range(n):
                for x in range(n):
                    assert pkg.v_holo[a][b][x][x].is_zero()
                    for y in range(n):
                        tot = pkg.v_holo[a][b][x][y] + pkg.v_holo[a][b][y][x]
                        assert tot.is_zero()

    def test_lowered_curvature_hermitian_pair_symmetry(self, pkg, mixed):
        n = 2
        r_t = wt_from_array(mixed, ("d", "u", "d", "D"),
                            [[[[pkg.r[a][b][x][y] for y in range(n)]
                               for x in range(n)] for b in range(n)]
                             for a in range(n)], (0, 0))
        r_low = r_t.lower(1)
        for i in itertools.product(range(n), repeat=4):
            a, b, x, y = i
            mirror = mixed.conj_jet(r_low.at(b, a, y, x))
            assert (r_low.at(a, b, x, y) - mirror).is_zero()

    def test_first_pair_swap_defect(self, pkg, mixed):
        # R_a^b_{s t-bar} - R_s^b_{a t-bar} = -N^{g-bar}_{as} N^b_{t-bar g-bar}
        n = 2
        nb = nijenhuis_tensor(mixed).conj().raise_(0)
        for i in itertools.product(range(n), repeat=4):
            a, b, sg, tu = i
            lhs = pkg.r[a][b][sg][tu] - pkg.r[sg][b][a][tu]
            rhs = Jet.zero(NV, EXACT)
            for g in range(n):
                rhs = rhs - mixed.nijenhuis_up[g][a][sg] * nb.at(b, tu, g)
            assert (lhs - rhs).is_zero()

    def test_ricci_identities(self, pkg, mixed):
        n = 2
        n3 = nijenhuis_tensor(mixed)
        nup = n3.conj().raise_(0).raise_(1)
        nsym = nijenhuis_sym(mixed)
        for a in range(n):
            for b in range(n):
                t1 = Jet.zero(NV, EXACT)
                t2 = Jet.zero(NV, EXACT)
                for l in range(n):
                    for m in range(n):
                        t1 = t1 + nsym.at(a, l, m) * nup.at(m, l, b)
                        t2 = t2 + n3.at(l, m, a) * nup.at(m, l, b)
                assert (pkg.ricci_p.at(a, b) - pkg.ricci.at(a, b) - t1 - t1).is_zero()
                assert (pkg.ricci_pp.at(a, b) - pkg.ricci.at(a, b) + t2).is_zero()

    def test_ricci_tensors_hermitian(self, pkg, mixed):
        for ric in (pkg.ricci, pkg.ricci_p, pkg.ricci_pp):
            for a in range(2):
                for b in range(2):
                    assert (ric.at(a, b) - mixed.conj_jet(ric.at(b, a))).is_zero()

    def test_scalar_curvature_relation(self, pkg, mixed):
        nn = nijenhuis_norm_sq(mixed).comps
        half = scalar(EXACT, rational(1, 2))
        assert (pkg.scalar_r_pp.comps - pkg.scalar_r.comps + nn * half).is_zero()

    def test_schouten_traces(self, pkg, mixed):
        sp = pkg.schouten_p.raise_(0).trace(0, 1)
        assert (sp.comps - pkg.p_trace.comps).is_zero()
        c = scalar(EXACT, rational(1, 12))  # 1/(4(n+1)) at n = 2
        nn = nijenhuis_norm_sq(mixed).comps
        assert (pkg.p_pp_trace.comps - pkg.p_trace.comps + nn * c).is_zero()

    def test_schouten_pp_tensor_relation(self, pkg, mixed):
        # P''_ab = P_ab - N_{lma} N^{ml}_b/(n+2) + |N|^2 h_ab/(4(n+1)(n+2))
        n = 2
        n3 = nijenhuis_tensor(mixed)
        nup = n3.conj().raise_(0).raise_(1)
        nn = nijenhuis_norm_sq(mixed).comps
        c1 = scalar(EXACT, rational(1, n + 2))
        c2 = scalar(EXACT, rational(1, 4 * (n + 1) * (n + 2)))
        for a in range(n):
            for b in range(n):
                t2 = Jet.zero(NV, EXACT)
                for l in range(n):
                    for m in range(n):
                        t2 = t2 + n3.at(l, m, a) * nup.at(m, l, b)
                rhs = (pkg.schouten.at(a, b) - t2 * c1
                       + nn * mixed.h[a][b] * c2)
                assert (pkg.schouten_pp.at(a, b) - rhs).is_zero()


# ---------------------------------------------------------------------------
# commutators of weighted derivatives


COMMUTATOR_WEIGHTS = [(0, 0), (1, 1), (0, 1), (-2, -2)]


@pytest.fixture(scope="module")
def fj():
    # includes constant and linear terms so curvature terms are visible
    return jets(NV, ((0, 0, 0, 0, 0), 2, 0), ((0, 0, 0, 0, 1), 1, 0),
                ((1, 0, 0, 0, 0), 0, 1), ((1, 0, 0, 1, 0), 1, 1),
                ((0, 1, 1, 0, 1), 0, 2))


class TestCommutators:

    @pytest.mark.parametrize("weight", COMMUTATOR_WEIGHTS)
    def test_mixed_commutator(self, mixed, fj, weight):
        s = mixed
        pkg = curvature(s)
        w, wp = weight
        f = wt_scalar(s, fj, weight)
        c = scalar(EXACT, rational(w - wp, 4))
        ih = scalar(EXACT, 0, 1)
        dh, da, d0 = f.nabla_h(), f.nabla_a(), f.nabla_0()
        A = dh.nabla_a()
        B = da.nabla_h()
        for a in range(2):
            for b in range(2):
                lhs = B.at(b, a) - A.at(a, b)
                rhs = -(s.h[a][b] * d0.comps * ih) + pkg.ricci.at(a, b) * fj * c
                assert (lhs - rhs).is_zero()

    @pytest.mark.parametrize("weight", COMMUTATOR_WEIGHTS)
    def test_holomorphic_commutator(self, mixed, fj, weight):
        s = mixed
        w, wp = weight
        f = wt_scalar(s, fj, weight)
        c = scalar(EXACT, rational(w - wp, 4))
        divn = nijenhuis_tensor(s).nabla_a().raise_(3).trace(0, 3)
        da = f.nabla_a()
        C = f.nabla_h().nabla_h()
        for a in range(2):
            for b in range(2):
                lhs = C.at(b, a) - C.at(a, b)
                rhs = Jet.zero(NV, EXACT)
                for g in range(2):
                    rhs = rhs - s.nijenhuis_up[g][a][b] * da.at(g)
                rhs = rhs - divn.at(a, b) * fj * c
                assert (lhs - rhs).is_zero()

    @pytest.mark.parametrize("weight", COMMUTATOR_WEIGHTS)
    def test_reeb_commutator(self, mixed, fj, weight):
        s = mixed
        pkg = curvature(s)
        w, wp = weight
        f = wt_scalar(s, fj, weight)
        c = scalar(EXACT, rational(w - wp, 4))
        a_mix = torsion_tensor(s).raise_(1)
        da = f.nabla_a()
        D = f.nabla_0().nabla_h()
        E = f.nabla_h().nabla_0()
        for a in range(2):
            lhs = D.at(a) - E.at(a)
            rhs = Jet.zero(NV, EXACT)
            for g in range(2):
                rhs = rhs + a_mix.at(a, g) * da.at(g)
                rhs = rhs + pkg.w_holo[g][g][a] * fj * c
            assert (lhs - rhs).is_zero()

    def test_reeb_trace_closed_form(self, mixed):
        # W^g_g_a = nabla^g A_{ag} - N_{lma} A^{lm}
        s = mixed
        pkg = curvature(s)
        a_t = torsion_tensor(s)
        da_up = a_t.nabla_a().raise_(2)
        a_uu = a_t.conj().raise_(0).raise_(1)
        n3 = nijenhuis_tensor(s)
        for a in range(2):
            w_tr = Jet.zero(NV, EXACT)
            rhs = Jet.zero(NV, EXACT)
            for g in range(2):
                w_tr = w_tr + pkg.w_holo[g][g][a]
                rhs = rhs + da_up.at(a, g, g)
            for l in range(2):
                for m in range(2):
                    rhs = rhs - n3.at(l, m, a) * a_uu.at(l, m)
            assert (w_tr - rhs).is_zero()

    def test_holomorphic_trace_closed_form(self, mixed):
        # V^g_g_{ab} = -nabla^g N_{gab}: the torsion terms cancel under trace
        s = mixed
        pkg = curvature(s)
        divn = nijenhuis_tensor(s).nabla_a().raise_(3).trace(0, 3)
        for a in range(2):
            for b in range(2):
                v_tr = Jet.zero(NV, EXACT)
                for g in range(2):
                    v_tr = v_tr + pkg.v_holo[g][g][a][b]
                assert (v_tr + divn.at(a, b)).is_zero()


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(
    st.tuples(*[st.integers(min_value=0, max_value=2) for _ in range(3)]),
    st.integers(min_value=-3, max_value=3),
    st.integers(min_value=-3, max_value=3)), min_size=1, max_size=4))
def test_flat_commutator_property(terms):
    """On the flat model [nabla_a, nabla_bbar] f = -i h nabla_0 f for any f."""
    s = test_flat_commutator_property.structure
    fj = poly_from_terms(3, [(idx, QI(re, im)) for idx, re, im in terms])
    f = wt_scalar(s, fj, (0, 1))
    A = f.nabla_h().nabla_a()
    B = f.nabla_a().nabla_h()
    d0 = f.nabla_0()
    ih = scalar(EXACT, 0, 1)
    lhs = B.at(0, 0) - A.at(0, 0)
    assert (lhs + s.h[0][0] * d0.comps * ih).is_zero()


test_flat_commutator_property.structure = build_structure(heisenberg_chart(1, order=4))


# ---------------------------------------------------------------------------
# rescaling the contact form


@pytest.fixture(scope="module")
def hat(real_u):
    return build_structure(_mixed_spec().rescale(real_u))


class TestRescaling:

    def test_connection_prediction(self, mixed, hat, real_u):
        pred = rescaled_connection_prediction(mixed, real_u)
        for a in range(2):
            for b in range(2):
                got = hat.omega_form(a, b)
                for i in range(NV):
                    assert (got[i] - pred[a][b][i]).is_zero()

    def test_torsion_prediction(self, mixed, hat, real_u):
        pred = rescaled_torsion_prediction(mixed, real_u)
        for a in range(2):
            for b in range(2):
                assert (hat.torsion[a][b] - pred.at(a, b)).is_zero()

    def test_schouten_prediction(self, mixed, hat, real_u):
        pred = rescaled_schouten_prediction(mixed, real_u)
        got = curvature(hat).schouten
        for a in range(2):
            for b in range(2):
                assert (got.at(a, b) - pred.at(a, b)).is_zero()

    def test_reeb_prediction(self, mixed, hat, real_u):
        pred = rescaled_reeb_prediction(mixed, real_u)
        eu = real_u.truncate(mixed.order).compose_exp()
        for i in range(NV):
            assert (eu * hat.reeb[i] - pred[i]).is_zero()

    def test_nijenhuis_invariance(self, mixed, hat, real_u):
        # N has weight (1, 1): trivializations differ by e^u
        eu = real_u.truncate(mixed.order).compose_exp()
        n3 = nijenhuis_tensor(mixed)
        n3h = nijenhuis_tensor(hat)
        for i in itertools.product(range(2), repeat=3):
            assert (n3h.at(*i) - eu * n3.at(*i)).is_zero()

    @pytest.mark.parametrize("weight", [(1, 0), (0, 1), (1, 1), (-2, 3)])
    def test_weighted_gradient_laws(self, mixed, hat, real_u, weight):
        s = mixed
        w, wp = weight
        fj = jets(NV, ((0, 0, 0, 0, 0), 2, 0), ((0, 0, 0, 0, 1), 1, 0),
                  ((1, 0, 0, 0, 0), 0, 1), ((1, 0, 0, 1, 0), 1, 1))
        uw = wt_scalar(s, real_u, (0, 0))
        u_h, u_a, u_0 = uw.nabla_h(), uw.nabla_a(), uw.nabla_0()
        u_up_h = u_a.raise_(0)
        u_up_a = u_h.raise_(0)
        fac = density_rescale_factor(s, real_u, weight)
        fac0 = density_rescale_factor(s, real_u, (w - 1, wp - 1))
        fh = wt_scalar(hat, fac * fj, weight)
        fs = wt_scalar(s, fj, weight)
        lh, rs = fh.nabla_h(), fs.nabla_h()
        la, ra = fh.nabla_a(), fs.nabla_a()
        for a in range(2):
            rhs = fac * (rs.at(a) + u_h.at(a) * fj * scalar(EXACT, w))
            assert (lh.at(a) - rhs).is_zero()
            rhs = fac * (ra.at(a) + u_a.at(a) * fj * scalar(EXACT, wp))
            assert (la.at(a) - rhs).is_zero()
        # Reeb direction carries the full second order correction
        i1 = scalar(EXACT, 0, 1)
        ddu1 = u_a.nabla_h()
        ddu2 = u_h.nabla_a()
        tr_up = Jet.zero(NV, EXACT)
        tr_dn = Jet.zero(NV, EXACT)
        uu = Jet.zero(NV, EXACT)
        for g in range(2):
            uu = uu + u_h.at(g) * u_up_h.at(g)
            for b in range(2):
                tr_up = tr_up + s.h_up[g][b] * ddu1.at(b, g)
                tr_dn = tr_dn + s.h_up[g][b] * ddu2.at(g, b)
        extra = Jet.zero(NV, EXACT)
        for g in range(2):
            extra = extra - i1 * u_up_h.at(g) * rs.at(g) + i1 * u_up_a.at(g) * ra.at(g)
        bracket = (u_0.comps * scalar(EXACT, w + wp) + tr_up * i1 * scalar(EXACT, w)
                   - tr_dn * i1 * scalar(EXACT, wp) - uu * i1 * scalar(EXACT, w - wp))
        rhs = fac0 * (fs.nabla_0().comps + extra
                      + bracket * scalar(EXACT, rational(1, 4)) * fj)
        assert (fh.nabla_0().comps - rhs).is_zero()

    def test_rescaled_flat_is_integrable_not_flat(self, real_u):
        s = rescale_contact_form(build_structure(heisenberg_chart(2, order=4)), real_u)
        assert nijenhuis_tensor(s).is_zero()
        assert not torsion_tensor(s).is_zero()
        assert not curvature(s).schouten.is_zero()

    def test_divergence_tensors_exist(self, mixed):
        # shape and weight sanity for the torsion divergences
        dsym = divergence_nijenhuis_sym(mixed)
        dskew = divergence_nijenhuis_skew(mixed)
        assert dsym.slots == ("d", "d") and dskew.slots == ("d", "d")
        assert dsym.weight == (0, 0)
        for a in range(2):
            for b in range(2):
                assert (dsym.at(a, b) - dsym.at(b, a)).is_zero()
                assert (dskew.at(a, b) + dskew.at(b, a)).is_zero()


# ---------------------------------------------------------------------------
# weighted tensor algebra


class TestWeightedTensors:
    def test_conjugation_swaps_weight(self, mixed):
        tsn = nijenhuis_tensor(mixed)
        c = tsn.conj()
        assert c.weight == (1, 1)
        assert c.slots == ("D", "D", "D")
        assert c.conj().agree(tsn)

    def test_raise_lower_roundtrip(self, mixed):
        a_t = torsion_tensor(mixed)
        assert a_t.raise_(1).lower(1).agree(a_t)
        assert a_t.raise_(0).lower(0).agree(a_t)

    def test_trace_of_levi_is_dimension(self, mixed):
        hh = levi_tensor(mixed).raise_(0).trace(0, 1)
        two = Jet.constant(NV, QI(2), EXACT)
        assert (hh.comps - two).is_zero()

    def test_combined_derivative_slot(self, mixed):
        fj = jets(NV, ((1, 0, 0, 1, 0), 1, 0), ((0, 0, 0, 0, 1), 0, 1))
        f = wt_scalar(mixed, fj, (1, 1))
        grad = covariant_derivative(f, mixed)
        assert grad.slots == ("x",)
        assert (grad.at(0) - f.nabla_0().comps).is_zero()
        for m in range(2):
            assert (grad.at(1 + m) - f.nabla_h().at(m)).is_zero()
            assert (grad.at(3 + m) - f.nabla_a().at(m)).is_zero()

    def test_conjugate_of_real_scalar_fixed(self, mixed):
        fj = jets(NV, ((1, 0, 1, 0, 0), 1, 0), ((0, 0, 0, 0, 2), 5, 0))
        f = wt_scalar(mixed, fj, (1, 1))
        assert f.conj().agree(f)


# ---------------------------------------------------------------------------
# float backend smoke


class TestFloatBackend:
    def test_flat_build(self):
        s = build_structure(heisenberg_chart(2, order=3, backend=FLOAT))
        assert abs(s.h[0][0].constant_term - 1.0) < 1e-12

    def test_deformed_identities(self):
        spec = heisenberg_chart(2, order=3, backend=FLOAT)
        z2 = Jet.coordinate(NV, 1, FLOAT)
        zero = Jet.zero(NV, FLOAT)
        s = build_structure(spec.deform([[z2, zero], [zero, zero]]))
        pkg = curvature(s)
        for a in range(2):
            for b in range(2):
                for g in range(2):
                    d = pkg.w_holo[a][b][g] - pkg.w_holo_formula[a][b][g]
                    assert d.is_zero(1e-9)
        assert not nijenhuis_tensor(s).is_zero(1e-9)
