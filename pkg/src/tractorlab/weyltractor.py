"""Tractor calculus over a pseudohermitian chart in a unitary frame.

This module builds the normalized Weyl form of a compatible almost CR
structure, its curvature, the standard / cotractor / adjoint tractor
connections, the splitting operators into the tractor bundles, and the
first BGG operators.  The headline identity is that the first BGG
operator of the modified adjoint connection coincides with the CR
Killing operator of :mod:`tractorlab.crops`.

All constructions happen in the theta-trivialization of the chart: a
tractor section is a matrix (or column / row) of jets, a connection is
"plain derivative plus Weyl-form action", and normalization is checked
fiberwise with the Lie-algebra homology codifferential.  Every operator
with a closed displayed formula is computed both from the display and
from the matrix action, and the two routes are compared exactly.

The normalized Weyl form exists in this trivialized shape only when the
Levi form of the frame is the identity matrix; :func:`unitarize`
converts any structure whose Levi form is the identity at the base
point into such a frame without leaving the rational jet ring.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import json
import math
from typing import Dict, List, Optional, Sequence, Tuple

from .exactnum import EXACT, Jet, rational, scalar, scalar_is_zero
from . import linalg
from .liealg import AlgebraContext, build_algebra
from .homology import _g_minus_coords
from .crops import DensityFunction, DeformationTensor
from .pseudoherm import (
    ChartSpec,
    CurvaturePackage,
    PseudohermitianStructure,
    WeightedTensor,
    _provably_zero,
    _sum_jets,
    _tol,
    build_structure,
    chart_conj,
    curvature,
    divergence_nijenhuis_skew,
    divergence_nijenhuis_sym,
    exterior_derivative,
    form_apply,
    nijenhuis_sym,
    torsion_tensor,
    nijenhuis_tensor,
    two_form_apply,
    wt_from_array,
    wt_scalar,
)

OneForm = List[Jet]
JetMatrix = List[List[Jet]]


# ---------------------------------------------------------------------------
# small jet / form / matrix helpers


def _zero(s: PseudohermitianStructure) -> Jet:
    return Jet.zero(s.num_vars, s.backend, None)


def _form_zero(s: PseudohermitianStructure) -> OneForm:
    return [Jet.zero(s.num_vars, s.backend, None) for _ in range(s.num_vars)]


def _form_add(a: OneForm, b: OneForm) -> OneForm:
    return [x + y for x, y in zip(a, b)]


def _form_scale(a: Sequence[Jet], c) -> OneForm:
    return [x * c for x in a]


def _form_scale_jet(a: Sequence[Jet], g: Jet) -> OneForm:
    if _provably_zero(g):
        return [Jet.zero(g.num_vars, g.backend, None) for _ in a]
    return [g * x for x in a]


def _mat_zero(s: PseudohermitianStructure, size: int) -> JetMatrix:
    return [[Jet.zero(s.num_vars, s.backend, None) for _ in range(size)]
            for _ in range(size)]


def _mat_add(a: JetMatrix, b: JetMatrix) -> JetMatrix:
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def _mat_sub(a: JetMatrix, b: JetMatrix) -> JetMatrix:
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def _mat_scale(a: JetMatrix, c) -> JetMatrix:
    return [[x * c for x in row] for row in a]


def _mat_dirderiv(s: PseudohermitianStructure, m: JetMatrix, d: int) -> JetMatrix:
    return [[s.dirderiv(e, d) for e in row] for row in m]


def _mat_is_zero(m: JetMatrix, tol: float = 0.0) -> bool:
    return all(e.is_zero(tol) for row in m for e in row)


def _coeff_abs(c) -> float:
    re = getattr(c, "re", None)
    if re is not None:
        return abs(complex(float(c.re), float(c.im)))
    return abs(complex(c))


def _jet_max_abs(jet: Jet) -> float:
    vals = [_coeff_abs(c) for c in jet.coeffs.values()]
    return max(vals) if vals else 0.0


def _mat_max_abs(m: JetMatrix) -> float:
    vals = [_jet_max_abs(e) for row in m for e in row]
    return max(vals) if vals else 0.0


def _const_to_backend(c, backend: str):
    """Convert an exact algebra constant to the jet coefficient domain."""
    if backend == EXACT or isinstance(c, (int, float, complex)):
        return c
    return complex(float(c.re), float(c.im))


def _const_mul_left(c_mat, m: JetMatrix) -> JetMatrix:
    """(C M)_{ij} for a scalar matrix C and a jet matrix M."""
    size = len(m)
    out = []
    for i in range(size):
        row = []
        for j in range(size):
            acc = None
            for k in range(size):
                cr = c_mat[i][k]
                if scalar_is_zero(cr) or _provably_zero(m[k][j]):
                    continue
                term = m[k][j] * _const_to_backend(cr, m[k][j].backend)
                acc = term if acc is None else acc + term
            row.append(acc if acc is not None else _jet_like_zero(m))
        out.append(row)
    return out


def _const_mul_right(m: JetMatrix, c_mat) -> JetMatrix:
    size = len(m)
    out = []
    for i in range(size):
        row = []
        for j in range(size):
            acc = None
            for k in range(size):
                cr = c_mat[k][j]
                if scalar_is_zero(cr) or _provably_zero(m[i][k]):
                    continue
                term = m[i][k] * _const_to_backend(cr, m[i][k].backend)
                acc = term if acc is None else acc + term
            row.append(acc if acc is not None else _jet_like_zero(m))
        out.append(row)
    return out


def _jet_like_zero(m: JetMatrix) -> Jet:
    ref = m[0][0]
    return Jet.zero(ref.num_vars, ref.backend, None)


def _mat_bracket_const(c_mat, m: JetMatrix) -> JetMatrix:
    """[C, M] with C scalar-valued and M jet-valued."""
    return _mat_sub(_const_mul_left(c_mat, m), _const_mul_right(m, c_mat))


def _jet_mat_bracket(a: JetMatrix, b: JetMatrix) -> JetMatrix:
    return _mat_sub(linalg.jet_mat_mul(a, b), linalg.jet_mat_mul(b, a))


def _mat_chart_conj(m: JetMatrix, n: int) -> JetMatrix:
    return [[chart_conj(e, n) for e in row] for row in m]


# ---------------------------------------------------------------------------
# frame unitarization


def _isqrt_exact(p: int) -> Optional[int]:
    if p < 0:
        return None
    r = math.isqrt(p)
    return r if r * r == p else None


def _jet_sqrt(jet: Jet, order: Optional[int]) -> Jet:
    """Square root of a jet whose constant term is a positive square.

    For the exact backend the constant term must be a rational number
    whose numerator and denominator are perfect squares, so that the
    result stays inside the rational jet ring.  The rest is the binomial
    series for sqrt(1 + x) truncated at ``order``.
    """
    c = jet.constant_term
    backend = jet.backend
    if backend == EXACT:
        if not scalar_is_zero(c - c.conjugate()):
            raise ValueError("jet square root needs a real constant term")
        q = c.re
        num = _isqrt_exact(int(q.numerator))
        den = _isqrt_exact(int(q.denominator))
        if num is None or den is None or num == 0:
            raise ValueError(
                "constant term %s is not a positive perfect rational square" % (q,))
        root = scalar(backend, rational(num, den))
    else:
        if abs(c.imag) > 1e-12 or c.real <= 0:
            raise ValueError("jet square root needs a positive real constant term")
        root = scalar(backend, c.real ** 0.5)
    # x = jet / c - 1 has zero constant term; sqrt(jet) = sqrt(c) * sum binom(1/2, k) x^k
    inv_c = Jet.constant(jet.num_vars, c, backend).invert(order)
    x = jet * inv_c - Jet.constant(jet.num_vars, scalar(backend, 1), backend)
    acc = Jet.constant(jet.num_vars, scalar(backend, 1), backend)
    term = Jet.constant(jet.num_vars, scalar(backend, 1), backend)
    cap = order if order is not None else jet.order
    if cap is None:
        raise ValueError("jet square root needs a finite truncation order")
    coeff = rational(1)
    for k in range(1, cap + 1):
        # binom(1/2, k) = binom(1/2, k-1) * (1/2 - (k-1)) / k
        coeff = coeff * (rational(1, 2) - rational(k - 1)) / rational(k)
        term = (term * x).truncate(cap)
        acc = acc + term * scalar(backend, coeff)
    return (acc * root).truncate(cap).truncate(order)


def unitarize(s: PseudohermitianStructure) -> PseudohermitianStructure:
    """Rebuild the structure in a frame with identity Levi form.

    Splits the Levi form as h = L D L* with L unit lower triangular and
    D real diagonal, then replaces the frame by D^{-1/2} L^{-1} Z.  The
    diagonal entries must have perfect-square rational values at the
    base point (they equal 1 whenever the input Levi form is the
    identity at the base point, e.g. for frame deformations).
    """
    n, nv, backend = s.n, s.num_vars, s.backend
    tol = _tol(backend)
    if all((s.h[a][b] - s.const_jet(1 if a == b else 0)).is_zero(tol)
           for a in range(n) for b in range(n)):
        return s
    order = s.order
    one = Jet.constant(nv, scalar(backend, 1), backend)
    zero = Jet.zero(nv, backend)
    low = [[one if i == j else zero for j in range(n)] for i in range(n)]
    diag: List[Jet] = []
    for j in range(n):
        d_j = s.h[j][j]
        for k in range(j):
            d_j = d_j - low[j][k] * diag[k] * chart_conj(low[j][k], n)
        diag.append(d_j)
        d_inv = d_j.invert(order)
        for i in range(j + 1, n):
            e = s.h[i][j]
            for k in range(j):
                e = e - low[i][k] * diag[k] * chart_conj(low[j][k], n)
            low[i][j] = e * d_inv
    # forward-substitute the inverse of the unit lower triangular factor
    low_inv = [[one if i == j else zero for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(i):
            acc = None
            for k in range(j, i):
                term = low[i][k] * low_inv[k][j]
                acc = term if acc is None else acc + term
            low_inv[i][j] = -acc if acc is not None else zero
    roots_inv = [_jet_sqrt(d, order).invert(order) for d in diag]
    gauge = [[roots_inv[i] * low_inv[i][j] for j in range(n)] for i in range(n)]
    new_frame = []
    for a in range(n):
        comps = [Jet.zero(nv, backend) for _ in range(nv)]
        for b in range(n):
            g = gauge[a][b]
            if _provably_zero(g):
                continue
            comps = [x + g * y for x, y in zip(comps, s.spec.frame[b])]
        new_frame.append(tuple(comps))
    out = build_structure(ChartSpec(n, order, backend, s.spec.theta, tuple(new_frame)))
    for a in range(n):
        for b in range(n):
            target = out.const_jet(1 if a == b else 0)
            if not (out.h[a][b] - target).is_zero(tol):
                raise RuntimeError("internal: unitarization left a non-identity Levi form")
    return out


def _require_unitary(s: PseudohermitianStructure) -> None:
    tol = _tol(s.backend)
    for a in range(s.n):
        for b in range(s.n):
            target = s.const_jet(1 if a == b else 0)
            if not (s.h[a][b] - target).is_zero(tol):
                raise ValueError(
                    "the normalized Weyl form needs a frame with identity Levi "
                    "form; apply unitarize() first")


# ---------------------------------------------------------------------------
# normalized Weyl form


@dataclass(frozen=True)
class WeylForm:
    """Normalized Weyl form in the theta-trivialization.

    ``tau`` is an (n+2) x (n+2) matrix of coordinate 1-forms; its value
    on every real tangent vector lies in the real form su(n+1, 1).  The
    Rho-tensor components are kept next to the matrix so that displayed
    connection formulas and fault injection can address them directly.
    """

    structure: PseudohermitianStructure
    pkg: CurvaturePackage
    rho_a0: Jet                     # theta coefficient on the first diagonal entry
    rho_cap_a0: Tuple               # [beta][alpha], theta coefficient in the gl(n) block
    rho_z_hh: Tuple                 # Z_{beta sigma} at [beta][sigma]
    rho_z_ha: Tuple                 # Z_{beta sigma-bar} at [beta][sigma]
    rho_z_h0: Tuple                 # Z_{beta 0} at [beta]
    rho_little_z: Tuple             # z_sigma at [sigma]
    rho_z0: Jet
    tau: Tuple                      # matrix of coordinate 1-forms
    tau_at: Tuple                   # tau evaluated on the 2n+1 frame directions

    @property
    def n(self) -> int:
        return self.structure.n

    @property
    def size(self) -> int:
        return self.structure.n + 2

    def matrix_at(self, d: int) -> JetMatrix:
        return [list(row) for row in self.tau_at[d]]

    def with_components(self, **overrides) -> "WeylForm":
        """Same structure with selected Rho components replaced."""
        comps = {
            "rho_a0": self.rho_a0,
            "rho_cap_a0": self.rho_cap_a0,
            "rho_z_hh": self.rho_z_hh,
            "rho_z_ha": self.rho_z_ha,
            "rho_z_h0": self.rho_z_h0,
            "rho_little_z": self.rho_little_z,
            "rho_z0": self.rho_z0,
        }
        unknown = set(overrides) - set(comps)
        if unknown:
            raise ValueError("unknown Weyl form components: %s" % sorted(unknown))
        comps.update(overrides)
        return _assemble_weyl_form(self.structure, self.pkg, comps)

    def raised_z(self) -> Tuple[List[List[Jet]], List[List[Jet]], List[Jet]]:
        """Z^alpha_sigma, Z^alpha_{sigma-bar} and Z^alpha_0 (index raised)."""
        s, n = self.structure, self.n
        up_h = [[_zero(s) for _ in range(n)] for _ in range(n)]
        up_a = [[_zero(s) for _ in range(n)] for _ in range(n)]
        up_0 = [_zero(s) for _ in range(n)]
        for al in range(n):
            for b in range(n):
                hub = s.h_up[al][b]
                if _provably_zero(hub):
                    continue
                for sg in range(n):
                    up_h[al][sg] = up_h[al][sg] + hub * chart_conj(self.rho_z_ha[b][sg], n)
                    up_a[al][sg] = up_a[al][sg] + hub * chart_conj(self.rho_z_hh[b][sg], n)
                up_0[al] = up_0[al] + hub * chart_conj(self.rho_z_h0[b], n)
        return up_h, up_a, up_0


def _divergence_up(t: WeightedTensor) -> WeightedTensor:
    """nabla^g T_{. g}: raised antiholomorphic derivative traced into the last slot."""
    d = t.nabla_a().raise_(len(t.slots))
    return d.trace(len(t.slots) - 1, len(t.slots))


def normal_weyl_form(s: PseudohermitianStructure,
                     pkg: Optional[CurvaturePackage] = None) -> WeylForm:
    """Weyl form whose curvature is fiberwise coclosed.

    Requires a unitary frame.  The Rho components are the closed
    expressions in the torsion, the Schouten tensors and the divergence
    of the Nijenhuis tensor; :func:`check_normality` verifies the
    coclosedness degree by degree.
    """
    _require_unitary(s)
    if pkg is None:
        pkg = curvature(s)
    n = s.n
    i1 = s._scalar(0, 1)

    a_t = torsion_tensor(s)
    sym_div = divergence_nijenhuis_sym(s)
    skew_div = divergence_nijenhuis_skew(s)
    nij = nijenhuis_tensor(s)
    p_scalar = pkg.p_trace.at()
    p_p_up = pkg.schouten_p.raise_(1)           # P'_beta^alpha at [beta][alpha]

    rho_a0 = p_scalar * (i1 * s._scalar(rational(-1, n + 2)))
    rho_cap_a0 = [[p_p_up.at(b, a) * i1 +
                   (p_scalar * (i1 * s._scalar(rational(-1, n + 2))) if a == b else _zero(s))
                   for a in range(n)] for b in range(n)]

    rho_z_hh = [[a_t.at(b, sg) * (-i1)
                 + sym_div.at(b, sg) * s._scalar(rational(1, n))
                 + skew_div.at(b, sg) * s._scalar(rational(1, n + 2))
                 for sg in range(n)] for b in range(n)]
    rho_z_ha = [[-pkg.schouten_pp.at(b, sg) for sg in range(n)] for b in range(n)]

    dp_p = p_p_up.nabla_h()                     # nabla_d P'_beta^gamma at [b][g][d]
    p_pp_up = pkg.schouten_pp.raise_(1)
    dp_pp = p_pp_up.nabla_h()
    div_a = _divergence_up(a_t)                 # nabla^g A_{beta g} at [beta]
    div_s = _divergence_up(sym_div)
    div_k = _divergence_up(skew_div)

    def _contract_trace(t3, b):
        return _sum_jets([t3.at(b, g, g) for g in range(n)], s.num_vars, s.backend)

    rho_z_h0 = []
    for b in range(n):
        total = (_contract_trace(dp_p, b) + _contract_trace(dp_pp, b)
                 + div_a.at(b) * (i1 * s._scalar(-2))
                 + div_s.at(b) * s._scalar(rational(1, n))
                 + div_k.at(b) * s._scalar(rational(1, n + 2)))
        rho_z_h0.append(total * (i1 * s._scalar(rational(-1, 2 * n + 1))))

    a_uu = a_t.conj().raise_(0).raise_(1)       # A^{g1 g2} at [g1][g2]
    n_up2 = nij.raise_(0).raise_(1)             # N^{g1-bar g2-bar}_sigma at [g1][g2][sg]
    s_bar = sym_div.conj()
    k_bar = skew_div.conj()

    rho_little_z = []
    for sg in range(n):
        an_term = _sum_jets([a_uu.at(g1, g2) * nij.at(g1, g2, sg)
                             for g1 in range(n) for g2 in range(n)],
                            s.num_vars, s.backend)
        sn_term = _sum_jets([s_bar.at(g1, g2) * n_up2.at(g1, g2, sg)
                             for g1 in range(n) for g2 in range(n)],
                            s.num_vars, s.backend)
        kn_term = _sum_jets([k_bar.at(g1, g2) * n_up2.at(g1, g2, sg)
                             for g1 in range(n) for g2 in range(n)],
                            s.num_vars, s.backend)
        total = (_contract_trace(dp_pp, sg)
                 - div_a.at(sg) * i1 - an_term * i1
                 + (div_s.at(sg) - sn_term) * s._scalar(rational(1, n))
                 - (div_k.at(sg) - kn_term) * s._scalar(rational(1, n + 2)))
        rho_little_z.append(total * (i1 * s._scalar(rational(1, 2 * n + 1))))

    comps = {
        "rho_a0": rho_a0,
        "rho_cap_a0": tuple(tuple(r) for r in rho_cap_a0),
        "rho_z_hh": tuple(tuple(r) for r in rho_z_hh),
        "rho_z_ha": tuple(tuple(r) for r in rho_z_ha),
        "rho_z_h0": tuple(rho_z_h0),
        "rho_little_z": tuple(rho_little_z),
    }
    comps["rho_z0"] = _solve_z0(s, comps)
    return _assemble_weyl_form(s, pkg, comps)


def _solve_z0(s: PseudohermitianStructure, comps: Dict) -> Jet:
    """Reeb-Reeb Rho entry from the homogeneity-four normalization."""
    n = s.n
    i1 = s._scalar(0, 1)
    z_hh = comps["rho_z_hh"]
    z_ha = comps["rho_z_ha"]
    z_h0 = comps["rho_z_h0"]
    lz = comps["rho_little_z"]
    cap = comps["rho_cap_a0"]
    a0 = comps["rho_a0"]

    zt_h0 = wt_from_array(s, ("d",), list(z_h0), (0, 0))
    u1 = _sum_jets([zt_h0.nabla_a().raise_(1).at(g, g) for g in range(n)],
                   s.num_vars, s.backend)
    u2 = chart_conj(u1, n)

    a_uu = torsion_tensor(s).conj().raise_(0).raise_(1)
    u3 = _sum_jets([a_uu.at(g1, g2) * z_hh[g1][g2]
                    for g1 in range(n) for g2 in range(n)], s.num_vars, s.backend)
    u4 = chart_conj(u3, n)

    # Z_{gamma2}^{gamma1} = h^{gamma1 delta-bar} Z_{gamma2 delta-bar}
    zc = [[_sum_jets([s.h_up[a][dl] * z_ha[b][dl] for dl in range(n)],
                     s.num_vars, s.backend) for a in range(n)] for b in range(n)]
    u5 = _sum_jets([cap[g1][g2] * zc[g2][g1] for g1 in range(n) for g2 in range(n)],
                   s.num_vars, s.backend)
    u6 = chart_conj(u5, n)
    u7 = a0 * _sum_jets([zc[g][g] for g in range(n)], s.num_vars, s.backend) * s._scalar(2)

    zt_l = wt_from_array(s, ("d",), list(lz), (0, 0))
    u8 = _sum_jets([zt_l.nabla_a().raise_(1).at(g, g) for g in range(n)],
                   s.num_vars, s.backend)
    u9 = chart_conj(u8, n)

    u10 = _sum_jets([z_ha[g1][g2] * chart_conj(z_ha[g1][g2], n)
                     for g1 in range(n) for g2 in range(n)], s.num_vars, s.backend)
    u11 = _sum_jets([z_hh[g1][g2] * chart_conj(z_hh[g1][g2], n)
                     for g1 in range(n) for g2 in range(n)], s.num_vars, s.backend)

    total = (u1 - u2 - u3 + u4 + u5 - u6 - u7 - u8 + u9
             - u10 * i1 + u11 * i1)
    return total * (i1 * s._scalar(rational(1, 3 * n)))


def _assemble_weyl_form(s: PseudohermitianStructure, pkg: CurvaturePackage,
                        comps: Dict) -> WeylForm:
    n = s.n
    size = n + 2
    i1 = s._scalar(0, 1)
    theta = list(s.theta)
    dens = s.dens_form()
    a0 = comps["rho_a0"]
    cap = comps["rho_cap_a0"]
    z_hh = comps["rho_z_hh"]
    z_ha = comps["rho_z_ha"]
    z_h0 = comps["rho_z_h0"]
    lz = comps["rho_little_z"]
    z0 = comps["rho_z0"]

    up_h = [[_sum_jets([s.h_up[al][b] * chart_conj(z_ha[b][sg], n) for b in range(n)],
                       s.num_vars, s.backend) for sg in range(n)] for al in range(n)]
    up_a = [[_sum_jets([s.h_up[al][b] * chart_conj(z_hh[b][sg], n) for b in range(n)],
                       s.num_vars, s.backend) for sg in range(n)] for al in range(n)]
    up_0 = [_sum_jets([s.h_up[al][b] * chart_conj(z_h0[b], n) for b in range(n)],
                      s.num_vars, s.backend) for al in range(n)]

    tau = [[_form_zero(s) for _ in range(size)] for _ in range(size)]
    neg_dens = _form_scale(dens, s._scalar(-1))

    tau[0][0] = _form_add(neg_dens, _form_scale_jet(theta, a0))
    for b in range(n):
        f = _form_scale_jet(theta, z_h0[b])
        for sg in range(n):
            f = _form_add(f, _form_scale_jet(s.coframe[sg], z_hh[b][sg]))
            f = _form_add(f, _form_scale_jet(s.coframe_bar[sg], z_ha[b][sg]))
        tau[0][1 + b] = f
    f = _form_scale_jet(theta, z0 * i1)
    for sg in range(n):
        f = _form_add(f, _form_scale_jet(s.coframe[sg], lz[sg] * i1))
        f = _form_add(f, _form_scale_jet(s.coframe_bar[sg], chart_conj(lz[sg], n) * i1))
    tau[0][size - 1] = f

    for al in range(n):
        tau[1 + al][0] = list(s.coframe[al])
        for b in range(n):
            f = s.omega_form(b, al)
            if al == b:
                f = _form_add(f, neg_dens)
            f = _form_add(f, _form_scale_jet(theta, cap[b][al]))
            tau[1 + al][1 + b] = f
        f = _form_scale_jet(theta, -up_0[al])
        for sg in range(n):
            f = _form_add(f, _form_scale_jet(s.coframe[sg], -up_h[al][sg]))
            f = _form_add(f, _form_scale_jet(s.coframe_bar[sg], -up_a[al][sg]))
        tau[1 + al][size - 1] = f

    tau[size - 1][0] = _form_scale(theta, i1)
    for b in range(n):
        f = _form_zero(s)
        for g in range(n):
            f = _form_add(f, _form_scale_jet(s.coframe_bar[g], -s.h[b][g]))
        tau[size - 1][1 + b] = f
    tau[size - 1][size - 1] = _form_add(neg_dens, _form_scale_jet(theta, -chart_conj(a0, n)))

    tau_at = []
    for d in range(2 * n + 1):
        vec = s.direction_vector(d)
        tau_at.append(tuple(tuple(form_apply(tau[r][c], vec) for c in range(size))
                            for r in range(size)))

    tol = _tol(s.backend)
    for d in range(2 * n + 1):
        tr = _sum_jets([tau_at[d][k][k] for k in range(size)], s.num_vars, s.backend)
        if not tr.is_zero(tol):
            raise RuntimeError("internal: Weyl form values are not trace-free")

    return WeylForm(
        structure=s, pkg=pkg,
        rho_a0=a0, rho_cap_a0=comps["rho_cap_a0"],
        rho_z_hh=comps["rho_z_hh"], rho_z_ha=comps["rho_z_ha"],
        rho_z_h0=comps["rho_z_h0"], rho_little_z=comps["rho_little_z"],
        rho_z0=z0,
        tau=tuple(tuple(tuple(e for e in f) for f in row) for row in tau),
        tau_at=tuple(tau_at),
    )


def real_form_residual(w: WeylForm, ctx: Optional[AlgebraContext] = None) -> float:
    """Largest violation of su(n+1,1)-valuedness of tau on real vectors.

    Checks sigma(tau(X)) = tau(X) for the Reeb field and for the real and
    imaginary parts of the frame fields, where sigma is the conjugation
    singling out the real form.
    """
    s = w.structure
    n = s.n
    if ctx is None:
        ctx = build_algebra(n)
    hform = ctx.herm_form
    worst = 0.0

    def sigma(m: JetMatrix) -> JetMatrix:
        conj_t = [[chart_conj(m[j][i], n) for j in range(w.size)] for i in range(w.size)]
        return _mat_scale(_const_mul_left(hform, _const_mul_right(conj_t, hform)),
                          s._scalar(-1))

    reals = [w.matrix_at(0)]
    i1 = s._scalar(0, 1)
    for sg in range(n):
        a = w.matrix_at(1 + sg)
        b = w.matrix_at(1 + n + sg)
        reals.append(_mat_add(a, b))
        reals.append(_mat_sub(_mat_scale(a, i1), _mat_scale(b, i1)))
    for m in reals:
        worst = max(worst, _mat_max_abs(_mat_sub(sigma(m), m)))
    return worst


# ---------------------------------------------------------------------------
# tractor sections


@dataclass(frozen=True)
class StandardTractor:
    """Section (s, t^alpha, u) of the standard tractor bundle."""

    structure: PseudohermitianStructure
    s: Jet
    t: Tuple[Jet, ...]
    u: Jet

    def column(self) -> List[Jet]:
        return [self.s] + list(self.t) + [self.u]

    @staticmethod
    def from_column(structure: PseudohermitianStructure,
                    col: Sequence[Jet]) -> "StandardTractor":
        n = structure.n
        return StandardTractor(structure, col[0], tuple(col[1:1 + n]), col[1 + n])


@dataclass(frozen=True)
class CotractorSection:
    """Section (sigma, tau_alpha, rho) of the dual bundle."""

    structure: PseudohermitianStructure
    sigma: Jet
    tau: Tuple[Jet, ...]
    rho: Jet

    def row(self) -> List[Jet]:
        return [self.sigma] + list(self.tau) + [self.rho]

    @staticmethod
    def from_row(structure: PseudohermitianStructure,
                 row: Sequence[Jet]) -> "CotractorSection":
        n = structure.n
        return CotractorSection(structure, row[0], tuple(row[1:1 + n]), row[1 + n])


@dataclass(frozen=True)
class AdjointTractor:
    """Section of the adjoint tractor bundle as a trace-free matrix.

    Component layout (rows x columns):

        [ a      Z_beta      i z    ]
        [ X^alpha  A_beta^alpha  -Z^alpha ]
        [ i x    -X_beta     -a-bar ]
    """

    structure: PseudohermitianStructure
    matrix: Tuple

    @property
    def n(self) -> int:
        return self.structure.n

    @property
    def size(self) -> int:
        return self.structure.n + 2

    def mat(self) -> JetMatrix:
        return [list(row) for row in self.matrix]

    @staticmethod
    def from_matrix(structure: PseudohermitianStructure,
                    m: Sequence[Sequence[Jet]]) -> "AdjointTractor":
        return AdjointTractor(structure, tuple(tuple(row) for row in m))

    @property
    def x(self) -> Jet:
        return self.matrix[self.size - 1][0] * self.structure._scalar(0, -1)

    @property
    def a(self) -> Jet:
        return self.matrix[0][0]

    @property
    def z(self) -> Jet:
        return self.matrix[0][self.size - 1] * self.structure._scalar(0, -1)

    def x_up(self) -> List[Jet]:
        return [self.matrix[1 + al][0] for al in range(self.n)]

    def x_bar_up(self) -> List[Jet]:
        """X^{alpha-bar} recovered from the bottom row (unitary frame)."""
        s = self.structure
        out = []
        for b in range(self.n):
            acc = None
            for g in range(self.n):
                term = self.matrix[self.size - 1][1 + g] * s.h_up[g][b]
                acc = term if acc is None else acc + term
            out.append(-acc)
        return out

    def reality_residual(self, ctx: Optional[AlgebraContext] = None) -> float:
        s = self.structure
        n = s.n
        if ctx is None:
            ctx = build_algebra(n)
        m = self.mat()
        conj_t = [[chart_conj(m[j][i], n) for j in range(self.size)]
                  for i in range(self.size)]
        sig = _mat_scale(_const_mul_left(ctx.herm_form,
                                         _const_mul_right(conj_t, ctx.herm_form)),
                         s._scalar(-1))
        return _mat_max_abs(_mat_sub(sig, m))


def tractor_pairing(v: StandardTractor, w: CotractorSection) -> Jet:
    """Invariant pairing s*sigma + t^alpha tau_alpha + u*rho."""
    s = v.structure
    acc = v.s * w.sigma + v.u * w.rho
    for a in range(s.n):
        acc = acc + v.t[a] * w.tau[a]
    return acc


# ---------------------------------------------------------------------------
# component-level covariant derivatives (unweighted frame indices)


def _cov_scalar(s: PseudohermitianStructure, jet: Jet, d: int, wdiff: int = 0) -> Jet:
    out = s.dirderiv(jet, d)
    if wdiff:
        out = out + s.dens[d] * jet * s._scalar(wdiff)
    return out


def _cov_up(s, comps: Sequence[Jet], d: int, wdiff: int = 0) -> List[Jet]:
    n = s.n
    out = []
    for a in range(n):
        v = s.dirderiv(comps[a], d)
        for c in range(n):
            g = s.gamma[d][c][a]
            if not _provably_zero(g) and not _provably_zero(comps[c]):
                v = v + g * comps[c]
        if wdiff:
            v = v + s.dens[d] * comps[a] * s._scalar(wdiff)
        out.append(v)
    return out


def _cov_down(s, comps: Sequence[Jet], d: int, wdiff: int = 0) -> List[Jet]:
    n = s.n
    out = []
    for a in range(n):
        v = s.dirderiv(comps[a], d)
        for c in range(n):
            g = s.gamma[d][a][c]
            if not _provably_zero(g) and not _provably_zero(comps[c]):
                v = v - g * comps[c]
        if wdiff:
            v = v + s.dens[d] * comps[a] * s._scalar(wdiff)
        out.append(v)
    return out


def _cov_mixed(s, m: Sequence[Sequence[Jet]], d: int) -> List[List[Jet]]:
    """Covariant derivative of A_beta^alpha stored at [beta][alpha]."""
    n = s.n
    out = [[s.dirderiv(m[b][a], d) for a in range(n)] for b in range(n)]
    for b in range(n):
        for a in range(n):
            v = out[b][a]
            for c in range(n):
                g_up = s.gamma[d][c][a]
                if not _provably_zero(g_up) and not _provably_zero(m[b][c]):
                    v = v + g_up * m[b][c]
                g_dn = s.gamma[d][b][c]
                if not _provably_zero(g_dn) and not _provably_zero(m[c][a]):
                    v = v - g_dn * m[c][a]
            out[b][a] = v
    return out


# ---------------------------------------------------------------------------
# tractor connections


def _compare_routes(s, got: Sequence[Jet], want: Sequence[Jet], label: str) -> None:
    tol = _tol(s.backend)
    for g, w_ in zip(got, want):
        if not (g - w_).is_zero(tol):
            raise RuntimeError(
                "internal: %s connection routes disagree" % label)


def standard_tractor_deriv(w: WeylForm, v: StandardTractor, d: int) -> StandardTractor:
    """Tractor derivative of a standard section in direction d.

    Computed as plain derivative plus Weyl-form action on the column and
    cross-checked against the displayed component formulas.
    """
    s = w.structure
    n, size = s.n, w.size
    col = v.column()
    out = [s.dirderiv(col[i], d) for i in range(size)]
    m = w.tau_at[d]
    for i in range(size):
        acc = out[i]
        for j in range(size):
            if _provably_zero(m[i][j]) or _provably_zero(col[j]):
                continue
            acc = acc + m[i][j] * col[j]
        out[i] = acc

    i1 = s._scalar(0, 1)
    up_h, up_a, up_0 = w.raised_z()
    t = list(v.t)
    if d == 0:
        row0 = (_cov_scalar(s, v.s, 0, -1) + w.rho_a0 * v.s
                + _sum_jets([w.rho_z_h0[b] * t[b] for b in range(n)], s.num_vars, s.backend)
                + w.rho_z0 * v.u * i1)
        rowt = _cov_up(s, t, 0, -1)
        for al in range(n):
            rowt[al] = (rowt[al]
                        + _sum_jets([w.rho_cap_a0[b][al] * t[b] for b in range(n)],
                                    s.num_vars, s.backend)
                        - up_0[al] * v.u)
        rowu = _cov_scalar(s, v.u, 0, -1) - chart_conj(w.rho_a0, n) * v.u + v.s * i1
    elif d <= n:
        sg = d - 1
        row0 = (_cov_scalar(s, v.s, d, -1)
                + _sum_jets([w.rho_z_hh[b][sg] * t[b] for b in range(n)],
                            s.num_vars, s.backend)
                + w.rho_little_z[sg] * v.u * i1)
        rowt = _cov_up(s, t, d, -1)
        for al in range(n):
            extra = v.s if al == sg else _zero(s)
            rowt[al] = rowt[al] + extra - up_h[al][sg] * v.u
        rowu = _cov_scalar(s, v.u, d, -1)
    else:
        sg = d - n - 1
        row0 = (_cov_scalar(s, v.s, d, -1)
                + _sum_jets([w.rho_z_ha[b][sg] * t[b] for b in range(n)],
                            s.num_vars, s.backend)
                + chart_conj(w.rho_little_z[sg], n) * v.u * i1)
        rowt = _cov_up(s, t, d, -1)
        for al in range(n):
            rowt[al] = rowt[al] - up_a[al][sg] * v.u
        t_low = _sum_jets([s.h[b][sg] * t[b] for b in range(n)], s.num_vars, s.backend)
        rowu = _cov_scalar(s, v.u, d, -1) - t_low
    _compare_routes(s, out, [row0] + rowt + [rowu], "standard")
    return StandardTractor.from_column(s, out)


def cotractor_deriv(w: WeylForm, v: CotractorSection, d: int) -> CotractorSection:
    """Dual-bundle derivative; dual to standard_tractor_deriv under the pairing."""
    s = w.structure
    n, size = s.n, w.size
    row = v.row()
    out = [s.dirderiv(row[j], d) for j in range(size)]
    m = w.tau_at[d]
    for j in range(size):
        acc = out[j]
        for i in range(size):
            if _provably_zero(m[i][j]) or _provably_zero(row[i]):
                continue
            acc = acc - row[i] * m[i][j]
        out[j] = acc

    i1 = s._scalar(0, 1)
    up_h, up_a, up_0 = w.raised_z()
    tau = list(v.tau)
    if d == 0:
        row0 = _cov_scalar(s, v.sigma, 0, 1) - w.rho_a0 * v.sigma - v.rho * i1
        rowt = _cov_down(s, tau, 0, 1)
        for al in range(n):
            rowt[al] = (rowt[al]
                        - _sum_jets([w.rho_cap_a0[al][b] * tau[b] for b in range(n)],
                                    s.num_vars, s.backend)
                        - w.rho_z_h0[al] * v.sigma)
        rowr = (_cov_scalar(s, v.rho, 0, 1) + chart_conj(w.rho_a0, n) * v.rho
                + _sum_jets([up_0[b] * tau[b] for b in range(n)], s.num_vars, s.backend)
                - w.rho_z0 * v.sigma * i1)
    elif d <= n:
        sg = d - 1
        row0 = _cov_scalar(s, v.sigma, d, 1) - tau[sg]
        rowt = _cov_down(s, tau, d, 1)
        for al in range(n):
            rowt[al] = rowt[al] - w.rho_z_hh[al][sg] * v.sigma
        rowr = (_cov_scalar(s, v.rho, d, 1)
                + _sum_jets([up_h[g][sg] * tau[g] for g in range(n)],
                            s.num_vars, s.backend)
                - w.rho_little_z[sg] * v.sigma * i1)
    else:
        sg = d - n - 1
        row0 = _cov_scalar(s, v.sigma, d, 1)
        rowt = _cov_down(s, tau, d, 1)
        for al in range(n):
            rowt[al] = (rowt[al] + s.h[al][sg] * v.rho
                        - w.rho_z_ha[al][sg] * v.sigma)
        rowr = (_cov_scalar(s, v.rho, d, 1)
                + _sum_jets([up_a[g][sg] * tau[g] for g in range(n)],
                            s.num_vars, s.backend)
                - chart_conj(w.rho_little_z[sg], n) * v.sigma * i1)
    _compare_routes(s, out, [row0] + rowt + [rowr], "cotractor")
    return CotractorSection.from_row(s, out)


def _adjoint_deriv_matrix(w: WeylForm, m: JetMatrix, d: int) -> JetMatrix:
    """Plain derivative plus commutator with the Weyl form value."""
    s = w.structure
    out = _mat_dirderiv(s, m, d)
    tau_d = [list(r) for r in w.tau_at[d]]
    return _mat_add(out, _jet_mat_bracket(tau_d, m))


def _adjoint_deriv_displayed(w: WeylForm, v: AdjointTractor, d: int) -> JetMatrix:
    """Entry-by-entry displayed formulas for the adjoint connection."""
    s = w.structure
    n, size = s.n, w.size
    i1 = s._scalar(0, 1)
    half = s._scalar(rational(1, 2))
    m = v.mat()

    a = m[0][0]
    zb = [m[0][1 + b] for b in range(n)]                 # Z_beta
    z = m[0][size - 1] * s._scalar(0, -1)                # entry stores i z
    xu = [m[1 + al][0] for al in range(n)]               # X^alpha
    big = [[m[1 + al][1 + b] for al in range(n)] for b in range(n)]  # A_beta^alpha at [b][al]
    zu = [m[1 + al][size - 1] * s._scalar(-1) for al in range(n)]    # entry stores -Z^alpha
    x = m[size - 1][0] * s._scalar(0, -1)                # entry stores i x
    xl = [m[size - 1][1 + b] * s._scalar(-1) for b in range(n)]      # entry stores -X_beta
    abar = m[size - 1][size - 1] * s._scalar(-1)         # entry stores -a-bar
    re_a = (a + abar) * half

    up_h, up_a, up_0 = w.raised_z()
    z_hh, z_ha, z_h0 = w.rho_z_hh, w.rho_z_ha, w.rho_z_h0
    lz = list(w.rho_little_z)
    lz_c = [chart_conj(e, n) for e in lz]
    cap, a0, z0 = w.rho_cap_a0, w.rho_a0, w.rho_z0

    def ssum(jets):
        return _sum_jets(list(jets), s.num_vars, s.backend)

    out = _mat_zero(s, size)
    d_zb = _cov_down(s, zb, d)
    d_big = _cov_mixed(s, big, d)
    d_xu = _cov_up(s, xu, d)
    d_zu = _cov_up(s, zu, d)
    d_xl = _cov_down(s, xl, d)
    d_a = _cov_scalar(s, a, d)
    d_abar = _cov_scalar(s, abar, d)
    d_z = _cov_scalar(s, z, d)
    d_x = _cov_scalar(s, x, d)

    if 1 <= d <= n:
        sg = d - 1
        out[0][0] = (d_a - zb[sg]
                     + ssum(z_hh[g][sg] * xu[g] for g in range(n))
                     - lz[sg] * x)
        for b in range(n):
            out[0][1 + b] = (d_zb[b]
                             + ssum(z_hh[g][sg] * big[b][g] for g in range(n))
                             - z_hh[b][sg] * a - lz[sg] * xl[b] * i1)
        out[0][size - 1] = (d_z * i1
                            + ssum(up_h[g][sg] * zb[g] - z_hh[g][sg] * zu[g]
                                   for g in range(n))
                            - lz[sg] * re_a * s._scalar(0, 2))
        for al in range(n):
            out[1 + al][0] = (d_xu[al] - big[sg][al]
                              + (a if al == sg else _zero(s))
                              - up_h[al][sg] * x * i1)
            for b in range(n):
                out[1 + al][1 + b] = (d_big[b][al]
                                      + (zb[b] if al == sg else _zero(s))
                                      + up_h[al][sg] * xl[b]
                                      - z_hh[b][sg] * xu[al])
            out[1 + al][size - 1] = (-d_zu[al]
                                     + (z * i1 if al == sg else _zero(s))
                                     + ssum(up_h[g][sg] * big[g][al] for g in range(n))
                                     + up_h[al][sg] * abar
                                     - lz[sg] * xu[al] * i1)
        out[size - 1][0] = d_x * i1 + xl[sg]
        for b in range(n):
            out[size - 1][1 + b] = -d_xl[b] - z_hh[b][sg] * x * i1
        out[size - 1][size - 1] = (-d_abar
                                   - ssum(up_h[g][sg] * xl[g] for g in range(n))
                                   + lz[sg] * x)
    elif d > n:
        sg = d - n - 1
        out[0][0] = (d_a
                     + ssum(z_ha[g][sg] * xu[g] for g in range(n))
                     - lz_c[sg] * x)
        for b in range(n):
            out[0][1 + b] = (d_zb[b] + s.h[b][sg] * z * i1
                             + ssum(z_ha[g][sg] * big[b][g] for g in range(n))
                             - z_ha[b][sg] * a - lz_c[sg] * xl[b] * i1)
        out[0][size - 1] = (d_z * i1
                            + ssum(up_a[g][sg] * zb[g] - z_ha[g][sg] * zu[g]
                                   for g in range(n))
                            - lz_c[sg] * re_a * s._scalar(0, 2))
        for al in range(n):
            out[1 + al][0] = d_xu[al] - up_a[al][sg] * x * i1
            for b in range(n):
                out[1 + al][1 + b] = (d_big[b][al] - s.h[b][sg] * zu[al]
                                      - z_ha[b][sg] * xu[al]
                                      + up_a[al][sg] * xl[b])
            out[1 + al][size - 1] = (-d_zu[al]
                                     + ssum(up_a[g][sg] * big[g][al] for g in range(n))
                                     + up_a[al][sg] * abar
                                     - lz_c[sg] * xu[al] * i1)
        x_lowbar = ssum(s.h[g][sg] * xu[g] for g in range(n))
        z_lowbar = ssum(s.h[g][sg] * zu[g] for g in range(n))
        out[size - 1][0] = d_x * i1 - x_lowbar
        for b in range(n):
            a_low = ssum(big[b][g] * s.h[g][sg] for g in range(n))
            out[size - 1][1 + b] = (-d_xl[b] - a_low - s.h[b][sg] * abar
                                    - z_ha[b][sg] * x * i1)
        out[size - 1][size - 1] = (-d_abar + z_lowbar
                                   - ssum(up_a[g][sg] * xl[g] for g in range(n))
                                   + lz_c[sg] * x)
    else:
        out[0][0] = (d_a + z
                     + ssum(z_h0[g] * xu[g] for g in range(n))
                     - z0 * x)
        for b in range(n):
            out[0][1 + b] = (d_zb[b]
                             - ssum(cap[b][g] * zb[g] for g in range(n))
                             + a0 * zb[b]
                             + ssum(z_h0[g] * big[b][g] for g in range(n))
                             - z_h0[b] * a - z0 * xl[b] * i1)
        out[0][size - 1] = (d_z * i1
                            + ssum(up_0[g] * zb[g] - z_h0[g] * zu[g] for g in range(n))
                            - z0 * re_a * s._scalar(0, 2))
        for al in range(n):
            out[1 + al][0] = (d_xu[al] + zu[al] * i1
                              + ssum(cap[g][al] * xu[g] for g in range(n))
                              - a0 * xu[al] - up_0[al] * x * i1)
            for b in range(n):
                out[1 + al][1 + b] = (d_big[b][al]
                                      + ssum(cap[g][al] * big[b][g]
                                             - cap[b][g] * big[g][al]
                                             for g in range(n))
                                      - z_h0[b] * xu[al] + up_0[al] * xl[b])
            out[1 + al][size - 1] = (-d_zu[al]
                                     - ssum(cap[g][al] * zu[g] for g in range(n))
                                     + a0 * zu[al]
                                     + ssum(up_0[g] * big[g][al] for g in range(n))
                                     + up_0[al] * abar - z0 * xu[al] * i1)
        out[size - 1][0] = d_x * i1 + re_a * s._scalar(0, 2)
        for b in range(n):
            out[size - 1][1 + b] = (-d_xl[b] + zb[b] * i1
                                    + ssum(cap[b][g] * xl[g] for g in range(n))
                                    - a0 * xl[b] - z_h0[b] * x * i1)
        out[size - 1][size - 1] = (-d_abar - z
                                   - ssum(up_0[g] * xl[g] for g in range(n))
                                   + z0 * x)
    return out


def adjoint_tractor_deriv(w: WeylForm, v: AdjointTractor, d: int) -> AdjointTractor:
    """Adjoint tractor derivative, commutator route with displayed cross-check."""
    s = w.structure
    out = _adjoint_deriv_matrix(w, v.mat(), d)
    shown = _adjoint_deriv_displayed(w, v, d)
    tol = _tol(s.backend)
    for i in range(w.size):
        for j in range(w.size):
            if not (out[i][j] - shown[i][j]).is_zero(tol):
                raise RuntimeError(
                    "internal: adjoint connection routes disagree at entry (%d, %d) "
                    "direction %d" % (i, j, d))
    return AdjointTractor.from_matrix(s, out)

# ---------------------------------------------------------------------------
# tractor curvature


@dataclass(frozen=True)
class TractorCurvature:
    """Curvature of the Weyl form evaluated on frame direction pairs.

    ``comps[(a, b)]`` with a < b holds the matrix value on the pair of
    directions (a, b); direction 0 is the Reeb field, 1..n the frame and
    n+1..2n the conjugate frame.  Values on swapped pairs follow by
    antisymmetry.
    """

    structure: PseudohermitianStructure
    ctx: AlgebraContext
    comps: Dict[Tuple[int, int], Tuple]

    @property
    def n(self) -> int:
        return self.structure.n

    @property
    def size(self) -> int:
        return self.structure.n + 2

    def component(self, a: int, b: int) -> JetMatrix:
        if a == b:
            return _mat_zero(self.structure, self.size)
        if a < b:
            return [list(row) for row in self.comps[(a, b)]]
        return _mat_scale([list(row) for row in self.comps[(b, a)]],
                          self.structure._scalar(-1))

    def homogeneity_part(self, h: int) -> "TractorCurvature":
        """Keep the entries of total filtration degree h, zero the rest."""
        s = self.structure
        out = {}
        for (a, b), m in self.comps.items():
            w_pair = self.ctx.direction_weight(a) + self.ctx.direction_weight(b)
            filt = _mat_zero(s, self.size)
            for r in range(self.size):
                for c in range(self.size):
                    if w_pair + self.ctx.grade_of_position(r, c) == h:
                        filt[r][c] = m[r][c]
            out[(a, b)] = tuple(tuple(row) for row in filt)
        return TractorCurvature(s, self.ctx, out)

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(e.is_zero(tol) for m in self.comps.values() for row in m for e in row)

    def max_abs(self) -> float:
        vals = [_jet_max_abs(e) for m in self.comps.values() for row in m for e in row]
        return max(vals) if vals else 0.0

    def interior(self, y: Sequence[Jet]) -> Dict[int, JetMatrix]:
        """One-chain (iota_Y kappa)(xi_a) for frame components Y = (x, X, X-bar)."""
        s = self.structure
        dirs = 2 * self.n + 1
        out = {}
        for a in range(dirs):
            acc = _mat_zero(s, self.size)
            for b in range(dirs):
                if b == a or _provably_zero(y[b]):
                    continue
                acc = _mat_add(acc, _mat_scale_jet(self.component(b, a), y[b]))
            out[a] = acc
        return out


def _mat_scale_jet(m: JetMatrix, g: Jet) -> JetMatrix:
    return [[g * e for e in row] for row in m]


def weyl_curvature(w: WeylForm) -> TractorCurvature:
    """K = d tau + tau wedge tau on pairs of frame directions."""
    s = w.structure
    n, size = s.n, w.size
    dirs = 2 * n + 1
    dtau = [[exterior_derivative(list(w.tau[r][c])) for c in range(size)]
            for r in range(size)]
    vecs = [s.direction_vector(d) for d in range(dirs)]
    mats = [[list(row) for row in w.tau_at[d]] for d in range(dirs)]
    comps = {}
    for a in range(dirs):
        for b in range(a + 1, dirs):
            wedge_part = _mat_sub(linalg.jet_mat_mul(mats[a], mats[b]),
                                  linalg.jet_mat_mul(mats[b], mats[a]))
            val = [[two_form_apply(dtau[r][c], vecs[a], vecs[b]) + wedge_part[r][c]
                    for c in range(size)] for r in range(size)]
            comps[(a, b)] = tuple(tuple(row) for row in val)
    return TractorCurvature(s, build_algebra(n), comps)


# ---------------------------------------------------------------------------
# fiberwise homology codifferential on jet-valued chains


def _act_const(rep: str, c_mat, val):
    if rep == "adjoint":
        return _mat_bracket_const(c_mat, val)
    out = []
    for i in range(len(c_mat)):
        acc = None
        for k in range(len(val)):
            cr = c_mat[i][k]
            if scalar_is_zero(cr) or _provably_zero(val[k]):
                continue
            term = val[k] * _const_to_backend(cr, val[k].backend)
            acc = term if acc is None else acc + term
        out.append(acc if acc is not None else Jet.zero(val[0].num_vars, val[0].backend, None))
    return out


def fiber_codifferential(ctx: AlgebraContext, comps: Dict, k: int,
                         rep: str = "adjoint"):
    """Homology codifferential applied fiberwise to jet-valued chains.

    Mirrors the dual-basis expression used for the scalar Kostant
    complex: for k = 1 the output is a single value, for k = 2 a
    one-chain indexed by directions.
    """
    if k == 1:
        acc = None
        for a, v in comps.items():
            term = _act_const(rep, ctx.basis.xi_dual[a], v)
            acc = term if acc is None else _add_values(acc, term)
        return acc
    if k == 2:
        sample = next(iter(comps.values()))
        ref = sample[0][0]
        half = scalar(ref.backend, rational(1, 2))
        two = scalar(ref.backend, 2)

        def comp(x, a):
            if x == a:
                return None
            key = (x, a) if x < a else (a, x)
            m = comps.get(key)
            if m is None:
                return None
            m = [list(row) for row in m]
            return m if x < a else _mat_scale(m, scalar(ref.backend, -1))

        out = {}
        for x in ctx.all_directions():
            acc = None
            for a in ctx.all_directions():
                ka = comp(x, a)
                if ka is not None:
                    term = _scale_value(_act_const(rep, ctx.basis.xi_dual[a], ka), two)
                    acc = term if acc is None else _add_values(acc, term)
                br = ctx.bracket(ctx.basis.xi_dual[a], ctx.basis.xi[x])
                coords = _g_minus_coords(ctx, br)
                for c, coeff in enumerate(coords):
                    if not coeff:
                        continue
                    kc = comp(c, a)
                    if kc is None:
                        continue
                    term = _scale_value(kc, _const_to_backend(-coeff, ref.backend))
                    acc = term if acc is None else _add_values(acc, term)
            if acc is None:
                acc = _zero_value_like(rep, ctx, ref)
            out[x] = _scale_value(acc, half)
        return out
    raise ValueError("fiberwise codifferential implemented for k in {1, 2}")


def _add_values(a, b):
    if isinstance(a[0], list):
        return _mat_add(a, b)
    return [x + y for x, y in zip(a, b)]


def _scale_value(v, c):
    if isinstance(v[0], list):
        return _mat_scale(v, c)
    return [x * c for x in v]


def _zero_value_like(rep: str, ctx: AlgebraContext, ref: Jet):
    if rep == "adjoint":
        return [[Jet.zero(ref.num_vars, ref.backend, None) for _ in range(ctx.size)]
                for _ in range(ctx.size)]
    return [Jet.zero(ref.num_vars, ref.backend, None) for _ in range(ctx.size)]


# ---------------------------------------------------------------------------
# normality


@dataclass(frozen=True)
class NormalityReport:
    """Residuals of the fiberwise codifferential of the curvature."""

    n: int
    backend: str
    order: Optional[int]
    residual_by_homogeneity: Dict[int, float]
    exact_by_homogeneity: Dict[int, bool]
    ok: bool

    def to_dict(self) -> Dict:
        return {
            "n": self.n,
            "backend": self.backend,
            "order": self.order,
            "residual_by_homogeneity": {
                str(h): self.residual_by_homogeneity[h]
                for h in sorted(self.residual_by_homogeneity)},
            "exact_by_homogeneity": {
                str(h): self.exact_by_homogeneity[h]
                for h in sorted(self.exact_by_homogeneity)},
            "ok": self.ok,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def check_normality(kappa: TractorCurvature) -> NormalityReport:
    """Fiberwise codifferential of the curvature, reported per homogeneity."""
    s = kappa.structure
    ctx = kappa.ctx
    tol = _tol(s.backend)
    resid = fiber_codifferential(ctx, kappa.comps, 2, rep="adjoint")
    max_by_h: Dict[int, float] = {}
    exact_by_h: Dict[int, bool] = {}
    for h in range(1, 5):
        max_by_h[h] = 0.0
        exact_by_h[h] = True
    for a, m in resid.items():
        w_a = ctx.direction_weight(a)
        for r in range(kappa.size):
            for c in range(kappa.size):
                h = w_a + ctx.grade_of_position(r, c)
                entry = m[r][c]
                mag = _jet_max_abs(entry)
                max_by_h[h] = max(max_by_h.get(h, 0.0), mag)
                exact_by_h[h] = exact_by_h.get(h, True) and entry.is_zero(tol)
    ok = all(exact_by_h.values())
    return NormalityReport(
        n=s.n, backend=s.backend, order=s.order,
        residual_by_homogeneity=max_by_h,
        exact_by_homogeneity=exact_by_h,
        ok=ok,
    )


# ---------------------------------------------------------------------------
# modified adjoint connection


def hamiltonian_components(v: AdjointTractor) -> List[Jet]:
    """Frame components (x, X^sigma, X^sigma-bar) of the underlying field."""
    return [v.x] + v.x_up() + v.x_bar_up()


def modified_adjoint_deriv(w: WeylForm, kappa: TractorCurvature,
                           v: AdjointTractor, d: int) -> AdjointTractor:
    """Adjoint derivative plus curvature contracted with the section's field."""
    base = adjoint_tractor_deriv(w, v, d).mat()
    y = hamiltonian_components(v)
    ins = kappa.interior(y)[d]
    return AdjointTractor.from_matrix(w.structure, _mat_add(base, ins))


# ---------------------------------------------------------------------------
# splitting operators


def split_standard(w: WeylForm, u: Jet) -> StandardTractor:
    """Differential splitting of a weight (0, 1) density into the standard bundle."""
    s = w.structure
    n = s.n
    i1 = s._scalar(0, 1)
    ut = wt_scalar(s, u, (0, 1))
    grad = ut.nabla_a().raise_(0)
    t = [grad.at(a) for a in range(n)]
    tt = wt_from_array(s, ("u",), t, (0, 1))
    div_t = _sum_jets([tt.nabla_h().at(g, g) for g in range(n)],
                      s.num_vars, s.backend)
    up_h, _, _ = w.raised_z()
    z_trace = _sum_jets([up_h[g][g] for g in range(n)], s.num_vars, s.backend)
    s0 = (-div_t + ut.nabla_0().at() * i1
          - chart_conj(w.rho_a0, n) * u * i1
          + z_trace * u) * s._scalar(rational(1, n + 1))
    return StandardTractor(s, s0, tuple(t), u)


def _adjoint_nabla_codiff(w: WeylForm, ctx: AlgebraContext, m: JetMatrix) -> JetMatrix:
    psi = {d: _adjoint_deriv_matrix(w, m, d) for d in range(2 * w.n + 1)}
    return fiber_codifferential(ctx, psi, 1, rep="adjoint")


def split_adjoint(w: WeylForm, x) -> AdjointTractor:
    """Differential splitting of a real weight (1, 1) density.

    The section is reconstructed grade by grade from the requirement
    that the covariant derivative be fiberwise coclosed; each grade is
    an exact linear solve against the algebraic action on that grade.
    The assembled section is verified to satisfy the requirement on the
    nose before it is returned.
    """
    s = w.structure
    xj = x.jet if isinstance(x, DensityFunction) else x
    n, size = s.n, w.size
    ctx = build_algebra(n)
    i1 = s._scalar(0, 1)
    nv, backend = s.num_vars, s.backend
    mat = _mat_zero(s, size)
    mat[size - 1][0] = xj * i1

    for g in (-1, 0, 1, 2):
        pos = [(r, c) for r in range(size) for c in range(size)
               if ctx.grade_of_position(r, c) == g]
        cols = []
        for (pr, pc) in pos:
            probe = [[scalar(backend, 1 if (r, c) == (pr, pc) else 0)
                      for c in range(size)] for r in range(size)]
            acc = [[scalar(backend, 0) for _ in range(size)] for _ in range(size)]
            for a in ctx.all_directions():
                term = linalg.bracket(ctx.basis.xi_dual[a],
                                      linalg.bracket(ctx.basis.xi[a], probe))
                acc = linalg.mat_add(acc, term)
            cols.append([acc[r][c] for (r, c) in pos])
        phi = [[Jet.constant(nv, _const_to_backend(cols[j][i], backend), backend)
                for j in range(len(pos))] for i in range(len(pos))]
        resid = _adjoint_nabla_codiff(w, ctx, mat)
        rhs = [[-resid[r][c]] for (r, c) in pos]
        if g == 0:
            phi.append([Jet.constant(nv, scalar(backend, 1 if r == c else 0), backend)
                        for (r, c) in pos])
            tr = _sum_jets([mat[k][k] for k in range(size)], nv, backend)
            rhs.append([-tr])
        try:
            sol = linalg.jet_solve(phi, rhs, s.order)
        except ValueError as exc:
            raise RuntimeError(
                "internal: adjoint splitting solve failed at grade %d (%s)"
                % (g, exc)) from exc
        for idx, (r, c) in enumerate(pos):
            mat[r][c] = mat[r][c] + sol[idx][0]

    final = _adjoint_nabla_codiff(w, ctx, mat)
    tol = _tol(backend)
    if not _mat_is_zero(final, tol if backend != EXACT else 0.0):
        raise RuntimeError("internal: adjoint splitting residual is nonzero")
    return AdjointTractor.from_matrix(s, mat)


# ---------------------------------------------------------------------------
# first BGG operators


@dataclass(frozen=True)
class StandardBGG:
    """First standard BGG output: (D u)_alpha and the symmetric barred Hessian part."""

    structure: PseudohermitianStructure
    first: Tuple[Jet, ...]
    second: Tuple

    def agree(self, other: "StandardBGG", tol: float = 0.0) -> bool:
        n = self.structure.n
        for a in range(n):
            if not (self.first[a] - other.first[a]).is_zero(tol):
                return False
        for a in range(n):
            for b in range(n):
                if not (self.second[a][b] - other.second[a][b]).is_zero(tol):
                    return False
        return True


def bgg_standard(w: WeylForm, u: Jet) -> StandardBGG:
    """Projection of the tractor derivative of the standard splitting."""
    s = w.structure
    n = s.n
    half = s._scalar(rational(1, 2))
    sec = split_standard(w, u)
    derivs = [standard_tractor_deriv(w, sec, d) for d in range(2 * n + 1)]
    first = tuple(derivs[1 + sg].u for sg in range(n))
    second = tuple(tuple((derivs[1 + n + a].t[b] + derivs[1 + n + b].t[a]) * half
                         for b in range(n)) for a in range(n))
    return StandardBGG(s, first, second)


def bgg_standard_formula(w: WeylForm, u: Jet) -> StandardBGG:
    """Closed expression for the first standard BGG operator."""
    s = w.structure
    n = s.n
    i1 = s._scalar(0, 1)
    half = s._scalar(rational(1, 2))
    ut = wt_scalar(s, u, (0, 1))
    first = tuple(ut.nabla_h().at(a) for a in range(n))
    d2 = ut.nabla_a().nabla_a()
    a_bar = torsion_tensor(s).conj()
    s_bar = divergence_nijenhuis_sym(s).conj()
    second = []
    for a in range(n):
        row = []
        for b in range(n):
            sym = (d2.at(a, b) + d2.at(b, a)) * half
            row.append(sym - a_bar.at(a, b) * u * i1
                       - s_bar.at(a, b) * u * s._scalar(rational(1, n)))
        second.append(tuple(row))
    return StandardBGG(s, first, tuple(second))


def _project_adjoint_one(w: WeylForm, mats: Dict[int, JetMatrix]) -> DeformationTensor:
    """Deformation-tensor part of an adjoint-valued one-chain.

    The identification of the homology slot is normalized so that the
    modified connection reproduces the CR Killing operator.
    """
    s = w.structure
    n, size = s.n, w.size
    half = s._scalar(rational(1, 2))
    comps = [[(mats[1 + a][size - 1][1 + b] + mats[1 + b][size - 1][1 + a]) * half
              for b in range(n)] for a in range(n)]
    comps_bar = [[(mats[1 + n + a][1 + b][0] + mats[1 + n + b][1 + a][0]) * (-half)
                  for b in range(n)] for a in range(n)]
    psi = wt_from_array(s, ("d", "d"), comps, (1, 1))
    psi_bar = wt_from_array(s, ("D", "D"), comps_bar, (1, 1))
    return DeformationTensor(psi, psi_bar)


def bgg_adjoint(w: WeylForm, x) -> DeformationTensor:
    """Projection of the adjoint tractor derivative of the splitting of x."""
    sec = split_adjoint(w, x)
    mats = {d: adjoint_tractor_deriv(w, sec, d).mat()
            for d in range(1, 2 * w.n + 1)}
    return _project_adjoint_one(w, mats)


def bgg_modified(w: WeylForm, kappa: TractorCurvature, x) -> DeformationTensor:
    """Same projection along the curvature-modified adjoint connection."""
    sec = split_adjoint(w, x)
    y = hamiltonian_components(sec)
    ins = kappa.interior(y)
    mats = {}
    for d in range(1, 2 * w.n + 1):
        mats[d] = _mat_add(adjoint_tractor_deriv(w, sec, d).mat(), ins[d])
    return _project_adjoint_one(w, mats)


def bgg_adjoint_formula(w: WeylForm, x) -> DeformationTensor:
    """Closed expression for the first adjoint BGG operator."""
    s = w.structure
    n = s.n
    xj = x.jet if isinstance(x, DensityFunction) else x
    i1 = s._scalar(0, 1)
    xt = wt_scalar(s, xj, (1, 1))
    d2 = xt.nabla_h().nabla_h().symmetrize(0, 1)
    a_t = torsion_tensor(s)
    s_div = divergence_nijenhuis_sym(s)
    psi = (d2.scale(i1)
           - a_t.mul_jet(xj, (1, 1))
           - s_div.mul_jet(xj, (1, 1)).scale(i1 * s._scalar(rational(1, n))))
    return DeformationTensor(psi, psi.conj())


def bgg_modified_difference_formula(w: WeylForm, x) -> DeformationTensor:
    """Closed expression for bgg_modified minus bgg_adjoint."""
    s = w.structure
    n = s.n
    xj = x.jet if isinstance(x, DensityFunction) else x
    i1 = s._scalar(0, 1)
    xt = wt_scalar(s, xj, (1, 1))
    grad_up = xt.nabla_a().raise_(0)
    nsym = nijenhuis_sym(s)
    comps = []
    for a in range(n):
        row = []
        for b in range(n):
            contr = _sum_jets([nsym.at(a, b, g) * grad_up.at(g) for g in range(n)],
                              s.num_vars, s.backend)
            row.append(contr * i1
                       + divergence_nijenhuis_sym(s).at(a, b) * xj
                       * (i1 * s._scalar(rational(1, n))))
        comps.append(row)
    psi = wt_from_array(s, ("d", "d"), comps, (1, 1))
    return DeformationTensor(psi, psi.conj())


# ---------------------------------------------------------------------------
# integrable-case invariants


def torsion_potential(pkg: CurvaturePackage) -> List[Jet]:
    """T_beta = (nabla_beta P - i nabla^gamma A_{beta gamma}) / (n + 2)."""
    s = pkg.structure
    n = s.n
    i1 = s._scalar(0, 1)
    p_grad = pkg.p_trace.nabla_h()
    div_a = _divergence_up(torsion_tensor(s))
    return [(p_grad.at(b) - div_a.at(b) * i1) * s._scalar(rational(1, n + 2))
            for b in range(n)]


def scalar_s_invariant(pkg: CurvaturePackage) -> Jet:
    """S = -(div T + conj div T + |P|^2 - |A|^2) / n for integrable structures."""
    s = pkg.structure
    n = s.n
    t_pot = wt_from_array(s, ("d",), torsion_potential(pkg), (-1, -1))
    div_t = _sum_jets([t_pot.nabla_a().raise_(1).at(g, g) for g in range(n)],
                      s.num_vars, s.backend)
    div_t_bar = chart_conj(div_t, n)
    p = pkg.schouten
    a_t = torsion_tensor(s)
    pp = _sum_jets([p.at(a, b) * chart_conj(p.at(a, b), n)
                    for a in range(n) for b in range(n)], s.num_vars, s.backend)
    aa = _sum_jets([a_t.at(a, b) * chart_conj(a_t.at(a, b), n)
                    for a in range(n) for b in range(n)], s.num_vars, s.backend)
    return (div_t + div_t_bar + pp - aa) * s._scalar(rational(-1, n))
