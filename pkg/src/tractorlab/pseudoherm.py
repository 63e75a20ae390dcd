"""Pseudohermitian calculus on a jet chart.

A chart is a contact form plus a frame of the holomorphic contact
distribution, all with truncated Taylor coefficients at a base point.
From these we compute the Levi form, the Reeb field, the admissible
coframe, the canonical connection with its torsion and Nijenhuis
tensors, the curvature with its Ricci and Schouten contractions, and
weighted covariant derivatives.  Everything is exact over the rational
backend; identities are checked through the jet order each quantity
supports.

Chart variables are ordered (z^1..z^n, zbar^1..zbar^n, t); a holomorphic
coordinate and its conjugate are independent jet variables, so complex
conjugation swaps the two blocks and conjugates coefficients.

Directions are indexed 0..2n throughout: 0 is the Reeb direction,
1..n the holomorphic frame directions, n+1..2n their conjugates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

from .exactnum import EXACT, FLOAT, Jet, QI, Scalar, conj_scalar, rational, scalar, scalar_is_zero
from .linalg import jet_mat_inverse, jet_solve, nullspace, rank


class DegenerateContactError(ValueError):
    """The contact condition fails at the base point."""


class SignatureError(ValueError):
    """The Levi form is not positive definite at the base point."""


class JetOrderError(ValueError):
    """A computation needs more derivatives than the jets carry."""


# ---------------------------------------------------------------------------
# chart-level helpers: jets, fields, forms


def chart_conj(jet: Jet, n: int) -> Jet:
    """Complex conjugate of a chart function: swap the z and zbar blocks."""
    coeffs = {}
    for idx, v in jet.coeffs.items():
        key = idx[n:2 * n] + idx[:n] + idx[2 * n:]
        coeffs[key] = conj_scalar(v)
    return Jet(jet.num_vars, coeffs, jet.order, jet.backend)


def _partial(jet: Jet, k: int) -> Jet:
    try:
        return jet.partial(k)
    except ValueError as exc:
        raise JetOrderError(str(exc)) from exc


VectorField = List[Jet]
OneForm = List[Jet]
TwoForm = List[List[Jet]]


def vf_conj(v: VectorField, n: int) -> VectorField:
    out = [None] * (2 * n + 1)
    for a in range(n):
        out[a] = chart_conj(v[n + a], n)
        out[n + a] = chart_conj(v[a], n)
    out[2 * n] = chart_conj(v[2 * n], n)
    return out


form_conj = vf_conj  # components transform the same way


def _provably_zero(jet: Jet) -> bool:
    """True only for complete jets with no terms; a finite-order empty jet
    may hide nonzero coefficients beyond its reliable order."""
    return jet.order is None and not jet.coeffs


def form_apply(form: OneForm, vec: VectorField) -> Jet:
    acc = None
    for f, x in zip(form, vec):
        if _provably_zero(f) or _provably_zero(x):
            continue
        term = f * x
        acc = term if acc is None else acc + term
    if acc is None:
        ref = form[0]
        return Jet.zero(ref.num_vars, ref.backend, None)
    return acc


def exterior_derivative(form: OneForm) -> TwoForm:
    nv = len(form)
    return [[_partial(form[j], i) - _partial(form[i], j) for j in range(nv)]
            for i in range(nv)]


def two_form_apply(two: TwoForm, x: VectorField, y: VectorField) -> Jet:
    nv = len(x)
    acc = None
    for i in range(nv):
        if _provably_zero(x[i]):
            continue
        for j in range(nv):
            if _provably_zero(y[j]) or _provably_zero(two[i][j]):
                continue
            term = x[i] * two[i][j] * y[j]
            acc = term if acc is None else acc + term
    if acc is None:
        return Jet.zero(len(x), x[0].backend, None)
    return acc


def wedge(a: OneForm, b: OneForm) -> TwoForm:
    nv = len(a)
    return [[a[i] * b[j] - a[j] * b[i] for j in range(nv)] for i in range(nv)]


def two_form_add(a: TwoForm, b: TwoForm) -> TwoForm:
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def two_form_scale(a: TwoForm, c) -> TwoForm:
    return [[x * c for x in row] for row in a]


def two_form_is_zero(a: TwoForm, tol: float = 0.0) -> bool:
    return all(x.is_zero(tol) for row in a for x in row)


def lie_bracket(x: VectorField, y: VectorField) -> VectorField:
    nv = len(x)
    out = []
    for k in range(nv):
        acc = None
        for i in range(nv):
            if not _provably_zero(x[i]):
                term = x[i] * _partial(y[k], i)
                acc = term if acc is None else acc + term
            if not _provably_zero(y[i]):
                term = y[i] * _partial(x[k], i)
                acc = -term if acc is None else acc - term
        out.append(acc if acc is not None else Jet.zero(nv, x[0].backend, None))
    return out


def directional(jet: Jet, vec: VectorField) -> Jet:
    acc = None
    for i, c in enumerate(vec):
        if _provably_zero(c):
            continue
        term = c * _partial(jet, i)
        acc = term if acc is None else acc + term
    if acc is None:
        return Jet.zero(jet.num_vars, jet.backend, None)
    return acc


# ---------------------------------------------------------------------------
# chart specification


@dataclass(frozen=True)
class ChartSpec:
    """Contact form and holomorphic frame jets on one chart.

    ``theta`` is a coordinate 1-form, ``frame`` the n holomorphic fields.
    The spec is immutable; deformations and contact-form rescalings
    produce new specs.
    """

    n: int
    order: int
    backend: str
    theta: Tuple[Jet, ...]
    frame: Tuple[Tuple[Jet, ...], ...]

    @property
    def num_vars(self) -> int:
        return 2 * self.n + 1

    def _scalar(self, re, im=0) -> Scalar:
        return scalar(self.backend, re, im)

    def validate(self) -> None:
        nv = self.num_vars
        if len(self.theta) != nv:
            raise ValueError("contact form must have one component per coordinate")
        if len(self.frame) != self.n:
            raise ValueError("frame must consist of n holomorphic fields")
        for z in self.frame:
            if len(z) != nv:
                raise ValueError("frame field must have one component per coordinate")
        for z in self.frame:
            if not form_apply(list(self.theta), list(z)).is_zero(_tol(self.backend)):
                raise ValueError("frame field is not tangent to the contact distribution")

    def deform(self, phi: Sequence[Sequence[Jet]]) -> "ChartSpec":
        """New spec with frame Z'_a = Z_a + phi_a^b Zbar_b.

        ``phi`` is the symmetric array phi_{ab}; its second index is raised
        with the Levi form of this spec.
        """
        n, nv = self.n, self.num_vars
        if len(phi) != n or any(len(row) != n for row in phi):
            raise ValueError("deformation array must be n by n")
        tol = _tol(self.backend)
        for a in range(n):
            for b in range(a + 1, n):
                if not (phi[a][b] - phi[b][a]).is_zero(tol):
                    raise ValueError("deformation array must be symmetric")
        dtheta = exterior_derivative(list(self.theta))
        frame_bar = [vf_conj(list(z), n) for z in self.frame]
        minus_i = self._scalar(0, -1)
        h = [[two_form_apply(dtheta, list(self.frame[a]), frame_bar[b]) * minus_i
              for b in range(n)] for a in range(n)]
        h_inv = jet_mat_inverse(h, self.order)
        new_frame = []
        for a in range(n):
            # phi_a^c = h^{bc-bar} phi_{ab}; h^{bc-bar} sits at h_inv[c][b]
            comps = list(self.frame[a])
            for c in range(n):
                coeff = None
                for b in range(n):
                    term = h_inv[c][b] * phi[a][b]
                    coeff = term if coeff is None else coeff + term
                comps = [x + coeff * y for x, y in zip(comps, frame_bar[c])]
            new_frame.append(tuple(comps))
        return ChartSpec(n, self.order, self.backend, self.theta, tuple(new_frame))

    def rescale(self, u: Jet) -> "ChartSpec":
        """New spec for the contact form e^u theta, same frame.

        ``u`` must be real-valued with u(0) = 0 so that e^u stays inside
        the rational jet ring.
        """
        n = self.n
        if not (u - chart_conj(u, n)).is_zero(_tol(self.backend)):
            raise ValueError("conformal factor must be real-valued")
        if not scalar_is_zero(u.constant_term, _tol(self.backend)):
            raise ValueError("conformal factor must vanish at the base point")
        eu = u.truncate(self.order).compose_exp()
        theta = tuple(eu * c for c in self.theta)
        return ChartSpec(n, self.order, self.backend, theta, self.frame)


def heisenberg_chart(n: int, order: int = 4, backend: str = EXACT) -> ChartSpec:
    """The flat model: theta = dt - (i/2) sum(zbar dz - z dzbar).

    Normalized so the Levi form is the identity everywhere and
    [Z_a, Zbar_b] = -i delta_ab T.
    """
    nv = 2 * n + 1
    zero = Jet.zero(nv, backend)
    half_i = scalar(backend, 0, rational(1, 2))
    theta = [zero] * nv
    for a in range(n):
        theta[a] = Jet.coordinate(nv, n + a, backend) * (-half_i)   # -(i/2) zbar^a dz^a
        theta[n + a] = Jet.coordinate(nv, a, backend) * half_i      # +(i/2) z^a dzbar^a
    theta[2 * n] = Jet.constant(nv, scalar(backend, 1), backend)
    frame = []
    for a in range(n):
        comps = [zero] * nv
        comps[a] = Jet.constant(nv, scalar(backend, 1), backend)
        comps[2 * n] = Jet.coordinate(nv, n + a, backend) * half_i  # (i/2) zbar^a d/dt
        frame.append(tuple(comps))
    return ChartSpec(n, order, backend, tuple(theta), tuple(frame))


def _tol(backend: str) -> float:
    return 0.0 if backend == EXACT else 1e-9


# ---------------------------------------------------------------------------
# the structure


@dataclass(frozen=True)
class PseudohermitianStructure:
    """All chart-level invariants of one contact form and frame."""

    spec: ChartSpec
    theta: Tuple[Jet, ...]
    dtheta: Tuple[Tuple[Jet, ...], ...]
    frame: Tuple[Tuple[Jet, ...], ...]
    frame_bar: Tuple[Tuple[Jet, ...], ...]
    reeb: Tuple[Jet, ...]
    coframe: Tuple[Tuple[Jet, ...], ...]
    coframe_bar: Tuple[Tuple[Jet, ...], ...]
    h: Tuple[Tuple[Jet, ...], ...]
    h_up: Tuple[Tuple[Jet, ...], ...]      # h^{a b-bar} at [a][b]
    nijenhuis_up: Tuple                    # N^{c-bar}_{ab} at [c][a][b]
    nijenhuis: Tuple                       # N_{cab} (weight (1,1)) at [c][a][b]
    torsion_bar_up: Tuple                  # A_{a-bar}^{c} at [a][c], weight (-1,-1)
    torsion: Tuple                         # A_{ab} at [a][b], weight (0,0)
    gamma: Tuple                           # gamma[d][a][b] = omega_a^b(e_d)
    gamma_bar: Tuple                       # omega_{a-bar}^{b-bar}(e_d)
    dens: Tuple[Jet, ...]                  # density connection per direction

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def order(self) -> int:
        return self.spec.order

    @property
    def backend(self) -> str:
        return self.spec.backend

    @property
    def num_vars(self) -> int:
        return self.spec.num_vars

    def _scalar(self, re, im=0) -> Scalar:
        return scalar(self.backend, re, im)

    def zero_jet(self, order: Optional[int] = "default") -> Jet:
        cap = self.order if order == "default" else order
        return Jet.zero(self.num_vars, self.backend, cap)

    def const_jet(self, re, im=0) -> Jet:
        return Jet.constant(self.num_vars, self._scalar(re, im), self.backend)

    def bar_dir(self, d: int) -> int:
        if d == 0:
            return 0
        return d + self.n if d <= self.n else d - self.n

    def direction_vector(self, d: int) -> VectorField:
        if d == 0:
            return list(self.reeb)
        if d <= self.n:
            return list(self.frame[d - 1])
        return list(self.frame_bar[d - self.n - 1])

    def direction_form(self, d: int) -> OneForm:
        if d == 0:
            return list(self.theta)
        if d <= self.n:
            return list(self.coframe[d - 1])
        return list(self.coframe_bar[d - self.n - 1])

    def dirderiv(self, jet: Jet, d: int) -> Jet:
        return directional(jet, self.direction_vector(d))

    def conj_jet(self, jet: Jet) -> Jet:
        return chart_conj(jet, self.n)

    def omega_form(self, a: int, b: int) -> OneForm:
        """omega_a^b as a coordinate 1-form."""
        out = [self.zero_jet() for _ in range(self.num_vars)]
        for d in range(2 * self.n + 1):
            g = self.gamma[d][a][b]
            if _provably_zero(g):
                continue
            form = self.direction_form(d)
            out = [x + g * y for x, y in zip(out, form)]
        return out

    def dens_form(self) -> OneForm:
        """Coordinate 1-form of the density connection on weight (1, 0)."""
        out = [self.zero_jet() for _ in range(self.num_vars)]
        for d in range(2 * self.n + 1):
            g = self.dens[d]
            if _provably_zero(g):
                continue
            form = self.direction_form(d)
            out = [x + g * y for x, y in zip(out, form)]
        return out


def build_structure(spec: ChartSpec) -> PseudohermitianStructure:
    """Solve for Reeb field, coframe, Levi form, connection and torsion."""
    spec.validate()
    n, nv, order, backend = spec.n, spec.num_vars, spec.order, spec.backend
    tol = _tol(backend)
    # Complete polynomial inputs stay complete; finite reliability orders
    # enter only through the series inversions below, capped at spec.order.
    theta = list(spec.theta)
    frame = [list(z) for z in spec.frame]
    dtheta = exterior_derivative(theta)
    frame_bar = [vf_conj(z, n) for z in frame]

    _check_contact(theta, dtheta, nv, backend)

    # Reeb field: theta(T) = 1, T -| dtheta = 0 (overdetermined, consistent).
    mat = [list(theta)]
    for j in range(nv):
        mat.append([dtheta[i][j] for i in range(nv)])
    one = Jet.constant(nv, scalar(backend, 1), backend)
    zero = Jet.zero(nv, backend)
    rhs = [[one]] + [[zero] for _ in range(nv)]
    try:
        sol = jet_solve(mat, rhs, order)
    except ValueError as exc:
        raise DegenerateContactError(f"no Reeb field: {exc}") from exc
    reeb = [sol[i][0] for i in range(nv)]

    # Coframe: invert the frame matrix (rows Z_a, Zbar_a, T).
    rows = frame + frame_bar + [reeb]
    g = [[rows[a][i] for a in range(nv)] for i in range(nv)]
    w = jet_mat_inverse(g, order)
    coframe = [list(w[a]) for a in range(n)]
    coframe_bar = [list(w[n + a]) for a in range(n)]
    theta_dual = list(w[2 * n])
    for x, y in zip(theta_dual, theta):
        if not (x - y).is_zero(tol):
            raise RuntimeError("internal: dual of the Reeb slot is not the contact form")
    for a in range(n):
        for x, y in zip(coframe_bar[a], form_conj(coframe[a], n)):
            if not (x - y).is_zero(tol):
                raise RuntimeError("internal: coframe is not conjugation-symmetric")

    # Levi form h_{a b-bar} = -i dtheta(Z_a, Zbar_b).
    minus_i = scalar(backend, 0, -1)
    h = [[two_form_apply(dtheta, frame[a], frame_bar[b]) * minus_i
          for b in range(n)] for a in range(n)]
    for a in range(n):
        for b in range(n):
            if not (h[a][b] - chart_conj(h[b][a], n)).is_zero(tol):
                raise RuntimeError("internal: Levi form is not Hermitian")
    _check_signature(h, n, backend)
    h_inv = jet_mat_inverse(h, order)
    h_up = [[h_inv[b][a] for b in range(n)] for a in range(n)]

    # dtheta must be exactly i h_{a b-bar} theta^a wedge theta^{b-bar};
    # this is where the symmetry of a frame deformation is load-bearing.
    recon = None
    for a in range(n):
        for b in range(n):
            coeff = h[a][b] * scalar(backend, 0, 1)
            term = two_form_scale(wedge(coframe[a], coframe_bar[b]), coeff)
            recon = term if recon is None else two_form_add(recon, term)
    resid = two_form_add(dtheta, two_form_scale(recon, scalar(backend, -1)))
    if not two_form_is_zero(resid, tol):
        raise ValueError("frame does not span a compatible almost complex structure")

    # Nijenhuis tensor from the (0,2) parts of the coframe differentials.
    dcof = [exterior_derivative(coframe[c]) for c in range(n)]
    dcof_bar = [exterior_derivative(coframe_bar[c]) for c in range(n)]
    nij_up = [[[two_form_apply(dcof_bar[c], frame[a], frame[b])
                for b in range(n)] for a in range(n)] for c in range(n)]
    for c in range(n):
        for a in range(n):
            for b in range(n):
                mirror = chart_conj(two_form_apply(dcof[c], frame_bar[a], frame_bar[b]), n)
                if not (nij_up[c][a][b] - mirror).is_zero(tol):
                    raise RuntimeError("internal: Nijenhuis tensor is not real")
    nij = [[[_sum_jets([h[c][s] * nij_up[s][a][b] for s in range(n)], nv, backend)
             for b in range(n)] for a in range(n)] for c in range(n)]

    # Torsion and the directly readable connection coefficients.
    tors_bar_up = [[two_form_apply(dcof[c], reeb, frame_bar[s]) for c in range(n)]
                   for s in range(n)]
    gamma0 = [[-two_form_apply(dcof[c], reeb, frame[a]) for c in range(n)]
              for a in range(n)]
    gamma_anti = [[[two_form_apply(dcof[c], frame[a], frame_bar[t]) for c in range(n)]
                   for a in range(n)] for t in range(n)]

    # Metric compatibility determines the remaining holomorphic coefficients:
    # Gamma_{ma}^g h_{g b-bar} = Z_m(h_{a b-bar}) - conj(Gamma_{m-bar b}^g) h_{a g-bar}.
    hT = [[h[gg][b] for gg in range(n)] for b in range(n)]
    gamma_holo = []
    for m in range(n):
        rhs_mat = []
        for b in range(n):
            row = []
            for a in range(n):
                val = directional(h[a][b], frame[m])
                for gg in range(n):
                    val = val - chart_conj(gamma_anti[m][b][gg], n) * h[a][gg]
                row.append(val)
            rhs_mat.append(row)
        sol = jet_solve(hT, rhs_mat, order)
        gamma_holo.append([[sol[gg][a] for gg in range(n)] for a in range(n)])

    gamma = [gamma0] + [gamma_holo[m] for m in range(n)] + \
            [gamma_anti[t] for t in range(n)]

    struct = PseudohermitianStructure(
        spec=spec,
        theta=tuple(theta),
        dtheta=tuple(tuple(row) for row in dtheta),
        frame=tuple(tuple(z) for z in frame),
        frame_bar=tuple(tuple(z) for z in frame_bar),
        reeb=tuple(reeb),
        coframe=tuple(tuple(f) for f in coframe),
        coframe_bar=tuple(tuple(f) for f in coframe_bar),
        h=tuple(tuple(row) for row in h),
        h_up=tuple(tuple(row) for row in h_up),
        nijenhuis_up=_freeze(nij_up),
        nijenhuis=_freeze(nij),
        torsion_bar_up=_freeze(tors_bar_up),
        torsion=None,  # filled below; the dataclass is frozen so build twice
        gamma=_freeze(gamma),
        gamma_bar=None,
        dens=None,
    )

    # Lowered symmetric torsion A_{ab} = conj(A_{a-bar}^{g}) h_{b g-bar}.
    torsion = [[_sum_jets([chart_conj(tors_bar_up[a][gg], n) * h[b][gg]
                           for gg in range(n)], nv, backend)
                for b in range(n)] for a in range(n)]
    gamma_bar = [[[chart_conj(gamma[struct.bar_dir(d)][a][b], n)
                   for b in range(n)] for a in range(n)]
                 for d in range(2 * n + 1)]
    # Weight-(1, 0) density connection coefficient: the canonical bundle is
    # the (-n-2, 0) density, and in the phase gauge where the frame volume
    # form is positive real the trace form becomes (omega - omega-bar)/2.
    c_dens = scalar(backend, rational(1, 2 * (n + 2)))
    dens = []
    for d in range(2 * n + 1):
        tr = _sum_jets([gamma[d][a][a] for a in range(n)], nv, backend)
        tr_bar = _sum_jets([gamma_bar[d][a][a] for a in range(n)], nv, backend)
        dens.append((tr - tr_bar) * c_dens)

    object.__setattr__(struct, "torsion", _freeze(torsion))
    object.__setattr__(struct, "gamma_bar", _freeze(gamma_bar))
    object.__setattr__(struct, "dens", tuple(dens))

    _verify_structure_equations(struct)
    return struct


def _sum_jets(jets: Sequence[Jet], nv: int, backend: str) -> Jet:
    acc = None
    for j in jets:
        acc = j if acc is None else acc + j
    return acc if acc is not None else Jet.zero(nv, backend, None)


def _freeze(x):
    if isinstance(x, list):
        return tuple(_freeze(e) for e in x)
    return x


def _check_contact(theta, dtheta, nv, backend):
    theta0 = [c.constant_term for c in theta]
    if all(scalar_is_zero(x, _tol(backend)) for x in theta0):
        raise DegenerateContactError("contact form vanishes at the base point")
    kernel = nullspace([theta0], backend)
    dtheta0 = [[c.constant_term for c in row] for row in dtheta]
    m = []
    for u in kernel:
        row = []
        for v in kernel:
            s = scalar(backend, 0)
            for i in range(nv):
                if scalar_is_zero(u[i]):
                    continue
                for j in range(nv):
                    s = s + u[i] * dtheta0[i][j] * v[j]
            row.append(s)
        m.append(row)
    if rank(m, backend != EXACT) != nv - 1:
        raise DegenerateContactError("contact form is degenerate at the base point")


def _check_signature(h, n, backend):
    h0 = [[c.constant_term for c in row] for row in h]
    for k in range(1, n + 1):
        minor = _det([row[:k] for row in h0[:k]], backend)
        re = minor.re if isinstance(minor, QI) else minor.real
        im = minor.im if isinstance(minor, QI) else minor.imag
        if isinstance(minor, QI):
            if im != 0 or re <= 0:
                raise SignatureError("Levi form is not positive definite at the base point")
        else:
            if abs(im) > 1e-9 or re <= 1e-9:
                raise SignatureError("Levi form is not positive definite at the base point")


def _det(m, backend):
    size = len(m)
    if size == 1:
        return m[0][0]
    acc = scalar(backend, 0)
    sign = scalar(backend, 1)
    for j in range(size):
        sub = [row[:j] + row[j + 1:] for row in m[1:]]
        acc = acc + sign * m[0][j] * _det(sub, backend)
        sign = -sign
    return acc


def _verify_structure_equations(s: PseudohermitianStructure) -> None:
    """Exact residuals of both defining equations of the connection."""
    res1 = first_structure_equation_residuals(s)
    for c, resid in enumerate(res1):
        if not two_form_is_zero(resid, _tol(s.backend)):
            raise RuntimeError(f"internal: first structure equation fails for theta^{c + 1}")
    res2 = metric_compatibility_residuals(s)
    for a in range(s.n):
        for b in range(s.n):
            if any(not x.is_zero(_tol(s.backend)) for x in res2[a][b]):
                raise RuntimeError("internal: metric compatibility fails")


def first_structure_equation_residuals(s: PseudohermitianStructure) -> List[TwoForm]:
    n, backend = s.n, s.backend
    i1 = scalar(backend, 0, 1)
    half = scalar(backend, rational(1, 2))
    out = []
    for c in range(n):
        expect = None
        for a in range(n):
            term = wedge(list(s.coframe[a]), s.omega_form(a, c))
            expect = term if expect is None else two_form_add(expect, term)
        for a in range(n):
            coeff = s.torsion_bar_up[a][c]
            term = two_form_scale(wedge(list(s.theta), list(s.coframe_bar[a])), coeff)
            expect = two_form_add(expect, term)
        for a in range(n):
            for b in range(n):
                coeff = chart_conj(s.nijenhuis_up[c][a][b], n) * half
                term = two_form_scale(wedge(list(s.coframe_bar[a]), list(s.coframe_bar[b])), coeff)
                expect = two_form_add(expect, term)
        dcof = exterior_derivative(list(s.coframe[c]))
        out.append(two_form_add(dcof, two_form_scale(expect, scalar(backend, -1))))
    return out


def metric_compatibility_residuals(s: PseudohermitianStructure) -> List[List[OneForm]]:
    n = s.n
    out = []
    for a in range(n):
        row = []
        for b in range(n):
            form = [_partial(s.h[a][b], i) for i in range(s.num_vars)]
            for g in range(n):
                om = s.omega_form(a, g)
                form = [x - om_i * s.h[g][b] for x, om_i in zip(form, om)]
                om_bar = form_conj(s.omega_form(b, g), n)
                form = [x - om_i * s.h[a][g] for x, om_i in zip(form, om_bar)]
            row.append(form)
        out.append(row)
    return out


def tanaka_webster(s: PseudohermitianStructure):
    """Connection coefficients and lowered torsion of the structure."""
    return s.gamma, s.torsion


# ---------------------------------------------------------------------------
# weighted tensors

_SLOT_CODES = ("u", "d", "U", "D")


@dataclass(frozen=True)
class WeightedTensor:
    """Trivialized weighted tensor with typed index slots.

    Slot codes: 'u' and 'd' are holomorphic up/down indices, 'U' and 'D'
    their conjugates, 'x' a combined derivative slot over directions
    (0, holomorphic, antiholomorphic).  Components are jets in the
    trivialization determined by the structure's contact form; ``weight``
    is the (w, w') pair of the tensor.  For an 'x' slot the Reeb
    component implicitly carries one unit less in each weight.
    """

    structure: PseudohermitianStructure
    slots: Tuple[str, ...]
    weight: Tuple[int, int]
    comps: object

    def _shape(self) -> Tuple[int, ...]:
        n = self.structure.n
        return tuple(2 * n + 1 if c == "x" else n for c in self.slots)

    # -- access ---------------------------------------------------------

    def at(self, *idx) -> Jet:
        c = self.comps
        for i in idx:
            c = c[i]
        return c

    def _map(self, fn: Callable[[Tuple[int, ...]], Jet]) -> object:
        return _nested(self._shape(), fn)

    # -- algebra ----------------------------------------------------------

    def _like(self, comps, slots=None, weight=None) -> "WeightedTensor":
        return WeightedTensor(self.structure,
                              self.slots if slots is None else tuple(slots),
                              self.weight if weight is None else tuple(weight),
                              comps)

    def _check(self, other: "WeightedTensor") -> None:
        if self.slots != other.slots or self.weight != other.weight:
            raise ValueError("tensor shape or weight mismatch")

    def __add__(self, other: "WeightedTensor") -> "WeightedTensor":
        self._check(other)
        return self._like(self._map(lambda i: self.at(*i) + other.at(*i)))

    def __sub__(self, other: "WeightedTensor") -> "WeightedTensor":
        self._check(other)
        return self._like(self._map(lambda i: self.at(*i) - other.at(*i)))

    def __neg__(self) -> "WeightedTensor":
        return self._like(self._map(lambda i: -self.at(*i)))

    def scale(self, c) -> "WeightedTensor":
        return self._like(self._map(lambda i: self.at(*i) * c))

    def mul_jet(self, jet: Jet, weight_shift=(0, 0)) -> "WeightedTensor":
        w = (self.weight[0] + weight_shift[0], self.weight[1] + weight_shift[1])
        return self._like(self._map(lambda i: self.at(*i) * jet), weight=w)

    def is_zero(self, tol: float = 0.0) -> bool:
        ok = [True]

        def fn(i):
            leaf = self.at(*i)
            if not leaf.is_zero(tol):
                ok[0] = False
            return leaf

        self._map(fn)
        return ok[0]

    def agree(self, other: "WeightedTensor", rel_tol: float = 0.0) -> bool:
        self._check(other)
        if self.structure.backend == EXACT:
            return (self - other).is_zero()
        d = self - other
        mags = []

        def collect(t, acc):
            def fn(i):
                leaf = t.at(*i)
                acc.append(leaf.max_abs())
                return leaf
            t._map(fn)

        collect(self, mags)
        collect(other, mags)
        scale_ref = max(mags + [1.0])
        resid = []
        collect(d, resid)
        return max(resid + [0.0]) <= rel_tol * scale_ref

    def conj(self) -> "WeightedTensor":
        swap = {"u": "U", "U": "u", "d": "D", "D": "d", "x": "x"}
        s = self.structure

        def fn(idx):
            src = tuple(s.bar_dir(i) if c == "x" else i
                        for i, c in zip(idx, self.slots))
            return s.conj_jet(self.at(*src))

        return self._like(self._map(fn),
                          slots=tuple(swap[c] for c in self.slots),
                          weight=(self.weight[1], self.weight[0]))

    # -- index gymnastics -------------------------------------------------

    def symmetrize(self, i: int, j: int) -> "WeightedTensor":
        if self.slots[i] != self.slots[j]:
            raise ValueError("cannot symmetrize slots of different type")
        half = self.structure._scalar(rational(1, 2))

        def fn(idx):
            swapped = list(idx)
            swapped[i], swapped[j] = idx[j], idx[i]
            return (self.at(*idx) + self.at(*swapped)) * half

        return self._like(self._map(fn))

    def antisymmetrize(self, i: int, j: int) -> "WeightedTensor":
        if self.slots[i] != self.slots[j]:
            raise ValueError("cannot antisymmetrize slots of different type")
        half = self.structure._scalar(rational(1, 2))

        def fn(idx):
            swapped = list(idx)
            swapped[i], swapped[j] = idx[j], idx[i]
            return (self.at(*idx) - self.at(*swapped)) * half

        return self._like(self._map(fn))

    def trace(self, i: int, j: int) -> "WeightedTensor":
        pair = {self.slots[i], self.slots[j]}
        if pair not in ({"u", "d"}, {"U", "D"}):
            raise ValueError("trace needs an up/down pair of matching bar type")
        n = self.structure.n
        slots = [c for k, c in enumerate(self.slots) if k not in (i, j)]
        lo, hi = min(i, j), max(i, j)

        def fn(idx):
            acc = None
            for a in range(n):
                full = list(idx)
                full.insert(lo, a)
                full.insert(hi, a)
                term = self.at(*full)
                acc = term if acc is None else acc + term
            return acc

        return WeightedTensor(self.structure, tuple(slots), self.weight,
                              _nested(tuple(n if c != "x" else 2 * n + 1 for c in slots) or (), fn))

    def lower(self, i: int) -> "WeightedTensor":
        """Contract slot i with the weighted Levi form; 'u' -> 'D', 'U' -> 'd'."""
        code = self.slots[i]
        if code not in ("u", "U"):
            raise ValueError("can only lower an up index")
        s = self.structure
        n = s.n
        new_code = "D" if code == "u" else "d"
        slots = list(self.slots)
        slots[i] = new_code

        def fn(idx):
            acc = None
            for a in range(n):
                src = list(idx)
                src[i] = a
                hh = s.h[a][idx[i]] if code == "u" else s.h[idx[i]][a]
                term = self.at(*src) * hh
                acc = term if acc is None else acc + term
            return acc

        return self._like(self._map_with(slots, fn), slots=slots,
                          weight=(self.weight[0] + 1, self.weight[1] + 1))

    def raise_(self, i: int) -> "WeightedTensor":
        """Contract slot i with the inverse Levi form; 'd' -> 'U', 'D' -> 'u'."""
        code = self.slots[i]
        if code not in ("d", "D"):
            raise ValueError("can only raise a down index")
        s = self.structure
        n = s.n
        new_code = "U" if code == "d" else "u"
        slots = list(self.slots)
        slots[i] = new_code

        def fn(idx):
            acc = None
            for a in range(n):
                src = list(idx)
                src[i] = a
                hh = s.h_up[a][idx[i]] if code == "d" else s.h_up[idx[i]][a]
                term = self.at(*src) * hh
                acc = term if acc is None else acc + term
            return acc

        return self._like(self._map_with(slots, fn), slots=slots,
                          weight=(self.weight[0] - 1, self.weight[1] - 1))

    def _map_with(self, slots, fn):
        n = self.structure.n
        shape = tuple(2 * n + 1 if c == "x" else n for c in slots)
        return _nested(shape, fn)

    def otimes(self, other: "WeightedTensor") -> "WeightedTensor":
        if other.structure is not self.structure:
            raise ValueError("tensors live on different structures")
        k = len(self.slots)
        slots = self.slots + other.slots
        weight = (self.weight[0] + other.weight[0], self.weight[1] + other.weight[1])

        def fn(idx):
            return self.at(*idx[:k]) * other.at(*idx[k:])

        return WeightedTensor(self.structure, slots, weight,
                              self._map_with(slots, fn))

    # -- covariant differentiation ----------------------------------------

    def _covd(self, d: int) -> Callable[[Tuple[int, ...]], Jet]:
        s = self.structure
        n = s.n
        ww = self.weight[0] - self.weight[1]
        dens = s.dens[d] * s._scalar(ww) if ww else None

        def fn(idx):
            out = s.dirderiv(self.at(*idx), d)
            if dens is not None:
                out = out + dens * self.at(*idx)
            for pos, code in enumerate(self.slots):
                a = idx[pos]
                for c in range(n):
                    if code == "u":
                        g = s.gamma[d][c][a]
                        sign = 1
                    elif code == "d":
                        g = s.gamma[d][a][c]
                        sign = -1
                    elif code == "U":
                        g = s.gamma_bar[d][c][a]
                        sign = 1
                    elif code == "D":
                        g = s.gamma_bar[d][a][c]
                        sign = -1
                    else:
                        raise ValueError("cannot differentiate a tensor with a derivative slot")
                    if _provably_zero(g):
                        continue
                    src = list(idx)
                    src[pos] = c
                    term = g * self.at(*src)
                    out = out + term if sign > 0 else out - term
            return out

        return fn

    def nabla_h(self) -> "WeightedTensor":
        """Holomorphic covariant derivative; the new 'd' slot comes last."""
        s = self.structure
        fns = [self._covd(1 + m) for m in range(s.n)]
        slots = self.slots + ("d",)

        def fn(idx):
            return fns[idx[-1]](idx[:-1])

        return WeightedTensor(s, slots, self.weight, self._map_with(slots, fn))

    def nabla_a(self) -> "WeightedTensor":
        """Antiholomorphic covariant derivative; the new 'D' slot comes last."""
        s = self.structure
        fns = [self._covd(1 + s.n + m) for m in range(s.n)]
        slots = self.slots + ("D",)

        def fn(idx):
            return fns[idx[-1]](idx[:-1])

        return WeightedTensor(s, slots, self.weight, self._map_with(slots, fn))

    def nabla_0(self) -> "WeightedTensor":
        """Reeb covariant derivative; weight drops by (1, 1)."""
        fn = self._covd(0)
        return WeightedTensor(self.structure, self.slots,
                              (self.weight[0] - 1, self.weight[1] - 1),
                              self._map(fn))


def _nested(shape: Tuple[int, ...], fn: Callable, prefix: Tuple[int, ...] = ()):
    if not shape:
        return fn(prefix)
    return [_nested(shape[1:], fn, prefix + (k,)) for k in range(shape[0])]


def wt_scalar(s: PseudohermitianStructure, jet: Jet, weight=(0, 0)) -> WeightedTensor:
    return WeightedTensor(s, (), tuple(weight), jet)


def wt_from_array(s: PseudohermitianStructure, slots, comps, weight=(0, 0)) -> WeightedTensor:
    return WeightedTensor(s, tuple(slots), tuple(weight), comps)


def covariant_derivative(t: WeightedTensor, s: PseudohermitianStructure) -> WeightedTensor:
    """Append one combined derivative slot over (0, holomorphic, anti)."""
    if s is not t.structure:
        raise ValueError("tensor does not belong to this structure")
    d0 = t.nabla_0()
    dh = t.nabla_h()
    da = t.nabla_a()
    n = s.n
    slots = t.slots + ("x",)

    def fn(idx):
        d = idx[-1]
        if d == 0:
            return d0.at(*idx[:-1])
        if d <= n:
            return dh.at(*(idx[:-1] + (d - 1,)))
        return da.at(*(idx[:-1] + (d - n - 1,)))

    return WeightedTensor(s, slots, t.weight, t._map_with(slots, fn))


# -- canonical tensors ------------------------------------------------------


def levi_tensor(s: PseudohermitianStructure) -> WeightedTensor:
    comps = [[s.h[a][b] for b in range(s.n)] for a in range(s.n)]
    return wt_from_array(s, ("d", "D"), comps, (1, 1))


def torsion_tensor(s: PseudohermitianStructure) -> WeightedTensor:
    comps = [[s.torsion[a][b] for b in range(s.n)] for a in range(s.n)]
    return wt_from_array(s, ("d", "d"), comps, (0, 0))


def nijenhuis_tensor(s: PseudohermitianStructure) -> WeightedTensor:
    comps = [[[s.nijenhuis[c][a][b] for b in range(s.n)] for a in range(s.n)]
             for c in range(s.n)]
    return wt_from_array(s, ("d", "d", "d"), comps, (1, 1))


def nijenhuis_sym(s: PseudohermitianStructure) -> WeightedTensor:
    return nijenhuis_tensor(s).symmetrize(0, 1)


def nijenhuis_skew(s: PseudohermitianStructure) -> WeightedTensor:
    return nijenhuis_tensor(s).antisymmetrize(0, 1)


def nijenhuis_norm_sq(s: PseudohermitianStructure) -> WeightedTensor:
    n = nijenhuis_tensor(s)
    up = n.conj().raise_(0).raise_(1).raise_(2)
    prod = n.otimes(up)
    return prod.trace(0, 3).trace(0, 2).trace(0, 1)


def divergence_nijenhuis_sym(s: PseudohermitianStructure) -> WeightedTensor:
    """-(nabla^g) N_{(ab)g}; the stored layout N_{cab} reads indices in order."""
    return -(nijenhuis_sym(s).nabla_a().raise_(3).trace(2, 3))


def divergence_nijenhuis_skew(s: PseudohermitianStructure) -> WeightedTensor:
    """-(nabla^g) N_{[ab]g}."""
    return -(nijenhuis_skew(s).nabla_a().raise_(3).trace(2, 3))


# ---------------------------------------------------------------------------
# curvature


@dataclass(frozen=True)
class CurvaturePackage:
    """Curvature of the canonical connection and its contractions.

    ``r`` is R_a^b_{s t-bar} at [a][b][s][t]; the w and v arrays follow
    the same slot order with the form indices last.  The *_formula
    fields hold the independent torsion/Nijenhuis expressions for the
    same components.
    """

    structure: PseudohermitianStructure
    r: Tuple                    # R_a^b_{s t-bar}
    w_holo: Tuple               # W_a^b_g
    w_anti: Tuple               # W_a^b_{g-bar}
    v_holo: Tuple               # V_a^b_{st}
    v_anti: Tuple               # V_a^b_{s-bar t-bar}
    w_holo_formula: Tuple
    w_anti_formula: Tuple
    v_holo_formula: Tuple
    v_anti_formula: Tuple
    ricci: WeightedTensor       # R_{a b-bar}
    ricci_p: WeightedTensor     # R'_{a b-bar}
    ricci_pp: WeightedTensor    # R''_{a b-bar}
    scalar_r: WeightedTensor
    scalar_r_pp: WeightedTensor
    schouten: WeightedTensor    # P_{a b-bar}
    schouten_p: WeightedTensor
    schouten_pp: WeightedTensor
    p_trace: WeightedTensor
    p_pp_trace: WeightedTensor


def curvature(s: PseudohermitianStructure) -> CurvaturePackage:
    n, backend = s.n, s.backend

    pi = [[None] * n for _ in range(n)]
    for a in range(n):
        om_rows = [s.omega_form(a, g) for g in range(n)]
        for b in range(n):
            d_om = exterior_derivative(s.omega_form(a, b))
            acc = d_om
            for g in range(n):
                term = two_form_scale(wedge(om_rows[g], s.omega_form(g, b)),
                                      scalar(backend, -1))
                acc = two_form_add(acc, term)
            pi[a][b] = acc

    frame = [list(z) for z in s.frame]
    frame_bar = [list(z) for z in s.frame_bar]
    reeb = list(s.reeb)

    r = [[[[two_form_apply(pi[a][b], frame[sg], frame_bar[tu])
            for tu in range(n)] for sg in range(n)]
          for b in range(n)] for a in range(n)]
    w_holo = [[[two_form_apply(pi[a][b], frame[m], reeb) for m in range(n)]
               for b in range(n)] for a in range(n)]
    w_anti = [[[two_form_apply(pi[a][b], frame_bar[m], reeb) for m in range(n)]
               for b in range(n)] for a in range(n)]
    v_holo = [[[[two_form_apply(pi[a][b], frame[sg], frame[tu])
                 for tu in range(n)] for sg in range(n)]
               for b in range(n)] for a in range(n)]
    v_anti = [[[[two_form_apply(pi[a][b], frame_bar[sg], frame_bar[tu])
                 for tu in range(n)] for sg in range(n)]
               for b in range(n)] for a in range(n)]

    # Reassembling the five blocks must reproduce the curvature form.
    half = scalar(backend, rational(1, 2))
    for a in range(n):
        for b in range(n):
            acc = None
            for sg in range(n):
                for tu in range(n):
                    t1 = two_form_scale(wedge(list(s.coframe[sg]), list(s.coframe_bar[tu])),
                                        r[a][b][sg][tu])
                    acc = t1 if acc is None else two_form_add(acc, t1)
                    t2 = two_form_scale(wedge(list(s.coframe[sg]), list(s.coframe[tu])),
                                        v_holo[a][b][sg][tu] * half)
                    acc = two_form_add(acc, t2)
                    t3 = two_form_scale(wedge(list(s.coframe_bar[sg]), list(s.coframe_bar[tu])),
                                        v_anti[a][b][sg][tu] * half)
                    acc = two_form_add(acc, t3)
            for m in range(n):
                t4 = two_form_scale(wedge(list(s.coframe[m]), list(s.theta)),
                                    w_holo[a][b][m])
                acc = two_form_add(acc, t4)
                t5 = two_form_scale(wedge(list(s.coframe_bar[m]), list(s.theta)),
                                    w_anti[a][b][m])
                acc = two_form_add(acc, t5)
            resid = two_form_add(pi[a][b], two_form_scale(acc, scalar(backend, -1)))
            if not two_form_is_zero(resid, _tol(backend)):
                raise RuntimeError("internal: curvature decomposition is incomplete")

    wv = _wv_formulas(s)

    r_t = wt_from_array(s, ("d", "u", "d", "D"), r, (0, 0))
    ricci = r_t.trace(0, 1)
    # R'_{a b-bar} traces the fully lowered tensor over its second pair.
    r_low = r_t.lower(1)
    ricci_p = r_low.raise_(3).trace(2, 3)

    ricci_pp_comps = _nested((n, n), lambda i: _sum_jets(
        [r[i[0]][g][g][i[1]] for g in range(n)], s.num_vars, backend))
    ricci_pp = wt_from_array(s, ("d", "D"), ricci_pp_comps, (0, 0))

    scalar_r = ricci.raise_(0).trace(0, 1)
    scalar_r_pp = ricci_pp.raise_(0).trace(0, 1)

    hh = levi_tensor(s)
    c_np2 = s._scalar(rational(1, n + 2))
    c_tr = s._scalar(rational(1, 2 * (n + 1)))

    def schouten_of(ric, sc):
        return (ric - hh.mul_jet(sc.comps * c_tr, (-1, -1))).scale(c_np2)

    schouten = schouten_of(ricci, scalar_r)
    scalar_r_p = ricci_p.raise_(0).trace(0, 1)
    schouten_p = schouten_of(ricci_p, scalar_r_p)
    schouten_pp = schouten_of(ricci_pp, scalar_r_pp)
    p_trace = schouten.raise_(0).trace(0, 1)
    p_pp_trace = schouten_pp.raise_(0).trace(0, 1)

    return CurvaturePackage(
        structure=s,
        r=_freeze(r),
        w_holo=_freeze(w_holo), w_anti=_freeze(w_anti),
        v_holo=_freeze(v_holo), v_anti=_freeze(v_anti),
        w_holo_formula=_freeze(wv[0]), w_anti_formula=_freeze(wv[1]),
        v_holo_formula=_freeze(wv[2]), v_anti_formula=_freeze(wv[3]),
        ricci=ricci, ricci_p=ricci_p, ricci_pp=ricci_pp,
        scalar_r=scalar_r, scalar_r_pp=scalar_r_pp,
        schouten=schouten, schouten_p=schouten_p, schouten_pp=schouten_pp,
        p_trace=p_trace, p_pp_trace=p_pp_trace,
    )


def _wv_formulas(s: PseudohermitianStructure):
    """Torsion/Nijenhuis expressions for the W and V curvature components."""
    n = s.n
    i1 = s._scalar(0, 1)
    a_t = torsion_tensor(s)                     # A_{ab}
    n3 = nijenhuis_tensor(s)                    # N_{cab}, indices in order

    # W_a^b_g = nabla^b A_{ag} + N_{ags} A^{bs}
    da_up = a_t.nabla_a().raise_(2)             # nabla^b A_{ag} at [a][g][b]
    a_uu = a_t.conj().raise_(0).raise_(1)       # A^{bs} at [b][s]
    w_holo = _nested((n, n, n), lambda i: _sum_jets(
        [n3.at(i[0], i[2], sg) * a_uu.at(i[1], sg) for sg in range(n)],
        s.num_vars, s.backend) + da_up.at(i[0], i[2], i[1]))

    # W_a^b_{g-bar} = -nabla_a A^b_{g-bar} - N^b_{g-bar s-bar} A_a^{s-bar}
    ab_up = a_t.conj().raise_(0)                # A^b_{g-bar} at [b][g]
    d_ab = ab_up.nabla_h()                      # nabla_a A^b_{g-bar} at [b][g][a]
    nb_up = n3.conj().raise_(0)                 # N^b_{g-bar s-bar} at [b][g][s]
    a_mix = a_t.raise_(1)                       # A_a^{s-bar} at [a][s]
    w_anti = _nested((n, n, n), lambda i: -(d_ab.at(i[1], i[2], i[0]) + _sum_jets(
        [nb_up.at(i[1], i[2], sg) * a_mix.at(i[0], sg) for sg in range(n)],
        s.num_vars, s.backend)))

    # V_a^b_{st} = 2i delta_{[s}^b A_{a t]} - nabla^b N_{ast}
    dn_up = n3.nabla_a().raise_(3)              # nabla^b N_{ast} at [a][s][t][b]

    def vh(idx):
        a, b, sg, tu = idx
        val = -dn_up.at(a, sg, tu, b)
        term = s.zero_jet(None)
        if b == sg:
            term = term + s.torsion[a][tu]
        if b == tu:
            term = term - s.torsion[a][sg]
        return val + term * i1

    v_holo = _nested((n, n, n, n), vh)

    # V_a^b_{s-bar t-bar} = 2i h_{a[s-bar} A^b_{t-bar]} + nabla_a N^b_{s-bar t-bar}
    dnb = nb_up.nabla_h()                       # at [b][s][t][a]

    def va(idx):
        a, b, sg, tu = idx
        val = dnb.at(b, sg, tu, a)
        term = s.h[a][sg] * ab_up.at(b, tu) - s.h[a][tu] * ab_up.at(b, sg)
        return val + term * i1

    v_anti = _nested((n, n, n, n), va)
    return w_holo, w_anti, v_holo, v_anti


# ---------------------------------------------------------------------------
# contact form rescaling


def rescale_contact_form(s: PseudohermitianStructure, u: Jet) -> PseudohermitianStructure:
    """Structure of e^u theta with the same frame, recomputed from scratch."""
    return build_structure(s.spec.rescale(u))


def density_rescale_factor(s: PseudohermitianStructure, u: Jet, weight) -> Jet:
    """Trivialization transfer e^{(w + w')/2 u} for a (w, w') density."""
    w, wp = weight
    c = s._scalar(rational(w + wp, 2))
    return (u.truncate(s.order) * c).compose_exp()


def gradient_parts(s: PseudohermitianStructure, u: Jet, weight=(0, 0)):
    """(u_a, u_{a-bar}, u_0) of a scalar as weighted tensors."""
    f = wt_scalar(s, u.truncate(s.order), weight)
    return f.nabla_h(), f.nabla_a(), f.nabla_0()


def rescaled_connection_prediction(s: PseudohermitianStructure, u: Jet):
    """Coordinate forms of the connection for e^u theta, same frame.

    omega-hat_a^b = omega_a^b + u_a theta^b - u^b theta_a
                    + delta_a^b u_g theta^g
                    + i (u^b_a + u_a u^b + delta_a^b u_g u^g) theta.
    Second derivatives written u_{XY} mean nabla_Y nabla_X u.
    """
    n = s.n
    i1 = s._scalar(0, 1)
    f = wt_scalar(s, u.truncate(s.order), (0, 0))
    du_h = f.nabla_h()
    du_a = f.nabla_a()
    du_up = du_a.raise_(0)                 # u^b at [b]
    ddu = du_a.nabla_h()                   # u_{g-bar a} = nabla_a nabla_{g-bar} u
    ddu_up = ddu.raise_(0)                 # u^b_a at [b][a]
    ug_ug = du_h.otimes(du_up).trace(0, 1).comps   # u_g u^g

    theta_low = []
    for a in range(n):
        form = [s.zero_jet() for _ in range(s.num_vars)]
        for b in range(n):
            form = [x + s.h[a][b] * y for x, y in zip(form, s.coframe_bar[b])]
        theta_low.append(form)

    out = []
    for a in range(n):
        row = []
        for b in range(n):
            form = s.omega_form(a, b)
            form = [x + du_h.at(a) * y for x, y in zip(form, s.coframe[b])]
            form = [x - du_up.at(b) * y for x, y in zip(form, theta_low[a])]
            if a == b:
                for g in range(n):
                    form = [x + du_h.at(g) * y for x, y in zip(form, s.coframe[g])]
            coeff = ddu_up.at(b, a) + du_h.at(a) * du_up.at(b)
            if a == b:
                coeff = coeff + ug_ug
            form = [x + coeff * i1 * y for x, y in zip(form, s.theta)]
            row.append(form)
        out.append(row)
    return out


def rescaled_torsion_prediction(s: PseudohermitianStructure, u: Jet) -> WeightedTensor:
    """A-hat_{ab} = A_{ab} + i u_{(ab)} - i u_a u_b + i N_{(ab)g} u^g."""
    i1 = s._scalar(0, 1)
    f = wt_scalar(s, u.truncate(s.order), (0, 0))
    du_h = f.nabla_h()
    ddu = du_h.nabla_h().symmetrize(0, 1)
    uu = du_h.otimes(du_h)
    nu = nijenhuis_sym(s).otimes(f.nabla_a().raise_(0)).trace(2, 3)
    return torsion_tensor(s) + (ddu - uu).scale(i1) + nu.scale(i1)


def rescaled_schouten_prediction(s: PseudohermitianStructure, u: Jet) -> WeightedTensor:
    """P-hat_{a b-bar} = P_{a b-bar} - (u_{a b-bar} + u_{b-bar a})/2 - u_g u^g h/2."""
    pkg = curvature(s)
    half = s._scalar(rational(1, 2))
    f = wt_scalar(s, u.truncate(s.order), (0, 0))
    du_h = f.nabla_h()
    du_a = f.nabla_a()
    m1 = du_h.nabla_a()                    # u_{a b-bar} = nabla_{b-bar} nabla_a u
    m2_raw = du_a.nabla_h()                # u_{b-bar a} at [b][a]
    m2 = wt_from_array(s, ("d", "D"),
                       _nested((s.n, s.n), lambda i: m2_raw.at(i[1], i[0])),
                       (0, 0))
    ug_ug = du_h.otimes(du_a.raise_(0)).trace(0, 1).comps
    hh = levi_tensor(s)
    return pkg.schouten - (m1 + m2).scale(half) - hh.mul_jet(ug_ug * half, (-1, -1))


def rescaled_reeb_prediction(s: PseudohermitianStructure, u: Jet) -> VectorField:
    """e^u T-hat = T - i u^g Z_g + i u^{g-bar} Z_{g-bar}."""
    i1 = s._scalar(0, 1)
    f = wt_scalar(s, u.truncate(s.order), (0, 0))
    du_up_h = f.nabla_a().raise_(0)        # u^g
    du_up_a = f.nabla_h().raise_(0)        # u^{g-bar}
    out = list(s.reeb)
    for g in range(s.n):
        out = [x - i1 * du_up_h.at(g) * y for x, y in zip(out, s.frame[g])]
        out = [x + i1 * du_up_a.at(g) * y for x, y in zip(out, s.frame_bar[g])]
    return out
