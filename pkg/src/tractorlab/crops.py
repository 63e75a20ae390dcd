"""Contact Hamiltonian fields and the CR Killing operator.

A real density f of weight (1, 1) generates a contact vector field X_f;
the Lie derivative of the almost complex structure along X_f is measured
by a symmetric deformation tensor, and the map f -> psi is the CR Killing
operator.  Everything here works on trivialized jets over a fixed
pseudohermitian structure.
"""

from dataclasses import dataclass
from typing import List

from .exactnum import Jet, scalar_is_zero
from .pseudoherm import (
    PseudohermitianStructure,
    WeightedTensor,
    _partial,
    _tol,
    form_apply,
    lie_bracket,
    nijenhuis_sym,
    nijenhuis_tensor,
    torsion_tensor,
    vf_conj,
    wt_from_array,
    wt_scalar,
)

VectorField = List[Jet]


@dataclass(frozen=True)
class DensityFunction:
    """Real (1, 1)-density, trivialized against the structure's contact form.

    On weight (1, 1) the density connection drops out, so first covariant
    derivatives of ``jet`` coincide with plain frame derivatives.
    """

    structure: PseudohermitianStructure
    jet: Jet

    def __post_init__(self):
        s = self.structure
        if self.jet.num_vars != s.num_vars:
            raise ValueError("density jet has the wrong number of variables")
        if not (self.jet - s.conj_jet(self.jet)).is_zero(_tol(s.backend)):
            raise ValueError("density must be real-valued")

    def tensor(self) -> WeightedTensor:
        return wt_scalar(self.structure, self.jet, (1, 1))


@dataclass(frozen=True)
class DeformationTensor:
    """Symmetric pair (psi_{ab}, psi_{a-bar b-bar}) of weight (1, 1)."""

    psi: WeightedTensor
    psi_bar: WeightedTensor

    def __post_init__(self):
        p = self.psi
        s = p.structure
        tol = _tol(s.backend)
        if p.slots != ("d", "d") or p.weight != (1, 1):
            raise ValueError("deformation tensor must be a (d, d) tensor of weight (1, 1)")
        if not (p - _transpose(p)).is_zero(tol):
            raise ValueError("deformation tensor must be symmetric")
        if not (self.psi_bar - p.conj()).is_zero(tol):
            raise ValueError("barred block must be the conjugate of the unbarred block")

    @property
    def structure(self) -> PseudohermitianStructure:
        return self.psi.structure

    def is_zero(self, tol: float = 0.0) -> bool:
        return self.psi.is_zero(tol)

    def agree(self, other: "DeformationTensor", rel_tol: float = 0.0) -> bool:
        return self.psi.agree(other.psi, rel_tol)


def _transpose(t: WeightedTensor) -> WeightedTensor:
    n = t.structure.n
    return wt_from_array(t.structure, t.slots,
                         [[t.at(b, a) for b in range(n)] for a in range(n)],
                         t.weight)


def _second_derivative(f: DensityFunction) -> WeightedTensor:
    """nabla_a nabla_b f at slot order (a, b): the inner derivative is b."""
    ddf = f.tensor().nabla_h().nabla_h()
    n = f.structure.n
    return wt_from_array(f.structure, ("d", "d"),
                         [[ddf.at(b, a) for b in range(n)] for a in range(n)],
                         (1, 1))


def _gradient_up(f: DensityFunction) -> WeightedTensor:
    """nabla^a f = h^{a b-bar} nabla_{b-bar} f."""
    return f.tensor().nabla_a().raise_(0)


def cr_killing_unsymmetrized(f: DensityFunction,
                             s: PseudohermitianStructure) -> WeightedTensor:
    """psi_{ab} = i nabla_a nabla_b f - A_{ab} f + i N_{bag} nabla^g f.

    Symmetric in (a, b) by the cyclic identity of the Nijenhuis tensor;
    the symmetry is what fixes the sign of the N term.
    """
    if f.structure is not s:
        raise ValueError("density is not trivialized on this structure")
    n = s.n
    i1 = s._scalar(0, 1)
    ddf = _second_derivative(f)
    grad_up = _gradient_up(f)
    nij = nijenhuis_tensor(s)
    af = torsion_tensor(s).mul_jet(f.jet, (1, 1))

    def entry(a, b):
        out = ddf.at(a, b) * i1 - af.at(a, b)
        for g in range(n):
            out = out + nij.at(b, a, g) * grad_up.at(g) * i1
        return out

    return wt_from_array(s, ("d", "d"),
                         [[entry(a, b) for b in range(n)] for a in range(n)],
                         (1, 1))


def cr_killing(f: DensityFunction, s: PseudohermitianStructure) -> DeformationTensor:
    """Symmetric form: i nabla_(a nabla_b) f - A_{ab} f + i N_{(ab)g} nabla^g f."""
    if f.structure is not s:
        raise ValueError("density is not trivialized on this structure")
    i1 = s._scalar(0, 1)
    ddf_sym = _second_derivative(f).symmetrize(0, 1)
    af = torsion_tensor(s).mul_jet(f.jet, (1, 1))
    nu = nijenhuis_sym(s).otimes(_gradient_up(f)).trace(2, 3)
    psi = ddf_sym.scale(i1) - af + nu.scale(i1)
    alt = cr_killing_unsymmetrized(f, s).symmetrize(0, 1)
    if not psi.agree(alt, _tol(s.backend)):
        raise RuntimeError("internal: the two forms of the CR Killing operator disagree")
    return DeformationTensor(psi=psi, psi_bar=psi.conj())


def contact_hamiltonian(f: DensityFunction, s: PseudohermitianStructure) -> VectorField:
    """X_f = f T + i (nabla^a f) Z_a - i (nabla^{a-bar} f) Z_{a-bar}.

    Characterized by theta(X_f) = f and (X_f -| dtheta)|_H = -df|_H; the
    field does not depend on the choice of contact form.
    """
    if f.structure is not s:
        raise ValueError("density is not trivialized on this structure")
    i1 = s._scalar(0, 1)
    grad_up_h = _gradient_up(f)                    # nabla^a f
    grad_up_a = f.tensor().nabla_h().raise_(0)     # nabla^{a-bar} f
    out = [f.jet * c for c in s.reeb]
    for g in range(s.n):
        out = [x + i1 * grad_up_h.at(g) * y for x, y in zip(out, s.frame[g])]
        out = [x - i1 * grad_up_a.at(g) * y for x, y in zip(out, s.frame_bar[g])]
    return out


def reeb_weight_derivative(f: DensityFunction, s: PseudohermitianStructure) -> Jet:
    """T f in the trivialization; also the factor in L_{X_f} theta = (Tf) theta."""
    return s.dirderiv(f.jet, 0)


def lie_derivative_contact_form(x: VectorField,
                                s: PseudohermitianStructure) -> List[Jet]:
    """L_x theta as a coordinate 1-form: d(theta(x)) + x -| dtheta."""
    fx = form_apply(list(s.theta), x)
    dfx = [_partial(fx, i) for i in range(s.num_vars)]
    return [dfx[j] + _contract(s.dtheta, x, j) for j in range(s.num_vars)]


def _contract(two, x: VectorField, j: int) -> Jet:
    acc = None
    for i, c in enumerate(x):
        term = c * two[i][j]
        acc = term if acc is None else acc + term
    return acc


def lie_derivative_J(x: VectorField, s: PseudohermitianStructure) -> DeformationTensor:
    """Deformation tensor of the complex structure along a contact field.

    psi(Z_a) is the antiholomorphic part of [x, Z_a]; indices are lowered
    with the Levi form.  ``x`` must be real and contact: L_x theta must be
    a multiple of theta.
    """
    n, nv = s.n, s.num_vars
    tol = _tol(s.backend)
    if any(not (c - cc).is_zero(tol) for c, cc in zip(x, vf_conj(list(x), n))):
        raise ValueError("vector field must be real")
    lie_theta = lie_derivative_contact_form(x, s)
    g = form_apply(lie_theta, list(s.reeb))
    resid = [l - g * t for l, t in zip(lie_theta, s.theta)]
    if any(not r.is_zero(tol) for r in resid):
        raise ValueError("vector field is not contact: L_x theta is not a multiple of theta")
    psi_up = []
    for a in range(n):
        br = lie_bracket(list(x), list(s.frame[a]))
        psi_up.append([form_apply(list(s.coframe_bar[b]), br) for b in range(n)])
    comps = [[_sum([psi_up[a][g] * s.h[b][g] for g in range(n)])
              for b in range(n)] for a in range(n)]
    psi = wt_from_array(s, ("d", "d"), comps, (1, 1))
    return DeformationTensor(psi=psi, psi_bar=psi.conj())


def _sum(jets):
    acc = jets[0]
    for j in jets[1:]:
        acc = acc + j
    return acc
