"""Kostant homology of the nilpotent part with standard/adjoint coefficients.

Chains are stored in the evaluation picture: a k-chain is the collection
of its values on strictly increasing tuples of the direction basis
(Reeb slot first, then holomorphic, then conjugate slots).  The
codifferential is computed two independent ways: by the defining
two-sum formula on the positive-part basis, and by the dual-basis
formulas; both must agree, and both reproduce the component matrices
used everywhere downstream.

Normalization note: the identification of k-chains with alternating
forms uses the determinant pairing and, for k=2, an overall sign chosen
so the component formulas for the codifferential come out in the
standard shape (see the display tests).  With that single convention the
two-sum and dual-basis routes agree exactly.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .exactnum import QI, QI_ONE, QI_ZERO
from . import linalg
from .liealg import AlgebraContext, Matrix, build_algebra

IndexTuple = Tuple[int, ...]

# Sign of the chain <-> form identification per degree, pinned by the
# componentwise codifferential displays in the degree-one and degree-two
# tests.  The two-sum formula below uses the Chevalley-Eilenberg signs
# ((-1)^i on the action sum): with (-1)^(i+1) there the complex would not
# square to zero, which is how the convention was adjudicated.
_IDENT_SIGN = {0: 1, 1: -1, 2: -1, 3: -1}


@dataclass
class RepSpec:
    """Coefficient representation: 'standard' column vectors or 'adjoint'."""

    name: str
    ctx: AlgebraContext

    def __post_init__(self):
        if self.name not in ("standard", "adjoint"):
            raise ValueError(f"unknown representation {self.name!r}")
        n = self.ctx.n
        self.size = n + 2
        if self.name == "standard":
            self.dim = self.size
        else:
            self.dim = self.size * self.size - 1

    # -- values ---------------------------------------------------------

    def zero_value(self):
        if self.name == "standard":
            return [QI_ZERO] * self.size
        return [[QI_ZERO] * self.size for _ in range(self.size)]

    def act(self, x: Matrix, v):
        if self.name == "standard":
            return [sum((x[r][c] * v[c] for c in range(self.size)), QI_ZERO)
                    for r in range(self.size)]
        return linalg.bracket(x, v)

    def add(self, a, b):
        if self.name == "standard":
            return [x + y for x, y in zip(a, b)]
        return linalg.mat_add(a, b)

    def scale(self, a, c: QI):
        if self.name == "standard":
            return [x * c for x in a]
        return linalg.mat_scale(a, c)

    def is_zero(self, a) -> bool:
        if self.name == "standard":
            return all(not x for x in a)
        return linalg.mat_is_zero(a)

    # -- coordinates ------------------------------------------------------

    def flatten(self, v) -> List[QI]:
        """Exact linear coordinates; for the adjoint these span sl only."""
        if self.name == "standard":
            return list(v)
        coords = []
        for r in range(self.size):
            for c in range(self.size):
                if r != c:
                    coords.append(v[r][c])
        partial = QI_ZERO
        for i in range(self.size - 1):
            partial = partial + v[i][i]
            coords.append(partial)
        return coords

    def unflatten(self, coords: Sequence[QI]):
        if self.name == "standard":
            return list(coords)
        m = [[QI_ZERO] * self.size for _ in range(self.size)]
        it = iter(coords)
        for r in range(self.size):
            for c in range(self.size):
                if r != c:
                    m[r][c] = next(it)
        partials = [next(it) for _ in range(self.size - 1)]
        prev = QI_ZERO
        for i in range(self.size - 1):
            m[i][i] = partials[i] - prev
            prev = partials[i]
        m[self.size - 1][self.size - 1] = -partials[-1]
        return m

    def coord_grades(self) -> List[int]:
        """Grading-element eigenvalue of each flat coordinate."""
        if self.name == "standard":
            return [1] + [0] * (self.size - 2) + [-1]
        grades = []
        for r in range(self.size):
            for c in range(self.size):
                if r != c:
                    grades.append(self.ctx.grade_of_position(r, c))
        grades.extend([0] * (self.size - 1))
        return grades


@dataclass
class Chain:
    """Evaluation-picture k-chain with values in the representation."""

    rep: RepSpec
    k: int
    comps: Dict[IndexTuple, object] = field(default_factory=dict)

    def copy(self) -> "Chain":
        return Chain(self.rep, self.k, dict(self.comps))

    def component(self, idx: Sequence[int]):
        """Value on an arbitrary (possibly unordered) index tuple."""
        order, sign = _sort_with_sign(tuple(idx))
        if sign == 0:
            return self.rep.zero_value()
        v = self.comps.get(order)
        if v is None:
            return self.rep.zero_value()
        return v if sign > 0 else self.rep.scale(v, QI(-1))

    def set_component(self, idx: Sequence[int], value) -> None:
        order, sign = _sort_with_sign(tuple(idx))
        if sign == 0:
            raise ValueError("repeated index in chain component")
        self.comps[order] = value if sign > 0 else self.rep.scale(value, QI(-1))

    def add_to(self, idx: IndexTuple, value) -> None:
        order, sign = _sort_with_sign(idx)
        if sign == 0:
            return
        if sign < 0:
            value = self.rep.scale(value, QI(-1))
        cur = self.comps.get(order)
        self.comps[order] = value if cur is None else self.rep.add(cur, value)

    def is_zero(self) -> bool:
        return all(self.rep.is_zero(v) for v in self.comps.values())

    def sub(self, other: "Chain") -> "Chain":
        out = self.copy()
        for idx, v in other.comps.items():
            out.add_to(idx, other.rep.scale(v, QI(-1)))
        return out

    def homogeneity_part(self, h: int) -> "Chain":
        out = Chain(self.rep, self.k)
        for idx, v in self.comps.items():
            w = sum(self.rep.ctx.direction_weight(a) for a in idx)
            coords = self.rep.flatten(v)
            grades = self.rep.coord_grades()
            kept = [c if w + g == h else QI_ZERO for c, g in zip(coords, grades)]
            out.comps[idx] = self.rep.unflatten(kept)
        return out

    def homogeneities(self) -> List[int]:
        out = set()
        grades = self.rep.coord_grades()
        for idx, v in self.comps.items():
            w = sum(self.rep.ctx.direction_weight(a) for a in idx)
            for c, g in zip(self.rep.flatten(v), grades):
                if c:
                    out.add(w + g)
        return sorted(out)


def _sort_with_sign(idx: IndexTuple) -> Tuple[IndexTuple, int]:
    if len(set(idx)) != len(idx):
        return idx, 0
    order = tuple(sorted(idx))
    perm = list(idx)
    sign = 1
    for i in range(len(perm)):
        for j in range(len(perm) - 1 - i):
            if perm[j] > perm[j + 1]:
                perm[j], perm[j + 1] = perm[j + 1], perm[j]
                sign = -sign
    return order, sign


def _g_minus_coords(ctx: AlgebraContext, m: Matrix) -> List[QI]:
    """Coordinates of the negative-part projection in the direction basis."""
    n = ctx.n
    coords = [QI(0, -1) * m[ctx.size - 1][0]]
    for s in range(1, n + 1):
        coords.append(m[s][0])
    for s in range(1, n + 1):
        coords.append(-m[ctx.size - 1][s])
    return coords


def codifferential(chain: Chain) -> Chain:
    """Kostant codifferential via the defining two-sum formula.

    The chain is expanded in the positive-part basis through the Killing
    identification, the two-sum formula (action terms plus bracket terms)
    is applied to basis decomposables, and the result is converted back to
    the evaluation picture.  Degree 0 maps to the zero chain.
    """
    rep = chain.rep
    ctx = rep.ctx
    k = chain.k
    if k == 0:
        return Chain(rep, 0)
    if k not in _IDENT_SIGN:
        raise ValueError(f"codifferential not implemented for degree {k}")
    eps = ctx.basis.pairing_sign
    denom = QI((2 * (ctx.n + 2)) ** k)
    sign_in = QI(_IDENT_SIGN[k])
    out = Chain(rep, k - 1)
    for key, v in chain.comps.items():
        coeff = sign_in
        for a in key:
            coeff = coeff * QI(eps[a])
        w = rep.scale(v, coeff / denom)
        zetas = [ctx.basis.zeta[a] for a in key]
        for i in range(k):
            rest = key[:i] + key[i + 1:]
            term = rep.act(zetas[i], w)
            if i % 2 == 0:
                term = rep.scale(term, QI(-1))
            _emit_zeta_chain(out, rest, term)
        for i in range(k):
            for j in range(i + 1, k):
                br = ctx.bracket(zetas[i], zetas[j])
                rest = key[:i] + key[i + 1:j] + key[j + 1:]
                for c in ctx.all_directions():
                    comp = ctx.killing_form(br, ctx.basis.xi[c]) * QI(eps[c])
                    if comp:
                        comp = comp / QI(2 * (ctx.n + 2))
                        if (i + j) % 2:
                            comp = -comp
                        _emit_zeta_chain(out, (c,) + rest, rep.scale(w, comp))
    return out


def _emit_zeta_chain(out: Chain, key: IndexTuple, value) -> None:
    """Accumulate a decomposable zeta-basis term into the evaluation picture."""
    ctx = out.rep.ctx
    eps = ctx.basis.pairing_sign
    scale = _IDENT_SIGN[len(key)]
    for a in key:
        scale *= 2 * (ctx.n + 2) * eps[a]
    out.add_to(key, out.rep.scale(value, QI(scale)))


def codifferential_dual(chain: Chain) -> Chain:
    """Same map written with the Killing-dual basis.

    For k=2 the dual-basis expression carries an extra factor 2 relative
    to the componentwise normalization fixed above, so it is halved here;
    the equality with :func:`codifferential` is part of the test suite.
    """
    rep = chain.rep
    ctx = rep.ctx
    if chain.k == 1:
        out = Chain(rep, 0)
        acc = rep.zero_value()
        for (a,), v in chain.comps.items():
            acc = rep.add(acc, rep.act(ctx.basis.xi_dual[a], v))
        out.comps[()] = acc
        return out
    if chain.k == 2:
        out = Chain(rep, 1)
        half = QI(1) / QI(2)
        for x in ctx.all_directions():
            acc = rep.zero_value()
            for a in ctx.all_directions():
                term = rep.act(ctx.basis.xi_dual[a], chain.component((x, a)))
                acc = rep.add(acc, rep.scale(term, QI(2)))
                br = ctx.bracket(ctx.basis.xi_dual[a], ctx.basis.xi[x])
                coords = _g_minus_coords(ctx, br)
                for c, coeff in enumerate(coords):
                    if coeff:
                        acc = rep.add(acc, rep.scale(
                            chain.component((c, a)), -coeff))
            out.comps[(x,)] = rep.scale(acc, half)
        return out
    raise ValueError("codifferential_dual implemented for k in {1, 2}")


def coboundary(chain: Chain) -> Chain:
    """Lie algebra cohomology differential of the negative part.

    Componentwise on forms: an alternating action sum over the arguments
    plus a bracket sum feeding the commutator back into the form.
    """
    rep = chain.rep
    ctx = rep.ctx
    k = chain.k
    out = Chain(rep, k + 1)
    for key in itertools.combinations(ctx.all_directions(), k + 1):
        term = rep.zero_value()
        for i, a in enumerate(key):
            rest = key[:i] + key[i + 1:]
            part = rep.act(ctx.basis.xi[a], chain.component(rest))
            if i % 2:
                part = rep.scale(part, QI(-1))
            term = rep.add(term, part)
        for i in range(k + 1):
            for j in range(i + 1, k + 1):
                br = ctx.bracket(ctx.basis.xi[key[i]], ctx.basis.xi[key[j]])
                rest = key[:i] + key[i + 1:j] + key[j + 1:]
                for c, coeff in enumerate(_g_minus_coords(ctx, br)):
                    if coeff:
                        if (i + j) % 2:
                            coeff = -coeff
                        term = rep.add(term, rep.scale(
                            chain.component((c,) + rest), coeff))
        if not rep.is_zero(term):
            out.comps[key] = term
    return out


# -- homology spaces ---------------------------------------------------------


def chain_basis_keys(ctx: AlgebraContext, k: int) -> List[IndexTuple]:
    return list(itertools.combinations(ctx.all_directions(), k))


def chain_to_coords(chain: Chain, keys: List[IndexTuple]) -> List[QI]:
    coords: List[QI] = []
    for key in keys:
        v = chain.comps.get(key)
        if v is None:
            coords.extend([QI_ZERO] * chain.rep.dim)
        else:
            coords.extend(chain.rep.flatten(v))
    return coords


def coords_to_chain(rep: RepSpec, k: int, coords: Sequence[QI],
                    keys: List[IndexTuple]) -> Chain:
    chain = Chain(rep, k)
    d = rep.dim
    for i, key in enumerate(keys):
        block = list(coords[i * d:(i + 1) * d])
        if any(block):
            chain.comps[key] = rep.unflatten(block)
    return chain


def codifferential_matrix(rep: RepSpec, k: int) -> List[List[QI]]:
    """Matrix of the codifferential C_k -> C_{k-1} in flat coordinates."""
    ctx = rep.ctx
    src_keys = chain_basis_keys(ctx, k)
    dst_keys = chain_basis_keys(ctx, k - 1)
    rows = len(dst_keys) * rep.dim
    cols = len(src_keys) * rep.dim
    matrix = [[QI_ZERO] * cols for _ in range(rows)]
    for ki, key in enumerate(src_keys):
        for j in range(rep.dim):
            unit = [QI_ONE if t == j else QI_ZERO for t in range(rep.dim)]
            chain = Chain(rep, k)
            chain.comps[key] = rep.unflatten(unit)
            image = codifferential(chain)
            col = chain_to_coords(image, dst_keys)
            ci = ki * rep.dim + j
            for r, val in enumerate(col):
                if val:
                    matrix[r][ci] = val
    return matrix


@dataclass
class HomologySpace:
    rep: RepSpec
    k: int
    dim: int
    kernel_dim: int
    image_dim: int
    homogeneity_dims: Dict[int, int]
    representatives: List[Chain]
    projection: Callable[[Chain], List[QI]]
    projection_labels: List[str]

    def report(self) -> "HomologyReport":
        return HomologyReport(
            n=self.rep.ctx.n,
            rep=self.rep.name,
            degree=self.k,
            dim=self.dim,
            kernel_dim=self.kernel_dim,
            image_dim=self.image_dim,
            homogeneity_dims=dict(sorted(self.homogeneity_dims.items())),
            num_representatives=len(self.representatives),
            projection_labels=list(self.projection_labels),
        )


@dataclass
class HomologyReport:
    n: int
    rep: str
    degree: int
    dim: int
    kernel_dim: int
    image_dim: int
    homogeneity_dims: Dict[int, int]
    num_representatives: int
    projection_labels: List[str]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "rep": self.rep,
            "degree": self.degree,
            "dim": self.dim,
            "kernel_dim": self.kernel_dim,
            "image_dim": self.image_dim,
            "homogeneity_dims": {str(k): v for k, v in self.homogeneity_dims.items()},
            "num_representatives": self.num_representatives,
            "projection_labels": self.projection_labels,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _coords_homogeneity(rep: RepSpec, keys: List[IndexTuple]) -> List[int]:
    grades = rep.coord_grades()
    out = []
    for key in keys:
        w = sum(rep.ctx.direction_weight(a) for a in key)
        out.extend(w + g for g in grades)
    return out


def homology_space(rep: RepSpec, k: int) -> HomologySpace:
    """H_k = ker(codifferential_k) / im(codifferential_{k+1}) for k in {0,1}.

    Representatives are the explicit slice chains whose projection
    components form the standard basis; their kernel membership, the
    vanishing of the projection on the image, and the dimension count are
    all checked here, so the returned projection genuinely realizes the
    isomorphism onto the homology space.
    """
    if k not in (0, 1):
        raise ValueError("homology_space implemented for degrees 0 and 1")
    ctx = rep.ctx
    keys = chain_basis_keys(ctx, k)
    dim_ck = len(keys) * rep.dim

    if k == 0:
        mat = None
        kernel_dim = dim_ck
    else:
        mat = codifferential_matrix(rep, k)
        kernel_dim = dim_ck - linalg.rank(mat)

    img = codifferential_matrix(rep, k + 1)
    img_cols = [[row[c] for row in img] for c in range(len(img[0]))] if img and img[0] else []
    img_cols = [c for c in img_cols if any(c)]
    image_dim = linalg.rank([[c[i] for c in img_cols] for i in range(dim_ck)]) if img_cols else 0
    dim_h = kernel_dim - image_dim

    hom_of_coord = _coords_homogeneity(rep, keys)
    hom_dims: Dict[int, int] = {}
    for h in sorted(set(hom_of_coord)):
        mask = [i for i, hh in enumerate(hom_of_coord) if hh == h]
        if mat is None:
            dim_ker_h = len(mask)
        else:
            sub = [[row[i] for i in mask] for row in mat]
            dim_ker_h = len(mask) - linalg.rank(sub)
        sub_img = [[c[i] for c in img_cols] for i in mask] if img_cols else []
        rank_img_h = linalg.rank(sub_img) if sub_img and sub_img[0] else 0
        d = dim_ker_h - rank_img_h
        if d:
            hom_dims[h] = d

    projection, labels = _paper_projection(rep, k)
    representatives = _paper_slices(rep, k)
    if len(representatives) != dim_h:
        raise AssertionError("slice representatives do not span the homology")
    for i, chain in enumerate(representatives):
        if k > 0 and not codifferential(chain).is_zero():
            raise AssertionError("slice representative left the kernel")
        image = projection(chain)
        expected = [QI_ONE if j == i else QI_ZERO for j in range(dim_h)]
        if image != expected:
            raise AssertionError("projection is not dual to the slice basis")
    for col in img_cols:
        chain = coords_to_chain(rep, k, col, keys)
        if any(projection(chain)):
            raise AssertionError("projection does not vanish on the image")

    return HomologySpace(rep=rep, k=k, dim=dim_h, kernel_dim=kernel_dim,
                         image_dim=image_dim, homogeneity_dims=hom_dims,
                         representatives=representatives, projection=projection,
                         projection_labels=labels)


def _paper_projection(rep: RepSpec, k: int) -> Tuple[Callable[[Chain], List[QI]], List[str]]:
    """Literal component extractions realizing the homology identifications."""
    ctx = rep.ctx
    n = ctx.n
    size = ctx.size
    if rep.name == "standard" and k == 0:
        def proj(chain: Chain) -> List[QI]:
            v = chain.comps.get((), rep.zero_value())
            return [v[size - 1]]
        return proj, ["u"]
    if rep.name == "standard" and k == 1:
        labels = [f"u_{s}" for s in range(1, n + 1)]
        pairs = [(a, b) for a in range(1, n + 1) for b in range(a, n + 1)]
        labels += [f"t_({a}bar {b}bar)" for a, b in pairs]

        def proj(chain: Chain) -> List[QI]:
            out = [chain.component((s,))[size - 1] for s in range(1, n + 1)]
            for a, b in pairs:
                va = chain.component((n + a,))
                vb = chain.component((n + b,))
                # t_(abar bbar): lowered middle components, symmetrized
                out.append((va[b] + vb[a]) / QI(2))
            return out
        return proj, labels
    if rep.name == "adjoint" and k == 0:
        def proj(chain: Chain) -> List[QI]:
            v = chain.comps.get((), rep.zero_value())
            return [QI(0, -1) * v[size - 1][0]]
        return proj, ["x"]
    if rep.name == "adjoint" and k == 1:
        pairs = [(a, b) for a in range(1, n + 1) for b in range(a, n + 1)]
        labels = [f"X_({a} {b})" for a, b in pairs]
        labels += [f"X_({a}bar {b}bar)" for a, b in pairs]

        def proj(chain: Chain) -> List[QI]:
            out = []
            for a, b in pairs:
                # X_{beta sigma} from the lowered bottom-row slot of psi(xi_sigma)
                xa = -chain.component((a,))[size - 1][b]
                xb = -chain.component((b,))[size - 1][a]
                out.append((xa + xb) / QI(2))
            for a, b in pairs:
                xa = chain.component((n + a,))[b][0]
                xb = chain.component((n + b,))[a][0]
                out.append((xa + xb) / QI(2))
            return out
        return proj, labels
    raise ValueError("no projection for this case")


def _paper_slices(rep: RepSpec, k: int) -> List[Chain]:
    """Slice chains dual to the projection components, in label order."""
    ctx = rep.ctx
    n = ctx.n
    size = ctx.size
    out: List[Chain] = []
    if rep.name == "standard" and k == 0:
        chain = Chain(rep, 0)
        v = rep.zero_value()
        v[size - 1] = QI_ONE
        chain.comps[()] = v
        return [chain]
    if rep.name == "standard" and k == 1:
        for s in range(1, n + 1):
            chain = Chain(rep, 1)
            v = rep.zero_value()
            v[size - 1] = QI_ONE
            chain.comps[(s,)] = v
            out.append(chain)
        for a in range(1, n + 1):
            for b in range(a, n + 1):
                chain = Chain(rep, 1)
                va = rep.zero_value()
                va[b] = QI_ONE
                chain.comps[(n + a,)] = va
                if b != a:
                    vb = rep.zero_value()
                    vb[a] = QI_ONE
                    chain.comps[(n + b,)] = vb
                out.append(chain)
        return out
    if rep.name == "adjoint" and k == 0:
        chain = Chain(rep, 0)
        v = rep.zero_value()
        v[size - 1][0] = QI(0, 1)
        chain.comps[()] = v
        return [chain]
    if rep.name == "adjoint" and k == 1:
        for a in range(1, n + 1):
            for b in range(a, n + 1):
                chain = Chain(rep, 1)
                va = rep.zero_value()
                va[size - 1][b] = -QI_ONE
                chain.comps[(a,)] = va
                if b != a:
                    vb = rep.zero_value()
                    vb[size - 1][a] = -QI_ONE
                    chain.comps[(b,)] = vb
                out.append(chain)
        for a in range(1, n + 1):
            for b in range(a, n + 1):
                chain = Chain(rep, 1)
                va = rep.zero_value()
                va[b][0] = QI_ONE
                chain.comps[(n + a,)] = va
                if b != a:
                    vb = rep.zero_value()
                    vb[a][0] = QI_ONE
                    chain.comps[(n + b,)] = vb
                out.append(chain)
        return out
    raise ValueError("no slice representatives for this case")


def build_rep(n_or_ctx, name: str) -> RepSpec:
    ctx = n_or_ctx if isinstance(n_or_ctx, AlgebraContext) else build_algebra(n_or_ctx)
    return RepSpec(name=name, ctx=ctx)
