"""Scalar backends and truncated multivariate jets.

Two scalar backends share one interface: exact Gaussian rationals (a pair
of rationals) and complex floating point.  All higher modules are generic
over the backend; equality checks are exact in the first case and
tolerance-based in the second.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Optional, Union

try:
    from gmpy2 import mpq as _mpq
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    from fractions import Fraction as _mpq

EXACT = "exact"
FLOAT = "float"


def rational(p, q=1):
    """Exact rational from integers or a 'p/q' string."""
    return _mpq(p, q) if q != 1 else _mpq(p)


class QI:
    """Gaussian rational: re + im*i with exact rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = _mpq(re)
        self.im = _mpq(im)

    def __add__(self, other):
        other = _as_qi(other)
        if other is NotImplemented:
            return NotImplemented
        return QI(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = _as_qi(other)
        if other is NotImplemented:
            return NotImplemented
        return QI(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        other = _as_qi(other)
        if other is NotImplemented:
            return NotImplemented
        return QI(other.re - self.re, other.im - self.im)

    def __mul__(self, other):
        other = _as_qi(other)
        if other is NotImplemented:
            return NotImplemented
        return QI(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_qi(other)
        if other is NotImplemented:
            return NotImplemented
        d = other.re * other.re + other.im * other.im
        if d == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        return QI(
            (self.re * other.re + self.im * other.im) / d,
            (self.im * other.re - self.re * other.im) / d,
        )

    def __rtruediv__(self, other):
        other = _as_qi(other)
        if other is NotImplemented:
            return NotImplemented
        return other / self

    def __neg__(self):
        return QI(-self.re, -self.im)

    def __pos__(self):
        return self

    def conjugate(self):
        return QI(self.re, -self.im)

    def __eq__(self, other):
        other = _as_qi(other)
        if other is NotImplemented:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def __abs__(self):
        return abs(complex(float(self.re), float(self.im)))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"QI({self.re}, {self.im})"

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        if self.re == 0:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}i"


def _as_qi(x):
    if isinstance(x, QI):
        return x
    if isinstance(x, (int, type(_mpq(0)))):
        return QI(x)
    try:
        from fractions import Fraction

        if isinstance(x, Fraction):
            return QI(_mpq(x.numerator, x.denominator))
    except ImportError:  # pragma: no cover
        pass
    return NotImplemented


Scalar = Union[QI, complex]

QI_ZERO = QI(0)
QI_ONE = QI(1)
QI_I = QI(0, 1)


def scalar(backend: str, re=0, im=0) -> Scalar:
    """Construct a backend scalar from rational (or float) parts."""
    if backend == EXACT:
        return QI(re, im)
    if backend == FLOAT:
        return complex(float(re), float(im))
    raise ValueError(f"unknown backend {backend!r}")


def scalar_from_qi(backend: str, value: QI) -> Scalar:
    return value if backend == EXACT else complex(value)


def conj_scalar(x: Scalar) -> Scalar:
    return x.conjugate()


def scalar_is_zero(x: Scalar, tol: float = 0.0) -> bool:
    if isinstance(x, QI):
        return not x
    return abs(x) <= tol


class Jet:
    """Truncated Taylor expansion at the chart base point.

    ``coeffs`` maps exponent multi-indices (tuples of length ``num_vars``)
    to scalars; zero coefficients are never stored.  ``order=None`` marks a
    complete polynomial: all absent coefficients are genuinely zero, so no
    information is lost by differentiation.  A finite ``order`` means the
    coefficients are only reliable up to that total degree.
    """

    __slots__ = ("num_vars", "order", "coeffs", "backend")

    def __init__(self, num_vars: int, coeffs: Mapping[tuple, Scalar],
                 order: Optional[int] = None, backend: str = EXACT):
        self.num_vars = num_vars
        self.order = order
        self.backend = backend
        if order is None:
            self.coeffs = {k: v for k, v in coeffs.items() if not scalar_is_zero(v)}
        else:
            self.coeffs = {
                k: v for k, v in coeffs.items()
                if sum(k) <= order and not scalar_is_zero(v)
            }

    # -- constructors -------------------------------------------------

    @staticmethod
    def constant(num_vars: int, value: Scalar, backend: str = EXACT,
                 order: Optional[int] = None) -> "Jet":
        zero = (0,) * num_vars
        return Jet(num_vars, {zero: value}, order, backend)

    @staticmethod
    def zero(num_vars: int, backend: str = EXACT,
             order: Optional[int] = None) -> "Jet":
        return Jet(num_vars, {}, order, backend)

    @staticmethod
    def coordinate(num_vars: int, k: int, backend: str = EXACT) -> "Jet":
        idx = tuple(1 if i == k else 0 for i in range(num_vars))
        return Jet(num_vars, {idx: scalar(backend, 1)}, None, backend)

    # -- helpers ------------------------------------------------------

    def _check(self, other: "Jet") -> None:
        if self.num_vars != other.num_vars:
            raise ValueError(
                f"jet shape mismatch: {self.num_vars} vs {other.num_vars} variables")
        if self.backend != other.backend:
            raise ValueError(
                f"jet backend mismatch: {self.backend} vs {other.backend}")

    @property
    def constant_term(self) -> Scalar:
        zero = (0,) * self.num_vars
        return self.coeffs.get(zero, scalar(self.backend, 0))

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(scalar_is_zero(v, tol) for v in self.coeffs.values())

    def max_abs(self) -> float:
        return max((abs(v) for v in self.coeffs.values()), default=0.0)

    # -- arithmetic ---------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, Jet):
            return NotImplemented
        self._check(other)
        order = _min_order(self.order, other.order)
        coeffs = dict(self.coeffs)
        for k, v in other.coeffs.items():
            s = coeffs.get(k)
            coeffs[k] = v if s is None else s + v
        return Jet(self.num_vars, coeffs, order, self.backend)

    def __sub__(self, other):
        if not isinstance(other, Jet):
            return NotImplemented
        return self + (-other)

    def __neg__(self):
        return Jet(self.num_vars, {k: -v for k, v in self.coeffs.items()},
                   self.order, self.backend)

    def __mul__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            order = _min_order(self.order, other.order)
            if not self.coeffs or not other.coeffs:
                return Jet.zero(self.num_vars, self.backend, order)
            coeffs: dict = {}
            for ka, va in self.coeffs.items():
                da = sum(ka)
                for kb, vb in other.coeffs.items():
                    if order is not None and da + sum(kb) > order:
                        continue
                    k = tuple(a + b for a, b in zip(ka, kb))
                    p = va * vb
                    s = coeffs.get(k)
                    coeffs[k] = p if s is None else s + p
            return Jet(self.num_vars, coeffs, order, self.backend)
        return self.scale(other)

    def scale(self, c: Scalar) -> "Jet":
        return Jet(self.num_vars, {k: v * c for k, v in self.coeffs.items()},
                   self.order, self.backend)

    __rmul__ = __mul__

    def conjugate(self) -> "Jet":
        # Chart coordinates are real, so conjugation acts on coefficients.
        return Jet(self.num_vars,
                   {k: conj_scalar(v) for k, v in self.coeffs.items()},
                   self.order, self.backend)

    def partial(self, k: int) -> "Jet":
        """Derivative in coordinate ``k``; lowers a finite order by one."""
        coeffs = {}
        for idx, v in self.coeffs.items():
            e = idx[k]
            if e == 0:
                continue
            new = list(idx)
            new[k] = e - 1
            coeffs[tuple(new)] = v * scalar(self.backend, e)
        order = None if self.order is None else self.order - 1
        if order is not None and order < 0:
            raise ValueError("jet differentiated beyond its reliable order")
        return Jet(self.num_vars, coeffs, order, self.backend)

    def truncate(self, order: Optional[int]) -> "Jet":
        if order is None or (self.order is not None and self.order <= order):
            return self
        return Jet(self.num_vars, self.coeffs, order, self.backend)

    def invert(self, order: Optional[int] = None) -> "Jet":
        """Multiplicative inverse as a truncated series.

        The result is capped at ``order`` (or the jet's own finite order);
        a complete-polynomial jet must be given an explicit cap, because
        its inverse is an infinite series.
        """
        cap = order if order is not None else self.order
        if cap is None:
            raise ValueError("inverse of a complete polynomial needs an explicit order")
        c0 = self.constant_term
        if scalar_is_zero(c0, 1e-300 if self.backend == FLOAT else 0.0):
            raise ZeroDivisionError("jet not invertible: zero constant term")
        one = scalar(self.backend, 1)
        a = self.truncate(cap)
        x = Jet.constant(self.num_vars, one / c0, self.backend, cap)
        known = 0
        while known < cap:
            known = min(2 * known + 1, cap)
            two = Jet.constant(self.num_vars, scalar(self.backend, 2),
                               self.backend, cap)
            x = x * (two - a * x)
        return x

    def compose_exp(self) -> "Jet":
        """exp of a jet with zero constant term (finite sum to the cap)."""
        if not scalar_is_zero(self.constant_term,
                              1e-300 if self.backend == FLOAT else 0.0):
            raise ValueError("exp requires zero constant term")
        cap = self.order
        if cap is None:
            # Degree grows without bound; a cap must come from context.
            raise ValueError("exp of a complete polynomial needs a finite order")
        result = Jet.constant(self.num_vars, scalar(self.backend, 1),
                              self.backend, cap)
        term = Jet.constant(self.num_vars, scalar(self.backend, 1),
                            self.backend, cap)
        for k in range(1, cap + 1):
            term = term * self
            term = term.scale(scalar(self.backend, 1) / scalar(self.backend, k))
            result = result + term
        return result

    def __eq__(self, other):
        if not isinstance(other, Jet):
            return NotImplemented
        return (self - other).is_zero()

    def __hash__(self):  # pragma: no cover - jets are not dict keys in practice
        return hash((self.num_vars, self.order,
                     tuple(sorted(self.coeffs.items(), key=lambda kv: kv[0]))))

    def __repr__(self):
        terms = ", ".join(f"{k}: {v}" for k, v in
                          sorted(self.coeffs.items())[:6])
        more = "..." if len(self.coeffs) > 6 else ""
        return f"Jet(order={self.order}, {{{terms}{more}}})"


def _min_order(a: Optional[int], b: Optional[int]) -> Optional[int]:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def jet_arith(op: str, a: Jet, b: Jet) -> Jet:
    """Ring operations on jets sharing a shape and backend."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown jet operation {op!r}")


def jet_invert(a: Jet, order: Optional[int] = None) -> Jet:
    return a.invert(order)


def jet_partial(a: Jet, k: int) -> Jet:
    return a.partial(k)


def jets_agree(a: Jet, b: Jet, rel_tol: float = 0.0) -> bool:
    """Equality of jets up to their common reliable order.

    For the float backend the comparison is relative to the largest
    coefficient magnitude of the two jets.
    """
    d = a - b
    if a.backend == EXACT:
        return d.is_zero()
    scale = max(a.max_abs(), b.max_abs(), 1.0)
    return d.max_abs() <= rel_tol * scale


def poly_from_terms(num_vars: int, terms: Iterable[tuple], backend: str = EXACT) -> Jet:
    """Complete polynomial from (multi-index, QI coefficient) pairs."""
    coeffs = {}
    for idx, c in terms:
        val = scalar_from_qi(backend, c) if isinstance(c, QI) else c
        cur = coeffs.get(tuple(idx))
        coeffs[tuple(idx)] = val if cur is None else cur + val
    return Jet(num_vars, coeffs, None, backend)
