"""Deterministic random polynomial jets for property checks."""

import itertools
import random
from typing import Iterator, Tuple

from .exactnum import EXACT, Jet, QI, poly_from_terms, scalar


def _exponents(num_vars: int, max_degree: int) -> Iterator[Tuple[int, ...]]:
    for total in range(max_degree + 1):
        for idx in itertools.combinations_with_replacement(range(num_vars), total):
            exp = [0] * num_vars
            for i in idx:
                exp[i] += 1
            yield tuple(exp)


def random_jet(num_vars: int, rng: random.Random, max_degree: int = 3,
               backend: str = EXACT, span: int = 3, density: float = 0.5) -> Jet:
    """Sparse polynomial with Gaussian integer coefficients in [-span, span]."""
    terms = []
    for exp in _exponents(num_vars, max_degree):
        if rng.random() > density:
            continue
        re = rng.randint(-span, span)
        im = rng.randint(-span, span)
        if re or im:
            terms.append((exp, QI(re, im)))
    jet = poly_from_terms(num_vars, terms, EXACT)
    if backend != EXACT:
        jet = Jet(num_vars,
                  {k: complex(float(v.re), float(v.im))
                   for k, v in jet.coeffs.items()},
                  jet.order, backend)
    return jet


def random_real_jet(num_vars: int, n: int, rng: random.Random,
                    max_degree: int = 3, backend: str = EXACT,
                    span: int = 3, density: float = 0.5) -> Jet:
    """Real-valued polynomial: g + conj(g) under the chart conjugation."""
    from .pseudoherm import chart_conj

    g = random_jet(num_vars, rng, max_degree, backend, span, density)
    return g + chart_conj(g, n)


def random_real_vanishing_jet(num_vars: int, n: int, rng: random.Random,
                              max_degree: int = 3, backend: str = EXACT,
                              span: int = 3, density: float = 0.5) -> Jet:
    """Real polynomial with zero constant term, usable as a conformal factor."""
    f = random_real_jet(num_vars, n, rng, max_degree, backend, span, density)
    c = f.constant_term
    return f - Jet.constant(num_vars, c, backend)
