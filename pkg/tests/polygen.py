"""Seeded random differential polynomials for property tests."""

import random
from fractions import Fraction

from delta_chow.diffring import DerVar, DiffPoly, QtElement, RingContext, qt


def random_coeff(rng: random.Random, ring: RingContext, lo: int = -5, hi: int = 5):
    while True:
        c = Fraction(rng.randint(lo, hi), rng.choice([1, 1, 1, 2, 3]))
        if c:
            break
    if ring.field.kind == "Qt" and rng.random() < 0.4:
        from delta_chow.diffring import _ZT, _T
        num = _ZT(int(c.numerator)) * _T ** rng.randint(0, 2) + rng.randint(-2, 2)
        den = _ZT(int(c.denominator)) * (_T + rng.randint(1, 3)) ** rng.randint(0, 1)
        if not num:
            num = _ZT(1)
        return qt(num, den)
    return c


def random_poly(rng: random.Random, ring: RingContext, nterms: int = 4, max_order: int = 2,
                max_deg: int = 2, names=None) -> DiffPoly:
    names = list(names or ring.names)
    terms = {}
    for _ in range(nterms):
        mono = {}
        for _ in range(rng.randint(0, max_deg)):
            dv = DerVar(ring.index(rng.choice(names)), rng.randint(0, max_order))
            mono[dv] = mono.get(dv, 0) + 1
        key = tuple(sorted(mono.items()))
        terms[key] = random_coeff(rng, ring)
    p = ring.zero
    for m, c in terms.items():
        p = p + DiffPoly(ring, {m: c})
    return p


def random_alg_poly(rng: random.Random, ring: RingContext, names, max_deg: int = 3, nterms: int = 4) -> DiffPoly:
    """Random polynomial in order-0 variables of total degree at most ``max_deg``."""
    p = ring.zero
    for _ in range(nterms):
        term = ring.const(rng.randint(-5, 5))
        budget = rng.randint(0, max_deg)
        for n in rng.sample(list(names), len(names)):
            e = rng.randint(0, budget)
            budget -= e
            term = term * ring.var(n) ** e
        p = p + term
    return p


__all__ = ["random_alg_poly", "random_coeff", "random_poly", "QtElement"]
