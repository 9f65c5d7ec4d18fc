"""Prolongation and exact algebraic elimination.

Differential polynomials are frozen into ordinary polynomials (each
derivative variable becomes an independent indeterminate) and handed to a
Buchberger implementation running on sympy's sparse ``PolyElement``
arithmetic.  Resultants use Bareiss fraction-free determinants.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from sympy.polys.domains import QQ, ZZ
from sympy.polys.monomials import monomial_divides, monomial_lcm
from sympy.polys.orderings import MonomialOrder, grevlex, lex
from sympy.polys.rings import PolyRing

from .diffring import (
    _ZT,
    DerVar,
    DiffPoly,
    DiffRingError,
    QtElement,
    RingContext,
    _scalar,
    qt,
)


class ResourceLimit(RuntimeError):
    """A deadline or size ceiling was hit; ``kind`` names which."""

    def __init__(self, kind: str, detail: str = ""):
        super().__init__(f"resource limit ({kind}){': ' + detail if detail else ''}")
        self.kind = kind
        self.detail = detail


class Deadline:
    """Cooperative wall-clock deadline; ``None`` seconds means unlimited."""

    def __init__(self, seconds: float | None = None):
        self.seconds = seconds
        self.start = time.monotonic()

    def check(self):
        if self.seconds is not None and time.monotonic() - self.start > self.seconds:
            raise ResourceLimit("deadline", f"exceeded {self.seconds} s")


NO_DEADLINE = Deadline(None)

MAX_VARIABLES = 80
MAX_BASIS = 2000


# ---------------------------------------------------------------------------
# frozen algebraic systems


def frozen_key(dv: DerVar) -> tuple:
    """Block-internal variable order: (order, var_index), highest first."""
    return (dv.order, dv.var)


@dataclass(frozen=True)
class AlgSystem:
    """Polynomials with every derivative frozen, plus an elimination split.

    ``elim_vars`` and ``keep_vars`` are listed from highest to lowest; the
    elimination variables form the upper block of the term order.

    """

    ring: RingContext
    polynomials: tuple
    elim_vars: tuple
    keep_vars: tuple
    max_order: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        ev, kv = set(self.elim_vars), set(self.keep_vars)
        if ev & kv:
            raise DiffRingError("elimination and kept variables overlap")
        for p in self.polynomials:
            if p.ring != self.ring:
                raise DiffRingError("ring mismatch in algebraic system")
            extra = p.dervars() - ev - kv
            if extra:
                names = sorted(self.ring.dervar_name(v) for v in extra)
                raise DiffRingError(f"variables outside the split: {names}")

    @property
    def variables(self) -> tuple:
        return self.elim_vars + self.keep_vars

    def with_split(self, elim: Iterable[DerVar]) -> "AlgSystem":
        elim = set(elim)
        allv = set(self.variables)
        return make_system(self.ring, self.polynomials, elim, allv - elim)


def make_system(ring: RingContext, polys: Sequence[DiffPoly], elim, keep=None) -> AlgSystem:
    polys = tuple(p for p in polys if p)
    occurring = set()
    for p in polys:
        occurring |= p.dervars()
    elim = set(elim)
    keep = (occurring - elim) if keep is None else set(keep) | (occurring - elim)
    max_order: dict = {}
    for v in occurring:
        max_order[v.var] = max(max_order.get(v.var, 0), v.order)
    return AlgSystem(
        ring,
        polys,
        tuple(sorted(elim, key=frozen_key, reverse=True)),
        tuple(sorted(keep, key=frozen_key, reverse=True)),
        max_order,
    )


def prolong(system: Sequence[DiffPoly], bounds: Sequence[int], elim: Iterable[DerVar] | None = None) -> AlgSystem:
    """Adjoin ``delta^j p`` for ``0 <= j <= bound(p)`` and freeze everything.

    By default the MAIN derivative variables are the elimination variables.
    """
    if len(system) != len(bounds):
        raise DiffRingError("one bound per polynomial required")
    if not system:
        raise DiffRingError("empty system")
    ring = system[0].ring
    out = []
    for p, b in zip(system, bounds):
        if b < 0:
            raise DiffRingError("negative prolongation bound")
        q = p
        out.append(q)
        for _ in range(b):
            q = q.differentiate()
            out.append(q)
    if elim is None:
        elim = {v for q in out for v in q.dervars() if ring.is_main(v.var)}
    return make_system(ring, out, elim)


# ---------------------------------------------------------------------------
# conversion to and from sympy sparse polynomials


class Frozen:
    """Bijection between frozen DerVars (plus optional extras) and a PolyRing."""

    def __init__(self, ring: RingContext, variables: Sequence, domain=QQ, order=lex):
        self.ring = ring
        self.variables = list(variables)
        self.has_t = ring.field.kind == "Qt"
        names = [self._name(v, i) for i, v in enumerate(self.variables)]
        if self.has_t:
            names.append("t_")
        if len(names) > MAX_VARIABLES:
            raise ResourceLimit("variables", f"{len(names)} > {MAX_VARIABLES}")
        self.pring = PolyRing(names, domain, order)
        self.index = {v: i for i, v in enumerate(self.variables)}
        self.nvars = len(names)

    def _name(self, v, i) -> str:
        return f"x{i}"

    def _coeff_parts(self, c):
        """Yield (t_exponent, rational) pieces of a coefficient."""
        if isinstance(c, QtElement):
            if c.den != _ZT.one:
                raise DiffRingError("clear Q(t) denominators before freezing")
            for (e,), a in c.num.terms():
                yield e, int(a)
        else:
            yield 0, c

    def to_poly(self, p: DiffPoly):
        dom = self.pring.domain
        terms = {}
        n = self.nvars
        for m, c in p.terms.items():
            exp = [0] * n
            for v, e in m:
                try:
                    exp[self.index[v]] = e
                except KeyError:
                    raise DiffRingError(f"{self.ring.dervar_name(v)} not frozen") from None
            for te, a in self._coeff_parts(c):
                if self.has_t:
                    exp[-1] = te
                key = tuple(exp)
                if isinstance(a, Fraction):
                    a = dom.convert(QQ(a.numerator, a.denominator)) if dom == QQ else None
                    if a is None:
                        raise DiffRingError("fractional coefficient in an integer ring")
                terms[key] = terms.get(key, dom.zero) + dom.convert(a)
        return self.pring.from_dict({k: v for k, v in terms.items() if v})

    def from_poly(self, f) -> DiffPoly:
        out: dict = {}
        for exp, c in f.terms():
            mono = tuple(sorted((self.variables[i], e) for i, e in enumerate(exp[: len(self.variables)]) if e))
            c = _rational(c)
            if self.has_t and exp[-1]:
                c = qt(_ZT(c.numerator if isinstance(c, Fraction) else c) * _ZT.gens[0] ** exp[-1],
                       _ZT(c.denominator if isinstance(c, Fraction) else 1))
            out[mono] = out.get(mono, 0) + c
        return DiffPoly(self.ring, {m: _scalar(c) for m, c in out.items()})

    def var(self, v):
        return self.pring.gens[self.index[v]]


def _rational(c):
    if hasattr(c, "denominator") and int(c.denominator) != 1:
        return Fraction(int(c.numerator), int(c.denominator))
    if hasattr(c, "numerator"):
        return int(c.numerator)
    return int(c)


def clear_denominators(p: DiffPoly) -> DiffPoly:
    """Scale by a base-field unit so all coefficients are integers (or Z[t])."""
    return p.primitive() if p else p


# ---------------------------------------------------------------------------
# Buchberger


@dataclass
class GroebnerBasis:
    """Reduced Gröbner basis (generators as DiffPolys) of an elimination ideal."""

    generators: tuple
    variables: tuple
    unit: bool = False

    def is_unit(self) -> bool:
        return self.unit


def _lm(f):
    return f.LM


def _s_poly(f, g):
    lcm = monomial_lcm(f.LM, g.LM)
    mf = tuple(a - b for a, b in zip(lcm, f.LM))
    mg = tuple(a - b for a, b in zip(lcm, g.LM))
    return f.mul_term((mf, g.LC)) - g.mul_term((mg, f.LC))


def _coprime(a, b) -> bool:
    return all(x == 0 or y == 0 for x, y in zip(a, b))


def buchberger(F: Sequence, pring, deadline: Deadline = NO_DEADLINE, max_basis: int = MAX_BASIS,
               trace: Callable | None = None) -> list:
    """Reduced Gröbner basis of ``F`` (PolyElements of ``pring``).

    Pairs are processed by the normal selection strategy with the
    Gebauer–Möller criteria.
    """
    order = pring.order
    F = [f.monic() for f in F if f]
    if not F:
        return []
    G: list = []  # indices into polys
    polys: list = []
    pairs: set = set()

    def update(h_idx):
        nonlocal G, pairs
        h = polys[h_idx]
        hlm = h.LM
        C = [(g, monomial_lcm(polys[g].LM, hlm)) for g in G]
        D = []
        while C:
            g1, l1 = C.pop()
            if _coprime(polys[g1].LM, hlm):
                D.append((g1, l1))
                continue
            if any(monomial_divides(l2, l1) for _, l2 in C) or any(monomial_divides(l2, l1) for _, l2 in D):
                continue
            D.append((g1, l1))
        E = {(g, h_idx) for g, _ in D if not _coprime(polys[g].LM, hlm)}
        kept = set()
        for (a, b) in pairs:
            lab = monomial_lcm(polys[a].LM, polys[b].LM)
            if (monomial_divides(hlm, lab)
                    and monomial_lcm(polys[a].LM, hlm) != lab
                    and monomial_lcm(polys[b].LM, hlm) != lab):
                continue
            kept.add((a, b))
        pairs = kept | E
        G = [g for g in G if not monomial_divides(hlm, polys[g].LM)] + [h_idx]

    F.sort(key=lambda f: order(f.LM))
    for f in F:
        f = f.rem([polys[g] for g in G]) if G else f
        if f:
            polys.append(f.monic())
            update(len(polys) - 1)
    while pairs:
        deadline.check()
        a, b = min(pairs, key=lambda ab: (order(monomial_lcm(polys[ab[0]].LM, polys[ab[1]].LM)), ab))
        pairs.discard((a, b))
        s = _s_poly(polys[a], polys[b])
        h = s.rem([polys[g] for g in G])
        if trace is not None:
            trace({"pair": [a, b], "reduced_to_zero": not h, "basis_size": len(G)})
        if h:
            if h.is_ground:
                return [pring.one]
            polys.append(h.monic())
            if len(polys) > max_basis:
                raise ResourceLimit("basis_size", f"more than {max_basis} polynomials")
            update(len(polys) - 1)
    return interreduce([polys[g] for g in G], pring)


def interreduce(G: Sequence, pring) -> list:
    order = pring.order
    G = sorted((g.monic() for g in G if g), key=lambda g: order(g.LM))
    minimal = []
    for g in G:
        if not any(monomial_divides(h.LM, g.LM) for h in minimal):
            minimal.append(g)
    out = []
    for i, g in enumerate(minimal):
        others = minimal[:i] + minimal[i + 1:]
        r = g.rem(others) if others else g
        out.append(r.monic())
    return sorted(out, key=lambda g: order(g.LM), reverse=True)


def is_groebner(G: Sequence) -> bool:
    """Buchberger criterion: every S-polynomial reduces to zero."""
    G = [g for g in G if g]
    for i in range(len(G)):
        for j in range(i + 1, len(G)):
            if _coprime(G[i].LM, G[j].LM):
                continue
            if _s_poly(G[i], G[j]).rem(G):
                return False
    return True


class BlockGrevlex(MonomialOrder):
    """grevlex on the first ``k`` variables, ties broken by grevlex on the rest.

    Same ordering as the equivalent ``ProductOrder``, with a flat key that
    is cheaper to evaluate inside polynomial division.
    """

    is_global = True

    def __init__(self, k: int):
        self.k = k

    def __call__(self, monomial):
        k = self.k
        head, tail = monomial[:k], monomial[k:]
        return (sum(head), tuple(-e for e in reversed(head)), sum(tail), tuple(-e for e in reversed(tail)))

    def __repr__(self):
        return f"BlockGrevlex({self.k})"

    def __eq__(self, other):
        return isinstance(other, BlockGrevlex) and other.k == self.k

    def __hash__(self):
        return hash((BlockGrevlex, self.k))


def elimination_order(k: int):
    """Block order: grevlex on the first ``k`` variables, then grevlex on the rest."""
    if k <= 0:
        return grevlex
    return BlockGrevlex(k)


def groebner_eliminate(sys: AlgSystem, saturate_by: DiffPoly | None = None,
                       deadline: Deadline = NO_DEADLINE, max_basis: int = MAX_BASIS,
                       trace: Callable | None = None) -> GroebnerBasis:
    """Basis of ``(sys : h^inf) ∩ K[keep_vars]`` with ``h = saturate_by``.

    Saturation adjoins ``z*h - 1`` for a fresh ``z`` ranked above everything.
    The elimination variables and ``z`` form one grevlex block above the rest.
    """
    variables = list(sys.variables)
    ne = len(sys.elim_vars)
    if saturate_by is not None:
        extra = saturate_by.dervars() - set(variables)
        if extra:
            raise DiffRingError("saturating polynomial uses variables outside the system")
    conv = Frozen(sys.ring, variables, order=elimination_order(ne))
    polys = [conv.to_poly(clear_denominators(p)) for p in sys.polynomials]
    if saturate_by is not None:
        zring = PolyRing(["z_"] + [str(g) for g in conv.pring.gens], QQ, elimination_order(ne + 1))
        lift = lambda f: zring.from_dict({(0,) + k: v for k, v in f.terms()})  # noqa: E731
        z = zring.gens[0]
        work = [lift(f) for f in polys] + [z * lift(conv.to_poly(clear_denominators(saturate_by))) - 1]
        basis = buchberger(work, zring, deadline, max_basis, trace)
        basis = [conv.pring.from_dict({k[1:]: v for k, v in g.terms()}) for g in basis if all(m[0] == 0 for m in g.monoms())]
    else:
        basis = buchberger(polys, conv.pring, deadline, max_basis, trace)
    if len(basis) == 1 and basis[0].is_ground:
        return GroebnerBasis((sys.ring.one,), tuple(sys.keep_vars), unit=True)
    kept = [g for g in basis if all(all(e == 0 for e in m[:ne]) for m in g.monoms())]
    gens = tuple(clear_denominators(conv.from_poly(g)) for g in kept)
    return GroebnerBasis(gens, tuple(sys.keep_vars))


def groebner_basis(polys: Sequence[DiffPoly], variables: Sequence[DerVar] | None = None,
                   deadline: Deadline = NO_DEADLINE) -> tuple:
    """Reduced lex basis of frozen polynomials (variables highest first)."""
    polys = [p for p in polys if p]
    if not polys:
        return ()
    if variables is None:
        vs = set()
        for p in polys:
            vs |= p.dervars()
        variables = sorted(vs, key=frozen_key, reverse=True)
    conv = Frozen(polys[0].ring, variables)
    basis = buchberger([conv.to_poly(clear_denominators(p)) for p in polys], conv.pring, deadline)
    return tuple(clear_denominators(conv.from_poly(g)) for g in basis)


def normal_form(f: DiffPoly, basis: Sequence[DiffPoly], variables: Sequence[DerVar], order=lex) -> DiffPoly:
    """Remainder of ``f`` modulo ``basis`` (a Gröbner basis for ``order``)."""
    conv = Frozen(f.ring, variables, order=order)
    G = [conv.to_poly(clear_denominators(g)) for g in basis]
    return conv.from_poly(conv.to_poly(f).rem(G))


# ---------------------------------------------------------------------------
# gcd, content, primitive part


def _all_vars(*ps: DiffPoly) -> list:
    vs = set()
    for p in ps:
        vs |= p.dervars()
    return sorted(vs, key=frozen_key, reverse=True)


def _zz_conv(ps, first=None):
    vs = _all_vars(*ps)
    if first is not None:
        vs = [first] + [v for v in vs if v != first]
    return Frozen(ps[0].ring, vs, QQ)


def poly_gcd(p: DiffPoly, q: DiffPoly) -> DiffPoly:
    """Multivariate gcd, normalized integer-primitive with positive leading term."""
    if not p and not q:
        raise DiffRingError("gcd of two zero polynomials")
    if not p:
        return q.primitive()
    if not q:
        return p.primitive()
    conv = _zz_conv([p, q])
    g = conv.to_poly(p).gcd(conv.to_poly(q))
    return conv.from_poly(g).primitive()


def exact_div(p: DiffPoly, q: DiffPoly) -> DiffPoly:
    """Exact quotient p/q; raises ArithmeticError if q does not divide p."""
    if not q:
        raise ZeroDivisionError("division by zero polynomial")
    if not p:
        return p
    conv = _zz_conv([p, q])
    a, b = conv.to_poly(p), conv.to_poly(q)
    try:
        quo = a.exquo(b)
    except Exception as exc:  # sympy raises ExactQuotientFailed
        raise ArithmeticError("inexact division") from exc
    return conv.from_poly(quo)


def divides(q: DiffPoly, p: DiffPoly) -> bool:
    try:
        exact_div(p, q)
    except ArithmeticError:
        return False
    return True


def content_primitive(p: DiffPoly, dv: DerVar) -> tuple:
    """(content, primitive part) of ``p`` viewed as univariate in ``dv``.

    The content is the gcd of the coefficients and carries the rational
    scaling, so ``content * primitive == p`` exactly.
    """
    if not p:
        raise DiffRingError("content of the zero polynomial")
    coeffs = list(p.coefficients(dv).values())
    c = coeffs[0]
    for a in coeffs[1:]:
        c = poly_gcd(c, a)
        if c.is_constant():
            break
    c = c.primitive()
    prim = exact_div(p, c)
    # make the primitive part integer-primitive and move the unit into the content
    prim_n = prim.primitive()
    ratio = _unit_ratio(prim, prim_n)
    return c * ratio, prim_n


def _unit_ratio(a: DiffPoly, b: DiffPoly):
    m = next(iter(b.terms))
    x, y = a.terms[m], b.terms[m]
    if isinstance(x, int) and isinstance(y, int):
        return Fraction(x, y) if x % y else x // y
    return x / (Fraction(y) if isinstance(y, int) else y)


def primitive_part(p: DiffPoly, dv: DerVar) -> DiffPoly:
    return content_primitive(p, dv)[1]


def alg_gcd_primitive(p: DiffPoly, q=None):
    """gcd(p, q) when ``q`` is a DiffPoly, else (content, primitive) w.r.t. DerVar ``q``."""
    if isinstance(q, DiffPoly):
        return poly_gcd(p, q)
    if isinstance(q, DerVar):
        return content_primitive(p, q)
    raise DiffRingError("second argument must be a DiffPoly or a DerVar")


def squarefree_part(p: DiffPoly, dv: DerVar) -> DiffPoly:
    """Remove repeated factors that involve ``dv``."""
    d = p.diff(dv)
    if not d:
        return p.primitive()
    g = poly_gcd(p, d)
    return exact_div(p, g).primitive()


# ---------------------------------------------------------------------------
# determinants and resultants


def bareiss_det(M: list, zero, one):
    """Fraction-free determinant of a square matrix of ring elements."""
    n = len(M)
    if n == 0:
        return one
    A = [row[:] for row in M]
    prev = one
    sign = 1
    for k in range(n - 1):
        if not A[k][k]:
            for i in range(k + 1, n):
                if A[i][k]:
                    A[k], A[i] = A[i], A[k]
                    sign = -sign
                    break
            else:
                return zero
        akk = A[k][k]
        for i in range(k + 1, n):
            aik = A[i][k]
            row_i, row_k = A[i], A[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * akk - aik * row_k[j]).exquo(prev)
            row_i[k] = zero
        prev = akk
    return A[n - 1][n - 1] if sign > 0 else -A[n - 1][n - 1]


def _univariate_coeffs(f, i: int, deg: int, pring):
    cs = [pring.zero] * (deg + 1)
    for m, c in f.terms():
        e = m[i]
        cs[e] += pring.from_dict({m[:i] + (0,) + m[i + 1:]: c})
    return cs[::-1]


def sylvester_matrix(f, g, i: int, pring) -> list:
    m, n = f.degree(pring.gens[i]), g.degree(pring.gens[i])
    cf = _univariate_coeffs(f, i, m, pring)
    cg = _univariate_coeffs(g, i, n, pring)
    size = m + n
    z = pring.zero
    rows = []
    for r in range(n):
        rows.append([z] * r + cf + [z] * (size - m - 1 - r))
    for r in range(m):
        rows.append([z] * r + cg + [z] * (size - n - 1 - r))
    return rows


def resultant(p: DiffPoly, q: DiffPoly, dv: DerVar) -> DiffPoly:
    """Sylvester resultant of ``p`` and ``q`` with respect to ``dv``."""
    if not p or not q or p.degree(dv) <= 0 or q.degree(dv) <= 0:
        raise DiffRingError("both polynomials must involve the variable")
    conv = Frozen(p.ring, [dv] + [v for v in _all_vars(p, q) if v != dv], ZZ)
    a = conv.to_poly(clear_denominators(p))
    b = conv.to_poly(clear_denominators(q))
    ca, cb = _unit_ratio(p, clear_denominators(p)), _unit_ratio(q, clear_denominators(q))
    M = sylvester_matrix(a, b, 0, conv.pring)
    det = bareiss_det(M, conv.pring.zero, conv.pring.one)
    m, n = p.degree(dv), q.degree(dv)
    return conv.from_poly(det) * (ca**n * cb**m)


def elim_cascade(polys: Sequence[DiffPoly], order: Sequence[DerVar]) -> DiffPoly:
    """Eliminate ``order`` one variable at a time by successive resultants.

    ``polys`` must contain exactly ``len(order) + 1`` polynomials.  At each
    step the polynomial of lowest positive degree in the current variable is
    paired against every other one that involves it.  The last surviving
    polynomial's primitive part is returned (it may carry extraneous
    factors; callers strip them).
    """
    work = [p for p in polys]
    for v in order:
        inv = [p for p in work if p.degree(v) > 0]
        rest = [p for p in work if p.degree(v) <= 0]
        if not inv:
            continue
        inv.sort(key=lambda p: (p.degree(v), len(p.terms)))
        pivot = inv[0]
        work = rest + [resultant(q, pivot, v).primitive() for q in inv[1:]]
    nonzero = [p for p in work if p]
    if not nonzero:
        raise DiffRingError("cascade produced only zero")
    out = nonzero[0]
    for p in nonzero[1:]:
        out = poly_gcd(out, p)
    return out.primitive()
