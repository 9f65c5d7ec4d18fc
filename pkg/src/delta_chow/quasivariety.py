"""Defining relations of the differential Chow quasi-variety for g = 1.

Given a template F = sum a_k M_k over a fixed monomial support, the relations
R(a) vanish exactly on coefficient vectors that make F a Chow form (off
the locus where the initial of F in u00^{(h)} vanishes).  The coefficients
a_k are differential indeterminates, so relations may involve their
derivatives.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from math import comb
from typing import Sequence

from sympy import Matrix, Rational

from .diffring import MAIN, PARAMETER, DerVar, DiffPoly, DiffRingError, RingContext


@dataclass(frozen=True)
class ChowIndex:
    n: int
    d: int
    h: int
    g: int
    m: int

    @classmethod
    def parse(cls, text: str) -> "ChowIndex":
        parts = [int(x) for x in text.split(",")]
        if len(parts) != 5:
            raise DiffRingError("index needs five integers n,d,h,g,m")
        return cls(*parts)


def u_names(n: int, d: int) -> list:
    return [[f"u{i}{j}" for j in range(n + 1)] for i in range(d + 1)]


@dataclass
class ChowTemplate:
    """F = sum_k a_k * support[k] with unknown coefficients a_1..a_D."""

    index: ChowIndex
    ring: RingContext
    support: tuple  # monomials as DiffPolys with coefficient 1
    coeffs: tuple  # names a1..aD
    blocks: tuple  # u-variable names per block
    y_names: tuple
    s_names: tuple  # per block: {(j, k): name}

    @property
    def poly(self) -> DiffPoly:
        total = self.ring.zero
        for name, mono in zip(self.coeffs, self.support):
            total = total + self.ring.var(name) * mono
        return total

    def a(self, k: int, order: int = 0) -> DiffPoly:
        return self.ring.var(self.coeffs[k], order)

    def a_indices(self) -> set:
        return {self.ring.index(c) for c in self.coeffs}

    def u_indices(self) -> set:
        return {self.ring.index(u) for b in self.blocks for u in b}


def build_template(index: ChowIndex, support: Sequence[str]) -> ChowTemplate:
    """Template with one unknown per support monomial (validated against the index)."""
    if index.g != 1:
        raise DiffRingError("only g = 1 templates are supported")
    if not support:
        raise DiffRingError("empty support")
    n, d = index.n, index.d
    blocks = u_names(n, d)
    y_names = tuple(f"y{j}" for j in range(1, n + 1))
    coeffs = tuple(f"a{k}" for k in range(1, len(support) + 1))
    s_names = tuple({(j, k): f"s{i}_{j}{k}" for j in range(n + 1) for k in range(j + 1, n + 1)} for i in range(d + 1))
    names = list(y_names) + [u for b in blocks for u in b] + list(coeffs)
    names += [s for blk in s_names for s in blk.values()]
    kinds = [MAIN] * n + [PARAMETER] * (len(names) - n)
    ring = RingContext(tuple(names), tuple(kinds))
    monos = []
    lead = DerVar(ring.index(blocks[0][0]), index.h)
    u0_top = {DerVar(ring.index(u), index.h) for u in blocks[0]}
    seen = set()
    for text in support:
        p = ring.parse(text)
        if len(p.terms) != 1:
            raise DiffRingError(f"support entry {text!r} is not a monomial")
        (m, c), = p.terms.items()
        if c != 1:
            raise DiffRingError(f"support entry {text!r} has a coefficient")
        if m in seen:
            raise DiffRingError(f"duplicate support monomial {text!r}")
        seen.add(m)
        md = dict(m)
        allowed = {ring.index(u) for b in blocks for u in b}
        if any(v.var not in allowed for v in md):
            raise DiffRingError(f"{text!r} uses variables outside the u-blocks")
        if any(v.order > index.h for v in md):
            raise DiffRingError(f"{text!r} exceeds order h = {index.h}")
        for i, b in enumerate(blocks):
            bi = {ring.index(u) for u in b}
            deg = sum(e for v, e in md.items() if v.var in bi)
            if deg != index.m:
                raise DiffRingError(f"{text!r} has degree {deg} in block {i}, expected {index.m}")
        if sum(e for v, e in md.items() if v in u0_top) > index.g:
            raise DiffRingError(f"{text!r} exceeds degree g = {index.g} in the order-h u_0 derivatives")
        monos.append(p)
    if not any(lead in dict(next(iter(p.terms))) for p in monos):
        raise DiffRingError("support never involves u00^(h)")
    return ChowTemplate(index, ring, tuple(monos), coeffs, tuple(tuple(b) for b in blocks), y_names, s_names)


def load_example_support() -> tuple:
    """Index and support of the shipped 16-term example (n=2, d=1, h=1, g=1, m=2)."""
    text = resources.files("delta_chow").joinpath("data/example_support.json").read_text()
    data = json.loads(text)
    return ChowIndex(*data["index"]), data["support"]


# ---------------------------------------------------------------------------
# helpers


def _collect(p: DiffPoly, keep_vars: set) -> dict:
    """Group terms by their monomial in ``keep_vars``'s complement.

    Returns ``{outer monomial: polynomial in keep_vars}``.
    """
    groups: dict = {}
    for m, c in p.terms.items():
        inner = tuple((v, e) for v, e in m if v.var in keep_vars)
        outer = tuple((v, e) for v, e in m if v.var not in keep_vars)
        groups.setdefault(outer, {})[inner] = c
    return {k: DiffPoly(p.ring, v) for k, v in groups.items()}


def _lambda_scale(F: DiffPoly, block: set, lam: str) -> DiffPoly:
    ring = F.ring
    assign = {}
    for v in F.dervars():
        if v.var in block:
            k = v.order
            assign[v] = sum((comb(k, i) * ring.var(lam, i) * ring.var(ring.names[v.var], k - i) for i in range(k + 1)), ring.zero)
    return F.substitute(assign)


def _dedupe(polys) -> list:
    out = []
    seen = set()
    for p in polys:
        if not p:
            continue
        q = p.primitive()
        if q not in seen:
            seen.add(q)
            out.append(q)
    return out


def _subs_leader(p: DiffPoly, lead: DerVar, num: DiffPoly, A0: DiffPoly) -> tuple:
    """p with lead -> num/A0, returned as (numerator, power of A0)."""
    coeffs = p.coefficients(lead)
    deg = max(coeffs)
    if deg == 0:
        return p, 0
    total = p.ring.zero
    npow = [p.ring.one]
    for _ in range(deg):
        npow.append(npow[-1] * num)
    apow = [p.ring.one]
    for _ in range(deg):
        apow.append(apow[-1] * A0)
    for e, c in coeffs.items():
        total = total + c * npow[e] * apow[deg - e]
    return total, deg


# ---------------------------------------------------------------------------
# the generator


@dataclass
class QuasiVarietyPresentation:
    relations: list
    excluded: list
    linear_solution: dict = field(default_factory=dict)  # a-name -> DiffPoly in the free a's
    stage_sizes: dict = field(default_factory=dict)
    template: ChowTemplate | None = None

    def simplified(self) -> list:
        """Relations after substituting the solved linear relations, deduplicated."""
        ring = self.template.ring
        assign = {}
        for name, val in self.linear_solution.items():
            idx = ring.index(name)
            top = max((v.order for r in self.relations for v in r.dervars() if v.var == idx), default=0)
            q = val
            for k in range(top + 1):
                assign[DerVar(idx, k)] = q
                q = q.differentiate()
        return _dedupe(r.substitute(assign) for r in self.relations)

    def to_json(self) -> dict:
        return {
            "relations": [str(r) for r in self.relations],
            "excluded": [str(e) for e in self.excluded],
            "stage_sizes": self.stage_sizes,
            "coefficients": list(self.template.coeffs) if self.template else [],
        }


def _linear_relations(T: ChowTemplate, F: DiffPoly) -> list:
    ring = T.ring
    lam = "lam_"
    big = ring.extend([lam])
    G = F.to_ring(big)
    a_idx = {big.index(c) for c in T.coeffs}
    out = []
    for b in T.blocks:
        block = {big.index(u) for u in b}
        diff = _lambda_scale(G, block, lam) - big.var(lam) ** T.index.m * G
        out.extend(_collect(diff, a_idx).values())
    return [r.to_ring(ring) for r in out]


def _solve_linear(T: ChowTemplate, relations: list) -> dict:
    """RREF with the highest-index unknowns as pivots; returns pivot -> expression."""
    ring = T.ring
    names = list(reversed(T.coeffs))
    idx = {DerVar(ring.index(nm), 0): j for j, nm in enumerate(names)}
    rows = []
    for r in relations:
        row = [Rational(0)] * len(names)
        for m, c in r.terms.items():
            if len(m) != 1 or m[0][1] != 1 or m[0][0] not in idx:
                raise DiffRingError(f"relation {r} is not linear in the coefficients")
            cf = Fraction(c)
            row[idx[m[0][0]]] = Rational(cf.numerator, cf.denominator)
        rows.append(row)
    if not rows:
        return {}
    R, pivots = Matrix(rows).rref()
    sol = {}
    for i, pc in enumerate(pivots):
        expr = ring.zero
        for j in range(len(names)):
            if j != pc and R[i, j] != 0:
                c = Fraction(int(R[i, j].p), int(R[i, j].q))
                expr = expr - ring.var(names[j]) * c
        sol[names[pc]] = expr
    return sol


def cv1_generate(T: ChowTemplate, deadline=None) -> QuasiVarietyPresentation:
    """Relations of the Chow quasi-variety of a g = 1 template."""
    ring = T.ring
    idx = T.index
    n, d, h = idx.n, idx.d, idx.h
    F = T.poly
    a_idx = T.a_indices()
    lead = ring.dv(T.blocks[0][0], h)

    # excluded locus: coefficients of the initial of F in u00^(h)
    I_F = F.coeff(lead, idx.g)
    excluded = sorted(_dedupe(_collect(I_F, a_idx).values()), key=str)

    # (1) delta-homogeneity
    stage1 = _dedupe(_linear_relations(T, F))
    sol = _solve_linear(T, stage1)
    assign = {ring.dv(name): val for name, val in sol.items()}
    F1 = F.substitute(assign)
    if F1.degree(lead) <= 0:
        raise DiffRingError("template cannot carry u00^(h) after the homogeneity relations")

    # (2) A_j, gamma, xi
    A0 = F1.coeff(lead, 1)
    A = [F1.diff(ring.dv(T.blocks[0][j], h)) for j in range(1, n + 1)]
    gamma_num = -(F1 - A0 * ring.var(T.blocks[0][0], h))  # gamma = gamma_num / A0

    def at_gamma(num: DiffPoly, e: int) -> tuple:
        q, extra = _subs_leader(num, lead, gamma_num, A0)
        return q, e + extra

    xi = []
    for j in range(n):
        N, e = at_gamma(A[j], 1)
        ders = [(N, e)]
        for _ in range(h):
            N, e = ders[-1]
            Nn = N.differentiate() * A0 - e * N * A0.differentiate()
            ders.append(at_gamma(Nn, e + 1))
        xi.append(ders)

    # (3) the hyperplanes P_sigma through the point
    stage3 = []
    for sigma in range(1, d + 1):
        expr = ring.var(T.blocks[sigma][0]) * A0
        for j in range(1, n + 1):
            expr = expr + ring.var(T.blocks[sigma][j]) * A[j - 1]
        if expr.degree(lead) > 0:
            expr, _ = _subs_leader(expr, lead, gamma_num, A0)
        stage3.extend(_collect(expr, a_idx).values())
    stage3 = _dedupe(stage3)

    # (4) F_1(S^0 Y, ..., S^d Y) vanishes at the point
    subs = {}
    y = [ring.one] + [ring.var(nm) for nm in T.y_names]
    for i, block in enumerate(T.blocks):
        S = T.s_names[i]
        comps = []
        for j in range(n + 1):
            comp = ring.zero
            for k in range(n + 1):
                if j < k:
                    comp = comp + ring.var(S[(j, k)]) * y[k]
                elif j > k:
                    comp = comp - ring.var(S[(k, j)]) * y[k]
            comps.append(comp)
        for v in F1.dervars():
            if v.var in {ring.index(u) for u in block}:
                j = block.index(ring.names[v.var])
                subs[v] = comps[j].differentiate(v.order)
    G = F1.substitute(subs)
    y_idx = {ring.index(nm) for nm in T.y_names}
    chis = _collect(G, a_idx | y_idx)  # s-monomial -> chi(a, y)
    stage4 = []
    for chi in chis.values():
        if deadline is not None:
            deadline.check()
        terms = []
        top = 0
        for m, c in chi.terms.items():
            num = ring.const(c)
            e_tot = 0
            for v, e in m:
                if v.var in y_idx:
                    j = T.y_names.index(ring.names[v.var])
                    N, ex = xi[j][v.order]
                    num = num * N**e
                    e_tot += ex * e
                else:
                    num = num * DiffPoly(ring, {((v, e),): 1})
            terms.append((num, e_tot))
            top = max(top, e_tot)
        total = ring.zero
        for num, e in terms:
            total = total + num * A0 ** (top - e)
        stage4.extend(_collect(total, a_idx).values())
    stage4 = _dedupe(stage4)
    relations = stage1 + [r for r in stage3 if r not in stage1]
    relations += [r for r in stage4 if r not in relations]
    return QuasiVarietyPresentation(
        relations,
        excluded,
        sol,
        {"homogeneity": len(stage1), "hyperplanes": len(stage3), "intersection": len(stage4)},
        T,
    )


# ---------------------------------------------------------------------------
# coefficient vectors


def coefficient_vector(T: ChowTemplate, F: DiffPoly) -> dict | None:
    """Coefficients of F on the template support, or None if F leaves it."""
    G = F.to_ring(T.ring) if F.ring != T.ring else F
    vec = {}
    support = {next(iter(p.terms)): name for p, name in zip(T.support, T.coeffs)}
    for m, c in G.terms.items():
        if m not in support:
            return None
        vec[support[m]] = c
    for name in T.coeffs:
        vec.setdefault(name, 0)
    return vec


def evaluate_relations(P: QuasiVarietyPresentation, vec: dict) -> tuple:
    """(values of relations, values of excluded coordinates) at constant a's."""
    ring = P.template.ring
    assign = {}
    for name, val in vec.items():
        idx = ring.index(name)
        assign[DerVar(idx, 0)] = val
        top = max((v.order for r in P.relations for v in r.dervars() if v.var == idx), default=0)
        for k in range(1, top + 1):
            assign[DerVar(idx, k)] = 0
    rel = [r.substitute(assign).constant_value() for r in P.relations]
    exc = [e.substitute(assign).constant_value() for e in P.excluded]
    return rel, exc
