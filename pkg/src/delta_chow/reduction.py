"""Ritt reduction, characteristic sets, dimension and order."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .diffring import DerVar, DiffPoly, DiffRingError
from .ranking import NoLeaderError, Ranking, RankDecomposition, decompose


class UnitIdeal(ArithmeticError):
    """The system generates the unit ideal (a nonzero base-field element)."""

    def __init__(self, witness: DiffPoly | None = None):
        super().__init__("unit ideal")
        self.witness = witness


class ChainError(DiffRingError):
    pass


def _is_proper_derivative(v: DerVar, u: DerVar) -> bool:
    return v.var == u.var and v.order > u.order


@dataclass(frozen=True, eq=False)
class DiffChain:
    """Autoreduced sequence of differential polynomials in increasing rank."""

    elements: tuple
    ranking: Ranking
    decomps: tuple = field(default=(), repr=False)

    def __post_init__(self):
        els = tuple(self.elements)
        for p in els:
            if p.ring != self.ranking.ring:
                raise ChainError("chain element ring differs from ranking ring")
        els = tuple(sorted(els, key=self.ranking.rank_key))
        object.__setattr__(self, "elements", els)
        try:
            object.__setattr__(self, "decomps", tuple(decompose(p, self.ranking) for p in els))
        except NoLeaderError as exc:
            raise ChainError("chain element without leader") from exc

    @classmethod
    def checked(cls, elements: Iterable[DiffPoly], ranking: Ranking) -> "DiffChain":
        chain = cls(tuple(elements), ranking)
        problems = chain.violations()
        if problems:
            raise ChainError("; ".join(problems))
        return chain

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    @property
    def ring(self):
        return self.ranking.ring

    @property
    def leaders(self) -> tuple:
        return tuple(d.leader for d in self.decomps)

    @property
    def initials(self) -> tuple:
        return tuple(d.initial for d in self.decomps)

    @property
    def separants(self) -> tuple:
        return tuple(d.separant for d in self.decomps)

    def violations(self) -> list:
        """Reasons this sequence is not a chain (empty when it is)."""
        out = []
        leaders = self.leaders
        if len({u.var for u in leaders}) != len(leaders):
            out.append("two leaders in the same variable")
        for i, p in enumerate(self.elements):
            others = [d for j, d in enumerate(self.decomps) if j != i]
            if not is_reduced(p, others, partial=True):
                out.append(f"element {i} not partially reduced")
        if not out:
            for i, ini in enumerate(self.initials):
                if not ritt_reduce(ini, self).remainder:
                    out.append(f"initial of element {i} reduces to zero")
        return out

    def to_json(self) -> list:
        return [str(p) for p in self.elements]


def is_reduced(f: DiffPoly, decomps: Sequence[RankDecomposition], partial: bool = False) -> bool:
    vs = f.dervars()
    for d in decomps:
        u = d.leader
        for v in vs:
            if _is_proper_derivative(v, u):
                return False
        if not partial and f.degree(u) >= d.rank_degree:
            return False
    return True


@dataclass
class ReductionCertificate:
    """``prod S_i^d_i I_i^e_i * f - remainder`` lies in the ideal [A].

    With ``track=True`` the explicit combination is kept in ``combination``
    as ``{(i, k): cofactor}`` meaning ``sum cofactor * delta^k A_i``.
    """

    remainder: DiffPoly
    multiplier_exponents: list
    combination: dict | None = None

    def multiplier(self, chain: DiffChain) -> DiffPoly:
        m = chain.ring.one
        for (d, e), s, i in zip(self.multiplier_exponents, chain.separants, chain.initials):
            m = m * s**d * i**e
        return m


def ritt_reduce(f: DiffPoly, A: DiffChain, track: bool = False) -> ReductionCertificate:
    """Ritt pseudo-reduction of ``f`` modulo the chain ``A``.

    The highest-ranked offending derivative is eliminated first; proper
    derivatives use ``delta^k A_i`` (multiplier: separant) and the leaders
    themselves use ``A_i`` (multiplier: initial).
    """
    if f.ring != A.ring:
        raise DiffRingError("ring mismatch between polynomial and chain")
    r = A.ranking
    decomps = A.decomps
    by_var = {d.leader.var: i for i, d in enumerate(decomps)}
    exps = [[0, 0] for _ in decomps]
    combo: dict | None = {} if track else None
    prolonged: dict = {}

    def derivative_of(i, k):
        key = (i, k)
        if key not in prolonged:
            prolonged[key] = A.elements[i].differentiate(k)
        return prolonged[key]

    while f:
        target = None
        for v in r.sorted_dervars(f):
            i = by_var.get(v.var)
            if i is None:
                continue
            u = decomps[i].leader
            if v.order > u.order or (v == u and f.degree(v) >= decomps[i].rank_degree):
                target = (v, i)
                break
        if target is None:
            break
        v, i = target
        k = v.order - decomps[i].leader.order
        if k > 0:
            g = derivative_of(i, k)
            lc, dg, slot = decomps[i].separant, 1, 0
        else:
            g = A.elements[i]
            lc, dg, slot = decomps[i].initial, decomps[i].rank_degree, 1
        while True:
            coeffs = f.coefficients(v)
            df = max(coeffs)
            if df < dg:
                break
            top = coeffs[df]
            t = top if df == dg else top * DiffPoly(f.ring, {((v, df - dg),): 1})
            f = lc * f - t * g
            exps[i][slot] += 1
            if combo is not None:
                for key in combo:
                    combo[key] = combo[key] * lc
                combo[(i, k)] = combo.get((i, k), f.ring.zero) + t
            if not f:
                break
    return ReductionCertificate(f, [tuple(e) for e in exps], combo)


def sat_membership(f: DiffPoly, A: DiffChain) -> bool:
    """Membership in sat(A), exact when A is a characteristic set of a prime ideal."""
    return not ritt_reduce(f, A).remainder


def _text_key(p: DiffPoly) -> str:
    return str(p)


def basic_set(polys: Sequence[DiffPoly], r: Ranking) -> list:
    """Minimal-rank autoreduced subset; ties broken by canonical text."""
    cands = sorted(polys, key=lambda p: (r.rank_key(p), _text_key(p)))
    chosen: list = []
    decomps: list = []
    for p in cands:
        u = r.leader(p)
        if u is None:
            raise UnitIdeal(p)
        if any(d.leader.var == u.var for d in decomps):
            continue
        if is_reduced(p, decomps):
            chosen.append(p)
            decomps.append(decompose(p, r))
    return chosen


def charset(S: Iterable[DiffPoly], r: Ranking, deadline=None) -> DiffChain:
    """Ritt–Wu characteristic set of ``S``.  Raises :class:`UnitIdeal`."""
    work: list = []
    members: set = set()
    for p in S:
        if p.ring != r.ring:
            raise DiffRingError("ring mismatch between polynomial and ranking")
        if p:
            if r.leader(p) is None:
                raise UnitIdeal(p)
            q = p.primitive()
            if q not in members:
                members.add(q)
                work.append(q)
    if not work:
        raise DiffRingError("charset of the zero set")
    # the working set only grows, so every input stays reducible to zero
    while True:
        if deadline is not None:
            deadline.check()
        B = DiffChain(tuple(basic_set(work, r)), r)
        chosen = set(B.elements)
        before = set(members)
        new = []
        for p in work:
            if p in chosen:
                continue
            rem = ritt_reduce(p, B).remainder
            if rem:
                if r.leader(rem) is None:
                    raise UnitIdeal(rem)
                rem = rem.primitive()
                if rem in before:
                    # a reduced remainder would have lowered the basic set
                    raise AssertionError("characteristic set iteration did not progress")
                if rem not in members:
                    members.add(rem)
                    new.append(rem)
        if not new:
            return B
        work.extend(new)


@dataclass(frozen=True)
class DimOrder:
    dimension: int
    order: int | None
    parametric_set: tuple

    def to_json(self) -> dict:
        return {"dim": self.dimension, "order": self.order, "parametric_set": list(self.parametric_set)}


def dim_order(A: DiffChain, n_main: int | None = None) -> DimOrder:
    """Dimension, order (orderly rankings only) and parametric set of sat(A)."""
    ring = A.ring
    main = ring.main_indices
    leaders = A.leaders
    lead_vars = {u.var for u in leaders}
    dimension = len(main) - len(leaders)
    if A.ranking.kind != "orderly":
        order = None
    else:
        order = sum(u.order for u in leaders)
    params = tuple(ring.names[v] for v in main if v not in lead_vars)
    return DimOrder(dimension, order, params)


def relative_order(A: DiffChain, U: Sequence[str]) -> int:
    """Order of sat(A) relative to the parametric set ``U``.

    Recomputes a characteristic set under the elimination ranking with ``U``
    lowest and sums the leader orders.
    """
    ring = A.ring
    rest = [ring.names[v] for v in ring.main_indices if ring.names[v] not in U]
    r = Ranking.elimination(ring, list(U) + rest)
    B = charset(A.elements, r) if len(A) else A
    total = 0
    for u in B.leaders:
        if ring.names[u.var] in U:
            raise ChainError(f"{ring.names[u.var]} is not parametric")
        total += u.order
    return total
