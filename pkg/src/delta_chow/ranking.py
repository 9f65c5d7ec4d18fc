"""Rankings on derivative variables: leaders, initials, separants, ranks."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

from .diffring import DerVar, DiffPoly, DiffRingError, RingContext


class Cmp(enum.IntEnum):
    LT = -1
    EQ = 0
    GT = 1


class RankCmp(enum.IntEnum):
    LOWER = -1
    SAME = 0
    HIGHER = 1


class NoLeaderError(DiffRingError):
    """The polynomial lies in the base field extended by the parameters."""


@dataclass(frozen=True)
class Ranking:
    """A ranking on the derivatives of ``ring``'s variables.

    ``kind`` is ``"orderly"``, ``"elimination"`` or ``"block"``.  For an
    elimination ranking ``order`` lists MAIN variable indices from lowest to
    highest; for a block ranking ``blocks`` lists index tuples from lowest to
    highest block, each ranked orderly inside.  MAIN variables not mentioned
    rank below every mentioned one (orderly among themselves).  PARAMETER
    derivatives rank below every MAIN derivative.
    """

    kind: str
    ring: RingContext
    order: tuple = ()
    blocks: tuple = ()
    _cache: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("orderly", "elimination", "block"):
            raise DiffRingError(f"unknown ranking kind {self.kind!r}")
        listed = list(self.order) + [v for b in self.blocks for v in b]
        if len(set(listed)) != len(listed):
            raise DiffRingError("variable listed twice in ranking")
        for v in listed:
            if not self.ring.is_main(v):
                raise DiffRingError(f"ranking lists non-MAIN variable {self.ring.names[v]!r}")

    @classmethod
    def orderly(cls, ring: RingContext) -> "Ranking":
        return cls("orderly", ring)

    @classmethod
    def elimination(cls, ring: RingContext, names_low_to_high) -> "Ranking":
        return cls("elimination", ring, order=tuple(ring.index(n) for n in names_low_to_high))

    @classmethod
    def block(cls, ring: RingContext, blocks_low_to_high) -> "Ranking":
        return cls("block", ring, blocks=tuple(tuple(ring.index(n) for n in b) for b in blocks_low_to_high))

    def with_ring(self, ring: RingContext) -> "Ranking":
        """Same ranking over a ring that contains this one's names."""
        names = self.ring.names
        order = tuple(ring.index(names[v]) for v in self.order)
        blocks = tuple(tuple(ring.index(names[v]) for v in b) for b in self.blocks)
        return Ranking(self.kind, ring, order, blocks)

    # -- keys --------------------------------------------------------------
    def key(self, dv: DerVar) -> tuple:
        """Sort key: larger key means higher rank."""
        k = self._cache.get(dv)
        if k is not None:
            return k
        v, o = dv
        if not 0 <= v < len(self.ring.names):
            raise DiffRingError(f"variable index {v} not in ring")
        if not self.ring.is_main(v):
            k = (0, o, v)
        elif self.kind == "orderly":
            k = (1, o, v)
        elif self.kind == "elimination":
            k = (2, self.order.index(v), o) if v in self.order else (1, o, v)
        else:
            for i, b in enumerate(self.blocks):
                if v in b:
                    k = (2, i, o, v)
                    break
            else:
                k = (1, o, v)
        self._cache[dv] = k
        return k

    def compare(self, a: DerVar, b: DerVar) -> Cmp:
        ka, kb = self.key(a), self.key(b)
        return Cmp.LT if ka < kb else Cmp.GT if ka > kb else Cmp.EQ

    def describe(self) -> str:
        n = self.ring.names
        if self.kind == "orderly":
            return "orderly"
        if self.kind == "elimination":
            return "elim:" + "<".join(n[v] for v in self.order)
        return "block:[" + "|".join(",".join(n[v] for v in b) for b in self.blocks) + "]"

    # -- polynomial notions ------------------------------------------------
    def leader(self, p: DiffPoly) -> DerVar | None:
        best = None
        bk = None
        for m in p.terms:
            for v, _ in m:
                if not self.ring.is_main(v.var):
                    continue
                k = self.key(v)
                if bk is None or k > bk:
                    best, bk = v, k
        return best

    def rank_key(self, p: DiffPoly) -> tuple:
        """Key of the rank preorder; polynomials without leader are lowest."""
        u = self.leader(p)
        if u is None:
            return (0,)
        return (1, self.key(u), p.degree(u))

    def sorted_dervars(self, p: DiffPoly, main_only: bool = True) -> list:
        """Derivative variables of ``p`` from highest to lowest rank."""
        vs = [v for v in p.dervars() if not main_only or self.ring.is_main(v.var)]
        return sorted(vs, key=self.key, reverse=True)


def compare_dervar(r: Ranking, a: DerVar, b: DerVar) -> Cmp:
    return r.compare(a, b)


@dataclass(frozen=True)
class RankDecomposition:
    leader: DerVar
    initial: DiffPoly
    separant: DiffPoly
    rank_degree: int


def decompose(p: DiffPoly, r: Ranking) -> RankDecomposition:
    u = r.leader(p)
    if u is None:
        raise NoLeaderError("polynomial has no leader (it lies in the parameter field)")
    coeffs = p.coefficients(u)
    deg = max(coeffs)
    return RankDecomposition(u, coeffs[deg], p.diff(u), deg)


def compare_rank(p: DiffPoly, q: DiffPoly, r: Ranking) -> RankCmp:
    kp, kq = r.rank_key(p), r.rank_key(q)
    return RankCmp.LOWER if kp < kq else RankCmp.HIGHER if kp > kq else RankCmp.SAME


_ELIM_RE = re.compile(r"elim:(.+)\Z")
_BLOCK_RE = re.compile(r"block:\[(.*)\]\Z")


def parse_ranking(spec: str, ring: RingContext) -> Ranking:
    """Parse ``orderly``, ``elim:y1<y2`` or ``block:[u00|y1,y2]`` (lowest first)."""
    spec = spec.strip()
    if spec == "orderly":
        return Ranking.orderly(ring)
    m = _ELIM_RE.match(spec)
    if m:
        names = [s.strip() for s in m.group(1).split("<")]
        if not all(names):
            raise DiffRingError(f"malformed ranking {spec!r}")
        return Ranking.elimination(ring, names)
    m = _BLOCK_RE.match(spec)
    if m:
        blocks = [[s.strip() for s in b.split(",")] for b in m.group(1).split("|")]
        if not all(all(b) for b in blocks):
            raise DiffRingError(f"malformed ranking {spec!r}")
        return Ranking.block(ring, blocks)
    raise DiffRingError(f"malformed ranking {spec!r}")
