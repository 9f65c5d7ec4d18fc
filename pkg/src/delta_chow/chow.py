"""Differential Chow forms, generalized Chow forms and differential resultants."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Mapping, Sequence

from .algelim import (
    NO_DEADLINE,
    Deadline,
    Frozen,
    bareiss_det,
    content_primitive,
    divides,
    elim_cascade,
    exact_div,
    groebner_eliminate,
    make_system,
    poly_gcd,
    squarefree_part,
)
from .diffring import MAIN, PARAMETER, DerVar, DiffPoly, DiffRingError, RingContext
from .ranking import Ranking
from .reduction import DiffChain, UnitIdeal, charset, dim_order, ritt_reduce


class ChowError(ArithmeticError):
    """The elimination pipeline could not produce a Chow form."""


# ---------------------------------------------------------------------------
# shapes and rings


@dataclass(frozen=True)
class GenericShape:
    """Generic differential polynomial of order ``s`` and degree ``m``."""

    s: int
    m: int

    def __post_init__(self):
        if self.s < 0 or self.m < 1:
            raise DiffRingError("shape needs order >= 0 and degree >= 1")

    def monomials(self, n: int) -> list:
        """Exponent lists over Y^{[s]} = (y_1, y_1', ..., y_n^{(s)}), constant first."""
        base = [(j, k) for j in range(n) for k in range(self.s + 1)]
        out = [()]
        for deg in range(1, self.m + 1):
            out.extend(combinations_with_replacement(range(len(base)), deg))
        return [tuple(base[i] for i in mono) for mono in out]


LINEAR = GenericShape(0, 1)


def coeff_name(i: int, k: int, width: int) -> str:
    return f"u{i}{k}" if width <= 10 else f"u{i}_{k}"


@dataclass(frozen=True)
class ChowRing:
    """Ring holding the variety's variables (MAIN) and the u-blocks (PARAMETER)."""

    ring: RingContext
    y_names: tuple
    blocks: tuple  # per block: tuple of u-variable names, constant coefficient first

    @property
    def n(self) -> int:
        return len(self.y_names)

    def block_vars(self, i: int) -> tuple:
        return tuple(self.ring.index(name) for name in self.blocks[i])

    def u(self, i: int, k: int, order: int = 0) -> DiffPoly:
        return self.ring.var(self.blocks[i][k], order)

    def generic_poly(self, i: int, shape: GenericShape) -> DiffPoly:
        ring = self.ring
        ys = [ring.index(y) for y in self.y_names]
        total = ring.zero
        for k, mono in enumerate(shape.monomials(self.n)):
            term = self.u(i, k)
            for j, order in mono:
                term = term * ring.var(ring.names[ys[j]], order)
            total = total + term
        return total


def make_chow_ring(base: RingContext, shapes: Sequence[GenericShape]) -> ChowRing:
    y_names = tuple(base.names[i] for i in base.main_indices)
    if base.param_indices:
        raise DiffRingError("input ring must not carry parameters")
    n = len(y_names)
    blocks = []
    for i, shape in enumerate(shapes):
        size = len(shape.monomials(n))
        blocks.append(tuple(coeff_name(i, k, size) for k in range(size)))
    names = [u for b in blocks for u in b]
    clash = set(names) & set(y_names)
    if clash:
        raise DiffRingError(f"variable names clash with coefficient names: {sorted(clash)}")
    ring = RingContext(
        y_names + tuple(names),
        (MAIN,) * n + (PARAMETER,) * len(names),
        base.field,
    )
    return ChowRing(ring, y_names, tuple(blocks))


# ---------------------------------------------------------------------------
# result type


@dataclass(frozen=True)
class ChowForm:
    """Chow form (or generalized Chow form) with its metadata.

    ``orders`` holds the order in each u-block; for linear hyperplanes all
    entries equal ``h``.
    """

    poly: DiffPoly
    n: int
    d: int
    h: int
    g: int
    block_degrees: tuple
    cring: ChowRing
    shapes: tuple = ()
    orders: tuple = ()

    @property
    def nterms(self) -> int:
        return len(self.poly.terms)

    @property
    def lead_var(self) -> DerVar:
        return self.cring.ring.dv(self.cring.blocks[0][0], self.orders[0] if self.orders else self.h)

    def to_json(self) -> dict:
        return {
            "poly": str(self.poly),
            "n": self.n,
            "d": self.d,
            "h": self.h,
            "g": self.g,
            "block_degrees": list(self.block_degrees),
            "block_orders": list(self.orders),
            "nterms": self.nterms,
            "variables": list(self.cring.y_names),
            "blocks": [list(b) for b in self.cring.blocks],
            "shapes": [[s.s, s.m] for s in self.shapes],
            "field": self.cring.ring.field.kind,
        }


def normalize(F: DiffPoly) -> DiffPoly:
    """Integer-primitive with positive coefficient on the canonically first term."""
    return F.primitive()


def _block_degree(F: DiffPoly, block_vars) -> int | None:
    bv = set(block_vars)
    degs = {sum(e for v, e in m if v.var in bv) for m in F.terms}
    return degs.pop() if len(degs) == 1 else None


def _block_order(F: DiffPoly, block_vars) -> int:
    orders = [F.order(v) for v in block_vars]
    present = [o for o in orders if isinstance(o, int)]
    return max(present) if present else -1


def _finish(F: DiffPoly, cring: ChowRing, shapes, n: int, d: int, h: int) -> ChowForm:
    F = normalize(F)
    orders = tuple(_block_order(F, cring.block_vars(i)) for i in range(len(cring.blocks)))
    lead = cring.ring.dv(cring.blocks[0][0], orders[0])
    degrees = tuple(_block_degree(F, cring.block_vars(i)) for i in range(len(cring.blocks)))
    return ChowForm(F, n, d, h, F.degree(lead), degrees, cring, tuple(shapes), orders)


# ---------------------------------------------------------------------------
# hypersurfaces


def _det(M):
    """Laplace expansion; fine for the small matrices used here."""
    n = len(M)
    if n == 1:
        return M[0][0]
    total = None
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        term = M[0][j] * _det(minor)
        total = term if total is None else (total + term if j % 2 == 0 else total - term)
    return total


def chow_hypersurface(p: DiffPoly) -> ChowForm:
    """Chow form of V(p) for irreducible ``p`` via the determinant formula.

    With D the determinant of the hyperplane coefficients and D_j obtained by
    replacing column j with the negated constant terms, F = D^m p(D_1/D, ...).
    For n = 1 this is y -> -u00/u01.
    """
    base = p.ring
    if p.is_constant():
        raise DiffRingError("constant polynomial has no Chow form")
    n = len(base.main_indices)
    cring = make_chow_ring(base, [LINEAR] * n)
    ring = cring.ring
    pp = p.to_ring(ring)
    M = [[cring.u(i, j) for j in range(1, n + 1)] for i in range(n)]
    D = _det(M)
    Ds = []
    for j in range(n):
        Mj = [row[:j] + [-cring.u(i, 0)] + row[j + 1:] for i, row in enumerate(M)]
        Ds.append(_det(Mj))
    h = pp.total_order()
    # y_j^{(k)} = N_{j,k} / D^{k+1}
    dD = D.differentiate()
    numer = {}
    for j, name in enumerate(cring.y_names):
        N = Ds[j]
        var = ring.index(name)
        for k in range(h + 1):
            numer[DerVar(var, k)] = N
            N = N.differentiate() * D - (k + 1) * N * dD
    weight = max(sum(e * (v.order + 1) for v, e in m) for m in pp.terms)
    Dpow = [ring.one]
    for _ in range(weight):
        Dpow.append(Dpow[-1] * D)
    F = ring.zero
    for m, c in pp.terms.items():
        term = ring.const(c)
        w = 0
        for v, e in m:
            term = term * numer[v] ** e
            w += e * (v.order + 1)
        F = F + term * Dpow[weight - w]
    while divides(D, F):
        F = exact_div(F, D)
    return _finish(F, cring, [LINEAR] * n, n, n - 1, h)


# ---------------------------------------------------------------------------
# general elimination pipeline


def _lift_chain(A: DiffChain | None, cring: ChowRing) -> list:
    if A is None:
        return []
    return [p.to_ring(cring.ring) for p in A.elements]


def _defining_substitution(cring: ChowRing, shapes, i: int, order: int) -> dict:
    """u_{i0}^{(k)} -> -delta^k(P_i - u_{i0}) for k <= order."""
    P = cring.generic_poly(i, shapes[i]) - cring.u(i, 0)
    out = {}
    var = cring.ring.index(cring.blocks[i][0])
    for k in range(order + 1):
        out[DerVar(var, k)] = -P
        P = P.differentiate()
    return out


def defining_identity(F: DiffPoly, cring: ChowRing, shapes, A: DiffChain | None) -> DiffPoly:
    """Ritt remainder of F(u; zeta_0, ..., zeta_d) modulo A (zero when F is valid)."""
    assign = {}
    for i in range(len(cring.blocks)):
        order = F.order(cring.blocks[i][0])
        if isinstance(order, int):
            assign.update(_defining_substitution(cring, shapes, i, order))
    G = F.substitute(assign)
    if A is None:
        return G
    r = Ranking.orderly(cring.ring)
    chain = DiffChain(tuple(_lift_chain(A, cring)), r)
    return ritt_reduce(G, chain).remainder


def _intersection_chain(A: DiffChain | None, cring: ChowRing, shapes, deadline) -> DiffChain | None:
    """Orderly charset of [A, P_1, ..., P_d] in the big ring."""
    r = Ranking.orderly(cring.ring)
    polys = _lift_chain(A, cring) + [cring.generic_poly(i, shapes[i]) for i in range(1, len(shapes))]
    if not polys:
        return None
    try:
        return charset(polys, r, deadline)
    except UnitIdeal as exc:
        raise ChowError("the hyperplane sections generate the unit ideal") from exc


def _system(C: DiffChain | None, cring: ChowRing, shape0: GenericShape, order: int):
    polys = []
    if C is not None:
        # P0^(order) reaches y-derivatives of order order + s
        for p, dec in zip(C.elements, C.decomps):
            bound = order + shape0.s - dec.leader.order
            q = p
            polys.append(q)
            for _ in range(max(bound, 0)):
                q = q.differentiate()
                polys.append(q)
    P0 = cring.generic_poly(0, shape0)
    for _ in range(order + 1):
        polys.append(P0)
        P0 = P0.differentiate()
    ring = cring.ring
    elim = {v for p in polys for v in p.dervars() if ring.is_main(v.var)}
    return make_system(ring, polys, elim)


def _saturator(C: DiffChain | None, cring: ChowRing, extra_nonzero: Sequence[DiffPoly]):
    h = cring.ring.one
    if C is not None:
        for ini, sep in zip(C.initials, C.separants):
            h = h * ini
            if not sep.is_constant():
                h = h * sep
    for q in extra_nonzero:
        h = h * q
    return h


def _select(candidates, cring, shapes, A, lead: DerVar):
    """Strip content and repeated factors; keep what passes the defining identity."""
    F = candidates[0]
    for c in candidates[1:]:
        F = poly_gcd(F, c)
    if F.degree(lead) <= 0:
        raise ChowError("eliminant does not involve the leading coefficient variable")
    F = content_primitive(F, lead)[1]
    F = squarefree_part(F, lead)
    if defining_identity(F, cring, shapes, A):
        # several factors may involve the leading variable; try each gcd split
        for c in candidates:
            c = squarefree_part(content_primitive(c, lead)[1], lead)
            if c.degree(lead) > 0 and not defining_identity(c, cring, shapes, A):
                return c
        raise ChowError("no eliminant factor satisfies the defining identity")
    return F


def generalized_chow_resultant(A: DiffChain | None, shapes: Sequence[GenericShape], n: int | None = None,
                               method: str = "auto", deadline: Deadline = NO_DEADLINE,
                               base: RingContext | None = None, trace=None) -> ChowForm:
    """Generalized Chow form of sat(A) (or the resultant when ``A`` is None).

    The intersection with the generic polynomials P_1..P_d is presented by an
    orderly characteristic set C of dimension zero and order h_0; C is
    prolonged to order h_0, saturated by its initials and separants together
    with the non-constant coefficients of P_0, joined with P_0, ..., P_0^{(h_0)},
    and the frozen Y-derivatives are eliminated.
    """
    shapes = [s if isinstance(s, GenericShape) else GenericShape(*s) for s in shapes]
    if A is not None:
        base = A.ring
    elif base is None:
        if n is None:
            raise DiffRingError("n is required for the zero ideal")
        base = RingContext.make([f"y{j}" for j in range(1, n + 1)] if n > 1 else ["y"])
    n = len(base.main_indices)
    if A is not None:
        info = dim_order(A)
        d, h = info.dimension, info.order
        if A.ranking.kind != "orderly":
            raise DiffRingError("the chain must be an orderly characteristic set")
    else:
        d, h = n, 0
    if len(shapes) != d + 1:
        raise DiffRingError(f"need d + 1 = {d + 1} generic polynomials, got {len(shapes)}")
    if A is not None and d >= n:
        raise DiffRingError("d = n Chow forms are not supported")
    cring = make_chow_ring(base, shapes)
    s_total = sum(sh.s for sh in shapes)
    h0 = h + s_total - shapes[0].s
    C = _intersection_chain(A, cring, shapes, deadline)
    if C is not None:
        info = dim_order(C)
        if info.dimension != 0:
            raise ChowError(f"intersection has dimension {info.dimension}, expected 0")
        if info.order != h0:
            raise ChowError(f"intersection has order {info.order}, expected {h0}")
    system = _system(C, cring, shapes[0], h0)
    lead = cring.ring.dv(cring.blocks[0][0], h0)
    if method == "auto":
        method = "cascade" if (A is None and len(system.polynomials) == len(system.elim_vars) + 1) else "groebner"
    if method == "cascade":
        F = elim_cascade(list(system.polynomials), list(system.elim_vars))
        candidates = [F]
    elif method == "groebner":
        nonconst = [cring.u(0, k) for k in range(1, len(cring.blocks[0]))]
        sat = _saturator(C, cring, nonconst[:n] if shapes[0] == LINEAR else [])
        G = groebner_eliminate(system, saturate_by=sat, deadline=deadline, trace=trace)
        if G.is_unit():
            raise ChowError("elimination returned the unit ideal")
        candidates = [g for g in G.generators if g.degree(lead) > 0] or list(G.generators)
        if not candidates:
            raise ChowError("elimination ideal is zero; prolongation insufficient")
    else:
        raise DiffRingError(f"unknown method {method!r}")
    F = _select(candidates, cring, shapes, A, lead)
    return _finish(F, cring, shapes, n, d, h)


def chow_form(A: DiffChain, d: int | None = None, deadline: Deadline = NO_DEADLINE,
              method: str = "auto", trace=None) -> ChowForm:
    """Differential Chow form of sat(A) for an orderly characteristic set A.

    ``method="auto"`` uses the determinant formula for a single polynomial
    of codimension one and elimination otherwise.
    """
    info = dim_order(A)
    if d is not None and d != info.dimension:
        raise DiffRingError(f"chain has dimension {info.dimension}, not {d}")
    if A.ranking.kind != "orderly":
        raise DiffRingError("the chain must be an orderly characteristic set")
    n = len(A.ring.main_indices)
    if method == "auto":
        method = "formula" if len(A) == 1 and info.dimension == n - 1 else "groebner"
    if method == "formula":
        if len(A) != 1 or info.dimension != n - 1:
            raise DiffRingError("the determinant formula needs a single polynomial of codimension one")
        return chow_hypersurface(A.elements[0])
    return generalized_chow_resultant(A, [LINEAR] * (info.dimension + 1), method=method,
                                      deadline=deadline, trace=trace)


def chow_of_polys(polys: Sequence[DiffPoly], deadline: Deadline = NO_DEADLINE, method: str = "auto",
                  trace=None) -> ChowForm:
    """Chow form of the prime ideal whose orderly characteristic set ``polys`` generate."""
    A = charset(polys, Ranking.orderly(polys[0].ring), deadline)
    return chow_form(A, deadline=deadline, method=method, trace=trace)


def as_chow_form(F: DiffPoly, A: DiffChain | None, shapes: Sequence | None = None,
                 n: int | None = None) -> ChowForm:
    """Attach metadata to a given eliminant of sat(A) (or of the zero ideal).

    ``F`` may live in any ring whose variable names match the coefficient
    ring built from ``A`` and ``shapes``.
    """
    if A is not None:
        base = A.ring
        info = dim_order(A)
        d, h = info.dimension, info.order
    else:
        if n is None:
            raise DiffRingError("n is required for the zero ideal")
        base = RingContext.make([f"y{j}" for j in range(1, n + 1)] if n > 1 else ["y"])
        d, h = n, 0
    if shapes is None:
        shapes = [LINEAR] * (d + 1)
    shapes = [s if isinstance(s, GenericShape) else GenericShape(*s) for s in shapes]
    if len(shapes) != d + 1:
        raise DiffRingError(f"need d + 1 = {d + 1} shapes, got {len(shapes)}")
    cring = make_chow_ring(base, shapes)
    G = F.to_ring(cring.ring) if F.ring != cring.ring else F
    return _finish(G, cring, shapes, len(base.main_indices), d, h)


def differential_resultant(n: int, shapes: Sequence, method: str = "auto",
                           deadline: Deadline = NO_DEADLINE, trace=None) -> ChowForm:
    return generalized_chow_resultant(None, shapes, n=n, method=method, deadline=deadline, trace=trace)


# ---------------------------------------------------------------------------
# matrix representation for n = 1, orders (0, 1), degrees (2, 2)


@dataclass
class MatrixResultant:
    matrix: list
    rows: list
    columns: list
    determinant: DiffPoly
    quotient: DiffPoly | None = None
    resultant: DiffPoly | None = None

    @property
    def divisible(self) -> bool:
        return self.quotient is not None


def resultant_matrix_1var(R: DiffPoly | None = None) -> MatrixResultant:
    """14x14 matrix whose determinant is a multiple of the resultant.

    Rows are monomial multiples of P_0, P_0' and P_1; columns are
    y^a (y')^b with a <= 4, b < 4, a + b <= 4.
    """
    base = RingContext.make(["y"])
    shapes = [GenericShape(0, 2), GenericShape(1, 2)]
    cring = make_chow_ring(base, shapes)
    ring = cring.ring
    y, y1 = ring.var("y"), ring.var("y", 1)
    P0 = cring.generic_poly(0, shapes[0])
    P0d = P0.differentiate()
    P1 = cring.generic_poly(1, shapes[1])
    one = ring.one
    rows = [
        ("P0", one * P0), ("y'*P0", y1 * P0), ("y^2*P0", y**2 * P0), ("y*y'*P0", y * y1 * P0), ("y'^2*P0", y1**2 * P0),
        ("P0'", P0d), ("y*P0'", y * P0d), ("y'*P0'", y1 * P0d), ("y*y'*P0'", y * y1 * P0d), ("y'^2*P0'", y1**2 * P0d),
        ("P1", P1), ("y*P1", y * P1), ("y'*P1", y1 * P1), ("y*y'*P1", y * y1 * P1),
    ]
    columns = [(a, b) for a in range(5) for b in range(4) if a + b <= 4]
    dy, dy1 = ring.dv("y"), ring.dv("y", 1)
    uvars = sorted({v for _, p in rows for v in p.dervars() if v.var != dy.var}, key=lambda v: (v.var, v.order))
    conv = Frozen(ring, uvars)
    from sympy.polys.domains import ZZ
    from sympy.polys.rings import PolyRing
    from sympy.polys.orderings import lex
    zring = PolyRing([str(g) for g in conv.pring.gens], ZZ, lex)
    M = []
    col_index = {c: i for i, c in enumerate(columns)}
    for _, p in rows:
        row = [ring.zero] * len(columns)
        for m, c in p.terms.items():
            md = dict(m)
            a, b = md.pop(dy, 0), md.pop(dy1, 0)
            key = col_index.get((a, b))
            if key is None:
                raise ChowError(f"row monomial y^{a} y'^{b} outside the column set")
            row[key] = row[key] + DiffPoly(ring, {tuple(sorted(md.items())): c})
        M.append(row)
    zM = [[zring.from_dict(dict(conv.to_poly(e).terms())) for e in row] for row in M]
    det = bareiss_det(zM, zring.zero, zring.one)
    det_poly = conv.from_poly(conv.pring.from_dict(dict(det.terms())))
    out = MatrixResultant(M, [name for name, _ in rows], columns, det_poly)
    if R is not None:
        Rr = R.to_ring(ring)
        try:
            out.quotient = exact_div(det_poly, Rr)
        except ArithmeticError:
            out.quotient = None
        out.resultant = Rr
    return out


# ---------------------------------------------------------------------------
# evaluation


def dres_evaluate(C: ChowForm, assignment: Mapping[str, object]):
    """Evaluate R and S_R = dR/du00^{(h_0)} at concrete coefficient values.

    ``assignment`` maps every u-variable name to a base-field element or a
    DiffPoly of the Chow ring; derivatives of the values are taken with the
    base field's derivation.
    """
    ring = C.cring.ring
    F = C.poly
    needed = {ring.names[v.var] for v in F.dervars()}
    missing = sorted(needed - set(assignment))
    if missing:
        raise DiffRingError(f"assignment misses {missing}")
    subs = {}
    for name, val in assignment.items():
        idx = ring.index(name)
        order = F.order(name)
        if not isinstance(order, int):
            continue
        q = val if isinstance(val, DiffPoly) else ring.const(val)
        for k in range(order + 1):
            subs[DerVar(idx, k)] = q
            q = q.differentiate()
    lead = C.lead_var
    value = F.substitute(subs)
    sep = F.diff(lead).substitute(subs)
    if value.is_constant() and sep.is_constant():
        return value.constant_value(), sep.constant_value()
    return value, sep
