"""Independent checks for computed Chow forms and intersection laws."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Mapping, Sequence

import mpmath

from .chow import (
    LINEAR,
    ChowForm,
    ChowRing,
    GenericShape,
    defining_identity,
    make_chow_ring,
    normalize,
)
from .diffring import MAIN, PARAMETER, DerVar, DiffPoly, DiffRingError, RingContext, field_of
from .ranking import Ranking
from .reduction import DiffChain, UnitIdeal, charset, dim_order, ritt_reduce


class VerificationError(AssertionError):
    """Two independent routes disagreed (an internal bug, not a failed check)."""


# ---------------------------------------------------------------------------
# reports


@dataclass
class CheckResult:
    status: str  # "pass", "fail" or "skipped"
    witness: object = None

    def to_json(self) -> dict:
        out = {"status": self.status}
        if self.witness is not None:
            out["witness"] = str(self.witness)
        return out


@dataclass
class VerificationReport:
    checks: dict = field(default_factory=dict)

    def add(self, name: str, ok: bool | None, witness=None):
        status = "skipped" if ok is None else ("pass" if ok else "fail")
        self.checks[name] = CheckResult(status, witness)

    @property
    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.checks.values())

    def failed(self) -> list:
        return [k for k, c in self.checks.items() if c.status == "fail"]

    def to_json(self) -> dict:
        return {"passed": self.passed, "checks": {k: v.to_json() for k, v in self.checks.items()}}


# ---------------------------------------------------------------------------
# delta-homogeneity


@dataclass(frozen=True)
class Homogeneity:
    degree: int | None
    scaling_ok: bool
    euler_ok: bool


def _block_indices(F: DiffPoly, block) -> list:
    ring = F.ring
    return [ring.index(v) if isinstance(v, str) else v for v in block]


def _scaling_route(F: DiffPoly, block: list, m: int) -> bool:
    ring = F.ring
    name = "lam_"
    while name in ring:
        name += "_"
    big = ring.extend([name])
    G = F.to_ring(big)
    top = max((v.order for v in G.dervars() if v.var in block), default=0)
    lam_d = [big.var(name, i) for i in range(top + 1)]
    assign = {}
    for v in G.dervars():
        if v.var in block:
            k = v.order
            assign[v] = sum((comb(k, i) * lam_d[i] * big.var(big.names[v.var], k - i) for i in range(k + 1)), big.zero)
    return G.substitute(assign) == big.var(name) ** m * G


def _euler_route(F: DiffPoly, block: list, m: int) -> bool:
    ring = F.ring
    orders = [F.order(v) for v in block]
    top = max((o for o in orders if isinstance(o, int)), default=0)
    for r in range(top + 1):
        total = ring.zero
        for v in block:
            ov = F.order(v)
            if not isinstance(ov, int):
                continue
            for k in range(ov - r + 1):
                dv = DerVar(v, k + r)
                part = F.diff(dv)
                if part:
                    total = total + comb(k + r, r) * ring.var(ring.names[v], k) * part
        target = m * F if r == 0 else ring.zero
        if total != target:
            return False
    return True


def check_delta_homogeneous(F: DiffPoly, block) -> Homogeneity:
    """δ-homogeneity of F in the block variables, by two independent routes."""
    block = _block_indices(F, block)
    if not block:
        raise DiffRingError("empty block")
    if not F:
        raise DiffRingError("zero polynomial")
    bset = set(block)
    degs = {sum(e for v, e in mono if v.var in bset) for mono in F.terms}
    m = max(degs)
    scaling = _scaling_route(F, block, m)
    euler = _euler_route(F, block, m)
    if scaling != euler:
        raise VerificationError("λ-scaling and Euler routes disagree")
    return Homogeneity(m if scaling else None, scaling, euler)


# ---------------------------------------------------------------------------
# structural invariants


def _swap_blocks(F: DiffPoly, cring: ChowRing, a: int, b: int) -> DiffPoly:
    mapping = {}
    for x, y in zip(cring.block_vars(a), cring.block_vars(b)):
        mapping[x], mapping[y] = y, x
    return F.rename(mapping)


def expected_orders(C: ChowForm) -> tuple:
    if not C.shapes or all(s == LINEAR for s in C.shapes):
        return tuple([C.h] * (C.d + 1))
    s = sum(sh.s for sh in C.shapes)
    return tuple(C.h + s - sh.s for sh in C.shapes)


def verify_chow_invariants(C: ChowForm, A: DiffChain | None = None, zero_ideal: bool = False) -> VerificationReport:
    """Order law, presence of u_{i0}, block-swap symmetry, g, homogeneity and
    (when the ideal is known) the defining identity."""
    rep = VerificationReport()
    F, cring, ring = C.poly, C.cring, C.cring.ring
    linear = not C.shapes or all(s == LINEAR for s in C.shapes)
    exp = expected_orders(C)
    bad = []
    for i in range(len(cring.blocks)):
        for v in cring.block_vars(i):
            o = F.order(v)
            if not isinstance(o, int):
                continue
            if linear and o != exp[i]:
                bad.append(f"{ring.names[v]}:{o}")
        o0 = F.order(cring.blocks[i][0])
        if o0 != exp[i]:
            bad.append(f"{cring.blocks[i][0]}:{o0}")
    rep.add("order_law", not bad, ", ".join(bad) or None)
    missing = [cring.blocks[i][0] for i in range(len(cring.blocks)) if not isinstance(F.order(cring.blocks[i][0]), int)]
    rep.add("constant_coefficients_present", not missing, ", ".join(missing) or None)
    if len(cring.blocks) < 2:
        rep.add("block_swap", None, "single block")
    elif len(set(C.shapes)) > 1:
        rep.add("block_swap", None, "blocks have different shapes")
    else:
        bad = []
        for a in range(len(cring.blocks)):
            for b in range(a + 1, len(cring.blocks)):
                G = _swap_blocks(F, cring, a, b)
                if G != F and G != -F:
                    bad.append(f"{a}<->{b}")
        rep.add("block_swap", not bad, ", ".join(bad) or None)
    lead = C.lead_var
    rep.add("leading_degree", F.degree(lead) == C.g, f"deg={F.degree(lead)} g={C.g}")
    degrees = []
    ok = True
    for i in range(len(cring.blocks)):
        hres = check_delta_homogeneous(F, cring.block_vars(i))
        degrees.append(hres.degree)
        ok = ok and hres.degree is not None
    rep.add("delta_homogeneous", ok, degrees)
    if linear:
        rep.add("equal_block_degrees", ok and len(set(degrees)) == 1, degrees)
    else:
        rep.add("equal_block_degrees", None, f"generalized shapes: {degrees}")
    if A is not None or zero_ideal:
        rem = defining_identity(F, cring, C.shapes or [LINEAR] * (C.d + 1), A)
        rep.add("defining_identity", not rem, None if not rem else f"{len(rem.terms)}-term remainder")
    else:
        rep.add("defining_identity", None, "no ideal supplied")
    return rep


# ---------------------------------------------------------------------------
# recovering the generic point


def _quotient_derivatives(N: DiffPoly, S: DiffPoly, k_max: int) -> list:
    """Numerators N_k with delta^k(N/S) = N_k / S^{k+1}."""
    out = [N]
    dS = S.differentiate()
    for k in range(k_max):
        N = N.differentiate() * S - (k + 1) * N * dS
        out.append(N)
    return out


def _u_main_ring(cring: ChowRing) -> RingContext:
    kinds = {name: MAIN for b in cring.blocks for name in b}
    kinds.update({y: PARAMETER for y in cring.y_names})
    return cring.ring.with_kinds(kinds)


def generic_point_check(C: ChowForm, A: DiffChain) -> VerificationReport:
    """Substitute y_rho^{(k)} -> delta^k(dF/du0rho^{(h)} / S_F) into A and reduce modulo F."""
    rep = VerificationReport()
    cring = C.cring
    uring = _u_main_ring(cring)
    F = C.poly.to_ring(uring)
    h = C.orders[0] if C.orders else C.h
    lead = uring.dv(cring.blocks[0][0], h)
    S = F.diff(lead)
    others = [n for b in cring.blocks for n in b if n != cring.blocks[0][0]]
    r = Ranking.block(uring, [others, [cring.blocks[0][0]]])
    chain = DiffChain((F,), r)
    if chain.leaders[0] != lead:
        rep.add("leader", False, uring.dervar_name(chain.leaders[0]))
        return rep
    polys = [p.to_ring(uring) for p in A.elements]
    kmax = max((v.order for p in polys for v in p.dervars()), default=0)
    numer = {}
    for rho, yname in enumerate(cring.y_names, start=1):
        dF = F.diff(uring.dv(cring.blocks[0][rho], h))
        for k, N in enumerate(_quotient_derivatives(dF, S, kmax)):
            numer[uring.dv(yname, k)] = N
    Spow = [uring.one]
    for i, p in enumerate(polys):
        weight = max(sum(e * (v.order + 1) for v, e in m if v in numer) for m in p.terms)
        while len(Spow) <= weight:
            Spow.append(Spow[-1] * S)
        total = uring.zero
        for m, c in p.terms.items():
            term = uring.const(c)
            w = 0
            for v, e in m:
                if v in numer:
                    term = term * numer[v] ** e
                    w += e * (v.order + 1)
                else:
                    term = term * uring.var(uring.names[v.var], v.order) ** e
            total = total + term * Spow[weight - w]
        rem = ritt_reduce(total, chain).remainder
        rep.add(f"generator_{i}", not rem, None if not rem else f"{len(rem.terms)}-term remainder")
    return rep


# ---------------------------------------------------------------------------
# generic intersections


UNIT = "unit"


def generic_intersection(polys: Sequence[DiffPoly], ring: RingContext, shapes: Sequence[GenericShape],
                         linear_only: bool = True):
    """(dim, order) of [polys, P_1, ..., P_r] with generic P_i of the given shapes.

    Returns :data:`UNIT` when the result is the unit ideal.
    """
    base_names = tuple(ring.names[i] for i in ring.main_indices)
    base = RingContext.make(base_names, field=ring.field)
    if linear_only:
        shapes = [GenericShape(s.s, 1) for s in shapes]
    cring = make_chow_ring(base, [GenericShape(0, 1)] + list(shapes))
    big = cring.ring
    work = [p.to_ring(big) for p in polys]
    work += [cring.generic_poly(i + 1, s) for i, s in enumerate(shapes)]
    r = Ranking.orderly(big)
    if not work:
        return (len(base_names), 0)
    try:
        C = charset(work, r)
    except UnitIdeal:
        return UNIT
    info = dim_order(C)
    return (info.dimension, info.order)


def _specialized_generic_poly(ring: RingContext, shape: GenericShape, rng: random.Random) -> DiffPoly:
    """Generic polynomial with coefficients drawn from Q[t] instead of symbols."""
    ys = [ring.names[i] for i in ring.main_indices]
    total = ring.zero
    for mono in shape.monomials(len(ys)):
        a, b, c = rng.randint(1, 5), rng.randint(-5, 5), rng.randint(-5, 5)
        term = ring.parse(f"{a}*t^2 + ({b})*t + ({c})")
        for j, order in mono:
            term = term * ring.var(ys[j], order)
        total = total + term
    return total


def generic_intersection_check(A: DiffChain, s: int, linear_only: bool = True, seed: int = 0):
    """Adjoin one generic polynomial of order ``s``; expect (d - 1, h + s).

    For d = 0 the expected answer is the unit ideal.  The symbolic route
    swells badly there, so the coefficients are specialized to random
    elements of Q[t], which stay differentially generic (constants do not:
    they admit constant solutions).
    """
    info = dim_order(A)
    if info.dimension == 0:
        ring = A.ring
        qt_ring = RingContext(ring.names, ring.kinds, field_of("Qt"))
        rng = random.Random(seed)
        shape = GenericShape(s, 1)
        work = [p.to_ring(qt_ring) for p in A.elements] + [_specialized_generic_poly(qt_ring, shape, rng)]
        try:
            C = charset(work, Ranking.orderly(qt_ring))
        except UnitIdeal:
            return UNIT, True
        got = dim_order(C)
        return (got.dimension, got.order), False
    got = generic_intersection(A.elements, A.ring, [GenericShape(s, 1)], linear_only)
    return got, got == (info.dimension - 1, info.order + s)


# ---------------------------------------------------------------------------
# numeric fiber check


def _mp(c):
    if isinstance(c, Fraction):
        return mpmath.mpf(c.numerator) / c.denominator
    if isinstance(c, int):
        return mpmath.mpf(c)
    raise DiffRingError("numeric checks need rational coefficients")


def _eval(p: DiffPoly, values: Mapping[DerVar, object]):
    total = mpmath.mpc(0)
    for m, c in p.terms.items():
        term = _mp(c)
        for v, e in m:
            term = term * values[v] ** e
        total += term
    return total


def _roots(coeffs: list) -> list:
    """Roots of sum coeffs[i] x^i via companion-matrix eigenvalues."""
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    deg = len(coeffs) - 1
    if deg < 1:
        return []
    lead = coeffs[-1]
    if deg == 1:
        return [-coeffs[0] / lead]
    M = mpmath.matrix(deg, deg)
    for i in range(1, deg):
        M[i, i - 1] = 1
    for i in range(deg):
        M[i, deg - 1] = -coeffs[i] / lead
    ev = mpmath.eig(M, left=False, right=False)
    return list(ev)


@dataclass
class FiberResult:
    max_residual: float
    samples: int
    roots_per_sample: list
    perturbed_min_residual: float | None = None


def numeric_fiber_check(C: ChowForm, A: DiffChain, samples: int = 5, seed: int = 0,
                        perturb: float | None = None, prec: int = 128, max_retries: int = 20) -> FiberResult:
    """Points recovered from the roots of F in u00^{(h)} satisfy A numerically.

    Coefficients u_{0j} (j >= 1), their derivatives, and u00, ..., u00^{(h-1)}
    are sampled as exact rationals; u00^{(h)} runs over the roots of F; the
    higher derivatives of u00 follow from delta^i F = S_F u00^{(h+i)} + T_i.
    """
    if C.d != 0:
        raise DiffRingError("numeric fiber check needs d = 0")
    cring = C.cring
    ring = cring.ring
    F = C.poly
    h = C.h
    lead = ring.dv(cring.blocks[0][0], h)
    u00 = ring.index(cring.blocks[0][0])
    polys = [p.to_ring(ring) for p in A.elements]
    kmax = max(p.total_order() for p in polys)
    top = h + kmax
    S = F.diff(lead)
    derivs = [F]
    for _ in range(kmax):
        derivs.append(derivs[-1].differentiate())
    numer = {}
    for rho, yname in enumerate(cring.y_names, start=1):
        dF = F.diff(ring.dv(cring.blocks[0][rho], h))
        for k, N in enumerate(_quotient_derivatives(dF, S, kmax)):
            numer[ring.dv(yname, k)] = N
    rng = random.Random(seed)
    worst = 0.0
    perturbed_best = None
    roots_log = []
    mp = mpmath.mp
    old = mp.prec
    mp.prec = prec
    try:
        done = 0
        retries = 0
        while done < samples:
            vals = {}
            for j, name in enumerate(cring.blocks[0]):
                idx = ring.index(name)
                upto = h - 1 if j == 0 else top
                for k in range(upto + 1):
                    q = Fraction(rng.randint(-9, 9), rng.randint(1, 5))
                    if q == 0:
                        q = Fraction(1, rng.randint(2, 7))
                    vals[DerVar(idx, k)] = mpmath.mpc(_mp(q))
            coeffs = F.coefficients(lead)
            cvals = [_eval(coeffs.get(e, ring.zero), vals) for e in range(max(coeffs) + 1)]
            roots = _roots(cvals)
            ok_sample = True
            local = []
            for gamma in roots:
                for shift in ([0] if perturb is None else [0, perturb]):
                    jet = dict(vals)
                    jet[lead] = gamma + shift
                    s_val = _eval(S, jet)
                    if abs(s_val) < mpmath.mpf(10) ** (-20):
                        ok_sample = False
                        break
                    for i in range(1, kmax + 1):
                        Di = derivs[i]
                        nxt = DerVar(u00, h + i)
                        rest = Di - Di.coeff(nxt, 1) * ring.var(cring.blocks[0][0], h + i)
                        jet[nxt] = -_eval(rest, jet) / _eval(Di.coeff(nxt, 1), jet)
                    point = {}
                    for v, N in numer.items():
                        point[v] = _eval(N, jet) / s_val ** (v.order + 1)
                    res = max(abs(_eval(p, point)) for p in polys)
                    if shift == 0:
                        local.append(float(res))
                    else:
                        perturbed_best = float(res) if perturbed_best is None else min(perturbed_best, float(res))
                if not ok_sample:
                    break
            if not ok_sample or not roots:
                retries += 1
                if retries > max_retries:
                    raise DiffRingError("separant vanished on every sample")
                continue
            roots_log.append([complex(g) for g in roots])
            worst = max([worst] + local)
            done += 1
    finally:
        mp.prec = old
    return FiberResult(worst, samples, roots_log, perturbed_best)


# ---------------------------------------------------------------------------
# linear transformations


def linear_transform_chowform(C: ChowForm, M: Sequence[Sequence]) -> ChowForm:
    """Chow form of the image of V under y -> M y, i.e. F(v_0 B, ..., v_d B)."""
    n = C.n
    if len(M) != n or any(len(row) != n for row in M):
        raise DiffRingError("matrix must be n x n")
    from sympy import Matrix
    if Matrix([[Fraction(x) for x in row] for row in M]).det() == 0:
        raise DiffRingError("singular matrix")
    cring = C.cring
    ring = cring.ring
    F = C.poly
    assign = {}
    for i, block in enumerate(cring.blocks):
        idx = [ring.index(nm) for nm in block]
        for v in F.dervars():
            if v.var not in idx[1:]:
                continue
            j = idx.index(v.var)  # 1..n
            expr = ring.zero
            for l in range(1, n + 1):
                c = Fraction(M[l - 1][j - 1])
                if c:
                    expr = expr + ring.var(block[l], v.order) * c
            assign[v] = expr
    G = normalize(F.substitute(assign))
    lead = C.lead_var
    degrees = []
    for i in range(len(cring.blocks)):
        degrees.append(check_delta_homogeneous(G, cring.block_vars(i)).degree)
    out = ChowForm(G, C.n, C.d, C.h, G.degree(lead), tuple(degrees), cring, C.shapes, C.orders)
    if out.g != C.g or tuple(degrees) != tuple(C.block_degrees):
        raise VerificationError("linear transformation changed g or the δ-degree")
    return out
