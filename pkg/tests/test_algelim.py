import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy.polys.domains import QQ
from sympy.polys.groebnertools import groebner as sympy_groebner
from sympy.polys.orderings import grevlex, lex
from sympy.polys.rings import ring as sympy_ring

from delta_chow.algelim import (
    Deadline,
    ResourceLimit,
    bareiss_det,
    buchberger,
    content_primitive,
    divides,
    elim_cascade,
    exact_div,
    groebner_basis,
    groebner_eliminate,
    is_groebner,
    make_system,
    normal_form,
    poly_gcd,
    primitive_part,
    prolong,
    resultant,
    squarefree_part,
)
from delta_chow.diffring import DiffRingError, RingContext
from conftest import F1_TEXT
from polygen import random_alg_poly

XYZ = RingContext.make(["x", "y", "z"])
seeds = st.integers(min_value=0, max_value=2**32 - 1)


def dv(name, k=0, ring=XYZ):
    return ring.dv(name, k)


def test_prolong_counts():
    R = RingContext.make(["y1", "y2"])
    sys = prolong([R.parse("y1' + 1"), R.parse("y2'")], [2, 2])
    assert len(sys.polynomials) == 6
    assert R.parse("y1'''") in sys.polynomials
    assert set(sys.elim_vars) == {R.dv("y1", k) for k in (1, 2, 3)} | {R.dv("y2", k) for k in (1, 2, 3)}
    assert sys.keep_vars == ()


def test_prolong_rejects_bad_bounds():
    R = RingContext.make(["y1"])
    with pytest.raises(DiffRingError):
        prolong([R.parse("y1'")], [1, 2])
    with pytest.raises(DiffRingError):
        prolong([R.parse("y1'")], [-1])


def test_eliminate_simple():
    R = RingContext.make(["y"], ["u", "v"])
    sys = make_system(R, [R.parse("y - 1"), R.parse("y*u - v")], {R.dv("y")})
    G = groebner_eliminate(sys)
    assert [str(g) for g in G.generators] == ["u - v"]


def test_discriminant_by_elimination():
    R = RingContext.make(["x"], ["a", "b", "c"])
    f = R.parse("a*x^2 + b*x + c")
    sys = make_system(R, [f, f.diff(R.dv("x"))], {R.dv("x")})
    G = groebner_eliminate(sys, saturate_by=R.parse("a"))
    assert len(G.generators) == 1
    assert G.generators[0].primitive() == R.parse("b^2 - 4*a*c").primitive()
    assert resultant(f, f.diff(R.dv("x")), R.dv("x")) == R.parse("-a*(b^2 - 4*a*c)")


def test_unit_ideal_flag():
    sys = make_system(XYZ, [XYZ.parse("x"), XYZ.parse("x - 1")], {dv("x")})
    assert groebner_eliminate(sys).is_unit()


def test_f1_by_saturated_elimination():
    R = RingContext.make(["y1"], ["u00", "u01"])
    f = R.parse("y1'^2 - 4*y1")
    L = R.parse("u00 + u01*y1")
    sys = prolong([f, L], [1, 1])
    G = groebner_eliminate(sys, saturate_by=R.parse("u01*y1'"))
    gens = [g for g in G.generators if g.dervars()]
    assert len(gens) == 1
    assert gens[0].primitive() == R.parse(F1_TEXT)


def test_gcd_content_primitive():
    R = RingContext.make(["x"], ["b", "u00", "u01"])
    assert poly_gcd(R.parse("x^2 - 1"), R.parse("x^2 - 2*x + 1")) == R.parse("x - 1")
    content, prim = content_primitive(R.parse("b^2*x + b^3"), R.dv("x"))
    assert content == R.parse("b^2") and prim == R.parse("x + b")
    F1 = R.parse(F1_TEXT)
    assert primitive_part(R.parse("u01") * F1, R.dv("u00", 1)) == F1
    assert content_primitive(R.parse("6*x + 4"), R.dv("x")) == (R.const(2), R.parse("3*x + 2"))


def test_division_helpers():
    R = RingContext.make(["x", "y"])
    p, q = R.parse("x^2 - y^2"), R.parse("x - y")
    assert exact_div(p, q) == R.parse("x + y")
    assert divides(q, p) and not divides(R.parse("x + 2*y"), p)
    with pytest.raises(ArithmeticError):
        exact_div(R.parse("x"), R.parse("y"))
    assert squarefree_part(R.parse("(x - 1)^3*(x + y)"), R.dv("x")) == R.parse("(x - 1)*(x + y)")


def test_bareiss_matches_expansion():
    Z, a, b, c, d = sympy_ring("a,b,c,d", QQ, lex)
    assert bareiss_det([[a, b], [c, d]], Z.zero, Z.one) == a * d - b * c
    assert bareiss_det([[Z.zero, a], [b, Z.zero]], Z.zero, Z.one) == -a * b
    assert bareiss_det([], Z.zero, Z.one) == Z.one


def test_deadline_and_basis_limits():
    dl = Deadline(0.0)
    sys = make_system(XYZ, [XYZ.parse("x^3 - y*z + 1"), XYZ.parse("y^3 - x*z"), XYZ.parse("z^3 - x*y - 1")], {dv("x")})
    with pytest.raises(ResourceLimit) as info:
        groebner_eliminate(sys, deadline=dl)
    assert info.value.kind == "deadline"
    with pytest.raises(ResourceLimit) as info:
        groebner_eliminate(sys, max_basis=3)
    assert info.value.kind == "basis_size"


def _random_pring_system(rng, pring, count):
    gens = pring.gens
    F = []
    for _ in range(count):
        f = pring.zero
        for _ in range(rng.randint(2, 3)):
            m = pring(rng.randint(-4, 4))
            for g in gens:
                m *= g ** rng.randint(0, 2)
            f += m
        F.append(f)
    return [f for f in F if f]


@settings(max_examples=120, deadline=None)
@given(seeds)
def test_buchberger_matches_independent_implementation(seed):
    rng = random.Random(seed)
    order = lex if seed % 2 else grevlex
    pring, *_ = sympy_ring("x,y,z", QQ, order)
    F = _random_pring_system(rng, pring, rng.randint(2, 3))
    if not F:
        return
    G = buchberger(F, pring)
    assert is_groebner(G)
    expect = sympy_groebner(F, pring, method="buchberger")
    assert sorted(G, key=str) == sorted((g.monic() for g in expect), key=str)
    for f in F:
        assert not f.rem(G)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_elimination_contains_resultants(seed):
    rng = random.Random(seed)
    nvars = 2 + seed % 2
    names = ["x", "y", "z"][:nvars]
    ps = [random_alg_poly(rng, XYZ, names) for _ in range(nvars)]
    ps = [p for p in ps if p.degree(dv("x")) > 0]
    if len(ps) < 2:
        return
    sys = make_system(XYZ, ps, {dv("x")})
    G = groebner_eliminate(sys)
    if G.is_unit():
        return
    keep = list(sys.keep_vars)
    full = groebner_basis(ps, list(sys.variables))
    for g in G.generators:
        assert dv("x") not in g.dervars()
        assert not normal_form(g, full, list(sys.variables))
    # every pairwise resultant in x lies in the elimination ideal
    for q in ps[1:]:
        res = resultant(ps[0], q, dv("x"))
        if res and keep:
            # the kept generators form a grevlex basis of the elimination ideal
            assert not normal_form(res, G.generators, keep, order=grevlex)
        elif res:
            assert not res


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_elimination_idempotent(seed):
    rng = random.Random(seed)
    ps = [random_alg_poly(rng, XYZ, ["x", "y", "z"]) for _ in range(2)]
    ps = [p for p in ps if p]
    if not ps:
        return
    sys = make_system(XYZ, ps, {dv("x")}, {dv("y"), dv("z")})
    G = groebner_eliminate(sys)
    if G.is_unit() or not G.generators:
        return
    again = groebner_eliminate(make_system(XYZ, list(G.generators), set(), {dv("y"), dv("z")}))
    canon = lambda gs: sorted(str(g.primitive()) for g in gs)  # noqa: E731
    assert canon(again.generators) == canon(G.generators)


def test_cascade_agrees_with_groebner_on_line_intersection():
    R = RingContext.make(["x", "y"], ["a", "b"])
    ps = [R.parse("x + y - a"), R.parse("x - y - b"), R.parse("x*y - 1")]
    out = elim_cascade(ps, [R.dv("x"), R.dv("y")])
    assert out == R.parse("a^2 - b^2 - 4").primitive()
    G = groebner_eliminate(make_system(R, ps, {R.dv("x"), R.dv("y")}))
    assert [g.primitive() for g in G.generators] == [out]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=5, max_size=5), st.lists(st.integers(0, 4), min_size=5, max_size=5),
       st.integers(1, 4))
def test_block_order_matches_product_order(a, b, k):
    from sympy.polys.orderings import ProductOrder
    from delta_chow.algelim import elimination_order
    ref = ProductOrder((grevlex, lambda m: m[:k]), (grevlex, lambda m: m[k:]))
    fast = elimination_order(k)
    a, b = tuple(a), tuple(b)
    assert (fast(a) < fast(b)) == (ref(a) < ref(b))
    assert (fast(a) == fast(b)) == (a == b)
