import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delta_chow.diffring import DerVar, DiffRingError, RingContext
from delta_chow.ranking import Cmp, NoLeaderError, RankCmp, Ranking, compare_dervar, compare_rank, decompose, parse_ranking
from polygen import random_poly

R3 = RingContext.make(["y1", "y2", "y3"], ["u0"])
RANKINGS = {
    "orderly": Ranking.orderly(R3),
    "elim": parse_ranking("elim:y1<y2<y3", R3),
    "elim_partial": parse_ranking("elim:y3<y1", R3),
    "block": parse_ranking("block:[y2|y1,y3]", R3),
}
DERVARS = [DerVar(v, k) for v in R3.main_indices for k in range(5)]


def dv(name, k=0):
    return R3.dv(name, k)


def test_orderly_examples():
    r = RANKINGS["orderly"]
    assert compare_dervar(r, dv("y1", 2), dv("y2", 1)) == Cmp.GT
    assert compare_dervar(r, dv("y1", 1), dv("y2", 1)) == Cmp.LT


def test_elimination_example():
    r = parse_ranking("elim:y1<y2", RingContext.make(["y1", "y2"]))
    ring = r.ring
    assert r.compare(ring.dv("y2"), ring.dv("y1", 5)) == Cmp.GT


def test_orderly_tie_break_by_index_all_pairs():
    r = RANKINGS["orderly"]
    for a, b in itertools.product(DERVARS, repeat=2):
        expect = (a.order, a.var) > (b.order, b.var)
        assert (r.compare(a, b) == Cmp.GT) == expect


@pytest.mark.parametrize("name", sorted(RANKINGS))
def test_total_order_exhaustive(name):
    r = RANKINGS[name]
    for a, b in itertools.product(DERVARS, repeat=2):
        ab, ba = r.compare(a, b), r.compare(b, a)
        assert ab == -ba
        assert (ab == Cmp.EQ) == (a == b)
    for a, b, c in itertools.product(DERVARS, repeat=3):
        if r.compare(a, b) == Cmp.LT and r.compare(b, c) == Cmp.LT:
            assert r.compare(a, c) == Cmp.LT


@pytest.mark.parametrize("name", sorted(RANKINGS))
def test_ranking_axioms(name):
    r = RANKINGS[name]
    for a in DERVARS:
        assert r.compare(a.diff(), a) == Cmp.GT
    for a, b in itertools.product(DERVARS, repeat=2):
        if r.compare(a, b) == Cmp.GT:
            assert r.compare(a.diff(), b.diff()) == Cmp.GT


@pytest.mark.parametrize("name", sorted(RANKINGS))
def test_parameters_rank_below_main(name):
    r = RANKINGS[name]
    u = R3.dv("u0", 7)
    for a in DERVARS:
        assert r.compare(u, a) == Cmp.LT


def test_decompose_examples():
    ring = RingContext.make(["y1"], ["u00", "u01"])
    r = Ranking.orderly(ring)
    d = decompose(ring.parse("y1'^2 - 4*y1"), r)
    assert d.leader == ring.dv("y1", 1)
    assert d.initial == ring.one
    assert d.separant == ring.parse("2*y1'")
    assert d.rank_degree == 2
    d = decompose(ring.parse("u01*y1 + u00"), r)
    assert d.leader == ring.dv("y1")
    assert d.initial == ring.var("u01") == d.separant
    assert compare_rank(ring.parse("y1'^2 - 4*y1"), ring.parse("y1'"), r) == RankCmp.HIGHER
    assert compare_rank(ring.parse("y1'"), ring.parse("y1'^2"), r) == RankCmp.LOWER
    assert compare_rank(ring.parse("y1 + 1"), ring.parse("3*y1"), r) == RankCmp.SAME


def test_no_leader_in_parameter_field():
    ring = RingContext.make(["y1"], ["u00"])
    with pytest.raises(NoLeaderError):
        decompose(ring.parse("u00' + 1"), Ranking.orderly(ring))


@settings(max_examples=150, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1), st.sampled_from(sorted(RANKINGS)))
def test_separant_is_initial_of_derivative(seed, name):
    r = RANKINGS[name]
    rng = random.Random(seed)
    p = random_poly(rng, R3, nterms=4, max_order=3, max_deg=3)
    if r.leader(p) is None:
        return
    d = decompose(p, r)
    dp = decompose(p.differentiate(), r)
    assert dp.leader == d.leader.diff()
    assert dp.initial == d.separant
    assert dp.rank_degree == 1


def test_parse_ranking_grammar():
    ring = RingContext.make(["y1", "y2", "u00"])
    assert parse_ranking("orderly", ring).describe() == "orderly"
    assert parse_ranking("elim:y1<y2<u00", ring).describe() == "elim:y1<y2<u00"
    assert parse_ranking(" block:[u00|y1,y2] ", ring).describe() == "block:[u00|y1,y2]"
    for bad in ("lex", "elim:", "elim:y1<<y2", "block:[y1|y1]", "elim:y9", "block:y1"):
        with pytest.raises(DiffRingError):
            parse_ranking(bad, ring)


def test_ranking_rejects_parameters():
    with pytest.raises(DiffRingError):
        parse_ranking("elim:y1<u0", R3)
