import random
from fractions import Fraction

import pytest

from delta_chow.chow import chow_hypersurface
from delta_chow.diffring import DiffRingError, RingContext
from delta_chow.quasivariety import (
    ChowIndex,
    build_template,
    coefficient_vector,
    evaluate_relations,
)
from delta_chow.verify import check_delta_homogeneous
from conftest import known_parametrization, known_relations_reduce

R2 = RingContext.make(["y1", "y2"])


def test_template_shape(qv_template):
    T = qv_template
    assert T.index == ChowIndex(2, 1, 1, 1, 2)
    assert len(T.support) == 16 and T.coeffs[0] == "a1"


def test_stage_sizes_and_excluded(qv_presentation):
    P = qv_presentation
    assert len(P.relations) == 1435
    assert [str(e) for e in P.excluded] == ["a1", "a2"]
    assert len(P.simplified()) == 1429


def test_relations_vanish_on_known_family(qv_presentation):
    ring = qv_presentation.template.ring
    par = known_parametrization(ring)
    assert all(not r.substitute(par) for r in qv_presentation.relations)


def test_known_relations_follow_off_excluded_locus(qv_presentation):
    assert known_relations_reduce(qv_presentation) == []


@pytest.mark.parametrize("curve", ["y1' + 3*y2", "2*y1' - 5*y2", "y1' - y2", "y1'"])
def test_genuine_chow_forms_satisfy_relations(qv_template, qv_presentation, curve):
    C = chow_hypersurface(R2.parse(curve))
    vec = coefficient_vector(qv_template, C.poly)
    assert vec is not None
    rel, exc = evaluate_relations(qv_presentation, vec)
    assert all(v == 0 for v in rel)
    assert any(e != 0 for e in exc)


def test_perturbed_vectors_violate_relations(qv_template, qv_presentation):
    C = chow_hypersurface(R2.parse("y1' + 3*y2"))
    base = coefficient_vector(qv_template, C.poly)
    rng = random.Random(3)
    for _ in range(10):
        vec = dict(base)
        key = rng.choice(sorted(vec))
        vec[key] = vec[key] + rng.choice([-2, -1, 1, 2])
        rel, _ = evaluate_relations(qv_presentation, vec)
        assert any(v != 0 for v in rel)


def test_off_support_form_is_rejected(qv_template):
    C = chow_hypersurface(R2.parse("y1'*y2 - 3*y1*y2'"))
    assert coefficient_vector(qv_template, C.poly) is None


def test_zero_vector_lies_in_excluded_locus(qv_template, qv_presentation):
    vec = {name: 0 for name in qv_template.coeffs}
    rel, exc = evaluate_relations(qv_presentation, vec)
    assert all(e == 0 for e in exc)


def test_relations_are_delta_homogeneous(qv_template, qv_presentation):
    ring = qv_template.ring
    degrees = set()
    for r in qv_presentation.relations:
        used = {v.var for v in r.dervars()}
        names = [c for c in qv_template.coeffs if ring.index(c) in used]
        h = check_delta_homogeneous(r, names)
        assert h.degree is not None
        degrees.add(h.degree)
    assert min(degrees) == 1


def test_linear_solution_is_rational(qv_presentation):
    for name, expr in qv_presentation.linear_solution.items():
        assert all(isinstance(c, (int, Fraction)) for c in expr.terms.values())


def test_single_monomial_template():
    T = build_template(ChowIndex(1, 0, 1, 1, 1), ["u00'"])
    assert len(T.support) == 1


@pytest.mark.parametrize("index,support", [
    (ChowIndex(1, 0, 1, 1, 2), ["u00'^2"]),
    (ChowIndex(1, 0, 1, 2, 1), ["u00'"]),
    (ChowIndex(1, 0, 1, 1, 1), ["u00"]),
    (ChowIndex(1, 0, 1, 1, 1), ["u00'", "u00'"]),
    (ChowIndex(1, 0, 1, 1, 1), ["2*u00'"]),
    (ChowIndex(1, 0, 1, 1, 1), ["u00''"]),
    (ChowIndex(1, 0, 1, 1, 1), []),
])
def test_template_validation(index, support):
    with pytest.raises(DiffRingError):
        build_template(index, support)


def test_index_parsing():
    assert ChowIndex.parse("2,1,1,1,2") == ChowIndex(2, 1, 1, 1, 2)
    with pytest.raises(DiffRingError):
        ChowIndex.parse("1,2,3")
