import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from delta_chow.algelim import groebner_basis, normal_form  # noqa: E402
from delta_chow.chow import GenericShape, chow_of_polys, differential_resultant  # noqa: E402
from delta_chow.diffring import DerVar, DiffPoly, RingContext  # noqa: E402
from delta_chow.quasivariety import build_template, cv1_generate, load_example_support  # noqa: E402
from delta_chow.ranking import Ranking  # noqa: E402
from delta_chow.reduction import charset  # noqa: E402

F1_TEXT = "u00'^2*u01^2 - 2*u00'*u00*u01'*u01 + u00^2*u01'^2 + 4*u00*u01^3"
ORDER2_F_TEXT = "u00''*u00*u01 - 2*u00'^2*u01 + 2*u00'*u00*u01' - u00^2*u01''"
ORDER2_G_TEXT = "u00''*u00*u01^2 - u00'^2*u01^2 - u00^2*u01''*u01 + u00^2*u01'^2"
PAIR_TEXT = (
    "u00''*u01'*u02 - u00''*u01*u02' - u00'*u01''*u02 + u00'*u01*u02'' + u00*u01''*u02' "
    "- u00*u01'*u02'' + u01''*u01*u02 - 2*u01'^2*u02 + 2*u01'*u01*u02' - u01^2*u02''"
)

# Known presentation of the shipped 16-term g = 1 example: off a1 = 0 every
# coefficient is +-a1 or +-a13.
KNOWN = [
    "a2 + a1", "a3 + a1", "a4 - a1", "a5 + a1", "a6 - a1", "a7 - a1", "a8 + a1",
    "a9 + a1", "a10 + a1", "a11 - a1", "a12 - a1", "a14 + a13", "a15 + a13", "a16 - a13",
]


def known_parametrization(ring):
    """Substitution a_k -> +-a1 / +-a13 (with derivatives) from KNOWN."""
    free = {ring.index("a1"), ring.index("a13")}
    assign = {}
    for text in KNOWN:
        p = ring.parse(text)
        (lead,) = [m for m in p.terms if m[0][0].var not in free]
        value = -(p - DiffPoly(ring, {lead: p.terms[lead]}))
        for k in range(3):
            assign[DerVar(lead[0][0].var, k)] = value
            value = value.differentiate()
    return assign


def known_relations_reduce(P):
    """KNOWN relations that do not lie in (generated relations) : a1^inf."""
    ring = P.template.ring
    ext = ring.extend(["z"])
    ideal = [r.to_ring(ext) for r in P.simplified()]
    ideal += [(ring.var(k) - v).to_ring(ext) for k, v in P.linear_solution.items()]
    ideal.append(ext.parse("z*a1 - 1"))
    vs = set()
    for r in ideal:
        vs |= r.dervars()
    for k in range(1, len(P.template.coeffs) + 1):
        vs |= {ext.dv(f"a{k}"), ext.dv(f"a{k}", 1)}
    order = [ext.dv("z")] + sorted((v for v in vs if ext.names[v.var] != "z"),
                                   key=lambda v: (v.order, int(ext.names[v.var][1:])), reverse=True)
    G = groebner_basis(ideal, order)
    return [t for t in KNOWN if normal_form(ext.parse(t), G, order)]


@pytest.fixture(scope="session")
def ring1():
    return RingContext.make(["y1"])


@pytest.fixture(scope="session")
def ring2():
    return RingContext.make(["y1", "y2"])


@pytest.fixture(scope="session")
def chain_f1(ring1):
    return charset([ring1.parse("y1'^2-4*y1")], Ranking.orderly(ring1))


@pytest.fixture(scope="session")
def chain_pair(ring2):
    return charset([ring2.parse("y1'+1"), ring2.parse("y2'")], Ranking.orderly(ring2))


@pytest.fixture(scope="session")
def chow_f1(ring1):
    return chow_of_polys([ring1.parse("y1'^2-4*y1")])


@pytest.fixture(scope="session")
def chow_pair(ring2):
    return chow_of_polys([ring2.parse("y1'+1"), ring2.parse("y2'")])


@pytest.fixture(scope="session")
def resultant_206():
    return differential_resultant(1, [GenericShape(0, 2), GenericShape(1, 2)])


@pytest.fixture(scope="session")
def qv_template():
    index, support = load_example_support()
    return build_template(index, support)


@pytest.fixture(scope="session")
def qv_presentation(qv_template):
    return cv1_generate(qv_template)
