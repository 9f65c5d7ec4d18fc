"""Differential Chow forms, generalized Chow forms and differential resultants."""

from .algelim import Deadline, ResourceLimit
from .chow import (
    ChowError,
    ChowForm,
    GenericShape,
    as_chow_form,
    chow_form,
    chow_hypersurface,
    chow_of_polys,
    differential_resultant,
    generalized_chow_resultant,
)
from .diffring import MAIN, PARAMETER, DerVar, DiffPoly, DiffRingError, ParseError, Q, QT, RingContext
from .ranking import Ranking, parse_ranking
from .reduction import DiffChain, UnitIdeal, charset, dim_order, ritt_reduce
from .verify import generic_point_check, numeric_fiber_check, verify_chow_invariants

__version__ = "0.1.0"

__all__ = [
    "ChowError",
    "ChowForm",
    "Deadline",
    "DerVar",
    "DiffChain",
    "DiffPoly",
    "DiffRingError",
    "GenericShape",
    "MAIN",
    "PARAMETER",
    "ParseError",
    "Q",
    "QT",
    "Ranking",
    "ResourceLimit",
    "RingContext",
    "UnitIdeal",
    "as_chow_form",
    "charset",
    "chow_form",
    "chow_hypersurface",
    "chow_of_polys",
    "differential_resultant",
    "dim_order",
    "generalized_chow_resultant",
    "generic_point_check",
    "numeric_fiber_check",
    "parse_ranking",
    "ritt_reduce",
    "verify_chow_invariants",
]
