"""Exact differential polynomials over Q and Q(t).

A :class:`DiffPoly` is a sparse mapping from monomials to nonzero
coefficients.  A monomial is a tuple of ``(DerVar, exponent)`` pairs sorted
by ``(var_index, order)``, so two equal polynomials always carry equal term
mappings regardless of how they were built.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Union

from sympy.polys.domains import ZZ
from sympy.polys.rings import ring as _sympy_ring

MAIN = "main"
PARAMETER = "parameter"


class DiffRingError(ValueError):
    """Raised on ring mismatches and malformed operations."""


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class _NegInf:
    """Order of a variable that does not occur. Compares below every int."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "-inf"

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("delta_chow.NEG_INF")

    def __lt__(self, other):
        return other is not self

    def __le__(self, other):
        return True

    def __gt__(self, other):
        return False

    def __ge__(self, other):
        return other is self


NEG_INF = _NegInf()


# ---------------------------------------------------------------------------
# base fields

_ZT, _T = _sympy_ring("t", ZZ)


def _zt_str(p) -> str:
    if not p:
        return "0"
    out = []
    for (e,), c in sorted(p.terms(), reverse=True):
        c = int(c)
        sign = "-" if c < 0 else "+"
        c = abs(c)
        if e == 0:
            body = str(c)
        else:
            mono = "t" if e == 1 else f"t^{e}"
            body = mono if c == 1 else f"{c}*{mono}"
        out.append((sign, body))
    text = ("-" if out[0][0] == "-" else "") + out[0][1]
    for sign, body in out[1:]:
        text += f" {sign} {body}"
    return text


class QtElement:
    """Element of Q(t) stored as a reduced fraction of integer polynomials.

    Numerator and denominator are coprime over Z[t] (integer content
    included) and the denominator has a positive leading coefficient.
    Only genuinely t-dependent values are QtElements; constants collapse to
    int/Fraction through :func:`qt`.
    """

    __slots__ = ("num", "den")

    def __init__(self, num, den):
        self.num = num
        self.den = den

    @staticmethod
    def _lift(x):
        if isinstance(x, QtElement):
            return x.num, x.den
        if isinstance(x, Fraction):
            return _ZT(x.numerator), _ZT(x.denominator)
        if isinstance(x, int):
            return _ZT(x), _ZT.one
        return NotImplemented

    def __add__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return qt(self.num * o[1] + o[0] * self.den, self.den * o[1])

    __radd__ = __add__

    def __neg__(self):
        return QtElement(-self.num, self.den)

    def __sub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return qt(self.num * o[1] - o[0] * self.den, self.den * o[1])

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return qt(self.num * o[0], self.den * o[1])

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        if not o[0]:
            raise ZeroDivisionError("division by zero in Q(t)")
        return qt(self.num * o[1], self.den * o[0])

    def __rtruediv__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return qt(o[0] * self.den, o[1] * self.num)

    def __pow__(self, e: int):
        if e < 0:
            return qt(self.den ** (-e), self.num ** (-e))
        return qt(self.num**e, self.den**e)

    def __eq__(self, other):
        if isinstance(other, QtElement):
            return self.num == other.num and self.den == other.den
        return False

    def __hash__(self):
        return hash((tuple(self.num.terms()), tuple(self.den.terms())))

    def __bool__(self):
        return True

    def derivative(self):
        n, d = self.num, self.den
        return qt(n.diff(_T) * d - n * d.diff(_T), d * d)

    def evaluate(self, value):
        """Evaluate at ``t = value`` (any numeric type supporting + and *)."""
        def ev(p):
            acc = 0
            for (e,), c in p.terms():
                acc = acc + int(c) * value**e
            return acc
        return ev(self.num) / ev(self.den)

    def __str__(self):
        if self.den == _ZT.one:
            return _zt_str(self.num)
        num = _zt_str(self.num)
        if len(self.num.terms()) > 1:
            num = f"({num})"
        return f"{num}/({_zt_str(self.den)})"

    __repr__ = __str__


def qt(num, den=None):
    """Normalize ``num/den`` (elements of Z[t]) into a Q(t) scalar."""
    if den is None:
        den = _ZT.one
    if not den:
        raise ZeroDivisionError("zero denominator in Q(t)")
    if not num:
        return 0
    g = num.gcd(den)
    if g != _ZT.one:
        num = num.exquo(g)
        den = den.exquo(g)
    if den.LC < 0:
        num, den = -num, -den
    if num.degree() <= 0 and den.degree() <= 0:
        return _scalar(Fraction(int(num.LC), int(den.LC)))
    return QtElement(num, den)


T_SYMBOL = QtElement(_T, _ZT.one)


def _scalar(c):
    if isinstance(c, Fraction) and c.denominator == 1:
        return c.numerator
    return c


@dataclass(frozen=True)
class BaseField:
    """Coefficient field: ``Q`` (rationals) or ``Qt`` (Q(t) with d/dt)."""

    kind: str = "Q"

    def __post_init__(self):
        if self.kind not in ("Q", "Qt"):
            raise DiffRingError(f"unknown base field {self.kind!r}")

    def coerce(self, x):
        if isinstance(x, bool):
            raise DiffRingError("booleans are not field elements")
        if isinstance(x, int):
            return x
        if isinstance(x, Fraction):
            return _scalar(x)
        if isinstance(x, QtElement):
            if self.kind != "Qt":
                raise DiffRingError("Q(t) element in a Q ring")
            return x
        # exact rationals from gmpy2 or sympy
        num, den = getattr(x, "numerator", None), getattr(x, "denominator", None)
        if num is not None and den is not None and not isinstance(x, float):
            try:
                return _scalar(Fraction(int(num), int(den)))
            except (TypeError, ValueError):
                pass
        raise DiffRingError(f"cannot coerce {x!r} into {self.kind}")

    def derive(self, c):
        if isinstance(c, QtElement):
            return c.derivative()
        return 0

    def format(self, c) -> str:
        return str(c)


Q = BaseField("Q")
QT = BaseField("Qt")


def field_of(kind: str) -> BaseField:
    return Q if kind == "Q" else QT


# ---------------------------------------------------------------------------
# variables and rings


class DerVar(NamedTuple):
    """``order``-th derivative of ring variable number ``var``."""

    var: int
    order: int

    def diff(self, k: int = 1) -> "DerVar":
        return DerVar(self.var, self.order + k)


_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class RingContext:
    """Named differential indeterminates, each tagged MAIN or PARAMETER.

    PARAMETER variables are indeterminates adjoined to the base field; they
    are never leaders.
    """

    names: tuple
    kinds: tuple
    field: BaseField = Q

    def __post_init__(self):
        if len(self.names) != len(self.kinds):
            raise DiffRingError("names/kinds length mismatch")
        if len(set(self.names)) != len(self.names):
            raise DiffRingError("duplicate variable names")
        for name in self.names:
            if not _NAME_RE.match(name) or name == "d":
                raise DiffRingError(f"invalid variable name {name!r}")
            if name == "t" and self.field.kind == "Qt":
                raise DiffRingError("'t' is the base-field variable of Q(t)")
        for kind in self.kinds:
            if kind not in (MAIN, PARAMETER):
                raise DiffRingError(f"unknown variable kind {kind!r}")

    @classmethod
    def make(cls, main: Iterable[str] = (), params: Iterable[str] = (), field: BaseField | str = Q):
        if isinstance(field, str):
            field = field_of(field)
        main = list(main)
        params = list(params)
        return cls(tuple(main + params), tuple([MAIN] * len(main) + [PARAMETER] * len(params)), field)

    @cached_property
    def _index(self):
        return {n: i for i, n in enumerate(self.names)}

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise DiffRingError(f"unknown variable {name!r}") from None

    def __contains__(self, name):
        return name in self._index

    def is_main(self, var: int) -> bool:
        return self.kinds[var] == MAIN

    @property
    def main_indices(self) -> tuple:
        return tuple(i for i, k in enumerate(self.kinds) if k == MAIN)

    @property
    def param_indices(self) -> tuple:
        return tuple(i for i, k in enumerate(self.kinds) if k == PARAMETER)

    def dv(self, name: str, order: int = 0) -> DerVar:
        if order < 0:
            raise DiffRingError("negative derivative order")
        return DerVar(self.index(name), order)

    def extend(self, names: Iterable[str], kind: str = PARAMETER) -> "RingContext":
        names = tuple(names)
        return RingContext(self.names + names, self.kinds + (kind,) * len(names), self.field)

    def with_kinds(self, kinds: Mapping[str, str]) -> "RingContext":
        new = tuple(kinds.get(n, k) for n, k in zip(self.names, self.kinds))
        return RingContext(self.names, new, self.field)

    def var(self, name: str, order: int = 0) -> "DiffPoly":
        return DiffPoly(self, {((self.dv(name, order), 1),): 1})

    def gens(self) -> tuple:
        return tuple(self.var(n) for n in self.names)

    def const(self, c) -> "DiffPoly":
        c = self.field.coerce(c)
        return DiffPoly(self, {(): c} if c else {})

    @property
    def zero(self) -> "DiffPoly":
        return DiffPoly(self, {})

    @property
    def one(self) -> "DiffPoly":
        return DiffPoly(self, {(): 1})

    def dervar_name(self, dv: DerVar) -> str:
        name = self.names[dv.var]
        if dv.order <= 3:
            return name + "'" * dv.order
        return f"d({name},{dv.order})"

    def parse(self, text: str) -> "DiffPoly":
        return parse(text, self)


# ---------------------------------------------------------------------------
# monomials


def _mono_mul(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for v, e in b:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


def _mono_key(m: tuple) -> tuple:
    # canonical significance: lower var index first, higher order first
    return tuple(((-v.var, v.order), e) for v, e in sorted(m, key=lambda ve: (ve[0].var, -ve[0].order)))


def _mono_degree(m: tuple) -> int:
    return sum(e for _, e in m)


Scalar = Union[int, Fraction, QtElement]


class DiffPoly:
    """Immutable differential polynomial."""

    __slots__ = ("ring", "terms", "_hash")

    def __init__(self, ring: RingContext, terms: Mapping[tuple, Scalar]):
        self.ring = ring
        self.terms = {m: c for m, c in terms.items() if c}
        self._hash = None

    # -- construction helpers ------------------------------------------------
    def _new(self, terms) -> "DiffPoly":
        return DiffPoly(self.ring, terms)

    def _coerce(self, other) -> "DiffPoly":
        if isinstance(other, DiffPoly):
            if other.ring != self.ring:
                raise DiffRingError("ring mismatch")
            return other
        try:
            return self.ring.const(other)
        except DiffRingError:
            raise TypeError(f"cannot combine DiffPoly with {type(other).__name__}") from None

    # -- arithmetic ----------------------------------------------------------
    def __add__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = _scalar(s)
            else:
                out.pop(m, None)
        return DiffPoly(self.ring, out)

    __radd__ = __add__

    def __neg__(self):
        return DiffPoly(self.ring, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, DiffPoly):
            try:
                c = self.ring.field.coerce(other)
            except DiffRingError:
                return NotImplemented
            if not c:
                return self.ring.zero
            return DiffPoly(self.ring, {m: _scalar(a * c) for m, a in self.terms.items()})
        if other.ring != self.ring:
            raise DiffRingError("ring mismatch")
        if len(self.terms) < len(other.terms):
            a, b = self.terms, other.terms
        else:
            a, b = other.terms, self.terms
        out: dict = {}
        for m1, c1 in a.items():
            for m2, c2 in b.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, 0) + c1 * c2
        return DiffPoly(self.ring, {m: _scalar(c) for m, c in out.items()})

    __rmul__ = __mul__

    def __truediv__(self, other):
        c = self.ring.field.coerce(other) if not isinstance(other, DiffPoly) else None
        if c is None:
            if other.is_constant():
                c = other.constant_value()
            else:
                raise DiffRingError("division by a non-constant polynomial; use exact_div")
        if not c:
            raise ZeroDivisionError("division by zero")
        if isinstance(c, int):
            c = Fraction(c)
        inv = 1 / c
        return DiffPoly(self.ring, {m: _scalar(a * inv) for m, a in self.terms.items()})

    def __pow__(self, e: int):
        if not isinstance(e, int) or e < 0:
            raise DiffRingError("pow needs a non-negative integer exponent")
        result = self.ring.one
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    # -- comparison ----------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, DiffPoly):
            return self.ring == other.ring and self.terms == other.terms
        try:
            return self == self.ring.const(other)
        except DiffRingError:
            return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.ring, frozenset(self.terms.items())))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    # -- queries -------------------------------------------------------------
    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and () in self.terms)

    def constant_value(self):
        return self.terms.get((), 0)

    @property
    def nterms(self) -> int:
        return len(self.terms)

    def dervars(self) -> set:
        return {v for m in self.terms for v, _ in m}

    def variables(self) -> set:
        return {v.var for m in self.terms for v, _ in m}

    def order(self, var) -> int | _NegInf:
        """Order in a ring variable (name or index); NEG_INF if absent."""
        if isinstance(var, str):
            var = self.ring.index(var)
        orders = [v.order for m in self.terms for v, _ in m if v.var == var]
        return max(orders) if orders else NEG_INF

    def total_order(self) -> int | _NegInf:
        orders = [v.order for m in self.terms for v, _ in m if self.ring.is_main(v.var)]
        return max(orders) if orders else NEG_INF

    def degree(self, dv: DerVar | None = None) -> int:
        if dv is None:
            return self.total_degree()
        if not self.terms:
            return NEG_INF
        return max(dict(m).get(dv, 0) for m in self.terms)

    def total_degree(self) -> int:
        if not self.terms:
            return NEG_INF
        return max(_mono_degree(m) for m in self.terms)

    def support(self) -> list:
        return sorted(self.terms, key=_mono_key, reverse=True)

    def sorted_terms(self) -> list:
        return [(m, self.terms[m]) for m in self.support()]

    def leading_coefficient(self):
        """Coefficient of the canonically greatest monomial."""
        return self.terms[self.support()[0]]

    def coefficients(self, dv: DerVar) -> dict:
        """Map exponent -> coefficient DiffPoly, viewing self as univariate in ``dv``."""
        out: dict = {}
        for m, c in self.terms.items():
            e = 0
            rest = []
            for v, k in m:
                if v == dv:
                    e = k
                else:
                    rest.append((v, k))
            bucket = out.setdefault(e, {})
            bucket[tuple(rest)] = c
        return {e: DiffPoly(self.ring, t) for e, t in out.items()}

    def coeff(self, dv: DerVar, e: int) -> "DiffPoly":
        return self.coefficients(dv).get(e, self.ring.zero)

    def diff(self, dv: DerVar) -> "DiffPoly":
        """Partial derivative with respect to the algebraic variable ``dv``."""
        out: dict = {}
        for m, c in self.terms.items():
            md = dict(m)
            e = md.get(dv, 0)
            if not e:
                continue
            if e == 1:
                del md[dv]
            else:
                md[dv] = e - 1
            key = tuple(sorted(md.items()))
            out[key] = out.get(key, 0) + c * e
        return DiffPoly(self.ring, {m: _scalar(c) for m, c in out.items()})

    # -- differentiation -----------------------------------------------------
    def differentiate(self, k: int = 1) -> "DiffPoly":
        """Return ``delta^k`` of self (Leibniz rule; over Q(t), dt/dt = 1)."""
        if k < 0:
            raise DiffRingError("negative differentiation order")
        p = self
        for _ in range(k):
            p = p._delta()
        return p

    def _delta(self) -> "DiffPoly":
        derive = self.ring.field.derive
        out: dict = {}
        for m, c in self.terms.items():
            dc = derive(c)
            if dc:
                out[m] = out.get(m, 0) + dc
            for i, (v, e) in enumerate(m):
                md = dict(m)
                if e == 1:
                    del md[v]
                else:
                    md[v] = e - 1
                w = v.diff()
                md[w] = md.get(w, 0) + 1
                key = tuple(sorted(md.items()))
                out[key] = out.get(key, 0) + c * e
        return DiffPoly(self.ring, {m: _scalar(c) for m, c in out.items()})

    # -- substitution --------------------------------------------------------
    def substitute(self, assign: Mapping[DerVar, object]) -> "DiffPoly":
        """Algebraic substitution of derivative variables.

        Values are DiffPolys of the same ring or field elements; derivatives
        of an assigned variable are *not* implied.
        """
        vals = {}
        for dv, val in assign.items():
            if not isinstance(dv, DerVar):
                raise DiffRingError("assignment keys must be DerVar")
            vals[dv] = val if isinstance(val, DiffPoly) else self.ring.const(val)
            if vals[dv].ring != self.ring:
                raise DiffRingError("substitution introduces a variable absent from the ring")
        powers: dict = {}

        def power(dv, e):
            key = (dv, e)
            if key not in powers:
                powers[key] = vals[dv] ** e
            return powers[key]

        result: dict = {}
        grouped: dict = {}
        for m, c in self.terms.items():
            kept = tuple((v, e) for v, e in m if v not in vals)
            subs = tuple((v, e) for v, e in m if v in vals)
            grouped.setdefault(subs, {})[kept] = c
        acc = self.ring.zero
        for subs, rest in grouped.items():
            factor = self.ring.one
            for v, e in subs:
                factor = factor * power(v, e)
            acc = acc + factor * DiffPoly(self.ring, rest)
        del result
        return acc

    def evaluate(self, values: Mapping[DerVar, object]):
        """Evaluate numerically; every occurring DerVar needs a value."""
        total = 0
        for m, c in self.terms.items():
            term = c if not isinstance(c, QtElement) else values["t_eval"](c)
            for v, e in m:
                try:
                    term = term * values[v] ** e
                except KeyError:
                    raise DiffRingError(f"no value for {self.ring.dervar_name(v)}") from None
            total = total + term
        return total

    # -- ring changes --------------------------------------------------------
    def to_ring(self, ring: RingContext) -> "DiffPoly":
        """Move into another ring, mapping variables by name."""
        if ring == self.ring:
            return self
        mapping = {}
        for v in self.variables():
            mapping[v] = ring.index(self.ring.names[v])
        if ring.field != self.ring.field and any(isinstance(c, QtElement) for c in self.terms.values()):
            raise DiffRingError("coefficients not in target field")
        out = {}
        for m, c in self.terms.items():
            key = tuple(sorted((DerVar(mapping[v.var], v.order), e) for v, e in m))
            out[key] = c
        return DiffPoly(ring, out)

    def rename(self, mapping: Mapping[int, int]) -> "DiffPoly":
        """Permute ring variables by index (same ring)."""
        out = {}
        for m, c in self.terms.items():
            key = tuple(sorted((DerVar(mapping.get(v.var, v.var), v.order), e) for v, e in m))
            out[key] = out.get(key, 0) + c
        return DiffPoly(self.ring, out)

    # -- normalization -------------------------------------------------------
    def primitive(self) -> "DiffPoly":
        """Integer-primitive associate with positive leading coefficient.

        Over Q(t) denominators are cleared and the Z[t] content removed; the
        leading coefficient then has a positive leading coefficient in t.
        """
        if not self.terms:
            return self
        if self.ring.field.kind == "Qt" and any(isinstance(c, QtElement) for c in self.terms.values()):
            return _qt_primitive(self)
        from math import gcd, lcm
        den = 1
        for c in self.terms.values():
            if isinstance(c, Fraction):
                den = lcm(den, c.denominator)
        nums = [int(c * den) for c in self.terms.values()]
        g = 0
        for n in nums:
            g = gcd(g, n)
        sign = -1 if self.leading_coefficient() < 0 else 1
        return DiffPoly(self.ring, {m: sign * int(c * den) // g for m, c in self.terms.items()})

    # -- printing ------------------------------------------------------------
    def __str__(self):
        return format_poly(self)

    def __repr__(self):
        return f"DiffPoly({format_poly(self)!r})"


def _qt_primitive(p: DiffPoly) -> DiffPoly:
    den = _ZT.one
    for c in p.terms.values():
        if isinstance(c, QtElement):
            den = den.lcm(c.den)
        elif isinstance(c, Fraction):
            den = den.lcm(_ZT(c.denominator))
    nums = {}
    for m, c in p.terms.items():
        n, d = QtElement._lift(c)
        nums[m] = n * den.exquo(d)
    g = _ZT.zero
    for n in nums.values():
        g = n.gcd(g) if g else n
    lead = nums[p.support()[0]].exquo(g)
    if lead.LC < 0:
        g = -g
    return DiffPoly(p.ring, {m: qt(n.exquo(g)) for m, n in nums.items()})


# ---------------------------------------------------------------------------
# formatting


def _coeff_text(c) -> str:
    if isinstance(c, QtElement):
        return f"({c})" if c.den == _ZT.one and len(c.num.terms()) > 1 else str(c)
    return str(c)


def format_monomial(ring: RingContext, m: tuple, style: str = "text") -> str:
    parts = []
    for v, e in sorted(m, key=lambda ve: (ve[0].var, -ve[0].order)):
        if style == "latex":
            base = _latex_dervar(ring, v)
            parts.append(base if e == 1 else f"{{{base}}}^{{{e}}}")
        else:
            base = ring.dervar_name(v)
            parts.append(base if e == 1 else f"{base}^{e}")
    return ("" if style == "latex" else "*").join(parts) if style != "latex" else " ".join(parts)


def _latex_dervar(ring, v) -> str:
    name = ring.names[v.var]
    mt = re.match(r"([A-Za-z]+)_?(\d*)\Z", name)
    base = f"{mt.group(1)}_{{{mt.group(2)}}}" if mt and mt.group(2) else name
    if v.order == 0:
        return base
    if v.order <= 3:
        return base + "'" * v.order
    return f"{base}^{{({v.order})}}"


def format_poly(p: DiffPoly, style: str = "text") -> str:
    if style == "json":
        import json
        return json.dumps(poly_to_json(p), sort_keys=True)
    if not p.terms:
        return "0"
    pieces = []
    for m, c in p.sorted_terms():
        mono = format_monomial(p.ring, m, style)
        neg = False
        if isinstance(c, QtElement) and c.num.LC < 0:
            neg, c = True, -c
        elif not isinstance(c, QtElement) and c < 0:
            neg, c = True, -c
        if not mono:
            body = _coeff_text(c)
        elif c == 1:
            body = mono
        else:
            ct = _coeff_text(c)
            if style == "latex" and isinstance(c, Fraction):
                ct = rf"\frac{{{c.numerator}}}{{{c.denominator}}}"
            body = f"{ct}*{mono}" if style == "text" else f"{ct} {mono}"
        pieces.append(("-" if neg else "+", body))
    text = ("-" if pieces[0][0] == "-" else "") + pieces[0][1]
    for sign, body in pieces[1:]:
        text += f" {sign} {body}"
    return text


def poly_to_json(p: DiffPoly) -> dict:
    return {
        "ring": list(p.ring.names),
        "field": p.ring.field.kind,
        "terms": [
            {"coeff": str(c), "monomial": {p.ring.dervar_name(v): e for v, e in sorted(m)}}
            for m, c in p.sorted_terms()
        ],
    }


def poly_from_json(data: Mapping, ring: RingContext) -> DiffPoly:
    out = {}
    for term in data["terms"]:
        c = parse(term["coeff"], ring).constant_value() if ring.field.kind == "Qt" else _scalar(Fraction(term["coeff"]))
        mono = []
        for name, e in term["monomial"].items():
            dv = _parse_dervar_name(name, ring)
            mono.append((dv, int(e)))
        out[tuple(sorted(mono))] = c
    return DiffPoly(ring, out)


def _parse_dervar_name(text: str, ring: RingContext) -> DerVar:
    p = parse(text, ring)
    if len(p.terms) != 1:
        raise DiffRingError(f"not a derivative variable: {text!r}")
    (m, c), = p.terms.items()
    if c != 1 or len(m) != 1 or m[0][1] != 1:
        raise DiffRingError(f"not a derivative variable: {text!r}")
    return m[0][0]


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(.))")


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        mt = _TOKEN_RE.match(text, pos)
        if mt is None:
            break
        start = mt.start(mt.lastindex) if mt.lastindex else pos
        if mt.group(1) is not None:
            tokens.append(("int", mt.group(1), start))
        elif mt.group(2) is not None:
            tokens.append(("id", mt.group(2), start))
        elif mt.group(3) is not None:
            ch = mt.group(3)
            if not ch.isspace():
                tokens.append(("op", ch, start))
        pos = mt.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, ring: RingContext):
        self.ring = ring
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self, value=None):
        tok = self.tokens[self.i]
        if value is not None and tok[1] != value:
            raise ParseError(f"expected {value!r}, found {tok[1] or 'end of input'!r}", tok[2])
        self.i += 1
        return tok

    def poly(self) -> DiffPoly:
        tok = self.peek()
        sign = 1
        if tok[1] in "+-" and tok[0] == "op":
            self.take()
            sign = -1 if tok[1] == "-" else 1
        acc = self.term() * sign
        while True:
            tok = self.peek()
            if tok[0] == "op" and tok[1] in "+-":
                self.take()
                t = self.term()
                acc = acc + t if tok[1] == "+" else acc - t
            else:
                return acc

    def _starts_factor(self, tok) -> bool:
        return tok[0] in ("id", "int") or (tok[0] == "op" and tok[1] == "(")

    def term(self) -> DiffPoly:
        tok = self.peek()
        if not self._starts_factor(tok):
            raise ParseError(f"unexpected {tok[1] or 'end of input'!r}", tok[2])
        acc = self.factor()
        while True:
            tok = self.peek()
            if tok[0] == "op" and tok[1] == "*":
                self.take()
                acc = acc * self.factor()
            elif tok[0] == "op" and tok[1] == "/":
                self.take()
                div_tok = self.peek()
                d = self.factor()
                if not d.is_constant() or not d.constant_value():
                    raise ParseError("division by a non-constant or zero", div_tok[2])
                c = d.constant_value()
                acc = acc * (1 / (Fraction(c) if isinstance(c, int) else c))
            elif self._starts_factor(tok):
                acc = acc * self.factor()
            else:
                return acc

    def factor(self) -> DiffPoly:
        tok = self.take()
        kind, val, pos = tok
        if kind == "int":
            base = self.ring.const(int(val))
        elif kind == "op" and val == "(":
            base = self.poly()
            self.take(")")
        elif kind == "id" and val == "d" and self.peek()[1] == "(":
            self.take("(")
            name_tok = self.take()
            if name_tok[0] != "id":
                raise ParseError("expected a variable name", name_tok[2])
            self.take(",")
            k_tok = self.take()
            if k_tok[0] != "int":
                raise ParseError("expected a derivative order", k_tok[2])
            self.take(")")
            base = self._variable(name_tok[1], int(k_tok[1]), name_tok[2])
        elif kind == "id":
            ticks = 0
            while self.peek()[1] == "'":
                self.take()
                ticks += 1
            base = self._variable(val, ticks, pos)
        else:
            raise ParseError(f"unexpected {val or 'end of input'!r}", pos)
        if kind == "id" and val != "d":
            pass
        while self.peek()[1] == "'" and kind != "id":
            raise ParseError("derivative tick on a non-variable", self.peek()[2])
        if self.peek()[1] == "^":
            self.take()
            e_tok = self.take()
            if e_tok[0] != "int":
                raise ParseError("expected an exponent", e_tok[2])
            base = base ** int(e_tok[1])
        return base

    def _variable(self, name: str, order: int, pos: int) -> DiffPoly:
        if name == "t" and self.ring.field.kind == "Qt":
            p = self.ring.const(T_SYMBOL)
            return p.differentiate(order)
        if name not in self.ring:
            raise ParseError(f"unknown variable {name!r}", pos)
        return self.ring.var(name, order)


def parse(text: str, ring: RingContext) -> DiffPoly:
    """Parse ``text`` with the polynomial grammar into ``ring``."""
    p = _Parser(text, ring)
    if p.peek()[0] == "end":
        raise ParseError("empty polynomial", 0)
    result = p.poly()
    tok = p.peek()
    if tok[0] != "end":
        raise ParseError(f"unexpected {tok[1]!r}", tok[2])
    return result


def parse_monomial(text: str, ring: RingContext) -> tuple:
    p = parse(text, ring)
    if len(p.terms) != 1 or next(iter(p.terms.values())) != 1:
        raise DiffRingError(f"not a monomial: {text!r}")
    return next(iter(p.terms))


def monomial_poly(ring: RingContext, m: tuple, c=1) -> DiffPoly:
    return DiffPoly(ring, {m: c})
