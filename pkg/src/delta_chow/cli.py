"""Command-line entry point: ``delta-chow <command> [options]``.

Exit status is 0 on success, 1 on a mathematical failure (reported as a JSON
object with an ``error`` code on stdout) and 2 on a usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable

from .algelim import Deadline, ResourceLimit
from .chow import (
    ChowError,
    GenericShape,
    as_chow_form,
    chow_form,
    chow_hypersurface,
    differential_resultant,
    generalized_chow_resultant,
    make_chow_ring,
    resultant_matrix_1var,
)
from .diffring import DiffRingError, ParseError, RingContext
from .quasivariety import ChowIndex, build_template, cv1_generate, load_example_support
from .ranking import Ranking, parse_ranking
from .reduction import ChainError, DiffChain, UnitIdeal, charset, dim_order, relative_order, ritt_reduce
from .verify import (
    VerificationError,
    generic_point_check,
    numeric_fiber_check,
    verify_chow_invariants,
)

DEFAULT_DEADLINE = 600.0


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    ring: RingContext | None
    field: str
    ranking: str
    polys: list
    fmt: str
    deadline: float
    trace_gb: bool
    seed: int
    options: dict = field(default_factory=dict)

    def validate(self):
        if self.deadline <= 0:
            raise UsageError("--deadline must be positive")
        if self.command in _NEEDS_RING and self.ring is None:
            raise UsageError(f"{self.command} needs --ring")
        if self.command in _NEEDS_POLYS and not self.polys:
            raise UsageError(f"{self.command} needs at least one polynomial")


_NEEDS_RING = {"charset", "reduce", "chow", "chow-hyper", "gchow", "verify", "dims"}
_NEEDS_POLYS = {"charset", "reduce", "chow", "chow-hyper", "gchow", "dims"}


# ---------------------------------------------------------------------------
# argument parsing


def _int_list(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _names(text: str) -> list:
    return [x.strip() for x in text.split(",") if x.strip()]


_MATH_ERRORS = ["unit_ideal", "resource_limit", "chow_failure", "not_a_chain",
                "internal_disagreement", "verification_failed"]


def _formatter(prog):
    # fixed width keeps help text independent of the terminal
    return argparse.HelpFormatter(prog, width=88)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--ring", type=_names, help="comma-separated differential indeterminates, e.g. y1,y2")
    common.add_argument("--params", type=_names, default=[], help="comma-separated parameter indeterminates")
    common.add_argument("--field", choices=["Q", "Qt"], default="Q", help="base field: Q, or Q(t) with t' = 1")
    common.add_argument("--ranking", default="orderly",
                        help="orderly | elim:y1<y2 | block:[y1|y2,y3] (lowest first)")
    common.add_argument("--file", action="append", default=[], metavar="PATH",
                        help="read polynomials from a file, one per line ('#' starts a comment)")
    common.add_argument("--json", dest="fmt", action="store_const", const="json", help="same as --format json")
    common.add_argument("--format", dest="fmt", choices=["text", "json"], default="text")
    common.add_argument("--deadline", type=float, default=DEFAULT_DEADLINE, help="wall-clock limit in seconds")
    common.add_argument("--trace-gb", action="store_true", help="log Groebner pair events to stderr")
    common.add_argument("--seed", type=int, default=0, help="seed for the numeric fiber sampler only")

    p = argparse.ArgumentParser(prog="delta-chow", description="Differential Chow forms and resultants.",
                                formatter_class=_formatter)
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    def add(name, help_text):
        return sub.add_parser(name, parents=[common], help=help_text, description=help_text,
                              formatter_class=_formatter)

    c = add("charset", "characteristic set of the input polynomials")
    c.add_argument("polys", nargs="*")

    c = add("reduce", "Ritt reduction of F modulo a chain")
    c.add_argument("polys", nargs="*", help="polynomial(s) to reduce")
    c.add_argument("--chain", nargs="+", required=True, help="chain elements")
    c.add_argument("--certificate", action="store_true", help="include the explicit ideal combination")

    c = add("chow", "Chow form of sat(A) for the characteristic set of the input")
    c.add_argument("polys", nargs="*")
    c.add_argument("--method", choices=["auto", "formula", "groebner"], default="auto")

    c = add("chow-hyper", "Chow form of a hypersurface by the determinant formula")
    c.add_argument("polys", nargs="*")

    c = add("gchow", "generalized Chow form with generic polynomials of given orders and degrees")
    c.add_argument("polys", nargs="*")
    c.add_argument("--orders", type=_int_list, required=True)
    c.add_argument("--degrees", type=_int_list, required=True)
    c.add_argument("--method", choices=["auto", "cascade", "groebner"], default="auto")

    c = add("dres", "differential resultant of n + 1 generic polynomials")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--orders", type=_int_list, required=True)
    c.add_argument("--degrees", type=_int_list, required=True)
    c.add_argument("--method", choices=["auto", "cascade", "groebner"], default="auto")
    c.add_argument("--matrix", action="store_true",
                   help="also build the 14x14 matrix (n=1, orders 0,1, degrees 2,2) and test divisibility")

    c = add("verify", "check the invariants of a given Chow form")
    c.add_argument("polys", nargs="*", help="ideal generators (alternative to --ideal)")
    c.add_argument("--chow", required=True, metavar="PATH", help="Chow form: a polynomial or a JSON object with 'poly'")
    c.add_argument("--ideal", metavar="PATH", help="ideal generators: one per line, a JSON list, or charset JSON output")
    c.add_argument("--zero-ideal", action="store_true", help="the form is a differential resultant")
    c.add_argument("--n", type=int, help="number of variables for --zero-ideal")
    c.add_argument("--orders", type=_int_list, help="generic polynomial orders (generalized forms)")
    c.add_argument("--degrees", type=_int_list, help="generic polynomial degrees (generalized forms)")
    c.add_argument("--numeric", action="store_true", help="run the numeric fiber check (d = 0 only)")
    c.add_argument("--samples", type=int, default=5)
    c.add_argument("--perturb", type=float, default=None)

    c = add("quasivariety", "defining relations of the g = 1 Chow quasi-variety for a support")
    c.add_argument("--index", type=_int_list, help="n,d,h,g,m (default: the shipped example)")
    c.add_argument("--support", metavar="PATH", help="JSON list of monomials or one monomial per line")
    c.add_argument("--simplified", action="store_true", help="substitute the solved linear relations")

    c = add("dims", "dimension and order of sat(A)")
    c.add_argument("polys", nargs="*")
    c.add_argument("--relative", type=_names, help="parametric set for the relative order")
    return p


def _read_lines(path: str) -> list:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(line)
    return out


def _read_polys(path: str) -> list:
    """Polynomial texts from a line file, a JSON list, or charset JSON output."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    if not text.lstrip().startswith(("[", "{")):
        return _read_lines(path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc.msg})") from None
    if isinstance(data, dict):
        data = data.get("chain", data.get("polys"))
    if not isinstance(data, list) or not all(isinstance(x, str) for x in data):
        raise UsageError(f"{path}: expected a list of polynomials or an object with 'chain'")
    return data


def config_from_args(args: argparse.Namespace) -> RunConfig:
    ring = None
    if args.ring:
        ring = RingContext.make(args.ring, args.params, args.field)
    texts = list(getattr(args, "polys", []) or [])
    for path in args.file:
        texts.extend(_read_lines(path))
    polys = [ring.parse(t) for t in texts] if ring is not None else []
    skip = {"command", "ring", "params", "field", "ranking", "file", "fmt", "deadline", "trace_gb", "seed", "polys"}
    options = {k: v for k, v in vars(args).items() if k not in skip}
    cfg = RunConfig(args.command, ring, args.field, args.ranking, polys, args.fmt or "text",
                    args.deadline, args.trace_gb, args.seed, options)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# commands


def _trace(cfg: RunConfig) -> Callable | None:
    if not cfg.trace_gb:
        return None
    return lambda event: print(json.dumps(event, sort_keys=True), file=sys.stderr)


def _ranking(cfg: RunConfig) -> Ranking:
    return parse_ranking(cfg.ranking, cfg.ring)


def _chain(cfg: RunConfig, deadline: Deadline) -> DiffChain:
    return charset(cfg.polys, _ranking(cfg), deadline)


def _orderly_chain(cfg: RunConfig, deadline: Deadline) -> DiffChain:
    return charset(cfg.polys, Ranking.orderly(cfg.ring), deadline)


def _shapes(orders: list, degrees: list) -> list:
    if len(orders) != len(degrees):
        raise UsageError("--orders and --degrees need the same length")
    return [GenericShape(s, m) for s, m in zip(orders, degrees)]


def cmd_charset(cfg: RunConfig, deadline: Deadline) -> dict:
    A = _chain(cfg, deadline)
    out = {
        "chain": A.to_json(),
        "leaders": [A.ring.dervar_name(u) for u in A.leaders],
        "ranking": A.ranking.describe(),
    }
    info = dim_order(A)
    out.update({"dimension": info.dimension, "order": info.order, "parametric_set": list(info.parametric_set)})
    return out


def cmd_reduce(cfg: RunConfig, deadline: Deadline) -> dict:
    elements = [cfg.ring.parse(t) for t in cfg.options["chain"]]
    A = DiffChain.checked(elements, _ranking(cfg))
    results = []
    for f in cfg.polys:
        cert = ritt_reduce(f, A, track=cfg.options.get("certificate", False))
        item = {
            "input": str(f),
            "remainder": str(cert.remainder),
            "multiplier_exponents": [{"separant": s, "initial": i} for s, i in cert.multiplier_exponents],
        }
        if cert.combination is not None:
            item["combination"] = [
                {"element": i, "derivative": k, "cofactor": str(c)}
                for (i, k), c in sorted(cert.combination.items())
            ]
        results.append(item)
    return {"chain": A.to_json(), "results": results}


def cmd_chow(cfg: RunConfig, deadline: Deadline) -> dict:
    A = _orderly_chain(cfg, deadline)
    C = chow_form(A, deadline=deadline, method=cfg.options["method"], trace=_trace(cfg))
    return {"chain": A.to_json(), **C.to_json()}


def cmd_chow_hyper(cfg: RunConfig, deadline: Deadline) -> dict:
    if len(cfg.polys) != 1:
        raise UsageError("chow-hyper takes exactly one polynomial")
    return chow_hypersurface(cfg.polys[0]).to_json()


def cmd_gchow(cfg: RunConfig, deadline: Deadline) -> dict:
    A = _orderly_chain(cfg, deadline)
    shapes = _shapes(cfg.options["orders"], cfg.options["degrees"])
    C = generalized_chow_resultant(A, shapes, method=cfg.options["method"], deadline=deadline, trace=_trace(cfg))
    return {"chain": A.to_json(), **C.to_json()}


def cmd_dres(cfg: RunConfig, deadline: Deadline) -> dict:
    n = cfg.options["n"]
    if n < 1:
        raise UsageError("--n must be at least 1")
    shapes = _shapes(cfg.options["orders"], cfg.options["degrees"])
    C = differential_resultant(n, shapes, method=cfg.options["method"], deadline=deadline, trace=_trace(cfg))
    out = C.to_json()
    if cfg.options.get("matrix"):
        if n != 1 or [(s.s, s.m) for s in shapes] != [(0, 2), (1, 2)]:
            raise UsageError("--matrix is available for n=1, orders 0,1, degrees 2,2 only")
        M = resultant_matrix_1var(C.poly)
        out["matrix"] = {
            "size": len(M.matrix),
            "rows": M.rows,
            "columns": [f"y^{a}*y'^{b}" for a, b in M.columns],
            "determinant_nterms": len(M.determinant.terms),
            "divisible": M.divisible,
            "quotient": str(M.quotient) if M.quotient is not None else None,
        }
    return out


def _load_chow_text(path: str) -> str:
    try:
        text = Path(path).read_text(encoding="utf-8").strip()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    if text.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: invalid JSON ({exc.msg})") from None
        if "poly" not in data:
            raise UsageError(f"{path}: JSON object lacks 'poly'")
        return data["poly"]
    return " ".join(_read_lines(path))


def cmd_verify(cfg: RunConfig, deadline: Deadline) -> dict:
    opts = cfg.options
    polys = list(cfg.polys)
    if opts.get("ideal"):
        polys.extend(cfg.ring.parse(t) for t in _read_polys(opts["ideal"]))
    shapes = None
    if opts.get("orders") is not None or opts.get("degrees") is not None:
        shapes = _shapes(opts.get("orders") or [], opts.get("degrees") or [])
    text = _load_chow_text(opts["chow"])
    if opts.get("zero_ideal"):
        n = opts.get("n") or len(cfg.ring.main_indices)
        if shapes is None:
            raise UsageError("--zero-ideal needs --orders and --degrees")
        A = None
        base = RingContext.make([f"y{j}" for j in range(1, n + 1)] if n > 1 else ["y"], field=cfg.field)
        cring = make_chow_ring(base, shapes)
        C = as_chow_form(cring.ring.parse(text), None, shapes, n)
    else:
        if not polys:
            raise UsageError("verify needs the ideal (--ideal or positional polynomials)")
        A = charset(polys, Ranking.orderly(cfg.ring), deadline)
        info = dim_order(A)
        sh = shapes or [GenericShape(0, 1)] * (info.dimension + 1)
        cring = make_chow_ring(cfg.ring, sh)
        C = as_chow_form(cring.ring.parse(text), A, sh)
    report = verify_chow_invariants(C, A, zero_ideal=A is None)
    out = {"chow": C.to_json(), "invariants": report.to_json()}
    passed = report.passed
    if A is not None and shapes is None:
        gp = generic_point_check(C, A)
        out["generic_point"] = gp.to_json()
        passed = passed and gp.passed
    if opts.get("numeric"):
        if A is None or C.d != 0:
            raise UsageError("--numeric needs an ideal of dimension zero")
        fr = numeric_fiber_check(C, A, samples=opts["samples"], seed=cfg.seed, perturb=opts.get("perturb"))
        out["numeric"] = {
            "samples": fr.samples,
            "max_residual": f"{fr.max_residual:.3e}",
            "perturbed_min_residual": None if fr.perturbed_min_residual is None
            else f"{fr.perturbed_min_residual:.3e}",
        }
    out["passed"] = passed
    if not passed:
        raise _Failure("verification_failed", "one or more checks failed", out)
    return out


def _load_support(path: str) -> list:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    if text.lstrip().startswith(("[", "{")):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: invalid JSON ({exc.msg})") from None
        return data["support"] if isinstance(data, dict) else data
    return _read_lines(path)


def cmd_quasivariety(cfg: RunConfig, deadline: Deadline) -> dict:
    opts = cfg.options
    if opts.get("support"):
        if not opts.get("index"):
            raise UsageError("--support needs --index")
        support = _load_support(opts["support"])
    else:
        index, support = load_example_support()
        if opts.get("index") and tuple(opts["index"]) != (index.n, index.d, index.h, index.g, index.m):
            raise UsageError("--index without --support must match the shipped example")
    if opts.get("index"):
        if len(opts["index"]) != 5:
            raise UsageError("--index takes n,d,h,g,m")
        index = ChowIndex(*opts["index"])
    T = build_template(index, support)
    P = cv1_generate(T, deadline)
    out = P.to_json()
    if opts.get("simplified"):
        out["relations"] = [str(r) for r in P.simplified()]
    out["index"] = [index.n, index.d, index.h, index.g, index.m]
    out["linear_solution"] = {k: str(v) for k, v in sorted(P.linear_solution.items(), key=lambda kv: int(kv[0][1:]))}
    out["nrelations"] = len(out["relations"])
    return out


def cmd_dims(cfg: RunConfig, deadline: Deadline) -> dict:
    A = _chain(cfg, deadline)
    out = dim_order(A).to_json()
    if cfg.options.get("relative"):
        out["relative_order"] = relative_order(A, cfg.options["relative"])
    return out


SCHEMAS = {
    "charset": "charset",
    "reduce": "reduce",
    "chow": "chowform",
    "chow-hyper": "chowform",
    "gchow": "chowform",
    "dres": "chowform",
    "verify": "verify",
    "quasivariety": "quasivariety",
    "dims": "dims",
    "error": "error",
}


def load_schema(command: str) -> dict:
    """JSON schema for the output of ``command`` (or ``"error"``)."""
    name = SCHEMAS[command]
    return json.loads(resources.files("delta_chow").joinpath(f"schemas/{name}.schema.json").read_text())


COMMANDS = {
    "charset": cmd_charset,
    "reduce": cmd_reduce,
    "chow": cmd_chow,
    "chow-hyper": cmd_chow_hyper,
    "gchow": cmd_gchow,
    "dres": cmd_dres,
    "verify": cmd_verify,
    "quasivariety": cmd_quasivariety,
    "dims": cmd_dims,
}


# ---------------------------------------------------------------------------
# output


class _Failure(Exception):
    def __init__(self, code: str, message: str, payload: dict | None = None):
        super().__init__(message)
        self.code = code
        self.payload = payload


def _flat(x) -> str:
    if isinstance(x, list):
        return "[" + " ".join(_flat(y) for y in x) + "]"
    return str(x)


def _text(obj, indent: int = 0) -> list:
    pad = "  " * indent
    lines = []
    for key, val in obj.items():
        if isinstance(val, dict):
            lines.append(f"{pad}{key}:")
            lines.extend(_text(val, indent + 1))
        elif isinstance(val, list) and val and all(isinstance(x, dict) for x in val):
            lines.append(f"{pad}{key}:")
            for item in val:
                sub = _text(item, indent + 2)
                sub[0] = pad + "  - " + sub[0].lstrip()
                lines.extend(sub)
        elif isinstance(val, list) and len(val) > 8:
            lines.append(f"{pad}{key}:")
            lines.extend(f"{pad}  {x}" for x in val)
        elif isinstance(val, list):
            lines.append(f"{pad}{key}: {', '.join(_flat(x) for x in val)}")
        else:
            lines.append(f"{pad}{key}: {val}")
    return lines


def render(obj: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(obj, sort_keys=True, indent=2)
    return "\n".join(_text(obj))


def error_object(code: str, message: str, extra: dict | None = None) -> dict:
    out = {"error": code, "message": message}
    if extra:
        out.update(extra)
    return out


def run(cfg: RunConfig) -> tuple:
    """Execute a validated configuration; returns (exit status, stdout text)."""
    deadline = Deadline(cfg.deadline)
    try:
        result = COMMANDS[cfg.command](cfg, deadline)
    except _Failure as exc:
        return 1, render(error_object(exc.code, str(exc), {"details": exc.payload} if exc.payload else None), cfg.fmt)
    except UnitIdeal as exc:
        extra = {"witness": str(exc.witness)} if exc.witness is not None else None
        return 1, render(error_object("unit_ideal", "the input generates the unit ideal", extra), cfg.fmt)
    except ResourceLimit as exc:
        return 1, render(error_object("resource_limit", str(exc), {"kind": exc.kind}), cfg.fmt)
    except ChowError as exc:
        return 1, render(error_object("chow_failure", str(exc)), cfg.fmt)
    except ChainError as exc:
        return 1, render(error_object("not_a_chain", str(exc)), cfg.fmt)
    except VerificationError as exc:
        return 1, render(error_object("internal_disagreement", str(exc)), cfg.fmt)
    return 0, render(result, cfg.fmt)


def reference_markdown() -> str:
    """Flag reference for every command, rendered from the argument parser."""
    parser = build_parser()
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    lines = [
        "# delta-chow command reference",
        "",
        "Generated from the argument parser; regenerate with",
        "`python3 -m delta_chow.cli --reference > docs/cli.md`.",
        "",
        "Exit status: 0 success; 1 mathematical failure, reported as a JSON object",
        "whose `error` code is one of " + ", ".join(f"`{c}`" for c in _MATH_ERRORS) + ";",
        "2 usage or parse error (`usage`, `parse_error`).",
        "",
    ]
    for name, cp in sub.choices.items():
        lines += [f"## {name}", "", cp.description or "", "", "```", cp.format_usage().strip(), "```", "",
                  "| flag | default | help |", "| --- | --- | --- |"]
        for act in cp._actions:
            if isinstance(act, argparse._HelpAction):
                continue
            flag = ", ".join(act.option_strings) or act.dest
            default = "" if act.default in (None, argparse.SUPPRESS, False, []) else f"`{act.default}`"
            text = (act.help or "").replace("|", "\\|")
            if act.choices:
                text = (text + "; " if text else "") + "choices: " + ", ".join(str(c) for c in act.choices)
            lines.append(f"| `{flag}` | {default} | {text} |")
        lines.append("")
    return "\n".join(lines)


def main(argv: list | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if argv == ["--reference"]:
        print(reference_markdown())
        return 0
    parser = build_parser()
    args = parser.parse_args(argv)
    fmt = args.fmt or "text"
    try:
        cfg = config_from_args(args)
        status, text = run(cfg)
    except ParseError as exc:
        status, text = 2, render(error_object("parse_error", str(exc), {"position": exc.position}), fmt)
    except (UsageError, DiffRingError) as exc:
        status, text = 2, render(error_object("usage", str(exc)), fmt)
    stream = sys.stdout if status != 2 else sys.stderr
    print(text, file=stream)
    return status


if __name__ == "__main__":
    sys.exit(main())
