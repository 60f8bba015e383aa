"""
JSON literal formats shared by the library and the CLI.

Rationals are strings ``"p/q"`` (``"p"`` when ``q == 1``).  A series is::

    {"nvars": n, "prec": p, "terms": [{"exp": [i1, ..., in], "coef": "p/q"}, ...]}

with terms in lexicographic exponent order and no zero coefficients.
"""

from __future__ import annotations

import json
import re
from fractions import Fraction
from typing import Any, Sequence

from .completion import Tower
from .connection import Connection
from .series import Series, SeriesMatrix
from .weyl import DiffOperator

__all__ = [
    "ParseError",
    "format_rational",
    "parse_rational",
    "series_to_literal",
    "series_from_literal",
    "matrix_to_literal",
    "matrix_from_literal",
    "vector_to_literal",
    "vector_from_literal",
    "connection_to_literal",
    "connection_from_literal",
    "operator_to_literal",
    "operator_from_literal",
    "tower_to_literal",
    "tower_from_literal",
    "dumps",
    "loads",
]

_RATIONAL = re.compile(r"^[+-]?\d+(/\d+)?$")


class ParseError(ValueError):
    def __init__(self, message: str, where: str = ""):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


def format_rational(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def parse_rational(text: Any, where: str = "") -> Fraction:
    if isinstance(text, int) and not isinstance(text, bool):
        return Fraction(text)
    if not isinstance(text, str) or not _RATIONAL.match(text.strip()):
        raise ParseError(f"bad rational {text!r}", where)
    num, _, den = text.strip().partition("/")
    if den and int(den) == 0:
        raise ParseError(f"zero denominator in {text!r}", where)
    return Fraction(int(num), int(den) if den else 1)


def _nat(value: Any, what: str, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise ParseError(f"{what} must be a natural number, got {value!r}", where)
    return value


def _field(obj: Any, key: str, where: str) -> Any:
    if not isinstance(obj, dict):
        raise ParseError(f"expected an object, got {type(obj).__name__}", where)
    if key not in obj:
        raise ParseError(f"missing field {key!r}", where)
    return obj[key]


def series_to_literal(s: Series) -> dict:
    return {
        "nvars": s.nvars,
        "prec": s.prec,
        "terms": [{"exp": list(e), "coef": format_rational(c)} for e, c in s.items()],
    }


def series_from_literal(obj: Any, where: str = "series") -> Series:
    nvars = _nat(_field(obj, "nvars", where), "nvars", where)
    if nvars < 1:
        raise ParseError("nvars must be >= 1", where)
    prec = _nat(_field(obj, "prec", where), "prec", where)
    terms = _field(obj, "terms", where)
    if not isinstance(terms, list):
        raise ParseError("terms must be a list", where)
    coeffs = {}
    for k, term in enumerate(terms):
        tw = f"{where}.terms[{k}]"
        exp = _field(term, "exp", tw)
        if not isinstance(exp, list) or len(exp) != nvars:
            raise ParseError(f"exponent must be a list of {nvars} naturals", tw)
        exp = tuple(_nat(x, "exponent", tw) for x in exp)
        if sum(exp) > prec:
            raise ParseError(f"term of degree {sum(exp)} exceeds prec {prec}", tw)
        if exp in coeffs:
            raise ParseError(f"duplicate exponent {list(exp)}", tw)
        coef = parse_rational(_field(term, "coef", tw), tw)
        if not coef:
            raise ParseError("zero coefficient", tw)
        coeffs[exp] = coef
    return Series(nvars, prec, coeffs)


def matrix_to_literal(m: SeriesMatrix) -> list:
    return [[series_to_literal(s) for s in row] for row in m.rows]


def matrix_from_literal(obj: Any, where: str = "matrix") -> SeriesMatrix:
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise ParseError("matrix must be a non-empty grid of series", where)
    rows = [[series_from_literal(s, f"{where}[{i}][{j}]") for j, s in enumerate(r)]
            for i, r in enumerate(obj)]
    try:
        return SeriesMatrix(rows)
    except ValueError as exc:
        raise ParseError(str(exc), where) from exc


def vector_to_literal(v: Sequence[Series]) -> list:
    return [series_to_literal(s) for s in v]


def vector_from_literal(obj: Any, where: str = "element") -> tuple[Series, ...]:
    if not isinstance(obj, list) or not obj:
        raise ParseError("expected a non-empty list of series", where)
    v = tuple(series_from_literal(s, f"{where}[{i}]") for i, s in enumerate(obj))
    if len({s.nvars for s in v}) != 1:
        raise ParseError("entries disagree on nvars", where)
    return v


def connection_to_literal(c: Connection) -> dict:
    return {
        "nvars": c.nvars,
        "rank": c.rank,
        "prec": c.prec,
        "matrices": [matrix_to_literal(a) for a in c.matrices],
    }


def connection_from_literal(obj: Any, where: str = "connection") -> Connection:
    nvars = _nat(_field(obj, "nvars", where), "nvars", where)
    rank = _nat(_field(obj, "rank", where), "rank", where)
    prec = _nat(_field(obj, "prec", where), "prec", where)
    mats = _field(obj, "matrices", where)
    if not isinstance(mats, list) or len(mats) != nvars:
        raise ParseError(f"expected {nvars} matrices", where)
    parsed = []
    for k, m in enumerate(mats):
        mw = f"{where}.matrices[{k}]"
        a = matrix_from_literal(m, mw)
        if a.shape != (rank, rank):
            raise ParseError(f"matrix of shape {a.shape}, expected {(rank, rank)}", mw)
        if a.nvars != nvars:
            raise ParseError(f"entries have nvars {a.nvars}, expected {nvars}", mw)
        if a.prec < prec:
            raise ParseError(f"entries known only to prec {a.prec} < {prec}", mw)
        parsed.append(a.project(prec))
    try:
        return Connection(tuple(parsed))
    except ValueError as exc:
        raise ParseError(str(exc), where) from exc


def operator_to_literal(op: DiffOperator) -> dict:
    return {
        "nvars": op.nvars,
        "terms": [{"dexp": list(k), "coef": series_to_literal(b)} for k, b in op.terms.items()],
    }


def operator_from_literal(obj: Any, where: str = "operator") -> DiffOperator:
    nvars = _nat(_field(obj, "nvars", where), "nvars", where)
    terms = _field(obj, "terms", where)
    if not isinstance(terms, list):
        raise ParseError("terms must be a list", where)
    out = {}
    for k, term in enumerate(terms):
        tw = f"{where}.terms[{k}]"
        dexp = _field(term, "dexp", tw)
        if not isinstance(dexp, list) or len(dexp) != nvars:
            raise ParseError(f"dexp must be a list of {nvars} naturals", tw)
        dexp = tuple(_nat(x, "dexp", tw) for x in dexp)
        if dexp in out:
            raise ParseError(f"duplicate dexp {list(dexp)}", tw)
        coef = series_from_literal(_field(term, "coef", tw), f"{tw}.coef")
        if coef.nvars != nvars:
            raise ParseError("coefficient nvars mismatch", tw)
        out[dexp] = coef
    return DiffOperator(nvars, out)


def tower_to_literal(t: Tower) -> dict:
    return {"levels": list(t.levels), "stages": [vector_to_literal(s) for s in t.stages]}


def tower_from_literal(obj: Any, where: str = "tower") -> Tower:
    levels = _field(obj, "levels", where)
    stages = _field(obj, "stages", where)
    if not isinstance(levels, list) or not isinstance(stages, list):
        raise ParseError("levels and stages must be lists", where)
    levels = [_nat(x, "level", where) for x in levels]
    parsed = [vector_from_literal(s, f"{where}.stages[{k}]") for k, s in enumerate(stages)]
    try:
        return Tower(tuple(levels), tuple(parsed))
    except ValueError as exc:
        raise ParseError(str(exc), where) from exc


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2) + "\n"


def loads(text: str, where: str = "<input>") -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}",
                         where) from exc
