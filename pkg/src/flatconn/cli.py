"""
Command-line front end.

Exit status: 0 for success or an affirmative verdict, 1 for a mathematically
negative verdict (not flat, incoherent tower, failed self-test), 2 for input
errors.  ``FLATCONN_PREC`` overrides the default precision cap.
"""

from __future__ import annotations

import argparse
import os
import random
import sys
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import formats
from .completion import complete, is_coherent, kernel_order_check
from .connection import (
    Connection,
    NotFlatError,
    decompose,
    element_order,
    gauge_transform,
    horizontality_residuals,
    is_flat,
    psi_apply,
    psi_full,
    trivialize,
    d_apply,
)
from .formats import ParseError, format_rational
from .ode import (
    BJORK_A1,
    BJORK_A2,
    OdeProblem,
    bjork_counterexample,
    commuting_family_check,
    exp_method,
    residual,
    riemann_product,
    solve_matrix_ode,
)
from .series import PrecisionError, Series, SeriesMatrix

DEFAULT_PREC = 10
PREC_ENV = "FLATCONN_PREC"

OK, NEGATIVE, INPUT_ERROR = 0, 1, 2


class InputError(Exception):
    pass


class Workspace:
    """Precision cap, output mode and loaders shared by every subcommand."""

    def __init__(self, prec: int, output: str, seed: int):
        if prec < 2:
            raise InputError(f"precision cap must be >= 2, got {prec}")
        self.prec = prec
        self.output = output
        self.seed = seed

    def _read(self, path: str):
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise InputError(f"{path}: {exc.strerror}") from exc
        return formats.loads(text, path)

    def load_connection(self, path: str) -> Connection:
        c = formats.connection_from_literal(self._read(path), path)
        return c.project(min(c.prec, self.prec))

    def load_problem(self, path: str) -> OdeProblem:
        c = self.load_connection(path)
        if c.nvars != 1:
            raise InputError(f"{path}: an ODE problem file needs nvars = 1")
        return OdeProblem.from_connection(c)

    def load_element(self, path: str, c: Connection) -> tuple[Series, ...]:
        v = formats.vector_from_literal(self._read(path), path)
        if len(v) != c.rank or v[0].nvars != c.nvars:
            raise InputError(f"{path}: element does not match rank {c.rank}, nvars {c.nvars}")
        return tuple(s.project(min(s.prec, c.prec)) for s in v)

    def load_tower(self, path: str):
        return formats.tower_from_literal(self._read(path), path)


class Report:
    """A machine record plus its human rendering."""

    def __init__(self, command: str):
        self.record: dict = {"command": command}
        self.lines: list[str] = []

    def add(self, key: str, value, human: str | None = None) -> None:
        self.record[key] = value
        if human is not None:
            self.lines.append(human)

    def text(self, line: str) -> None:
        self.lines.append(line)

    def matrix(self, key: str, m: SeriesMatrix, title: str) -> None:
        self.record[key] = formats.matrix_to_literal(m)
        self.lines.append(f"{title}:")
        for i, row in enumerate(m.rows):
            for j, s in enumerate(row):
                self.lines.append(f"  [{i + 1},{j + 1}] {s}")

    def vector(self, key: str, v: Sequence[Series], title: str) -> None:
        self.record[key] = formats.vector_to_literal(v)
        self.lines.append(f"{title}:")
        for i, s in enumerate(v):
            self.lines.append(f"  [{i + 1}] {s}")

    def render(self, mode: str) -> str:
        if mode == "record":
            return formats.dumps(self.record)
        return "\n".join(self.lines) + "\n"


def _lowest_term(m: SeriesMatrix):
    best = None
    for i, row in enumerate(m.rows):
        for j, s in enumerate(row):
            for e, c in s.items():
                key = (sum(e), (i, j), e)
                if best is None or key < best[0]:
                    best = (key, c)
    if best is None:
        return None
    (deg, (i, j), e), c = best
    return {"degree": deg, "entry": [i + 1, j + 1], "exp": list(e), "coef": format_rational(c)}


def _flatness(report: Report, c: Connection) -> bool:
    fr = is_flat(c)
    report.add("flat", fr.flat, "FLAT" if fr.flat else "NOT-FLAT")
    report.add("checked_depth", fr.depth, f"curvature checked through degree {fr.depth}")
    if not fr.flat:
        i, j = fr.pair
        r, col = fr.entry
        report.add("witness", {
            "pair": [i + 1, j + 1],
            "entry": [r + 1, col + 1],
            "exp": list(fr.exponent),
            "coef": format_rational(fr.coef),
        }, f"witness: {fr.describe()}")
    return fr.flat


# -- subcommands ---------------------------------------------------------


def cmd_check_flat(ws: Workspace, args) -> tuple[int, Report]:
    c = ws.load_connection(args.file)
    rep = Report("check-flat")
    rep.add("nvars", c.nvars)
    rep.add("rank", c.rank)
    rep.add("prec", c.prec)
    return (OK if _flatness(rep, c) else NEGATIVE), rep


def cmd_trivialize(ws: Workspace, args) -> tuple[int, Report]:
    c = ws.load_connection(args.file)
    rep = Report("trivialize")
    rep.add("nvars", c.nvars)
    rep.add("rank", c.rank)
    rep.add("prec", c.prec, f"nvars={c.nvars} rank={c.rank} prec={c.prec}")
    if not _flatness(rep, c):
        return NEGATIVE, rep
    g, g_inv = trivialize(c)
    rep.matrix("g", g, "g (rows form a horizontal basis)")
    rep.matrix("g_inv", g_inv, "g^-1")
    residuals = horizontality_residuals(c, g)
    rep.add("residual_prec", c.prec - 1)
    rep.add("residuals", [formats.matrix_to_literal(r) for r in residuals])
    horizontal = all(r.is_zero() for r in residuals)
    rep.add("horizontal", horizontal,
            f"horizontality residuals d_j(g) + g A_j: "
            f"{'all zero' if horizontal else 'NONZERO'} through degree {c.prec - 1}")
    eye = [[Fraction(int(i == j)) for j in range(c.rank)] for i in range(c.rank)]
    mod_b = g.constant_part() == eye
    rep.add("identity_mod_b", mod_b, f"g = I mod (t): {'yes' if mod_b else 'NO'}")
    conj = gauge_transform(c, g, g_inv)
    conj_zero = all(a.is_zero() for a in conj.matrices)
    rep.add("conjugated_zero", conj_zero,
            f"conjugated connection vanishes: {'yes' if conj_zero else 'NO'}")
    return OK, rep


def cmd_psi(ws: Workspace, args) -> tuple[int, Report]:
    c = ws.load_connection(args.file)
    v = ws.load_element(args.element, c)
    rep = Report("psi")
    if args.var is not None:
        if not 1 <= args.var <= c.nvars:
            raise InputError(f"--var must be in 1..{c.nvars}")
        j = args.var - 1
        h = psi_apply(c, j, v)
        rep.add("var", args.var)
        rep.vector("result", h, f"psi_{args.var}(v)")
        checks = [j]
    else:
        if not _flatness(rep, c):
            return NEGATIVE, rep
        h = psi_full(c, v)
        rep.vector("result", h, "psi(v)")
        checks = range(c.nvars)
    prec = min(s.prec for s in h)
    horizontal = prec < 1 or all(
        all(s.is_zero() for s in d_apply(c, j, h)) for j in checks)
    rep.add("horizontal", horizontal,
            f"horizontal through degree {prec - 1}: {'yes' if horizontal else 'NO'}")
    return OK, rep


def cmd_decompose(ws: Workspace, args) -> tuple[int, Report]:
    c = ws.load_connection(args.file)
    v = ws.load_element(args.element, c)
    rep = Report("decompose")
    if not _flatness(rep, c):
        return NEGATIVE, rep
    h, m = decompose(c, v)
    rep.vector("horizontal", h, "horizontal part")
    rep.vector("maximal", m, "part in (t)M")
    order = element_order(m)
    in_ideal = order is None or order >= 1
    rep.add("maximal_in_ideal", in_ideal, f"second part has order >= 1: {'yes' if in_ideal else 'NO'}")
    rebuilt = tuple(a + b for a, b in zip(h, m)) == tuple(
        s.project(min(x.prec for x in h)) for s in v)
    rep.add("reconstructs", rebuilt, f"v = horizontal + maximal: {'yes' if rebuilt else 'NO'}")
    return OK, rep


def _parse_method(text: str) -> tuple[str, int | None]:
    if text in ("recursion", "exp"):
        return text, None
    if text.startswith("riemann:"):
        k = text.split(":", 1)[1]
        if k.isdigit() and int(k) >= 1:
            return "riemann", int(k)
    raise InputError(f"invalid method {text!r}; use recursion, exp or riemann:K")


def cmd_ode_solve(ws: Workspace, args) -> tuple[int, Report]:
    method, k = _parse_method(args.method)
    p = ws.load_problem(args.file)
    rep = Report("ode-solve")
    rep.add("method", args.method, f"method: {args.method}")
    rep.add("rank", p.rank)
    rep.add("prec", p.prec, f"rank={p.rank} prec={p.prec}")
    if method == "recursion":
        g = solve_matrix_ode(p)
    elif method == "exp":
        g = exp_method(p)
    else:
        g = riemann_product(p, k)
    rep.matrix("g", g, "g")
    res = residual(g, p)
    rep.matrix("residual", res, f"residual d(g) + g b (through degree {res.prec})")
    rep.add("residual_prec", res.prec)
    rep.add("residual_zero", res.is_zero(), f"residual zero: {'yes' if res.is_zero() else 'no'}")
    return OK, rep


def cmd_bjork_demo(ws: Workspace, args) -> tuple[int, Report]:
    p = bjork_counterexample(ws.prec)
    rep = Report("bjork-demo")
    rep.add("prec", ws.prec, f"counterexample at prec {ws.prec}: c = t a1 + t^2 a2, b = d(c)")
    rep.add("a1", [[format_rational(Fraction(x)) for x in r] for r in BJORK_A1],
            f"a1 = {[list(r) for r in BJORK_A1]}")
    rep.add("a2", [[format_rational(Fraction(x)) for x in r] for r in BJORK_A2],
            f"a2 = {[list(r) for r in BJORK_A2]}")
    rep.matrix("b", p.b, "b")
    g_exp = exp_method(p)
    res_exp = residual(g_exp, p)
    rep.matrix("g_exp", g_exp, "g = exp(-c)")
    rep.matrix("residual_exp", res_exp, "residual of exp(-c)")
    low = _lowest_term(res_exp)
    rep.add("residual_exp_lowest", low,
            f"lowest residual term: degree {low['degree']}, entry ({low['entry'][0]},"
            f"{low['entry'][1]}), coefficient {low['coef']}" if low else "residual is zero")
    g_rec = solve_matrix_ode(p)
    res_rec = residual(g_rec, p)
    rep.matrix("g_recursion", g_rec, "g from the coefficient recursion")
    rep.add("residual_recursion_zero", res_rec.is_zero(),
            f"recursion residual zero through degree {res_rec.prec}: "
            f"{'yes' if res_rec.is_zero() else 'NO'}")
    rep.add("commuting", commuting_family_check(p),
            f"coefficient matrices commute: {'yes' if commuting_family_check(p) else 'no'}")
    return OK, rep


def cmd_tower_check(ws: Workspace, args) -> tuple[int, Report]:
    t = ws.load_tower(args.file)
    rep = Report("tower-check")
    rep.add("levels", list(t.levels), f"levels {list(t.levels)}")
    ok, level = is_coherent(t)
    rep.add("coherent", ok, "COHERENT" if ok else f"INCOHERENT at level {level}")
    if not ok:
        rep.add("first_failing_level", level)
        return NEGATIVE, rep
    rep.vector("complete", complete(t), f"completion (prec {t.top})")
    if args.order is not None:
        if args.order > t.top:
            raise InputError(f"--order {args.order} exceeds top level {t.top}")
        inside = kernel_order_check(t, args.order)
        rep.add("order", args.order)
        rep.add("in_ideal_power", inside,
                f"top stage lies in b^{args.order} M: {'yes' if inside else 'no'}")
        return (OK if inside else NEGATIVE), rep
    return OK, rep


def cmd_self_test(ws: Workspace, args) -> tuple[int, Report]:
    from .samples import random_flat_connection

    rng = random.Random(ws.seed)
    rep = Report("self-test")
    rep.add("seed", ws.seed, f"seed {ws.seed}, {args.count} random flat connections")
    failures = []
    for k in range(args.count):
        c = random_flat_connection(rng, prec=rng.randint(2, min(8, ws.prec)))
        g, g_inv = trivialize(c)
        ok = all(r.is_zero() for r in horizontality_residuals(c, g))
        ok &= all(a.is_zero() for a in gauge_transform(c, g, g_inv).matrices)
        for v in c.basis():
            h = psi_full(c, v)
            ok &= psi_full(c, h) == h
            ok &= all(s.has_order_at_least(1) for s in (a - b for a, b in zip(v, h)))
        if not ok:
            failures.append(k)
    rep.add("failures", failures, f"failures: {failures or 'none'}")
    return (NEGATIVE if failures else OK), rep


COMMANDS = {
    "check-flat": cmd_check_flat,
    "trivialize": cmd_trivialize,
    "psi": cmd_psi,
    "decompose": cmd_decompose,
    "ode-solve": cmd_ode_solve,
    "bjork-demo": cmd_bjork_demo,
    "tower-check": cmd_tower_check,
    "self-test": cmd_self_test,
}


def _default_prec() -> int:
    env = os.environ.get(PREC_ENV)
    if env is None:
        return DEFAULT_PREC
    try:
        return int(env)
    except ValueError:
        raise InputError(f"{PREC_ENV}={env!r} is not an integer") from None


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--prec", type=int, default=argparse.SUPPRESS,
                        help=f"precision cap N (default {DEFAULT_PREC}, env {PREC_ENV})")
    common.add_argument("--output", choices=("human", "record"), default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="flatconn", parents=[common],
                                     description="Exact trivialization of flat connections.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-flat", parents=[common], help="curvature test")
    p.add_argument("file")
    p = sub.add_parser("trivialize", parents=[common], help="horizontal basis g and g^-1")
    p.add_argument("file")
    p = sub.add_parser("psi", parents=[common], help="horizontal projection of an element")
    p.add_argument("file")
    p.add_argument("element")
    p.add_argument("--var", type=int, default=None, help="single variable (1-based)")
    p = sub.add_parser("decompose", parents=[common], help="split v = horizontal + (t)-part")
    p.add_argument("file")
    p.add_argument("element")
    p = sub.add_parser("ode-solve", parents=[common], help="solve d(g) = -g b")
    p.add_argument("file")
    p.add_argument("--method", default="recursion", help="recursion | exp | riemann:K")
    sub.add_parser("bjork-demo", parents=[common], help="the non-commuting counterexample")
    p = sub.add_parser("tower-check", parents=[common], help="coherence of a truncation tower")
    p.add_argument("file")
    p.add_argument("--order", type=int, default=None, help="also check membership in b^i M")
    p = sub.add_parser("self-test", parents=[common], help="randomized consistency checks")
    p.add_argument("--count", type=int, default=20)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    output = getattr(args, "output", "human")
    try:
        prec = getattr(args, "prec", None)
        ws = Workspace(prec if prec is not None else _default_prec(), output,
                       getattr(args, "seed", 0))
        code, rep = COMMANDS[args.command](ws, args)
    except NotFlatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return NEGATIVE
    except (InputError, ParseError, PrecisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    sys.stdout.write(rep.render(output))
    return code


if __name__ == "__main__":
    sys.exit(main())
