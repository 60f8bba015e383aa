"""
The matrix ODE ``d(g) = -g . b`` in one variable, solved three ways.

* :func:`solve_matrix_ode` -- coefficient recursion; exact.
* :func:`exp_method` -- ``exp(-integral(b))``; correct only when the
  coefficient matrices of ``b`` commute.
* :func:`riemann_product` -- finite ordered products approximating the
  path-ordered exponential.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .connection import Connection
from .series import DimensionError, PrecisionError, Series, SeriesMatrix

__all__ = [
    "OdeProblem",
    "solve_matrix_ode",
    "exp_method",
    "residual",
    "bjork_counterexample",
    "riemann_product",
    "commuting_family_check",
    "BJORK_A1",
    "BJORK_A2",
]

BJORK_A1 = ((0, 1), (0, 0))
BJORK_A2 = ((1, 0), (0, 0))


@dataclass(frozen=True)
class OdeProblem:
    """``d(g) = -g . b`` with ``b = sum_k t^k a_k`` known to ``b.prec``."""

    b: SeriesMatrix

    def __post_init__(self):
        if self.b.nrows != self.b.ncols:
            raise DimensionError("b must be square")
        if self.b.nvars != 1:
            raise DimensionError("ODE problems are in a single variable")

    @property
    def rank(self) -> int:
        return self.b.nrows

    @property
    def prec(self) -> int:
        return self.b.prec

    def coefficient(self, k: int) -> list[list[Fraction]]:
        """The rational matrix ``a_k``."""
        return self.b.coefficient((k,))

    def as_connection(self) -> Connection:
        return Connection((self.b,))

    @classmethod
    def from_connection(cls, c: Connection) -> OdeProblem:
        if c.nvars != 1:
            raise DimensionError("only one-variable connections define an ODE problem")
        return cls(c.matrices[0])

    def project(self, prec: int) -> OdeProblem:
        return OdeProblem(self.b.project(prec))


def _rat_matmul(a, b):
    return [[sum((a[i][k] * b[k][j] for k in range(len(b))), Fraction(0))
             for j in range(len(b[0]))] for i in range(len(a))]


def _from_coefficients(coeffs: list, r: int, prec: int) -> SeriesMatrix:
    return SeriesMatrix([
        [Series(1, prec, {(k,): coeffs[k][i][j] for k in range(len(coeffs))}) for j in range(r)]
        for i in range(r)])


def solve_matrix_ode(p: OdeProblem) -> SeriesMatrix:
    """Order-by-order solution: ``(k+1) g_{k+1} = -sum_{i+j=k} g_i a_j``, ``g_0 = I``."""
    if p.prec < 1:
        raise PrecisionError("ODE needs prec >= 1")
    r, prec = p.rank, p.prec
    a = [p.coefficient(k) for k in range(prec)]
    g = [[[Fraction(int(i == j)) for j in range(r)] for i in range(r)]]
    for k in range(prec):
        acc = [[Fraction(0)] * r for _ in range(r)]
        for i in range(k + 1):
            prod = _rat_matmul(g[i], a[k - i])
            acc = [[x + y for x, y in zip(ra, rp)] for ra, rp in zip(acc, prod)]
        g.append([[-x / (k + 1) for x in row] for row in acc])
    return _from_coefficients(g, r, prec)


def exp_method(p: OdeProblem) -> SeriesMatrix:
    """``exp(-c)`` with ``c = sum (k+1)^-1 t^(k+1) a_k``; no claim that it solves the ODE."""
    if p.prec < 1:
        raise PrecisionError("ODE needs prec >= 1")
    c = p.b.map(lambda s: s.integrate(0, cap=p.prec))
    return (-c).exp()


def residual(g: SeriesMatrix, p: OdeProblem) -> SeriesMatrix:
    """``d(g) + g . b``, known to ``min(g.prec, b.prec) - 1``."""
    if g.shape != p.b.shape or g.nvars != 1:
        raise DimensionError(f"solution of shape {g.shape} for rank {p.rank}")
    prec = min(g.prec, p.prec)
    g = g.truncate(prec)
    return g.partial(0) + g @ p.b


def bjork_counterexample(prec: int = 8) -> OdeProblem:
    """``b = d(c)`` for ``c = t a_1 + t^2 a_2``, i.e. ``b = a_1 + 2t a_2``."""
    a1 = SeriesMatrix.constant(BJORK_A1, 1, prec)
    t = Series.var(0, 1, prec)
    a2t = SeriesMatrix([[t.scale(2 * x) for x in row] for row in BJORK_A2])
    return OdeProblem(a1 + a2t)


def riemann_product(p: OdeProblem, parts: int) -> SeriesMatrix:
    """Ordered product ``prod_{k=1..K} (I - (t/K) b((k/K) t))``, smallest node leftmost.

    ``g(t + h) ~ g(t)(I - h b(t))``: each later step multiplies on the right.
    """
    if parts < 1:
        raise ValueError("partition count must be >= 1")
    r, prec = p.rank, p.prec
    eye = SeriesMatrix.identity(r, 1, prec)
    acc = eye
    for k in range(1, parts + 1):
        node = Fraction(k, parts)
        step = p.b.map(lambda s: s.substitute_scale([node]).shift(0, 1, cap=prec)
                       .scale(Fraction(-1, parts)))
        acc = acc @ (eye + step)
    return acc


def commuting_family_check(p: OdeProblem) -> bool:
    """Do the coefficient matrices ``a_0 .. a_prec`` pairwise commute?"""
    mats = [p.coefficient(k) for k in range(p.prec + 1)]
    mats = [m for m in mats if any(x for row in m for x in row)]
    return all(_rat_matmul(x, y) == _rat_matmul(y, x) for x, y in combinations(mats, 2))
