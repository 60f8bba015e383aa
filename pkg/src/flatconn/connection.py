"""
Free finite-rank modules with a flat connection over truncated series.

Elements are row vectors ``v`` of :class:`Series` (coordinates in a fixed
basis ``m'``).  The derivation ``d_j`` acts by::

    D_j(v) = d_j(v) + v . A_j

so that the basis change ``m = g . m'`` is horizontal exactly when
``d_j(g) + g . A_j = 0``.  With this convention ``[D_i, D_j] v = v . F_ij``
where ``F_ij = d_i(A_j) - d_j(A_i) + A_j A_i - A_i A_j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Sequence

from .series import (
    DimensionError,
    PrecisionError,
    Series,
    SeriesMatrix,
    matrix_inverse,
    vec_mat,
)

__all__ = [
    "Connection",
    "FlatnessReport",
    "NotFlatError",
    "basis_vector",
    "d_apply",
    "curvature",
    "is_flat",
    "psi_apply",
    "psi_full",
    "horizontal_basis",
    "decompose",
    "solve_unique",
    "trivialize",
    "gauge_transform",
    "horizontality_residuals",
    "element_order",
]

Element = tuple[Series, ...]


@dataclass(frozen=True)
class Connection:
    """Connection matrices ``A_1..A_n`` (stored 0-indexed) of a rank-``r`` module."""

    matrices: tuple[SeriesMatrix, ...]

    def __post_init__(self):
        object.__setattr__(self, "matrices", tuple(self.matrices))
        if not self.matrices:
            raise DimensionError("a connection needs at least one matrix")
        r = self.matrices[0].nrows
        n = self.matrices[0].nvars
        for a in self.matrices:
            if a.shape != (r, r):
                raise DimensionError(f"connection matrix of shape {a.shape}, expected {(r, r)}")
            if a.nvars != n:
                raise DimensionError("connection matrices disagree on nvars")
        if len(self.matrices) != n:
            raise DimensionError(f"{len(self.matrices)} matrices for {n} variables")
        if self.prec < 1:
            raise PrecisionError("connection precision must be >= 1")

    @property
    def nvars(self) -> int:
        return self.matrices[0].nvars

    @property
    def rank(self) -> int:
        return self.matrices[0].nrows

    @property
    def prec(self) -> int:
        return min(a.prec for a in self.matrices)

    @classmethod
    def zero(cls, nvars: int, rank: int, prec: int) -> Connection:
        return cls(tuple(SeriesMatrix.zeros(rank, rank, nvars, prec) for _ in range(nvars)))

    def project(self, prec: int) -> Connection:
        return Connection(tuple(a.project(prec) for a in self.matrices))

    def basis(self) -> list[Element]:
        return [basis_vector(i, self.rank, self.nvars, self.prec) for i in range(self.rank)]

    def zero_element(self) -> Element:
        return tuple(Series.zero(self.nvars, self.prec) for _ in range(self.rank))


class NotFlatError(ValueError):
    def __init__(self, report: FlatnessReport):
        super().__init__(f"connection is not flat: {report.describe()}")
        self.report = report


@dataclass(frozen=True)
class FlatnessReport:
    flat: bool
    depth: int  # curvature is certified through this total degree
    pair: tuple[int, int] | None = None
    entry: tuple[int, int] | None = None
    exponent: tuple[int, ...] | None = None
    coef: Fraction | None = None

    def __bool__(self) -> bool:
        return self.flat

    def describe(self) -> str:
        if self.flat:
            return f"flat through degree {self.depth}"
        i, j = self.pair
        r, c = self.entry
        return (f"curvature F[{i + 1},{j + 1}] entry ({r + 1},{c + 1}) has coefficient "
                f"{self.coef} at exponent {list(self.exponent)}")


def basis_vector(i: int, rank: int, nvars: int, prec: int) -> Element:
    return tuple(Series.const(int(i == k), nvars, prec) for k in range(rank))


def _check_element(c: Connection, v: Sequence[Series]) -> None:
    if len(v) != c.rank:
        raise DimensionError(f"element of length {len(v)} for rank {c.rank}")
    if any(s.nvars != c.nvars for s in v):
        raise DimensionError("element and connection disagree on nvars")


def element_prec(v: Sequence[Series]) -> int:
    return min(s.prec for s in v)


def element_order(v: Sequence[Series]) -> int | None:
    orders = [s.order() for s in v if not s.is_zero()]
    return min(orders) if orders else None


def _add(u: Sequence[Series], v: Sequence[Series]) -> Element:
    return tuple(a + b for a, b in zip(u, v))


def _sub(u: Sequence[Series], v: Sequence[Series]) -> Element:
    return tuple(a - b for a, b in zip(u, v))


def d_apply(c: Connection, j: int, v: Sequence[Series]) -> Element:
    """``D_j(v) = d_j(v) + v . A_j``."""
    _check_element(c, v)
    if not 0 <= j < c.nvars:
        raise DimensionError(f"variable index {j} out of range")
    if element_prec(v) < 1:
        raise PrecisionError("cannot differentiate a prec-0 element")
    va = vec_mat(v, c.matrices[j])
    return tuple(s.partial(j) + w for s, w in zip(v, va))


def curvature(c: Connection, i: int, j: int) -> SeriesMatrix:
    """``F_ij``, the matrix of ``[D_i, D_j]`` acting on row vectors."""
    ai, aj = c.matrices[i], c.matrices[j]
    return aj.partial(i) - ai.partial(j) + aj @ ai - ai @ aj


def is_flat(c: Connection) -> FlatnessReport:
    if c.nvars == 1:
        return FlatnessReport(True, c.prec - 1)
    if c.prec < 2:
        raise PrecisionError("flatness needs prec >= 2")
    depth = c.prec - 1
    best = None
    for i in range(c.nvars):
        for j in range(i + 1, c.nvars):
            f = curvature(c, i, j)
            for r, row in enumerate(f.rows):
                for col, s in enumerate(row):
                    for e, coef in s.items():
                        key = (sum(e), (i, j), (r, col), e)
                        if best is None or key < best[0]:
                            best = (key, coef)
    if best is None:
        return FlatnessReport(True, depth)
    (_, pair, entry, e), coef = best
    return FlatnessReport(False, depth, pair, entry, e, coef)


def _require_flat(c: Connection) -> None:
    report = is_flat(c)
    if not report:
        raise NotFlatError(report)


def psi_apply(c: Connection, j: int, v: Sequence[Series]) -> Element:
    """Fused ``sum_i (-t_j)^i / i! * D_j^i(v)``; output keeps the input precision."""
    _check_element(c, v)
    cap = element_prec(v)
    total = tuple(v)
    term = tuple(v)
    i = 0
    while element_prec(term) >= 1:
        term = d_apply(c, j, term)
        i += 1
        w = Fraction((-1) ** i, factorial(i))
        total = _add(total, tuple(s.shift(j, i, cap).scale(w) for s in term))
    return total


def psi_full(c: Connection, v: Sequence[Series], order: Sequence[int] | None = None,
             check: bool = True) -> Element:
    """Project ``v`` onto the horizontal elements.

    Applies the one-variable projection for ``t_n`` first, then ``t_(n-1)``,
    down to ``t_1``; ``order`` overrides this (0-based variable indices).
    """
    if check:
        _require_flat(c)
    if order is None:
        order = range(c.nvars - 1, -1, -1)
    out = tuple(v)
    for j in order:
        out = psi_apply(c, j, out)
    return out


def horizontal_basis(c: Connection, check: bool = True) -> SeriesMatrix:
    """Rows are ``psi_full(e_i)``; satisfies ``d_j(g) + g A_j = 0``."""
    if check:
        _require_flat(c)
    return SeriesMatrix([psi_full(c, e, check=False) for e in c.basis()])


def decompose(c: Connection, v: Sequence[Series]) -> tuple[Element, Element]:
    """Split ``v`` into a horizontal part and a part in the maximal ideal."""
    h = psi_full(c, v)
    return h, _sub(v, h)


def solve_unique(c: Connection, values: Sequence) -> Element:
    """The horizontal element whose constant term is ``values``."""
    if len(values) != c.rank:
        raise DimensionError(f"{len(values)} initial values for rank {c.rank}")
    g = horizontal_basis(c)
    row = tuple(Series.const(x, c.nvars, c.prec) for x in values)
    return vec_mat(row, g)


def trivialize(c: Connection) -> tuple[SeriesMatrix, SeriesMatrix]:
    g = horizontal_basis(c)
    return g, matrix_inverse(g)


def gauge_transform(c: Connection, g: SeriesMatrix, g_inv: SeriesMatrix) -> Connection:
    """Connection matrices in the basis ``g . m'``: ``(d_j g + g A_j) g^-1``."""
    return Connection(tuple((g.partial(j) + g @ a) @ g_inv for j, a in enumerate(c.matrices)))


def horizontality_residuals(c: Connection, g: SeriesMatrix) -> list[SeriesMatrix]:
    """``d_j(g) + g A_j`` for every ``j``; all zero iff the rows of ``g`` are horizontal."""
    return [g.partial(j) + g @ a for j, a in enumerate(c.matrices)]
