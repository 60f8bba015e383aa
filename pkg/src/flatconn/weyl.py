"""
Differential operators with power-series coefficients (the Weyl algebra).

An operator is stored in normal form ``sum_k b_k * d^k``: series coefficients
to the left of the monomials ``d^k = d_1^k_1 ... d_n^k_n``.  Composition
moves every ``d`` past a coefficient with ``d_i b = b d_i + d_i(b)``; each such
step spends one degree of that coefficient's precision.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb, factorial, prod
from itertools import product
from typing import Mapping, Sequence

from .series import DimensionError, PrecisionError, Series, partial_derivative

__all__ = [
    "DiffOperator",
    "apply",
    "compose",
    "commutator",
    "psi_component",
    "derivation",
    "multiplication",
    "divided_power",
]

Exponent = tuple[int, ...]


def _derive(s: Series, k: Exponent) -> Series:
    for j, times in enumerate(k):
        for _ in range(times):
            s = partial_derivative(s, j)
    return s


class DiffOperator:
    """A finite sum ``sum_k b_k * d^k`` with :class:`Series` coefficients."""

    __slots__ = ("nvars", "_terms")

    def __init__(self, nvars: int, terms: Mapping[Sequence[int], Series] | None = None):
        clean: dict[Exponent, Series] = {}
        for k, b in (terms or {}).items():
            k = tuple(int(x) for x in k)
            if len(k) != nvars or b.nvars != nvars:
                raise DimensionError(f"term {k} does not match nvars={nvars}")
            if k in clean:
                b = clean[k] + b
            clean[k] = b
        self.nvars = nvars
        self._terms = {k: clean[k] for k in sorted(clean) if not clean[k].is_zero()}

    @property
    def terms(self) -> dict[Exponent, Series]:
        return dict(self._terms)

    @property
    def order(self) -> int:
        """Differential order; 0 for the zero operator."""
        return max((sum(k) for k in self._terms), default=0)

    def coefficient(self, k: Sequence[int]) -> Series | None:
        return self._terms.get(tuple(k))

    def is_zero(self) -> bool:
        return not self._terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiffOperator):
            return NotImplemented
        return self.nvars == other.nvars and self._terms == other._terms

    def __hash__(self) -> int:
        return hash((self.nvars, tuple(self._terms.items())))

    def __repr__(self) -> str:
        if not self._terms:
            return "DiffOperator(0)"
        parts = []
        for k, b in self._terms.items():
            d = "*".join(
                ("d" if self.nvars == 1 else f"d{j + 1}") + (f"^{e}" if e > 1 else "")
                for j, e in enumerate(k) if e)
            parts.append(f"({b})" + (f"*{d}" if d else ""))
        return "DiffOperator(" + " + ".join(parts) + ")"

    def __add__(self, other: DiffOperator) -> DiffOperator:
        if self.nvars != other.nvars:
            raise DimensionError("nvars differ")
        terms = dict(self._terms)
        for k, b in other._terms.items():
            terms[k] = terms[k] + b if k in terms else b
        return DiffOperator(self.nvars, terms)

    def __neg__(self) -> DiffOperator:
        return DiffOperator(self.nvars, {k: -b for k, b in self._terms.items()})

    def __sub__(self, other: DiffOperator) -> DiffOperator:
        return self + (-other)

    def __matmul__(self, other: DiffOperator) -> DiffOperator:
        return compose(self, other)

    def __call__(self, s: Series) -> Series:
        return apply(self, s)


def derivation(j: int, nvars: int, prec: int) -> DiffOperator:
    """The operator ``d_j`` (coefficient 1 known to ``prec``)."""
    k = [0] * nvars
    k[j] = 1
    return DiffOperator(nvars, {tuple(k): Series.one(nvars, prec)})


def multiplication(b: Series) -> DiffOperator:
    """Multiplication by ``b`` as an order-0 operator."""
    return DiffOperator(b.nvars, {(0,) * b.nvars: b})


def divided_power(k: Sequence[int], nvars: int, prec: int) -> DiffOperator:
    """``d^k / k!``, dual to the monomial ``t^k``."""
    k = tuple(k)
    c = Fraction(1, prod(factorial(x) for x in k))
    return DiffOperator(nvars, {k: Series.const(c, nvars, prec)})


def apply(op: DiffOperator, s: Series) -> Series:
    if op.nvars != s.nvars:
        raise DimensionError("operator and series disagree on nvars")
    if s.prec < op.order:
        raise PrecisionError(f"series prec {s.prec} below operator order {op.order}")
    acc = Series.zero(s.nvars, s.prec - op.order)
    for k, b in op._terms.items():
        acc = acc + b * _derive(s, k)
    return acc


def compose(p: DiffOperator, q: DiffOperator) -> DiffOperator:
    """Normal form of ``p o q``.

    ``d^k b = sum_{m <= k} C(k, m) d^m(b) d^(k-m)`` (multi-index Leibniz).
    """
    if p.nvars != q.nvars:
        raise DimensionError("nvars differ")
    n = p.nvars
    terms: dict[Exponent, Series] = {}
    for k, a in p._terms.items():
        for l, b in q._terms.items():
            for m in product(*(range(x + 1) for x in k)):
                if sum(m) > b.prec:
                    raise PrecisionError(
                        f"rewriting d^{k} past a coefficient of prec {b.prec} exhausts it")
                c = prod(comb(x, y) for x, y in zip(k, m))
                coef = a * _derive(b, m).scale(c)
                target = tuple(x - y + z for x, y, z in zip(k, m, l))
                terms[target] = terms[target] + coef if target in terms else coef
    return DiffOperator(n, terms)


def commutator(p: DiffOperator, q: DiffOperator) -> DiffOperator:
    return compose(p, q) - compose(q, p)


def psi_component(j: int, i: int, cap: int, nvars: int = 1) -> DiffOperator:
    """``(-t_j)^i / i! * d_j^i`` with its coefficient known to ``cap``."""
    if i > cap:
        raise PrecisionError(f"component {i} exceeds cap {cap}")
    if not 0 <= j < nvars:
        raise DimensionError(f"variable index {j} out of range")
    e = [0] * nvars
    e[j] = i
    coef = Series.monomial(e, nvars, cap, Fraction((-1) ** i, factorial(i)))
    return DiffOperator(nvars, {tuple(e): coef})
