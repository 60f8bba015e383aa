"""
Truncated multivariate power series over the rationals.

A :class:`Series` in ``n`` variables is known exactly for every monomial of
total degree ``<= prec``; everything above is unknown. All arithmetic keeps
track of how much of the result is still certain:

* ``a + b`` and ``a * b`` are exact up to ``min(a.prec, b.prec)``;
* a partial derivative loses one degree;
* multiplying by ``t_j**i`` gains ``i`` degrees (up to an optional cap).

Variables are indexed from 0 in the API.  They are *displayed* as ``t`` (one
variable) or ``t1, t2, ...``.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

__all__ = [
    "Series",
    "SeriesMatrix",
    "DimensionError",
    "PrecisionError",
    "NotAUnitError",
    "add",
    "mul",
    "partial_derivative",
    "mul_by_var_power",
    "integrate",
    "exp",
    "invert",
    "matrix_mul",
    "matrix_exp",
    "matrix_partial",
    "vec_mat",
    "solve_rational",
]

Exponent = tuple[int, ...]


class DimensionError(ValueError):
    """Operands live in different ambient rings or have incompatible shapes."""


class PrecisionError(ValueError):
    """An operation would leave no exactly known coefficients."""


class NotAUnitError(ValueError):
    pass


def _degree(e: Exponent) -> int:
    return sum(e)


def _var_name(j: int, nvars: int) -> str:
    return "t" if nvars == 1 else f"t{j + 1}"


def _monomial_str(e: Exponent) -> str:
    parts = []
    for j, k in enumerate(e):
        if k == 0:
            continue
        name = _var_name(j, len(e))
        parts.append(name if k == 1 else f"{name}^{k}")
    return "*".join(parts)


class Series:
    """An element of Q[[t_1..t_n]] known up to total degree ``prec``.

    ``coeffs`` may contain zeros and terms above ``prec``; both are dropped on
    construction, so stored data always satisfies the invariants.
    """

    __slots__ = ("nvars", "prec", "_coeffs", "_hash")

    def __init__(self, nvars: int, prec: int, coeffs: Mapping[Exponent, object] | None = None):
        if nvars < 1:
            raise ValueError("nvars must be >= 1")
        if prec < 0:
            raise PrecisionError(f"negative precision {prec}")
        clean: dict[Exponent, Fraction] = {}
        for e, c in (coeffs or {}).items():
            e = tuple(int(k) for k in e)
            if len(e) != nvars:
                raise DimensionError(f"exponent {e} has length != {nvars}")
            if any(k < 0 for k in e):
                raise ValueError(f"negative exponent {e}")
            if _degree(e) > prec:
                continue
            c = Fraction(c)
            if c:
                clean[e] = clean.get(e, 0) + c
        self.nvars = nvars
        self.prec = prec
        self._coeffs = {e: clean[e] for e in sorted(clean) if clean[e]}
        self._hash = None

    # -- constructors -----------------------------------------------------

    @classmethod
    def _raw(cls, nvars: int, prec: int, coeffs: dict[Exponent, Fraction]) -> Series:
        # trusted path: coeffs already pruned and within prec
        s = object.__new__(cls)
        s.nvars = nvars
        s.prec = prec
        s._coeffs = {e: coeffs[e] for e in sorted(coeffs)}
        s._hash = None
        return s

    @classmethod
    def zero(cls, nvars: int, prec: int) -> Series:
        return cls(nvars, prec)

    @classmethod
    def const(cls, value, nvars: int, prec: int) -> Series:
        return cls(nvars, prec, {(0,) * nvars: value})

    @classmethod
    def one(cls, nvars: int, prec: int) -> Series:
        return cls.const(1, nvars, prec)

    @classmethod
    def monomial(cls, exponent: Sequence[int], nvars: int, prec: int, coef=1) -> Series:
        return cls(nvars, prec, {tuple(exponent): coef})

    @classmethod
    def var(cls, j: int, nvars: int, prec: int) -> Series:
        e = [0] * nvars
        e[j] = 1
        return cls(nvars, prec, {tuple(e): 1})

    @classmethod
    def univariate(cls, coeffs: Sequence, prec: int) -> Series:
        """One-variable series from a list ``[c0, c1, ...]``."""
        return cls(1, prec, {(k,): c for k, c in enumerate(coeffs)})

    # -- inspection -------------------------------------------------------

    @property
    def coeffs(self) -> dict[Exponent, Fraction]:
        return dict(self._coeffs)

    def items(self) -> Iterator[tuple[Exponent, Fraction]]:
        """Stored terms in lexicographic exponent order."""
        return iter(self._coeffs.items())

    def __getitem__(self, e) -> Fraction:
        if isinstance(e, int):
            e = (e,)
        e = tuple(e)
        if _degree(e) > self.prec:
            raise PrecisionError(f"coefficient of degree {_degree(e)} unknown at prec {self.prec}")
        return self._coeffs.get(e, Fraction(0))

    def constant(self) -> Fraction:
        return self._coeffs.get((0,) * self.nvars, Fraction(0))

    def order(self) -> int | None:
        """The adic order; ``None`` means zero up to ``prec`` (order > prec)."""
        if not self._coeffs:
            return None
        return min(_degree(e) for e in self._coeffs)

    def has_order_at_least(self, i: int) -> bool:
        return all(_degree(e) >= i for e in self._coeffs)

    def is_zero(self) -> bool:
        return not self._coeffs

    def __bool__(self) -> bool:
        return bool(self._coeffs)

    def __len__(self) -> int:
        return len(self._coeffs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Series):
            return NotImplemented
        return (self.nvars, self.prec, self._coeffs) == (other.nvars, other.prec, other._coeffs)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nvars, self.prec, tuple(self._coeffs.items())))
        return self._hash

    def __repr__(self) -> str:
        return f"Series({self}, nvars={self.nvars})"

    def __str__(self) -> str:
        parts = []
        for e, c in self._coeffs.items():
            mono = _monomial_str(e)
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        body = " + ".join(parts).replace("+ -", "- ") if parts else "0"
        return f"{body} + O({self.prec + 1})"

    # -- precision --------------------------------------------------------

    def project(self, prec: int) -> Series:
        """Forget everything above total degree ``prec``."""
        if prec > self.prec:
            raise PrecisionError(f"cannot raise precision {self.prec} to {prec}")
        if prec == self.prec:
            return self
        return Series._raw(self.nvars, prec,
                           {e: c for e, c in self._coeffs.items() if _degree(e) <= prec})

    def with_prec(self, prec: int) -> Series:
        """Reinterpret as an exact polynomial known to ``prec``.

        Only sound when the series is known to be a polynomial (e.g. a
        literal); it may *raise* precision.
        """
        return Series(self.nvars, prec, self._coeffs)

    # -- arithmetic -------------------------------------------------------

    def _check(self, other: Series) -> None:
        if self.nvars != other.nvars:
            raise DimensionError(f"nvars differ: {self.nvars} vs {other.nvars}")

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Series.const(other, self.nvars, self.prec)
        if not isinstance(other, Series):
            return NotImplemented
        return add(self, other)

    __radd__ = __add__

    def __neg__(self) -> Series:
        return Series._raw(self.nvars, self.prec, {e: -c for e, c in self._coeffs.items()})

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Series.const(other, self.nvars, self.prec)
        if not isinstance(other, Series):
            return NotImplemented
        return add(self, -other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, Series):
            return NotImplemented
        return mul(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, k: int) -> Series:
        if k < 0:
            return invert(self) ** (-k)
        result = Series.one(self.nvars, self.prec)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def scale(self, c) -> Series:
        c = Fraction(c)
        if not c:
            return Series.zero(self.nvars, self.prec)
        return Series._raw(self.nvars, self.prec, {e: c * v for e, v in self._coeffs.items()})

    def partial(self, j: int) -> Series:
        return partial_derivative(self, j)

    def shift(self, j: int, i: int, cap: int | None = None) -> Series:
        return mul_by_var_power(self, j, i, cap)

    def integrate(self, j: int, cap: int | None = None) -> Series:
        return integrate(self, j, cap)

    def exp(self) -> Series:
        return exp(self)

    def invert(self) -> Series:
        return invert(self)

    def substitute_scale(self, factors: Sequence) -> Series:
        """Substitute ``t_j -> factors[j] * t_j``."""
        fs = [Fraction(f) for f in factors]
        out = {}
        for e, c in self._coeffs.items():
            for f, k in zip(fs, e):
                c *= f ** k
            if c:
                out[e] = c
        return Series._raw(self.nvars, self.prec, out)


def add(a: Series, b: Series) -> Series:
    a._check(b)
    p = min(a.prec, b.prec)
    out = {e: c for e, c in a._coeffs.items() if _degree(e) <= p}
    for e, c in b._coeffs.items():
        if _degree(e) > p:
            continue
        v = out.get(e, 0) + c
        if v:
            out[e] = v
        else:
            out.pop(e, None)
    return Series._raw(a.nvars, p, out)


def mul(a: Series, b: Series) -> Series:
    """Truncated Cauchy product."""
    a._check(b)
    p = min(a.prec, b.prec)
    bterms = sorted(((_degree(e), e, c) for e, c in b._coeffs.items()), key=lambda x: x[0])
    out: dict[Exponent, Fraction] = {}
    for ea, ca in a._coeffs.items():
        da = _degree(ea)
        room = p - da
        if room < 0:
            continue
        for db, eb, cb in bterms:
            if db > room:
                break
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out.get(e, 0) + ca * cb
    return Series._raw(a.nvars, p, {e: c for e, c in out.items() if c})


def partial_derivative(a: Series, j: int) -> Series:
    if not 0 <= j < a.nvars:
        raise DimensionError(f"variable index {j} out of range for nvars={a.nvars}")
    if a.prec < 1:
        raise PrecisionError("derivative of a prec-0 series carries no exact data")
    out = {}
    for e, c in a._coeffs.items():
        k = e[j]
        if k == 0:
            continue
        out[e[:j] + (k - 1,) + e[j + 1:]] = c * k
    return Series._raw(a.nvars, a.prec - 1, out)


def mul_by_var_power(a: Series, j: int, i: int, cap: int | None = None) -> Series:
    """Multiply by ``t_j**i``; precision grows by ``i`` but never beyond ``cap``."""
    if not 0 <= j < a.nvars:
        raise DimensionError(f"variable index {j} out of range for nvars={a.nvars}")
    p = a.prec + i if cap is None else min(cap, a.prec + i)
    out = {}
    for e, c in a._coeffs.items():
        if _degree(e) + i > p:
            continue
        out[e[:j] + (e[j] + i,) + e[j + 1:]] = c
    return Series._raw(a.nvars, p, out)


def integrate(a: Series, j: int, cap: int | None = None) -> Series:
    """Antiderivative in ``t_j`` with no ``t_j``-free part."""
    if not 0 <= j < a.nvars:
        raise DimensionError(f"variable index {j} out of range for nvars={a.nvars}")
    p = a.prec + 1 if cap is None else min(cap, a.prec + 1)
    out = {}
    for e, c in a._coeffs.items():
        if _degree(e) + 1 > p:
            continue
        k = e[j] + 1
        out[e[:j] + (k,) + e[j + 1:]] = c / k
    return Series._raw(a.nvars, p, out)


def exp(a: Series) -> Series:
    if a.constant():
        raise ValueError("exp needs a series with zero constant term")
    # Horner: 1 + a(1 + a/2(1 + a/3(...)))
    one = Series.one(a.nvars, a.prec)
    acc = one
    for k in range(max(a.prec, 0), 0, -1):
        acc = one + (a * acc).scale(Fraction(1, k))
    return acc


def invert(a: Series) -> Series:
    c = a.constant()
    if not c:
        raise NotAUnitError("series with zero constant term is not invertible")
    # a = c(1 - u), 1/a = (1/c) * sum u^k
    u = Series.one(a.nvars, a.prec) - a.scale(1 / c)
    one = Series.one(a.nvars, a.prec)
    acc = one
    for _ in range(a.prec):
        acc = one + u * acc
    return acc.scale(1 / c)


# -- matrices ------------------------------------------------------------


class SeriesMatrix:
    """A dense matrix of :class:`Series` sharing ``nvars``."""

    __slots__ = ("rows", "nrows", "ncols", "nvars")

    def __init__(self, rows: Iterable[Iterable[Series]]):
        rows = tuple(tuple(r) for r in rows)
        if not rows or not rows[0]:
            raise DimensionError("empty matrix")
        ncols = len(rows[0])
        if any(len(r) != ncols for r in rows):
            raise DimensionError("ragged matrix")
        nvars = rows[0][0].nvars
        if any(s.nvars != nvars for r in rows for s in r):
            raise DimensionError("entries disagree on nvars")
        self.rows = rows
        self.nrows = len(rows)
        self.ncols = ncols
        self.nvars = nvars

    @classmethod
    def identity(cls, n: int, nvars: int, prec: int) -> SeriesMatrix:
        return cls([[Series.const(int(i == j), nvars, prec) for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, nrows: int, ncols: int, nvars: int, prec: int) -> SeriesMatrix:
        return cls([[Series.zero(nvars, prec)] * ncols for _ in range(nrows)])

    @classmethod
    def constant(cls, values: Sequence[Sequence], nvars: int, prec: int) -> SeriesMatrix:
        return cls([[Series.const(v, nvars, prec) for v in row] for row in values])

    @property
    def shape(self) -> tuple[int, int]:
        return self.nrows, self.ncols

    @property
    def prec(self) -> int:
        return min(s.prec for r in self.rows for s in r)

    def __getitem__(self, ij) -> Series:
        i, j = ij
        return self.rows[i][j]

    def __iter__(self):
        return iter(self.rows)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SeriesMatrix):
            return NotImplemented
        return self.rows == other.rows

    def __hash__(self) -> int:
        return hash(self.rows)

    def __repr__(self) -> str:
        return "SeriesMatrix([\n" + "\n".join(
            "  [" + ", ".join(str(s) for s in r) + "]" for r in self.rows) + "\n])"

    def map(self, fn) -> SeriesMatrix:
        return SeriesMatrix([[fn(s) for s in r] for r in self.rows])

    def project(self, prec: int) -> SeriesMatrix:
        return self.map(lambda s: s.project(prec))

    def truncate(self, prec: int) -> SeriesMatrix:
        """Project every entry to ``min(entry.prec, prec)``."""
        return self.map(lambda s: s.project(min(prec, s.prec)))

    def _same_shape(self, other: SeriesMatrix) -> None:
        if self.shape != other.shape:
            raise DimensionError(f"shape mismatch {self.shape} vs {other.shape}")

    def __add__(self, other: SeriesMatrix) -> SeriesMatrix:
        self._same_shape(other)
        return SeriesMatrix([[a + b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __sub__(self, other: SeriesMatrix) -> SeriesMatrix:
        self._same_shape(other)
        return SeriesMatrix([[a - b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __neg__(self) -> SeriesMatrix:
        return self.map(lambda s: -s)

    def __matmul__(self, other: SeriesMatrix) -> SeriesMatrix:
        return matrix_mul(self, other)

    def scale(self, c) -> SeriesMatrix:
        return self.map(lambda s: s.scale(c))

    def partial(self, j: int) -> SeriesMatrix:
        return matrix_partial(self, j)

    def exp(self) -> SeriesMatrix:
        return matrix_exp(self)

    def inverse(self) -> SeriesMatrix:
        return matrix_inverse(self)

    def constant_part(self) -> list[list[Fraction]]:
        return [[s.constant() for s in r] for r in self.rows]

    def coefficient(self, exponent) -> list[list[Fraction]]:
        """The rational matrix multiplying ``t**exponent``."""
        return [[s[exponent] for s in r] for r in self.rows]

    def is_zero(self) -> bool:
        return all(s.is_zero() for r in self.rows for s in r)

    def order(self) -> int | None:
        orders = [s.order() for r in self.rows for s in r if not s.is_zero()]
        return min(orders) if orders else None


def matrix_mul(a: SeriesMatrix, b: SeriesMatrix) -> SeriesMatrix:
    if a.ncols != b.nrows:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    if a.nvars != b.nvars:
        raise DimensionError("nvars differ")
    cols = list(zip(*b.rows))
    out = []
    for r in a.rows:
        out.append([_dot(r, c) for c in cols])
    return SeriesMatrix(out)


def _dot(u: Sequence[Series], v: Sequence[Series]) -> Series:
    acc = u[0] * v[0]
    for x, y in zip(u[1:], v[1:]):
        acc = acc + x * y
    return acc


def vec_mat(v: Sequence[Series], m: SeriesMatrix) -> tuple[Series, ...]:
    """Row vector times matrix."""
    if len(v) != m.nrows:
        raise DimensionError(f"vector of length {len(v)} against {m.shape} matrix")
    return tuple(_dot(v, col) for col in zip(*m.rows))


def matrix_partial(m: SeriesMatrix, j: int) -> SeriesMatrix:
    return m.map(lambda s: partial_derivative(s, j))


def matrix_exp(m: SeriesMatrix) -> SeriesMatrix:
    if m.nrows != m.ncols:
        raise DimensionError("exp of a non-square matrix")
    if any(s.constant() for r in m.rows for s in r):
        raise ValueError("matrix exp needs every entry in the maximal ideal")
    n, p = m.nrows, m.prec
    eye = SeriesMatrix.identity(n, m.nvars, p)
    acc = eye
    for k in range(p, 0, -1):
        acc = eye + (m @ acc).scale(Fraction(1, k))
    return acc


def solve_rational(a: Sequence[Sequence]) -> list[list[Fraction]]:
    """Inverse of a square rational matrix by Gauss-Jordan elimination."""
    n = len(a)
    aug = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
           for i, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col]), None)
        if piv is None:
            raise NotAUnitError("singular constant part")
        aug[col], aug[piv] = aug[piv], aug[col]
        pv = aug[col][col]
        aug[col] = [x / pv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def matrix_inverse(m: SeriesMatrix) -> SeriesMatrix:
    """Inverse in GL_r of the series ring; the constant part must be invertible."""
    if m.nrows != m.ncols:
        raise DimensionError("inverse of a non-square matrix")
    n, p = m.nrows, m.prec
    c_inv = SeriesMatrix.constant(solve_rational(m.constant_part()), m.nvars, p)
    # m = C (I - U)  =>  m^-1 = (sum U^k) C^-1
    eye = SeriesMatrix.identity(n, m.nvars, p)
    u = eye - c_inv @ m
    acc = eye
    for _ in range(p):
        acc = eye + u @ acc
    return acc @ c_inv
