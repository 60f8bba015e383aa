"""
Seeded random instances: series, flat connections, ODE problems.

Every generator takes a :class:`random.Random` so runs are reproducible.
Flat two-variable connections come from families that are flat by
construction (see :func:`random_flat_connection`).
"""

from __future__ import annotations

import random
from fractions import Fraction

from .connection import Connection
from .ode import OdeProblem
from .series import Series, SeriesMatrix, solve_rational

__all__ = [
    "random_rational",
    "random_series",
    "random_matrix",
    "random_invertible_constant",
    "random_flat_connection",
    "random_ode_problem",
    "random_commuting_problem",
    "random_noncommuting_problem",
    "FLAT_FAMILIES",
]

BOUND = 10


def random_rational(rng: random.Random, bound: int = BOUND, nonzero: bool = False) -> Fraction:
    while True:
        x = Fraction(rng.randint(-bound, bound), rng.randint(1, bound))
        if x or not nonzero:
            return x


def random_series(rng: random.Random, nvars: int, prec: int, density: float = 0.4,
                  min_degree: int = 0, max_degree: int | None = None) -> Series:
    top = prec if max_degree is None else min(prec, max_degree)
    coeffs = {}
    for e in _exponents(nvars, top):
        if sum(e) >= min_degree and rng.random() < density:
            coeffs[e] = random_rational(rng, nonzero=True)
    return Series(nvars, prec, coeffs)


def _exponents(nvars: int, top: int):
    if nvars == 1:
        for k in range(top + 1):
            yield (k,)
        return
    for k in range(top + 1):
        for rest in _exponents(nvars - 1, top - k):
            yield (k,) + rest


def random_matrix(rng: random.Random, rows: int, cols: int, nvars: int, prec: int,
                  density: float = 0.3, **kw) -> SeriesMatrix:
    return SeriesMatrix([[random_series(rng, nvars, prec, density, **kw) for _ in range(cols)]
                         for _ in range(rows)])


def random_invertible_constant(rng: random.Random, r: int, bound: int = 3) -> list[list[Fraction]]:
    while True:
        m = [[Fraction(rng.randint(-bound, bound)) for _ in range(r)] for _ in range(r)]
        try:
            solve_rational(m)
        except ValueError:
            continue
        return m


def _conjugate(a: SeriesMatrix, p, p_inv) -> SeriesMatrix:
    nv, prec = a.nvars, a.prec
    return (SeriesMatrix.constant(p_inv, nv, prec) @ a) @ SeriesMatrix.constant(p, nv, prec)


def _one_variable_pullback(rng, rank, prec):
    # A_1 depends on t1 only, A_2 = 0
    a1 = SeriesMatrix([[random_series(rng, 1, prec, 0.35) for _ in range(rank)]
                       for _ in range(rank)])
    lift = a1.map(lambda s: Series(2, prec, {(e[0], 0): c for e, c in s.items()}))
    return Connection((lift, SeriesMatrix.zeros(rank, rank, 2, prec)))


def _exact_form(rng, rank, prec):
    # A_j = d_j(phi) X for a fixed constant X
    phi = random_series(rng, 2, prec + 1, 0.3, min_degree=1)
    x = [[random_rational(rng) if rng.random() < 0.5 else Fraction(0) for _ in range(rank)]
         for _ in range(rank)]
    mats = []
    for j in range(2):
        d = phi.partial(j)
        mats.append(SeriesMatrix([[d.scale(v) for v in row] for row in x]))
    return Connection(tuple(mats))


def _diagonal_exact(rng, rank, prec):
    # A_j = diag(d_j phi_k), then conjugated by a constant matrix
    phis = [random_series(rng, 2, prec + 1, 0.3, min_degree=1) for _ in range(rank)]
    mats = []
    for j in range(2):
        mats.append(SeriesMatrix([[phis[i].partial(j) if i == k else Series.zero(2, prec)
                                   for k in range(rank)] for i in range(rank)]))
    p = random_invertible_constant(rng, rank, bound=2)
    p_inv = solve_rational(p)
    return Connection(tuple(_conjugate(a, p, p_inv) for a in mats))


def _commuting_constants(rng, rank, prec):
    # A_1 = X, A_2 = a X + b I
    x = [[random_rational(rng) for _ in range(rank)] for _ in range(rank)]
    a, b = random_rational(rng), random_rational(rng)
    y = [[a * x[i][k] + (b if i == k else 0) for k in range(rank)] for i in range(rank)]
    return Connection((SeriesMatrix.constant(x, 2, prec), SeriesMatrix.constant(y, 2, prec)))


def _gauge(rng, rank, prec):
    # A_j = -g^-1 d_j(g) for g = I + (sparse polynomial in the maximal ideal)
    g = SeriesMatrix.identity(rank, 2, prec + 1) + random_matrix(
        rng, rank, rank, 2, prec + 1, 0.15, min_degree=1, max_degree=3)
    g_inv = g.inverse()
    return Connection(tuple((-(g_inv @ g.partial(j))).project(prec) for j in range(2)))


FLAT_FAMILIES = {
    "pullback": _one_variable_pullback,
    "exact-form": _exact_form,
    "diagonal-exact": _diagonal_exact,
    "commuting-constants": _commuting_constants,
    "gauge": _gauge,
}


def random_flat_connection(rng: random.Random, nvars: int | None = None, rank: int | None = None,
                           prec: int | None = None, family: str | None = None) -> Connection:
    """A connection with ``nvars <= 2``, ``rank <= 3``, ``2 <= prec <= 8``, flat by construction."""
    nvars = nvars or rng.randint(1, 2)
    rank = rank or rng.randint(1, 3)
    prec = prec or rng.randint(2, 8)
    if nvars == 1:
        return Connection((random_matrix(rng, rank, rank, 1, prec, 0.35),))
    if nvars != 2:
        raise ValueError("only nvars <= 2 is generated")
    family = family or rng.choice(sorted(FLAT_FAMILIES))
    return FLAT_FAMILIES[family](rng, rank, prec)


def random_ode_problem(rng: random.Random, rank: int | None = None,
                       prec: int | None = None) -> OdeProblem:
    rank = rank or rng.randint(1, 3)
    prec = prec or rng.randint(1, 10)
    return OdeProblem(random_matrix(rng, rank, rank, 1, prec, 0.35))


def random_commuting_problem(rng: random.Random, rank: int | None = None,
                             prec: int | None = None) -> OdeProblem:
    """``b = P diag(f_1..f_r) P^-1``: coefficient matrices are simultaneously diagonal."""
    rank = rank or rng.randint(1, 3)
    prec = prec or rng.randint(1, 8)
    diag = [random_series(rng, 1, prec, 0.4) for _ in range(rank)]
    d = SeriesMatrix([[diag[i] if i == k else Series.zero(1, prec) for k in range(rank)]
                      for i in range(rank)])
    if rng.random() < 0.5:
        return OdeProblem(d)
    p = random_invertible_constant(rng, rank, bound=2)
    return OdeProblem(_conjugate(d, p, solve_rational(p)))


def random_noncommuting_problem(rng: random.Random, rank: int | None = None,
                                prec: int | None = None) -> OdeProblem:
    from .ode import commuting_family_check

    while True:
        p = random_ode_problem(rng, rank or rng.randint(2, 3), prec)
        if not commuting_family_check(p):
            return p
