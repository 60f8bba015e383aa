import random
from fractions import Fraction
from math import comb, factorial

import pytest

from flatconn.connection import (
    Connection,
    NotFlatError,
    curvature,
    d_apply,
    decompose,
    element_order,
    gauge_transform,
    horizontal_basis,
    horizontality_residuals,
    is_flat,
    psi_apply,
    psi_full,
    solve_unique,
    trivialize,
)
from flatconn.ode import bjork_counterexample
from flatconn.samples import FLAT_FAMILIES, random_flat_connection, random_matrix, random_series
from flatconn.series import PrecisionError, Series, SeriesMatrix

P = 7


def scalar_connection(lam, prec=P):
    return Connection((SeriesMatrix.constant([[lam]], 1, prec),))


def exp_lambda(lam, prec=P):
    return Series.univariate([Fraction((-lam) ** k, factorial(k)) for k in range(prec + 1)], prec)


def two_var_flat(prec=P):
    t1, t2 = Series.var(0, 2, prec), Series.var(1, 2, prec)
    return Connection((SeriesMatrix([[t2]]), SeriesMatrix([[t1]])))


def is_zero_vec(v):
    return all(s.is_zero() for s in v)


# -- d_apply --------------------------------------------------------------


def test_d_apply_zero_connection():
    c = Connection.zero(1, 1, P)
    assert d_apply(c, 0, (Series.var(0, 1, P),)) == (Series.one(1, P - 1),)


def test_d_apply_rank_one_constant():
    c = scalar_connection(Fraction(5, 3))
    assert d_apply(c, 0, (Series.one(1, P),)) == (Series.const(Fraction(5, 3), 1, P - 1),)


def test_d_apply_leibniz():
    rng = random.Random(5)
    for _ in range(30):
        c = random_flat_connection(rng)
        p = c.prec
        v = tuple(random_series(rng, c.nvars, p, 0.5) for _ in range(c.rank))
        b = random_series(rng, c.nvars, p, 0.5)
        for j in range(c.nvars):
            lhs = d_apply(c, j, tuple(b * s for s in v))
            rhs = tuple(b.partial(j) * s + b * w for s, w in zip(v, d_apply(c, j, v)))
            assert lhs == rhs


def test_d_apply_needs_precision():
    c = Connection.zero(1, 1, 1)
    with pytest.raises(PrecisionError):
        d_apply(c, 0, (Series.one(1, 0),))


# -- flatness -------------------------------------------------------------


def test_one_variable_always_flat():
    rng = random.Random(6)
    c = Connection((random_matrix(rng, 3, 3, 1, 5, 0.5),))
    assert is_flat(c)


def test_two_variable_flat_example():
    assert is_flat(two_var_flat())


def test_two_variable_non_flat_witness():
    t1 = Series.var(0, 2, P)
    c = Connection((SeriesMatrix([[Series.zero(2, P)]]), SeriesMatrix([[t1]])))
    report = is_flat(c)
    assert not report
    assert report.pair == (0, 1)
    assert report.exponent == (0, 0)
    assert report.coef == 1
    assert report.depth == P - 1


def test_borderline_precision_depth():
    c = two_var_flat(prec=2)
    assert is_flat(c).depth == 1
    with pytest.raises(PrecisionError):
        is_flat(Connection.zero(2, 1, 1))


def test_curvature_is_the_commutator_of_the_action():
    """Brute force: [D_i, D_j] e_k equals row k of F_ij; the witness is its lowest term."""
    rng = random.Random(7)
    for _ in range(40):
        c = Connection(tuple(random_matrix(rng, 2, 2, 2, 5, 0.3) for _ in range(2)))
        f = curvature(c, 0, 1)
        brute = []
        for e in c.basis():
            a = d_apply(c, 0, d_apply(c, 1, e))
            b = d_apply(c, 1, d_apply(c, 0, e))
            brute.append([x - y for x, y in zip(a, b)])
        assert SeriesMatrix(brute) == f.truncate(c.prec - 2)
        report = is_flat(c)
        if f.is_zero():
            assert report
            continue
        lowest = min((sum(e), (r, k), e, coef)
                     for r, row in enumerate(brute) for k, s in enumerate(row)
                     for e, coef in s.items())
        if lowest[0] <= c.prec - 2:
            assert (sum(report.exponent), report.entry, report.exponent, report.coef) == lowest


def test_commuting_actions_on_flat_connections():
    rng = random.Random(8)
    for _ in range(30):
        c = random_flat_connection(rng, nvars=2, prec=rng.randint(3, 7))
        for e in c.basis():
            assert d_apply(c, 0, d_apply(c, 1, e)) == d_apply(c, 1, d_apply(c, 0, e))


# -- psi ------------------------------------------------------------------


def test_psi_fixes_constants():
    c = Connection.zero(1, 1, P)
    assert psi_apply(c, 0, (Series.one(1, P),)) == (Series.one(1, P),)


def test_psi_kills_powers_of_t():
    c = Connection.zero(1, 1, P)
    for k in range(1, P + 1):
        # sum_i (-1)^i C(k, i) = 0
        assert sum((-1) ** i * comb(k, i) for i in range(k + 1)) == 0
        assert psi_apply(c, 0, (Series.monomial([k], 1, P),)) == (Series.zero(1, P),)


def test_psi_rank_one_lambda():
    lam = Fraction(-2, 3)
    c = scalar_connection(lam)
    assert psi_apply(c, 0, (Series.one(1, P),)) == (exp_lambda(lam),)


def test_psi_full_one_variable_is_psi_apply():
    rng = random.Random(9)
    c = random_flat_connection(rng, nvars=1, rank=2)
    v = tuple(random_series(rng, 1, c.prec) for _ in range(2))
    assert psi_full(c, v) == psi_apply(c, 0, v)


def test_psi_full_two_variables():
    c = two_var_flat()
    (h,) = psi_full(c, (Series.one(2, P),))
    # coefficientwise oracle: d1 h = -t2 h, d2 h = -t1 h, h(0) = 1 forces
    # h = sum_k (-1)^k (t1 t2)^k / k!
    expected = Series(2, P, {(k, k): Fraction((-1) ** k, factorial(k)) for k in range(P)})
    assert h == expected


def test_psi_full_rejects_non_flat():
    t1 = Series.var(0, 2, P)
    c = Connection((SeriesMatrix([[Series.zero(2, P)]]), SeriesMatrix([[t1]])))
    with pytest.raises(NotFlatError):
        psi_full(c, (Series.one(2, P),))


def test_psi_full_bjork_style_extension():
    # rank 2, A_1 constant in t2 and non-commuting coefficients, A_2 = 0
    b = bjork_counterexample(P).b
    lift = b.map(lambda s: Series(2, P, {(e[0], 0): x for e, x in s.items()}))
    c = Connection((lift, SeriesMatrix.zeros(2, 2, 2, P)))
    for e in c.basis():
        h = psi_full(c, e)
        for j in range(2):
            assert is_zero_vec(d_apply(c, j, h))


def test_psi_full_variable_order_irrelevant_when_flat():
    rng = random.Random(10)
    for _ in range(20):
        c = random_flat_connection(rng, nvars=2)
        for e in c.basis():
            assert psi_full(c, e, order=(1, 0)) == psi_full(c, e, order=(0, 1))


# -- horizontal basis and trivialization ----------------------------------


def test_horizontal_basis_zero_connection():
    assert horizontal_basis(Connection.zero(2, 3, P)) == SeriesMatrix.identity(3, 2, P)


def test_horizontal_basis_rank_one():
    assert horizontal_basis(scalar_connection(4)) == SeriesMatrix([[exp_lambda(4)]])


def test_horizontal_basis_bjork():
    c = bjork_counterexample(P).as_connection()
    g = horizontal_basis(c)
    assert g.constant_part() == [[1, 0], [0, 1]]
    (res,) = horizontality_residuals(c, g)
    assert res.is_zero() and res.prec == P - 1


def test_trivialize_zero():
    g, g_inv = trivialize(Connection.zero(1, 2, P))
    assert g == g_inv == SeriesMatrix.identity(2, 1, P)


def test_trivialize_rank_one():
    g, g_inv = trivialize(scalar_connection(Fraction(1, 2)))
    assert g == SeriesMatrix([[exp_lambda(Fraction(1, 2))]])
    assert g_inv == SeriesMatrix([[exp_lambda(Fraction(-1, 2))]])
    assert (g @ g_inv) == SeriesMatrix.identity(1, 1, P)


def test_trivialize_bjork_conjugates_to_zero():
    c = bjork_counterexample(P).as_connection()
    g, g_inv = trivialize(c)
    (a,) = gauge_transform(c, g, g_inv).matrices
    assert a.is_zero() and a.prec == P - 1


def test_gauge_family_recovers_gauge():
    rng = random.Random(11)
    for _ in range(10):
        c = FLAT_FAMILIES["gauge"](rng, 2, 5)
        g = horizontal_basis(c)
        assert all(r.is_zero() for r in horizontality_residuals(c, g))


# -- decomposition and uniqueness -----------------------------------------


def test_decompose_zero_connection():
    c = Connection.zero(1, 1, P)
    h, m = decompose(c, (Series.univariate([1, 1], P),))
    assert h == (Series.one(1, P),)
    assert m == (Series.var(0, 1, P),)


def test_decompose_horizontal_element():
    c = scalar_connection(3)
    v = (exp_lambda(3),)
    h, m = decompose(c, v)
    assert h == v and is_zero_vec(m)


def test_decompose_rank_one():
    c = scalar_connection(3)
    h, m = decompose(c, (Series.one(1, P),))
    assert h == (exp_lambda(3),)
    assert m == (Series.one(1, P) - exp_lambda(3),)
    assert m[0].constant() == 0


def test_solve_unique():
    c = scalar_connection(2)
    assert solve_unique(c, [0]) == (Series.zero(1, P),)
    assert solve_unique(c, [1]) == (exp_lambda(2),)


def test_uniqueness_of_horizontal_solutions():
    rng = random.Random(12)
    for _ in range(20):
        c = random_flat_connection(rng, rank=2)
        vbar = [Fraction(rng.randint(-5, 5), rng.randint(1, 5)) for _ in range(2)]
        m1 = solve_unique(c, vbar)
        # a second horizontal element with the same constant term, via psi of
        # a different lift
        lift = tuple(Series.const(x, c.nvars, c.prec) + random_series(
            rng, c.nvars, c.prec, 0.5, min_degree=1) for x in vbar)
        m2 = psi_full(c, lift)
        diff = tuple(a - b for a, b in zip(m1, m2))
        # the difference lies in the maximal ideal and is horizontal, so psi kills it
        assert element_order(diff) is None or element_order(diff) >= 1
        assert is_zero_vec(psi_full(c, diff))
        assert m1 == m2


def test_injectivity_probe_on_induced_modules():
    """A nonzero element of order i0 stays nonzero after d^e and projection."""
    rng = random.Random(13)
    for _ in range(40):
        n, r, p = rng.randint(1, 2), rng.randint(1, 3), rng.randint(2, 8)
        c = Connection.zero(n, r, p)
        v = tuple(random_series(rng, n, p, 0.3, min_degree=rng.randint(0, p)) for _ in range(r))
        if is_zero_vec(v):
            continue
        _, e = min((sum(e), e) for s in v for e, _ in s.items())
        w = v
        for j, k in enumerate(e):
            for _ in range(k):
                w = d_apply(c, j, w)
        assert not is_zero_vec(psi_full(c, w))
