import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skewseries import _kernels_py, kernels
from skewseries.coeffring import (
    FiltValue,
    Matrix,
    NotAUnit,
    PrecisionInsufficient,
    Product,
    RingMismatch,
    TruncLaurent,
    Zmod,
    certified_zero,
    ring_arith,
    ring_from_json,
    vp_binom,
    vp_int,
)
from skewseries.prng import SplitMix64

T38 = TruncLaurent(3, 8)
T34 = TruncLaurent(3, 4)


def test_filt_of_one_is_zero_everywhere():
    for R in (Zmod(3, 4), T38, Matrix(2, T38), Product((T38, T38))):
        assert R.filt(R.one()) == FiltValue.finite(0)


def test_filt_monomial():
    assert T38.filt(T38.monomial(3)) == FiltValue.finite(3)


def test_matrix_filt_is_entry_minimum():
    M = Matrix(2, T38)
    pi = T38.monomial(1)
    x = M.make([[pi, 1], [0, pi * pi]])
    assert M.filt(x) == FiltValue.finite(0)


def test_add_inverse_gives_atleast_cap():
    pi = T38.monomial(1)
    z = T38.add(pi, T38.neg(pi))
    assert z.is_zero()
    assert T38.filt(z) == FiltValue.atleast(8)


def test_monomial_product():
    assert T38.mul(T38.monomial(2), T38.monomial(3)) == T38.monomial(5)


def test_matrix_unit_product():
    M = Matrix(2, Zmod(3, 2))
    assert M.mul(M.make([[0, 1], [0, 0]]), M.make([[0, 0], [1, 0]])) == M.make([[1, 0], [0, 0]])


def test_invert_one_plus_pi():
    # geometric series oracle: 1 - pi + pi^2 - pi^3 = 1 + 2pi + pi^2 + 2pi^3 over F_3
    inv = T34.invert(T34.from_terms({0: 1, 1: 1}))
    assert inv.terms() == {0: 1, 1: 2, 2: 1, 3: 2}
    assert T34.mul(inv, T34.from_terms({0: 1, 1: 1})) == T34.one()


def test_invert_trivial_cases():
    assert T34.invert(T34.coerce(-1)) == T34.coerce(-1)
    assert T34.invert(T34.monomial(1)) == T34.monomial(-1)
    Z = Zmod(3, 2)
    assert Z.invert(Z.coerce(-1)) == Z.coerce(-1)


def test_invert_errors():
    Z = Zmod(3, 2)
    with pytest.raises(NotAUnit):
        Z.invert(Z.coerce(3))
    with pytest.raises(PrecisionInsufficient):
        # zero only at reduced precision: cannot tell whether it is a unit
        T34.invert(T34.sub(T34.monomial(-2), T34.monomial(-2)))
    M = Matrix(2, T34)
    with pytest.raises(NotAUnit):
        M.invert(M.make([[1, 0], [0, 0]]))


def test_matrix_inverse_both_sides():
    M = Matrix(2, T38)
    rng = SplitMix64(3)
    for _ in range(10):
        a = M.random_unit(rng)
        b = M.invert(a)
        assert M.mul(a, b) == M.one()
        assert M.mul(b, a) == M.one()


def test_vp_binom_examples():
    assert vp_binom(3, 2, 3) == 1
    assert vp_binom(2, 3, 8) == 0
    assert vp_binom(5, 1, 2) == 1


def test_vp_int():
    assert vp_int(81, 3) == 4
    assert vp_int(10, 5) == 1
    assert vp_int(7, 2) == 0


def test_ring_mismatch():
    with pytest.raises(RingMismatch):
        ring_arith("add", T38.one(), T34.one())


def test_certified_zero():
    assert certified_zero(T38.zero())
    # pi - pi is known to the cap; pi^-2 - pi^-2 only to pi^6
    assert certified_zero(T38.sub(T38.monomial(1), T38.monomial(1)))
    assert not certified_zero(T38.sub(T38.monomial(-2), T38.monomial(-2)))


def test_truncate_and_precision():
    x = T38.from_terms({0: 1, 2: 1, 5: 2})
    y = T38.truncate(x, 3)
    assert T38.precision(y) == 3
    assert y.terms() == {0: 1, 2: 1}


def test_product_is_factorwise():
    P = Product((T38, Zmod(3, 2)))
    x = P.make([T38.monomial(1), 2])
    y = P.make([T38.monomial(2), 5])
    z = P.mul(x, y)
    assert z.parts[0] == T38.monomial(3)
    assert z.parts[1] == Zmod(3, 2).coerce(10)


@pytest.mark.parametrize(
    "R",
    [Zmod(3, 4), T38, TruncLaurent(2, 6, 10), Matrix(2, T34), Product((T34, Zmod(2, 3)))],
)
def test_json_round_trip(R):
    assert ring_from_json(R.to_json()) == R
    rng = SplitMix64(9)
    for _ in range(20):
        x = R.random(rng)
        assert R.decode(R.encode(x)) == x


laurent_terms = st.dictionaries(st.integers(-3, 6), st.integers(0, 2), max_size=6)


@settings(max_examples=150, deadline=None)
@given(laurent_terms, laurent_terms, laurent_terms)
def test_laurent_ring_laws(a, b, c):
    R = T38
    x, y, z = R.from_terms(a), R.from_terms(b), R.from_terms(c)
    assert R.mul(R.mul(x, y), z) == R.mul(x, R.mul(y, z))
    assert R.mul(x, R.add(y, z)) == R.add(R.mul(x, y), R.mul(x, z))
    assert R.mul(x, y) == R.mul(y, x)
    assert R.add(x, R.neg(x)).is_zero()


@settings(max_examples=100, deadline=None)
@given(laurent_terms, laurent_terms)
def test_valuation_is_additive(a, b):
    R = T38
    x, y = R.from_terms(a), R.from_terms(b)
    fx, fy = x.filt(), y.filt()
    if fx.is_finite and fy.is_finite and fx.n + fy.n < R.cap:
        assert R.mul(x, y).filt() == FiltValue.finite(fx.n + fy.n)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 80), st.integers(0, 80), st.integers(0, 80))
def test_zmod_ring_laws(a, b, c):
    R = Zmod(3, 4)
    x, y, z = R.coerce(a), R.coerce(b), R.coerce(c)
    assert R.mul(R.mul(x, y), z) == R.mul(x, R.mul(y, z))
    assert R.mul(x, R.add(y, z)) == R.add(R.mul(x, y), R.mul(x, z))
    assert R.filt(R.mul(x, y)).lower >= min(R.filt(x).lower + R.filt(y).lower, R.N)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_matrix_filtration_is_submultiplicative(seed):
    M = Matrix(2, T38)
    rng = SplitMix64(seed)
    x, y = M.random(rng), M.random(rng)
    assert M.filt(M.mul(x, y)).lower >= M.filt(x).lower + M.filt(y).lower


digit_tuples = st.lists(st.integers(0, 2), min_size=1, max_size=20).map(tuple)


@settings(max_examples=200, deadline=None)
@given(digit_tuples, digit_tuples, st.integers(0, 24), st.integers(-3, 5))
def test_compiled_kernels_match_fallback(a, b, n, shift):
    p = 3
    assert kernels.conv_trunc(a, b, n, p) == _kernels_py.conv_trunc(a, b, n, p)
    assert kernels.add_shifted(a, b, max(shift, 0), n, p) == _kernels_py.add_shifted(a, b, max(shift, 0), n, p)
    if a[0] % p:
        assert kernels.inv_trunc(a, n, p) == _kernels_py.inv_trunc(a, n, p)


def test_backend_is_reported():
    assert kernels.BACKEND in ("cython", "python")
