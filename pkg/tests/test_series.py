import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skewseries.coeffring import FiltValue, TruncLaurent, Zmod
from skewseries.harness import load_fixture
from skewseries.prng import SplitMix64
from skewseries.series import (
    GuaranteeUnreachable,
    MissingCertificate,
    SkewPoly,
    eval_X,
    from_poly,
    make_series,
    poly_mul,
    relation_check,
    scalar_mul,
    series_mul,
    v_eps,
)
from skewseries.skewmaps import AutoSpec, CycleShift, DerivMismatch, DerivSpec, Subst, certify, derive_level
from skewseries.suites import random_elem

T33 = TruncLaurent(3, 3)
T36 = TruncLaurent(3, 6)


def random_series(d, c, rng, K):
    return make_series([random_elem(d.ring, rng) for _ in range(K + 1)], d, c, L=0)


def iwasawa(R):
    sigma = AutoSpec(R, [Subst({1: 1, 2: 1}, R.p)])
    d = DerivSpec.inner(-1, sigma)
    return d, certify(d)


def test_x_times_pi():
    sigma = AutoSpec(T33, [Subst({1: 1, 2: 1}, 3)])
    d = DerivSpec.inner(T33.monomial(1), sigma)
    x = SkewPoly.x_power(d, 1)
    got = poly_mul(x, SkewPoly([T33.monomial(1)], d))
    assert got == SkewPoly([0, T33.from_terms({1: 1, 2: 1})], d)


def test_unit_and_square():
    d, _ = iwasawa(T36)
    one = SkewPoly([1], d)
    g = SkewPoly([T36.monomial(-1), 2, T36.monomial(3)], d)
    assert one * g == g and g * one == g
    x = SkewPoly.x_power(d, 1)
    assert x * x == SkewPoly.x_power(d, 2)


def test_constant_product():
    d, c = iwasawa(T36)
    one = make_series([1], d, c, exact_tail=True)
    out = series_mul(one, one)
    assert out.coeffs == [T36.one()]
    assert out.guarantee == [6]


def test_iwasawa_series_product_against_partial_sums():
    d, c = iwasawa(T36)
    pi = T36.monomial(1)
    f = make_series([pi] * 13, d, c)
    g = make_series([1] * 13, d, c)
    h = series_mul(f, g, K_out=4, P_target=6)
    assert h.K_in == 9 and h.L == 1
    assert h.guarantee == [6] * 5
    # partial-sum oracle: product of truncations at K_in
    oracle = poly_mul(SkewPoly([pi] * 10, d), SkewPoly([1] * 13, d))
    for k in range(5):
        assert h.coeffs[k] == oracle.coeff(k)
    assert [x.terms() for x in h.coeffs] == [{1: 1}, {1: 2}, {}, {1: 1}, {1: 2}]


def test_polynomial_product_matches_poly_mul():
    d, c = iwasawa(TruncLaurent(3, 8))
    R = d.ring
    f = SkewPoly([R.monomial(1), 1, R.monomial(-1)], d)
    g = SkewPoly([2, R.monomial(2)], d)
    h = series_mul(from_poly(f, c), from_poly(g, c))
    assert h.to_poly() == poly_mul(f, g)
    assert h.exact_tail


def test_missing_certificate():
    d, c = iwasawa(T36)
    with pytest.raises(MissingCertificate):
        series_mul(make_series([1], d), make_series([1], d, c))
    failed = load_fixture("failed")
    fc = certify(failed.delta)
    with pytest.raises(MissingCertificate):
        series_mul(make_series([1], failed.delta, fc), make_series([1], failed.delta, fc))


def test_deriv_mismatch():
    d, c = iwasawa(T36)
    other = DerivSpec.inner(1, d.sigma)
    with pytest.raises(DerivMismatch):
        series_mul(make_series([1], d, c), make_series([1], other, certify(other)))


def test_guarantee_unreachable_reports_best():
    d, c = iwasawa(T36)
    f = make_series([1] * 3, d, c)
    with pytest.raises(GuaranteeUnreachable) as e:
        series_mul(f, f, K_out=2, P_target=6)
    assert e.value.best is not None


def test_v_eps_examples():
    d, c = iwasawa(T36)
    assert v_eps(make_series([0, 1], d, c, exact_tail=True), 2) == FiltValue.finite(1)
    assert v_eps(make_series([T36.monomial(1)], d, c, exact_tail=True), 1) == FiltValue.finite(1)
    zero = make_series([0], d, c, L=5)
    assert v_eps(zero, 1) == FiltValue.atleast(6)
    assert v_eps(zero, 2) == FiltValue.atleast(11)


def test_eval_X_char3_is_x_cubed():
    d, _ = iwasawa(T36)
    assert eval_X(derive_level(d, 1)) == SkewPoly.x_power(d, 3)
    assert eval_X(derive_level(d, 0)) == SkewPoly.x_power(d, 1)


def test_eval_X_zmod_binomial():
    Z = Zmod(3, 2)
    d = DerivSpec.inner(-1, AutoSpec(Z, []))
    assert eval_X(derive_level(d, 1)) == SkewPoly([0, 3, 3, 1], d)


def test_relation_checks():
    d, _ = iwasawa(TruncLaurent(3, 8))
    assert relation_check(d, "defining", horizon=4)["pass"]
    assert relation_check(d, "subring", level=derive_level(d, 1), horizon=4)["pass"]
    P = load_fixture("product").ring
    sp = AutoSpec(P, [CycleShift(1)])
    dp = DerivSpec.inner(-1, sp)
    assert relation_check(dp, "normality")["pass"]


def test_pad_keeps_imprecise_zero():
    d, _ = iwasawa(TruncLaurent(3, 8))
    R = d.ring
    loose = R.sub(R.monomial(-2), R.monomial(-2))
    f = SkewPoly([1, loose], d)
    assert f.degree == 0
    assert len(f.full) == 2
    # the padded zero limits what is known about x^1
    assert R.precision((f + SkewPoly.x_power(d, 1)).coeff(1)) == R.precision(loose)
    assert SkewPoly([1, R.zero()], d).full == [R.one()]


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_associativity_within_guarantee(seed):
    cfg = load_fixture("iwasawa")
    d = cfg.delta
    c = certify(d)
    rng = SplitMix64(seed)
    f, g, h = (random_series(d, c, rng, K=8) for _ in range(3))
    lhs = series_mul(series_mul(f, g, K_out=3), h, K_out=3)
    rhs = series_mul(f, series_mul(g, h, K_out=3), K_out=3)
    assert lhs.agrees_with(rhs)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_tail_soundness_and_lower_bound(seed):
    cfg = load_fixture("iwasawa")
    d = cfg.delta
    c = certify(d)
    rng = SplitMix64(seed)
    f, g = random_series(d, c, rng, K=12), random_series(d, c, rng, K=12)
    a = series_mul(f, g, K_out=3, K_in=5)
    b = series_mul(f, g, K_out=3, K_in=10)
    assert a.agrees_with(b)
    assert a.L == f.L + g.L + c.B
    assert all(x.filt().lower >= a.L for x in a.coeffs)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_left_module_law(seed):
    cfg = load_fixture("iwasawa")
    d = cfg.delta
    c = certify(d)
    rng = SplitMix64(seed)
    f, g = random_series(d, c, rng, K=10), random_series(d, c, rng, K=10)
    a = d.ring.random(rng, min_val=0, max_val=3)
    lhs = series_mul(scalar_mul(a, f), g, K_out=3, K_in=8)
    rhs = scalar_mul(a, series_mul(f, g, K_out=3, K_in=8))
    assert lhs.agrees_with(rhs)
