import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skewseries.coeffring import Matrix, Product, TruncLaurent, Zmod
from skewseries.harness import load_fixture
from skewseries.prng import SplitMix64
from skewseries.skewmaps import (
    AutoSpec,
    Conj,
    CycleShift,
    DerivSpec,
    MapError,
    Subst,
    apply_delta,
    auto_from_json,
    certify,
    check_commuting,
    delta_power_closed,
    delta_power_tform,
    deriv_from_json,
    derive_level,
    iterate_delta,
    recheck_witness,
    spanning_set,
)
from skewseries.suites import random_elem

T33 = TruncLaurent(3, 3)
T38 = TruncLaurent(3, 8)
M38 = Matrix(2, T38)


def iwasawa(R=T38):
    sigma = AutoSpec(R, [Subst({1: 1, 2: 1}, R.p)])
    return sigma, DerivSpec.inner(-1, sigma)


def test_subst_forward():
    sigma, _ = iwasawa(T33)
    assert sigma.apply(T33.monomial(1)) == T33.from_terms({1: 1, 2: 1})


def test_subst_inverse_is_reversion():
    # reversion oracle: pi - pi^2 = pi + 2 pi^2 over F_3, checked by composing back
    sigma, _ = iwasawa(T33)
    inv = sigma.apply(T33.monomial(1), inverse=True)
    assert inv.terms() == {1: 1, 2: 2}
    assert sigma.apply(inv) == T33.monomial(1)


def test_subst_round_trip_on_random_elements():
    sigma, _ = iwasawa()
    rng = SplitMix64(4)
    for _ in range(30):
        x = T38.random(rng, min_val=-3, max_val=4)
        assert sigma.apply(sigma.apply(x), inverse=True) == x
        assert sigma.apply(x, times=3) == sigma.apply(sigma.apply(sigma.apply(x)))


def test_cycle_shift_rotates_factors():
    P = Product((T38, T38))
    sigma = AutoSpec(P, [CycleShift(1)])
    a, b = T38.monomial(1), T38.monomial(2)
    y = sigma.apply(P.make([a, b]))
    assert y.parts == (b, a)
    assert sigma.apply(y, inverse=True) == P.make([a, b])


def test_conj_needs_unit():
    with pytest.raises(Exception):
        Conj(M38.make([[1, 0], [0, 0]]))


def test_conj_scales_matrix_unit():
    # sigma^k(e12) = pi^-k e12 for conjugation by diag(1, pi)
    pi = T38.monomial(1)
    sigma = AutoSpec(M38, [Conj(M38.make([[1, 0], [0, pi]]))])
    e12 = M38.unit_matrix(0, 1)
    assert sigma.apply(e12, times=3) == M38.unit_matrix(0, 1, T38.monomial(-3))


def test_inner_minus_one_is_sigma_minus_id():
    sigma, d = iwasawa()
    x = T38.from_terms({-1: 1, 2: 2})
    assert apply_delta(d, x) == sigma.apply(x) - x


def test_inner_pi_kills_pi_at_low_precision():
    # pi*pi - (pi + pi^2)*pi = -pi^3, zero in TruncLaurent(3, 3)
    sigma, _ = iwasawa(T33)
    d = DerivSpec.inner(T33.monomial(1), sigma)
    out = apply_delta(d, T33.monomial(1))
    assert out.is_zero()
    assert out.filt().kind == "atleast" and out.filt().n == 3


@pytest.mark.parametrize("name", ["iwasawa", "unipotent", "product", "zmod", "base_twisted"])
def test_delta_of_one_is_zero(name):
    d = load_fixture(name).delta
    assert apply_delta(d, d.ring.one()).is_zero()


def test_closed_form_examples():
    sigma, d = iwasawa()
    s = T38.from_terms({0: 1, 1: 2, 3: 1})
    two = delta_power_closed(d, 2, s)
    assert two == s - 2 * sigma.apply(s) + sigma.apply(s, times=2)
    assert delta_power_closed(d, 1, s) == apply_delta(d, s)
    # in char 3 with t fixed, delta^3 has the T-form
    assert delta_power_tform(d, 3, s) == iterate_delta(d, s, 3)
    assert delta_power_closed(d, 9, s) == iterate_delta(d, s, 9)


def test_closed_form_needs_fixed_t():
    u = M38.make([[1, 1], [0, 1]])
    sigma = AutoSpec(M38, [Conj(u)])
    d = DerivSpec.inner(M38.unit_matrix(1, 0), sigma)
    with pytest.raises(MapError):
        delta_power_closed(d, 2, M38.one())


def test_certificate_iwasawa():
    _, d = iwasawa()
    c = certify(d)
    assert (c.mode, c.B, c.N) == ("compatible", 0, 1)


def test_certificate_failed_diag_conjugation():
    cfg = load_fixture("failed")
    c = certify(cfg.delta)
    assert c.mode == "failed"
    assert c.failure_witness["i"] == 8 and c.failure_witness["degree_lower_bound"] == -8
    assert recheck_witness(cfg.delta, c.failure_witness)


def test_certificate_unipotent_is_quasi():
    cfg = load_fixture("unipotent")
    c = certify(cfg.delta)
    assert (c.mode, c.B, c.N) == ("quasi", 0, 1)
    assert c.deg_sigma_minus_id == 0
    # e21 also witnesses deg(sigma - id) = 0
    e21 = M38.unit_matrix(1, 0)
    diff = cfg.sigma.apply(e21) - e21
    assert diff.filt().is_finite and diff.filt().n == 0


def test_certificate_is_deterministic():
    cfg = load_fixture("unipotent")
    assert certify(cfg.delta).to_json() == certify(cfg.delta).to_json()


def test_base_twisted_matches_inner_minus_one():
    # theta = pi^2 = sigma(pi) - pi for sigma = Subst(pi + pi^2)
    sigma, d = iwasawa()
    bt = DerivSpec.base_twisted(T38.monomial(2), sigma)
    for r in spanning_set(T38):
        assert apply_delta(bt, r) == apply_delta(d, r)


def test_derive_level_zero_and_one():
    sigma, d = iwasawa()
    lv0 = derive_level(d, 0)
    assert lv0.T == T38.coerce(-1)
    lv1 = derive_level(d, 1, check=True)
    assert lv1.degree == 3
    assert lv1.T == T38.coerce(-1)
    x = T38.from_terms({1: 1, 2: 1})
    assert apply_delta(lv1.Delta, x) == sigma.apply(x, times=3) - x


def test_derive_level_check_in_char_p():
    cfg = load_fixture("unipotent")
    for n in (1, 2):
        derive_level(cfg.delta, n, check=True)


def test_level_shift_sigma():
    _, d = iwasawa()
    lv1 = derive_level(d, 1)
    lv2 = derive_level(d, 2)
    lv11 = derive_level(lv1.Delta, 1)
    x = T38.from_terms({-2: 1, 1: 2})
    assert lv11.Sigma.apply(x) == lv2.Sigma.apply(x)
    assert apply_delta(lv11.Delta, x) == apply_delta(lv2.Delta, x)


def test_commuting_checks():
    _, d = iwasawa()
    assert check_commuting(d)["pass"]
    cfg = load_fixture("unipotent")
    assert check_commuting(cfg.delta)["pass"]
    # t not fixed by an inner sigma: sigma and delta no longer commute
    u = M38.make([[1, 1], [0, 1]])
    sigma = AutoSpec(M38, [Conj(u)])
    bad = DerivSpec.inner(M38.unit_matrix(1, 0), sigma)
    rep = check_commuting(bad)
    assert not rep["pass"] and rep["witness"] is not None


def test_json_round_trip():
    cfg = load_fixture("iwasawa")
    sigma = auto_from_json(cfg.ring, cfg.sigma.to_json())
    d = deriv_from_json(sigma, cfg.delta.to_json())
    x = T38.from_terms({-1: 2, 0: 1, 4: 1})
    assert apply_delta(d, x) == apply_delta(cfg.delta, x)


def test_zmod_identity_sigma():
    Z = Zmod(3, 4)
    sigma = AutoSpec(Z, [])
    d = DerivSpec.inner(-1, sigma)
    assert sigma.is_identity
    assert apply_delta(d, Z.coerce(5)).is_zero()


FIXTURES = ["iwasawa", "char2", "unipotent", "noncentral", "failed", "product", "zmod", "zmod_matrix", "base_twisted"]


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(FIXTURES), st.integers(0, 2 ** 32))
def test_leibniz_rule(name, seed):
    d = load_fixture(name).delta
    R = d.ring
    rng = SplitMix64(seed)
    r, s = random_elem(R, rng), random_elem(R, rng)
    assert apply_delta(d, r * s) == apply_delta(d, r) * s + d.sigma.apply(r) * apply_delta(d, s)
    assert d.sigma.apply(apply_delta(d, r)) == apply_delta(d, d.sigma.apply(r))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(FIXTURES), st.integers(0, 2 ** 32))
def test_sigma_is_a_ring_map(name, seed):
    sigma = load_fixture(name).sigma
    R = sigma.ring
    rng = SplitMix64(seed)
    r, s = random_elem(R, rng), random_elem(R, rng)
    assert sigma.apply(r * s) == sigma.apply(r) * sigma.apply(s)
    assert sigma.apply(r + s) == sigma.apply(r) + sigma.apply(s)
    assert sigma.apply(sigma.apply(r), inverse=True) == r
