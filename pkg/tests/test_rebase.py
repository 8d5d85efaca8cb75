import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skewseries.coeffring import TruncLaurent, Zmod
from skewseries.harness import load_fixture
from skewseries.prng import SplitMix64
from skewseries.rebase import (
    BandMatrix,
    CertificationMissing,
    InsufficientOrder,
    NotStrictlyLower,
    build_A,
    decompose,
    level_shift_check,
    mat_mul,
    neumann_inverse,
    neumann_partial_sums,
    recompose,
    vec_mat,
)
from skewseries.series import make_series
from skewseries.skewmaps import AutoSpec, DerivSpec, certify, derive_level
from skewseries.suites import random_elem

T34 = TruncLaurent(3, 4)
T38 = TruncLaurent(3, 8)


def subdiag(R, K, c, offset=1):
    z = R.zero()
    return BandMatrix.build(
        [[R.coerce(c) if i - j == offset else z for j in range(K + 1)] for i in range(K + 1)],
        R,
        row_finite=True,
        column_null_certified=True,
    )


def random_lower(R, K, rng, strict=True, min_val=1):
    z = R.zero()
    rows = []
    for i in range(K + 1):
        top = i if strict else i + 1
        rows.append([random_elem(R, rng, min_val) if j < top else z for j in range(K + 1)])
    return BandMatrix.build(rows, R, row_finite=True, column_null_certified=True)


def test_identity_is_neutral():
    A = random_lower(T38, 4, SplitMix64(1), strict=False, min_val=0)
    I = BandMatrix.identity(T38, 4)
    assert mat_mul(A, I).equals(A)
    assert mat_mul(I, A).equals(A)


def test_subdiagonal_shift():
    S = subdiag(T38, 4, 1)
    assert mat_mul(S, S).equals(subdiag(T38, 4, 1, offset=2))


def test_vector_matrix_associativity():
    rng = SplitMix64(7)
    for _ in range(50):
        A = random_lower(T38, 3, rng, strict=False, min_val=0)
        B = random_lower(T38, 3, rng, strict=False, min_val=0)
        v = [random_elem(T38, rng) for _ in range(4)]
        assert vec_mat(vec_mat(v, A), B) == vec_mat(v, mat_mul(A, B))


def test_product_needs_certification():
    A = BandMatrix.build([[T38.one()]], T38, row_finite=False, column_null_certified=False)
    with pytest.raises(CertificationMissing):
        mat_mul(A, A)


def test_neumann_of_zero_is_identity():
    assert neumann_inverse(BandMatrix.zero(T34, 3)).equals(BandMatrix.identity(T34, 3))


def test_neumann_geometric_example():
    pi = T34.monomial(1)
    U = subdiag(T34, 3, pi)
    B = neumann_inverse(U)
    for i in range(4):
        for j in range(4):
            want = T34.monomial(i - j) if i >= j else T34.zero()
            assert B.entries[i][j] == want
    I = BandMatrix.identity(T34, 3)
    assert mat_mul(I - U, B).equals(I)
    assert mat_mul(B, I - U).equals(I)
    assert B.flags["column_null_certified"]
    assert B.flags["V_lower_bound"] == 1


def test_neumann_rejects_diagonal():
    with pytest.raises(NotStrictlyLower):
        neumann_inverse(BandMatrix.identity(T34, 2))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32), st.integers(1, 6))
def test_neumann_matches_partial_sums(seed, K):
    U = random_lower(T38, K, SplitMix64(seed))
    B = neumann_inverse(U)
    assert B.equals(neumann_partial_sums(U))
    I = BandMatrix.identity(T38, K)
    assert mat_mul(I - U, B).equals(I)
    assert B.flags["V_lower_bound"] >= 1


def iwasawa():
    cfg = load_fixture("iwasawa")
    return cfg.delta


def test_build_A_char3_is_identity():
    lv = derive_level(iwasawa(), 1)
    A = build_A(lv, 5)
    assert A.equals(BandMatrix.identity(A.ring, 5))


def test_build_A_zmod_row():
    Z = Zmod(3, 2)
    d = DerivSpec.inner(-1, AutoSpec(Z, []))
    A = build_A(derive_level(d, 1), 5)
    assert A.entries[3][:4] == [Z.coerce(0), Z.coerce(3), Z.coerce(3), Z.coerce(1)]
    # row 4 = X x
    assert A.entries[4][:5] == [Z.coerce(0), Z.coerce(0), Z.coerce(3), Z.coerce(3), Z.coerce(1)]


def test_decompose_x_cubed_and_x_fourth():
    d = iwasawa()
    c = certify(d)
    lv = derive_level(d, 1)
    R = d.ring
    x3 = make_series([0, 0, 0, 1, 0, 0], d, c, exact_tail=True)
    parts = decompose(x3, lv).parts
    assert [g.coeffs for g in parts] == [[R.zero(), R.one()], [R.zero()] * 2, [R.zero()] * 2]
    x4 = make_series([0, 0, 0, 0, 1, 0], d, c, exact_tail=True)
    parts = decompose(x4, lv).parts
    assert [g.coeffs for g in parts] == [[R.zero()] * 2, [R.zero(), R.one()], [R.zero()] * 2]


def test_decompose_needs_aligned_order():
    d = iwasawa()
    with pytest.raises(InsufficientOrder):
        decompose(make_series([1] * 5, d, certify(d)), derive_level(d, 1))


@pytest.mark.parametrize("fixture", ["iwasawa", "zmod"])
@pytest.mark.parametrize("basis", ["x_powers", "x_minus_t_powers"])
@pytest.mark.parametrize("n", [1, 2])
def test_round_trip(fixture, basis, n):
    d = load_fixture(fixture).delta
    c = certify(d)
    lv = derive_level(d, n)
    rng = SplitMix64(n * 11 + len(basis))
    K = 2 * lv.degree - 1
    f = make_series([random_elem(d.ring, rng) for _ in range(K + 1)], d, c)
    dec = decompose(f, lv, basis)
    back = recompose(dec, d)
    assert back.coeffs == f.coeffs
    # blockwise freeness: decomposing the recomposition gives the parts back
    again = decompose(back, lv, basis)
    assert all(a.coeffs == b.coeffs for a, b in zip(again.parts, dec.parts))


def test_level_shift():
    d = iwasawa()
    c = certify(d)
    rng = SplitMix64(3)
    f = make_series([random_elem(d.ring, rng) for _ in range(18)], d, c)
    assert level_shift_check(f, d)["pass"]


def test_json_shapes():
    d = iwasawa()
    c = certify(d)
    f = make_series([1] * 6, d, c)
    dec = decompose(f, derive_level(d, 1))
    js = dec.to_json()
    assert js["level"] == 1 and js["Q"] == 1 and len(js["parts"]) == 3
    assert BandMatrix.identity(T34, 2).to_json()["K"] == 2
