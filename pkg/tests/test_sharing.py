import itertools

import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_force_product_support, lagrange_at_zero
from polyshare.errors import (
    AlphaSamplingExhausted,
    BadBasis,
    ConfigError,
    IndexOutOfRange,
    IndivisibleDimension,
    NotEnoughShares,
    SingularMatrix,
)
from polyshare.field import MERSENNE_61, PrimeField, determinant, vandermonde
from polyshare.matrix import Matrix, hstack, partition_columns
from polyshare.rng import derive_rng
from polyshare.sharing import (
    ShareBundle,
    SharingParams,
    alphas_valid,
    bundle_support,
    coefficient_index,
    interpolate_coefficients,
    mask_certificate_holds,
    product_support,
    reconstruct,
    reconstruct_from,
    sample_alphas,
    share,
    share_exponents,
    share_polynomial,
)


def params(k, t, N, p=MERSENNE_61, seed=0):
    f = PrimeField(p)
    return SharingParams(f, t, k, sample_alphas(N, k, t, f, seed))


def test_share_exponents_layout():
    assert share_exponents(1, 2, 4) == [0, 1, 4, 5, 6]
    assert share_exponents(2, 2, 4) == [0, 2, 4, 5, 6]
    assert share_exponents(1, 1, 3) == [0, 1, 2]


def test_direct_evaluation_t1():
    f = PrimeField(101)
    prm = SharingParams(f, 1, 2, (5, 6))
    a = Matrix([[1, 2], [3, 4]], 101)
    b = share(a, 1, prm, derive_rng(0))
    assert b.shares[0].tolist() == [[11], [23]]


def test_k1_is_shamir():
    p = 101
    f = PrimeField(p)
    prm = SharingParams(f, 3, 1, (2, 5, 9, 14))
    a = Matrix([[42]], p)
    b = share(a, 1, prm, derive_rng(3))
    ys = [s.tolist()[0][0] for s in b.shares]
    # any 3 shares interpolate a degree-2 polynomial whose constant term is the secret
    for sub in itertools.combinations(range(4), 3):
        assert lagrange_at_zero([prm.alphas[i] for i in sub], [ys[i] for i in sub], p) == 42
    assert bundle_support(b) == [0, 1, 2]


def test_single_share_constant_polynomial():
    prm = SharingParams(PrimeField(101), 1, 1, (17,))
    a = Matrix([[3, 4], [5, 6]], 101)
    b = share(a, 1, prm, derive_rng(0))
    assert b.shares[0] == a
    assert reconstruct(b) == a


def test_seed_determinism(rng):
    prm = params(2, 3, 11)
    a = Matrix.random(4, 4, prm.modulus, rng)
    b1 = share(a, 1, prm, derive_rng(9, 1))
    b2 = share(a, 1, prm, derive_rng(9, 1))
    b3 = share(a, 1, prm, derive_rng(10, 1))
    assert b1 == b2
    assert b1.shares != b3.shares
    assert reconstruct(b1) == reconstruct(b3) == a


@pytest.mark.parametrize("k,t", list(itertools.product([1, 2, 3], repeat=2)))
def test_roundtrip_all_bases(k, t):
    prm = params(k, t, k + t + 2, seed=k * 10 + t)
    rng = derive_rng(k, t)
    for b in range(1, k + 1):
        for _ in range(100 // (3 * k)):
            a = Matrix.random(6, 6, prm.modulus, rng)
            bundle = share(a, b, prm, rng)
            assert reconstruct(bundle) == a


def test_reconstruct_from_any_subset(rng):
    prm = params(2, 2, 8)
    a = Matrix.random(4, 4, prm.modulus, rng)
    bundle = share(a, 2, prm, rng)
    for sub in itertools.combinations(range(8), 3):
        assert reconstruct(bundle, sub) == a


def test_not_enough_shares(rng):
    prm = params(2, 2, 8)
    bundle = share(Matrix.random(4, 4, prm.modulus, rng), 1, prm, rng)
    with pytest.raises(NotEnoughShares):
        reconstruct(bundle, [0, 1])


def test_degenerate_subset_surfaces():
    # basis-2 exponents {0, 2, 4}: alpha and -alpha are indistinguishable
    p = 101
    prm = SharingParams(PrimeField(p), 2, 2, (1, 100, 3, 4))
    a = Matrix([[1, 2], [3, 4]], p)
    bundle = share(a, 2, prm, derive_rng(1))
    with pytest.raises(SingularMatrix):
        reconstruct(bundle, [0, 1, 2])
    assert reconstruct(bundle, [0, 2, 3]) == a


def test_share_errors(rng):
    prm = params(2, 2, 8)
    a = Matrix.random(4, 4, prm.modulus, rng)
    with pytest.raises(BadBasis):
        share(a, 3, prm, rng)
    with pytest.raises(BadBasis):
        share(a, 0, prm, rng)
    with pytest.raises(IndivisibleDimension):
        share(Matrix.random(3, 3, prm.modulus, rng), 1, prm, rng)


def test_params_validation():
    f = PrimeField(101)
    with pytest.raises(ConfigError):
        SharingParams(f, 2, 2, (1, 2, 2))
    with pytest.raises(ConfigError):
        SharingParams(f, 2, 2, (0, 1, 2))
    with pytest.raises(ConfigError):
        SharingParams(f, 2, 2, (1, 2))


def test_linearity_at_coefficient_level(rng):
    prm = params(2, 3, 11)
    p = prm.modulus
    a, b = Matrix.random(4, 4, p, rng), Matrix.random(4, 4, p, rng)
    fa = share_polynomial(a, 1, 3, 2, derive_rng(1))
    fb = share_polynomial(b, 1, 3, 2, derive_rng(2))
    summed = [x + y for x, y in zip(fa.evaluate_many(prm.alphas), fb.evaluate_many(prm.alphas))]
    coeffs = interpolate_coefficients(summed, prm.alphas, prm.field)
    for e, ca, cb in zip(fa.exponents, fa.coeffs, fb.coeffs):
        assert coeffs[e] == ca + cb
    assert reconstruct_from(summed, prm.alphas, 1, 3, 2, prm.field) == a + b


def test_bundle_json_roundtrip(rng):
    prm = params(2, 2, 8)
    bundle = share(Matrix.random(4, 4, prm.modulus, rng), 2, prm, rng, label="X1")
    again = ShareBundle.from_dict(bundle.to_dict())
    assert again == bundle
    with pytest.raises(ConfigError):
        ShareBundle.from_dict({"params": {}})


# ----------------------------------------------------------- support sets


def test_support_examples():
    assert list(product_support(2, 4)) == list(range(13))
    assert list(product_support(2, 2)) == [0, 1, 2, 3, 4, 5, 6, 8]
    assert list(product_support(1, 3)) == [0, 1, 2, 3, 4]
    assert len(product_support(2, 2)) == 8


@pytest.mark.parametrize("k,t", list(itertools.product(range(1, 7), repeat=2)))
def test_support_matches_brute_force(k, t):
    assert list(product_support(k, t)) == brute_force_product_support(k, t)


def test_support_formula_for_t_at_least_2():
    for k in range(1, 13):
        for t in range(2, 13):
            assert len(product_support(k, t)) == min(2 * k * k + 2 * t - 3, k * k + k * t + t - 2)
            zeros = len(product_support(k, t).zero_slots())
            assert zeros == ((k - t + 1) * (k - 1) if k >= t else 0)


def test_support_without_masks_is_data_only():
    for k in range(1, 7):
        assert list(product_support(k, 1)) == list(range(k * k))


def test_coefficient_index():
    assert coefficient_index(0, 0, 5) == 0
    assert coefficient_index(1, 1, 2) == 3
    assert sorted(coefficient_index(i, j, 3) for i in range(3) for j in range(3)) == list(range(9))
    with pytest.raises(IndexOutOfRange):
        coefficient_index(2, 0, 2)


# -------------------------------------------------------------- alphas


def test_alpha_sampling():
    with pytest.raises(AlphaSamplingExhausted):
        sample_alphas(5, 1, 1, PrimeField(3))
    f = PrimeField(10007)
    al = sample_alphas(8, 2, 2, f, seed=4)
    assert len(set(al)) == 8 and 0 not in al
    sup = list(product_support(2, 2))
    assert determinant(vandermonde(al, sup, f), f) != 0
    for b in (1, 2):
        assert determinant(vandermonde(al[:3], share_exponents(b, 2, 2), f), f) != 0
    assert sample_alphas(8, 2, 2, f, seed=4) == al
    assert alphas_valid(sample_alphas(3, 1, 2, PrimeField(7), 1), 1, 2, PrimeField(7))


def test_alpha_sampling_exhausts_on_tiny_field():
    # over Z_5 every nonzero x has x^4 = 1, so the basis-2 exponents {0, 2, 4} are always singular
    with pytest.raises(AlphaSamplingExhausted):
        sample_alphas(4, 2, 2, PrimeField(5))


def test_mask_certificate():
    f = PrimeField(101)
    assert mask_certificate_holds([3], 2, 2, f)
    assert not mask_certificate_holds([0], 2, 2, f)
    assert mask_certificate_holds([], 2, 1, f)
    with pytest.raises(ConfigError):
        mask_certificate_holds([1, 2], 2, 2, f)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 2 ** 31))
def test_roundtrip_property(k, t, seed):
    prm = params(k, t, k + t - 1, p=10007, seed=seed)
    rng = derive_rng(seed)
    a = Matrix.random(2 * k, 2 * k, prm.modulus, rng)
    b = 1 + seed % k
    assert reconstruct(share(a, b, prm, rng)) == a
    assert hstack(partition_columns(a, k).blocks) == a
