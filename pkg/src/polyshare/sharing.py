"""(b, t, k) polynomial sharing of m x m matrices.

A matrix ``A = [A_0, ..., A_{k-1}]`` (column blocks of width m/k) is encoded as

    F(x) = sum_j A_j x^(b*j) + sum_j R_j x^(k^2 + j),   j over [0,k) and [0,t-1)

with uniform masks ``R_j``; worker ``n`` holds ``F(alpha_n)``. With ``k = b = 1``
this is exactly Shamir sharing of the whole matrix. Indices are 0-based
throughout.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from .errors import (
    AlphaSamplingExhausted,
    BadBasis,
    ConfigError,
    DimensionMismatch,
    IndexOutOfRange,
    IndivisibleDimension,
    NotEnoughShares,
    SingularMatrix,
)
from .field import PrimeField, determinant, solve_general_vandermonde, vandermonde
from .matrix import Matrix, evaluate_blocks, hstack, partition_columns, random_matrices
from .rng import SAMPLER, derive_rng

ALPHA_RETRY_CAP = 64


def data_exponents(b: int, k: int) -> list[int]:
    return [b * j for j in range(k)]


def mask_exponents(k: int, t: int) -> list[int]:
    return [k * k + j for j in range(t - 1)]


def share_exponents(b: int, k: int, t: int) -> list[int]:
    """Exponents carrying data blocks, then mask blocks."""
    return data_exponents(b, k) + mask_exponents(k, t)


def check_basis(b: int, k: int) -> None:
    if not isinstance(b, int) or not 1 <= b <= k:
        raise BadBasis(f"basis b={b} outside [1, {k}]")


def coefficient_index(i: int, j: int, k: int) -> int:
    """Exponent of ``H(x) = F_A^T(x) F_B(x)`` holding block ``A_i^T B_j``."""
    if not (0 <= i < k and 0 <= j < k):
        raise IndexOutOfRange(f"block index ({i}, {j}) outside [0, {k})^2")
    return i + k * j


@dataclass(frozen=True)
class SupportSet:
    """Exponents with structurally nonzero coefficients in ``F_{A,1}^T F_{B,k}``.

    The four pieces are the products data*data, data(A)*mask(B),
    mask(A)*data(B) and mask*mask.
    """

    k: int
    t: int
    data_data: frozenset[int]
    data_mask: frozenset[int]
    mask_data: frozenset[int]
    mask_mask: frozenset[int]

    @property
    def exponents(self) -> tuple[int, ...]:
        return tuple(sorted(self.data_data | self.data_mask | self.mask_data | self.mask_mask))

    @property
    def degree(self) -> int:
        return max(self.exponents)

    def zero_slots(self) -> list[int]:
        present = set(self.exponents)
        return [e for e in range(2 * self.k ** 2 + 2 * self.t - 3) if e not in present]

    def __len__(self) -> int:
        return len(self.exponents)

    def __iter__(self):
        return iter(self.exponents)

    def __contains__(self, e) -> bool:
        return e in self.exponents


@functools.lru_cache(maxsize=256)
def product_support(k: int, t: int) -> SupportSet:
    if k < 1 or t < 1:
        raise ConfigError(f"k and t must be >= 1 (got k={k}, t={t})")
    kk = k * k
    return SupportSet(
        k=k,
        t=t,
        data_data=frozenset(range(kk)),
        data_mask=frozenset(kk + i + j for i in range(k) for j in range(t - 1)),
        mask_data=frozenset(kk + i * k + j for i in range(k) for j in range(t - 1)),
        mask_mask=frozenset(2 * kk + j for j in range(2 * t - 3)),
    )


@dataclass(frozen=True)
class SharingParams:
    """Scheme-wide parameters shared by every bundle in a run (basis excluded)."""

    field: PrimeField
    t: int
    k: int
    alphas: tuple[int, ...]

    def __post_init__(self):
        if self.t < 1 or self.k < 1:
            raise ConfigError(f"t and k must be >= 1 (got t={self.t}, k={self.k})")
        object.__setattr__(self, "alphas", tuple(int(a) for a in self.alphas))
        p = self.field.modulus
        if any(not 0 < a < p for a in self.alphas):
            raise ConfigError("evaluation points must be nonzero field elements")
        if len(set(self.alphas)) != len(self.alphas):
            raise ConfigError("evaluation points must be distinct")
        if len(self.alphas) < self.k + self.t - 1:
            raise ConfigError(f"need at least k+t-1 = {self.k + self.t - 1} workers, got {len(self.alphas)}")

    @property
    def N(self) -> int:
        return len(self.alphas)

    @property
    def modulus(self) -> int:
        return self.field.modulus

    def to_dict(self) -> dict:
        return {"modulus": self.modulus, "t": self.t, "k": self.k, "alphas": list(self.alphas)}

    @classmethod
    def from_dict(cls, d: dict) -> "SharingParams":
        return cls(PrimeField(int(d["modulus"])), int(d["t"]), int(d["k"]), tuple(d["alphas"]))


@dataclass(frozen=True)
class SharePolynomial:
    """Matrix polynomial ``sum_i coeffs[i] * x ** exponents[i]``."""

    exponents: tuple[int, ...]
    coeffs: tuple[Matrix, ...]

    def evaluate(self, x: int) -> Matrix:
        return self.evaluate_many([x])[0]

    def evaluate_many(self, xs: Sequence[int]) -> list[Matrix]:
        p = self.coeffs[0].modulus
        powers = [[pow(x, e, p) for e in self.exponents] for x in xs]
        return evaluate_blocks(self.coeffs, powers, p)

    def coefficient(self, e: int) -> Matrix | None:
        try:
            return self.coeffs[self.exponents.index(e)]
        except ValueError:
            return None


def share_polynomial(a: Matrix, b: int, t: int, k: int, rng: np.random.Generator) -> SharePolynomial:
    """Build ``F_{A,b,t,k}`` with fresh uniform masks drawn from ``rng``."""
    check_basis(b, k)
    blocks = partition_columns(a, k).blocks
    masks = random_matrices(t - 1, a.rows, a.cols // k, a.modulus, rng) if t > 1 else []
    return SharePolynomial(tuple(share_exponents(b, k, t)), tuple(blocks) + tuple(masks))


@dataclass(frozen=True)
class ShareBundle:
    """All N workers' shares of one logical matrix."""

    params: SharingParams
    basis: int
    shares: tuple[Matrix, ...]
    label: str = ""
    m: int = dc_field(default=0)

    def __post_init__(self):
        if len(self.shares) != self.params.N:
            raise ConfigError(f"expected {self.params.N} shares, got {len(self.shares)}")
        rows, cols = self.shares[0].shape
        if any(s.shape != (rows, cols) for s in self.shares):
            raise DimensionMismatch("shares have inconsistent shapes")
        if rows != cols * self.params.k:
            raise DimensionMismatch(f"share shape {rows}x{cols} is not m x m/k for k={self.params.k}")
        object.__setattr__(self, "m", rows)

    @property
    def N(self) -> int:
        return self.params.N

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "label": self.label,
            "basis": self.basis,
            "shares": [s.to_dict() for s in self.shares],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ShareBundle":
        try:
            params = SharingParams.from_dict(d["params"])
            shares = tuple(Matrix.from_dict(s) for s in d["shares"])
            return cls(params, int(d["basis"]), shares, str(d.get("label", "")))
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"malformed share bundle: {e}") from None


def share(
    a: Matrix,
    b: int,
    params: SharingParams,
    rng: np.random.Generator,
    label: str = "",
) -> ShareBundle:
    """Encode ``a`` as a (b, t, k) sharing evaluated at every ``params.alphas``."""
    if a.rows != a.cols:
        raise DimensionMismatch(f"only square matrices are shared, got {a.shape}")
    if a.modulus != params.modulus:
        raise DimensionMismatch("matrix and sharing parameters use different fields")
    if a.cols % params.k:
        raise IndivisibleDimension(f"k={params.k} does not divide m={a.cols}")
    poly = share_polynomial(a, b, params.t, params.k, rng)
    return ShareBundle(params, b, tuple(poly.evaluate_many(params.alphas)), label)


def reconstruction_plan(alphas: Sequence[int], b: int, t: int, k: int, field: PrimeField):
    """Weights recovering the k data blocks from the first k+t-1 of ``alphas``."""
    need = k + t - 1
    if len(alphas) < need:
        raise NotEnoughShares(f"need {need} shares, got {len(alphas)}")
    return _cached_plan(tuple(alphas[:need]), b, t, k, field)


@functools.lru_cache(maxsize=1024)
def _cached_plan(alphas: tuple[int, ...], b: int, t: int, k: int, field: PrimeField):
    return solve_general_vandermonde(list(alphas), share_exponents(b, k, t), range(k), field)


def combine(weights: Sequence[int], mats: Sequence[Matrix]) -> Matrix:
    """``sum_n weights[n] * mats[n]`` in one vectorised pass."""
    p = mats[0].modulus
    return evaluate_blocks(mats, [list(weights)], p)[0]


def reconstruct_from(
    shares: Sequence[Matrix],
    alphas: Sequence[int],
    b: int,
    t: int,
    k: int,
    field: PrimeField,
) -> Matrix:
    """Recover the shared matrix from any k+t-1 (or more) shares.

    Only the first k+t-1 are used; a degenerate subset raises
    :class:`SingularMatrix` instead of being retried.
    """
    check_basis(b, k)
    if len(shares) != len(alphas):
        raise ConfigError("one evaluation point per share required")
    plan = reconstruction_plan(alphas, b, t, k, field)
    used = list(shares[: k + t - 1])
    return hstack([combine(plan[j], used) for j in range(k)])


def reconstruct(bundle: ShareBundle, workers: Sequence[int] | None = None) -> Matrix:
    idx = list(range(bundle.N)) if workers is None else list(workers)
    prm = bundle.params
    return reconstruct_from(
        [bundle.shares[i] for i in idx], [prm.alphas[i] for i in idx], bundle.basis, prm.t, prm.k, prm.field
    )


def interpolate_coefficients(shares: Sequence[Matrix], alphas: Sequence[int], field: PrimeField) -> list[Matrix]:
    """Coefficients 0..N-1 of the unique degree < N polynomial through all shares."""
    n = len(shares)
    plan = solve_general_vandermonde(list(alphas), list(range(n)), range(n), field)
    return [combine(plan[e], shares) for e in range(n)]


def bundle_support(bundle: ShareBundle) -> list[int]:
    """Exponents with nonzero coefficient when all N shares are interpolated."""
    coeffs = interpolate_coefficients(bundle.shares, bundle.params.alphas, bundle.params.field)
    return [e for e, c in enumerate(coeffs) if any(c.flat())]


def alphas_valid(alphas: Sequence[int], k: int, t: int, field: PrimeField) -> bool:
    """Eager checks done at sampling time.

    The product-support Vandermonde over the first |J| points (when N >= |J|)
    and the first k+t-1 points' share matrices for every basis in [1, k].
    """
    p = field.modulus
    if len(set(a % p for a in alphas)) != len(alphas) or any(a % p == 0 for a in alphas):
        return False
    support = product_support(k, t).exponents
    if len(alphas) >= len(support):
        if determinant(vandermonde(alphas[: len(support)], support, field), field) == 0:
            return False
    need = k + t - 1
    if len(alphas) >= need:
        for b in range(1, k + 1):
            if determinant(vandermonde(alphas[:need], share_exponents(b, k, t), field), field) == 0:
                return False
    return True


def sample_alphas(
    N: int,
    k: int,
    t: int,
    field: PrimeField,
    seed: int | None = None,
    max_tries: int = ALPHA_RETRY_CAP,
) -> tuple[int, ...]:
    """Draw N distinct nonzero evaluation points passing :func:`alphas_valid`."""
    p = field.modulus
    if p - 1 < N:
        raise AlphaSamplingExhausted(f"Z_{p} has only {p - 1} nonzero elements, {N} workers requested")
    seed = field.default_seed if seed is None else seed
    for attempt in range(max_tries):
        rng = derive_rng(seed, SAMPLER, attempt)
        if p - 1 <= 4 * N:
            pool = rng.permutation(p - 1)[:N] + 1
            alphas = tuple(int(a) for a in pool)
        else:
            seen: dict[int, None] = {}
            while len(seen) < N:
                seen.setdefault(int(rng.integers(1, p, dtype=np.int64)), None)
            alphas = tuple(seen)
        if alphas_valid(alphas, k, t, field):
            return alphas
    raise AlphaSamplingExhausted(f"no valid evaluation points after {max_tries} attempts (field too small?)")


def mask_matrix(alphas: Sequence[int], k: int, t: int, field: PrimeField) -> list[list[int]]:
    """``[alpha_i ** (k^2 + j)]`` for the given points and j in [0, t-1)."""
    return vandermonde(alphas, mask_exponents(k, t), field)


def mask_certificate_holds(alphas: Sequence[int], k: int, t: int, field: PrimeField) -> bool:
    """True when the mask evaluations at ``alphas`` are jointly uniform.

    That is exactly invertibility of the (t-1) x (t-1) mask matrix.
    """
    if len(alphas) != t - 1:
        raise ConfigError(f"certificate subsets have size t-1 = {t - 1}")
    if t == 1:
        return True
    return determinant(mask_matrix(alphas, k, t, field), field) != 0


def subsets(n: int, size: int):
    return itertools.combinations(range(n), size)
