"""Prime-field arithmetic and exact linear algebra over Z_p.

Field elements are plain Python ints in ``[0, p)``; the modulus lives on a
:class:`PrimeField` context rather than on each element.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import InverseOfZero, NotPrime, SingularMatrix

MERSENNE_61 = (1 << 61) - 1

# Deterministic for every n < 3.3e24, which covers all 64-bit moduli.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def is_prime(n: int) -> bool:
    """Miller-Rabin with a fixed witness set (deterministic in the 64-bit range)."""
    if n < 2:
        return False
    for q in _MR_BASES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class PrimeField:
    """Arithmetic context for Z_p.

    ``default_seed`` is carried along so that components that need
    randomness but were not handed an explicit seed stay reproducible.
    """

    modulus: int = MERSENNE_61
    default_seed: int = 0

    def __post_init__(self):
        if not isinstance(self.modulus, int) or not is_prime(self.modulus):
            raise NotPrime(f"modulus {self.modulus!r} is not prime")

    @property
    def p(self) -> int:
        return self.modulus

    def __call__(self, value: int) -> int:
        return value % self.modulus

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.modulus

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.modulus

    def neg(self, a: int) -> int:
        return -a % self.modulus

    def mul(self, a: int, b: int) -> int:
        return a * b % self.modulus

    def pow(self, a: int, e: int) -> int:
        if e < 0:
            return pow(self.inv(a), -e, self.modulus)
        return pow(a, e, self.modulus)

    def inv(self, a: int) -> int:
        a %= self.modulus
        if a == 0:
            raise InverseOfZero(f"0 has no inverse mod {self.modulus}")
        return pow(a, self.modulus - 2, self.modulus)

    def div(self, a: int, b: int) -> int:
        return a * self.inv(b) % self.modulus


def invert_matrix(rows: Sequence[Sequence[int]], field: PrimeField) -> list[list[int]]:
    """Gauss-Jordan inverse of a square matrix over ``field``.

    Raises :class:`SingularMatrix` on exact rank deficiency.
    """
    p = field.modulus
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValueError("matrix is not square")
    aug = [[x % p for x in r] + [int(i == j) for j in range(n)] for i, r in enumerate(rows)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col]), None)
        if pivot is None:
            raise SingularMatrix(f"matrix is singular (rank deficient at column {col})")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        scale = field.inv(aug[col][col])
        prow = [x * scale % p for x in aug[col]]
        aug[col] = prow
        for r in range(n):
            f = aug[r][col]
            if r != col and f:
                row = aug[r]
                aug[r] = [(x - f * y) % p for x, y in zip(row, prow)]
    return [r[n:] for r in aug]


def determinant(rows: Sequence[Sequence[int]], field: PrimeField) -> int:
    p = field.modulus
    a = [[x % p for x in r] for r in rows]
    n = len(a)
    det = 1
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col]), None)
        if pivot is None:
            return 0
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            det = -det
        det = det * a[col][col] % p
        inv = field.inv(a[col][col])
        for r in range(col + 1, n):
            f = a[r][col] * inv % p
            if f:
                a[r] = [(x - f * y) % p for x, y in zip(a[r], a[col])]
    return det % p


def vandermonde(alphas: Sequence[int], exponents: Sequence[int], field: PrimeField) -> list[list[int]]:
    """Evaluation matrix ``M[n][i] = alphas[n] ** exponents[i]``."""
    p = field.modulus
    return [[pow(a, e, p) for e in exponents] for a in alphas]


@dataclass(frozen=True)
class ReconstructionVectors:
    """Weights recovering selected coefficients from evaluations.

    ``vectors[j]`` satisfies ``coef(exponents[targets[j]]) = sum_n vectors[j][n] * P(alphas[n])``
    for every polynomial ``P`` supported on ``exponents``.
    """

    alphas: tuple[int, ...]
    exponents: tuple[int, ...]
    targets: tuple[int, ...]
    vectors: tuple[tuple[int, ...], ...]

    def __getitem__(self, j: int) -> tuple[int, ...]:
        return self.vectors[j]

    def __len__(self) -> int:
        return len(self.vectors)

    def apply(self, j: int, values: Sequence[int], field: PrimeField) -> int:
        return sum(r * v for r, v in zip(self.vectors[j], values)) % field.modulus


def solve_general_vandermonde(
    alphas: Sequence[int],
    exponents: Sequence[int],
    targets: Sequence[int],
    field: PrimeField,
) -> ReconstructionVectors:
    """Reconstruction weights for coefficients ``exponents[t]``, ``t in targets``.

    Inverts the generalized Vandermonde matrix ``alpha_n ** e_i`` and reads
    the target rows of the inverse.
    """
    if len(alphas) != len(exponents):
        raise ValueError(f"need one evaluation point per exponent ({len(alphas)} != {len(exponents)})")
    if len(set(a % field.modulus for a in alphas)) != len(alphas):
        raise SingularMatrix("evaluation points are not distinct")
    for t in targets:
        if not 0 <= t < len(exponents):
            raise IndexError(f"target index {t} outside exponent list")
    inv = invert_matrix(vandermonde(alphas, exponents, field), field)
    return ReconstructionVectors(
        alphas=tuple(alphas),
        exponents=tuple(exponents),
        targets=tuple(targets),
        vectors=tuple(tuple(inv[t]) for t in targets),
    )
