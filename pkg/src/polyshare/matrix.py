"""Dense matrices over Z_p and the column/row block partitioning used by sharing.

Entries are held in a numpy object array of Python ints, so products never
overflow regardless of the modulus (2^61 - 1 by default).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DimensionMismatch, IndexOutOfRange, IndivisibleDimension
from .rng import uniform_ints


class Matrix:
    __slots__ = ("_a", "modulus")

    def __init__(self, data, modulus: int):
        a = np.array(data, dtype=object)
        if a.ndim != 2:
            raise DimensionMismatch(f"matrix data must be 2-D, got shape {a.shape}")
        a = a % modulus
        a.flags.writeable = False
        self._a = a
        self.modulus = modulus

    @classmethod
    def _wrap(cls, a: np.ndarray, modulus: int) -> "Matrix":
        # `a` must already be reduced and owned by the caller.
        m = cls.__new__(cls)
        a.flags.writeable = False
        m._a = a
        m.modulus = modulus
        return m

    @classmethod
    def zeros(cls, rows: int, cols: int, modulus: int) -> "Matrix":
        return cls._wrap(np.zeros((rows, cols), dtype=object), modulus)

    @classmethod
    def identity(cls, n: int, modulus: int) -> "Matrix":
        a = np.zeros((n, n), dtype=object)
        for i in range(n):
            a[i, i] = 1
        return cls._wrap(a, modulus)

    @classmethod
    def random(cls, rows: int, cols: int, modulus: int, rng: np.random.Generator) -> "Matrix":
        return cls._wrap(uniform_ints(rng, modulus, (rows, cols)), modulus)

    @property
    def array(self) -> np.ndarray:
        """Read-only view of the entries."""
        return self._a

    @property
    def shape(self) -> tuple[int, int]:
        return self._a.shape

    @property
    def rows(self) -> int:
        return self._a.shape[0]

    @property
    def cols(self) -> int:
        return self._a.shape[1]

    def tolist(self) -> list[list[int]]:
        return [[int(x) for x in row] for row in self._a]

    def flat(self) -> list[int]:
        return [int(x) for x in self._a.ravel()]

    def _check(self, other: "Matrix") -> None:
        if not isinstance(other, Matrix):
            raise TypeError(f"expected Matrix, got {type(other).__name__}")
        if other.modulus != self.modulus:
            raise DimensionMismatch("matrices live in different fields")

    def __add__(self, other: "Matrix") -> "Matrix":
        self._check(other)
        if self.shape != other.shape:
            raise DimensionMismatch(f"cannot add {self.shape} and {other.shape}")
        return Matrix._wrap((self._a + other._a) % self.modulus, self.modulus)

    def __sub__(self, other: "Matrix") -> "Matrix":
        self._check(other)
        if self.shape != other.shape:
            raise DimensionMismatch(f"cannot subtract {other.shape} from {self.shape}")
        return Matrix._wrap((self._a - other._a) % self.modulus, self.modulus)

    def __neg__(self) -> "Matrix":
        return Matrix._wrap((-self._a) % self.modulus, self.modulus)

    def scale(self, q: int) -> "Matrix":
        return Matrix._wrap((self._a * (q % self.modulus)) % self.modulus, self.modulus)

    def __rmul__(self, q: int) -> "Matrix":
        if isinstance(q, (int, np.integer)):
            return self.scale(int(q))
        return NotImplemented

    def __matmul__(self, other: "Matrix") -> "Matrix":
        self._check(other)
        if self.cols != other.rows:
            raise DimensionMismatch(f"cannot multiply {self.shape} by {other.shape}")
        return Matrix._wrap(self._a.dot(other._a) % self.modulus, self.modulus)

    @property
    def T(self) -> "Matrix":
        return Matrix._wrap(self._a.T.copy(), self.modulus)

    def transpose(self) -> "Matrix":
        return self.T

    def __getitem__(self, idx) -> "Matrix":
        return Matrix._wrap(np.array(self._a[idx], dtype=object, ndmin=2), self.modulus)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Matrix):
            return NotImplemented
        return (
            self.modulus == other.modulus
            and self.shape == other.shape
            and bool(np.all(self._a == other._a))
        )

    def __hash__(self):
        return hash((self.modulus, self.shape, tuple(self.flat())))

    def __repr__(self) -> str:
        return f"Matrix({self.tolist()}, modulus={self.modulus})"

    def to_dict(self) -> dict:
        return {"rows": self.rows, "cols": self.cols, "modulus": self.modulus, "data": self.flat()}

    @classmethod
    def from_dict(cls, d: dict) -> "Matrix":
        try:
            rows, cols, p, data = int(d["rows"]), int(d["cols"]), int(d["modulus"]), d["data"]
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"malformed matrix record: {e}") from None
        if not isinstance(data, list) or len(data) != rows * cols:
            raise ConfigError(f"matrix data must hold rows*cols = {rows * cols} integers")
        for x in data:
            if not isinstance(x, int) or isinstance(x, bool):
                raise ConfigError(f"matrix entry {x!r} is not an integer")
            if not 0 <= x < p:
                raise ConfigError(f"matrix entry {x} outside [0, {p})")
        a = np.array(data, dtype=object).reshape(rows, cols) if rows * cols else np.zeros((rows, cols), dtype=object)
        return cls._wrap(a, p)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Matrix":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid matrix JSON: {e}") from None
        return cls.from_dict(d)


def hstack(blocks: Sequence[Matrix]) -> Matrix:
    return Matrix._wrap(np.hstack([b.array for b in blocks]), blocks[0].modulus)


def vstack(blocks: Sequence[Matrix]) -> Matrix:
    return Matrix._wrap(np.vstack([b.array for b in blocks]), blocks[0].modulus)


def block_matrix(grid: Sequence[Sequence[Matrix]]) -> Matrix:
    """Assemble ``grid[i][j]`` into one matrix (row-major block layout)."""
    if len(grid) == 1 and len(grid[0]) == 1:
        return grid[0][0]
    return vstack([hstack(row) for row in grid])


@dataclass(frozen=True)
class ColumnPartition:
    """``A = [A_0, ..., A_{k-1}]`` split into equal-width column blocks."""

    rows: int
    cols: int
    k: int
    blocks: tuple[Matrix, ...]

    def concat(self) -> Matrix:
        return hstack(self.blocks)


def partition_columns(a: Matrix, k: int) -> ColumnPartition:
    """Block ``j`` (0-based) holds columns ``[j*w, (j+1)*w)`` with ``w = cols/k``."""
    if k < 1 or a.cols % k:
        raise IndivisibleDimension(f"k={k} does not divide {a.cols} columns")
    if k == 1:
        return ColumnPartition(a.rows, a.cols, 1, (a,))
    w = a.cols // k
    blocks = tuple(a[:, j * w:(j + 1) * w] for j in range(k))
    return ColumnPartition(a.rows, a.cols, k, blocks)


def row_slice(a: Matrix, i: int, k: int) -> Matrix:
    """Rows ``[i*h, (i+1)*h)`` with ``h = rows/k``; ``i`` is 0-based."""
    if k < 1 or a.rows % k:
        raise IndivisibleDimension(f"k={k} does not divide {a.rows} rows")
    if not 0 <= i < k:
        raise IndexOutOfRange(f"row block {i} outside [0, {k})")
    h = a.rows // k
    return a[i * h:(i + 1) * h, :]


def matmul_T(a: Matrix, b: Matrix) -> Matrix:
    """``a.T @ b``, the product the multiplication procedure is built around."""
    if a.rows != b.rows:
        raise DimensionMismatch(f"A^T B needs equal row counts, got {a.rows} and {b.rows}")
    return a.T @ b


def evaluate_blocks(coeffs: Sequence[Matrix], powers: Sequence[Sequence[int]], modulus: int) -> list[Matrix]:
    """Evaluate ``sum_c coeffs[c] * powers[n][c]`` for every row ``n`` of ``powers``.

    One object-dtype matrix product instead of a Python loop per point.
    """
    r, c = coeffs[0].shape
    stacked = np.array([m.array.ravel() for m in coeffs], dtype=object)
    vals = np.array(powers, dtype=object).dot(stacked) % modulus
    return [Matrix._wrap(row.reshape(r, c), modulus) for row in vals]


def sum_matrices(mats: Sequence[Matrix]) -> Matrix:
    acc = mats[0].array
    for m in mats[1:]:
        acc = acc + m.array
    return Matrix._wrap(acc % mats[0].modulus, mats[0].modulus)


def random_matrices(n: int, rows: int, cols: int, modulus: int, rng) -> list[Matrix]:
    draws = uniform_ints(rng, modulus, (n, rows, cols))
    return [Matrix._wrap(draws[i], modulus) for i in range(n)]


def as_matrix(rows: Iterable[Iterable[int]], modulus: int) -> Matrix:
    return Matrix([list(r) for r in rows], modulus)
