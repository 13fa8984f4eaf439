"""Exact rational and integer linear algebra.

Everything here works over ``fractions.Fraction`` and Python ints, so
results are exact. Matrices are immutable tuples of tuples.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

Number = int | Fraction


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot convert {x!r} exactly to a rational")


def denom_rational(x: Number) -> int:
    """Smallest m >= 1 with m*x integral."""
    return as_fraction(x).denominator


def lcm_all(values: Iterable[int]) -> int:
    return reduce(math.lcm, values, 1)


class SingularMatrixError(ValueError):
    pass


class RationalMatrix:
    """Square matrix with exact rational entries."""

    __slots__ = ("rows", "_hash")

    def __init__(self, rows: Sequence[Sequence]):
        rows = tuple(tuple(as_fraction(x) for x in row) for row in rows)
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise ValueError("RationalMatrix must be square and non-empty")
        self.rows = rows
        self._hash = None

    @classmethod
    def identity(cls, n: int) -> RationalMatrix:
        return cls([[int(i == j) for j in range(n)] for i in range(n)])

    @classmethod
    def diagonal(cls, entries: Sequence) -> RationalMatrix:
        n = len(entries)
        return cls([[entries[i] if i == j else 0 for j in range(n)] for i in range(n)])

    @property
    def dim(self) -> int:
        return len(self.rows)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __eq__(self, other):
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        return self.rows == other.rows

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.rows)
        return self._hash

    def __repr__(self):
        body = ", ".join("[" + ", ".join(str(x) for x in r) + "]" for r in self.rows)
        return f"RationalMatrix([{body}])"

    def __matmul__(self, other: RationalMatrix) -> RationalMatrix:
        n = self.dim
        if other.dim != n:
            raise ValueError("dimension mismatch")
        cols = list(zip(*other.rows))
        return RationalMatrix(
            [[sum((a * b for a, b in zip(row, col)), Fraction(0)) for col in cols] for row in self.rows]
        )

    def scale(self, c: Number) -> RationalMatrix:
        c = as_fraction(c)
        return RationalMatrix([[c * x for x in r] for r in self.rows])

    def transpose(self) -> RationalMatrix:
        return RationalMatrix(list(zip(*self.rows)))

    def is_integral(self) -> bool:
        return all(x.denominator == 1 for r in self.rows for x in r)

    def denominator(self) -> int:
        return denom_matrix(self)

    def det(self) -> Fraction:
        return determinant(self.rows)

    def inverse(self) -> RationalMatrix:
        return RationalMatrix(solve_rational(self.rows, [list(r) for r in RationalMatrix.identity(self.dim).rows]))

    def to_json(self) -> list[list[str]]:
        return [[f"{x.numerator}/{x.denominator}" for x in r] for r in self.rows]

    @classmethod
    def from_json(cls, data) -> RationalMatrix:
        return cls([[as_fraction(x) if not isinstance(x, str) else Fraction(x) for x in r] for r in data])


def denom_matrix(g: RationalMatrix) -> int:
    """Least common multiple of the entry denominators; 1 iff g is integral."""
    return lcm_all(x.denominator for r in g.rows for x in r)


def determinant(rows: Sequence[Sequence]) -> Fraction:
    a = [[as_fraction(x) for x in r] for r in rows]
    n = len(a)
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det *= a[c][c]
        inv = 1 / a[c][c]
        for r in range(c + 1, n):
            f = a[r][c] * inv
            if f:
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return det


def solve_rational(a_rows, b_rows):
    """Solve A X = B exactly (A square, nonsingular). B given as list of rows."""
    n = len(a_rows)
    m = len(b_rows[0])
    aug = [[as_fraction(x) for x in a_rows[i]] + [as_fraction(x) for x in b_rows[i]] for i in range(n)]
    for c in range(n):
        piv = next((r for r in range(c, n) if aug[r][c] != 0), None)
        if piv is None:
            raise SingularMatrixError("matrix is singular")
        aug[c], aug[piv] = aug[piv], aug[c]
        inv = 1 / aug[c][c]
        aug[c] = [x * inv for x in aug[c]]
        for r in range(n):
            if r != c and aug[r][c] != 0:
                f = aug[r][c]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[c])]
    return [row[n:n + m] for row in aug]


def integer_det(rows: Sequence[Sequence[int]]) -> int:
    """Bareiss fraction-free determinant of an integer matrix."""
    a = [list(map(int, r)) for r in rows]
    n = len(a)
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((r for r in range(k + 1, n) if a[r][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1] if n else 1


def hermite_normal_form(m: Sequence[Sequence[int]]) -> tuple[list[list[int]], list[list[int]]]:
    """Row-style Hermite normal form of a nonsingular integer matrix.

    Returns ``(H, U)`` with ``M == U @ H``, ``U`` unimodular and ``H`` upper
    triangular with positive pivots and entries above each pivot reduced
    into ``[0, pivot)``.
    """
    n = len(m)
    if any(len(r) != n for r in m):
        raise ValueError("HNF expects a square matrix")
    if integer_det(m) == 0:
        raise SingularMatrixError("HNF requires a nonsingular matrix")
    h = [list(map(int, r)) for r in m]
    # v tracks the row operations: v @ M == H, so U = v^{-1}
    v = [[int(i == j) for j in range(n)] for i in range(n)]

    def combine(r1, r2, a, b, c, d):
        h[r1], h[r2] = ([a * x + b * y for x, y in zip(h[r1], h[r2])],
                        [c * x + d * y for x, y in zip(h[r1], h[r2])])
        v[r1], v[r2] = ([a * x + b * y for x, y in zip(v[r1], v[r2])],
                        [c * x + d * y for x, y in zip(v[r1], v[r2])])

    for col in range(n):
        for r in range(col + 1, n):
            if h[r][col] == 0:
                continue
            x, y = h[col][col], h[r][col]
            g, s, t = _xgcd(x, y)
            # [[s, t], [-y/g, x/g]] has determinant 1
            combine(col, r, s, t, -y // g, x // g)
        if h[col][col] < 0:
            h[col] = [-x for x in h[col]]
            v[col] = [-x for x in v[col]]
        piv = h[col][col]
        for r in range(col):
            q = h[r][col] // piv
            if q:
                h[r] = [x - q * y for x, y in zip(h[r], h[col])]
                v[r] = [x - q * y for x, y in zip(v[r], v[col])]
    u_inv = RationalMatrix(v).inverse()
    u = [[int(x) for x in row] for row in u_inv.rows]
    return h, u


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a - (a // b) * b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def rank_over_Q(vectors: Sequence[Sequence]) -> int:
    """Exact rank of a list of rational vectors via fraction-free elimination."""
    if not vectors:
        return 0
    length = len(vectors[0])
    if any(len(v) != length for v in vectors):
        raise ValueError("vectors must share a common length")
    rows = []
    for v in vectors:
        fr = [as_fraction(x) for x in v]
        scale = lcm_all(x.denominator for x in fr)
        rows.append([int(x * scale) for x in fr])
    return _integer_rank(rows)


def _integer_rank(rows: list[list[int]]) -> int:
    rows = [r[:] for r in rows]
    rank, prev = 0, 1
    ncols = len(rows[0]) if rows else 0
    for c in range(ncols):
        piv = next((r for r in range(rank, len(rows)) if rows[r][c] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        p = rows[rank][c]
        for r in range(rank + 1, len(rows)):
            rows[r] = [(x * p - rows[r][c] * y) // prev for x, y in zip(rows[r], rows[rank])]
        prev = p
        rank += 1
    return rank


def row_echelon_basis(vectors: Sequence[Sequence]) -> list[list[Fraction]]:
    """Reduced row echelon basis (exact) of the span of ``vectors``."""
    rows = [[as_fraction(x) for x in v] for v in vectors]
    basis: list[list[Fraction]] = []
    pivots: list[int] = []
    for v in rows:
        v = reduce_against(v, basis, pivots)
        if any(v):
            c = next(i for i, x in enumerate(v) if x != 0)
            v = [x / v[c] for x in v]
            for k, b in enumerate(basis):
                if b[c] != 0:
                    f = b[c]
                    basis[k] = [x - f * y for x, y in zip(b, v)]
            basis.append(v)
            pivots.append(c)
    order = sorted(range(len(basis)), key=lambda k: pivots[k])
    return [basis[k] for k in order]


def reduce_against(v, basis, pivots):
    v = list(v)
    for b, c in zip(basis, pivots):
        if v[c] != 0:
            f = v[c]
            v = [x - f * y for x, y in zip(v, b)]
    return v


def random_unimodular(n: int, rng: random.Random, steps: int = 12, bound: int = 2) -> RationalMatrix:
    """Product of ``steps`` random elementary matrices; determinant exactly 1."""
    m = [[int(i == j) for j in range(n)] for i in range(n)]
    for _ in range(steps):
        i, j = rng.sample(range(n), 2)
        c = rng.choice([k for k in range(-bound, bound + 1) if k])
        m[i] = [x + c * y for x, y in zip(m[i], m[j])]
    return RationalMatrix(m)
