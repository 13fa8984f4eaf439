"""Single cosets gK inside Hecke double cosets K a K of PGL_d(Q_p).

A coset gK is the same thing as the lattice g Z_p^d. Each lattice has a unique
column Hermite form: upper triangular, diagonal p^{b_1}, ..., p^{b_d}, and
entries right of the pivot in row i reduced into [0, p^{b_i}). The diagonal
exponents b are the Iwasawa A-part of the coset. A lattice lies in K a K iff
its elementary divisors are p^{a_1} >= ... >= p^{a_d}.

Counts for large double cosets use the closed volume formula
``p^{<2 rho, a>} W(1/p) / W_a(1/p)``; enumeration is the independent check.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np
from sympy import isprime

from .exact_arith import RationalMatrix, denom_matrix
from .root_data import canonical, dominant, two_rho_pairing

ENUMERATION_GUARD = 10**7


class EnumerationGuardError(RuntimeError):
    """Raised when an enumeration would exceed the configured desk-scale guard."""


def is_prime(n: int) -> bool:
    return bool(isprime(n))


@dataclass(frozen=True)
class DoubleCosetKey:
    p: int
    d: int
    a: tuple[int, ...]

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")
        a = tuple(self.a)
        if len(a) != self.d:
            raise ValueError("cocharacter length must equal d")
        if list(a) != sorted(a, reverse=True):
            raise ValueError(f"{a} is not dominant")
        object.__setattr__(self, "a", canonical(a))

    @property
    def delta_sq_exponent(self) -> int:
        return two_rho_pairing(self.a)


@dataclass(frozen=True)
class CosetRepresentative:
    matrix: tuple[tuple[int, ...], ...]
    iwasawa_part: tuple[int, ...] = field(default=())

    def to_json(self) -> dict:
        return {"matrix": [list(r) for r in self.matrix], "iwasawa_part": list(self.iwasawa_part)}


def vp(n: int, p: int) -> int:
    if n == 0:
        raise ValueError("valuation of zero")
    n = abs(n)
    k = 0
    while n % p == 0:
        n //= p
        k += 1
    return k


def elementary_divisor_exponents(m: Sequence[Sequence[int]], p: int) -> tuple[int, ...]:
    """p-adic valuations of the elementary divisors, increasing.

    Uses determinantal divisors: v_p(gcd of k x k minors) = e_1 + ... + e_k.
    """
    n = len(m)
    partial = [0]
    for k in range(1, n + 1):
        best = None
        for rows in itertools.combinations(range(n), k):
            for cols in itertools.combinations(range(n), k):
                minor = _int_det([[m[r][c] for c in cols] for r in rows])
                if minor:
                    v = vp(minor, p)
                    if best is None or v < best:
                        best = v
                        if v == partial[-1]:
                            break
            if best == partial[-1]:
                break
        if best is None:
            raise ValueError("matrix is singular")
        partial.append(best)
    return tuple(partial[k] - partial[k - 1] for k in range(1, n + 1))


def _int_det(a):
    n = len(a)
    if n == 1:
        return a[0][0]
    if n == 2:
        return a[0][0] * a[1][1] - a[0][1] * a[1][0]
    if n == 3:
        return (a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]))
    return sum((-1) ** j * a[0][j] * _int_det([r[:j] + r[j + 1:] for r in a[1:]]) for j in range(n))


def lattice_type(m: Sequence[Sequence[int]], p: int) -> tuple[int, ...]:
    """Relative position of m Z_p^d to Z_p^d, as a canonical dominant cocharacter."""
    e = elementary_divisor_exponents(m, p)
    return dominant(e)


def minor_valuation_profile(m: Sequence[Sequence[int]], p: int) -> tuple[tuple[tuple[int, ...], int | None], ...]:
    """For each non-empty column set C: min over row sets R of v_p(det m[R, C]).

    ``None`` marks column sets whose minors all vanish. Scaling column c by
    p^{nu_c} adds sum_{c in C} nu_c to every entry, which gives the lattice type
    of m * p^nu for all nu at once (see ``type_after_column_scaling``).
    """
    n = len(m)
    out = []
    for k in range(1, n + 1):
        for cols in itertools.combinations(range(n), k):
            best = None
            for rows in itertools.combinations(range(n), k):
                minor = _int_det([[m[r][c] for c in cols] for r in rows])
                if minor:
                    v = vp(minor, p)
                    if best is None or v < best:
                        best = v
            out.append((cols, best))
    return tuple(out)


def type_after_column_scaling(profile, nu: Sequence[int]) -> tuple[int, ...]:
    """Lattice type of m * diag(p^nu) from the minor valuation profile of m."""
    n = len(nu)
    partial = [0] * (n + 1)
    best: dict[int, int] = {}
    for cols, v in profile:
        if v is None:
            continue
        val = v + sum(nu[c] for c in cols)
        k = len(cols)
        if k not in best or val < best[k]:
            best[k] = val
    for k in range(1, n + 1):
        if k not in best:
            raise ValueError("matrix is singular")
        partial[k] = best[k]
    return dominant(tuple(partial[k] - partial[k - 1] for k in range(1, n + 1)))


def _check_guard(key: DoubleCosetKey, guard: int):
    if key.p ** key.delta_sq_exponent > guard:
        raise EnumerationGuardError(
            f"p^<2rho,a> = {key.p}^{key.delta_sq_exponent} exceeds enumeration guard {guard}")


def _hermite_forms(d: int, p: int, b: Sequence[int]) -> Iterator[tuple[tuple[int, ...], ...]]:
    """All column Hermite forms with diagonal p^b."""
    slots = [(i, j) for i in range(d) for j in range(i + 1, d)]
    ranges = [range(p ** b[i]) for i, _ in slots]
    for values in itertools.product(*ranges):
        m = [[0] * d for _ in range(d)]
        for i in range(d):
            m[i][i] = p ** b[i]
        for (i, j), v in zip(slots, values):
            m[i][j] = v
        yield tuple(tuple(r) for r in m)


def _compositions(total: int, parts: int, cap: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        if total <= cap:
            yield (total,)
        return
    for first in range(min(total, cap), -1, -1):
        for rest in _compositions(total - first, parts - 1, cap):
            yield (first,) + rest


def enumerate_cosets(key: DoubleCosetKey, guard: int = ENUMERATION_GUARD) -> list[CosetRepresentative]:
    """All gK inside K a K as canonical column Hermite forms, sorted."""
    _check_guard(key, guard)
    return list(_enumerate(key.p, key.d, key.a))


@lru_cache(maxsize=256)
def _enumerate(p: int, d: int, a: tuple[int, ...]) -> tuple[CosetRepresentative, ...]:
    total = sum(a)
    target = tuple(sorted(a))
    reps = []
    for b in _compositions(total, d, a[0]):
        # the first elementary divisor exponent is min(a) = 0, so the
        # Hermite form must be primitive; rows with b_i = 0 are forced.
        if _fits_int64(p, d, a[0]):
            reps.extend(CosetRepresentative(m, tuple(b)) for m in _hermite_forms_of_type(d, p, b, target))
            continue
        for m in _hermite_forms(d, p, b):
            if elementary_divisor_exponents(m, p) == target:
                reps.append(CosetRepresentative(m, tuple(b)))
    reps.sort(key=lambda r: (r.iwasawa_part, r.matrix), reverse=True)
    return tuple(reps)


def _fits_int64(p: int, d: int, top: int) -> bool:
    # |k x k minor| <= k! * (max entry)^k with entries < p^top
    return all(math.factorial(k) * p ** (k * top) < 2 ** 62 for k in range(1, d))


def _array_det(cols):
    """Determinant of a k x k matrix of equally shaped int64 arrays (cofactor expansion)."""
    k = len(cols)
    if k == 1:
        return cols[0][0]
    total = 0
    for j in range(k):
        sub = [row[:j] + row[j + 1:] for row in cols[1:]]
        term = cols[0][j] * _array_det(sub)
        total = total + term if j % 2 == 0 else total - term
    return total


def _array_vp(x, p: int, cap: int):
    """min(v_p(x), cap) elementwise, with v_p(0) = cap."""
    out = np.zeros(x.shape, dtype=np.int64)
    cur = np.abs(x)
    live = cur != 0
    out[~live] = cap
    for _ in range(cap):
        div = live & (cur % p == 0)
        if not div.any():
            break
        out[div] += 1
        cur = np.where(div, cur // p, cur)
        live = div
    return out


def _hermite_forms_of_type(d: int, p: int, b: Sequence[int], target: tuple[int, ...]):
    """Column Hermite forms with diagonal p^b and elementary divisor exponents ``target``."""
    slots = [(i, j) for i in range(d) for j in range(i + 1, d)]
    sizes = [p ** b[i] for i, _ in slots]
    grids = np.meshgrid(*[np.arange(n, dtype=np.int64) for n in sizes], indexing="ij") if slots else []
    flat = [g.ravel() for g in grids]
    count = flat[0].size if flat else 1
    mat = [[np.full(count, p ** b[i] if i == j else 0, dtype=np.int64) for j in range(d)] for i in range(d)]
    for (i, j), g in zip(slots, flat):
        mat[i][j] = g
    partial = np.cumsum((0,) + target)
    keep = np.ones(count, dtype=bool)
    for k in range(1, d):
        cap = int(partial[k]) + 1
        best = np.full(count, cap, dtype=np.int64)
        for rows in itertools.combinations(range(d), k):
            for cols in itertools.combinations(range(d), k):
                minor = _array_det([[mat[r][c] for c in cols] for r in rows])
                best = np.minimum(best, _array_vp(np.broadcast_to(minor, (count,)), p, cap))
        keep &= best == partial[k]
    for idx in np.flatnonzero(keep):
        yield tuple(tuple(int(mat[i][j][idx]) for j in range(d)) for i in range(d))


def iwasawa_counts(key: DoubleCosetKey, guard: int = ENUMERATION_GUARD) -> Counter:
    return Counter(r.iwasawa_part for r in enumerate_cosets(key, guard))


def _v(m: int, t: Fraction) -> Fraction:
    out = Fraction(1)
    for j in range(1, m + 1):
        out *= sum((t ** i for i in range(j)), Fraction(0))
    return out


def poincare_weyl(d: int, t: Fraction) -> Fraction:
    """W(t) = sum over S_d of t^{length(w)}."""
    return _v(d, t)


def poincare_stabilizer(a: Sequence[int], t: Fraction) -> Fraction:
    return math.prod((_v(m, t) for m in Counter(a).values()), start=Fraction(1))


@lru_cache(maxsize=None)
def _coset_count(p: int, a: tuple[int, ...]) -> int:
    t = Fraction(1, p)
    d = len(a)
    value = Fraction(p) ** two_rho_pairing(a) * poincare_weyl(d, t) / poincare_stabilizer(a, t)
    if value.denominator != 1:
        raise AssertionError("coset count formula produced a non-integer")
    return value.numerator


def coset_count(key: DoubleCosetKey) -> int:
    """|K a K / K| from the closed volume formula (no enumeration)."""
    return _coset_count(key.p, key.a)


def volume_ratio(key: DoubleCosetKey) -> Fraction:
    return Fraction(coset_count(key), key.p ** key.delta_sq_exponent)


def coset_denominator(rep: CosetRepresentative | Sequence[Sequence[int]], key: DoubleCosetKey | None = None) -> int:
    """Denominator of the inverse of the primitive projective representative.

    The primitive integral matrix g' in the class of g has d(g') = 1, and
    d(g'^{-1}) is its largest elementary divisor p^{a_1 - a_d}.
    """
    m = rep.matrix if isinstance(rep, CosetRepresentative) else rep
    content = math.gcd(*[x for r in m for x in r])
    prim = RationalMatrix([[Fraction(x, content) for x in r] for r in m])
    return max(denom_matrix(prim), denom_matrix(prim.inverse()))


def diagonal_representative(key: DoubleCosetKey) -> CosetRepresentative:
    d, p = key.d, key.p
    m = tuple(tuple(p ** key.a[i] if i == j else 0 for j in range(d)) for i in range(d))
    return CosetRepresentative(m, key.a)


def max_coset_denominator(key: DoubleCosetKey) -> int:
    """Common value of coset_denominator on K a K (it is bi-K-invariant)."""
    return coset_denominator(diagonal_representative(key))
