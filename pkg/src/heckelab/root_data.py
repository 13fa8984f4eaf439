"""Type A_{d-1} root data for PGL_d: cocharacters, Weyl orbits, norms, rho.

Cocharacters of the diagonal torus of PGL_d are integer d-vectors modulo the
diagonal Z*(1, ..., 1). The canonical representative has last coordinate 0.

The W-invariant norm is scaled so that e_i - e_j (identified with a vector of
the cocharacter space through the standard dot product) has length 1:

    ||c||^2 = 1/2 * sum_i (c_i - mean(c))^2

With this scaling 4*(e_1 - e_d) has norm exactly 4, which is the amplifier
base point used in :mod:`heckelab.amplifier`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Sequence


def canonical(coords: Sequence[int]) -> tuple[int, ...]:
    last = coords[-1]
    return tuple(int(x) - last for x in coords)


def dominant(coords: Sequence[int]) -> tuple[int, ...]:
    return canonical(sorted(coords, reverse=True))


@dataclass(frozen=True)
class Cocharacter:
    """Element of X_*(PGL_d), stored in canonical form (last coordinate 0)."""

    coords: tuple[int, ...]

    def __post_init__(self):
        if len(self.coords) < 1:
            raise ValueError("cocharacter needs at least one coordinate")
        object.__setattr__(self, "coords", canonical(self.coords))

    @property
    def d(self) -> int:
        return len(self.coords)

    def dominant(self) -> Cocharacter:
        return Cocharacter(dominant(self.coords))

    def is_dominant(self) -> bool:
        return all(a >= b for a, b in zip(self.coords, self.coords[1:]))

    def __add__(self, other: Cocharacter) -> Cocharacter:
        return Cocharacter(tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __neg__(self) -> Cocharacter:
        return Cocharacter(tuple(-a for a in self.coords))

    def __mul__(self, j: int) -> Cocharacter:
        return Cocharacter(tuple(j * a for a in self.coords))

    __rmul__ = __mul__

    def norm_squared(self) -> Fraction:
        return cochar_norm_squared(self.coords)

    def norm(self) -> float:
        return math.sqrt(self.norm_squared())

    def to_json(self) -> list[int]:
        return list(self.coords)


@dataclass(frozen=True)
class RootDatum:
    d: int

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("PGL_d root datum needs d >= 2")

    @property
    def roots(self) -> list[tuple[int, ...]]:
        return [_ei_minus_ej(self.d, i, j) for i in range(self.d) for j in range(self.d) if i != j]

    @property
    def positive_roots(self) -> list[tuple[int, ...]]:
        return [_ei_minus_ej(self.d, i, j) for i in range(self.d) for j in range(i + 1, self.d)]

    @property
    def weyl_order(self) -> int:
        return math.factorial(self.d)

    def weyl_group(self) -> list[tuple[int, ...]]:
        return list(itertools.permutations(range(self.d)))


def _ei_minus_ej(d, i, j):
    v = [0] * d
    v[i], v[j] = 1, -1
    return tuple(v)


def _coords(c) -> tuple[int, ...]:
    return c.coords if isinstance(c, Cocharacter) else tuple(c)


def dominant_representative(c) -> Cocharacter:
    return Cocharacter(dominant(_coords(c)))


def weyl_orbit(c) -> set[Cocharacter]:
    return {Cocharacter(p) for p in set(itertools.permutations(_coords(c)))}


def orbit_tuples(key: tuple[int, ...]) -> list[tuple[int, ...]]:
    """Distinct permutations of a cocharacter (not canonicalised)."""
    return _distinct_perms(tuple(key))


@lru_cache(maxsize=None)
def _distinct_perms(key):
    return sorted(set(itertools.permutations(key)))


def stabilizer_order(c) -> int:
    counts: dict[int, int] = {}
    for x in _coords(c):
        counts[x] = counts.get(x, 0) + 1
    return math.prod(math.factorial(m) for m in counts.values())


def cochar_norm_squared(c) -> Fraction:
    x = _coords(c)
    n = len(x)
    s = sum(x)
    # sum (x_i - s/n)^2 = sum x_i^2 - s^2/n
    return Fraction(n * sum(v * v for v in x) - s * s, 2 * n)


def cochar_norm(c) -> float:
    return math.sqrt(cochar_norm_squared(c))


def two_rho_pairing(c) -> int:
    """<2 rho, c> on the dominant representative; delta(c)^2 = p ** this."""
    x = dominant(_coords(c))
    d = len(x)
    return sum((d - 1 - 2 * i) * v for i, v in enumerate(x))


def two_rho_raw(x: Sequence[int]) -> int:
    """<2 rho, x> without moving x to the dominant chamber."""
    d = len(x)
    return sum((d - 1 - 2 * i) * v for i, v in enumerate(x))


def root_pairing(root: Sequence[int], c) -> int:
    return sum(a * b for a, b in zip(root, _coords(c)))


def amplifier_base_point(d: int) -> Cocharacter:
    """4 * (e_1 - e_d): twice the coroot of a longest root, norm exactly 4."""
    if d < 2:
        raise ValueError("d >= 2 required")
    v = [0] * d
    v[0], v[-1] = 4, -4
    a = Cocharacter(tuple(v))
    if a.norm_squared() != 16:
        raise AssertionError("normalisation broken: ||a|| != 4")
    return a


def dominance_leq(mu: Sequence[int], lam: Sequence[int]) -> bool:
    """mu <= lam in dominance order, both given as GL vectors of equal sum."""
    if sum(mu) != sum(lam):
        return False
    a = b = 0
    for x, y in zip(sorted(mu, reverse=True), sorted(lam, reverse=True)):
        a += x
        b += y
        if a > b:
            return False
    return True


def partitions_below(lam: Sequence[int]) -> list[tuple[int, ...]]:
    """Dominant GL vectors mu <= lam (same size, at most d non-negative parts).

    ``lam`` must be a partition (weakly decreasing, non-negative).
    """
    lam = tuple(lam)
    d = len(lam)
    n = sum(lam)
    out = []

    def rec(prefix, remaining, cap, partial_lam):
        k = len(prefix)
        if k == d:
            if remaining == 0:
                out.append(tuple(prefix))
            return
        slots = d - k
        hi = min(cap, remaining)
        for part in range(hi, -1, -1):
            if part * slots < remaining:
                break
            s = partial_lam + lam[k]
            if sum(prefix) + part > s:
                continue
            rec(prefix + [part], remaining - part, part, s)

    rec([], n, lam[0] if lam else 0, 0)
    return out


def dominant_ball(d: int, radius) -> Iterator[tuple[int, ...]]:
    """Canonical dominant cocharacters with norm <= radius (exact test)."""
    r2 = Fraction(radius) ** 2 if not isinstance(radius, float) else None
    top = math.floor(2 * float(radius) + 1e-9)
    for head in _decreasing(d - 1, top):
        c = tuple(head) + (0,)
        n2 = cochar_norm_squared(c)
        if (n2 <= r2) if r2 is not None else (float(n2) <= float(radius) ** 2 + 1e-12):
            yield c


def _decreasing(length: int, top: int) -> Iterable[tuple[int, ...]]:
    if length == 0:
        yield ()
        return
    for first in range(top, -1, -1):
        for rest in _decreasing(length - 1, first):
            yield (first,) + rest
