"""Monomial expansion of Hall-Littlewood polynomials P_lambda(x; t).

Macdonald's formula identifies the Satake transform of 1_{K lambda K} with
p^{<rho, lambda>} P_lambda(z; 1/p). The monomial coefficients are sums over
semistandard tableaux of shape lambda and weight mu of

    psi_T(t) = prod_i psi_{lambda^(i) / lambda^(i-1)}(t),
    psi_{l/m}(t) = prod_{j in J} (1 - t^{m_j(m)}),
    J = {j >= 1 : theta'_j = 0 and theta'_{j+1} = 1},  theta = l - m,

(Macdonald, Symmetric Functions and Hall Polynomials, III (5.8'), (5.11')).

Coefficients are returned as integer polynomials in t (tuple of coefficients,
lowest degree first), so they are reused for every prime.
"""

from __future__ import annotations

from collections import Counter
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .root_data import partitions_below

Poly = tuple[int, ...]


def _poly_mul(a: Poly, b: Poly) -> Poly:
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return tuple(out)


def _poly_add(a: Poly, b: Poly) -> Poly:
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, y in enumerate(b):
        out[i] += y
    return tuple(out)


def _one_minus_t_pow(m: int) -> Poly:
    return (1,) + (0,) * (m - 1) + (-1,)


def _conjugate(part: Sequence[int]) -> list[int]:
    top = part[0] if part else 0
    return [sum(1 for x in part if x > j) for j in range(top)]


def _psi_factors(big: Sequence[int], small: Sequence[int]) -> tuple[int, ...]:
    """Multiplicities m_j(small) for j in J; psi = prod (1 - t^m)."""
    cb = _conjugate(big)
    cs = _conjugate(small)
    width = len(cb) + 1
    cb += [0] * (width + 1 - len(cb))
    cs += [0] * (width + 1 - len(cs))
    theta = [x - y for x, y in zip(cb, cs)]
    mult = Counter(x for x in small if x > 0)
    out = []
    # theta'_j is column j (1-based) -> index j-1
    for j in range(1, width):
        if theta[j - 1] == 0 and theta[j] == 1:
            out.append(mult.get(j, 0))
    return tuple(m for m in out if m > 0)


def _horizontal_strips_down(big: tuple[int, ...], size: int, length: int):
    """Partitions small (<= length parts) with big/small a horizontal strip of given size."""
    # interlacing: big[i] >= small[i] >= big[i+1]
    n = len(big)
    lo = [big[i + 1] if i + 1 < n else 0 for i in range(length)]
    hi = [big[i] for i in range(length)]
    target = sum(big) - size
    if len([x for x in big if x > 0]) > length + 1:
        return

    def rec(i, acc, remaining):
        if i == length:
            if remaining == 0:
                yield tuple(acc)
            return
        rest_lo = sum(lo[i + 1:])
        rest_hi = sum(hi[i + 1:])
        for v in range(min(hi[i], remaining - rest_lo), lo[i] - 1, -1):
            if remaining - v > rest_hi:
                break
            yield from rec(i + 1, acc + [v], remaining - v)

    yield from rec(0, [], target)


@lru_cache(maxsize=None)
def _psi_poly(big: tuple[int, ...], small: tuple[int, ...]) -> Poly:
    factor: Poly = (1,)
    for m in _psi_factors(big, small):
        factor = _poly_mul(factor, _one_minus_t_pow(m))
    return factor


@lru_cache(maxsize=None)
def _chains(nu: tuple[int, ...], weights: tuple[int, ...]) -> Poly:
    """Sum of psi_T over tableaux of shape nu whose letter i occurs weights[i-1] times."""
    i = len(weights)
    if i == 0:
        return (1,)
    total: Poly = (0,)
    for small in _horizontal_strips_down(nu, weights[-1], i - 1):
        sub = _chains(small, weights[:-1])
        if sub == (0,):
            continue
        total = _poly_add(total, _poly_mul(_psi_poly(nu, small), sub))
    return _trim(total)


@lru_cache(maxsize=None)
def hl_coefficient(lam: tuple[int, ...], mu: tuple[int, ...]) -> Poly:
    """Coefficient of x^mu in P_lam(x_1..x_d; t), as a polynomial in t.

    ``lam`` and ``mu`` are GL partitions of equal size with d entries each
    (zeros allowed); ``mu`` may be any composition.
    """
    if sum(lam) != sum(mu):
        return (0,)
    return _chains(tuple(lam), tuple(mu))


def _trim(p: Poly) -> Poly:
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return tuple(p)


def poly_eval(p: Poly, t: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(p):
        acc = acc * t + c
    return acc


@lru_cache(maxsize=None)
def hl_monomial_expansion(lam: tuple[int, ...]) -> dict[tuple[int, ...], Poly]:
    """{dominant mu <= lam: coefficient of m_mu in P_lam}, nonzero entries only."""
    out = {}
    for mu in partitions_below(lam):
        c = hl_coefficient(tuple(lam), mu)
        if any(c):
            out[mu] = c
    return out
