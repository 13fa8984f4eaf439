"""Satake transform of K-bi-invariant functions on PGL_d(Q_p).

Conventions
-----------
A Satake parameter is z = (z_1, ..., z_d) with prod z_i = 1, up to
permutation. A cocharacter b acts by z^b = prod z_i^{b_i}; this is
well defined on PGL_d because prod z_i = 1.

The transform of 1_{K a K} is the W-invariant Laurent polynomial

    sum over cosets gK in K a K with Iwasawa part b of p^{-<rho, b>} z^b

so that T_p = 1_{K diag(p,1) K} on PGL_2 goes to p^{1/2}(z_1 + z_2) and
the trivial parameter z = p^rho gives the eigenvalue on constants, p + 1.
By Macdonald's formula the same polynomial is p^{<rho, a>} P_a(z; 1/p).

Exact storage
-------------
``WSymLaurent`` keeps one coefficient per W-orbit (the coefficient of the
monomial symmetric function m_mu). Every orbit has a parity
eps(mu) = <2 rho, mu> mod 2, and the true coefficient is
``stored * sqrt(p) ** eps``. Stored values are rational whenever the Hecke
function has rational coefficients, so products and inverses stay exact.
"""

from __future__ import annotations

import cmath
import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from numbers import Number
from typing import Iterable, Mapping

import numpy as np

from .hall_littlewood import hl_monomial_expansion
from .hecke_cosets import (
    ENUMERATION_GUARD,
    DoubleCosetKey,
    coset_count,
    enumerate_cosets,
    minor_valuation_profile,
    poincare_stabilizer,
    type_after_column_scaling,
    poincare_weyl,
)
from .root_data import (
    canonical,
    cochar_norm_squared,
    dominant,
    orbit_tuples,
    partitions_below,
    two_rho_raw,
)

Key = tuple[int, ...]


def _parity(mu: Key) -> int:
    return two_rho_raw(mu) % 2


def _is_dominant(v: Key) -> bool:
    return all(a >= b for a, b in zip(v, v[1:]))


def _is_zero(c) -> bool:
    return c == 0


# -- Satake parameters ---------------------------------------------------


@dataclass(frozen=True)
class SatakeParameter:
    z: tuple[complex, ...]
    tempered: bool = field(init=False)

    def __post_init__(self):
        z = tuple(complex(x) for x in self.z)
        if any(x == 0 for x in z):
            raise ValueError("Satake parameters must be nonzero")
        prod = math.prod(z)
        if abs(prod - 1) > 1e-12:
            root = prod ** (1.0 / len(z))
            z = tuple(x / root for x in z)
        object.__setattr__(self, "z", z)
        mods = [abs(x) for x in z]
        object.__setattr__(self, "tempered", max(mods) - min(mods) < 1e-12)

    @property
    def d(self) -> int:
        return len(self.z)

    @classmethod
    def trivial(cls, p: int, d: int) -> SatakeParameter:
        """Parameter of the trivial representation, z = p^rho."""
        return cls(tuple(p ** ((d - 1) / 2 - i) for i in range(d)))

    @classmethod
    def from_angles(cls, angles) -> SatakeParameter:
        """Tempered parameter with z_i = exp(i theta_i), theta_d = -sum(others)."""
        th = list(angles)
        th.append(-sum(th))
        return cls(tuple(cmath.exp(1j * t) for t in th))

    def monomial(self, b: Key) -> complex:
        out = 1 + 0j
        for zi, bi in zip(self.z, b):
            if bi:
                out *= zi ** bi
        return out

    def orbit_sum(self, b: Key) -> complex:
        """sum over w in W of z^{w b} (with stabiliser multiplicity)."""
        return sum(self.monomial(u) for u in orbit_tuples(tuple(b))) * _stab(b)

    def to_json(self) -> list[list[float]]:
        return [[x.real, x.imag] for x in self.z]


def _stab(b: Key) -> int:
    return math.prod(math.factorial(m) for m in Counter(b).values())


def monomial_symmetric(z: SatakeParameter, mu: Key) -> complex:
    return sum(z.monomial(u) for u in orbit_tuples(tuple(mu)))


# -- Hecke functions -------------------------------------------------------


class HeckeFunction:
    """Finitely supported function on dominant cocharacters (= K\\G/K)."""

    def __init__(self, p: int, d: int, coeffs: Mapping[Key, Number] | None = None):
        self.p = p
        self.d = d
        self.coeffs: dict[Key, Number] = {}
        for k, v in (coeffs or {}).items():
            k = dominant(tuple(k))
            if len(k) != d:
                raise ValueError("cocharacter length mismatch")
            if not _is_zero(v):
                self.coeffs[k] = self.coeffs.get(k, 0) + v
        self.coeffs = {k: v for k, v in self.coeffs.items() if not _is_zero(v)}

    @classmethod
    def basis(cls, p: int, d: int, a: Iterable[int]) -> HeckeFunction:
        return cls(p, d, {dominant(tuple(a)): 1})

    @classmethod
    def unit(cls, p: int, d: int) -> HeckeFunction:
        return cls(p, d, {(0,) * d: 1})

    def __call__(self, a) -> Number:
        return self.coeffs.get(dominant(tuple(a)), 0)

    def __eq__(self, other):
        if not isinstance(other, HeckeFunction):
            return NotImplemented
        return (self.p, self.d, self.coeffs) == (other.p, other.d, other.coeffs)

    def __repr__(self):
        return f"HeckeFunction(p={self.p}, d={self.d}, {self.coeffs})"

    def _compatible(self, other):
        if (self.p, self.d) != (other.p, other.d):
            raise ValueError("Hecke functions live on different groups")

    def __add__(self, other: HeckeFunction) -> HeckeFunction:
        self._compatible(other)
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0) + v
        return HeckeFunction(self.p, self.d, out)

    def __sub__(self, other: HeckeFunction) -> HeckeFunction:
        return self + other.scale(-1)

    def scale(self, c) -> HeckeFunction:
        return HeckeFunction(self.p, self.d, {k: c * v for k, v in self.coeffs.items()})

    def __mul__(self, other: HeckeFunction) -> HeckeFunction:
        return convolve(self, other)

    @property
    def support(self) -> list[Key]:
        return sorted(self.coeffs)

    def l2_norm_squared(self):
        """int |k|^2 dg = sum_a |k(a)|^2 vol(K a K)."""
        return sum(abs(v) ** 2 * coset_count(DoubleCosetKey(self.p, self.d, a)) for a, v in self.coeffs.items())

    def to_json(self) -> dict:
        return {"p": self.p, "d": self.d,
                "coeffs": [[list(k), _num_json(v)] for k, v in sorted(self.coeffs.items())]}


def _num_json(v):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


# -- W-symmetric Laurent polynomials ---------------------------------------


class WSymLaurent:
    """sum_mu c_mu m_mu(z), stored orbit-wise with the sqrt(p) parity trick."""

    def __init__(self, p: int, d: int, stored: Mapping[Key, Number] | None = None):
        self.p = p
        self.d = d
        self.stored: dict[Key, Number] = {}
        for k, v in (stored or {}).items():
            k = dominant(tuple(k))
            self.stored[k] = self.stored.get(k, 0) + v
        self.stored = {k: v for k, v in self.stored.items() if not _is_zero(v)}

    @classmethod
    def constant(cls, p, d, c=1) -> WSymLaurent:
        return cls(p, d, {(0,) * d: c})

    @classmethod
    def from_true_coefficients(cls, p, d, coeffs: Mapping[Key, Number]) -> WSymLaurent:
        """Build from actual m_mu coefficients (floats allowed for odd parity)."""
        out = {}
        for k, v in coeffs.items():
            k = dominant(tuple(k))
            out[k] = v / math.sqrt(p) if _parity(k) else v
        return cls(p, d, out)

    def coefficient(self, mu) -> complex | Number:
        mu = dominant(tuple(mu))
        v = self.stored.get(mu, 0)
        return v * math.sqrt(self.p) if _parity(mu) else v

    def __eq__(self, other):
        if not isinstance(other, WSymLaurent):
            return NotImplemented
        return (self.p, self.d, self.stored) == (other.p, other.d, other.stored)

    def __repr__(self):
        return f"WSymLaurent(p={self.p}, d={self.d}, stored={self.stored})"

    def __add__(self, other: WSymLaurent) -> WSymLaurent:
        out = dict(self.stored)
        for k, v in other.stored.items():
            out[k] = out.get(k, 0) + v
        return WSymLaurent(self.p, self.d, out)

    def __sub__(self, other: WSymLaurent) -> WSymLaurent:
        return self + other.scale(-1)

    def scale(self, c) -> WSymLaurent:
        return WSymLaurent(self.p, self.d, {k: c * v for k, v in self.stored.items()})

    def __mul__(self, other: WSymLaurent) -> WSymLaurent:
        if (self.p, self.d) != (other.p, other.d):
            raise ValueError("incompatible polynomials")
        out: dict[Key, Number] = {}
        for mu, s1 in self.stored.items():
            e1 = _parity(mu)
            for nu, s2 in other.stored.items():
                e2 = _parity(nu)
                prod = s1 * s2
                for u in orbit_tuples(mu):
                    for v in orbit_tuples(nu):
                        w = canonical(tuple(a + b for a, b in zip(u, v)))
                        if not _is_dominant(w):
                            continue
                        shift = (e1 + e2 - _parity(w)) // 2
                        out[w] = out.get(w, 0) + prod * self.p ** shift
        return WSymLaurent(self.p, self.d, out)

    @property
    def exponents(self) -> list[Key]:
        return sorted(self.stored)

    def to_json(self) -> dict:
        return {"p": self.p, "d": self.d,
                "terms": [[list(k), _num_json(self.coefficient(k))] for k in sorted(self.stored)]}


def evaluate(f: WSymLaurent, nu: SatakeParameter) -> complex:
    if nu.d != f.d:
        raise ValueError("parameter dimension mismatch")
    total = 0j
    root = math.sqrt(f.p)
    for mu, s in f.stored.items():
        c = complex(s) * (root if _parity(mu) else 1.0)
        total += c * monomial_symmetric(nu, mu)
    return total


# -- transforms of basis elements ------------------------------------------


def _poly_at_inverse_prime(poly, p: int) -> Fraction:
    # poly is lowest degree first; sum c_e p^{-e} = (sum c_e p^{deg-e}) / p^deg
    deg = len(poly) - 1
    acc = 0
    for c in poly:
        acc = acc * p + c
    return Fraction(acc, p ** deg)


@lru_cache(maxsize=None)
def basis_transform_stored(p: int, a: Key) -> tuple[tuple[Key, Fraction], ...]:
    """Stored coefficients of the transform of 1_{K a K} (Macdonald's formula)."""
    a = dominant(a)
    two_rho_a = two_rho_raw(a)
    eps = two_rho_a % 2
    lead = Fraction(p) ** ((two_rho_a - eps) // 2)
    out = []
    for mu, poly in hl_monomial_expansion(a).items():
        out.append((canonical(mu), lead * _poly_at_inverse_prime(poly, p)))
    out.sort(key=lambda kv: kv[0], reverse=True)
    return tuple(out)


def basis_transform(p: int, d: int, a: Key) -> WSymLaurent:
    return WSymLaurent(p, d, dict(basis_transform_stored(p, dominant(tuple(a)))))


def basis_transform_by_enumeration(p: int, d: int, a: Key, guard: int = ENUMERATION_GUARD) -> WSymLaurent:
    """Transform of 1_{K a K} from explicit Iwasawa counts of the cosets."""
    key = DoubleCosetKey(p, d, dominant(tuple(a)))
    counts = Counter(r.iwasawa_part for r in enumerate_cosets(key, guard))
    stored = {}
    for b, n in counts.items():
        if not _is_dominant(b):
            continue
        eps = _parity(b)
        # p^{-<rho,b>} = p^{(-<2rho,b> - eps)/2} * sqrt(p)^eps
        stored[canonical(b)] = n * Fraction(p) ** ((-two_rho_raw(b) - eps) // 2)
    return WSymLaurent(p, d, stored)


def satake_transform(k: HeckeFunction, method: str = "macdonald") -> WSymLaurent:
    out: dict[Key, Number] = {}
    for a, c in k.coeffs.items():
        if method == "macdonald":
            terms = basis_transform_stored(k.p, a)
        elif method == "iwasawa":
            terms = basis_transform_by_enumeration(k.p, k.d, a).stored.items()
        else:
            raise ValueError(f"unknown method {method!r}")
        for mu, s in terms:
            out[mu] = out.get(mu, 0) + c * s
    return WSymLaurent(k.p, k.d, out)


def inverse_satake(f: WSymLaurent) -> HeckeFunction:
    """Triangular solve in decreasing norm (refines dominance order)."""
    residual = dict(f.stored)
    result: dict[Key, Number] = {}
    while residual:
        lam = max(residual, key=lambda k: (cochar_norm_squared(k), k))
        value = residual.pop(lam)
        if _is_zero(value):
            continue
        terms = basis_transform_stored(f.p, lam)
        lead = dict(terms)[lam]
        c = value / lead
        result[lam] = c
        for mu, s in terms:
            if mu == lam:
                continue
            residual[mu] = residual.get(mu, 0) - c * s
            if _is_zero(residual[mu]):
                del residual[mu]
    return HeckeFunction(f.p, f.d, result)


# -- spherical functions ---------------------------------------------------


def spherical_value(nu: SatakeParameter, a, p: int, regular_tol: float = 1e-6) -> complex:
    """Xi_nu(a) by Macdonald's formula.

    For regular nu (distinct z_i) uses

        Xi_nu(a) = p^{-<rho,a>} / W(1/p) * sum_w w( z^a prod_{i<j} (z_i - t z_j)/(z_i - z_j) ),

    otherwise falls back to transform / volume, which is a polynomial in z
    and therefore continuous across the walls.
    """
    a = dominant(tuple(a))
    d = nu.d
    z = nu.z
    t = 1.0 / p
    gaps = [abs(z[i] - z[j]) for i in range(d) for j in range(i + 1, d)]
    if min(gaps, default=1.0) < regular_tol:
        return spherical_value_polynomial(nu, a, p)
    total = 0j
    for perm in itertools.permutations(range(d)):
        zw = [z[i] for i in perm]
        term = 1 + 0j
        for i, ai in enumerate(a):
            term *= zw[i] ** ai
        for i in range(d):
            for j in range(i + 1, d):
                term *= (zw[i] - t * zw[j]) / (zw[i] - zw[j])
        total += term
    w_t = float(poincare_weyl(d, Fraction(1, p)))
    return total * p ** (-two_rho_raw(a) / 2) / w_t


def spherical_value_polynomial(nu: SatakeParameter, a, p: int) -> complex:
    a = dominant(tuple(a))
    vol = coset_count(DoubleCosetKey(p, nu.d, a))
    return evaluate(basis_transform(p, nu.d, a), nu) / vol


def normalized_basis_polynomial(p: int, a: Key, nu: SatakeParameter) -> complex:
    """P_a(z; 1/p) = p^{-<rho,a>} * transform(1_{KaK})(z), evaluated without large powers."""
    a = dominant(tuple(a))
    total = 0j
    for mu, poly in hl_monomial_expansion(a).items():
        total += float(_poly_at_inverse_prime(poly, p)) * monomial_symmetric(nu, canonical(mu))
    return total


def amplification_ratio(p: int, a: Key, nu: SatakeParameter) -> float:
    """|transform(1_{KaK})(nu)|^2 / vol(K a K), computed as |P_a|^2 W_a(t)/W(t)."""
    a = dominant(tuple(a))
    t = Fraction(1, p)
    factor = float(poincare_stabilizer(a, t) / poincare_weyl(len(a), t))
    return abs(normalized_basis_polynomial(p, a, nu)) ** 2 * factor


# -- convolution by coset multiplication -----------------------------------


def _adjugate(m):
    n = len(m)
    from .hecke_cosets import _int_det

    if n == 1:
        return [[1]]
    adj = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:j] + row[j + 1:] for k, row in enumerate(m) if k != i]
            adj[j][i] = (-1) ** (i + j) * _int_det(minor)
    return adj


@lru_cache(maxsize=None)
def basis_convolution(p: int, d: int, lam: Key, mu: Key, guard: int = ENUMERATION_GUARD) -> tuple[tuple[Key, int], ...]:
    """Structure constants of 1_lam * 1_mu by exact coset multiplication.

    (1_lam * 1_mu)(p^nu) = #{hK in K lam K : h^{-1} p^nu in K mu K}.
    """
    lam, mu = dominant(lam), dominant(mu)
    if coset_count(DoubleCosetKey(p, d, lam)) > coset_count(DoubleCosetKey(p, d, mu)):
        lam, mu = mu, lam  # the Hecke algebra is commutative
    reps = enumerate_cosets(DoubleCosetKey(p, d, lam), guard)
    top = tuple(x + y for x, y in zip(lam, mu))
    # h^{-1} p^nu = adj(h) p^nu / p^{|lam|}, and types are invariant under central shifts;
    # cosets with the same minor valuation profile behave identically for every nu
    profiles = Counter(minor_valuation_profile(_adjugate([list(r) for r in rep.matrix]), p) for rep in reps)
    out = []
    for nu in partitions_below(top):
        count = sum(n for prof, n in profiles.items() if type_after_column_scaling(prof, nu) == mu)
        if count:
            out.append((canonical(nu), count))
    return tuple(sorted(out, reverse=True))


def convolve(k1: HeckeFunction, k2: HeckeFunction, guard: int = ENUMERATION_GUARD) -> HeckeFunction:
    k1._compatible(k2)
    out: dict[Key, Number] = {}
    for a, c1 in k1.coeffs.items():
        for b, c2 in k2.coeffs.items():
            for nu, n in basis_convolution(k1.p, k1.d, a, b, guard):
                out[nu] = out.get(nu, 0) + c1 * c2 * n
    return HeckeFunction(k1.p, k1.d, out)


# -- Paley-Wiener ----------------------------------------------------------


def paley_wiener_radius(f: WSymLaurent) -> float:
    if not f.stored:
        return 0.0
    return max(math.sqrt(cochar_norm_squared(k)) for k in f.stored)


def check_support(k: HeckeFunction, radius) -> bool:
    """All double cosets in supp(k) lie in the ball ||a|| <= radius."""
    r2 = Fraction(radius) ** 2 if not isinstance(radius, float) else radius ** 2
    return all(cochar_norm_squared(a) <= r2 for a in k.coeffs)


def tree_spherical_function(eigenvalue: complex, p: int, n_max: int) -> list[complex]:
    """Radial eigenfunction of the (p+1)-regular tree adjacency, phi(0) = 1."""
    phi = [1 + 0j, eigenvalue / (p + 1)]
    for n in range(1, n_max):
        phi.append((eigenvalue * phi[n] - phi[n - 1]) / p)
    return phi[: n_max + 1]


def evaluate_many(f: WSymLaurent, z: np.ndarray) -> np.ndarray:
    """Evaluate f at many parameters; z has shape (npoints, d) with prod z = 1."""
    z = np.asarray(z, dtype=complex)
    out = np.zeros(z.shape[0], dtype=complex)
    root = math.sqrt(f.p)
    for mu, s in f.stored.items():
        c = complex(s) * (root if _parity(mu) else 1.0)
        acc = np.zeros(z.shape[0], dtype=complex)
        for u in orbit_tuples(mu):
            acc += np.prod(z ** np.asarray(u), axis=1)
        out += c * acc
    return out
