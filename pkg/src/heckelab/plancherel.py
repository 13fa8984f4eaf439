"""Plancherel measure on tempered Satake parameters of PGL_d(Q_p).

The tempered parameters form the torus T = {z in U(1)^d : prod z_i = 1},
parametrised by theta_1..theta_{d-1} uniform on [0, 2 pi). Macdonald's
measure has density proportional to

    prod_{i != j} (1 - z_i/z_j) / (1 - t z_i/z_j),   t = 1/p,

against Haar measure on T. Its t -> 0 limit |Delta(z)|^2 / |W| is the
Weyl-integration (Sato-Tate) measure mu_inf.

The normalising constant is obtained by quadrature, once per (d, p), and
compared with its closed form |W| / W(t) in the tests.
"""

from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .hecke_cosets import DoubleCosetKey, coset_count, poincare_weyl
from .root_data import canonical, cochar_norm_squared
from .satake import HeckeFunction, SatakeParameter, WSymLaurent, evaluate_many, satake_transform

DEFAULT_TOL = 1e-10
MAX_POINTS = 2_000_000


class QuadratureError(RuntimeError):
    """Raised when adaptive refinement stops before reaching the tolerance."""


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    residual: float
    points_per_axis: int

    def to_json(self) -> dict:
        v = complex(self.value)
        return {"value": [v.real, v.imag], "residual": self.residual, "points_per_axis": self.points_per_axis}


def torus_grid(d: int, n: int) -> np.ndarray:
    """Tensor trapezoid nodes on T, shape (n^(d-1), d)."""
    theta_1d = 2 * np.pi * (np.arange(n) + 0.5) / n
    axes = np.meshgrid(*([theta_1d] * (d - 1)), indexing="ij")
    theta = np.stack([a.ravel() for a in axes], axis=1)
    theta = np.concatenate([theta, -theta.sum(axis=1, keepdims=True)], axis=1)
    return np.exp(1j * theta)


def raw_density(z: np.ndarray, t: float) -> np.ndarray:
    """prod_{i != j} (1 - z_i/z_j)/(1 - t z_i/z_j) at each row of z (real, >= 0)."""
    z = np.atleast_2d(z)
    d = z.shape[1]
    out = np.ones(z.shape[0], dtype=complex)
    for i in range(d):
        for j in range(d):
            if i != j:
                r = z[:, i] / z[:, j]
                out *= (1 - r) / (1 - t * r)
    return out.real


def limit_density(z: np.ndarray) -> np.ndarray:
    """|Delta(z)|^2 / |W|, the density of mu_inf."""
    d = np.atleast_2d(z).shape[1]
    return raw_density(z, 0.0) / math.factorial(d)


def adaptive_torus_quadrature(func, d: int, tol: float = DEFAULT_TOL, start: int = 8,
                              max_points: int = MAX_POINTS) -> QuadratureResult:
    """Integrate func(z) over T against Haar measure, doubling the grid until stable.

    The change between successive grids is measured relative to
    max(|integral|, mean |integrand|), so integrals that vanish (orthogonal
    basis elements) still converge.
    """
    n = max(2, start)
    prev = None
    residual = math.inf
    while True:
        if n ** (d - 1) > max_points:
            raise QuadratureError(f"quadrature did not reach tol={tol} (last residual {residual:.3g} at n={n // 2})")
        vals = func(torus_grid(d, n))
        value = complex(np.mean(vals))
        if prev is not None:
            scale = max(abs(value), float(np.mean(np.abs(vals))), 1e-300)
            residual = abs(value - prev) / scale
            if residual < tol:
                return QuadratureResult(value, residual, n)
        prev = value
        n *= 2


_norm_lock = threading.Lock()
_norm_table: dict[tuple[int, int], QuadratureResult] = {}


def normalization(d: int, p: int) -> QuadratureResult:
    """int_T raw_density; single-writer cache keyed by (d, p)."""
    key = (d, p)
    hit = _norm_table.get(key)
    if hit is not None:
        return hit
    with _norm_lock:
        hit = _norm_table.get(key)
        if hit is None:
            hit = adaptive_torus_quadrature(lambda z: raw_density(z, 1.0 / p), d)
            _norm_table[key] = hit
    return hit


def normalization_closed_form(d: int, p: int) -> float:
    return math.factorial(d) / float(poincare_weyl(d, Fraction(1, p)))


def plancherel_density(nu: SatakeParameter | np.ndarray, p: int) -> np.ndarray | float:
    """Normalised Plancherel density at tempered parameter(s)."""
    if isinstance(nu, SatakeParameter):
        if not nu.tempered:
            raise ValueError("Plancherel density is only defined on tempered parameters")
        z = np.array([nu.z])
        d = nu.d
        return float(raw_density(z, 1.0 / p)[0] / normalization(d, p).value.real)
    z = np.atleast_2d(nu)
    return raw_density(z, 1.0 / p) / normalization(z.shape[1], p).value.real


def _degree(f: WSymLaurent) -> int:
    return max((max(k) - min(k) for k in f.stored), default=0)


def plancherel_integral(f: WSymLaurent, tol: float = DEFAULT_TOL) -> QuadratureResult:
    """int f dmu_p over the tempered torus."""
    d, p = f.d, f.p
    norm = normalization(d, p).value.real
    return adaptive_torus_quadrature(
        lambda z: evaluate_many(f, z) * raw_density(z, 1.0 / p) / norm,
        d, tol, start=max(8, 2 * _degree(f) + 2))


def plancherel_inner(k1: HeckeFunction, k2: HeckeFunction, tol: float = DEFAULT_TOL) -> QuadratureResult:
    """int k1^(nu) conj(k2^(nu)) dmu_p(nu)."""
    k1._compatible(k2)
    f1, f2 = satake_transform(k1), satake_transform(k2)
    d, p = k1.d, k1.p
    norm = normalization(d, p).value.real
    start = max(8, _degree(f1) + _degree(f2) + 2)
    return adaptive_torus_quadrature(
        lambda z: evaluate_many(f1, z) * np.conj(evaluate_many(f2, z)) * raw_density(z, 1.0 / p) / norm,
        d, tol, start=start)


def l2_norm_squared_exact(k: HeckeFunction):
    """sum_a |k(a)|^2 vol(K a K), the left side of the isometry."""
    return sum(abs(v) ** 2 * coset_count(DoubleCosetKey(k.p, k.d, a)) for a, v in k.coeffs.items())


def isometry_residual(k: HeckeFunction, tol: float = DEFAULT_TOL) -> dict:
    exact = float(l2_norm_squared_exact(k))
    quad = plancherel_inner(k, k, tol)
    return {"exact": exact, "quadrature": quad.value.real,
            "relative_residual": abs(quad.value.real - exact) / exact,
            "quadrature_residual": quad.residual, "points_per_axis": quad.points_per_axis}


# -- the limit measure ------------------------------------------------------


def mu_infty_fourier_support(d: int) -> dict[tuple[int, ...], int]:
    """Exact Laurent expansion of |W| * (density of mu_inf) = prod_{i != j} (1 - z_i/z_j)."""
    poly: dict[tuple[int, ...], int] = {(0,) * d: 1}
    for i, j in itertools.permutations(range(d), 2):
        step = [0] * d
        step[i], step[j] = 1, -1
        new: dict[tuple[int, ...], int] = {}
        for e, c in poly.items():
            new[e] = new.get(e, 0) + c
            e2 = tuple(a + b for a, b in zip(e, step))
            new[e2] = new.get(e2, 0) - c
        poly = {e: c for e, c in new.items() if c}
    out: dict[tuple[int, ...], int] = {}
    for e, c in poly.items():
        key = canonical(e)
        out[key] = out.get(key, 0) + c
    return {e: c for e, c in out.items() if c}


def mu_infty_support_radius(d: int) -> float:
    return max(math.sqrt(cochar_norm_squared(e)) for e in mu_infty_fourier_support(d))


def density_gap(d: int, p: int, n: int = 64) -> float:
    """sup over a fixed grid of |mu_p density - mu_inf density|."""
    z = torus_grid(d, n)
    return float(np.max(np.abs(plancherel_density(z, p) - limit_density(z))))


def mu_infty_gap(p_list, d: int = 2, n: int = 64) -> list[dict]:
    """Gap table: gap(p), gap(p) * sqrt(p), and the change from the previous prime."""
    rows = []
    prev = None
    z = torus_grid(d, n)
    lim = limit_density(z)
    for p in p_list:
        dens = plancherel_density(z, p)
        gap = float(np.max(np.abs(dens - lim)))
        row = {"p": p, "gap": gap, "scaled_gap": gap * math.sqrt(p)}
        row["consecutive"] = None if prev is None else float(np.max(np.abs(dens - prev)))
        rows.append(row)
        prev = dens
    return rows
