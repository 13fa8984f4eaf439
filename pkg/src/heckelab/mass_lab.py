"""Finite metric-measure models for the covering lemmas and the mass bound.

A model is a finite set with an integer-valued metric and a rational
probability measure. Group translates are isometries, given as
permutations. Balls around a point x use radii r0, 2 r0, 4 r0, 6 r0 for
B_0, B = B_0 B_0^{-1}, B_2 = B B and B_3 = B B B, which is what these
products become for a left-invariant metric.

The volume ratio vol B_3 / vol B_0 becomes the counting multiplicity

    mult_30 = max_z |B_3(z)| / min_z |B_0(z)|.

Inequalities checked here, all with constant 1:

* covering:  the greedy B_0-separated set covers X by B-balls, and every
  B-ball meets at most mult_30 of them;
* cov2:  sum_i nu(y_i B)^{1/2} <= mult_30 * #{(i,j): y_i B_2 meets y_j B_2}^{1/2};
* mass:  mu_psi(x B) |Lambda|^2 <= mult_30^2 * #{(s,s'): B_2(x.s) meets B_2(x.s')}
  whenever Lambda psi(y) = sum_s h_s psi(y.s) for all y, with |h_s| <= 1.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

Perm = tuple[int, ...]


class ModelError(ValueError):
    pass


def thread_cap() -> int:
    """Parallelism cap from MASS_LAB_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("MASS_LAB_THREADS", "1")))
    except ValueError:
        return 1


# -- models -------------------------------------------------------------------------


class FiniteModel:
    def __init__(self, dist, measure: Sequence | None = None, translates: Sequence[Perm] | None = None,
                 name: str = "model", check: bool = True):
        d = np.asarray(dist)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ModelError("distance matrix must be square")
        if not np.issubdtype(d.dtype, np.integer):
            raise ModelError("distances must be integers (scale rational metrics first)")
        self.dist = d.astype(np.int64)
        self.n = d.shape[0]
        self.name = name
        if measure is None:
            measure = [Fraction(1, self.n)] * self.n
        self.measure = tuple(Fraction(x) for x in measure)
        if len(self.measure) != self.n or sum(self.measure) != 1 or min(self.measure) < 0:
            raise ModelError("measure must be a probability vector")
        self.translates = [tuple(int(v) for v in t) for t in (translates or [])]
        if check:
            if not self.is_metric():
                raise ModelError("dist is not a metric")
            for t in self.translates:
                if not self.is_isometry(t):
                    raise ModelError("translate is not an isometry")

    def is_metric(self) -> bool:
        d = self.dist
        if np.any(d < 0) or np.any(np.diag(d) != 0) or not np.array_equal(d, d.T):
            return False
        if np.any(d[~np.eye(self.n, dtype=bool)] == 0):
            return False
        for k in range(self.n):
            if np.any(d > d[:, k:k + 1] + d[k:k + 1, :]):
                return False
        return True

    def is_isometry(self, perm: Perm) -> bool:
        p = np.asarray(perm)
        if sorted(perm) != list(range(self.n)):
            return False
        return bool(np.array_equal(self.dist[np.ix_(p, p)], self.dist))

    def balls(self, radius: int) -> np.ndarray:
        return self._balls(int(radius))

    @cached_property
    def _ball_cache(self) -> dict:
        return {}

    def _balls(self, radius: int) -> np.ndarray:
        if radius not in self._ball_cache:
            self._ball_cache[radius] = self.dist <= radius
        return self._ball_cache[radius]

    def with_measure(self, measure) -> FiniteModel:
        m = FiniteModel.__new__(FiniteModel)
        m.__dict__.update({k: v for k, v in self.__dict__.items()})
        m.measure = tuple(Fraction(x) for x in measure)
        if sum(m.measure) != 1 or min(m.measure) < 0:
            raise ModelError("measure must be a probability vector")
        return m

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "dist": [[int(self.dist[i, j]) for j in range(i)] for i in range(self.n)],
            "measure": [str(x) for x in self.measure],
            "translates": [list(t) for t in self.translates],
        }

    @classmethod
    def from_json(cls, data: dict) -> FiniteModel:
        lower = data["dist"]
        n = len(lower)
        d = np.zeros((n, n), dtype=np.int64)
        for i, row in enumerate(lower):
            for j, v in enumerate(row):
                d[i, j] = d[j, i] = int(v)
        measure = [Fraction(x) for x in data["measure"]] if data.get("measure") else None
        return cls(d, measure, data.get("translates"), data.get("name", "model"))

    @classmethod
    def load(cls, path: str) -> FiniteModel:
        with open(path) as fh:
            return cls.from_json(json.load(fh))


@dataclass
class BallFamily:
    model: FiniteModel
    r0: int

    def __post_init__(self):
        if self.r0 < 0:
            raise ModelError("r0 must be non-negative")
        self.B0 = self.model.balls(self.r0)
        self.B = self.model.balls(2 * self.r0)
        self.B2 = self.model.balls(4 * self.r0)
        self.B3 = self.model.balls(6 * self.r0)

    def nested(self) -> bool:
        return bool(np.all(self.B0 <= self.B) and np.all(self.B <= self.B2) and np.all(self.B2 <= self.B3))

    @cached_property
    def mult30(self) -> Fraction:
        return Fraction(int(self.B3.sum(axis=1).max()), int(self.B0.sum(axis=1).min()))


# -- covering lemmas -------------------------------------------------------------------


@dataclass
class CoverReport:
    centers: list[int]
    covers: bool
    max_multiplicity: int
    mult30: Fraction
    holds: bool

    def to_json(self) -> dict:
        return {"centers": self.centers, "covers": self.covers, "max_multiplicity": self.max_multiplicity,
                "mult30": str(self.mult30), "holds": self.holds}


def maximal_separated_cover(model: FiniteModel, family: BallFamily, order: Sequence[int] | None = None) -> CoverReport:
    """Greedy maximal set with pairwise disjoint B_0-balls, plus covering and multiplicity checks."""
    order = list(range(model.n)) if order is None else list(order)
    b0 = family.B0
    used = np.zeros(model.n, dtype=bool)
    centers = []
    for x in order:
        if not np.any(b0[x] & used):
            centers.append(x)
            used |= b0[x]
    cb = family.B[centers]                       # (centers, n) membership in x_a B
    covers = bool(np.all(cb.any(axis=0)))
    # z B meets x_a B  <=>  some w in both
    meets = (family.B.astype(np.int32) @ cb.T.astype(np.int32)) > 0
    max_mult = int(meets.sum(axis=1).max())
    return CoverReport(centers, covers, max_mult, family.mult30, covers and max_mult <= family.mult30)


def _sqrt_dec(x: Fraction) -> Decimal:
    return (Decimal(x.numerator) / Decimal(x.denominator)).sqrt()


@dataclass
class Cov2Result:
    lhs: float
    rhs: float
    pairs: int
    mult30: Fraction
    holds: bool
    margin: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs else math.inf

    def to_json(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "pairs": self.pairs, "mult30": str(self.mult30),
                "holds": self.holds, "ratio": self.ratio}


def intersecting_pairs(family: BallFamily, centers: Sequence[int]) -> int:
    """#{(i, j): B_2(y_i) meets B_2(y_j)}, ordered pairs including i = j."""
    rows = family.B2[list(centers)].astype(np.int32)
    return int(np.count_nonzero(rows @ rows.T))


def cov2_check(model: FiniteModel, translates: Sequence[int], family: BallFamily,
               measure: Sequence[Fraction] | None = None) -> Cov2Result:
    """Both sides of the cov2 inequality; square roots compared at 60 digits."""
    nu = tuple(Fraction(x) for x in (measure or model.measure))
    masses = [sum((nu[j] for j in np.flatnonzero(family.B[y])), Fraction(0)) for y in translates]
    pairs = intersecting_pairs(family, translates)
    with localcontext() as ctx:
        ctx.prec = 60
        lhs = sum((_sqrt_dec(m) for m in masses), Decimal(0))
        rhs = _sqrt_dec(family.mult30 ** 2 * pairs)
        margin = rhs - lhs
        holds = margin >= Decimal("-1e-45")
    return Cov2Result(float(lhs), float(rhs), pairs, family.mult30, holds, float(margin))


# -- correspondences and the mass bound ---------------------------------------------------


@dataclass
class Correspondence:
    """Weighted isometries (x -> x.s) with an eigenfunction psi and eigenvalue Lambda."""

    perms: list[Perm]
    weights: list
    psi: list
    eigenvalue: object
    exact: bool = True

    def apply(self, f: Sequence) -> list:
        n = len(f)
        out = [0] * n
        for perm, h in zip(self.perms, self.weights):
            for x in range(n):
                out[x] += h * f[perm[x]]
        return out

    def residual(self) -> float:
        if self.exact:
            # clear denominators and compare integer vectors
            den = math.lcm(*(Fraction(h).denominator for h in self.weights), Fraction(self.eigenvalue).denominator,
                           *(Fraction(v).denominator for v in self.psi))
            psi = np.array([int(Fraction(v) * den) for v in self.psi], dtype=object)
            lhs = psi * int(Fraction(self.eigenvalue) * den)
            rhs = np.zeros(len(psi), dtype=object)
            for perm, h in zip(self.perms, self.weights):
                rhs = rhs + int(Fraction(h) * den) * psi[np.asarray(perm)]
            diff = lhs - rhs
            return 0.0 if not any(diff) else float(max(abs(Fraction(int(v), den * den)) for v in diff))
        psi = np.asarray(self.psi, dtype=complex)
        out = np.zeros_like(psi)
        for perm, h in zip(self.perms, self.weights):
            out += h * psi[np.asarray(perm)]
        return float(np.max(np.abs(out - self.eigenvalue * psi)) / max(np.max(np.abs(psi)), 1e-300))

    def certified(self, tol: float = 1e-12) -> bool:
        return self.residual() == 0.0 if self.exact else self.residual() < tol


@dataclass
class MassBoundResult:
    mass: float
    bound: float | None
    pairs: int
    eigenvalue_abs: float
    holds: bool | None
    residual: float
    note: str = ""
    mass_exact: Fraction | None = None
    bound_exact: Fraction | None = None

    def to_json(self) -> dict:
        return {"mass": self.mass, "bound": self.bound, "pairs": self.pairs, "eigenvalue_abs": self.eigenvalue_abs,
                "holds": self.holds, "residual": self.residual, "note": self.note}


def mass_bound_check(model: FiniteModel, corr: Correspondence, x: int, family: BallFamily,
                     tol: float = 1e-12) -> MassBoundResult:
    """mu_psi(B(x, 2 r0)) * |Lambda|^2 <= mult30^2 * pairs, with pairs over B_2(x.s)."""
    for h in corr.weights:
        if abs(h) > 1:
            raise ModelError("weights must satisfy |h_s| <= 1")
    res = corr.residual()
    if not corr.certified(tol):
        raise ModelError(f"eigen identity not certified (residual {res})")
    ys = [perm[x] for perm in corr.perms]
    pairs = intersecting_pairs(family, ys)
    ball = np.flatnonzero(family.B[x])
    if corr.exact:
        weights = [Fraction(v) ** 2 for v in corr.psi]
        total = sum(weights, Fraction(0))
        mass = sum((weights[i] for i in ball), Fraction(0)) / total
        lam2 = Fraction(abs(corr.eigenvalue) ** 2)
        if lam2 == 0:
            return MassBoundResult(float(mass), None, pairs, 0.0, None, res, "Lambda = 0: bound undefined", mass)
        bound = family.mult30 ** 2 * pairs / lam2
        return MassBoundResult(float(mass), float(bound), pairs, math.sqrt(lam2), mass <= bound, res,
                               mass_exact=mass, bound_exact=bound)
    psi = np.abs(np.asarray(corr.psi, dtype=complex)) ** 2
    mass = float(psi[ball].sum() / psi.sum())
    lam = abs(corr.eigenvalue)
    if lam == 0:
        return MassBoundResult(mass, None, pairs, 0.0, None, res, "Lambda = 0: bound undefined")
    bound = float(family.mult30 ** 2) * pairs / lam ** 2
    return MassBoundResult(mass, bound, pairs, lam, mass <= bound * (1 + 1e-9), res)


def average_intersection_profile(model: FiniteModel, x: int, family: BallFamily, perms: Sequence[Perm]) -> dict:
    """Exact counts of intersecting translate pairs B_2(x.s), B_2(x.s')."""
    ys = [perm[x] for perm in perms]
    rows = family.B2[ys].astype(np.int32)
    inter = (rows @ rows.T) > 0
    per_s = inter.sum(axis=1)
    total = int(inter.sum())
    return {"pairs_total": total, "size": len(ys), "per_s_average": total / len(ys),
            "worst_case": int(per_s.max())}


# -- concrete models ----------------------------------------------------------------------


def hypercube_model(k: int) -> FiniteModel:
    """(Z/2)^k with Hamming distance; translates by every group element."""
    n = 1 << k
    xs = np.arange(n)
    dist = np.array([[bin(int(a ^ b)).count("1") for b in xs] for a in xs], dtype=np.int64)
    translates = [tuple(int(a ^ s) for a in xs) for s in range(n)]
    return FiniteModel(dist, translates=translates, name=f"hypercube({k})", check=False)


def cyclic_model(n: int) -> FiniteModel:
    xs = np.arange(n)
    diff = np.abs(xs[:, None] - xs[None, :])
    dist = np.minimum(diff, n - diff)
    translates = [tuple(int((a + s) % n) for a in xs) for s in range(n)]
    return FiniteModel(dist, translates=translates, name=f"cycle({n})", check=False)


def torus_model(n: int) -> FiniteModel:
    """(Z/n)^2 with the cyclic L1 metric."""
    pts = [(a, b) for a in range(n) for b in range(n)]
    ax = np.array([p[0] for p in pts])
    bx = np.array([p[1] for p in pts])
    da = np.abs(ax[:, None] - ax[None, :])
    db = np.abs(bx[:, None] - bx[None, :])
    dist = np.minimum(da, n - da) + np.minimum(db, n - db)
    return FiniteModel(dist, name=f"torus({n})", check=False)


def torus_translate(n: int, v: tuple[int, int]) -> Perm:
    return tuple(((a + v[0]) % n) * n + (b + v[1]) % n for a in range(n) for b in range(n))


def random_point_model(n: int, dim: int, box: int, rng: np.random.Generator) -> FiniteModel:
    """Distinct random integer points with the L1 metric."""
    seen: set[tuple[int, ...]] = set()
    while len(seen) < n:
        seen.add(tuple(int(v) for v in rng.integers(0, box, size=dim)))
    pts = np.array(sorted(seen))
    dist = np.abs(pts[:, None, :] - pts[None, :, :]).sum(axis=2)
    return FiniteModel(dist, name=f"L1-points({n},{dim})")


def path_model(n: int) -> FiniteModel:
    xs = np.arange(n)
    return FiniteModel(np.abs(xs[:, None] - xs[None, :]), name=f"path({n})")


def _psl2_elements(q: int) -> list[tuple[int, int, int, int]]:
    elems = set()
    for a, b, c, d in itertools.product(range(q), repeat=4):
        if (a * d - b * c) % q == 1:
            m = (a, b, c, d)
            neg = tuple((-x) % q for x in m)
            elems.add(min(m, neg))
    return sorted(elems)


def _psl2_mul(x, y, q):
    a, b, c, d = x
    e, f, g, h = y
    m = ((a * e + b * g) % q, (a * f + b * h) % q, (c * e + d * g) % q, (c * f + d * h) % q)
    neg = tuple((-v) % q for v in m)
    return min(m, neg)


def psl2_model(q: int) -> tuple[FiniteModel, list, dict]:
    """PSL_2(F_q) with the word metric for generators [[1,1],[0,1]], [[0,-1],[1,0]].

    d(g, h) is the word length of g^{-1} h, so left multiplication is an
    isometry. Returns (model, elements, index).
    """
    elems = _psl2_elements(q)
    index = {e: i for i, e in enumerate(elems)}
    gens = [(1, 1, 0, 1), (1, q - 1, 0, 1), (0, q - 1, 1, 0)]
    gens = [min(g, tuple((-v) % q for v in g)) for g in gens]
    n = len(elems)
    # BFS from identity; d(g,h) = len(g^{-1} h) -> use right Cayley graph
    ident = index[min((1, 0, 0, 1), (q - 1, 0, 0, q - 1))]
    length = [-1] * n
    length[ident] = 0
    frontier = [ident]
    while frontier:
        nxt = []
        for v in frontier:
            for g in gens:
                w = index[_psl2_mul(elems[v], g, q)]
                if length[w] < 0:
                    length[w] = length[v] + 1
                    nxt.append(w)
        frontier = nxt
    inv = [index[_psl2_inverse(e, q)] for e in elems]
    dist = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        gi = elems[inv[i]]
        for j in range(n):
            dist[i, j] = length[index[_psl2_mul(gi, elems[j], q)]]
    return FiniteModel(dist, name=f"PSL2({q})", check=False), elems, index


def _psl2_inverse(x, q):
    a, b, c, d = x
    m = (d, (-b) % q, (-c) % q, a)
    return min(m, tuple((-v) % q for v in m))


def left_multiplication(elems, index, s, q) -> Perm:
    return tuple(index[_psl2_mul(s, e, q)] for e in elems)


# -- eigenfunction constructions ----------------------------------------------------------


def hypercube_correspondence(k: int, support: Sequence[int], weights: Sequence, rng: np.random.Generator,
                             max_terms: int = 4) -> Correspondence:
    """Exact eigenfunction: integer combination of +-1 characters in one eigenspace."""
    n = 1 << k
    chars = _hypercube_characters(k)
    den = math.lcm(*(Fraction(w).denominator for w in weights))
    scaled = chars[:, list(support)] @ np.array([int(Fraction(w) * den) for w in weights], dtype=np.int64)
    lam: dict[Fraction, list[int]] = {}
    for v in range(n):
        lam.setdefault(Fraction(int(scaled[v]), den), []).append(v)
    keys = sorted(lam)
    key = keys[int(rng.integers(len(keys)))]
    vs = lam[key]
    chosen = rng.choice(vs, size=min(len(vs), int(rng.integers(1, max_terms + 1))), replace=False)
    coeffs = [int(c) or 1 for c in rng.integers(-3, 4, size=len(chosen))]
    psi = [int(v) for v in np.array(coeffs, dtype=np.int64) @ chars[np.asarray(chosen)]]
    if not any(psi):
        psi = [int(chars[chosen[0], x]) for x in range(n)]
    perms = [tuple(x ^ s for x in range(n)) for s in support]
    return Correspondence(perms, [Fraction(w) for w in weights], psi, key, exact=True)


@lru_cache(maxsize=None)
def _hypercube_characters(k: int) -> np.ndarray:
    n = 1 << k
    x = np.arange(n)
    parity = np.zeros((n, n), dtype=np.int64)
    for bit in range(k):
        parity ^= ((x[:, None] >> bit) & 1) * ((x[None, :] >> bit) & 1)
    return 1 - 2 * parity


def dense_eigen_correspondences(model_perms: Sequence[Perm], weights: Sequence[float], n: int,
                                tol: float = 1e-12) -> list[Correspondence]:
    """All eigenpairs of sum_s h_s P_s (symmetric) from a dense eigensolve."""
    op = np.zeros((n, n))
    for perm, h in zip(model_perms, weights):
        op[np.arange(n), np.asarray(perm)] += h
    if not np.allclose(op, op.T):
        raise ModelError("correspondence operator must be symmetric")
    vals, vecs = np.linalg.eigh(op)
    out = []
    for i in range(n):
        c = Correspondence(list(model_perms), list(weights), vecs[:, i], float(vals[i]), exact=False)
        if c.residual() < tol:
            out.append(c)
        else:
            raise ModelError(f"eigenpair {i} residual {c.residual()} above tolerance")
    return out


def circulant_correspondences(n: int, steps: Sequence[int]) -> list[Correspondence]:
    """Eigenfunctions of h = sum over steps k of (shift by k + shift by -k) on Z/n.

    Real eigenfunctions cos(2 pi j x / n) and sin(2 pi j x / n), with weights 1/2
    so that |h_s| <= 1 and h is a sum of commuting correspondences.
    """
    xs = np.arange(n)
    perms, weights = [], []
    for k in steps:
        for sgn in (1, -1):
            perms.append(tuple(int((x + sgn * k) % n) for x in xs))
            weights.append(0.5)
    out = []
    for j in range(n):
        lam = sum(math.cos(2 * math.pi * j * k / n) for k in steps)
        for f in (np.cos, np.sin):
            psi = f(2 * np.pi * j * xs / n)
            if np.max(np.abs(psi)) < 1e-9:
                continue
            out.append(Correspondence(perms, weights, psi, lam, exact=False))
    return out


# -- tube decay ------------------------------------------------------------------------------


def torus_eigenfunction(n: int, freqs: Sequence[tuple[int, int]], coeffs: Sequence[float]) -> np.ndarray:
    """sum c cos(2 pi (a x + b y)/n) on (Z/n)^2, flattened row-major."""
    a = np.arange(n)
    X, Y = np.meshgrid(a, a, indexing="ij")
    psi = np.zeros((n, n))
    for (fa, fb), c in zip(freqs, coeffs):
        psi += c * np.cos(2 * np.pi * (fa * X + fb * Y) / n)
    return psi.ravel()


def tube_decay_experiment(model: FiniteModel, psi: np.ndarray, x: int, radii: Sequence[int],
                          scale: float | None = None) -> dict:
    """Mass of B(x, r) under |psi|^2 against eps = r / scale, with a log-log fit."""
    weights = np.abs(np.asarray(psi, dtype=complex)) ** 2
    total = weights.sum()
    scale = scale or float(model.dist.max())
    rows = []
    for r in radii:
        ball = model.dist[x] <= r
        rows.append({"eps": r / scale, "radius": int(r), "mass": float(weights[ball].sum() / total),
                     "points": int(ball.sum())})
    eps = np.array([row["eps"] for row in rows])
    mass = np.array([row["mass"] for row in rows])
    good = (eps > 0) & (mass > 0)
    degenerate = int(good.sum()) < 3 or len(set(eps[good])) < 3
    slope = None
    if not degenerate:
        slope = float(np.polyfit(np.log(eps[good]), np.log(mass[good]), 1)[0])
    return {"rows": rows, "slope": slope, "degenerate": degenerate,
            "positive": (slope is not None and slope > 0)}


def planted_profile(n: int, q_values: Sequence[int], extra: Sequence[int], r0: int, rng: np.random.Generator) -> dict:
    """Translates along a planted cyclic subgroup line plus scattered ones, with an (A, B) fit.

    pairs_total is fitted against A Q^2 + B |S| by least squares.
    """
    model = torus_model(n)
    fam = BallFamily(model, r0)
    direction = (1, 2)
    rows = []
    for q in q_values:
        for m in extra:
            vecs = [((j * direction[0]) % n, (j * direction[1]) % n) for j in range(q)]
            vecs += [tuple(int(v) for v in rng.integers(0, n, size=2)) for _ in range(m)]
            perms = [torus_translate(n, v) for v in vecs]
            prof = average_intersection_profile(model, 0, fam, perms)
            rows.append({"Q": q, "S": len(perms), **prof})
    design = np.array([[r["Q"] ** 2, r["S"]] for r in rows], dtype=float)
    target = np.array([r["pairs_total"] for r in rows], dtype=float)
    (A, B), *_ = np.linalg.lstsq(design, target, rcond=None)
    ratios = target / (design @ np.array([max(A, 0), max(B, 0)]) + 1e-300)
    return {"rows": rows, "A": float(A), "B": float(B), "max_ratio": float(ratios.max())}


# -- randomized trial drivers ----------------------------------------------------------------


def random_measure(n: int, rng: np.random.Generator, kind: str | None = None) -> list[Fraction]:
    kind = kind or rng.choice(["dense", "sparse", "point", "uniform"])
    if kind == "uniform":
        return [Fraction(1, n)] * n
    if kind == "point":
        w = [0] * n
        w[int(rng.integers(n))] = 1
        return [Fraction(v) for v in w]
    w = rng.integers(0, 20, size=n)
    if kind == "sparse":
        w = w * (rng.random(n) < 0.1)
    if w.sum() == 0:
        w[int(rng.integers(n))] = 1
    total = int(w.sum())
    return [Fraction(int(v), total) for v in w]


@dataclass
class TrialSummary:
    trials: int = 0
    violations: int = 0
    worst_ratio: float = 0.0
    details: list = field(default_factory=list)

    def record(self, ok: bool, ratio: float, info: dict):
        self.trials += 1
        self.worst_ratio = max(self.worst_ratio, ratio)
        if not ok:
            self.violations += 1
            if len(self.details) < 10:
                self.details.append(info)

    def to_json(self) -> dict:
        return {"trials": self.trials, "violations": self.violations, "worst_ratio": self.worst_ratio,
                "details": self.details}


def cov2_trials(models: Sequence[FiniteModel], trials: int, rng: np.random.Generator, max_r: int = 40) -> TrialSummary:
    summary = TrialSummary()
    fams = {}
    for _ in range(trials):
        model = models[int(rng.integers(len(models)))]
        r0 = int(rng.integers(0, 3))
        fam = fams.get((id(model), r0))
        if fam is None:
            fam = fams[(id(model), r0)] = BallFamily(model, r0)
        r = int(rng.integers(1, max_r + 1))
        ys = [int(v) for v in rng.integers(0, model.n, size=r)]
        nu = random_measure(model.n, rng)
        res = cov2_check(model, ys, fam, nu)
        summary.record(res.holds, res.ratio, {"model": model.name, "r0": r0, "ys": ys[:10]})
    return summary


def mass_trials(trials: int, rng: np.random.Generator) -> TrialSummary:
    """Exact hypercube eigenpairs plus certified dense/circulant eigenpairs."""
    summary = TrialSummary()
    cubes = {k: hypercube_model(k) for k in (5, 6, 7)}
    dense_pool = _dense_pool()
    for t in range(trials):
        if t % 4 != 3:
            k = int(rng.choice(list(cubes)))
            model = cubes[k]
            fam = BallFamily(model, int(rng.integers(0, 2)))
            size = int(rng.integers(1, 13))
            support = [int(v) for v in rng.choice(model.n, size=size, replace=False)]
            weights = [Fraction(int(rng.integers(-4, 5)), 4) or Fraction(1) for _ in support]
            corr = hypercube_correspondence(k, support, weights, rng)
        else:
            model, corrs = dense_pool[int(rng.integers(len(dense_pool)))]
            fam = BallFamily(model, int(rng.integers(0, 2)))
            corr = corrs[int(rng.integers(len(corrs)))]
        x = int(rng.integers(model.n))
        res = mass_bound_check(model, corr, x, fam)
        if res.holds is None:
            continue
        ratio = res.mass / res.bound if res.bound else 0.0
        summary.record(bool(res.holds), ratio, {"model": model.name, "x": x})
    return summary


_DENSE_POOL = None


def _dense_pool():
    global _DENSE_POOL
    if _DENSE_POOL is None:
        pool = []
        for q in (5, 7):
            model, elems, index = psl2_model(q)
            gens = [(1, 1, 0, 1), (0, q - 1, 1, 0)]
            s = [min(g, tuple((-v) % q for v in g)) for g in gens]
            s = s + [_psl2_inverse(g, q) for g in s]
            perms = [left_multiplication(elems, index, g, q) for g in s]
            pool.append((model, dense_eigen_correspondences(perms, [1.0] * len(perms), model.n)))
        for n in (30, 64):
            pool.append((cyclic_model(n), circulant_correspondences(n, [1, 3])))
        _DENSE_POOL = pool
    return _DENSE_POOL
