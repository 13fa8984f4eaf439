"""Exact Q-algebra arithmetic: denominators, closure, near-subalgebra detection.

An algebra is described by structure constants in a fixed Q-basis
e_1..e_n: e_i e_j = sum_k c[i][j][k] e_k. A lattice D_Z is given by a
rational basis (rows, in e-coordinates) and the Euclidean norm by a rational
Gram matrix, ||x||^2 = x^T Q x.

All comparisons are done on squared quantities with Fractions, so the
near-subalgebra test never rounds.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import sympy

from .exact_arith import (
    RationalMatrix,
    as_fraction,
    determinant,
    lcm_all,
    rank_over_Q,
    reduce_against,
    row_echelon_basis,
    solve_rational,
)

Vector = tuple[Fraction, ...]


class AlgebraSpecError(ValueError):
    pass


class XSetViolation(ValueError):
    """Raised when input points do not satisfy the norm/distance/denominator constraints."""

    def __init__(self, message: str, indices: list[int]):
        super().__init__(f"{message}: indices {indices}")
        self.indices = indices


@dataclass(frozen=True)
class AlgebraElement:
    coords: Vector

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(as_fraction(x) for x in self.coords))

    def __add__(self, other: AlgebraElement) -> AlgebraElement:
        return AlgebraElement(tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: AlgebraElement) -> AlgebraElement:
        return AlgebraElement(tuple(a - b for a, b in zip(self.coords, other.coords)))

    def scale(self, c) -> AlgebraElement:
        c = as_fraction(c)
        return AlgebraElement(tuple(c * a for a in self.coords))

    def is_zero(self) -> bool:
        return not any(self.coords)

    def to_json(self) -> list[str]:
        return [str(x) for x in self.coords]


@dataclass
class AlgebraSpec:
    dim: int
    structure_constants: list[list[list[Fraction]]]
    lattice_basis: list[Vector]
    gram: list[list[Fraction]]
    unit: Vector
    name: str = "algebra"

    def __post_init__(self):
        n = self.dim
        sc = self.structure_constants
        if len(sc) != n or any(len(r) != n or any(len(c) != n for c in r) for r in sc):
            raise AlgebraSpecError("structure constants must be an n x n x n tensor")
        self.structure_constants = [[[as_fraction(x) for x in c] for c in r] for r in sc]
        self.lattice_basis = [tuple(as_fraction(x) for x in v) for v in self.lattice_basis]
        self.gram = [[as_fraction(x) for x in r] for r in self.gram]
        self.unit = tuple(as_fraction(x) for x in self.unit)
        if len(self.lattice_basis) != n or any(len(v) != n for v in self.lattice_basis):
            raise AlgebraSpecError("lattice basis must be n vectors of length n")
        if determinant(self.lattice_basis) == 0:
            raise AlgebraSpecError("lattice basis is singular")
        if len(self.gram) != n or any(len(r) != n for r in self.gram):
            raise AlgebraSpecError("gram matrix must be n x n")
        if any(self.gram[i][j] != self.gram[j][i] for i in range(n) for j in range(n)):
            raise AlgebraSpecError("gram matrix must be symmetric")
        if not self.is_associative():
            raise AlgebraSpecError("structure constants are not associative")
        one = self.element(self.unit)
        for i in range(n):
            e = self.basis_element(i)
            if self.mul(one, e) != e or self.mul(e, one) != e:
                raise AlgebraSpecError("unit is not a two-sided identity")

    # -- construction helpers ------------------------------------------------

    def element(self, coords) -> AlgebraElement:
        if len(coords) != self.dim:
            raise AlgebraSpecError("coordinate length mismatch")
        return AlgebraElement(tuple(coords))

    def basis_element(self, i: int) -> AlgebraElement:
        return AlgebraElement(tuple(Fraction(int(k == i)) for k in range(self.dim)))

    @property
    def one(self) -> AlgebraElement:
        return AlgebraElement(self.unit)

    def mul(self, x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
        n = self.dim
        out = [Fraction(0)] * n
        sc = self.structure_constants
        for i, a in enumerate(x.coords):
            if not a:
                continue
            for j, b in enumerate(y.coords):
                if not b:
                    continue
                ab = a * b
                for k, c in enumerate(sc[i][j]):
                    if c:
                        out[k] += ab * c
        return AlgebraElement(tuple(out))

    def is_associative(self) -> bool:
        basis = [self.basis_element(i) for i in range(self.dim)]
        for x, y, z in itertools.product(basis, repeat=3):
            if self.mul(self.mul(x, y), z) != self.mul(x, self.mul(y, z)):
                return False
        return True

    def norm_squared(self, x: AlgebraElement) -> Fraction:
        v = x.coords
        return sum((v[i] * self.gram[i][j] * v[j] for i in range(self.dim) for j in range(self.dim) if v[i] and v[j]),
                   Fraction(0))

    def lattice_coords(self, x: AlgebraElement) -> Vector:
        """Coordinates of x in the lattice basis (x = sum c_i b_i)."""
        # rows of B are b_i, so x = B^T c
        bt = [list(r) for r in zip(*self.lattice_basis)]
        sol = solve_rational(bt, [[a] for a in x.coords])
        return tuple(r[0] for r in sol)

    @cached_property
    def minimal_K(self) -> int:
        """Least K with K * D_Z * D_Z contained in D_Z."""
        basis = [self.element(b) for b in self.lattice_basis]
        return lcm_all(lattice_denominator(self.mul(x, y), self) for x in basis for y in basis)

    # -- serialisation ---------------------------------------------------------

    def to_json(self) -> dict:
        s = lambda x: str(x)  # noqa: E731
        return {
            "name": self.name, "dim": self.dim,
            "structure_constants": [[[s(x) for x in c] for c in r] for r in self.structure_constants],
            "lattice_basis": [[s(x) for x in v] for v in self.lattice_basis],
            "gram": [[s(x) for x in r] for r in self.gram],
            "unit": [s(x) for x in self.unit],
        }

    @classmethod
    def from_json(cls, data: dict) -> AlgebraSpec:
        conv = lambda x: Fraction(x) if isinstance(x, (str, int)) else as_fraction(x)  # noqa: E731
        return cls(
            dim=int(data["dim"]),
            structure_constants=[[[conv(x) for x in c] for c in r] for r in data["structure_constants"]],
            lattice_basis=[tuple(conv(x) for x in v) for v in data["lattice_basis"]],
            gram=[[conv(x) for x in r] for r in data["gram"]],
            unit=tuple(conv(x) for x in data["unit"]),
            name=data.get("name", "algebra"),
        )

    @classmethod
    def load(cls, path: str) -> AlgebraSpec:
        with open(path) as fh:
            return cls.from_json(json.load(fh))


# -- standard instances ---------------------------------------------------------


def matrix_algebra(n: int, lattice: Sequence[Sequence] | None = None) -> AlgebraSpec:
    """M_n(Q) with basis E_ij (row-major), Frobenius norm, D_Z = M_n(Z) by default."""
    dim = n * n
    sc = [[[Fraction(0)] * dim for _ in range(dim)] for _ in range(dim)]
    for i, j, l in itertools.product(range(n), repeat=3):
        # E_ij E_jl = E_il
        sc[i * n + j][j * n + l][i * n + l] = Fraction(1)
    basis = lattice or [tuple(Fraction(int(k == m)) for k in range(dim)) for m in range(dim)]
    gram = [[Fraction(int(i == j)) for j in range(dim)] for i in range(dim)]
    unit = tuple(Fraction(int(k // n == k % n)) for k in range(dim))
    return AlgebraSpec(dim, sc, list(basis), gram, unit, name=f"M_{n}(Q)")


def half_order_m2() -> AlgebraSpec:
    """M_2(Q) with D_Z spanned by E11, E22, E12/2, E21; here K = 2."""
    h = Fraction(1, 2)
    lattice = [(1, 0, 0, 0), (0, 0, 0, 1), (0, h, 0, 0), (0, 0, 1, 0)]
    spec = matrix_algebra(2, [tuple(Fraction(x) for x in v) for v in lattice])
    spec.name = "M_2(Q), order with K=2"
    return spec


def hamilton_quaternions(order: str = "lipschitz") -> AlgebraSpec:
    """(-1,-1)_Q with basis 1, i, j, k; reduced norm is the Euclidean norm."""
    table = {
        (0, 0): (1, 0), (0, 1): (1, 1), (0, 2): (1, 2), (0, 3): (1, 3),
        (1, 0): (1, 1), (1, 1): (-1, 0), (1, 2): (1, 3), (1, 3): (-1, 2),
        (2, 0): (1, 2), (2, 1): (-1, 3), (2, 2): (-1, 0), (2, 3): (1, 1),
        (3, 0): (1, 3), (3, 1): (1, 2), (3, 2): (-1, 1), (3, 3): (-1, 0),
    }
    sc = [[[Fraction(0)] * 4 for _ in range(4)] for _ in range(4)]
    for (a, b), (sign, c) in table.items():
        sc[a][b][c] = Fraction(sign)
    h = Fraction(1, 2)
    if order == "lipschitz":
        lattice = [tuple(Fraction(int(k == m)) for k in range(4)) for m in range(4)]
    elif order == "hurwitz":
        lattice = [(h, h, h, h), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)]
    else:
        raise AlgebraSpecError(f"unknown quaternion order {order!r}")
    gram = [[Fraction(int(i == j)) for j in range(4)] for i in range(4)]
    return AlgebraSpec(4, sc, [tuple(Fraction(x) for x in v) for v in lattice], gram,
                       (Fraction(1), Fraction(0), Fraction(0), Fraction(0)), name=f"H({order})")


def from_matrix(m: RationalMatrix | Sequence[Sequence]) -> AlgebraElement:
    rows = m.rows if isinstance(m, RationalMatrix) else m
    return AlgebraElement(tuple(as_fraction(x) for r in rows for x in r))


def to_matrix(x: AlgebraElement) -> RationalMatrix:
    n = math.isqrt(len(x.coords))
    return RationalMatrix([x.coords[i * n:(i + 1) * n] for i in range(n)])


# -- denominators and the G polynomial --------------------------------------------


def lattice_denominator(x: AlgebraElement, spec: AlgebraSpec) -> int:
    """min m >= 1 with m x in D_Z."""
    return lcm_all(c.denominator for c in spec.lattice_coords(x))


def minors_polynomial_G(xs: Sequence[AlgebraElement], spec: AlgebraSpec | None = None) -> Fraction:
    """Sum of squares of the s x s minors of the coordinate matrix of x_1..x_s.

    Coordinates are taken in the lattice basis when ``spec`` is given, so that
    G has integral coefficients with respect to D_Z.
    """
    rows = [spec.lattice_coords(x) if spec else x.coords for x in xs]
    s = len(rows)
    if s == 0:
        return Fraction(1)
    n = len(rows[0])
    if s > n:
        return Fraction(0)
    total = Fraction(0)
    for cols in itertools.combinations(range(n), s):
        m = determinant([[r[c] for c in cols] for r in rows])
        total += m * m
    return total


def g_denominator_bound(xs: Sequence[AlgebraElement], spec: AlgebraSpec) -> int:
    """prod d~(x_i)^2; the denominator of G divides it."""
    return math.prod(lattice_denominator(x, spec) ** 2 for x in xs)


# -- closure ----------------------------------------------------------------------


@dataclass
class SubalgebraReport:
    generated_basis: list[AlgebraElement]
    dim: int
    ambient_dim: int
    proper: bool
    certificate: dict = field(default_factory=dict)
    condition_holds: bool | None = None
    counterexample: bool = False
    constants: tuple | None = None

    def to_json(self) -> dict:
        cert = {k: (str(v) if isinstance(v, Fraction) else v) for k, v in self.certificate.items()}
        return {
            "dim": self.dim, "ambient_dim": self.ambient_dim, "proper": self.proper,
            "generated_basis": [x.to_json() for x in self.generated_basis],
            "certificate": cert,
            "condition_holds": self.condition_holds,
            "counterexample": self.counterexample,
            "constants": None if self.constants is None else [str(c) for c in self.constants],
        }


def _span_basis(vectors: Sequence[Vector]) -> list[list[Fraction]]:
    return row_echelon_basis(vectors) if vectors else []


def algebra_closure(gens: Sequence[AlgebraElement], spec: AlgebraSpec) -> SubalgebraReport:
    """Unital Q-algebra generated by ``gens``, by multiplying until the span is stable."""
    basis = _span_basis([spec.unit])
    rounds = 0
    while True:
        rounds += 1
        candidates = [tuple(b) for b in basis]
        for b in basis:
            for g in gens:
                candidates.append(spec.mul(AlgebraElement(tuple(b)), g).coords)
        new = _span_basis(candidates)
        if len(new) == len(basis):
            break
        basis = new
        if rounds > spec.dim + 1:
            raise AssertionError("closure failed to stabilise within dim D rounds")
    elems = [AlgebraElement(tuple(b)) for b in basis]
    dim = len(elems)
    cert = {"rounds": rounds, "G_basis": minors_polynomial_G(elems, spec)}
    if dim < spec.dim:
        cert["G_with_generators"] = [minors_polynomial_G(elems + [g], spec) for g in gens]
    return SubalgebraReport(elems, dim, spec.dim, dim < spec.dim, cert)


def in_span(x: AlgebraElement, basis: Sequence[AlgebraElement]) -> bool:
    vecs = [b.coords for b in basis]
    return rank_over_Q(vecs + [x.coords]) == rank_over_Q(vecs) if vecs else x.is_zero()


# -- distance to a subspace -----------------------------------------------------------


def distance_squared_to_span(x: AlgebraElement, basis: Sequence[AlgebraElement], spec: AlgebraSpec) -> Fraction:
    """Exact min_{s in span} ||x - s||^2 for the Gram norm."""
    if not basis:
        return spec.norm_squared(x)
    ech = _span_basis([b.coords for b in basis])
    q = spec.gram
    n = spec.dim

    def ip(u, v):
        return sum((u[i] * q[i][j] * v[j] for i in range(n) for j in range(n) if u[i] and v[j]), Fraction(0))

    gmat = [[ip(u, v) for v in ech] for u in ech]
    rhs = [[ip(u, x.coords)] for u in ech]
    c = [r[0] for r in solve_rational(gmat, rhs)]
    proj = [sum((ci * u[k] for ci, u in zip(c, ech)), Fraction(0)) for k in range(n)]
    resid = AlgebraElement(tuple(a - b for a, b in zip(x.coords, proj)))
    return spec.norm_squared(resid)


# -- the near-subalgebra lemma ----------------------------------------------------------


def derived_condition_constants(dim_D: int, dim_S: int) -> tuple[int, Fraction]:
    """(c, c') for eps R^c M^c < c' with a submultiplicative norm and K = 1.

    With s = dim S + 1 and monomials of length L <= dim D in the points
    (R >= max(1, ||1||)):
      * each monomial y has ||y|| <= R^L, d~(y) <= M^L and lies within
        eta <= L eps (R + eps)^{L-1} of S;
      * for s such monomials the Gram determinant G = |y_1 ^ ... ^ y_s|^2 is
        at most (s eta (R^L + eta)^{s-1})^2 because the projections to S are
        dependent;
      * a nonzero G is at least prod d~(y_i)^{-2} >= M^{-2Ls}.
    Hence G = 0 as soon as s L eps R^{Ls-1} (1 + o(1)) < M^{-Ls}, which
    eps R^{Ls} M^{Ls} < 1/(2 s L) guarantees.
    """
    s = dim_S + 1
    L = dim_D
    return L * s, Fraction(1, 2 * s * L)


def default_condition_constants() -> tuple[int, Fraction]:
    """Defaults for M_2(Q), Frobenius norm, D_Z = M_2(Z), dim S = 2."""
    return derived_condition_constants(4, 2)


def _fraction_ceiling_sqrt(x: Fraction) -> Fraction:
    """Rational r >= sqrt(x) with r <= sqrt(x) (1 + 1e-12) for x > 0."""
    if x == 0:
        return Fraction(0)
    # binary scale chosen so the integer square root carries about 60 bits
    shift = max(0, (x.denominator.bit_length() - x.numerator.bit_length()) // 2 + 62)
    scale = 1 << shift
    r = math.isqrt(x.numerator * scale * scale // x.denominator) + 1
    return Fraction(r, scale)


def check_xset(points: Sequence[AlgebraElement], s_basis: Sequence[AlgebraElement], eps, R, M,
               spec: AlgebraSpec) -> dict:
    """Indices of points violating ||x|| <= R, dist(x,S) <= eps, d~(x) <= M (exact)."""
    eps, R = as_fraction(eps), as_fraction(R)
    bad = {"norm": [], "distance": [], "denominator": []}
    for i, x in enumerate(points):
        if spec.norm_squared(x) > R * R:
            bad["norm"].append(i)
        if distance_squared_to_span(x, s_basis, spec) > eps * eps:
            bad["distance"].append(i)
        if lattice_denominator(x, spec) > M:
            bad["denominator"].append(i)
    return bad


def condition_holds(eps, R, M, constants, spec: AlgebraSpec) -> bool:
    """eps R^c M^c < c' with R replaced by max(R, 1, ||1||) (exact, squared where needed)."""
    c, cprime = constants
    eps, R = as_fraction(eps), as_fraction(R)
    one_sq = spec.norm_squared(spec.one)
    r_eff = max(R, Fraction(1))
    if r_eff * r_eff < one_sq:
        r_eff = _fraction_ceiling_sqrt(one_sq)
    return eps * r_eff ** c * Fraction(M) ** c < cprime


def near_subalgebra_test(points: Sequence[AlgebraElement], s_basis: Sequence[AlgebraElement], eps, R, M,
                         spec: AlgebraSpec, constants: tuple | None = None) -> SubalgebraReport:
    """Closure of points near a real subalgebra, with the lemma's condition evaluated.

    S is given by a rational basis and must be a unital subalgebra. When the
    condition holds and the closure is all of D, the report is marked as a
    counterexample to the configured constants.
    """
    if constants is None:
        constants = derived_condition_constants(spec.dim, len(_span_basis([b.coords for b in s_basis])))
    s_report = algebra_closure(s_basis, spec)
    s_dim = len(_span_basis([b.coords for b in s_basis]))
    if s_report.dim != s_dim:
        raise AlgebraSpecError("S basis does not span a unital subalgebra")
    if s_dim >= spec.dim:
        raise AlgebraSpecError("S must be a proper subalgebra")
    bad = check_xset(points, s_basis, eps, R, M, spec)
    offenders = sorted(set(bad["norm"]) | set(bad["distance"]) | set(bad["denominator"]))
    if offenders:
        raise XSetViolation(f"points violate the constraint set ({bad})", offenders)
    report = algebra_closure(points, spec)
    report.condition_holds = condition_holds(eps, R, M, constants, spec)
    report.constants = tuple(constants)
    report.counterexample = bool(report.condition_holds and not report.proper)
    return report


# -- colinear toy -------------------------------------------------------------------------


Point = tuple[Fraction, Fraction]


def triangle_area(p1: Point, p2: Point, p3: Point) -> Fraction:
    (x1, y1), (x2, y2), (x3, y3) = [(as_fraction(a), as_fraction(b)) for a, b in (p1, p2, p3)]
    return abs((x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1)) / 2


def distance_squared_to_segment(pt: Point, a: Point, b: Point) -> Fraction:
    px, py = map(as_fraction, pt)
    ax, ay = map(as_fraction, a)
    bx, by = map(as_fraction, b)
    dx, dy = bx - ax, by - ay
    len2 = dx * dx + dy * dy
    t = ((px - ax) * dx + (py - ay) * dy) / len2
    t = min(Fraction(1), max(Fraction(0), t))
    qx, qy = ax + t * dx - px, ay + t * dy - py
    return qx * qx + qy * qy


def colinear_toy(p1: Point, p2: Point, p3: Point, M: int, eps, segment: tuple[Point, Point] | None = None) -> bool:
    """Exact colinearity of three rational points with denominators <= M.

    If a segment is supplied, the points must lie within eps of it.
    """
    pts = [(as_fraction(x), as_fraction(y)) for x, y in (p1, p2, p3)]
    if any(c.denominator > M for pt in pts for c in pt):
        raise ValueError("coordinate denominators exceed M")
    if segment is not None:
        eps = as_fraction(eps)
        if any(distance_squared_to_segment(pt, *segment) > eps * eps for pt in pts):
            raise ValueError("points are not within eps of the segment")
    return triangle_area(*pts) == 0


def grid_points(M: int, lo: int, hi: int) -> list[Point]:
    vals = sorted({Fraction(a, b) for b in range(1, M + 1) for a in range(lo * b, hi * b + 1)})
    return [(x, y) for x in vals for y in vals]


def colinear_exhaustive(M: int, eps, segments: Sequence[tuple[Point, Point]], box: tuple[int, int] = (-1, 2)) -> dict:
    """Check every triple of grid points near each segment; count non-colinear triples."""
    eps = as_fraction(eps)
    grid = grid_points(M, *box)
    triples = 0
    false_negatives = []
    near_counts = []
    for seg in segments:
        near = [pt for pt in grid if distance_squared_to_segment(pt, *seg) <= eps * eps]
        near_counts.append(len(near))
        for a, b, c in itertools.combinations(near, 3):
            triples += 1
            if triangle_area(a, b, c) != 0:
                false_negatives.append((seg, (a, b, c)))
    return {"segments": len(segments), "near_points": near_counts, "triples": triples,
            "false_negatives": len(false_negatives), "examples": false_negatives[:5]}


def unit_segments(M: int = 2, offsets: Sequence[Fraction] = (Fraction(0), Fraction(1, 10**7))) -> list[tuple[Point, Point]]:
    """Unit-length rational segments anchored at grid points of [0, 1]^2.

    Directions are axis-parallel, diagonal-free Pythagorean slopes and their
    reflections; ``offsets`` shift each segment sideways by a tiny amount so
    that grid points sit just off the segment.
    """
    base = [(Fraction(1), Fraction(0)), (Fraction(0), Fraction(1)),
            (Fraction(3, 5), Fraction(4, 5)), (Fraction(4, 5), Fraction(3, 5)),
            (Fraction(5, 13), Fraction(12, 13)), (Fraction(12, 13), Fraction(5, 13))]
    directions = base + [(dx, -dy) for dx, dy in base if dy]
    anchors = grid_points(M, 0, 1)
    out = []
    for ax, ay in anchors:
        for dx, dy in directions:
            for off in offsets:
                a = (ax + off * dy, ay - off * dx)
                out.append((a, (a[0] + dx, a[1] + dy)))
    return out


def min_strip_epsilon(p1: Point, p2: Point, p3: Point) -> Fraction:
    """Lower bound for eps if the points are within eps of one unit segment.

    Three points within eps of a segment of length 1 lie in a strip of width
    2 eps, so 2 area <= 2 eps * (longest side), and the longest side is at
    most 1 + 2 eps <= 2 for eps <= 1/2. Hence eps >= area / 2.
    """
    return triangle_area(p1, p2, p3) / 2


def smallest_area_triangle(M: int, box: tuple[int, int] = (0, 1)) -> tuple[Fraction, tuple[Point, Point, Point]]:
    """Smallest nonzero triangle area on the grid of points with denominators <= M."""
    grid = grid_points(M, *box)
    best = None
    for a, b, c in itertools.combinations(grid, 3):
        area = triangle_area(a, b, c)
        if area and (best is None or area < best[0]):
            best = (area, (a, b, c))
    return best


# -- denominators and bad primes -------------------------------------------------------


@dataclass
class LiftResult:
    element: AlgebraElement
    factor: int
    norm: float
    verified: bool

    def to_json(self) -> dict:
        return {"element": self.element.to_json(), "factor": self.factor, "norm": self.norm,
                "verified": self.verified}


def stabilizes_lattice(alpha: AlgebraElement, spec: AlgebraSpec) -> bool:
    """alpha D_Z + D_Z alpha is contained in D_Z (exact)."""
    for b in spec.lattice_basis:
        be = spec.element(b)
        for prod in (spec.mul(alpha, be), spec.mul(be, alpha)):
            if lattice_denominator(prod, spec) != 1:
                return False
    return True


def clear_denominator_lift(gamma: RationalMatrix | AlgebraElement, spec: AlgebraSpec | None = None) -> LiftResult:
    """alpha' = K d~(alpha) alpha, which satisfies alpha' D_Z + D_Z alpha' in D_Z."""
    if isinstance(gamma, RationalMatrix):
        if gamma.det() == 0:
            raise ValueError("gamma must be invertible")
        spec = spec or matrix_algebra(gamma.dim)
        alpha = from_matrix(gamma)
    else:
        if spec is None:
            raise ValueError("an AlgebraSpec is required for abstract elements")
        alpha = gamma
    factor = spec.minimal_K * lattice_denominator(alpha, spec)
    lifted = alpha.scale(factor)
    return LiftResult(lifted, factor, math.sqrt(spec.norm_squared(lifted)), stabilizes_lattice(lifted, spec))


@dataclass
class BadPrimeReport:
    primes: list[int]
    minimal_polynomial: list[int]
    discriminant: int
    degenerate: bool
    log_norm: float

    def to_json(self) -> dict:
        return {"primes": self.primes, "minimal_polynomial": self.minimal_polynomial,
                "discriminant": str(self.discriminant), "degenerate": self.degenerate,
                "log_norm": self.log_norm}


def minimal_polynomial(alpha: AlgebraElement, spec: AlgebraSpec) -> list[Fraction]:
    """Monic minimal polynomial of alpha over Q, highest degree first."""
    powers = [spec.one]
    while True:
        nxt = spec.mul(powers[-1], alpha)
        vecs = [p.coords for p in powers]
        if rank_over_Q(vecs + [nxt.coords]) == len(powers):
            # nxt = sum c_i alpha^i; solve least-squares-free via an echelon subsystem
            n = spec.dim
            k = len(powers)
            rows = [[vecs[i][r] for i in range(k)] for r in range(n)]
            pivot_rows = _independent_rows(rows, k)
            sol = solve_rational([rows[r] for r in pivot_rows], [[nxt.coords[r]] for r in pivot_rows])
            coeffs = [-s[0] for s in sol]  # alpha^k - sum c_i alpha^i
            return [Fraction(1)] + list(reversed(coeffs))
        powers.append(nxt)


def _independent_rows(rows, k):
    chosen, basis, pivots = [], [], []
    for idx, r in enumerate(rows):
        v = reduce_against([as_fraction(x) for x in r], basis, pivots)
        if any(v):
            c = next(i for i, x in enumerate(v) if x)
            v = [x / v[c] for x in v]
            basis.append(v)
            pivots.append(c)
            chosen.append(idx)
            if len(chosen) == k:
                break
    return chosen


def bad_primes(alpha: AlgebraElement, spec: AlgebraSpec, degree: int | None = None) -> BadPrimeReport:
    """Primes dividing disc Z[alpha], from the minimal polynomial of alpha.

    ``degree`` is the reduced degree d of the algebra (dim = d^2). A minimal
    polynomial of smaller degree means alpha does not generate a maximal
    subfield, which is reported as degenerate.
    """
    d = degree or math.isqrt(spec.dim)
    poly = minimal_polynomial(alpha, spec)
    if any(c.denominator != 1 for c in poly):
        raise ValueError("alpha is not integral; apply clear_denominator_lift first")
    ints = [int(c) for c in poly]
    log_norm = 0.5 * math.log(float(spec.norm_squared(alpha))) if not alpha.is_zero() else float("-inf")
    x = sympy.Symbol("x")
    expr = sum(c * x ** (len(ints) - 1 - i) for i, c in enumerate(ints))
    deg = len(ints) - 1
    disc = int(sympy.discriminant(expr, x)) if deg >= 2 else 0
    degenerate = deg < d or disc == 0
    primes = [] if degenerate else sorted(int(q) for q in sympy.factorint(abs(disc)))
    return BadPrimeReport(primes, ints, disc, degenerate, log_norm)


# -- instance generators for sweeps ---------------------------------------------------


@dataclass
class NearSubalgebraInstance:
    points: list[AlgebraElement]
    s_basis: list[AlgebraElement]
    eps: Fraction
    R: Fraction
    M: int
    kind: str


def _rand_fraction(rng, M: int, bound: int = 3) -> Fraction:
    den = rng.randint(1, M)
    return Fraction(rng.randint(-bound * den, bound * den), den)


def _ceil_norm(spec: AlgebraSpec, xs: Sequence[AlgebraElement]) -> Fraction:
    top = max(spec.norm_squared(x) for x in xs)
    return Fraction(math.isqrt(math.ceil(top)) + 1)


def _small_gl2(rng) -> RationalMatrix:
    while True:
        m = RationalMatrix([[rng.randint(-2, 2) for _ in range(2)] for _ in range(2)])
        if m.det() != 0:
            return m


def perturbed_diagonal_instance(rng, spec: AlgebraSpec, M: int = 3, constants=None) -> NearSubalgebraInstance:
    """Points in h (diagonal) h^-1 near the real subalgebra h g (diagonal) g^-1 h^-1.

    g = [[1, eta], [0, 1]] with eta rational and tiny, chosen so that the
    condition eps R^c M^c < c' holds; the points are near S but not in it.
    """
    constants = constants or default_condition_constants()
    h = _small_gl2(rng)
    hinv = h.inverse()
    diags = [RationalMatrix.diagonal([_rand_fraction(rng, M), _rand_fraction(rng, M)])
             for _ in range(rng.randint(1, 3))]
    points = [from_matrix(h @ x @ hinv) for x in diags]
    R = _ceil_norm(spec, points)
    m_eff = max(lattice_denominator(x, spec) for x in points)
    spread = max(abs(x[0, 0] - x[1, 1]) for x in diags) + 1
    hn = sum(x * x for r in h.rows for x in r) * sum(x * x for r in hinv.rows for x in r)
    c, cprime = constants
    eta = Fraction(1, 4 * math.ceil(spread * (hn + 1) / cprime) * int(R) ** c * m_eff ** c)
    g = RationalMatrix([[1, eta], [0, 1]])
    ginv = g.inverse()
    s_basis = [from_matrix(h @ g @ RationalMatrix.diagonal(e) @ ginv @ hinv) for e in ([1, 0], [0, 1])]
    eps = _fraction_ceiling_sqrt(max(distance_squared_to_span(x, s_basis, spec) for x in points))
    return NearSubalgebraInstance(points, s_basis, eps, R, m_eff, "perturbed-diagonal")


def generic_instance(rng, spec: AlgebraSpec, M: int = 3) -> NearSubalgebraInstance:
    """Random rational points with S = diagonal algebra and eps as large as needed."""
    n = math.isqrt(spec.dim)
    points = [from_matrix([[_rand_fraction(rng, M) for _ in range(n)] for _ in range(n)])
              for _ in range(rng.randint(2, 3))]
    s_basis = [from_matrix(RationalMatrix.diagonal([int(i == k) for i in range(n)])) for k in range(n)]
    eps = _fraction_ceiling_sqrt(max(distance_squared_to_span(x, s_basis, spec) for x in points))
    R = _ceil_norm(spec, points)
    m_eff = max(lattice_denominator(x, spec) for x in points)
    return NearSubalgebraInstance(points, s_basis, eps, R, m_eff, "generic")


def run_instance(inst: NearSubalgebraInstance, spec: AlgebraSpec, constants=None) -> SubalgebraReport:
    return near_subalgebra_test(inst.points, inst.s_basis, inst.eps, inst.R, inst.M, spec,
                                constants or default_condition_constants())


def bad_prime_sweep(n: int, trials: int, bound: int, rng) -> dict:
    """Empirical constant C in #bad primes <= C (1 + log ||alpha||) over random integral alpha."""
    spec = matrix_algebra(n)
    worst = 0.0
    rows = 0
    degenerate = 0
    for _ in range(trials):
        alpha = from_matrix([[rng.randint(-bound, bound) for _ in range(n)] for _ in range(n)])
        if alpha.is_zero():
            continue
        rep = bad_primes(alpha, spec)
        if rep.degenerate:
            degenerate += 1
            continue
        rows += 1
        worst = max(worst, len(rep.primes) / (1 + max(rep.log_norm, 0.0)))
    return {"n": n, "trials": trials, "bound": bound, "nondegenerate": rows,
            "degenerate": degenerate, "max_ratio": worst}
