from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heckelab.exact_arith import (
    RationalMatrix,
    SingularMatrixError,
    denom_matrix,
    denom_rational,
    hermite_normal_form,
    integer_det,
    random_unimodular,
    rank_over_Q,
)


@pytest.mark.parametrize("x, expected", [(Fraction(3, 4), 4), (7, 1), (0, 1), (Fraction(-5, 6), 6)])
def test_denom_rational(x, expected):
    assert denom_rational(x) == expected


@pytest.mark.parametrize("rows, expected", [
    ([[1, 0], [0, 1]], 1),
    ([[Fraction(1, 2), 0], [0, 2]], 2),
    ([[Fraction(1, 6), Fraction(1, 4)], [0, 1]], 12),
])
def test_denom_matrix(rows, expected):
    assert denom_matrix(RationalMatrix(rows)) == expected


def _matmul(a, b):
    return [[sum(x * y for x, y in zip(r, c)) for c in zip(*b)] for r in a]


@pytest.mark.parametrize("m", [[[1, 0], [0, 1]], [[2, 0], [0, 1]]])
def test_hnf_already_reduced(m):
    h, u = hermite_normal_form(m)
    assert h == m
    assert u == [[1, 0], [0, 1]]


def _hnf_shape_ok(h):
    n = len(h)
    for i in range(n):
        assert h[i][i] > 0
        for j in range(i):
            assert h[i][j] == 0
        for k in range(i):
            assert 0 <= h[k][i] < h[i][i]


@pytest.mark.parametrize("seed", range(10))
def test_hnf_random_det5(seed):
    rng = random.Random(seed)
    g = random_unimodular(3, rng)
    m = _matmul([[int(x) for x in r] for r in g.rows], [[5, 0, 0], [0, 1, 0], [0, 0, 1]])
    h, u = hermite_normal_form(m)
    assert _matmul(u, h) == m
    assert abs(integer_det(u)) == 1
    _hnf_shape_ok(h)
    assert h[0][0] * h[1][1] * h[2][2] == 5
    assert hermite_normal_form(h)[0] == h


def test_hnf_singular_raises():
    with pytest.raises(SingularMatrixError):
        hermite_normal_form([[1, 2], [2, 4]])


@pytest.mark.parametrize("vectors, expected", [
    ([(1, 0), (0, 1)], 2),
    ([(1, 2), (2, 4)], 1),
    ([], 0),
])
def test_rank_examples(vectors, expected):
    assert rank_over_Q(vectors) == expected


@pytest.mark.parametrize("seed", range(5))
def test_rank_planted_dependency(seed):
    rng = random.Random(seed)
    base = [[Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(3)] for _ in range(3)]
    while rank_over_Q(base) < 3:
        base = [[Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(3)] for _ in range(3)]
    extra = [[sum(Fraction(rng.randint(-3, 3)) * b[k] for b in base) for k in range(3)] for _ in range(2)]
    assert rank_over_Q(base + extra) == 3


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 4))
def test_denominator_submultiplicative(seed, n):
    rng = random.Random(seed)
    scale_a, scale_b = Fraction(1, rng.randint(1, 6)), Fraction(1, rng.randint(1, 6))
    g = random_unimodular(n, rng).scale(scale_a)
    h = random_unimodular(n, rng).scale(scale_b)
    assert denom_matrix(g @ h) <= denom_matrix(g) * denom_matrix(h)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 4))
def test_denominator_of_inverse(seed, n):
    rng = random.Random(seed)
    r = Fraction(rng.randint(1, 9), rng.randint(1, 9))
    s = Fraction(rng.randint(1, 9), rng.randint(1, 9))
    diag = [r, 1 / r] + [1] * (n - 2)
    if n >= 3:
        diag = [r, s, 1 / (r * s)] + [1] * (n - 3)
    g = random_unimodular(n, rng) @ RationalMatrix.diagonal(diag) @ random_unimodular(n, rng)
    assert g.det() == 1
    inv = g.inverse()
    assert g @ inv == RationalMatrix.identity(n)
    assert denom_matrix(inv) <= denom_matrix(g) ** (n - 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_denominator_bi_invariant(seed):
    rng = random.Random(seed)
    g = random_unimodular(3, rng).scale(Fraction(1, rng.randint(1, 9)))
    u, v = random_unimodular(3, rng), random_unimodular(3, rng)
    assert denom_matrix(u @ g @ v) == denom_matrix(g)


@pytest.mark.parametrize("seed", range(5))
def test_random_unimodular_det_one(seed):
    g = random_unimodular(4, random.Random(seed))
    assert g.is_integral() and g.det() == 1


def test_matrix_json_roundtrip():
    g = RationalMatrix([[Fraction(1, 3), 2], [0, Fraction(-7, 5)]])
    assert g.to_json() == [["1/3", "2/1"], ["0/1", "-7/5"]]
    assert RationalMatrix.from_json(g.to_json()) == g
