from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heckelab.plancherel import (
    adaptive_torus_quadrature,
    isometry_residual,
    limit_density,
    mu_infty_fourier_support,
    mu_infty_gap,
    mu_infty_support_radius,
    normalization,
    normalization_closed_form,
    plancherel_density,
    plancherel_inner,
    torus_grid,
)
from heckelab.root_data import dominant_ball
from heckelab.satake import HeckeFunction, SatakeParameter


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("p", [2, 5, 11])
def test_normalisation_matches_closed_form(d, p):
    assert normalization(d, p).value.real == pytest.approx(normalization_closed_form(d, p), rel=1e-10)


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("p", [5, 7])
def test_total_mass_one(d, p):
    res = adaptive_torus_quadrature(lambda z: plancherel_density(z, p), d)
    assert abs(res.value.real - 1) < 1e-8


@pytest.mark.parametrize("p", [3, 5, 13])
def test_t_p_norm(p):
    tp = HeckeFunction.basis(p, 2, (1, 0))
    assert plancherel_inner(tp, tp).value.real == pytest.approx(p + 1, rel=1e-9)


@pytest.mark.parametrize("d, p", [(2, 5), (3, 3)])
def test_basis_orthogonality(d, p):
    ball = list(dominant_ball(d, 1.5))
    for i, a in enumerate(ball):
        for b in ball[i:]:
            val = plancherel_inner(HeckeFunction.basis(p, d, a), HeckeFunction.basis(p, d, b)).value
            if a == b:
                assert val.real == pytest.approx(HeckeFunction.basis(p, d, a).l2_norm_squared(), rel=1e-9)
            else:
                assert abs(val) < 1e-8 * math.sqrt(p ** 6)


def test_unit_norm():
    assert plancherel_inner(HeckeFunction.unit(7, 3), HeckeFunction.unit(7, 3)).value.real == pytest.approx(1)


@pytest.mark.parametrize("d, p", [(2, 5), (3, 7)])
def test_isometry_mixed(d, p):
    k = HeckeFunction(p, d, {a: Fraction(i + 1, 3) for i, a in enumerate(dominant_ball(d, 1))})
    assert isometry_residual(k)["relative_residual"] < 1e-8


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi), st.sampled_from([3, 5, 7]))
def test_density_weyl_invariant(t1, t2, p):
    z = np.array([np.exp(1j * t1), np.exp(1j * t2), np.exp(-1j * (t1 + t2))])
    perms = [z[[1, 0, 2]], z[[2, 1, 0]], z[[1, 2, 0]]]
    base = plancherel_density(z[None, :], p)[0]
    assert base >= -1e-12
    for w in perms:
        assert plancherel_density(w[None, :], p)[0] == pytest.approx(base, abs=1e-10)


def test_density_rejects_non_tempered():
    with pytest.raises(ValueError):
        plancherel_density(SatakeParameter((2, 0.5)), 5)


def test_grid_on_torus():
    z = torus_grid(3, 8)
    assert z.shape == (64, 3)
    assert np.allclose(np.prod(z, axis=1), 1)
    assert np.allclose(np.abs(z), 1)


@pytest.mark.parametrize("d, radius", [(2, 1), (3, 2)])
def test_limit_fourier_support(d, radius):
    # Weyl denominator squared: exact Laurent support radius
    assert mu_infty_support_radius(d) == pytest.approx(radius)
    assert mu_infty_fourier_support(d)[(0,) * d] == math.factorial(d)


def test_limit_density_mass():
    res = adaptive_torus_quadrature(limit_density, 2)
    assert res.value.real == pytest.approx(1)


def test_gap_table_trend():
    rows = mu_infty_gap([11, 23, 47, 101])
    gaps = [r["gap"] for r in rows]
    assert gaps == sorted(gaps, reverse=True)
    assert max(r["scaled_gap"] for r in rows) < 2.5
    assert rows[0]["consecutive"] is None and rows[1]["consecutive"] > 0
