from __future__ import annotations

import json
from fractions import Fraction

import numpy as np
import pytest

from heckelab.mass_lab import (
    BallFamily,
    Correspondence,
    FiniteModel,
    ModelError,
    average_intersection_profile,
    circulant_correspondences,
    cov2_check,
    cov2_trials,
    cyclic_model,
    dense_eigen_correspondences,
    hypercube_correspondence,
    hypercube_model,
    intersecting_pairs,
    left_multiplication,
    mass_bound_check,
    mass_trials,
    maximal_separated_cover,
    path_model,
    planted_profile,
    psl2_model,
    random_point_model,
    thread_cap,
    torus_eigenfunction,
    torus_model,
    tube_decay_experiment,
)


def test_model_validation():
    with pytest.raises(ModelError):
        FiniteModel(np.array([[0, 1], [2, 0]]))
    with pytest.raises(ModelError):
        FiniteModel(np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]]))
    with pytest.raises(ModelError):
        FiniteModel(path_model(3).dist, measure=[Fraction(1, 2), Fraction(1, 3), 0])
    with pytest.raises(ModelError):
        FiniteModel(path_model(3).dist, translates=[(1, 0, 2)])
    assert FiniteModel(path_model(3).dist, translates=[(2, 1, 0)]).n == 3


@pytest.mark.parametrize("model", [path_model(6), cyclic_model(8), hypercube_model(3), torus_model(4)])
def test_concrete_models_are_metric(model):
    assert model.is_metric()
    assert all(model.is_isometry(t) for t in model.translates)
    assert sum(model.measure) == 1


def test_psl2_left_multiplication_is_isometry():
    model, elems, index = psl2_model(5)
    assert model.n == 60 and model.is_metric()
    for s in elems[:5]:
        assert model.is_isometry(left_multiplication(elems, index, s, 5))


def test_json_roundtrip(tmp_path):
    model = cyclic_model(6).with_measure([Fraction(1, 3), 0, Fraction(1, 6), Fraction(1, 6), 0, Fraction(1, 3)])
    path = tmp_path / "m.json"
    path.write_text(json.dumps(model.to_json()))
    loaded = FiniteModel.load(str(path))
    assert np.array_equal(loaded.dist, model.dist)
    assert loaded.measure == model.measure
    assert loaded.translates == model.translates


def test_ball_family_nested():
    fam = BallFamily(torus_model(20), 1)
    assert fam.nested()
    # L1 diamonds: |B(6)| = 85, |B(1)| = 5
    assert fam.mult30 == Fraction(85, 5)
    with pytest.raises(ModelError):
        BallFamily(path_model(3), -1)


def test_single_point_cover():
    model = FiniteModel(np.zeros((1, 1), dtype=np.int64))
    rep = maximal_separated_cover(model, BallFamily(model, 1))
    assert rep.centers == [0] and rep.holds


def test_path_cover():
    model = path_model(10)
    rep = maximal_separated_cover(model, BallFamily(model, 1))
    # B_0 = radius-1 balls, so greedy centers sit three apart
    assert rep.centers == [0, 3, 6, 9]
    assert rep.covers and rep.max_multiplicity <= rep.mult30 and rep.holds


def brute_cover_check(model, fam, centers):
    n = model.n
    for z in range(n):
        if not any(fam.B[c, z] for c in centers):
            return False
    for i, a in enumerate(centers):
        for b in centers[i + 1:]:
            if any(fam.B0[a, w] and fam.B0[b, w] for w in range(n)):
                return False
    return True


@pytest.mark.parametrize("seed", range(3))
def test_random_200_point_cover(seed):
    rng = np.random.default_rng(seed)
    model = random_point_model(200, 2, 30, rng)
    for r0 in (1, 2, 4):
        fam = BallFamily(model, r0)
        order = [int(v) for v in rng.permutation(model.n)]
        rep = maximal_separated_cover(model, fam, order)
        assert rep.holds
        assert brute_cover_check(model, fam, rep.centers)
        # maximality: every point's B_0 ball meets some chosen center's B_0 ball
        used = fam.B0[rep.centers].any(axis=0)
        assert all((fam.B0[x] & used).any() for x in range(model.n))


def test_cov2_point_mass():
    model = cyclic_model(10)
    fam = BallFamily(model, 1)
    nu = [Fraction(0)] * 10
    nu[3] = Fraction(1)
    res = cov2_check(model, [3], fam, nu)
    assert res.lhs == pytest.approx(1.0)
    assert res.rhs >= 1 and res.holds


def test_cov2_all_equal_translates():
    model = cyclic_model(12)
    fam = BallFamily(model, 1)
    r = 7
    res = cov2_check(model, [5] * r, fam)
    assert res.pairs == r * r
    ball_mass = Fraction(int(fam.B[5].sum()), 12)
    assert res.lhs == pytest.approx(r * float(ball_mass) ** 0.5)
    assert res.rhs == pytest.approx(float(fam.mult30) * r)
    assert res.holds


def test_cov2_random_200_point():
    rng = np.random.default_rng(7)
    model = random_point_model(200, 2, 25, rng)
    summary = cov2_trials([model], 300, rng)
    assert summary.trials == 300 and summary.violations == 0


def test_intersecting_pairs_brute():
    model = cyclic_model(15)
    fam = BallFamily(model, 1)
    ys = [0, 1, 7, 7, 12]
    expected = sum(1 for a in ys for b in ys if (fam.B2[a] & fam.B2[b]).any())
    assert intersecting_pairs(fam, ys) == expected


def test_mass_bound_constant_eigenfunction():
    n = 20
    model = cyclic_model(n)
    fam = BallFamily(model, 1)
    perms = [tuple((x + 1) % n for x in range(n)), tuple((x - 1) % n for x in range(n))]
    corr = Correspondence(perms, [1, 1], [1] * n, 2)
    res = mass_bound_check(model, corr, 4, fam)
    assert res.mass_exact == Fraction(5, n)
    assert res.eigenvalue_abs == 2 and res.holds


def test_mass_bound_zero_eigenvalue_reported():
    n = 4
    model = cyclic_model(n)
    perms = [tuple((x + 1) % n for x in range(n)), tuple((x - 1) % n for x in range(n))]
    corr = Correspondence(perms, [1, 1], [1, 0, -1, 0], 0)
    res = mass_bound_check(model, corr, 0, BallFamily(model, 0))
    assert res.holds is None and res.bound is None and "undefined" in res.note


def test_mass_bound_rejects_uncertified():
    n = 6
    model = cyclic_model(n)
    perms = [tuple((x + 1) % n for x in range(n))]
    with pytest.raises(ModelError):
        mass_bound_check(model, Correspondence(perms, [1], [1, 2, 3, 4, 5, 6], 1), 0, BallFamily(model, 1))
    with pytest.raises(ModelError):
        mass_bound_check(model, Correspondence(perms, [2], [1] * n, 2), 0, BallFamily(model, 1))


def test_mass_bound_psl2_eigenpairs():
    q = 5
    model, elems, index = psl2_model(q)
    gens = [(1, 1, 0, 1), (1, q - 1, 0, 1), (0, q - 1, 1, 0)]
    perms = [left_multiplication(elems, index, g, q) for g in gens]
    corrs = dense_eigen_correspondences(perms, [1.0] * len(perms), model.n)
    assert len(corrs) == model.n
    for r0 in (0, 1):
        fam = BallFamily(model, r0)
        for corr in corrs:
            for x in (0, 17, 42):
                res = mass_bound_check(model, corr, x, fam)
                assert res.holds is not False


def test_mass_bound_circulant_pair():
    n = 48
    model = cyclic_model(n)
    corrs = circulant_correspondences(n, [1, 5])
    # cos and sin per frequency, minus the vanishing sines at j = 0 and j = n/2
    assert len(corrs) == 2 * n - 2
    for r0 in (0, 1, 2):
        fam = BallFamily(model, r0)
        for corr in corrs:
            assert corr.certified()
            res = mass_bound_check(model, corr, 3, fam)
            assert res.holds is not False


@pytest.mark.parametrize("seed", range(10))
def test_hypercube_eigen_identity_exact(seed):
    rng = np.random.default_rng(seed)
    corr = hypercube_correspondence(5, [1, 6, 19], [Fraction(1, 2), Fraction(-3, 4), Fraction(1)], rng)
    assert corr.residual() == 0.0
    assert corr.apply(corr.psi) == [corr.eigenvalue * v for v in corr.psi]


def test_profile_examples():
    model = cyclic_model(40)
    fam = BallFamily(model, 1)
    shifts = [0, 10, 20, 30]
    perms = [tuple((x + s) % 40 for x in range(40)) for s in shifts]
    assert average_intersection_profile(model, 0, fam, perms)["pairs_total"] == 4
    same = [perms[0]] * 5
    prof = average_intersection_profile(model, 0, fam, same)
    assert prof["pairs_total"] == 25 and prof["worst_case"] == 5


def test_planted_profile_fit():
    res = planted_profile(24, [2, 4, 6], [0, 4], 1, np.random.default_rng(3))
    assert np.isfinite(res["A"]) and np.isfinite(res["B"])
    for row in res["rows"]:
        assert row["pairs_total"] <= row["S"] ** 2


def test_decay_uniform_slope_is_dimension():
    n = 64
    model = torus_model(n)
    radii = [2, 4, 8, 16]
    res = tube_decay_experiment(model, np.ones(n * n), 0, radii)
    assert not res["degenerate"]
    # L1 balls on the torus hold 2r^2 + 2r + 1 points while r < n/2
    sizes = [2 * r * r + 2 * r + 1 for r in radii]
    expected = np.polyfit(np.log(radii), np.log(sizes), 1)[0]
    assert res["slope"] == pytest.approx(expected, abs=1e-9)
    assert 1.7 < res["slope"] < 2.0


def test_decay_eigenfunction_positive():
    n = 64
    model = torus_model(n)
    psi = torus_eigenfunction(n, [(1, 2), (2, 1)], [1.0, 0.5])
    res = tube_decay_experiment(model, psi, 5, [2, 4, 8, 16])
    assert res["positive"]


def test_decay_point_mass_control():
    n = 32
    model = torus_model(n)
    psi = np.zeros(n * n)
    psi[0] = 1
    res = tube_decay_experiment(model, psi, 0, [1, 2, 4, 8])
    assert res["slope"] == pytest.approx(0.0, abs=1e-12)
    assert not res["positive"]


def test_decay_degenerate_flag():
    model = path_model(5)
    res = tube_decay_experiment(model, np.ones(5), 0, [0, 1])
    assert res["degenerate"] and res["slope"] is None


def test_trials_small():
    rng = np.random.default_rng(11)
    assert cov2_trials([cyclic_model(30), hypercube_model(5)], 200, rng).violations == 0
    assert mass_trials(200, rng).violations == 0


@pytest.mark.parametrize("value, expected", [("4", 4), ("0", 1), ("x", 1)])
def test_thread_cap(monkeypatch, value, expected):
    monkeypatch.setenv("MASS_LAB_THREADS", value)
    assert thread_cap() == expected
