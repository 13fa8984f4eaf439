from __future__ import annotations

import cmath
import math

import numpy as np
import pytest

from heckelab.amplifier import (
    AmplifierError,
    build_amplifier,
    build_amplifiers,
    build_k1,
    coset_lambda,
    exponent_ceilings,
    flatten,
    m_value,
    orbit_sum,
    power_sum_floor,
    power_sums,
    random_tempered,
    select_coset,
    support_radius,
    tables,
    tempered_sweep,
    weyl_order,
)
from heckelab.hecke_cosets import DoubleCosetKey, coset_count
from heckelab.root_data import amplifier_base_point
from heckelab.satake import (
    HeckeFunction,
    SatakeParameter,
    amplification_ratio,
    check_support,
    evaluate,
    paley_wiener_radius,
    satake_transform,
)


@pytest.fixture(scope="module")
def nus2():
    return random_tempered(2, 6, np.random.default_rng(11))


def test_identity_term_is_w_squared():
    nu = SatakeParameter.from_angles([0.37])
    assert orbit_sum(nu, (0, 0)) == 2
    assert abs(orbit_sum(nu, (0, 0))) ** 2 == weyl_order(2) ** 2


@pytest.mark.parametrize("p", [5, 7])
def test_k1_transform_at_nu0_is_m(p, nus2):
    for nu in nus2[:3]:
        k1 = build_k1(nu, 2, p)
        assert evaluate(satake_transform(k1), nu) == pytest.approx(m_value(nu), rel=1e-10)
        assert check_support(k1, support_radius(2))
        assert paley_wiener_radius(satake_transform(k1)) <= support_radius(2) + 1e-12


def test_tempered_z1_real_orbit_sums():
    nu = SatakeParameter((1, 1))
    for j in range(-2, 3):
        key = amplifier_base_point(2) * j
        s = orbit_sum(nu, key.dominant().coords)
        assert s.imag == 0 and s.real > 0
    assert m_value(nu) >= 2 ** 2


def test_flatten():
    assert flatten(HeckeFunction.unit(5, 2)).coeffs == {}
    nu = SatakeParameter.from_angles([1.1])
    k1 = build_k1(nu, 2, 5)
    k = flatten(k1)
    assert k((0, 0)) == 0
    lhs = evaluate(satake_transform(k), nu)
    assert lhs == pytest.approx(m_value(nu) - k1((0, 0)), rel=1e-10)


@pytest.mark.parametrize("d, p", [(2, 5), (2, 29), (2, 101), (3, 7), (3, 31)])
def test_k1_identity_close_to_w_squared(d, p):
    for nu in random_tempered(d, 5, np.random.default_rng(p)):
        r = build_amplifier(d, p, nu)
        assert abs(r.k1_identity - weyl_order(d) ** 2) <= math.sqrt(r.M_value / p)


@pytest.mark.parametrize("d, p", [(2, 5), (2, 13), (3, 5)])
def test_pipeline_exact_vs_vectorised(d, p):
    """Exact rational pipeline and the vectorised tables agree on M - k_1(1)."""
    for nu in random_tempered(d, 2, np.random.default_rng(3)):
        exact = evaluate(satake_transform(flatten(build_k1(nu, d, p))), nu)
        r = build_amplifier(d, p, nu)
        assert abs(exact - (r.M_value - r.k1_identity)) <= 1e-10 * max(1.0, r.M_value)
        assert r.pipeline_error < 1e-10


def test_select_coset_single():
    k = HeckeFunction.basis(7, 2, (3, 0))
    a, ratio = select_coset(k, SatakeParameter.from_angles([0.2]))
    assert a == (3, 0)
    assert ratio == pytest.approx(amplification_ratio(7, (3, 0), SatakeParameter.from_angles([0.2])))
    with pytest.raises(AmplifierError):
        select_coset(HeckeFunction(7, 2, {}), SatakeParameter((1, 1)))


def test_selection_matches_exact_selection():
    nu = SatakeParameter((1, 1))
    k = flatten(build_k1(nu, 2, 101))
    a, _ = select_coset(k, nu)
    r = build_amplifier(2, 101, nu)
    assert tuple(r.chosen_a) == a


@pytest.mark.parametrize("d, p", [(2, 101), (2, 5), (3, 11)])
def test_pigeonhole_certificate(d, p):
    for r in build_amplifiers(d, p, random_tempered(d, 10, np.random.default_rng(5))):
        assert r.ratio ** 2 >= r.certificate * (1 - 1e-9)
        assert r.candidates <= (2 * support_radius(d) + 1) ** (d - 1) * 2 ** (d - 1)
        assert not any("Cauchy" in f for f in r.flags)


@pytest.mark.parametrize("d", [2, 3])
def test_candidate_count_constant_in_p(d):
    sizes = {len(tables(d, p).lams) for p in (5, 7, 11)}
    assert len(sizes) == 1
    assert sizes.pop() <= (2 * support_radius(d) + 1) ** (d - 1)


def test_trivial_parameter_eigenvalue():
    nu = SatakeParameter.trivial(5, 2)
    assert coset_lambda(5, (1, 0), nu) == pytest.approx(6)
    assert 6 >= math.sqrt(coset_count(DoubleCosetKey(5, 2, (1, 0))))


@pytest.mark.parametrize("d, p", [(2, 5), (2, 47), (3, 5), (3, 13)])
def test_amplifier_properties(d, p):
    for r in build_amplifiers(d, p, random_tempered(d, 8, np.random.default_rng(d * p))):
        props = r.properties()
        assert all(props.values()), props
        assert r.support_size == coset_count(DoubleCosetKey(p, d, r.chosen_a)) >= p
        assert abs(abs(r.phase) - 1) < 1e-12
        assert abs(evaluate(satake_transform(HeckeFunction.basis(p, d, r.chosen_a)), SatakeParameter(r.nu0))
                   - r.lam * r.phase.conjugate()) < 1e-8 * max(1.0, r.lam)
        signed = r.phase * evaluate(satake_transform(HeckeFunction.basis(p, d, r.chosen_a)), SatakeParameter(r.nu0))
        assert signed.real > 0 and abs(signed.imag) < 1e-8 * r.lam
        assert r.ratio >= 0.05 and r.trusted


def test_untrusted_below_p0():
    r = build_amplifier(2, 3, SatakeParameter.from_angles([0.5]))
    assert not r.trusted and any("untrusted" in f for f in r.flags)


def test_non_prime_rejected():
    with pytest.raises(AmplifierError):
        build_amplifier(2, 9, SatakeParameter((1, 1)))


def test_exponent_ceilings():
    assert exponent_ceilings(2) == (16, 17)
    assert exponent_ceilings(3) == (48, 97)


def test_small_sweep_structure():
    res = tempered_sweep(2, [5, 7], 10, seed=4)
    assert res["failures"] == []
    assert [row["p"] for row in res["rows"]] == [5, 7]
    assert all(row["max_ell"] <= res["ell_ceiling"] for row in res["rows"])


def test_power_sum_floor():
    assert power_sum_floor(1) == 1.0
    assert power_sum_floor(2, trials=40) > 0.1
    assert power_sum_floor(3, trials=40) > 0.1


@pytest.mark.parametrize("m", [2, 3, 5])
def test_roots_of_unity_power_sums(m):
    roots = [cmath.exp(2j * math.pi * k / m) for k in range(m)]
    sums = power_sums(roots, m)
    assert all(abs(s) < 1e-9 for s in sums[:-1])
    assert abs(sums[-1]) == pytest.approx(m)


def test_json_roundtrip_fields():
    r = build_amplifier(2, 5, SatakeParameter((1, 1)))
    doc = r.to_json()
    assert doc["support_size"] == str(r.support_size)
    assert set(doc["properties"]) == {"support_bounds", "values_in_0_1", "lambda_positive", "denominator_bound"}
