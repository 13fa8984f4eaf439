"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` (the lines appear in the
terminal output) or directly with ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import itertools
import math
import random
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from heckelab import diophantine as dp
from heckelab import mass_lab as ml
from heckelab.amplifier import tempered_sweep
from heckelab.hecke_cosets import DoubleCosetKey, coset_count, enumerate_cosets, volume_ratio
from heckelab.plancherel import isometry_residual, mu_infty_gap, normalization, normalization_closed_form
from heckelab.root_data import dominant_ball, two_rho_pairing
from heckelab.satake import HeckeFunction, convolve, satake_transform

SMALL_PRIMES = (2, 3, 5, 7, 11, 13)
SWEEP_PRIMES = tuple(p for p in range(5, 102) if all(p % q for q in range(2, int(p ** 0.5) + 1)))


@pytest.fixture
def report(capsys):
    """Print one PASS/FAIL line past pytest's capture, then assert."""

    def emit(number: int, ok: bool, detail: str, elapsed: float, budget: float) -> None:
        ok = ok and elapsed < budget
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail} [{elapsed:.1f}s / budget {budget:.0f}s]"
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return emit


def dominant_up_to_two_rho(d: int, bound: int):
    for head in itertools.product(range(bound + 1), repeat=d - 1):
        a = tuple(head) + (0,)
        if all(a[i] >= a[i + 1] for i in range(d - 1)) and two_rho_pairing(a) <= bound:
            yield a


def test_criterion_1_coset_combinatorics(report):
    start = time.perf_counter()
    bad = []
    checked = 0
    for d in (2, 3):
        for p in SMALL_PRIMES:
            minuscule = (1,) + (0,) * (d - 1)
            key = DoubleCosetKey(p, d, minuscule)
            target = (p ** d - 1) // (p - 1)
            if coset_count(key) != target or len(enumerate_cosets(key)) != target:
                bad.append(("count", d, p))
            for a in dominant_up_to_two_rho(d, 6):
                checked += 1
                r = volume_ratio(DoubleCosetKey(p, d, a))
                if not 1 <= r <= 4:
                    bad.append(("ratio", d, p, a, r))
    report(1, not bad, f"minuscule counts and {checked} volume ratios in [1, 4], {len(bad)} violations",
           time.perf_counter() - start, 60)


def test_criterion_2_satake_correctness(report):
    start = time.perf_counter()
    bad = []
    for p in SMALL_PRIMES:
        tp = HeckeFunction.basis(p, 2, (1, 0))
        expected = HeckeFunction(p, 2, {(2, 0): Fraction(1), (1, 1): Fraction(p + 1)})
        if convolve(tp, tp) != expected:
            bad.append(("hecke", p))
    rng = random.Random(2024)
    for _ in range(50):
        d = rng.choice([2, 3])
        p = rng.choice([2, 3, 5])
        ball = list(dominant_ball(d, 2))
        k1 = HeckeFunction(p, d, {rng.choice(ball): Fraction(rng.randint(1, 5)) for _ in range(2)})
        k2 = HeckeFunction(p, d, {rng.choice(ball): Fraction(rng.randint(1, 5)) for _ in range(2)})
        if satake_transform(convolve(k1, k2)) != satake_transform(k1) * satake_transform(k2):
            bad.append(("pair", d, p, dict(k1.coeffs), dict(k2.coeffs)))
    report(2, not bad, f"T_p^2 relation for p <= 13 and 50 random pairs, {len(bad)} mismatches",
           time.perf_counter() - start, 120)


def test_criterion_3_plancherel_identity(report):
    start = time.perf_counter()
    worst = 0.0
    worst_mass = 0.0
    count = 0
    for d in (2, 3):
        for p in (5, 7, 11):
            for a in dominant_ball(d, 3):
                worst = max(worst, isometry_residual(HeckeFunction.basis(p, d, a))["relative_residual"])
                count += 1
            worst_mass = max(worst_mass, abs(normalization(d, p).value.real / normalization_closed_form(d, p) - 1))
    report(3, worst < 1e-8 and worst_mass < 1e-8,
           f"{count} basis elements, max residual {worst:.2e}, mass error {worst_mass:.2e}",
           time.perf_counter() - start, 300)


@pytest.mark.slow
def test_criterion_4_amplifier(report):
    start = time.perf_counter()
    problems = []
    summary = []
    for d, seed in ((2, 2), (3, 3)):
        res = tempered_sweep(d, SWEEP_PRIMES, 200, seed=seed)
        rows = res["rows"]
        problems += res["failures"]
        if min(r["min_lambda"] for r in rows) <= 0:
            problems.append((d, "lambda"))
        if min(r["min_ratio"] for r in rows) < 0.05:
            problems.append((d, "ratio"))
        if min(r["min_support_over_p"] for r in rows) < 1:
            problems.append((d, "support"))
        ells = {r["max_ell"] for r in rows}
        ell_primes = {math.ceil(r["max_ell_prime"]) for r in rows}
        if len(ells) != 1 or len(ell_primes) != 1:
            problems.append((d, "exponents vary", ells, ell_primes))
        if max(ells) > res["ell_ceiling"] or max(ell_primes) > res["ell_prime_ceiling"]:
            problems.append((d, "exponent ceiling"))
        summary.append(f"d={d}: min ratio {min(r['min_ratio'] for r in rows):.3f}, "
                       f"ell {sorted(ells)}, ceil(ell') {sorted(ell_primes)}")
    report(4, not problems, f"{len(SWEEP_PRIMES)} primes x 200 parameters; " + "; ".join(summary),
           time.perf_counter() - start, 600)


def test_criterion_5_plancherel_comparison(report):
    start = time.perf_counter()
    primes = [p for p in SWEEP_PRIMES if p >= 11]
    rows = mu_infty_gap(primes, d=2)
    scaled = [r["scaled_gap"] for r in rows]
    report(5, max(scaled) <= 2.5, f"max sqrt(p) * gap {max(scaled):.3f} over p in 11..101",
           time.perf_counter() - start, 120)


def test_criterion_6_diophantine(report):
    start = time.perf_counter()
    m = 2
    col = dp.colinear_exhaustive(m, Fraction(1, 20 * m ** 6), dp.unit_segments(m))
    spec = dp.matrix_algebra(2)
    rng = random.Random(6)
    perturbed = [dp.run_instance(dp.perturbed_diagonal_instance(rng, spec), spec) for _ in range(1000)]
    generic = [dp.run_instance(dp.generic_instance(rng, spec), spec) for _ in range(1000)]
    good = sum(r.condition_holds and r.proper for r in perturbed)
    flagged = sum(bool(r.condition_holds) and r.proper for r in generic)
    ok = col["false_negatives"] == 0 and good == 1000 and flagged == 0
    report(6, ok, f"colinear false negatives {col['false_negatives']} of {col['triples']} triples; "
                  f"perturbed proper {good}/1000; generic flagged {flagged}/1000",
           time.perf_counter() - start, 180)


def test_criterion_7_covering_lemmas(report):
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    models = [ml.random_point_model(200, 2, 40, rng), ml.hypercube_model(6), ml.cyclic_model(50), ml.torus_model(12)]
    cov2 = ml.cov2_trials(models, 10_000, rng)
    mass = ml.mass_trials(10_000, rng)
    ok = cov2.violations == 0 and mass.violations == 0
    report(7, ok, f"cov2 {cov2.violations} violations in {cov2.trials}; mass bound {mass.violations} violations "
                  f"in {mass.trials} (others had Lambda = 0)", time.perf_counter() - start, 300)


def test_criterion_8_determinism(report):
    start = time.perf_counter()
    commands = [
        ["cosets", "--d", "3", "--p", "3", "--a", "2,1,0", "--enumerate"],
        ["satake", "--d", "3", "--p", "5", "--a", "1,0,0", "--a", "2,1,0"],
        ["plancherel-check", "--d", "2", "--p", "7", "--rmax", "2"],
        ["amplify", "--d", "3", "--p", "7", "--sweep", "tempered:20"],
        ["dioph", "--demo", "nearsub", "--trials", "30"],
        ["mass-lab", "--check", "cov2", "--trials", "200"],
    ]
    differing = []
    for cmd in commands:
        outs = [subprocess.run([sys.executable, "-m", "heckelab", "--seed", "12345", *cmd],
                               capture_output=True, check=True).stdout for _ in range(2)]
        if outs[0] != outs[1] or not outs[0]:
            differing.append(cmd[0])
    report(8, not differing, f"{len(commands)} commands run twice, {len(differing)} differ",
           time.perf_counter() - start, 300)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
