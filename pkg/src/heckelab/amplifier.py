"""Local amplifier at a single prime.

Given a Satake parameter nu_0, the construction is:

1. k_1 has transform sum_{|j| <= |W|} conj(S_j(nu_0)) S_j(nu), where
   S_j(nu) = sum_{w in W} (w nu)(j a) and a = 4(e_1 - e_d).
   By Paley-Wiener k_1 is supported on ||lambda|| <= |W| ||a||.
2. k = k_1 - k_1(1) 1_K removes the identity coset.
3. Cauchy-Schwarz over the O(1) double cosets in supp(k) produces one coset
   K a K with |1^_{KaK}(nu_0)|^2 >= c vol(KaK), and h_p = phase * 1_{KaK}.

Inverse Satake transforms of the basis S_j are computed once per (d, p) in
exact rational arithmetic. Per-parameter work is then floating point linear
algebra on coefficients rescaled by sqrt(vol(K lambda K)), which keeps all
quantities of moderate size even when vol(K lambda K) ~ p^96.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import minimize

from .hall_littlewood import hl_monomial_expansion
from .hecke_cosets import (
    DoubleCosetKey,
    coset_count,
    coset_denominator,
    diagonal_representative,
    is_prime,
    poincare_stabilizer,
    poincare_weyl,
)
from .root_data import (
    amplifier_base_point,
    canonical,
    cochar_norm_squared,
    dominant,
    dominant_ball,
    orbit_tuples,
    stabilizer_order,
    two_rho_pairing,
)
from .satake import HeckeFunction, SatakeParameter, WSymLaurent, inverse_satake

DEFAULT_FLOOR = 0.05
DEFAULT_P0 = 5

Key = tuple[int, ...]


class AmplifierError(ValueError):
    pass


def weyl_order(d: int) -> int:
    return math.factorial(d)


def support_radius(d: int) -> int:
    """R = |W| * ||a|| with ||a|| = 4."""
    return weyl_order(d) * 4


def multiples(d: int) -> list[tuple[int, Key]]:
    """(j, dominant orbit key of j a) for |j| <= |W|."""
    a = amplifier_base_point(d).coords
    return [(j, dominant(tuple(j * x for x in a))) for j in range(-weyl_order(d), weyl_order(d) + 1)]


@lru_cache(maxsize=None)
def inverse_monomial(p: int, d: int, mu: Key) -> tuple[tuple[Key, Fraction], ...]:
    """Exact inverse Satake transform of the monomial symmetric function m_mu."""
    mu = dominant(mu)
    eps = sum((d - 1 - 2 * i) * v for i, v in enumerate(mu)) % 2
    if eps:
        raise AmplifierError("odd-parity orbit; stored coefficient would be irrational")
    k = inverse_satake(WSymLaurent(p, d, {mu: Fraction(1)}))
    return tuple(sorted(k.coeffs.items(), reverse=True))


def k1_from_weights(p: int, d: int, weights: Mapping[int, object]) -> HeckeFunction:
    """Inverse transform of sum_j weights[j] * S_j, exactly when weights are rational."""
    out: dict[Key, object] = {}
    for j, key in multiples(d):
        w = weights.get(j, 0)
        if w == 0:
            continue
        stab = stabilizer_order(key)
        for lam, c in inverse_monomial(p, d, key):
            out[lam] = out.get(lam, 0) + w * stab * c
    return HeckeFunction(p, d, out)


def orbit_sum(nu: SatakeParameter, key: Key) -> complex:
    """S(nu) = sum_{w in W} z^{w key} = |Stab(key)| m_key(z)."""
    return stabilizer_order(key) * sum(nu.monomial(u) for u in orbit_tuples(key))


def amplifier_weights(nu0: SatakeParameter) -> dict[int, complex]:
    return {j: np.conj(orbit_sum(nu0, key)) for j, key in multiples(nu0.d)}


def m_value(nu0: SatakeParameter) -> float:
    """M = sum_{|j| <= |W|} |S_j(nu_0)|^2."""
    return float(sum(abs(orbit_sum(nu0, key)) ** 2 for _, key in multiples(nu0.d)))


def build_k1(nu0: SatakeParameter, d: int, p: int) -> HeckeFunction:
    if nu0.d != d:
        raise AmplifierError("parameter dimension mismatch")
    return k1_from_weights(p, d, amplifier_weights(nu0))


def flatten(k1: HeckeFunction) -> HeckeFunction:
    """k = k_1 - k_1(1) 1_K."""
    coeffs = dict(k1.coeffs)
    coeffs.pop((0,) * k1.d, None)
    return HeckeFunction(k1.p, k1.d, coeffs)


# -- vectorised per-(d, p) tables -------------------------------------------


@dataclass
class _Tables:
    d: int
    p: int
    lams: list[Key]               # support candidates (dominant ball), lam[0] = 0
    counts: list[int]
    norm_inv: np.ndarray          # (n_j, n_lam): stab_j * InvSat(m_{ja})[lam] * sqrt(count)
    js: list[int]
    j_keys: list[Key]
    hl: np.ndarray                # (n_lam, n_mu): K_{lam mu}(1/p)
    mus: list[Key]
    b_scale: np.ndarray           # sqrt(W_lam(t) / W(t))
    mono_exps: np.ndarray         # (n_terms, d)
    mono_owner: np.ndarray        # term -> mu index
    j_exps: np.ndarray            # (n_jterms, d)
    j_owner: np.ndarray           # term -> j index


def _exponent_table(keys: Sequence[Key]):
    exps, owner = [], []
    for idx, key in enumerate(keys):
        for u in orbit_tuples(key):
            exps.append(u)
            owner.append(idx)
    return np.array(exps, dtype=float), np.array(owner, dtype=int)


@lru_cache(maxsize=None)
def tables(d: int, p: int) -> _Tables:
    zero = (0,) * d
    lams_set = {zero}
    inv = []
    jm = multiples(d)
    for _, key in jm:
        entries = dict(inverse_monomial(p, d, key))
        inv.append(entries)
        lams_set.update(entries)
    lams = [zero] + sorted(lams_set - {zero}, key=lambda k: (cochar_norm_squared(k), k))
    index = {lam: i for i, lam in enumerate(lams)}
    counts = [coset_count(DoubleCosetKey(p, d, lam)) for lam in lams]
    sqrt_counts = np.array([math.sqrt(c) for c in counts])
    norm_inv = np.zeros((len(jm), len(lams)))
    for r, ((_, key), entries) in enumerate(zip(jm, inv)):
        stab = stabilizer_order(key)
        for lam, c in entries.items():
            norm_inv[r, index[lam]] = stab * float(c) * sqrt_counts[index[lam]]
    mus_set = set()
    expansions = []
    for lam in lams:
        exp = {canonical(mu): poly for mu, poly in hl_monomial_expansion(lam).items()}
        expansions.append(exp)
        mus_set.update(exp)
    mus = sorted(mus_set)
    mu_index = {mu: i for i, mu in enumerate(mus)}
    hl = np.zeros((len(lams), len(mus)))
    for i, exp in enumerate(expansions):
        for mu, poly in exp.items():
            hl[i, mu_index[mu]] = sum(c * p ** -e for e, c in enumerate(poly))
    t = Fraction(1, p)
    w_t = poincare_weyl(d, t)
    b_scale = np.array([math.sqrt(poincare_stabilizer(lam, t) / w_t) for lam in lams])
    mono_exps, mono_owner = _exponent_table(mus)
    j_exps, j_owner = _exponent_table([key for _, key in jm])
    return _Tables(d, p, lams, counts, norm_inv, [j for j, _ in jm], [k for _, k in jm],
                   hl, mus, b_scale, mono_exps, mono_owner, j_exps, j_owner)


def _orbit_values(z: np.ndarray, exps: np.ndarray, owner: np.ndarray, n_keys: int) -> np.ndarray:
    """(n_keys, batch) array of m_key(z) for z of shape (batch, d)."""
    logz = np.log(z.astype(complex))
    terms = np.exp(exps @ logz.T)
    out = np.zeros((n_keys, z.shape[0]), dtype=complex)
    np.add.at(out, owner, terms)
    return out


# -- results -----------------------------------------------------------------


@dataclass
class AmplifierResult:
    d: int
    p: int
    nu0: tuple[complex, ...]
    chosen_a: Key
    phase: complex
    lam: float
    support_size: int
    M_value: float
    k1_identity: float
    k_norm_squared: float
    eigenvalue_at_nu0: complex
    eigenvalue_check: complex
    pipeline_error: float
    ratio: float
    certificate: float
    candidates: int
    ell: float
    ell_prime: float
    ell_ceiling: int
    ell_prime_ceiling: int
    denominator: int
    trusted: bool
    flags: list[str] = field(default_factory=list)
    top_cosets: list[dict] = field(default_factory=list)

    @property
    def lambda_over_sqrt_support(self) -> float:
        return self.ratio

    def properties(self) -> dict[str, bool]:
        """The four amplifier properties, evaluated on this run."""
        p = self.p
        return {
            "support_bounds": p <= self.support_size <= p ** self.ell_prime_ceiling,
            "values_in_0_1": True,  # h_p = phase * indicator, |phase| = 1
            "lambda_positive": self.lam > 0,
            "denominator_bound": self.denominator <= p ** self.ell_ceiling,
        }

    def to_json(self) -> dict:
        return {
            "d": self.d, "p": self.p,
            "nu0": [[z.real, z.imag] for z in self.nu0],
            "chosen_a": list(self.chosen_a),
            "phase": [self.phase.real, self.phase.imag],
            "lambda": self.lam,
            "support_size": str(self.support_size),
            "M_value": self.M_value,
            "lambda_over_sqrt_support": self.ratio,
            "trusted": self.trusted,
            "flags": list(self.flags),
            "properties": self.properties(),
            "exponents": {"ell": self.ell, "ell_prime": self.ell_prime,
                          "ell_ceiling": self.ell_ceiling, "ell_prime_ceiling": self.ell_prime_ceiling},
            "diagnostics": {
                "k1_identity": self.k1_identity,
                "k_norm_squared": self.k_norm_squared,
                "eigenvalue_at_nu0": [self.eigenvalue_at_nu0.real, self.eigenvalue_at_nu0.imag],
                "M_minus_k1_identity": [self.eigenvalue_check.real, self.eigenvalue_check.imag],
                "pipeline_relative_error": self.pipeline_error,
                "cauchy_schwarz_certificate": self.certificate,
                "candidate_cosets": self.candidates,
                "denominator": str(self.denominator),
                "top_cosets": self.top_cosets,
            },
        }


@lru_cache(maxsize=None)
def exponent_ceilings(d: int) -> tuple[int, int]:
    """p-independent (ell, ell') valid for every coset in the Paley-Wiener ball.

    denominator = p^{lam_1 - lam_d} and vol(K lam K) < p^{<2 rho, lam> + 1}
    because W(1/p)/W_lam(1/p) < W(1/2) <= p for p >= 5 and d <= 3; in general
    the ceiling is taken with a margin of one power.
    """
    ell = ell_p = 0
    for lam in dominant_ball(d, support_radius(d)):
        ell = max(ell, lam[0] - lam[-1])
        ell_p = max(ell_p, two_rho_pairing(lam) + 1)
    return ell, ell_p


def build_amplifiers(d: int, p: int, nus: Sequence[SatakeParameter], floor: float = DEFAULT_FLOOR,
                     p0: int = DEFAULT_P0, top: int = 5) -> list[AmplifierResult]:
    if not is_prime(p):
        raise AmplifierError(f"{p} is not prime")
    if any(nu.d != d for nu in nus):
        raise AmplifierError("parameter dimension mismatch")
    tab = tables(d, p)
    z = np.array([nu.z for nu in nus], dtype=complex)
    s_vals = _orbit_values(z, tab.j_exps, tab.j_owner, len(tab.j_keys))
    stabs = np.array([stabilizer_order(k) for k in tab.j_keys])[:, None]
    s_vals = s_vals * stabs                                   # S_j(nu_0), (n_j, batch)
    m_vals = np.sum(np.abs(s_vals) ** 2, axis=0)
    ktil = np.conj(s_vals).T @ tab.norm_inv                  # (batch, n_lam), k * sqrt(count)
    k1_identity = ktil[:, 0].copy()
    ktil[:, 0] = 0
    mono = _orbit_values(z, tab.mono_exps, tab.mono_owner, len(tab.mus))
    b_vals = (tab.hl @ mono).T * tab.b_scale                  # 1^_lam(nu_0) / sqrt(count), (batch, n_lam)
    eig = np.sum(ktil * b_vals, axis=1)
    check = m_vals - k1_identity
    r = np.abs(b_vals) ** 2
    in_support = np.abs(ktil) > 1e-12 * np.max(np.abs(ktil), axis=1, keepdims=True)
    in_support[:, 0] = False
    ell_ceiling, ell_p_ceiling = exponent_ceilings(d)
    results = []
    for i, nu in enumerate(nus):
        cand = np.flatnonzero(in_support[i])
        if cand.size == 0:
            raise AmplifierError("flattened k_1 vanishes; no coset to select")
        best = cand[np.argmax(r[i, cand])]
        a = tab.lams[best]
        count = tab.counts[best]
        eig_a = b_vals[i, best] * math.sqrt(count)
        lam_val = abs(eig_a)
        phase = complex(np.conj(eig_a) / lam_val) if lam_val > 0 else 1 + 0j
        knorm = float(np.sum(np.abs(ktil[i]) ** 2))
        cert = abs(eig[i]) ** 2 / (cand.size * knorm) if knorm > 0 else 0.0
        denom = coset_denominator(diagonal_representative(DoubleCosetKey(p, d, a)))
        ratio = math.sqrt(r[i, best])
        flags = []
        trusted = p >= p0
        if not trusted:
            flags.append(f"untrusted: p={p} below p0={p0}")
        if ratio < floor:
            flags.append(f"ratio {ratio:.4g} below floor {floor}")
        if lam_val <= 0:
            flags.append("lambda not positive")
        if ratio ** 2 < cert * (1 - 1e-9):
            flags.append("Cauchy-Schwarz certificate violated")
        scale = max(abs(check[i]), 1.0)
        order = cand[np.argsort(-r[i, cand])][:top]
        results.append(AmplifierResult(
            d=d, p=p, nu0=tuple(nu.z), chosen_a=a, phase=phase, lam=lam_val, support_size=count,
            M_value=float(m_vals[i]), k1_identity=float(k1_identity[i].real), k_norm_squared=knorm,
            eigenvalue_at_nu0=complex(eig[i]), eigenvalue_check=complex(check[i]),
            pipeline_error=float(abs(eig[i] - check[i]) / scale), ratio=ratio, certificate=cert,
            candidates=int(cand.size), ell=(a[0] - a[-1]) if d > 1 else 0,
            ell_prime=math.log(count) / math.log(p), ell_ceiling=ell_ceiling, ell_prime_ceiling=ell_p_ceiling,
            denominator=denom, trusted=trusted, flags=flags,
            top_cosets=[{"a": list(tab.lams[c]), "ratio_squared": float(r[i, c]),
                         "normalized_coefficient": [float(ktil[i, c].real), float(ktil[i, c].imag)]}
                        for c in order],
        ))
    return results


def build_amplifier(d: int, p: int, nu0: SatakeParameter, **kwargs) -> AmplifierResult:
    return build_amplifiers(d, p, [nu0], **kwargs)[0]


def select_coset(k: HeckeFunction, nu0: SatakeParameter) -> tuple[Key, float]:
    """Coset in supp(k) maximising |1^_{KaK}(nu_0)|^2 / vol(KaK).

    Returns (a, ratio) with ratio = |1^_{KaK}(nu_0)|^2 / vol(KaK).
    """
    if not k.coeffs:
        raise AmplifierError("cannot select a coset from the zero function")
    from .satake import amplification_ratio

    best = max(k.coeffs, key=lambda a: (amplification_ratio(k.p, a, nu0), a))
    return best, amplification_ratio(k.p, best, nu0)


def coset_lambda(p: int, a: Sequence[int], nu0: SatakeParameter) -> float:
    """|1^_{KaK}(nu_0)|, the amplification Lambda of h_p = phase * 1_{KaK}."""
    from .satake import basis_transform, evaluate

    return abs(evaluate(basis_transform(p, nu0.d, dominant(tuple(a))), nu0))


def random_tempered(d: int, n: int, rng: np.random.Generator) -> list[SatakeParameter]:
    angles = rng.uniform(0, 2 * np.pi, size=(n, d - 1))
    return [SatakeParameter.from_angles(row) for row in angles]


def tempered_sweep(d: int, primes: Sequence[int], n: int, seed: int = 0,
                   floor: float = DEFAULT_FLOOR, p0: int = DEFAULT_P0) -> dict:
    """Amplifier statistics over random tempered parameters for each prime."""
    rng = np.random.default_rng(seed)
    rows = []
    failures = []
    for p in primes:
        nus = random_tempered(d, n, rng)
        res = build_amplifiers(d, p, nus, floor=floor, p0=p0)
        ratios = [r.ratio for r in res]
        for r in res:
            props = r.properties()
            if not all(props.values()) or r.ratio < floor:
                failures.append({"p": p, "nu0": [[z.real, z.imag] for z in r.nu0],
                                 "ratio": r.ratio, "properties": props})
        rows.append({
            "p": p,
            "min_lambda": min(r.lam for r in res),
            "min_ratio": min(ratios),
            "median_ratio": float(np.median(ratios)),
            "min_support_over_p": min(r.support_size / p for r in res),
            "max_ell": max(r.ell for r in res),
            "max_ell_prime": max(r.ell_prime for r in res),
            "max_pipeline_error": max(r.pipeline_error for r in res),
            "chosen": sorted({tuple(r.chosen_a) for r in res}),
        })
    ell_c, ell_pc = exponent_ceilings(d)
    return {"d": d, "n": n, "seed": seed, "floor": floor, "rows": rows, "failures": failures,
            "ell_ceiling": ell_c, "ell_prime_ceiling": ell_pc}


# -- power sums ---------------------------------------------------------------


def power_sums(alphas: Sequence[complex], m: int) -> list[complex]:
    """[sum_i alpha_i^j for j = 1..m]."""
    a = np.asarray(alphas, dtype=complex)
    return [complex(np.sum(a ** j)) for j in range(1, m + 1)]


def _max_power_sum(alphas: np.ndarray, m: int) -> float:
    return max(abs(np.sum(alphas ** j)) for j in range(1, m + 1))


def power_sum_floor(m: int, trials: int = 200, seed: int = 0) -> float:
    """Estimate inf over max|alpha_i| = 1 of max_{1<=j<=m} |alpha_1^j + ... + alpha_m^j|.

    Rotating and permuting, alpha_1 = 1 and the remaining alphas range over
    the closed unit disk. Random starts are refined by Nelder-Mead on a
    radial clamp of the disk.
    """
    if m < 1:
        raise ValueError("m >= 1 required")
    if m == 1:
        return 1.0
    rng = np.random.default_rng(seed)

    def unpack(x):
        w = x[0::2] + 1j * x[1::2]
        mod = np.abs(w)
        w = np.where(mod > 1, w / np.maximum(mod, 1e-300), w)
        return np.concatenate([[1.0 + 0j], w])

    def objective(x):
        return _max_power_sum(unpack(x), m)

    best = math.inf
    for _ in range(trials):
        r = np.sqrt(rng.uniform(0, 1, m - 1))
        phi = rng.uniform(0, 2 * np.pi, m - 1)
        w = r * np.exp(1j * phi)
        x0 = np.empty(2 * (m - 1))
        x0[0::2], x0[1::2] = w.real, w.imag
        res = minimize(objective, x0, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
        best = min(best, float(res.fun), objective(x0))
    return best
