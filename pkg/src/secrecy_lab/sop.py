"""Closed-form CDF of the secrecy ratio and the secrecy outage probability.

The CDF complement is assembled as a TermSum for each of the four
scheme/knowledge combinations:

* SS, selection over active links: conditioning on the strongest
  eavesdropper SNR y, the selected-link CDF is the K-th power of the gated
  mixture; binomial expansion of the power, a per-link split of
  (x(1+y)-1)^m into x- and y-powers, and the closed moment integral over y
  leave one rational-exponential term per multi-index.
* OS, selection over active links: the K-th power of the single-link ratio
  CDF bracket; the bracket's complement is expanded to a term list once and
  raised to the k-th power by the generic product expansion, accumulating
  pole multiplicities per eavesdropher-survivor index.
* Gate-after-selection variants are exactly 1 - zeta + zeta * (ungated CDF),
  so their term sums are the zeta=1 sums rescaled.

Every builder emits exact rational recipes (see algebra.ExactTermRecipe);
floats are materialized from those, never accumulated independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from itertools import product

from .algebra import (
    ExactTermRecipe,
    MultiIndexSpec,
    TermSum,
    enumerate_multi_indices,
    expand_power_of_sum,
    materialize_recipes,
)
from .channel import SystemConfig
from .specialfn import binomial

_FORM_EXACT = "exact"
_FORM_ASYMPTOTIC = "asymptotic"
_FORM_ASYMPTOTIC_PERFECT = "asymptotic_perfect_backhaul"


@dataclass(frozen=True)
class SopResult:
    value: float
    form: str
    term_count: int


@lru_cache(maxsize=None)
def _dest_slot_indices(M_D: int) -> tuple:
    """Triples (m, mu, drop) with mu <= m, drop <= m - mu, m < M_D.

    One triple per destination-side summand: m indexes the Poisson term of
    the link CDF, mu the y-power picked from (x(1+y)-1)^m, drop the unit
    dropped from the remaining (x-1) factor (carrying the sign (-1)^drop and
    lowering the x power to m - drop).
    """
    spec = MultiIndexSpec(
        kappa=3,
        per_slot_bounds=(M_D - 1, lambda p: p[0], lambda p: p[0] - p[1]),
    )
    return tuple(enumerate_multi_indices(spec))


@lru_cache(maxsize=None)
def _eve_vectors(n: int, M_E: int) -> tuple:
    """All length-n vectors over {0..M_E-1} (empty vector for n = 0)."""
    if n == 0:
        return ((),)
    spec = MultiIndexSpec(kappa=n, per_slot_bounds=(M_E - 1,) * n)
    return tuple(enumerate_multi_indices(spec))


def _eve_survivor_factors(N: int, M_E: int):
    """Per eavesdropper-survivor count n: (n, m_E vector, shared Fraction).

    Expanding [CDF of one eavesdropper]^(N-1) binomially leaves n surviving
    exponential factors, each with its own Poisson index; the fraction
    gathers (-1)^n C(N-1,n) N / ((M_E-1)! prod m_E_i!).
    """
    base = Fraction(N, math.factorial(M_E - 1))
    for n in range(N):
        outer = base * binomial(N - 1, n)
        if n % 2:
            outer = -outer
        for vec in _eve_vectors(n, M_E):
            denom = 1
            for m_e in vec:
                denom *= math.factorial(m_e)
            yield n, vec, outer / denom


@lru_cache(maxsize=None)
def _ss_recipes(K: int, N: int, M_D: int, M_E: int) -> tuple:
    """Exact term recipes for the max-destination-SNR scheme, gated links."""
    slots = _dest_slot_indices(M_D)
    eve_parts = tuple(_eve_survivor_factors(N, M_E))
    acc: dict[tuple, Fraction] = {}
    for k in range(1, K + 1):
        pick = Fraction(binomial(K, k))
        if k % 2 == 0:
            pick = -pick
        for combo in product(slots, repeat=k):
            dest_frac = Fraction(1)
            m_hat = mu_hat = drop_hat = 0
            for m, mu, drop in combo:
                m_hat += m
                mu_hat += mu
                drop_hat += drop
                piece = Fraction(binomial(m, mu) * binomial(m - mu, drop),
                                 math.factorial(m))
                if drop % 2:
                    piece = -piece
                dest_frac *= piece
            for n, me_vec, eve_frac in eve_parts:
                me_hat = sum(me_vec)
                theta = M_E + mu_hat + me_hat
                frac = (pick * dest_frac * eve_frac
                        * math.factorial(theta - 1)
                        / Fraction(k ** theta))
                key = (m_hat - drop_hat, k, k,
                       theta - m_hat, -(M_E + me_hat),
                       ((Fraction(n + 1, k), theta),))
                acc[key] = acc.get(key, Fraction(0)) + frac
    return _recipes_from_acc(acc)


@lru_cache(maxsize=None)
def _os_recipes(K: int, N: int, M_D: int, M_E: int) -> tuple:
    """Exact term recipes for the max-secrecy-ratio scheme, gated links.

    The single-link ratio-CDF complement expands into terms carried as
    (coeff, x_power, lambda_D power, lambda_E power, pole multiplicity per
    survivor count); the k-link product accumulates exponents additively.
    """
    inner: list[tuple] = []
    for m, mu, drop in _dest_slot_indices(M_D):
        dest_frac = Fraction(binomial(m, mu) * binomial(m - mu, drop),
                             math.factorial(m))
        if drop % 2:
            dest_frac = -dest_frac
        for n, me_vec, eve_frac in _eve_survivor_factors(N, M_E):
            me_hat = sum(me_vec)
            alpha = M_E + mu + me_hat
            frac = dest_frac * eve_frac * math.factorial(alpha - 1)
            mults = tuple(alpha if j == n else 0 for j in range(N))
            inner.append((frac, m - drop, alpha - m, -(M_E + me_hat)) + mults)
    acc: dict[tuple, Fraction] = {}
    for k in range(1, K + 1):
        pick = Fraction(binomial(K, k))
        if k % 2 == 0:
            pick = -pick
        for coeff, poly, ld_pow, le_pow, *mults in expand_power_of_sum(inner, k):
            poles = tuple((Fraction(j + 1), mult)
                          for j, mult in enumerate(mults) if mult)
            key = (poly, k, k, ld_pow, le_pow, poles)
            acc[key] = acc.get(key, Fraction(0)) + pick * coeff
    return _recipes_from_acc(acc)


@lru_cache(maxsize=None)
def _ss_high_snr_recipes(K: int, N: int, M_D: int, M_E: int) -> tuple:
    """Unity-dropped variant: ratio ~ dest/eve, so no exponential in x.

    Per-link CDF complement at argument x*y keeps only the Poisson index m;
    no binomial split arises because there is no -1 inside the power.
    """
    eve_parts = tuple(_eve_survivor_factors(N, M_E))
    acc: dict[tuple, Fraction] = {}
    for k in range(1, K + 1):
        pick = Fraction(binomial(K, k))
        if k % 2 == 0:
            pick = -pick
        for combo in product(range(M_D), repeat=k):
            m_hat = sum(combo)
            dest_frac = Fraction(1)
            for m in combo:
                dest_frac /= math.factorial(m)
            for n, me_vec, eve_frac in eve_parts:
                me_hat = sum(me_vec)
                phi = M_E + m_hat + me_hat
                frac = (pick * dest_frac * eve_frac
                        * math.factorial(phi - 1) / Fraction(k ** phi))
                key = (m_hat, k, 0, M_E + me_hat, -(M_E + me_hat),
                       ((Fraction(n + 1, k), phi),))
                acc[key] = acc.get(key, Fraction(0)) + frac
    return _recipes_from_acc(acc)


@lru_cache(maxsize=None)
def _os_high_snr_recipes(K: int, N: int, M_D: int, M_E: int) -> tuple:
    inner: list[tuple] = []
    for m in range(M_D):
        for n, me_vec, eve_frac in _eve_survivor_factors(N, M_E):
            me_hat = sum(me_vec)
            beta = M_E + m + me_hat
            frac = eve_frac * math.factorial(beta - 1) / math.factorial(m)
            mults = tuple(beta if j == n else 0 for j in range(N))
            inner.append((frac, m, M_E + me_hat, -(M_E + me_hat)) + mults)
    acc: dict[tuple, Fraction] = {}
    for k in range(1, K + 1):
        pick = Fraction(binomial(K, k))
        if k % 2 == 0:
            pick = -pick
        for coeff, poly, ld_pow, le_pow, *mults in expand_power_of_sum(inner, k):
            poles = tuple((Fraction(j + 1), mult)
                          for j, mult in enumerate(mults) if mult)
            key = (poly, k, 0, ld_pow, le_pow, poles)
            acc[key] = acc.get(key, Fraction(0)) + pick * coeff
    return _recipes_from_acc(acc)


@lru_cache(maxsize=512)
def _high_snr_term_sum_for_key(key: tuple) -> TermSum:
    K, N, M_D, M_E, lam_d, lam_e, zeta, scheme, knowledge = key
    scales = (lam_d, lam_e, zeta)
    if zeta == 0.0:
        return TermSum(terms=(), constant=1.0, recipes=(), scales=scales)
    recipes = (_ss_high_snr_recipes(K, N, M_D, M_E) if scheme == "SS"
               else _os_high_snr_recipes(K, N, M_D, M_E))
    if knowledge == "KU":
        recipes = tuple(replace(r, zeta_pow=1) for r in recipes)
    terms = materialize_recipes(recipes, lam_d, lam_e, zeta)
    return TermSum(terms=terms, constant=1.0, recipes=recipes, scales=scales)


def build_high_snr_term_sum(cfg: SystemConfig) -> TermSum:
    """TermSum of the unity-dropped CDF (pure rational terms, no exp)."""
    return _high_snr_term_sum_for_key(_config_key(cfg))


def _recipes_from_acc(acc: dict) -> tuple:
    recipes = []
    for key in sorted(acc, key=_key_sort):
        frac = acc[key]
        if frac == 0:
            continue
        poly, zeta_pow, exp_k, ld_pow, le_pow, poles = key
        recipes.append(ExactTermRecipe(
            frac=frac, zeta_pow=zeta_pow, lam_dest_pow=ld_pow,
            lam_eve_pow=le_pow, exp_k=exp_k, poly_power=poly, poles=poles))
    return tuple(recipes)


def _key_sort(key):
    poly, zeta_pow, exp_k, ld_pow, le_pow, poles = key
    return (exp_k, poly, ld_pow, le_pow,
            tuple((float(r), m) for r, m in poles), zeta_pow)


def _config_key(cfg: SystemConfig) -> tuple:
    return (cfg.K, cfg.N, cfg.M_D, cfg.M_E, cfg.lambda_D, cfg.lambda_E,
            cfg.zeta, cfg.scheme, cfg.knowledge)


@lru_cache(maxsize=512)
def _term_sum_for_key(key: tuple) -> TermSum:
    K, N, M_D, M_E, lam_d, lam_e, zeta, scheme, knowledge = key
    scales = (lam_d, lam_e, zeta)
    if zeta == 0.0:
        return TermSum(terms=(), constant=1.0, recipes=(), scales=scales)
    recipes = _ss_recipes(K, N, M_D, M_E) if scheme == "SS" else _os_recipes(K, N, M_D, M_E)
    if knowledge == "KU":
        # gate applied after selection: F = 1 - zeta * (complement at zeta=1)
        recipes = tuple(replace(r, zeta_pow=1) for r in recipes)
    terms = materialize_recipes(recipes, lam_d, lam_e, zeta)
    return TermSum(terms=terms, constant=1.0, recipes=recipes, scales=scales)


def build_cdf_term_sum(cfg: SystemConfig) -> TermSum:
    """The TermSum carrying F(x) for cfg's scheme/knowledge (cached)."""
    return _term_sum_for_key(_config_key(cfg))


def cdf_ratio(x: float, cfg: SystemConfig) -> float:
    """F(x) = P(secrecy ratio <= x) for x >= 1."""
    if x < 1.0:
        raise ValueError("x must be at least 1: the ratio CDF is only assembled on [1, inf)")
    if cfg.knowledge == "KU" and 0.0 < cfg.zeta < 1.0:
        # gate-after-selection keeps zeta as a single outer multiplier, so
        # evaluate the mixture with the zeta=1 curve literally; folding zeta
        # into the term coefficients instead leaves ~1e-12 relative noise
        # after cancellation on deep K/N grids
        base = cdf_ratio(x, replace(cfg, zeta=1.0, knowledge="KA"))
        return min(1.0, 1.0 - cfg.zeta + cfg.zeta * base)
    value = build_cdf_term_sum(cfg).eval(x)
    if not (-1e-9 <= value <= 1.0 + 1e-9):
        raise ArithmeticError(
            f"term sum evaluated outside the probability band at x={x}: {value}")
    return min(1.0, max(0.0, value))


def sop(cfg: SystemConfig) -> SopResult:
    """Exact outage probability: the ratio CDF at 2^R_th."""
    term_sum = build_cdf_term_sum(cfg)
    value = cdf_ratio(cfg.rho(), cfg)
    return SopResult(value=value, form=_FORM_EXACT, term_count=len(term_sum.terms))


def sop_asymptotic(cfg: SystemConfig) -> SopResult:
    """Outage floor as lambda_D grows with unreliable backhaul (zeta < 1).

    Selection over active links leaves outage only when every backhaul is
    down: (1-zeta)^K. Gate-after-selection is blocked whenever the one
    selected gate is down: 1-zeta. Independent of every other parameter.
    """
    if cfg.zeta >= 1.0:
        raise ValueError(
            "zeta = 1 has no outage floor; use sop_asymptotic_perfect_backhaul")
    if cfg.knowledge == "KA":
        value = (1.0 - cfg.zeta) ** cfg.K
    else:
        value = 1.0 - cfg.zeta
    return SopResult(value=value, form=_FORM_ASYMPTOTIC, term_count=1)


def _perfect_backhaul_bracket(links: int, dest_factorial_count: int,
                              cfg: SystemConfig) -> tuple[float, int]:
    # Leading lambda_D^(-links*M_D per bracket) coefficient of the outage
    # CDF at rho: sum over the binomial split of (rho-1+rho*lambda_E*u)^Lam
    # against the strongest-eavesdropper density moments.
    lam = links
    rho = cfg.rho()
    log_lam_e = math.log(cfg.lambda_E)
    log_rho = math.log(rho)
    pieces = []
    count = 0
    for mu in range(lam + 1):
        if rho == 1.0 and mu != lam:
            continue  # (rho-1)^(lam-mu) vanishes
        for n, me_vec, eve_frac in _eve_survivor_factors(cfg.N, cfg.M_E):
            me_hat = sum(me_vec)
            phi = cfg.M_E + mu + me_hat
            frac = (eve_frac * binomial(lam, mu) * math.factorial(phi - 1)
                    / Fraction((n + 1) ** phi))
            log_mag = (math.log(abs(frac.numerator)) - math.log(frac.denominator)
                       + mu * (log_lam_e + log_rho))
            if mu != lam:
                log_mag += (lam - mu) * math.log(rho - 1.0)
            sign = 1 if frac > 0 else -1
            pieces.append(sign * math.exp(log_mag))
            count += 1
    total = math.fsum(pieces)
    log_scale = (-lam * math.log(cfg.lambda_D)
                 - dest_factorial_count * math.lgamma(cfg.M_D + 1))
    return total * math.exp(log_scale), count


def sop_asymptotic_perfect_backhaul(cfg: SystemConfig) -> SopResult:
    """Leading-order outage as lambda_D grows at zeta = 1.

    Both schemes decay as lambda_D^(-K*M_D); the max-ratio scheme's value is
    the K-th power of its single-link bracket.
    """
    if cfg.zeta != 1.0:
        raise ValueError("this asymptote assumes zeta = 1; use sop_asymptotic for zeta < 1")
    if cfg.scheme == "SS":
        value, count = _perfect_backhaul_bracket(cfg.K * cfg.M_D, cfg.K, cfg)
    else:
        bracket, count = _perfect_backhaul_bracket(cfg.M_D, 1, cfg)
        value = bracket ** cfg.K
    return SopResult(value=min(1.0, max(0.0, value)),
                     form=_FORM_ASYMPTOTIC_PERFECT, term_count=count)


def diversity_order(cfg: SystemConfig) -> int:
    """High-SNR log-log decay slope of the outage probability: K * M_D."""
    return cfg.K * cfg.M_D
