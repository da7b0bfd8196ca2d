"""Ergodic secrecy rate by term-wise integration of the ratio-CDF complement.

The rate integral (1/ln 2) * integral_1^inf (1 - F(x))/x dx is evaluated
term by term on the TermSum produced by the sop module. Dividing a term
c * x^p * e^(-a x) / prod(x+b_q)^(m_q) by x lowers the polynomial power by
one; integrate_term handles the resulting shapes:

* p = 0: a simple pole at zero joins the partial-fraction basis, and each
  1/(x+b)^t piece integrates to an upper-incomplete-gamma kernel (a > 0) or
  a logarithm/finite-power piece (a = 0).
* p >= 1: partial fractions of the denominator alone, then the numerator
  x^(p-1) is re-expanded around each pole; every piece is again a kernel.

The high-SNR variant integrates the unity-dropped TermSum (a = 0
throughout); the asymptotic variant additionally sends the poles to
infinity, leaving an expression affine in ln(lambda_D/lambda_E).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from itertools import product

from .algebra import (
    PoleGrouping,
    RationalExpTerm,
    TermSum,
    _partial_fractions_power,
    partial_fractions,
)
from .channel import SystemConfig
from .sop import _eve_survivor_factors, build_cdf_term_sum, build_high_snr_term_sum
from .specialfn import (
    binomial,
    harmonic,
    log_upper_incomplete_gamma_int,
    pairwise_sum,
)

_LOG = logging.getLogger(__name__)
_LN2 = math.log(2.0)
_RATE_FLOOR = 1e-300

_FORM_EXACT = "exact"
_FORM_HIGH_SNR = "high_snr"
_FORM_ASYMPTOTIC = "asymptotic"


class DivergenceError(ArithmeticError):
    """The requested term integral does not converge."""


@dataclass(frozen=True)
class EsrResult:
    value: float
    form: str
    term_count: int

    def __post_init__(self):
        if self.value < 0.0:
            raise ValueError("ergodic secrecy rate must be nonnegative")


def _kernel(a: float, b: float, theta: int) -> float:
    """integral_1^inf e^(-a x) / (x+b)^(theta+1) dx for a > 0, b >= 0.

    Equals a^theta * e^(a b) * Gamma(-theta, a(1+b)); evaluated in the log
    domain so the huge e^(a b) and tiny incomplete-gamma factors cancel
    before exponentiation. theta may be negative (the numerator re-expansion
    produces net positive powers of x+b).
    """
    log_gamma = log_upper_incomplete_gamma_int(-theta, a * (1.0 + b))
    if log_gamma == -math.inf:
        return 0.0
    return math.exp(theta * math.log(a) + a * b + log_gamma)


def w_kernel(theta: int, k: int, n: int, cfg: SystemConfig) -> float:
    """integral_1^inf e^(-k x/lam_D) / (x + (n+1) lam_D/(k lam_E))^(theta+1) dx.

    The pole location couples the two SNR scales through the backhaul index
    k and the eavesdropper-survivor count n; the exponential prefactor of the
    closed form is e^((n+1)/lam_E).
    """
    return _kernel(k / cfg.lambda_D,
                   (n + 1) * cfg.lambda_D / (k * cfg.lambda_E), theta)


def t_kernel(theta: int, k: int, n_q: int, cfg: SystemConfig) -> float:
    """Kernel with pole (n_q+1) lam_D/lam_E at rate k/lam_D.

    Arises from k-fold products of single-link terms: the pole location does
    not divide by k, so the prefactor is e^(k (n_q+1)/lam_E). Coincides with
    w_kernel at k = 1.
    """
    return _kernel(k / cfg.lambda_D,
                   (n_q + 1) * cfg.lambda_D / cfg.lambda_E, theta)


def _check_grouping(grouping: PoleGrouping, poles) -> None:
    repeated = sorted(m for _, m in poles if m >= 2)
    singles = sum(1 for _, m in poles if m == 1)
    if (sorted(len(g) for g in grouping.Q_sets) != repeated
            or len(grouping.Q_bar) != singles):
        raise ValueError(
            "pole grouping is inconsistent with the term's pole multiplicities")


def integrate_term(term: RationalExpTerm,
                   grouping: PoleGrouping | None = None) -> float:
    """integral_1^inf x^(p-1) e^(-a x) / prod(x+b_q)^(m_q) dx, unit coefficient.

    p, a and the poles come from the term; its coefficient is NOT applied
    (callers fold it in log space). The optional grouping is validated
    against the pole multiplicities; the partial-fraction engine derives the
    structure from the poles themselves.
    """
    if grouping is not None:
        _check_grouping(grouping, term.poles)
    a = term.exp_rate
    p = term.poly_power
    poles = tuple(term.poles)
    total_degree = sum(m for _, m in poles)
    if a == 0.0 and total_degree <= p:
        raise DivergenceError(
            f"pole degree {total_degree} <= polynomial power {p} with no "
            "exponential decay: the tail integral diverges")
    if 0.0 < a < _RATE_FLOOR:
        _LOG.warning("exponential rate %.3e is below the support floor; "
                     "substituting the rational branch", a)
        a = 0.0
    if a == 0.0:
        return _integrate_rational(p, poles, asymptotic=False)
    if p == 0:
        full = ((0.0, 1),) + poles
        rows = partial_fractions(full)
        pieces = []
        for (b, _m), row in zip(full, rows):
            for t, c in enumerate(row, start=1):
                if c != 0.0:
                    pieces.append(c * _kernel(a, b, t - 1))
        return math.fsum(pieces)
    if not poles:
        return _kernel(a, 0.0, -p)
    rows = partial_fractions(poles)
    pieces = []
    for (b, _m), row in zip(poles, rows):
        for t, c in enumerate(row, start=1):
            if c == 0.0:
                continue
            # x^(p-1) = sum_jj C(p-1,jj) (x+b)^jj (-b)^(p-1-jj)
            for jj in range(p):
                weight = binomial(p - 1, jj) * (-b) ** (p - 1 - jj)
                pieces.append(c * weight * _kernel(a, b, t - jj - 1))
    return math.fsum(pieces)


def _integrate_rational(p: int, poles: tuple, asymptotic: bool) -> float:
    """integral_1^inf x^(p-1)/prod(x+b_q)^(m_q) dx via the full proper split.

    Simple-pole logarithms diverge piecewise but their coefficients sum to
    zero, leaving -sum c_(j,1) ln(1+b_j); higher orders integrate to finite
    powers. With asymptotic=True each 1+b_j collapses to b_j (the zero pole
    keeps ln 1 = 0), which is the leading behavior as the poles grow.
    """
    if p == 0:
        full = ((0.0, 1),) + poles
        rows = _partial_fractions_power(full, 0)
    else:
        full = poles
        rows = _partial_fractions_power(full, p - 1)
    pieces = []
    for (b, _m), row in zip(full, rows):
        for t, c in enumerate(row, start=1):
            if c == 0.0:
                continue
            if t == 1:
                if b > 0.0:
                    pieces.append(-c * math.log(b if asymptotic else 1.0 + b))
            else:
                base = b if asymptotic else 1.0 + b
                pieces.append(c / ((t - 1) * base ** (t - 1)))
    return math.fsum(pieces)


def _sum_integrated(term_sum: TermSum, integrator) -> float:
    # term coefficients can be astronomically large while their integrals are
    # correspondingly tiny; combine per term in log space, then reduce with a
    # fixed pairwise order.
    contributions = []
    for term in term_sum.terms:
        integral = integrator(term)
        if integral == 0.0 or term.coeff.is_zero:
            continue
        log_mag = term.coeff.log_magnitude + math.log(abs(integral))
        sign = term.coeff.sign * math.copysign(1.0, integral)
        contributions.append(sign * math.exp(log_mag))
    return pairwise_sum(contributions) / _LN2


def esr_exact(cfg: SystemConfig) -> EsrResult:
    """Exact ergodic secrecy rate in bits per channel use."""
    if cfg.zeta == 0.0:
        return EsrResult(value=0.0, form=_FORM_EXACT, term_count=0)
    if cfg.knowledge == "KU":
        # gate after selection scales the rate linearly: zeta times the
        # always-on rate, exactly.
        base = esr_exact(replace(cfg, zeta=1.0, knowledge="KA"))
        return EsrResult(value=cfg.zeta * base.value, form=_FORM_EXACT,
                         term_count=base.term_count)
    term_sum = build_cdf_term_sum(cfg)
    value = _sum_integrated(term_sum, integrate_term)
    return EsrResult(value=max(0.0, value), form=_FORM_EXACT,
                     term_count=len(term_sum.terms))


def esr_high_snr(cfg: SystemConfig) -> EsrResult:
    """Rate of the unity-dropped CDF: every term integrates without kernels."""
    if cfg.zeta == 0.0:
        return EsrResult(value=0.0, form=_FORM_HIGH_SNR, term_count=0)
    if cfg.knowledge == "KU":
        base = esr_high_snr(replace(cfg, zeta=1.0, knowledge="KA"))
        return EsrResult(value=cfg.zeta * base.value, form=_FORM_HIGH_SNR,
                         term_count=base.term_count)
    term_sum = build_high_snr_term_sum(cfg)
    value = _sum_integrated(term_sum, integrate_term)
    return EsrResult(value=max(0.0, value), form=_FORM_HIGH_SNR,
                     term_count=len(term_sum.terms))


def _asymptotic_max_snr(cfg: SystemConfig) -> tuple[float, int]:
    """Log-affine limit for the max-destination-SNR scheme.

    Every pole grows like lambda_D/lambda_E; the zero-destination-power terms
    contribute ln(pole) - H_(phi-1) and the rest a finite alternating sum.
    The lambda powers cancel exactly, so coefficients are safe in floats.
    """
    pieces = []
    count = 0
    for k in range(1, cfg.K + 1):
        pick = binomial(cfg.K, k) * cfg.zeta ** k
        if k % 2 == 0:
            pick = -pick
        for combo in product(range(cfg.M_D), repeat=k):
            m_hat = sum(combo)
            dest = pick
            for m in combo:
                dest /= math.factorial(m)
            for n, me_vec, eve_frac in _eve_survivor_factors(cfg.N, cfg.M_E):
                me_hat = sum(me_vec)
                phi = cfg.M_E + m_hat + me_hat
                coeff = (dest * float(eve_frac) * math.gamma(phi)
                         / (k ** m_hat * (n + 1) ** (cfg.M_E + me_hat)))
                if m_hat == 0:
                    bracket = (math.log((n + 1) * cfg.lambda_D
                                        / (k * cfg.lambda_E))
                               - harmonic(cfg.M_E + me_hat - 1))
                else:
                    bracket = math.fsum(
                        (-1.0) ** (m_hat - j - 1) * binomial(m_hat - 1, j)
                        / (phi - j - 1)
                        for j in range(m_hat))
                pieces.append(coeff * bracket)
                count += 1
    return math.fsum(pieces) / _LN2, count


def esr_asymptotic(cfg: SystemConfig) -> EsrResult:
    """Large lambda_D/lambda_E limit: slope log2(10) per decade at zeta = 1."""
    if cfg.zeta == 0.0:
        return EsrResult(value=0.0, form=_FORM_ASYMPTOTIC, term_count=0)
    if cfg.knowledge == "KU":
        base = esr_asymptotic(replace(cfg, zeta=1.0, knowledge="KA"))
        return EsrResult(value=cfg.zeta * base.value, form=_FORM_ASYMPTOTIC,
                         term_count=base.term_count)
    if cfg.scheme == "SS":
        value, count = _asymptotic_max_snr(cfg)
    else:
        term_sum = build_high_snr_term_sum(cfg)
        value = _sum_integrated(
            term_sum,
            lambda t: _integrate_rational(t.poly_power, tuple(t.poles),
                                          asymptotic=True))
        count = len(term_sum.terms)
    return EsrResult(value=max(0.0, value), form=_FORM_ASYMPTOTIC,
                     term_count=count)


def esr_term_audit(cfg: SystemConfig) -> float:
    """Max relative gap between closed term integrals and quadrature.

    The alternating term sum hides per-term mistakes; this audits each term
    of the config's TermSum independently against adaptive quadrature of the
    same integrand and returns the worst relative discrepancy.
    """
    from scipy.integrate import quad

    term_sum = build_cdf_term_sum(cfg)
    worst = 0.0
    for term in term_sum.terms:
        closed = integrate_term(term)

        def shape(x, term=term):
            val = x ** (term.poly_power - 1) * math.exp(-term.exp_rate * x)
            for b, m in term.poles:
                val /= (x + b) ** m
            return val

        estimate, _err = quad(shape, 1.0, math.inf, limit=400)
        gap = abs(closed - estimate) / max(abs(estimate), 1e-300)
        worst = max(worst, gap)
    return worst
