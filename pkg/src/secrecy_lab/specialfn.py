"""Scalar special functions shared by the closed-form and integration layers.

Everything here is pure float math on scalars: complete and upper incomplete
gamma of integer order (including negative orders, which the tail kernels
evaluate routinely), generalized exponential integrals with a series /
continued-fraction regime split, harmonic numbers, exact binomials, and a
signed log-domain value type used to carry alternating-series coefficients
that would overflow or lose their sign structure in plain floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

EULER_GAMMA = 0.5772156649015328606

_CF_MAX_ITER = 500
_TINY = 1e-300


@dataclass(frozen=True)
class SignedLogValue:
    """A real number stored as (ln |value|, sign) to survive huge magnitudes.

    sign == 0 encodes exact zero; log_magnitude is ignored in that case.
    Multiplication adds logs, addition is signed log-sum-exp, so products of
    hundreds of binomials and gamma factors never leave the representable
    range even when the materialized value would overflow a double.
    """

    log_magnitude: float
    sign: int

    @staticmethod
    def from_real(value: float) -> "SignedLogValue":
        if value == 0.0:
            return SignedLogValue(float("-inf"), 0)
        return SignedLogValue(math.log(abs(value)), 1 if value > 0 else -1)

    @staticmethod
    def from_log(log_magnitude: float, sign: int) -> "SignedLogValue":
        if sign == 0:
            return SignedLogValue(float("-inf"), 0)
        return SignedLogValue(log_magnitude, 1 if sign > 0 else -1)

    @property
    def is_zero(self) -> bool:
        return self.sign == 0

    def value(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_magnitude)

    def __mul__(self, other: "SignedLogValue") -> "SignedLogValue":
        sign = self.sign * other.sign
        if sign == 0:
            return SignedLogValue(float("-inf"), 0)
        return SignedLogValue(self.log_magnitude + other.log_magnitude, sign)

    def __neg__(self) -> "SignedLogValue":
        return SignedLogValue(self.log_magnitude, -self.sign)

    def __add__(self, other: "SignedLogValue") -> "SignedLogValue":
        if self.sign == 0:
            return other
        if other.sign == 0:
            return self
        hi, lo = self, other
        if lo.log_magnitude > hi.log_magnitude:
            hi, lo = lo, hi
        diff = lo.log_magnitude - hi.log_magnitude
        if hi.sign == lo.sign:
            return SignedLogValue(hi.log_magnitude + math.log1p(math.exp(diff)), hi.sign)
        if diff == 0.0:
            return SignedLogValue(float("-inf"), 0)
        # ln(1 - e^diff) for diff < 0, split at -ln2 to keep either the
        # expm1 or the log1p form in its accurate regime
        if diff > -math.log(2.0):
            delta = math.log(-math.expm1(diff))
        else:
            delta = math.log1p(-math.exp(diff))
        return SignedLogValue(hi.log_magnitude + delta, hi.sign)


def complete_gamma(z: float) -> float:
    """Gamma(z) for z > 0; exact factorials at integer arguments."""
    if z <= 0.0:
        raise ValueError("z must be positive: the complete gamma here is only needed on (0, inf)")
    return math.gamma(z)


def binomial(n: int, k: int) -> int:
    """Exact integer C(n, k); k > n yields 0."""
    if k > n:
        return 0
    return math.comb(n, k)


def log_binomial(n: int, k: int) -> float:
    """ln C(n, k) computed from the exact integer (valid for any size)."""
    c = binomial(n, k)
    if c == 0:
        return float("-inf")
    return math.log(c)


def harmonic(n: int) -> float:
    """H_n = sum_{i=1..n} 1/i, with H_0 = 0. Summed small-to-large."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return math.fsum(1.0 / i for i in range(n, 0, -1))


def _exp_integral_one_series(x: float) -> float:
    # E_1(x) = -gamma - ln x + sum_{j>=1} (-1)^(j+1) x^j / (j * j!), for small x.
    total = -EULER_GAMMA - math.log(x)
    power = 1.0
    for j in range(1, 200):
        power *= -x / j
        delta = -power / j
        total += delta
        if abs(delta) < 1e-18 * max(abs(total), _TINY):
            return total
    raise ArithmeticError(f"series for the exponential integral failed to converge at x={x}")


def _exp_integral_cf(n: int, x: float) -> float:
    # Modified Lentz continued fraction for E_n(x), evaluated directly at
    # order n: E_n(x) = e^(-x) / (x + n - 1*n/(x + 2 + ...)). Stable for
    # x >= 1 at any order, which the upward recurrence is not (its relative
    # error grows like x^n/n! when started from E_1 at large x).
    b = x + n
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _CF_MAX_ITER):
        a = -i * (n - 1 + i)
        b += 2.0
        d = a * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + a / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h * math.exp(-x)
    raise ArithmeticError(f"continued fraction for E_{n}({x}) failed to converge")


def exp_integral(n: int, x: float) -> float:
    """Generalized exponential integral E_n(x) = integral_1^inf e^(-x t)/t^n dt.

    n = 0 degenerates to e^(-x)/x. For x < 1 the E_1 series seeds the upward
    recurrence E_{m+1} = (e^(-x) - x E_m)/m (stable there since each step
    shrinks by roughly x/m); for x >= 1 the continued fraction is evaluated
    at order n directly.
    """
    if x <= 0.0:
        raise ValueError("x must be positive: E_n diverges at the origin")
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return math.exp(-x) / x
    if x >= 1.0:
        return _exp_integral_cf(n, x)
    e = _exp_integral_one_series(x)
    ex = math.exp(-x)
    for m in range(1, n):
        e = (ex - x * e) / m
    return e


def upper_incomplete_gamma_int(s: int, x: float) -> float:
    """Upper incomplete gamma Gamma(s, x) for integer s (any sign) and x > 0.

    s >= 1 uses the closed finite sum Gamma(s,x) = (s-1)! e^(-x) sum_{j<s} x^j/j!
    with a running product so no factorial is ever materialized; s = 0 is
    E_1(x); s = -n < 0 goes through Gamma(-n, x) = E_{n+1}(x)/x^n.
    """
    if x <= 0.0:
        raise ValueError("x must be positive: the integral diverges at 0 for nonpositive order")
    if s >= 1:
        term = math.exp(-x)
        total = term
        for j in range(1, s):
            term *= x / j
            total += term
        return math.gamma(s) * total
    if s == 0:
        return exp_integral(1, x)
    n = -s
    scale = n * math.log(x)
    if abs(scale) > 700.0:
        e = exp_integral(n + 1, x)
        if e <= 0.0:
            return 0.0
        return math.exp(math.log(e) - scale)
    return exp_integral(n + 1, x) / x**n


def log_upper_incomplete_gamma_int(s: int, x: float) -> float:
    """Natural log of Gamma(s, x) (which is positive for every x > 0).

    Returns -inf when the value underflows to zero in double precision.
    """
    if x <= 0.0:
        raise ValueError("x must be positive")
    if s >= 1:
        # log of the Poisson partial sum with the peak factored out, so the
        # result stays finite for x far beyond the exp underflow point.
        logs = [j * math.log(x) - math.lgamma(j + 1) for j in range(s)]
        peak = max(logs)
        rest = math.fsum(math.exp(v - peak) for v in logs)
        return math.lgamma(s) - x + peak + math.log(rest)
    if s == 0:
        v = exp_integral(1, x)
        return math.log(v) if v > 0.0 else float("-inf")
    n = -s
    v = exp_integral(n + 1, x)
    if v <= 0.0:
        return float("-inf")
    return math.log(v) - n * math.log(x)


def pairwise_sum(values) -> float:
    """Tree reduction with exactly rounded pairwise merges (math.fsum leaves).

    Deterministic for a given input order and far more cancellation-resistant
    than a running sum; used for every alternating-series materialization.
    """
    vals = list(values)
    if not vals:
        return 0.0
    while len(vals) > 1:
        vals = [math.fsum(vals[i : i + 2]) for i in range(0, len(vals), 2)]
    return vals[0]
