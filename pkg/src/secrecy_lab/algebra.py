"""Combinatorial and rational-function machinery behind the closed forms.

Four jobs live here:

* enumeration of multi-index sets with slot bounds that may depend on earlier
  slots (the index sets of the product-of-sums expansions),
* expansion of a K-th power of a term sum into a flat merged term list,
* partial-fraction decomposition of 1/prod(x+b_j)^(m_j) (optionally with a
  polynomial numerator) via truncated power series around each pole,
* grouping of repeated pole values.

The module also owns the canonical carrier for every closed-form CDF:
``TermSum`` holds ``constant - sum of RationalExpTerm`` where each term is
``c * x^p * e^(-a x) / prod (x+b_q)^(m_q)``. Terms are materialized as floats
with SignedLogValue coefficients, but each TermSum built by this package also
carries an exact rational "recipe" per term (integer-fraction coefficient,
integer powers of the two scale parameters). The recipes allow the evaluator
to redo a catastrophically cancelling sum in arbitrary precision: the deep
tail of the outage CDF is ~1e-20 while individual terms are O(1), which no
double-precision summation can resolve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Sequence

import mpmath

from .specialfn import SignedLogValue, pairwise_sum

EXPANSION_TERM_CAP = 10_000_000

_MP_DPS_LADDER = (60, 120, 240, 480)


class CapacityError(RuntimeError):
    """Raised when an expansion would exceed the configured term cap."""


@dataclass(frozen=True)
class MultiIndexSpec:
    """Vector length plus per-slot inclusive upper bounds.

    A bound is either an int or a callable receiving the prefix of already
    fixed slots (needed for the triangular sets where slot q+1 is bounded by
    a function of slot q).
    """

    kappa: int
    per_slot_bounds: tuple

    def __post_init__(self):
        if self.kappa < 1:
            raise ValueError("kappa must be at least 1")
        if len(self.per_slot_bounds) != self.kappa:
            raise ValueError("per_slot_bounds must have exactly kappa entries")


def enumerate_multi_indices(spec: MultiIndexSpec) -> Iterator[tuple]:
    """Lexicographic stream of all index vectors admitted by the bounds."""

    def walk(prefix: tuple) -> Iterator[tuple]:
        depth = len(prefix)
        if depth == spec.kappa:
            yield prefix
            return
        bound = spec.per_slot_bounds[depth]
        if callable(bound):
            bound = bound(prefix)
        if bound < 0:
            raise ValueError(f"slot {depth} resolved to a negative bound {bound}")
        for value in range(bound + 1):
            yield from walk(prefix + (value,))

    yield from walk(())


def expand_power_of_sum(inner_terms: Sequence[tuple], kappa: int,
                        cap: int = EXPANSION_TERM_CAP) -> list[tuple]:
    """Expand (sum of inner terms)^kappa into a flat, merged term list.

    Each inner term is ``(coeff, e1, e2, ...)`` with integer exponent slots
    (the two-slot case is a coefficient with an x power and a y power).
    Coefficients only need ``*`` and ``+`` between themselves, so the same
    expansion runs on SignedLogValue (log-domain floats) and on exact
    Fractions. Like terms (identical exponent vectors) merge as they appear;
    exceeding ``cap`` raw products raises CapacityError instead of silently
    truncating.
    """
    if kappa < 1:
        raise ValueError("kappa must be at least 1")
    if not inner_terms:
        return []
    width = len(inner_terms[0]) - 1
    for t in inner_terms:
        if len(t) - 1 != width:
            raise ValueError("inner terms must share one exponent-vector width")
    acc: dict[tuple, object] = {tuple(t[1:]): t[0] for t in _merge_inner(inner_terms)}
    for _ in range(kappa - 1):
        if len(acc) * len(inner_terms) > cap:
            raise CapacityError(
                f"expansion would create {len(acc) * len(inner_terms)} raw terms "
                f"(cap {cap}); reduce K, N, or the multipath orders")
        nxt: dict[tuple, object] = {}
        for exps_a, coeff_a in acc.items():
            for term in inner_terms:
                key = tuple(a + b for a, b in zip(exps_a, term[1:]))
                coeff = coeff_a * term[0]
                prev = nxt.get(key)
                nxt[key] = coeff if prev is None else prev + coeff
        acc = nxt
    out = [(coeff,) + exps for exps, coeff in acc.items()]
    out.sort(key=lambda t: t[1:])
    return out


def _merge_inner(inner_terms: Sequence[tuple]) -> list[tuple]:
    merged: dict[tuple, object] = {}
    for t in inner_terms:
        key = tuple(t[1:])
        prev = merged.get(key)
        merged[key] = t[0] if prev is None else prev + t[0]
    return [(coeff,) + exps for exps, coeff in merged.items()]


def partial_fractions(poles: Sequence[tuple]) -> list[list[float]]:
    """Coefficients c_{j,t} with 1/prod(x+b_q)^(m_q) = sum_j sum_t c_{j,t}/(x+b_j)^t.

    ``poles`` is a list of (location b, multiplicity m); locations must be
    pairwise distinct (group first) and may include 0 for the extra simple
    pole that the logarithmic integrals introduce. The j-th row of the result
    has m_j entries ordered t = 1..m_j.
    """
    return _partial_fractions_power(poles, 0)


def _partial_fractions_power(poles: Sequence[tuple], num_power: int) -> list[list[float]]:
    # Around pole j substitute x = u - b_j; the coefficient of 1/(x+b_j)^t is
    # the coefficient of u^(m_j - t) in  u^0..: (u - b_j)^num_power *
    # prod_{q != j} (u + b_q - b_j)^(-m_q), i.e. a truncated product series
    # followed by one series inversion (synthetic division).
    locations = [b for b, _ in poles]
    total_degree = sum(m for _, m in poles)
    if total_degree < 1:
        raise ValueError("total pole degree must be at least 1")
    for b, m in poles:
        if m < 1:
            raise ValueError(f"pole multiplicity must be positive (got {m} at {b})")
    for i, b in enumerate(locations):
        for other in locations[i + 1:]:
            if b == other:
                raise ValueError(f"coincident pole locations must be grouped first (b={b})")
    rows: list[list[float]] = []
    for j, (b_j, m_j) in enumerate(poles):
        cofactor = [1.0] + [0.0] * (m_j - 1)
        for q, (b_q, m_q) in enumerate(poles):
            if q == j:
                continue
            shift = b_q - b_j
            for _ in range(m_q):
                cofactor = _poly_mul_trunc(cofactor, [shift, 1.0], m_j)
        series = _series_invert(cofactor, m_j)
        if num_power:
            numer = [1.0]
            for _ in range(num_power):
                numer = _poly_mul_trunc(numer, [-b_j, 1.0], m_j)
            series = _poly_mul_trunc(series, numer, m_j)
        rows.append([series[m_j - t] for t in range(1, m_j + 1)])
    return rows


def _poly_mul_trunc(a: list[float], b: list[float], keep: int) -> list[float]:
    out = [0.0] * min(keep, len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai == 0.0 or i >= keep:
            continue
        for k, bk in enumerate(b):
            pos = i + k
            if pos >= keep:
                break
            out[pos] += ai * bk
    return out


def _series_invert(p: list[float], keep: int) -> list[float]:
    if p[0] == 0.0:
        raise ValueError("cannot invert a series with zero constant term")
    inv = [0.0] * keep
    inv[0] = 1.0 / p[0]
    for i in range(1, keep):
        s = 0.0
        for t in range(1, min(i, len(p) - 1) + 1):
            s += p[t] * inv[i - t]
        inv[i] = -s / p[0]
    return inv


@dataclass(frozen=True)
class PoleGrouping:
    """Partition of pole indices (1-based) by repeated value.

    Z counts the distinct values occurring more than once; Q_sets holds the
    index sets of those values (each with >= 2 members, ordered by first
    occurrence); Q_bar holds the indices of values occurring exactly once.
    """

    Z: int
    Q_sets: tuple
    Q_bar: tuple

    def __post_init__(self):
        if self.Z != len(self.Q_sets):
            raise ValueError("Z must equal the number of repeated-value groups")
        flat: list = []
        for group in self.Q_sets:
            if len(group) < 2:
                raise ValueError("every repeated-value group needs at least 2 members")
            flat.extend(group)
        flat.extend(self.Q_bar)
        if len(flat) != len(set(flat)):
            raise ValueError("groups and singletons must be pairwise disjoint")


def group_poles(n_values: Sequence[int]) -> PoleGrouping:
    """Group 1-based indices of equal values; singletons go to Q_bar."""
    first_seen: dict[int, list[int]] = {}
    order: list[int] = []
    for idx, value in enumerate(n_values, start=1):
        if value not in first_seen:
            first_seen[value] = []
            order.append(value)
        first_seen[value].append(idx)
    q_sets = tuple(tuple(first_seen[v]) for v in order if len(first_seen[v]) > 1)
    q_bar = tuple(idx for v in order for idx in first_seen[v] if len(first_seen[v]) == 1)
    return PoleGrouping(Z=len(q_sets), Q_sets=q_sets, Q_bar=tuple(sorted(q_bar)))


@dataclass(frozen=True)
class RationalExpTerm:
    """One summand c * x^p * e^(-a x) / prod (x+b_q)^(m_q).

    Pole locations are strictly positive (every pole arising from the fading
    algebra sits at a positive multiple of the SNR-scale ratio, so the term
    is analytic on [1, inf)).
    """

    coeff: SignedLogValue
    poly_power: int
    exp_rate: float
    poles: tuple

    def __post_init__(self):
        if self.poly_power < 0:
            raise ValueError("poly_power must be nonnegative")
        if self.exp_rate < 0:
            raise ValueError("exp_rate must be nonnegative")
        for b, m in self.poles:
            if b <= 0:
                raise ValueError(f"pole locations must be positive (got {b})")
            if m < 1:
                raise ValueError(f"pole multiplicities must be positive (got {m})")

    def value_at(self, x: float) -> float:
        if self.coeff.sign == 0:
            return 0.0
        log_val = self.coeff.log_magnitude - self.exp_rate * x
        if self.poly_power:
            log_val += self.poly_power * math.log(x)
        for b, m in self.poles:
            log_val -= m * math.log(x + b)
        return self.coeff.sign * math.exp(log_val)


@dataclass(frozen=True)
class ExactTermRecipe:
    """Exact rebuild data for one term: value(x) = frac * zeta^zp * lam_d^dp *
    lam_e^ep * e^(exp_k (1-x)/lam_d) * x^poly / prod (x + r lam_d/lam_e)^m.

    Everything except the two scale parameters and zeta is exact integer
    arithmetic, so the term can be re-materialized at any precision.
    """

    frac: Fraction
    zeta_pow: int
    lam_dest_pow: int
    lam_eve_pow: int
    exp_k: int
    poly_power: int
    poles: tuple  # of (Fraction ratio, int multiplicity)


@dataclass(frozen=True)
class TermSum:
    """constant - sum of terms; the canonical closed-form CDF carrier.

    Zero-coefficient terms are dropped on construction. When ``recipes`` and
    ``scales`` are present (every sum built by this package), evaluation
    detects catastrophic cancellation and redoes the sum in arbitrary
    precision from the exact recipes.
    """

    terms: tuple
    constant: float
    recipes: tuple | None = field(default=None, repr=False)
    scales: tuple | None = field(default=None, repr=False)  # (lambda_D, lambda_E, zeta)

    def __post_init__(self):
        kept = tuple(t for t in self.terms if t.coeff.sign != 0)
        object.__setattr__(self, "terms", kept)

    def eval(self, x: float) -> float:
        values = [t.value_at(x) for t in self.terms]
        total = self.constant - pairwise_sum(values)
        if self.recipes is not None and values:
            gross = math.fsum(abs(v) for v in values) + abs(self.constant)
            if abs(total) < 1e-9 * gross:
                total = _eval_recipes_mp(self.recipes, self.constant, x, self.scales)
        return total


def log_abs_fraction(frac: Fraction) -> float:
    """ln |frac| for fractions whose parts can dwarf the float range."""
    return math.log(abs(frac.numerator)) - math.log(frac.denominator)


def materialize_recipes(recipes: Sequence[ExactTermRecipe],
                        lam_dest: float, lam_eve: float, zeta: float) -> tuple:
    """Float RationalExpTerms from exact recipes (single source of truth).

    Pole locations are computed once per reduced ratio so terms that merged
    exactly stay bitwise consistent.
    """
    log_ld = math.log(lam_dest)
    log_le = math.log(lam_eve)
    log_z = math.log(zeta) if zeta > 0.0 else float("-inf")
    out = []
    for r in recipes:
        if r.frac == 0:
            continue
        if zeta == 0.0 and r.zeta_pow > 0:
            continue
        log_mag = (log_abs_fraction(r.frac)
                   + r.zeta_pow * log_z
                   + r.lam_dest_pow * log_ld
                   + r.lam_eve_pow * log_le
                   + r.exp_k / lam_dest)
        sign = 1 if r.frac > 0 else -1
        poles = tuple(
            (ratio.numerator * lam_dest / (ratio.denominator * lam_eve), mult)
            for ratio, mult in r.poles)
        out.append(RationalExpTerm(
            coeff=SignedLogValue.from_log(log_mag, sign),
            poly_power=r.poly_power,
            exp_rate=r.exp_k / lam_dest,
            poles=poles))
    return tuple(out)


def _eval_recipes_mp(recipes: Sequence[ExactTermRecipe], constant: float,
                     x: float, scales: tuple) -> float:
    lam_dest, lam_eve, zeta = scales
    for dps in _MP_DPS_LADDER:
        with mpmath.workdps(dps):
            ld = mpmath.mpf(lam_dest)
            le = mpmath.mpf(lam_eve)
            zt = mpmath.mpf(zeta)
            xx = mpmath.mpf(x)
            total = mpmath.mpf(constant)
            gross = abs(total)
            for r in recipes:
                if r.frac == 0 or (zeta == 0.0 and r.zeta_pow > 0):
                    continue
                v = mpmath.mpf(r.frac.numerator) / r.frac.denominator
                if r.zeta_pow:
                    v *= zt ** r.zeta_pow
                if r.lam_dest_pow:
                    v *= ld ** r.lam_dest_pow
                if r.lam_eve_pow:
                    v *= le ** r.lam_eve_pow
                if r.exp_k:
                    v *= mpmath.exp(r.exp_k * (1 - xx) / ld)
                if r.poly_power:
                    v *= xx ** r.poly_power
                for ratio, mult in r.poles:
                    v /= (xx + mpmath.mpf(ratio.numerator) * ld / (ratio.denominator * le)) ** mult
                total -= v
                gross += abs(v)
            # enough headroom left between the result and the rounding floor?
            if abs(total) > gross * mpmath.mpf(10) ** (15 - dps):
                return float(total)
    return float(total)
