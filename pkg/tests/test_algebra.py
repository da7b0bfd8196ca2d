import math
import random
from fractions import Fraction

import pytest

from secrecy_lab.algebra import (
    CapacityError,
    ExactTermRecipe,
    MultiIndexSpec,
    PoleGrouping,
    RationalExpTerm,
    TermSum,
    enumerate_multi_indices,
    expand_power_of_sum,
    group_poles,
    materialize_recipes,
    partial_fractions,
)
from secrecy_lab.specialfn import SignedLogValue


class TestMultiIndexEnumeration:
    def test_single_slot(self):
        spec = MultiIndexSpec(kappa=1, per_slot_bounds=(1,))
        assert list(enumerate_multi_indices(spec)) == [(0,), (1,)]

    def test_independent_bounds_count(self):
        spec = MultiIndexSpec(kappa=2, per_slot_bounds=(1, 1))
        vectors = list(enumerate_multi_indices(spec))
        assert len(vectors) == 4
        assert vectors == sorted(vectors)  # lexicographic

    def test_dependent_triangular_bounds(self):
        spec = MultiIndexSpec(kappa=2, per_slot_bounds=(1, lambda p: p[0]))
        assert list(enumerate_multi_indices(spec)) == [(0, 0), (1, 0), (1, 1)]

    def test_cardinality_formula(self):
        # independent slots multiply; kappa slots of bound tau give (tau+1)^kappa
        spec = MultiIndexSpec(kappa=3, per_slot_bounds=(2, 2, 2))
        assert len(list(enumerate_multi_indices(spec))) == 27


class TestExpandPowerOfSum:
    def test_single_term_is_raised_componentwise(self):
        term = (SignedLogValue.from_real(2.0), 1, 3)
        out = expand_power_of_sum([term], kappa=4)
        assert len(out) == 1
        coeff, xp, yp = out[0]
        assert xp == 4 and yp == 12
        assert coeff.value() == pytest.approx(16.0, rel=1e-12)

    def test_binomial_square(self):
        one = (SignedLogValue.from_real(1.0), 0, 0)
        y = (SignedLogValue.from_real(1.0), 0, 1)
        out = expand_power_of_sum([one, y], kappa=2)
        got = {t[1:]: t[0].value() for t in out}
        assert got == {(0, 0): pytest.approx(1.0), (0, 1): pytest.approx(2.0),
                       (0, 2): pytest.approx(1.0)}

    def test_matches_direct_power_numerically(self):
        rng = random.Random(7)
        for _ in range(6):
            inner = [(SignedLogValue.from_real(rng.uniform(-2.0, 2.0)),
                      rng.randint(0, 2), rng.randint(0, 2)) for _ in range(3)]
            out = expand_power_of_sum(inner, kappa=3)
            for _ in range(20):
                x, y = rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0)
                direct = sum(c.value() * x ** i * y ** j
                             for c, i, j in inner) ** 3
                expanded = sum(c.value() * x ** i * y ** j
                               for c, i, j in out)
                assert expanded == pytest.approx(direct, rel=1e-10)

    def test_works_on_exact_fractions(self):
        inner = [(Fraction(1, 2), 1, 0), (Fraction(-1, 3), 0, 1)]
        out = expand_power_of_sum(inner, kappa=2)
        got = {t[1:]: t[0] for t in out}
        assert got[(2, 0)] == Fraction(1, 4)
        assert got[(1, 1)] == Fraction(-1, 3)
        assert got[(0, 2)] == Fraction(1, 9)

    def test_capacity_error(self):
        inner = [(Fraction(1), i, 0) for i in range(10)]
        with pytest.raises(CapacityError):
            expand_power_of_sum(inner, kappa=5, cap=100)


class TestPartialFractions:
    def test_two_simple_poles_telescope(self):
        rows = partial_fractions([(1.0, 1), (2.0, 1)])
        assert rows[0][0] == pytest.approx(1.0, rel=1e-12)
        assert rows[1][0] == pytest.approx(-1.0, rel=1e-12)

    def test_zero_pole_with_double_pole(self):
        rows = partial_fractions([(0.0, 1), (2.0, 2)])
        assert rows[0][0] == pytest.approx(0.25, rel=1e-12)
        assert rows[1][0] == pytest.approx(-0.25, rel=1e-12)
        assert rows[1][1] == pytest.approx(-0.5, rel=1e-12)

    def test_recombination_random_pole_sets(self):
        rng = random.Random(20260815)
        for _ in range(12):
            count = rng.randint(1, 4)
            locations = rng.sample([0.5, 1.0, 1.5, 2.5, 4.0, 7.0], count)
            poles = [(b, rng.randint(1, 3)) for b in locations]
            if sum(m for _, m in poles) > 12:
                continue
            rows = partial_fractions(poles)
            for _ in range(50):
                x = rng.uniform(1.0, 100.0)
                direct = 1.0
                for b, m in poles:
                    direct /= (x + b) ** m
                recombined = sum(
                    c / (x + b) ** t
                    for (b, _m), row in zip(poles, rows)
                    for t, c in enumerate(row, start=1))
                assert recombined == pytest.approx(direct, rel=1e-9)

    def test_coincident_locations_rejected(self):
        with pytest.raises(ValueError, match="grouped"):
            partial_fractions([(1.0, 1), (1.0, 2)])


class TestGroupPoles:
    def test_one_repeat(self):
        g = group_poles([1, 1, 2])
        assert g.Z == 1
        assert g.Q_sets == ((1, 2),)
        assert g.Q_bar == (3,)

    def test_all_distinct(self):
        g = group_poles([0, 1, 2])
        assert g.Z == 0
        assert g.Q_sets == ()
        assert g.Q_bar == (1, 2, 3)

    def test_all_equal(self):
        g = group_poles([3, 3, 3])
        assert g.Z == 1
        assert g.Q_sets == ((1, 2, 3),)
        assert g.Q_bar == ()

    def test_partition_is_disjoint_and_complete(self):
        values = [2, 5, 2, 7, 5, 5, 9]
        g = group_poles(values)
        indices = sorted(i for group in g.Q_sets for i in group) + list(g.Q_bar)
        assert sorted(indices) == list(range(1, len(values) + 1))

    def test_grouping_validation(self):
        with pytest.raises(ValueError):
            PoleGrouping(Z=1, Q_sets=((1,),), Q_bar=())
        with pytest.raises(ValueError):
            PoleGrouping(Z=0, Q_sets=(), Q_bar=(1, 1))


class TestRationalExpTerm:
    def test_value_at(self):
        term = RationalExpTerm(coeff=SignedLogValue.from_real(2.0),
                               poly_power=1, exp_rate=0.5,
                               poles=((1.0, 2),))
        x = 3.0
        assert term.value_at(x) == pytest.approx(
            2.0 * x * math.exp(-0.5 * x) / (x + 1.0) ** 2, rel=1e-12)

    def test_positive_pole_locations_enforced(self):
        with pytest.raises(ValueError):
            RationalExpTerm(coeff=SignedLogValue.from_real(1.0),
                            poly_power=0, exp_rate=1.0, poles=((-1.0, 1),))


class TestTermSumAndRecipes:
    def test_materialized_recipes_evaluate_like_the_formula(self):
        # c = 1/6 * zeta^2 * lam_D^-1 * lam_E^-2, pole at (3/2)*lam_D/lam_E
        recipe = ExactTermRecipe(frac=Fraction(1, 6), zeta_pow=2,
                                 lam_dest_pow=-1, lam_eve_pow=-2, exp_k=2,
                                 poly_power=1, poles=((Fraction(3, 2), 2),))
        lam_d, lam_e, zeta = 8.0, 2.0, 0.7
        terms = materialize_recipes([recipe], lam_d, lam_e, zeta)
        assert len(terms) == 1
        term = terms[0]
        x = 2.5
        # the exponential enters as e^(k(1-x)/lam_D): the decay in x plus a
        # constant factor folded into the coefficient
        expected = ((1.0 / 6.0) * zeta ** 2 / (lam_d * lam_e ** 2)
                    * x * math.exp(2.0 * (1.0 - x) / lam_d)
                    / (x + 1.5 * lam_d / lam_e) ** 2)
        assert term.value_at(x) == pytest.approx(expected, rel=1e-12)
        assert term.exp_rate == pytest.approx(2.0 / lam_d, rel=1e-15)

    def test_zero_coefficient_recipes_materialize_to_nothing(self):
        recipe = ExactTermRecipe(frac=Fraction(0), zeta_pow=1,
                                 lam_dest_pow=0, lam_eve_pow=0, exp_k=1,
                                 poly_power=0, poles=((Fraction(1), 1),))
        assert materialize_recipes([recipe], 1.0, 1.0, 1.0) == ()

    def test_eval_is_constant_minus_terms(self):
        term = RationalExpTerm(coeff=SignedLogValue.from_real(0.25),
                               poly_power=0, exp_rate=1.0, poles=((1.0, 1),))
        ts = TermSum(terms=(term,), constant=1.0, recipes=(), scales=(1.0, 1.0, 1.0))
        x = 2.0
        assert ts.eval(x) == pytest.approx(
            1.0 - 0.25 * math.exp(-x) / (x + 1.0), rel=1e-12)
