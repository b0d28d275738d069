import math

import numpy as np
import pytest
from conftest import S01, S11, measure, neighborhood_atoms, probability_atoms
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import tv_bruteforce

from polyrep import canonicalize, kl_divergence, lebesgue_decompose, pinsker_gap, variational_distance
from polyrep.errors import AbsoluteContinuityViolated, InvalidMeasure, MismatchedSpace, OutOfSpace
from polyrep.measures import DROP_TOL, DiscreteMeasure, StrategySpace, neighborhood_bounds


def raw(atoms, space=S11, probability=False):
    pts = np.array([[z] for z, _ in atoms])
    return DiscreteMeasure(space, pts, [w for _, w in atoms], probability=probability)


class TestCanonicalize:
    def test_merges_coincident_atoms(self):
        assert canonicalize(raw([(0.5, 0.3), (0.5, 0.2)])).atoms() == [((0.5,), 0.5)]

    def test_identity_on_canonical_input(self):
        assert canonicalize(raw([(0.1, 1.0)])).atoms() == [((0.1,), 1.0)]

    def test_drops_and_sorts(self):
        m = canonicalize(raw([(0.2, 0.7), (0.4, 1e-15), (0.1, 0.3)]))
        assert m.atoms() == [((0.1,), 0.3), ((0.2,), 0.7)]

    def test_merge_tolerance(self):
        m = canonicalize(raw([(0.5, 0.3), (0.5 + 5e-10, 0.2), (0.5 + 1e-8, 0.1)]))
        assert len(m) == 2

    @given(st.lists(st.tuples(st.floats(-1, 1), st.floats(-2, 2)), max_size=8))
    def test_idempotent(self, atoms):
        once = canonicalize(raw(atoms))
        assert canonicalize(once) == once

    def test_multidimensional_lexicographic_order(self):
        space = StrategySpace((0.0, 0.0), (1.0, 1.0))
        m = DiscreteMeasure.from_atoms(space, [((0.5, 0.2), 0.25), ((0.1, 0.9), 0.5), ((0.5, 0.1), 0.25)])
        assert [p for p, _ in m.atoms()] == [(0.1, 0.9), (0.5, 0.1), (0.5, 0.2)]


class TestValidation:
    def test_probability_mass(self):
        with pytest.raises(InvalidMeasure):
            measure([(0.0, 0.5), (1.0, 0.4)])

    def test_negative_probability_weight(self):
        with pytest.raises(InvalidMeasure):
            measure([(0.0, 1.5), (1.0, -0.5)])

    def test_out_of_space(self):
        with pytest.raises(OutOfSpace):
            measure([(1.5, 1.0)])

    def test_space_bounds(self):
        with pytest.raises(ValueError):
            StrategySpace((1.0,), (0.0,))

    def test_immutable(self, pstar2):
        with pytest.raises(ValueError):
            pstar2.weights[0] = 0.9


class TestVariationalDistance:
    def test_identity(self, pstar2):
        assert variational_distance(pstar2, pstar2) == 0.0

    def test_derived_value(self, pstar2):
        q = measure([(-1, 0.4), (1, 0.4), (0, 0.2)])
        expected = tv_bruteforce([(-1, 0.5), (1, 0.5)], [(-1, 0.4), (1, 0.4), (0, 0.2)])
        assert expected == pytest.approx(0.4, abs=1e-15)
        assert variational_distance(pstar2, q) == pytest.approx(expected, abs=1e-15)

    def test_disjoint(self):
        assert variational_distance(measure([(0, 1.0)]), measure([(1, 1.0)])) == 2.0

    def test_mismatched_spaces(self):
        with pytest.raises(MismatchedSpace):
            variational_distance(measure([(0.5, 1.0)], S01), measure([(0.5, 1.0)], S11))

    @given(probability_atoms(max_size=5), probability_atoms(max_size=5))
    def test_matches_sup_over_sets(self, p, q):
        assert variational_distance(measure(p), measure(q)) == pytest.approx(tv_bruteforce(p, q), abs=1e-12)

    @given(probability_atoms(), probability_atoms(), probability_atoms())
    def test_metric_axioms(self, a, b, c):
        p, q, r = measure(a), measure(b), measure(c)
        d = variational_distance
        assert d(p, q) >= 0
        assert d(p, q) == d(q, p)
        assert d(p, r) <= d(p, q) + d(q, r) + 1e-12
        assert (d(p, q) <= DROP_TOL) == (p == q)


class TestLebesgue:
    def test_support_split(self, pstar2):
        q = measure([(-1, 0.4), (1, 0.4), (0, 0.2)])
        q1, q2 = lebesgue_decompose(q, pstar2)
        assert q1.atoms() == [((-1.0,), 0.4), ((1.0,), 0.4)]
        assert q2.atoms() == [((0.0,), 0.2)]

    def test_identity(self, pstar2):
        q1, q2 = lebesgue_decompose(pstar2, pstar2)
        assert q1.atoms() == pstar2.atoms() and len(q2) == 0

    def test_fully_singular(self):
        q1, q2 = lebesgue_decompose(measure([(0.3, 1.0)]), measure([(0.7, 1.0)]))
        assert len(q1) == 0 and q2.atoms() == [((0.3,), 1.0)]

    @given(probability_atoms(), probability_atoms())
    def test_recomposition(self, a, b):
        q, p = measure(a), measure(b)
        q1, q2 = lebesgue_decompose(q, p)
        recomposed = q1 + q2
        assert np.array_equal(recomposed.points, q.points)
        assert np.array_equal(recomposed.weights, q.weights)
        on = {z for z, _ in p.atoms()}
        assert all(z in on for z, _ in q1.atoms())
        assert not any(z in on for z, _ in q2.atoms())


class TestKL:
    def test_zero_at_target(self, pstar2):
        assert kl_divergence(pstar2, pstar2) == 0.0

    def test_with_mutant(self, pstar2):
        q = measure([(-1, 0.4), (1, 0.4), (0, 0.2)])
        direct = 2 * 0.5 * math.log(0.5 / 0.4)
        assert direct == pytest.approx(0.2231435513, abs=1e-10)
        assert kl_divergence(pstar2, q) == pytest.approx(direct, rel=1e-14)

    def test_asymmetric_weights(self, pstar2):
        q = measure([(-1, 0.3), (1, 0.7)])
        direct = 0.5 * math.log(0.5 / 0.3) + 0.5 * math.log(0.5 / 0.7)
        assert direct == pytest.approx(0.5 * math.log(25 / 21), abs=1e-15)
        assert kl_divergence(pstar2, q) == pytest.approx(direct, rel=1e-13)

    def test_absolute_continuity(self, pstar2):
        with pytest.raises(AbsoluteContinuityViolated):
            kl_divergence(pstar2, measure([(-1, 0.5), (0, 0.5)]))

    def test_positivity_floor(self, pstar2):
        q = DiscreteMeasure(S11, [[-1.0], [1.0]], [1.0, 1e-310])
        with pytest.raises(AbsoluteContinuityViolated):
            kl_divergence(pstar2, q)

    @given(neighborhood_atoms())
    def test_nonnegative_and_pinsker(self, atoms):
        pstar, q = measure([(-1, 0.5), (1, 0.5)]), measure(atoms)
        lhs, v = pinsker_gap(pstar, q)
        assert v >= 0
        assert (v <= 1e-15) == (lhs <= DROP_TOL**2)
        assert lhs <= 2 * v + 1e-12


class TestPinsker:
    def test_at_target(self, pstar2):
        assert pinsker_gap(pstar2, pstar2) == (0.0, 0.0)

    def test_mutant(self, pstar2):
        lhs, rhs = pinsker_gap(pstar2, measure([(-1, 0.4), (1, 0.4), (0, 0.2)]))
        assert lhs == pytest.approx(0.16, abs=1e-15)
        assert rhs == pytest.approx(0.2231435513, abs=1e-10)
        assert lhs <= rhs

    def test_unfactored_bound_fails_off_mean_zero_slice(self, pstar2):
        lhs, rhs = pinsker_gap(pstar2, measure([(-1, 0.3), (1, 0.7)]))
        assert lhs == pytest.approx(0.16, abs=1e-15)
        assert rhs == pytest.approx(0.5 * math.log(25 / 21), abs=1e-15)
        assert lhs > rhs
        assert lhs <= 2 * rhs


class TestNeighborhoodBounds:
    @settings(max_examples=300)
    @given(neighborhood_atoms())
    def test_sandwich(self, atoms):
        pstar, q = measure([(-1, 0.5), (1, 0.5)]), measure(atoms)
        lower, upper = neighborhood_bounds(pstar, q)
        d = variational_distance(pstar, q)
        assert lower <= d + 1e-12
        assert d <= upper + 1e-12

    def test_three_atom_target(self, pstar1):
        q = measure([(0.0, 0.3), (0.25, 0.05), (0.5, 0.3), (1.0, 0.35)], S01)
        lower, upper = neighborhood_bounds(pstar1, q)
        d = variational_distance(pstar1, q)
        assert lower <= d <= upper


def test_signed_arithmetic(pstar2):
    q = measure([(-1, 0.4), (1, 0.4), (0, 0.2)])
    diff = q - pstar2
    assert not diff.probability
    assert diff.mass == pytest.approx(0.0, abs=1e-15)
    assert (pstar2 + diff).atoms() == q.atoms()
    assert (2 * pstar2).mass == 2.0
