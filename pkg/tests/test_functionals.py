"""Determinant-kernel forms against nested-loop oracles and exact identities."""

import math

import numpy as np
import pytest

from detcurve.functionals import (
    BudgetExceededError,
    cauchy_schwarz_check,
    default_det_threshold,
    det_form,
    det_form_pinned,
    det_form_sampled,
    dyadic_profile,
    indicator,
    sublevel_mass,
    weak_type_probe,
)
from detcurve.measure import WeightedPointMeasure, dilate, translate


def oracle_pinned(mu, gamma, tau):
    """All ordered pairs, plain loops, 2x2 cross products."""
    terms = []
    for i in range(mu.n_atoms):
        for j in range(mu.n_atoms):
            p, q = mu.points[i], mu.points[j]
            det = abs(p[0] * q[1] - p[1] * q[0])
            if det > tau:
                terms.append(mu.weights[i] * mu.weights[j] * det ** (-gamma))
    return math.fsum(terms)


def oracle_unpinned(mu, gamma, tau):
    terms = []
    for i in range(mu.n_atoms):
        for j in range(mu.n_atoms):
            for l in range(mu.n_atoms):
                u = mu.points[i] - mu.points[l]
                v = mu.points[j] - mu.points[l]
                det = abs(u[0] * v[1] - u[1] * v[0])
                if det > tau:
                    terms.append(mu.weights[i] * mu.weights[j]
                                 * mu.weights[l] * det ** (-gamma))
    return math.fsum(terms)


class TestExactForms:
    def test_two_atom_distance_kernel(self):
        # k = 1 with gamma = -1 integrates the pairwise distance
        mu = WeightedPointMeasure(np.array([[0.0], [4.0]]), np.array([0.5, 0.5]))
        res = det_form(mu, 1, -1.0)
        assert res.value == pytest.approx(2.0, rel=1e-14)
        assert res.tuples_total == 4
        assert res.tuples_excluded == 2  # the two diagonal pairs

    def test_pinned_three_atom_oracle(self, three_atoms):
        tau = default_det_threshold(three_atoms, 2)
        want = oracle_pinned(three_atoms, 0.5, tau)
        got = det_form_pinned(three_atoms, 2, 0.5)
        assert got.value == pytest.approx(want, rel=1e-12)
        # hand value: .25 * 1 + .375 * sqrt(2)
        assert got.value == pytest.approx(0.25 + 0.375 * math.sqrt(2.0), rel=1e-12)
        assert got.tuples_excluded == 3

    def test_pinned_negative_gamma(self, three_atoms):
        tau = default_det_threshold(three_atoms, 2)
        want = oracle_pinned(three_atoms, -0.5, tau)
        got = det_form_pinned(three_atoms, 2, -0.5)
        assert got.value == pytest.approx(want, rel=1e-12)

    def test_unpinned_collinear_atoms_vanish(self, three_atoms):
        # (1,0), (0,1), (.5,.5) are collinear: every distinct triple drops out
        res = det_form(three_atoms, 2, 0.5)
        assert res.value == 0.0
        assert res.tuples_excluded == 27

    def test_unpinned_right_triangle(self):
        mu = WeightedPointMeasure(
            np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
            np.array([0.5, 0.25, 0.25]))
        tau = 1e-12
        want = oracle_unpinned(mu, 0.5, tau)
        got = det_form(mu, 2, 0.5, tau=tau)
        assert got.value == pytest.approx(want, rel=1e-12)
        assert got.value == pytest.approx(6 * 0.5 * 0.25 * 0.25, rel=1e-14)

    def test_distinct_densities_disable_symmetry(self, three_atoms):
        tau = default_det_threshold(three_atoms, 2)
        f1 = indicator(3, [0, 1])
        f2 = indicator(3, [1, 2])
        got = det_form_pinned(three_atoms, 2, 0.5, [f1, f2])
        terms = []
        for i in (0, 1):
            for j in (1, 2):
                p, q = three_atoms.points[i], three_atoms.points[j]
                det = abs(p[0] * q[1] - p[1] * q[0])
                if det > tau:
                    terms.append(three_atoms.weights[i]
                                 * three_atoms.weights[j] * det ** (-0.5))
        assert got.value == pytest.approx(math.fsum(terms), rel=1e-12)

    def test_multi_measure_slots(self, three_atoms):
        other = translate(three_atoms, [0.25, 0.125])
        got = det_form_pinned([three_atoms, other], 2, 0.5)
        tau = default_det_threshold([three_atoms, other], 2)
        terms = []
        for i in range(3):
            for j in range(3):
                p, q = three_atoms.points[i], other.points[j]
                det = abs(p[0] * q[1] - p[1] * q[0])
                if det > tau:
                    terms.append(three_atoms.weights[i]
                                 * other.weights[j] * det ** (-0.5))
        assert got.value == pytest.approx(math.fsum(terms), rel=1e-12)

    def test_budget_error(self, cube64):
        with pytest.raises(BudgetExceededError):
            det_form(cube64, 2, 0.5, budget=100)

    def test_rejects_negative_density(self, three_atoms):
        with pytest.raises(ValueError):
            det_form_pinned(three_atoms, 2, 0.5, [-np.ones(3), None])


class TestInvariance:
    def test_translation_invariance_unpinned(self, cube64):
        # dyadic shift keeps the differences bitwise identical
        tau = 1e-12
        base = det_form(cube64, 2, 0.5, tau=tau)
        moved = det_form(translate(cube64, [0.5, -0.25]), 2, 0.5, tau=tau)
        assert moved.value == base.value
        assert moved.tuples_excluded == base.tuples_excluded

    def test_dilation_identity_pinned(self, cube64):
        # dets scale by a^k, so the form scales by a^(-k gamma); default
        # thresholds are covariant, making the identity exact
        k, gamma, a = 2, 0.5, 2.0
        base = det_form_pinned(cube64, k, gamma)
        scaled = det_form_pinned(dilate(cube64, a), k, gamma)
        assert scaled.value == pytest.approx(
            a ** (-k * gamma) * base.value, rel=1e-12)
        assert scaled.tuples_excluded == base.tuples_excluded

    def test_threshold_covariance(self, cube64):
        t1 = default_det_threshold(cube64, 2)
        t2 = default_det_threshold(dilate(cube64, 2.0), 2)
        assert t2 == pytest.approx(4.0 * t1, rel=1e-15)


class TestSublevelMass:
    def test_three_atom_oracle(self, three_atoms):
        # pinned pair dets are 1, .5, .5 (and zeros on the diagonal)
        tau = default_det_threshold([three_atoms] * 2, 2)
        assert sublevel_mass([three_atoms] * 2, 0.75, tau=tau) == pytest.approx(
            2 * (0.5 * 0.25 + 0.25 * 0.25))
        assert sublevel_mass([three_atoms] * 2, 0.25, tau=tau) == 0.0
        # delta above every det picks up all nondegenerate pairs
        assert sublevel_mass([three_atoms] * 2, 10.0, tau=tau) == pytest.approx(
            2 * (0.125 + 0.125 + 0.0625))

    def test_monotone_in_delta(self, cube64):
        masses = [sublevel_mass([cube64] * 2, d) for d in (0.01, 0.05, 0.2, 1.0)]
        assert all(a <= b + 1e-15 for a, b in zip(masses, masses[1:]))

    def test_dilation_covariance(self, cube64):
        big = dilate(cube64, 2.0)
        assert sublevel_mass([big] * 2, 4.0 * 0.125) == pytest.approx(
            sublevel_mass([cube64] * 2, 0.125), rel=1e-15)

    def test_rejects_bad_delta(self, three_atoms):
        with pytest.raises(ValueError):
            sublevel_mass([three_atoms] * 2, 0.0)


class TestDyadicProfile:
    def test_layers_partition_included_mass(self, cube64):
        sets = [np.arange(0, 40), np.arange(20, 64)]
        prof = dyadic_profile(cube64, 2, sets, 0.5)
        set_mass = (40 / 64.0) * (44 / 64.0)
        assert prof.included_mass + prof.excluded_mass == pytest.approx(
            set_mass, rel=1e-12)
        assert prof.l_min <= prof.l_max <= 0

    def test_bracket_contains_exact_form(self, cube64):
        sets = [np.arange(0, 40), np.arange(20, 64)]
        fs = [indicator(64, s) for s in sets]
        for gamma in (0.5, -0.5):
            prof = dyadic_profile(cube64, 2, sets, gamma)
            lo, hi = prof.reconstruction_bracket()
            exact = det_form_pinned(cube64, 2, gamma, fs).value
            assert lo * (1 - 1e-12) <= exact <= hi * (1 + 1e-12)

    def test_layer_levels_match_dets(self, three_atoms):
        prof = dyadic_profile(three_atoms, 2, [np.arange(3), np.arange(3)], 0.5)
        # dets 1, .5, .5 land in layers 0 and -1
        assert set(prof.layers) == {-1, 0}
        assert prof.layers[0] == pytest.approx(0.25)
        assert prof.layers[-1] == pytest.approx(0.375)


class TestCauchySchwarz:
    def test_random_families_never_violate(self, cube64):
        rng = np.random.default_rng(17)
        for _ in range(50):
            sets = [rng.choice(64, size=rng.integers(2, 40), replace=False)
                    for _ in range(2)]
            lhs, rhs, ok = cauchy_schwarz_check(cube64, 2, 0.5, sets)
            assert ok
            assert lhs <= rhs * (1 + 1e-12)

    def test_requires_k_sets(self, cube64):
        with pytest.raises(ValueError):
            cauchy_schwarz_check(cube64, 2, 0.5, [np.arange(4)])


class TestSampledForm:
    def test_unbiased_against_exact(self, cube64):
        exact = det_form_pinned(cube64, 2, 0.5)
        est = det_form_sampled(cube64, 2, 0.5, samples=40_000, seed=3, pinned=True)
        assert est.stderr is not None and est.stderr > 0
        assert abs(est.value - exact.value) <= 4.0 * est.stderr

    def test_stderr_shrinks_with_samples(self, cube64):
        e1 = det_form_sampled(cube64, 2, 0.5, samples=5_000, seed=5, pinned=True)
        e2 = det_form_sampled(cube64, 2, 0.5, samples=80_000, seed=5, pinned=True)
        ratio = e1.stderr / e2.stderr
        assert 2.5 <= ratio <= 6.5  # expect 4 for a 16x sample increase

    def test_rejects_tiny_sample(self, cube64):
        with pytest.raises(ValueError):
            det_form_sampled(cube64, 2, 0.5, samples=1)


class TestWeakTypeProbe:
    def test_probe_shape_and_witness(self, cube64):
        res = weak_type_probe(cube64, 2, 0.5, 1.0, trials=8, seed=0)
        assert len(res.ratios) == 8
        assert res.sup_ratio == max(res.ratios)
        assert math.isfinite(res.sup_ratio) and res.sup_ratio > 0
        assert len(res.witness["sets"]) == 2

    def test_custom_sampler(self, cube64):
        def sampler(mu, k, rng):
            return [np.arange(10), np.arange(30, 64)]

        res = weak_type_probe(cube64, 2, 0.5, 1.0, trials=2, seed=1,
                              set_sampler=sampler)
        assert res.witness["kind"] == "custom"

    def test_rejects_bad_exponents(self, cube64):
        with pytest.raises(ValueError):
            weak_type_probe(cube64, 2, 3.0, 1.0, trials=2)


class TestIndicator:
    def test_one_hot(self):
        f = indicator(5, [0, 3])
        assert np.array_equal(f, [1.0, 0.0, 0.0, 1.0, 0.0])
