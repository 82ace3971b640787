"""Scenario configs, verification drivers, and the explicit constants."""

import math

import numpy as np
import pytest

from detcurve.functionals import det_form_pinned
from detcurve.lab import (
    BUNDLED_SCENARIOS,
    FamilyParams,
    ScenarioConfig,
    get_scenario,
    multi_measure_factor,
    run_scenario,
    rwt_bound,
    rwt_series_bound,
    rwt_series_constant,
    scenario_measure,
    sublevel_mass_factor,
    sublevel_shrink_factor,
    thickened_copy,
    verify_cauchy_schwarz,
    verify_necessity_growth,
    verify_sublevel_bound,
)
from detcurve.measure import GeneratorSpec


class TestConstants:
    def test_shrink_factors(self):
        assert sublevel_shrink_factor(1) == 1.0
        assert sublevel_shrink_factor(2) == 0.25
        assert sublevel_shrink_factor(3) == 1.0 / 32.0

    def test_shrink_recursion(self):
        for k in range(2, 8):
            assert sublevel_shrink_factor(k) == pytest.approx(
                2.0 ** -k * sublevel_shrink_factor(k - 1), rel=1e-15)

    def test_mass_factors(self):
        assert sublevel_mass_factor(1) == 1.0
        assert sublevel_mass_factor(2) == 8.0
        assert sublevel_mass_factor(3) == 96.0

    def test_multi_measure_factor(self):
        assert multi_measure_factor(1) == 1.0
        assert multi_measure_factor(2) == 2.0
        assert multi_measure_factor(3) == pytest.approx(4.5)

    def test_rejects_bad_k(self):
        for fn in (sublevel_shrink_factor, sublevel_mass_factor,
                   multi_measure_factor):
            with pytest.raises(ValueError):
                fn(0)


class TestSeriesConstant:
    @pytest.mark.parametrize("k,alpha,gamma", [
        (2, 1.0, 0.5),
        (2, 1.25, 0.5),
        (3, 1.0, 0.25),
        (1, 1.0, 0.5),
        (2, 0.8, 0.3),
    ])
    def test_closed_form_brackets_integer_minimum(self, k, alpha, gamma):
        series_min = min(rwt_series_bound(k, alpha, gamma, l0)
                         for l0 in range(-400, 401))
        closed = rwt_series_constant(k, alpha, gamma)
        assert series_min <= closed * (1 + 1e-12)
        assert closed <= 2.0 ** (alpha - gamma) * series_min * (1 + 1e-12)

    def test_bound_formula(self):
        k, alpha, gamma = 2, 1.0, 0.5
        w, masses = 3.0, [0.5, 0.25]
        expo = 1.0 - gamma / (k * alpha)
        want = rwt_series_constant(k, alpha, gamma) * w ** (gamma / alpha) \
            * (0.5 ** expo) * (0.25 ** expo)
        assert rwt_bound(k, alpha, gamma, w, masses) == pytest.approx(want, rel=1e-14)

    def test_bound_monotone_in_curvature(self):
        lo = rwt_bound(2, 1.0, 0.5, 1.0, [1.0, 1.0])
        hi = rwt_bound(2, 1.0, 0.5, 4.0, [1.0, 1.0])
        assert hi == pytest.approx(2.0 * lo, rel=1e-12)

    def test_rejects_bad_exponents(self):
        with pytest.raises(ValueError):
            rwt_series_constant(2, 1.0, 1.0)
        with pytest.raises(ValueError):
            rwt_series_constant(2, 1.0, 0.0)
        with pytest.raises(ValueError):
            rwt_series_bound(2, 0.5, 0.6, 0)


class TestScenarioConfig:
    def test_round_trip(self):
        cfg = ScenarioConfig(
            name="round-trip",
            generator=GeneratorSpec("cube_lebesgue", 2, 64, 0),
            co_generators=(GeneratorSpec("sphere_uniform", 2, 32, 1),),
            checks=("sublevel", "cauchy_schwarz"),
            eps_grid=(0.1, 0.4),
            family=FamilyParams(n_frames=4, n_pca=2),
            trials=7)
        assert ScenarioConfig.from_dict(cfg.to_dict()) == cfg

    def test_rejects_unsorted_eps(self):
        with pytest.raises(ValueError):
            ScenarioConfig(name="x",
                           generator=GeneratorSpec("cube_lebesgue", 2, 16, 0),
                           eps_grid=(0.4, 0.1))

    def test_rejects_unknown_check(self):
        with pytest.raises(ValueError):
            ScenarioConfig(name="x",
                           generator=GeneratorSpec("cube_lebesgue", 2, 16, 0),
                           checks=("nonsense",))

    def test_rejects_bad_weak_type_exponents(self):
        with pytest.raises(ValueError):
            ScenarioConfig(name="x",
                           generator=GeneratorSpec("cube_lebesgue", 2, 16, 0),
                           checks=("weak_type",), gamma=1.5, alpha=1.0)

    def test_pushforward_drop(self):
        cfg = ScenarioConfig(
            name="drop",
            generator=GeneratorSpec("sphere_uniform", 3, 40, 0),
            pushforward_drop=2, checks=("gaussian",))
        mu = scenario_measure(cfg)
        assert mu.dim == 2
        assert mu.n_atoms == 40


class TestDrivers:
    def test_sublevel_records(self, cube64):
        fam = FamilyParams(n_frames=4, n_pca=2).build(cube64)
        records, constants = verify_sublevel_bound(
            cube64, 2, (0.2, 0.4), fam, refine=40)
        names = [r.name for r in records]
        assert names[0] == "shrink-factor-recursion"
        assert "sublevel-bound-eps-0.2" in names
        assert all(r.passed for r in records)
        assert set(constants["delta_hat"]) == {"0.2", "0.4"}

    def test_cauchy_schwarz_driver(self, cube64):
        records, _ = verify_cauchy_schwarz(cube64, 2, 0.5, trials=10, seed=0)
        assert len(records) == 1
        assert records[0].passed
        assert records[0].lhs <= 0.0

    def test_necessity_growth_is_exact_on_line(self, line64):
        records, constants = verify_necessity_growth(
            line64, 2, 1.0, base_floor=2.0 ** -7, deltas=(1, 2),
            n_frames=8, refine=40)
        growth = {r.name: r.lhs for r in records if "growth" in r.name}
        assert growth["necessity-growth-dj-1"] == pytest.approx(4.0, rel=1e-9)
        assert growth["necessity-growth-dj-2"] == pytest.approx(16.0, rel=1e-9)
        stability = [r for r in records if r.name == "bounded-curvature-across-floors"]
        assert stability[0].expected_fail and not stability[0].passed

    def test_thickened_copy(self, line64):
        thick = thickened_copy(line64, 1, 2.0 ** -20)
        assert thick.total_mass == pytest.approx(1.0)
        offsets = thick.points[:, 1]
        assert np.all(np.abs(offsets) == 2.0 ** -20)
        assert offsets[0] > 0 > offsets[1]


class TestScenarios:
    def test_bundled_names_sorted(self):
        assert list(BUNDLED_SCENARIOS) == sorted(BUNDLED_SCENARIOS)
        assert len(BUNDLED_SCENARIOS) == 3

    def test_get_scenario_unknown(self):
        with pytest.raises(KeyError):
            get_scenario("no-such-scenario")

    def test_tiny_scenario_runs_clean(self):
        cfg = ScenarioConfig(
            name="tiny",
            generator=GeneratorSpec("cube_lebesgue", 2, 64, 0),
            checks=("sublevel", "cauchy_schwarz"),
            eps_grid=(0.2,),
            family=FamilyParams(n_frames=4, n_pca=2),
            trials=6, refine=40)
        report = run_scenario(cfg)
        assert report.all_satisfied
        assert report.scenario == "tiny"
        assert set(report.timings) == {"sublevel", "cauchy_schwarz"}
        assert report.config["generator"]["family"] == "cube_lebesgue"

    def test_expected_fail_flip(self):
        # a passing check listed in expected_fail must count as unsatisfied
        cfg = ScenarioConfig(
            name="flip",
            generator=GeneratorSpec("cube_lebesgue", 2, 64, 0),
            checks=("cauchy_schwarz",),
            expected_fail=("cauchy-schwarz-duality",),
            trials=4)
        report = run_scenario(cfg)
        rec = report.checks[0]
        assert rec.passed and rec.expected_fail
        assert not rec.satisfied
        assert not report.all_satisfied

    def test_flat_scenario_designed_failures(self):
        report = run_scenario(get_scenario("flat-subspace-negative"))
        assert report.all_satisfied
        flagged = {r.name for r in report.checks if r.expected_fail}
        assert flagged == {"bounded-curvature-across-floors",
                           "weak-type-near-flat"}
        for r in report.checks:
            if r.expected_fail:
                assert not r.passed


class TestDeterminism:
    def test_form_identical_across_thread_counts(self, monkeypatch, cube256):
        values = []
        for threads in ("1", "3"):
            monkeypatch.setenv("DETCURVE_THREADS", threads)
            values.append(det_form_pinned(cube256, 2, 0.5).value)
        assert values[0] == values[1]

    def test_scenario_json_identical_across_thread_counts(self, monkeypatch):
        outputs = []
        for threads in ("1", "4"):
            monkeypatch.setenv("DETCURVE_THREADS", threads)
            report = run_scenario(get_scenario("flat-subspace-negative"))
            outputs.append(report.to_json())
        assert outputs[0] == outputs[1]
