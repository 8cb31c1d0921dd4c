import numpy as np
import pytest

from leakopt.experiments import (
    SweepPlan,
    composite_scaling_study,
    default_baseline_grid,
    default_grape_grid,
    envelope,
    family_kind,
    first_below,
    lobes,
    loglog_slope,
    peak_profile,
    persistent_crossing,
    population_milestones,
    records_for,
    rise_time,
    run_sweep,
    shifted_optimum,
    SweepRecord,
    validate_rwa,
)
from leakopt.model import ModelParams, basis_state
from leakopt.optimizer import OptimizerConfig
from leakopt.propagation import evolve_state
from leakopt.pulses import ControlPulse, composite_duration, composite_sequence, rectangular_pulse

SMALL_PLAN = dict(
    baseline_grid=np.array([2.0, 20.0]),
    grape_grid=np.array([8.0]),
    families=("rectangular", "gaussian(2)", "grape"),
    optimizer=OptimizerConfig(max_iterations=40, restarts=2),
    n_slices=128,
)


def test_default_grids():
    b, g = default_baseline_grid(), default_grape_grid()
    assert b.size == 40 and b[0] == pytest.approx(1.0) and b[-1] == pytest.approx(300.0)
    np.testing.assert_allclose(np.diff(np.log(b)), np.log(300) / 39)
    assert g[0] == 3.0 and g[-1] == 15.0 and g.size == 49
    np.testing.assert_allclose(np.diff(g), 0.25)


@pytest.mark.parametrize("family, kind", [("rectangular", "rectangular"), ("gaussian(2)", "gaussian"),
                                          ("gaussian(2.5)", "gaussian"), ("grape", "grape")])
def test_family_kind(family, kind):
    assert family_kind(family) == kind


@pytest.mark.parametrize("family", ["square", "gaussian(-1)", "gaussian()"])
def test_unknown_family(family):
    with pytest.raises(ValueError):
        family_kind(family)


@pytest.mark.parametrize("kwargs", [{"grape_grid": []}, {"baseline_grid": [3.0, 2.0]}, {"families": ()}])
def test_plan_validation(kwargs):
    with pytest.raises(ValueError):
        SweepPlan(**kwargs)


def test_baselines_use_union_grid():
    plan = SweepPlan(**SMALL_PLAN)
    np.testing.assert_array_equal(plan.grid_for("rectangular"), [2.0, 8.0, 20.0])
    np.testing.assert_array_equal(plan.grid_for("grape"), [8.0])


@pytest.fixture(scope="module")
def records():
    return run_sweep(SweepPlan(**SMALL_PLAN))


class TestSweep:
    def test_one_record_per_point(self, records):
        assert [(r.family, r.t_g) for r in records] == [
            ("rectangular", 2.0), ("rectangular", 8.0), ("rectangular", 20.0),
            ("gaussian(2)", 2.0), ("gaussian(2)", 8.0), ("gaussian(2)", 20.0),
            ("grape", 8.0),
        ]

    def test_errors_in_range(self, records):
        for r in records:
            assert 0 <= r.error_phi2 <= 1 and 0 <= r.error_phi1 <= 1
            assert r.note == ""

    def test_grape_beats_baselines(self, records):
        grape = [r for r in records if r.family == "grape"][0]
        others = [r for r in records if r.t_g == 8.0 and r.family != "grape"]
        assert all(grape.error_phi2 <= r.error_phi2 for r in others)

    def test_reproducible(self, records):
        again = run_sweep(SweepPlan(**SMALL_PLAN))
        assert [(r.family, r.t_g, r.error_phi2, r.error_phi1, r.iterations) for r in again] == [
            (r.family, r.t_g, r.error_phi2, r.error_phi1, r.iterations) for r in records
        ]

    def test_parallel_matches_serial(self, records):
        parallel = run_sweep(SweepPlan(**SMALL_PLAN, workers=2))
        assert [(r.family, r.t_g, r.error_phi2) for r in parallel] == [(r.family, r.t_g, r.error_phi2) for r in records]

    def test_records_for(self, records):
        t, e = records_for(records, "rectangular")
        np.testing.assert_array_equal(t, [2.0, 8.0, 20.0])
        assert e.shape == (3,)


@pytest.mark.filterwarnings("ignore:slice length")
def test_failed_point_is_recorded():
    # first-order gradients on coarse slices fail the oracle pre-check
    plan = SweepPlan(grape_grid=np.array([3.2]), families=("grape",), n_slices=8,
                     optimizer=OptimizerConfig(gradient_method="first-order", restarts=1))
    (record,) = run_sweep(plan)
    assert record.error_phi2 == 1.0 and record.error_phi1 == 1.0
    assert record.note.startswith("GradientOracleMismatch")


class TestCrossings:
    t = np.array([1.0, 2.0, 3.0, 4.0, 5.0])

    def test_persistent(self):
        assert persistent_crossing(self.t, [1, 1e-5, 1e-3, 1e-5, 1e-6], 1e-4) == 4.0

    def test_never_settles(self):
        assert persistent_crossing(self.t, [1, 1e-5, 1e-5, 1e-5, 1], 1e-4) is None

    def test_always_below(self):
        assert persistent_crossing(self.t, [0] * 5, 1e-4) == 1.0

    def test_first_below(self):
        assert first_below(self.t, [1, 1e-5, 1e-3, 1e-5, 1e-6], 1e-4) == 2.0
        assert first_below(self.t, [1] * 5, 1e-4) is None

    def test_shifted_optimum(self):
        recs = [SweepRecord("grape-penalized", t, 0, e, e) for t, e in zip([8.0, 7.5, 7.0], [1e-9, 1e-7, 1e-3])]
        assert shifted_optimum(recs) == 7.5


class TestShapes:
    def test_rise_time(self):
        p = ControlPulse(4.0, [0.0, 0.2, 0.6, 1.0, 1.0, 0.6, 0.2, 0.0])
        assert rise_time(p) == pytest.approx(1.25)

    def test_lobes(self):
        p = ControlPulse(6.0, [1, 1, 0, 0, 2, 0, -1, -1, 0])
        assert lobes(p) == [(0, 2), (4, 5), (6, 8)]

    def test_peak_profile(self):
        p = ControlPulse(6.0, [0, -0.1, -0.05, 0.01, 0.3, 0.6, 0.2, 0, -0.4])
        assert peak_profile(p) == [-0.1, 0.6, -0.4]

    def test_milestones_of_composite_sequence(self, params):
        rho = 1.0
        t_g = composite_duration(rho)
        pulse = composite_sequence(t_g, np.pi / 8, np.pi / 4, rho, 256)
        traj = evolve_state(params, pulse, basis_state(0))
        m = population_milestones(pulse, traj)
        assert set(m) == {"p1_first_wait", "pL_second_wait_max", "pL_final"}
        assert 0 < m["p1_first_wait"] < 1 and 0 <= m["pL_final"] <= 1

    def test_milestones_need_three_lobes(self, params):
        pulse = rectangular_pulse(3.0, 64)
        with pytest.raises(ValueError):
            population_milestones(pulse, evolve_state(params, pulse, basis_state(0)))


def test_loglog_slope_exact():
    x = np.geomspace(0.01, 1, 10)
    assert loglog_slope(x, 3 * x**2) == pytest.approx(2.0, abs=1e-12)


def test_envelope_picks_chunk_maxima():
    x = np.arange(6.0)
    ex, ey = envelope(x, [1, 3, 2, 0, 5, 4], 3)
    np.testing.assert_array_equal(ex, [1, 2, 4])
    np.testing.assert_array_equal(ey, [3, 2, 5])


def test_composite_study_small_grid():
    study = composite_scaling_study(rho_grid=np.geomspace(0.01, 0.05, 16), bins=4)
    assert study.rho.shape == study.composite_error.shape == study.single_error.shape == (16,)
    assert np.all((study.composite_error > 0) & (study.composite_error < 1))
    assert 1.5 < study.composite_envelope_slope < 2.5


class TestRwa:
    def test_zero_pulse(self):
        pulse = ControlPulse(2 * np.pi, np.zeros(64))
        report = validate_rwa({"zero": pulse})
        assert all(r.infidelity <= 1e-10 for r in report.rows)
        assert [r.epsilon for r in report.rows] == [20.0, 30.0, 50.0]

    def test_rectangular_improves_with_epsilon(self):
        report = validate_rwa({"rect": rectangular_pulse(5.0, 64)})
        assert report.decreasing("rect")
        assert report.ratio("rect", 20.0, 50.0) > 1

    def test_missing_row(self):
        report = validate_rwa({"zero": ControlPulse(1.0, np.zeros(16))}, epsilons=(20.0,))
        with pytest.raises(KeyError):
            report.infidelity("zero", 30.0)
