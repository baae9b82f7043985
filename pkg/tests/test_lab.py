import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gmink.convex import square
from gmink.errors import InfeasibleHemisphere, SolverError
from gmink.gaussian import GaussianContext, SphereMeasure, lp_surface_measure
from gmink.lab import (
    CSV_COLUMNS,
    ExperimentRecord,
    WeakDistanceRule,
    emit_report,
    halving_schedule,
    perturb_measure,
    run_measure_continuity,
    run_p_continuity,
    summary_path,
    weak_distance,
)
from gmink.solver import SolverConfig

CTX2 = GaussianContext(2)
E1 = SphereMeasure(2, [[1.0, 0.0]], [1.0])


def atoms(dim=2):
    def build(seed):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(1, 8))
        u = rng.normal(size=(m, dim))
        return SphereMeasure(dim, u / np.linalg.norm(u, axis=1)[:, None], rng.uniform(0, 2, m))

    return st.integers(0, 2**32 - 1).map(build)


# --------------------------------------------------------------------------
# weak distance


def test_weak_distance_examples():
    assert weak_distance(E1, E1) == 0.0
    assert weak_distance(E1, SphereMeasure(2, [[1.0, 0.0]], [2.0])) == pytest.approx(1.0)
    prev = None
    for angle in (0.1, 0.01, 0.001):
        rot = SphereMeasure(2, [[np.cos(angle), np.sin(angle)]], [1.0])
        d = weak_distance(E1, rot)
        assert d > 0
        if prev is not None:
            assert d < prev
        prev = d
    assert prev < 2e-3


def test_weak_rule_family_size():
    rule = WeakDistanceRule(2)
    assert rule.features(np.eye(2)).shape == (2, 1 + 2 + 3 + 16)
    rule3 = WeakDistanceRule(3, hinge_count=16)
    assert rule3.features(np.eye(3)).shape == (3, 1 + 3 + 6 + 16)
    with pytest.raises(ValueError):
        weak_distance(E1, SphereMeasure(3, [[1.0, 0.0, 0.0]], [1.0]))


@settings(max_examples=40, deadline=None)
@given(atoms(), atoms(), atoms())
def test_weak_distance_is_a_pseudometric(a, b, c):
    rule = WeakDistanceRule(2)
    assert rule.distance(a, a) == 0.0
    assert rule.distance(a, b) == pytest.approx(rule.distance(b, a))
    assert rule.distance(a, c) <= rule.distance(a, b) + rule.distance(b, c) + 1e-12


# --------------------------------------------------------------------------
# perturbations and schedules


def test_halving_schedule():
    s = halving_schedule(0.1, 1e-4)
    assert s[0] == 0.1 and s[-1] <= 1e-4 < s[-2]
    assert all(b == a / 2 for a, b in zip(s, s[1:]))


def test_perturbation_is_seeded_and_scaled():
    mu = lp_surface_measure(CTX2, square(1.25), 1.0)
    a, b = perturb_measure(mu, 0.01, seed=3), perturb_measure(mu, 0.01, seed=3)
    assert np.array_equal(a.masses, b.masses) and np.array_equal(a.directions, b.directions)
    assert perturb_measure(mu, 0.0) is mu
    small = perturb_measure(mu, 0.001, seed=3)
    assert weak_distance(small, mu) < weak_distance(a, mu)
    assert np.allclose(np.linalg.norm(a.directions, axis=1), 1.0)


# --------------------------------------------------------------------------
# experiment families


def test_measure_family_converges():
    recs = run_measure_continuity(CTX2, square(1.25), 1.0, halving_schedule(0.1, 1e-3))
    dh = [r.hausdorff_distance for r in recs]
    assert dh[-1] < 1e-2
    assert all(b <= 1.1 * a for a, b in zip(dh, dh[1:]))
    # empirical ratio of solution distance to weak distance
    assert recs[-1].hausdorff_distance < 10 * recs[-1].weak_distance
    assert [r.index for r in recs] == list(range(len(recs)))


def test_unperturbed_family_is_a_fixed_point():
    recs = run_measure_continuity(CTX2, square(1.25), 2.0, [0.0, 0.0])
    assert all(r.hausdorff_distance < 1e-9 for r in recs)
    assert all(r.weak_distance == 0.0 for r in recs)


def test_constant_delta_does_not_converge():
    recs = run_measure_continuity(CTX2, square(1.25), 1.0, [0.05] * 4)
    assert min(r.hausdorff_distance for r in recs) > 1e-2


def test_constant_exponent_family():
    recs = run_p_continuity(CTX2, square(1.25), 1.5, [1.5, 1.5])
    assert all(r.hausdorff_distance < 1e-9 for r in recs)


def test_exponent_family_converges():
    recs = run_p_continuity(CTX2, square(1.25), 1.0, [1 + 1 / i for i in (2, 4, 8, 16, 32)])
    dh = [r.hausdorff_distance for r in recs]
    assert all(b < a for a, b in zip(dh, dh[1:]))


def test_exponent_schedule_is_validated():
    with pytest.raises(ValueError):
        run_p_continuity(CTX2, square(1.25), 1.0, [2.0])
    with pytest.raises(ValueError):
        run_p_continuity(CTX2, square(1.25), 2.0, [0.9])


def test_reference_body_needs_half_volume():
    from gmink.errors import DomainError

    with pytest.raises(DomainError):
        run_measure_continuity(CTX2, square(1.0), 1.0, [0.1])


def test_failures_carry_the_record_index():
    cfg = SolverConfig(max_iterations=1)
    with pytest.raises(SolverError) as info:
        run_measure_continuity(CTX2, square(1.25), 1.0, [0.0, 0.3], cfg)
    assert info.value.record_index in (0, 1)
    assert "record" in str(info.value)


def test_threads_do_not_change_results(monkeypatch):
    sched = [0.05, 0.01, 0.002]
    serial = run_measure_continuity(CTX2, square(1.25), 1.0, sched)
    monkeypatch.setenv("GMINK_THREADS", "3")
    threaded = run_measure_continuity(CTX2, square(1.25), 1.0, sched)
    assert [r.row() for r in serial] == [r.row() for r in threaded]


# --------------------------------------------------------------------------
# reports


def _read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_empty_report(tmp_path):
    path, spath = emit_report([], tmp_path / "empty.csv")
    assert _read_csv(path) == [list(CSV_COLUMNS)]
    assert json.load(open(spath)) == {"records": 0}


def test_report_rows_and_summary(tmp_path):
    recs = [ExperimentRecord(i, 0.1 / 2**i, 1e-2 / 2**i, 1e-1 / 2**i, 0.6, 1.8 + i / 100, 4, 1.2) for i in range(8)]
    path, spath = emit_report(recs[::-1], tmp_path / "run.csv")
    rows = _read_csv(path)
    assert len(rows) == 9
    assert [int(r[0]) for r in rows[1:]] == list(range(8))
    summary = json.load(open(spath))
    assert summary["records"] == 8
    assert summary["hausdorff_distance"]["max"] == max(r.hausdorff_distance for r in recs)
    assert summary["hausdorff_distance"]["final"] == recs[-1].hausdorff_distance
    assert summary["max_radial"]["max"] == pytest.approx(1.87)
    assert spath == summary_path(path)


def test_report_is_deterministic(tmp_path):
    sched = halving_schedule(0.1, 0.01)
    a = emit_report(run_measure_continuity(CTX2, square(1.25), 1.0, sched, seed=4), tmp_path / "a.csv")
    b = emit_report(run_measure_continuity(CTX2, square(1.25), 1.0, sched, seed=4), tmp_path / "b.csv")
    assert open(a[0], "rb").read() == open(b[0], "rb").read()


def test_unwritable_destination(tmp_path):
    with pytest.raises(OSError):
        emit_report([], tmp_path / "missing" / "run.csv")


def test_hemisphere_failure_propagates():
    mu = lp_surface_measure(CTX2, square(1.25), 1.0)
    with pytest.raises(InfeasibleHemisphere):
        from gmink.solver import solve_discrete

        solve_discrete(CTX2, SphereMeasure(2, mu.directions[:2], mu.masses[:2]), 1.0)
