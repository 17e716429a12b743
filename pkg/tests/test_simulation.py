import numpy as np
import pytest

from ambc_v2x.config import NetworkConfig
from ambc_v2x.simulation import SweepPlan, compare_modes, run_realization, run_sweep

SMALL = NetworkConfig(n_realizations=12)


def test_pure_noma_pins_reflection():
    outcome, metrics = run_realization(SMALL, 3, mode="pure_noma")
    np.testing.assert_array_equal(outcome.solution.xi, [0.0, 0.0])
    assert metrics.feasible == (outcome.status == "converged")


def test_run_realization_is_deterministic():
    a = run_realization(SMALL, 5)
    b = run_realization(SMALL, 5)
    np.testing.assert_array_equal(a[0].solution.beta, b[0].solution.beta)
    assert vars(a[1]).keys() == vars(b[1]).keys()
    for k in vars(a[1]):
        np.testing.assert_array_equal(getattr(a[1], k), getattr(b[1], k))


def test_infeasible_outcome_is_recorded_not_raised():
    outcome, metrics = run_realization(SMALL.replace(c_min=40.0), 0)
    assert outcome.status == "infeasible"
    assert not metrics.feasible and np.isnan(metrics.ee_mbpj)


def test_ambc_never_needs_more_power_than_pure_noma():
    for k in range(6):
        a, _ = run_realization(SMALL.replace(sigma_eps=0.0), k, "ambc")
        b, _ = run_realization(SMALL.replace(sigma_eps=0.0), k, "pure_noma")
        if a.status == b.status == "converged":
            assert a.solution.rsu_power_w.sum() <= b.solution.rsu_power_w.sum() * (1 + 1e-3)


def test_perfect_csi_point_has_zero_icsi():
    result = run_sweep(SweepPlan("sigma_eps", (0.0,), base=SMALL))
    for mode in ("ambc", "pure_noma"):
        assert result.point(0, mode).mean_icsi_w == 0.0


def test_sweep_is_reproducible_and_parallel_matches_serial():
    plan = SweepPlan("circuit_power", (2.0, 5.0), base=SMALL, n_realizations=6)
    a, b = run_sweep(plan), run_sweep(plan)
    c = run_sweep(SweepPlan("circuit_power", (2.0, 5.0), base=SMALL, n_realizations=6, workers=2))
    assert a.points == b.points == c.points


def test_sweep_statistics_shape():
    result = run_sweep(SweepPlan("circuit_power", (11.0, 2.0), base=SMALL, modes=("ambc",)))
    assert len(result.points) == 2
    for p in result.points:
        assert 0.0 <= p.feasibility_rate <= 1.0 and p.n == 12
        assert p.n_feasible == round(p.feasibility_rate * p.n)
    ee = result.series("ambc")
    assert ee[0] < ee[1]
    with pytest.raises(KeyError):
        result.point(0, "pure_noma")


@pytest.mark.parametrize("kwargs", [
    dict(param="bandwidth", values=(1.0,)),
    dict(param="p_max", values=()),
    dict(param="p_max", values=(40.0, 40.0)),
    dict(param="p_max", values=(37.0, 41.0, 39.0)),
    dict(param="p_max", values=(40.0,), modes=("oma",)),
    dict(param="p_max", values=(40.0,), n_realizations=0),
])
def test_plan_validation(kwargs):
    with pytest.raises(ValueError):
        SweepPlan(**kwargs)


def test_compare_modes_reports_each_point():
    result = run_sweep(SweepPlan("sigma_eps", (0.0, 1e-4), base=SMALL))
    report = compare_modes(result)
    assert [r.value for r in report] == [0.0, 1e-4]
    for r in report:
        assert r.n_pairs > 0 and np.isfinite(r.mean_diff)
        assert r.violation == (r.mean_diff < -r.stderr)
    with pytest.raises(ValueError):
        compare_modes(run_sweep(SweepPlan("sigma_eps", (0.0,), base=SMALL, modes=("ambc",))))
