import csv

import numpy as np
import pytest

from helpers import derived_problem
from shapestab.errors import DomainError
from shapestab.model import Equilibrium, MechanicalModel, registry_get, trivial_candidate
from shapestab.sampling import Box
from shapestab.simulator import (TrajectoryRecord, closed_loop_field, convergence_check, integrate,
                                 lyapunov_monitor, write_csv)
from shapestab.synthesis import (ControlLaw, DissipationSpec, ShapingProblem, control_CH, control_LCB,
                                 zero_law)
from shapestab.tensor_core import CotangentState, QuadBasicFn


def _pendulum_problem(gain=1.0, **params):
    model = registry_get("pendulum", **params)
    return ShapingProblem(model, trivial_candidate(model), diss=DissipationSpec(gain=gain))


def _damping_law(gain=1.0):
    # with Ĥ = H and a single actuator, the dissipative force is y = -gain·p
    return control_CH(_pendulum_problem(gain), check=False)


def _flipped(law):
    return ControlLaw(law.problem, "fault", lambda q, p: -law(q, p))


def test_free_motion_field():
    model = MechanicalModel("free", 2, QuadBasicFn.constant_matrix(np.eye(2)), lambda q: np.eye(2)[:, :1],
                            1, Box([-5, -5], [5, 5]), constant_actuation=True)
    law = zero_law(ShapingProblem(model, trivial_candidate(model)))
    qd, pd = closed_loop_field(model, law, np.array([0.3, -1.0]), np.array([2.0, 0.5]))
    assert np.array_equal(qd, [2.0, 0.5]) and np.array_equal(pd, [0.0, 0.0])


def test_field_vanishes_at_equilibrium():
    law = _damping_law()
    for qs in (0.0, np.pi):
        qd, pd = closed_loop_field(law.problem.model, law, np.array([qs]), np.zeros(1))
        # sin(pi) is 1.2e-16 in floating point
        assert np.all(qd == 0) and np.max(np.abs(pd)) < 1e-14
    pb = derived_problem("cartpend-lin")
    for law in (control_CH(pb, check=False), control_LCB(pb, check=False)):
        qd, pd = closed_loop_field(pb.model, law, np.zeros(2), np.zeros(2))
        assert np.all(qd == 0) and np.all(pd == 0)


def test_pendulum_field_finite_difference():
    law = _damping_law(0.7)
    model = law.problem.model
    rng = np.random.default_rng(0)
    h = 1e-6
    for _ in range(20):
        q, p = rng.uniform(-3, 3, 1), rng.standard_normal(1)
        qd, pd = closed_loop_field(model, law, q, p)
        Hp = (model.H(q, p + h) - model.H(q, p - h)) / (2 * h)
        Hq = (model.H(q + h, p) - model.H(q - h, p)) / (2 * h)
        assert qd[0] == pytest.approx(Hp, rel=1e-6)
        assert pd[0] == pytest.approx(-Hq - 0.7 * p[0], rel=1e-6, abs=1e-8)


def test_field_matches_finite_difference_for_q_dependent_metric():
    model = registry_get("cartpend")
    law = zero_law(ShapingProblem(model, trivial_candidate(model)))
    rng = np.random.default_rng(1)
    h = 1e-6
    for _ in range(10):
        q, p = rng.uniform(-1, 1, 2), rng.standard_normal(2)
        _, pd = closed_loop_field(model, law, q, p)
        Hq = np.array([(model.H(q + h * e, p) - model.H(q - h * e, p)) / (2 * h) for e in np.eye(2)])
        assert np.allclose(pd, -Hq, rtol=1e-6, atol=1e-8)


def test_energy_conservation_open_loop():
    model = registry_get("pendulum")
    law = zero_law(ShapingProblem(model, trivial_candidate(model)))
    rec = integrate(model, law, CotangentState([1.0], [0.5]), 1e-3, 10.0)
    assert rec.status == "ok" and len(rec) == 10001
    assert np.max(np.abs(rec.H_vals - rec.H_vals[0])) < 1e-8
    mon = lyapunov_monitor(rec)
    assert mon.passed, mon.failures


def test_constant_trajectory_at_equilibrium():
    law = _damping_law()
    rec = integrate(law.problem.model, law, CotangentState([0.0], [0.0]), 1e-2, 1.0)
    assert np.all(rec.q == 0) and np.all(rec.p == 0)
    assert convergence_check(rec, Equilibrium([0.0]), 1e-12)
    assert rec.final_distance == 0.0
    up = integrate(law.problem.model, law, CotangentState([np.pi], [0.0]), 1e-2, 1.0)
    assert np.max(np.abs(up.q - np.pi)) < 1e-14 and np.max(np.abs(up.p)) < 1e-14


def test_record_invariants_and_determinism():
    law = _damping_law()
    a = integrate(law.problem.model, law, CotangentState([0.5], [0.0]), 1e-2, 2.0)
    b = integrate(law.problem.model, law, CotangentState([0.5], [0.0]), 1e-2, 2.0)
    assert np.all(np.diff(a.times) > 0)
    assert np.allclose(np.diff(a.times), 1e-2)
    assert len({len(a.times), len(a.q), len(a.p), len(a.H_vals), len(a.Hhat_vals), len(a.mu_vals)}) == 1
    assert np.array_equal(a.q, b.q) and np.array_equal(a.p, b.p)
    assert len(a.states) == len(a)


def test_monitor_passes_for_pure_damping_and_converges():
    law = _damping_law()
    rec = integrate(law.problem.model, law, CotangentState([1.0], [0.0]), 1e-3, 30.0)
    # the central difference errs by about dt²/6·|d³Ĥ/dt³| ~ 2e-5 here,
    # so the tolerance takes the dt² scale from the record
    mon = lyapunov_monitor(rec, rate_scale=None)
    assert mon.passed, mon.failures
    assert mon.values["max_step_increase"] <= 1e-8
    assert rec.max_decrease_violation <= 1e-8
    assert convergence_check(rec, Equilibrium([0.0]), 1e-2)


def test_monitor_flags_flipped_damping_at_first_step():
    law = _flipped(_damping_law())
    rec = integrate(law.problem.model, law, CotangentState([0.5], [0.5]), 1e-3, 1.0)
    mon = lyapunov_monitor(rec)
    assert not mon.passed
    assert "at step 0 " in mon.failures[0]


def test_free_oscillation_does_not_converge():
    model = registry_get("pendulum")
    law = zero_law(ShapingProblem(model, trivial_candidate(model)))
    rec = integrate(model, law, CotangentState([1.0], [0.0]), 1e-2, 5.0)
    assert not convergence_check(rec, Equilibrium([0.0]), 1e-2)
    assert rec.converged is False


def test_closed_loop_routes_agree():
    pb = derived_problem("cartpend-lin")
    x0 = CotangentState([0.1, 0.1], [0.0, 0.0])
    a = integrate(pb.model, control_CH(pb, check=False), x0, 1e-3, 10.0)
    b = integrate(pb.model, control_LCB(pb, check=False), x0, 1e-3, 10.0)
    d = np.max(np.abs(np.hstack([a.q - b.q, a.p - b.p])))
    assert d < 1e-7


def test_box_exit_and_bad_arguments():
    model = registry_get("cartpend-lin")
    law = zero_law(ShapingProblem(model, trivial_candidate(model)))
    small = Box([-0.2, -0.2], [0.2, 0.2])
    rec = integrate(model, law, CotangentState([0.0, 0.1], [0.0, 0.0]), 1e-2, 10.0, box=small)
    assert rec.status == "left-box"
    assert len(rec) < 1001 and small.contains(rec.q[-1])
    mon = lyapunov_monitor(rec)
    assert not mon.passed and "chart box" in mon.failures[-1]
    with pytest.raises(DomainError):
        integrate(model, law, CotangentState([1.0, 0.0], [0, 0]), 1e-2, 1.0, box=small)
    with pytest.raises(ValueError):
        integrate(model, law, CotangentState([0.0, 0.0], [0, 0]), 0.0, 1.0)
    with pytest.raises(ValueError):
        integrate(model, law, CotangentState([0.0, 0.0], [0, 0]), 0.1, 0.01)


def test_non_finite_state_aborts():
    model = registry_get("pendulum")
    pb = ShapingProblem(model, trivial_candidate(model))
    law = ControlLaw(pb, "fault", lambda q, p: np.array([np.nan]) if p[0] > 0.05 else np.array([1.0]))
    rec = integrate(model, law, CotangentState([0.0], [0.0]), 1e-2, 1.0)
    assert rec.status == "non-finite"
    assert np.all(np.isfinite(rec.p)) and len(rec) > 1


def test_monitor_rate_scale():
    law = _damping_law()
    rec = integrate(law.problem.model, law, CotangentState([1.0], [0.0]), 1e-1, 5.0)
    strict = lyapunov_monitor(rec)
    auto = lyapunov_monitor(rec, rate_scale=None)
    assert auto.values["rate_tolerance"] >= strict.values["rate_tolerance"] == 1e-6
    assert auto.passed


def test_csv_format(tmp_path):
    law = _damping_law()
    rec = integrate(law.problem.model, law, CotangentState([0.5], [0.1]), 1e-2, 0.1)
    path = tmp_path / "t.csv"
    write_csv(rec, path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["t", "q1", "p1", "H", "Hhat", "mu"]
    assert len(rows) == len(rec) + 1
    assert float(rows[3][1]) == rec.q[2, 0]  # repr round-trips exactly
    assert isinstance(rec, TrajectoryRecord)
