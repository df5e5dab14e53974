"""Closed-loop integration with a vertical control force and Lyapunov monitoring."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError
from .model import Equilibrium, MechanicalModel
from .report import Report
from .synthesis import ControlLaw
from .tensor_core import CotangentState

STEP_TOL = 1e-8
RATE_TOL = 1e-6


@dataclass
class TrajectoryRecord:
    """Fixed-step trajectory; ``q`` and ``p`` have one row per time."""

    times: np.ndarray
    q: np.ndarray
    p: np.ndarray
    H_vals: np.ndarray
    Hhat_vals: np.ndarray
    mu_vals: np.ndarray
    dt: float
    status: str = "ok"
    message: str = ""
    max_decrease_violation: float = 0.0
    converged: Optional[bool] = None
    final_distance: Optional[float] = None

    @property
    def states(self):
        return [CotangentState(q, p) for q, p in zip(self.q, self.p)]

    def __len__(self):
        return self.times.shape[0]


def closed_loop_field(model: MechanicalModel, law: ControlLaw, q, p):
    """q' = H p;  p' = -1/2 dH[.,.,i] p p - dh + y."""
    F = model.kinetic
    qdot = F.A(q) @ p
    pdot = law(q, p) - F.df(q)
    if not F.constant:
        pdot = pdot - 0.5 * np.einsum("jki,j,k->i", F.dA(q), p, p)
    return qdot, pdot


def _energy(F, q, p):
    return 0.5 * (p @ F.A(q) @ p) + float(F.f(q))


def integrate(model: MechanicalModel, law: ControlLaw, x0, dt: float, T: float,
              box=None) -> TrajectoryRecord:
    """Classical RK4 with fixed step ``dt`` up to time ``T``.

    Leaving the chart box or producing a non-finite state stops the run;
    the record then holds every valid step and ``status`` says why.
    """
    if not (dt > 0 and np.isfinite(dt)):
        raise ValueError("dt must be positive")
    if not (T >= dt and np.isfinite(T)):
        raise ValueError("T must be finite and at least dt")
    if not isinstance(x0, CotangentState):
        x0 = CotangentState(*x0)
    box = model.box if box is None else box
    if not box.contains(x0.q):
        raise DomainError(f"initial configuration {x0.q.tolist()} lies outside the chart box")
    steps = int(round(T / dt))
    n = model.n
    Hhat_fn = law.problem.candidate.kinetic_hat
    qs = np.empty((steps + 1, n))
    ps = np.empty((steps + 1, n))
    q, p = x0.q.copy(), x0.p.copy()
    qs[0], ps[0] = q, p
    status, message = "ok", ""
    last = steps

    def f(x):
        qd, pd = closed_loop_field(model, law, x[:n], x[n:])
        return np.concatenate((qd, pd))

    x = np.concatenate((q, p))
    h2, h6 = 0.5 * dt, dt / 6.0
    for k in range(steps):
        k1 = f(x)
        k2 = f(x + h2 * k1)
        k3 = f(x + h2 * k2)
        k4 = f(x + dt * k3)
        x = x + h6 * (k1 + 2.0 * (k2 + k3) + k4)
        if not np.isfinite(x).all():
            status, message, last = "non-finite", f"non-finite state at step {k + 1}", k
            break
        if not box.contains(x[:n]):
            status, message, last = "left-box", f"left the chart box at t={(k + 1) * dt:.6g}", k
            break
        qs[k + 1], ps[k + 1] = x[:n], x[n:]
    qs, ps = qs[: last + 1], ps[: last + 1]
    times = dt * np.arange(last + 1)
    H = np.array([_energy(model.kinetic, a, b) for a, b in zip(qs, ps)])
    Hh = np.array([_energy(Hhat_fn, a, b) for a, b in zip(qs, ps)])
    mu = np.array([law.mu(a, b) for a, b in zip(qs, ps)])
    return TrajectoryRecord(times, qs, ps, H, Hh, mu, dt, status, message)


def lyapunov_monitor(record: TrajectoryRecord, step_tol: float = STEP_TOL,
                     rate_tol: float = RATE_TOL, rate_scale: Optional[float] = 0.0) -> Report:
    """Check that Ĥ decreases along the record at the prescribed rate -μ.

    (i) Ĥ[k+1] - Ĥ[k] <= step_tol; (ii) the central difference of Ĥ agrees
    with -μ at interior points within max(rate_tol, rate_scale·dt²).
    With ``rate_scale=None`` the scale is taken from the record: the
    central difference errs by about dt²/6·|d³Ĥ/dt³|, and twice that
    coefficient is used.
    """
    rep = Report("lyapunov_monitor")
    Hh, mu, dt = record.Hhat_vals, record.mu_vals, record.dt
    if rate_scale is None:
        d3 = np.diff(Hh, 3) / dt ** 3 if Hh.size >= 4 else np.zeros(1)
        rate_scale = float(np.abs(d3).max()) / 3.0
    inc = np.diff(Hh)
    max_inc = float(inc.max()) if inc.size else 0.0
    record.max_decrease_violation = max(0.0, max_inc)
    tol2 = max(rate_tol, rate_scale * dt * dt)
    if Hh.size >= 3:
        rate = (Hh[2:] - Hh[:-2]) / (2.0 * dt)
        err = np.abs(rate + mu[1:-1])
        max_err = float(err.max())
    else:
        err = np.zeros(0)
        max_err = 0.0
    rep.values.update(max_step_increase=max_inc, max_rate_error=max_err,
                      step_tolerance=step_tol, rate_tolerance=tol2, status=record.status)
    bad = np.nonzero(inc > step_tol)[0]
    if bad.size:
        k = int(bad[0])
        rep.fail(f"Hhat increased by {inc[k]:.3e} at step {k} (t={record.times[k]:.6g})")
    bad = np.nonzero(err > tol2)[0]
    if bad.size:
        k = int(bad[0]) + 1
        rep.fail(f"dHhat/dt differs from -mu by {err[k - 1]:.3e} at t={record.times[k]:.6g}")
    if record.status != "ok":
        rep.fail(record.message)
    return rep


def convergence_check(record: TrajectoryRecord, e: Equilibrium, radius: float) -> bool:
    d = float(np.linalg.norm(np.concatenate([record.q[-1] - e.q_star, record.p[-1]])))
    record.final_distance = d
    record.converged = bool(record.status == "ok" and d < radius)
    return record.converged


def write_csv(record: TrajectoryRecord, path):
    n = record.q.shape[1]
    header = ["t"] + [f"q{i + 1}" for i in range(n)] + [f"p{i + 1}" for i in range(n)] + ["H", "Hhat", "mu"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for k in range(len(record)):
            row = [record.times[k], *record.q[k], *record.p[k],
                   record.H_vals[k], record.Hhat_vals[k], record.mu_vals[k]]
            w.writerow([repr(float(v)) for v in row])
