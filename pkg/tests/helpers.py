"""Shared fixtures: random simple Hamiltonians with analytic derivatives."""

import numpy as np

from shapestab.model import (DEFAULT_HHAT, MechanicalModel, ShapingCandidate,
                             derived_quadratic_shaping, registry_get)
from shapestab.sampling import Box
from shapestab.synthesis import ShapingProblem
from shapestab.tensor_core import QuadBasicFn, constant_connection


def random_spd(rng, n, shift=1.0):
    L = rng.standard_normal((n, n))
    return L @ L.T + shift * np.eye(n)


def random_sym(rng, n, scale=1.0):
    S = rng.standard_normal((n, n))
    return scale * 0.5 * (S + S.T)


def random_simple(rng, n, amp=0.2):
    """1/2 p.A(q).p + f(q) with A(q) = S0 + sum_k sin(q_k) S_k and
    f(q) = sum_k c_k cos(q_k) + 1/2 q.K.q."""
    S0 = random_spd(rng, n, shift=float(n))
    Sk = [random_sym(rng, n, amp) for _ in range(n)]
    c = rng.standard_normal(n)
    K = random_sym(rng, n)

    def A(q):
        return S0 + sum(np.sin(q[k]) * Sk[k] for k in range(n))

    def dA(q):
        return np.stack([np.cos(q[k]) * Sk[k] for k in range(n)], axis=-1)

    def f(q):
        return float(c @ np.cos(q) + 0.5 * q @ K @ q)

    def df(q):
        return -c * np.sin(q) + K @ q

    return QuadBasicFn(n, A, dA, f, df)


def random_state(rng, n, scale=1.0):
    return rng.uniform(-scale, scale, n), rng.standard_normal(n)


def derived_problem(name="cartpend-lin", connection_seed=None, **kw):
    """Derived shaping on a constant-coefficient model; with a seed, a random
    constant symmetric connection makes Υ nonzero."""
    model = registry_get(name)
    cand = derived_quadratic_shaping(model, DEFAULT_HHAT[name])
    conn = None
    if connection_seed is not None:
        rng = np.random.default_rng(connection_seed)
        conn = constant_connection(rng.standard_normal((model.n,) * 3))
    return ShapingProblem(model, cand, conn, **kw)


def actuated_inertia_problem(rng, n, m, connection=None, **kw):
    """Matching pair with q-dependent H and nonzero Υ.

    H(q) = S0 + sum_{k<m} sin(q_k) S_k depends only on the actuated
    coordinates, forces act on q_0..q_{m-1}, Hhat is constant and hhat = 0.
    For p in Ŵ, (Hhat p)^k = 0 for k < m, so every term of the kinetic
    residual vanishes; h depends on actuated coordinates only, so the
    potential residual vanishes too.
    """
    S0 = random_spd(rng, n, shift=float(n))
    Sk = [random_sym(rng, n, 0.3) for _ in range(m)]

    def A(q):
        return S0 + sum(np.sin(q[k]) * Sk[k] for k in range(m))

    def dA(q):
        out = np.zeros((n, n, n))
        for k in range(m):
            out[:, :, k] = np.cos(q[k]) * Sk[k]
        return out

    c = np.zeros(n)
    c[:m] = rng.uniform(0.5, 1.5, m)
    kin = QuadBasicFn(n, A, dA, lambda q: float(c @ np.cos(q)), lambda q: -c * np.sin(q))
    Xi = np.eye(n)[:, :m]
    model = MechanicalModel("actuated-inertia", n, kin, lambda q: Xi, m,
                            Box([-2.0] * n, [2.0] * n), constant_actuation=True)
    cand = ShapingCandidate(QuadBasicFn.constant_matrix(random_spd(rng, n)))
    return ShapingProblem(model, cand, connection, **kw)
