"""Underactuated mechanical models, shaping candidates and equilibria.

Built-in models (``registry_get(name, **params)``):

``pendulum`` (n=1, fully actuated; params m, l, g)
    Inverse inertia [1/(m l^2)], potential h(q) = m g l (1 - cos q), so
    q = 0 hangs down (h = 0) and q = pi is the upright equilibrium.
``flat2dof`` (n=2, m=1; params a, b, k1, k2)
    Inverse inertia diag(a, b), potential 1/2 (k1 q1^2 + k2 q2^2), force on
    q1.  Defaults a = b = 1, k1 = 0, k2 = 1.
``flat3dof`` (n=3, m=2; params a, b, c, k3)
    Inverse inertia diag(a, b, c), potential 1/2 k3 q3^2, forces on q1, q2.
``cartpend`` (n=2, m=1; params M, m, l, g)
    Cart position x and pole angle theta (theta = 0 upright).  Mass matrix
    [[M + m, m l cos th], [m l cos th, m l^2]]; inverse inertia is its
    inverse; potential m g l (cos th - 1); force on the cart.
``cartpend-lin`` (same params)
    ``cartpend`` linearized at the upright state: constant inverse inertia
    and potential -1/2 m g l theta^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._linalg import RANK_RTOL, null_space, numerical_rank, pivoted_solve
from .errors import DimensionError, DomainError, MatchingError, UnknownModelError
from .report import Report
from .sampling import Box
from .tensor_core import QuadBasicFn

FD_STEP = 1e-6
FD_RTOL = 1e-5


@dataclass(frozen=True)
class MechanicalModel:
    name: str
    n: int
    kinetic: QuadBasicFn
    actuation: Callable[[np.ndarray], np.ndarray]
    m: int
    box: Box
    params: dict = field(default_factory=dict, compare=False)
    constant_actuation: bool = False
    # Hessian of h when h is an origin-centred quadratic form.
    potential_hessian: Optional[np.ndarray] = field(default=None, compare=False)

    def H(self, q, p):
        return self.kinetic(q, p)

    def actuation_matrix(self, q):
        Xi = np.asarray(self.actuation(np.asarray(q, dtype=float)), dtype=float).reshape(self.n, -1)
        if Xi.shape[1] != self.m:
            raise DimensionError(f"actuation has {Xi.shape[1]} columns, model declares m={self.m}")
        return Xi


@dataclass(frozen=True)
class ShapingCandidate:
    """Shaped simple Hamiltonian 1/2 p.Hhat(q).p + hhat(q)."""

    kinetic_hat: QuadBasicFn
    name: str = "candidate"

    @property
    def n(self):
        return self.kinetic_hat.n

    def Hhat(self, q, p):
        return self.kinetic_hat(q, p)


@dataclass(frozen=True)
class Equilibrium:
    q_star: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q_star", np.atleast_1d(np.asarray(self.q_star, dtype=float)))


# --------------------------------------------------------------------------
# checks


def validate_equilibrium(model: MechanicalModel, e: Equilibrium, tol: float = 1e-10) -> Report:
    q = e.q_star
    if q.shape != (model.n,):
        raise DimensionError(f"q_star must have shape ({model.n},)")
    if not model.box.contains(q):
        raise DomainError(f"q_star={q.tolist()} lies outside the chart box of {model.name}")
    rep = Report("validate_equilibrium")
    grad = float(np.linalg.norm(model.kinetic.df(q)))
    fiber = float(np.linalg.norm(model.kinetic.A(q) @ np.zeros(model.n)))
    rep.values.update(q_star=q, grad_norm=grad, fiber_derivative_norm=fiber, tol=tol)
    if fiber != 0.0:
        rep.fail("fiber derivative does not vanish at p = 0")
    if not grad < tol:
        rep.fail(f"|dh(q*)| = {grad:.3e} exceeds {tol:.1e}")
    return rep


def _fd_gradient(f, q, h=FD_STEP):
    g = []
    for k in range(q.shape[0]):
        e = np.zeros_like(q)
        e[k] = h
        g.append((np.asarray(f(q + e), dtype=float) - np.asarray(f(q - e), dtype=float)) / (2 * h))
    return np.stack(g, axis=-1)


def _fd_mismatch(exact, approx):
    exact = np.asarray(exact, dtype=float)
    scale = max(1.0, float(np.max(np.abs(exact))) if exact.size else 1.0)
    return float(np.max(np.abs(exact - approx))) / scale if exact.size else 0.0


def check_derivatives(F: QuadBasicFn, q) -> tuple[float, float]:
    """Scaled central-difference mismatch of dA and df at q."""
    q = np.asarray(q, dtype=float)
    eA = _fd_mismatch(F.dA(q), _fd_gradient(F.A, q))
    ef = _fd_mismatch(F.df(q), _fd_gradient(lambda x: np.atleast_1d(F.f(x)), q)[0])
    return eA, ef


def consistency_check(obj, *, equilibrium: Optional[Equilibrium] = None, box: Optional[Box] = None,
                      samples: int = 100, seed: int = 0, rtol: float = FD_RTOL) -> Report:
    """Check analytic derivatives and structural invariants at random points.

    ``obj`` is a MechanicalModel or a ShapingCandidate; a candidate needs a
    ``box`` and, for the positivity checks, an ``equilibrium``.  The
    report lists every failing invariant with the offending point.
    """
    is_model = isinstance(obj, MechanicalModel)
    F = obj.kinetic if is_model else obj.kinetic_hat
    if box is None:
        if not is_model:
            raise ValueError("a candidate check needs a box")
        box = obj.box
    rep = Report("consistency_check")
    rep.values.update(target=obj.name, samples=samples)
    rng = np.random.default_rng(seed)
    pts = box.lower + (box.upper - box.lower) * rng.random((samples, F.n))
    if equilibrium is not None:
        q_star = equilibrium.q_star
        hq = float(F.f(q_star))
        rep.values["hhat_at_equilibrium"] = hq
        if not is_model and abs(hq) > 1e-12:
            rep.fail(f"potential at q*={q_star.tolist()} is {hq:.3e}, expected 0")
    ranks = set()
    worst_fd = 0.0
    for q in pts:
        loc = np.array2string(q, precision=6)
        eA, ef = check_derivatives(F, q)
        worst_fd = max(worst_fd, eA, ef)
        if eA > rtol:
            rep.fail(f"dA disagrees with finite differences at q={loc} (scaled error {eA:.2e})")
        if ef > rtol:
            rep.fail(f"df disagrees with finite differences at q={loc} (scaled error {ef:.2e})")
        A = F.A(q)
        if np.max(np.abs(A - A.T)) > 1e-12 * max(1.0, np.max(np.abs(A))):
            rep.fail(f"inverse inertia not symmetric at q={loc}")
        eig = np.linalg.eigvalsh(0.5 * (A + A.T))
        if is_model or equilibrium is not None:
            if eig[0] <= 0.0:
                rep.fail(f"inverse inertia not positive definite at q={loc} (min eig {eig[0]:.3e})")
        elif np.min(np.abs(eig)) <= RANK_RTOL * np.max(np.abs(eig)):
            rep.fail(f"shaped inverse inertia singular at q={loc}")
        if is_model:
            ranks.add(numerical_rank(obj.actuation_matrix(q)))
        elif equilibrium is not None:
            d = q - equilibrium.q_star
            if np.linalg.norm(d) > 1e-9 and not float(F.f(q)) > 0.0:
                rep.fail(f"shaped potential not positive at q={loc}")
        if len(rep.failures) > 20:
            break
    rep.values["max_fd_error"] = worst_fd
    if is_model:
        rep.values["actuation_ranks"] = sorted(ranks)
        if ranks != {obj.m}:
            rep.fail(f"actuation rank {sorted(ranks)} differs from m={obj.m} on the sample")
    return rep


# --------------------------------------------------------------------------
# candidates


def trivial_candidate(model: MechanicalModel) -> ShapingCandidate:
    """The model's own Hamiltonian used as shaped Hamiltonian."""
    return ShapingCandidate(model.kinetic, name=f"{model.name}:trivial")


def quadratic_potential(K, q_star=None):
    """(f, df) for 1/2 (q - q*).K.(q - q*)."""
    K = np.array(K, dtype=float)
    if q_star is None or not np.any(q_star):
        def f(q):
            return 0.5 * (q @ K @ q)

        def df(q):
            return K @ q

        return f, df
    c = np.asarray(q_star, dtype=float)

    def f(q):
        d = q - c
        return 0.5 * (d @ K @ d)

    def df(q):
        return K @ (q - c)

    return f, df


def derived_quadratic_shaping(model: MechanicalModel, Hhat, stiffness=1.0, name=None) -> ShapingCandidate:
    """Constant Hhat plus a quadratic hhat solving the potential matching.

    Needs a model with constant inverse inertia, constant actuation and an
    origin-centred quadratic potential (``potential_hessian``).  With V a
    basis of the annihilator of W, U = H Hhat^{-1} V and C = K V, matching
    for all q reads Khat U = C.  Its symmetric solutions are

        Khat = C (U^T C)^{-1} C^T + N S N^T,     N spanning ker U^T,

    for any symmetric S; ``stiffness`` sets S (scalar means S = s I).
    Khat is positive definite iff U^T C and S are.
    """
    if model.potential_hessian is None or not (model.kinetic.constant and model.constant_actuation):
        raise ValueError(f"{model.name} is not a constant-coefficient quadratic model")
    n = model.n
    Hhat = np.array(Hhat, dtype=float)
    if Hhat.shape != (n, n):
        raise DimensionError(f"Hhat must be {n}x{n}")
    q0 = np.zeros(n)
    Hm = model.kinetic.A(q0)
    K = np.asarray(model.potential_hessian, dtype=float)
    V = null_space(model.actuation_matrix(q0).T)
    U = Hm @ pivoted_solve(Hhat, V)
    C = K @ V
    S = U.T @ C
    if np.max(np.abs(S - S.T), initial=0.0) > 1e-10 * max(1.0, np.max(np.abs(S), initial=0.0)):
        raise MatchingError("no symmetric quadratic potential matches this Hhat (U^T K V not symmetric)")
    if V.shape[1] and np.any(C):
        Khat = C @ pivoted_solve(S, C.T)
    else:
        Khat = np.zeros((n, n))
    N = null_space(U.T) if V.shape[1] else np.eye(n)
    if N.shape[1]:
        Sn = np.atleast_2d(np.asarray(stiffness, dtype=float))
        if Sn.shape == (1, 1):
            Sn = Sn[0, 0] * np.eye(N.shape[1])
        Khat = Khat + N @ Sn @ N.T
    Khat = 0.5 * (Khat + Khat.T)
    f, df = quadratic_potential(Khat)
    cand = ShapingCandidate(QuadBasicFn.constant_matrix(Hhat, f, df), name=name or f"{model.name}:derived")
    object.__setattr__(cand, "Khat", Khat)
    return cand


# --------------------------------------------------------------------------
# built-in models


def _positive(params, *keys):
    for k in keys:
        v = params[k]
        if not (np.isfinite(v) and v > 0):
            raise ValueError(f"parameter {k} must be positive and finite, got {v!r}")


def _nonnegative(params, *keys):
    for k in keys:
        v = params[k]
        if not (np.isfinite(v) and v >= 0):
            raise ValueError(f"parameter {k} must be non-negative and finite, got {v!r}")


def _pendulum(m, l, g):
    _positive(dict(m=m, l=l, g=g), "m", "l", "g")
    Hm = np.array([[1.0 / (m * l * l)]])
    mgl = m * g * l
    kin = QuadBasicFn(1, lambda q: Hm, lambda q: np.zeros((1, 1, 1)),
                      lambda q: mgl * (1.0 - np.cos(q[0])),
                      lambda q: np.array([mgl * np.sin(q[0])]), constant=True)
    Xi = np.array([[1.0]])
    return MechanicalModel("pendulum", 1, kin, lambda q: Xi, 1,
                           Box([-2 * np.pi], [2 * np.pi]), constant_actuation=True)


def _flat2dof(a, b, k1, k2):
    _positive(dict(a=a, b=b), "a", "b")
    _nonnegative(dict(k1=k1, k2=k2), "k1", "k2")
    K = np.diag([k1, k2])
    f, df = quadratic_potential(K)
    kin = QuadBasicFn.constant_matrix(np.diag([a, b]), f, df)
    Xi = np.array([[1.0], [0.0]])
    return MechanicalModel("flat2dof", 2, kin, lambda q: Xi, 1, Box([-5.0, -5.0], [5.0, 5.0]),
                           constant_actuation=True, potential_hessian=K)


def _flat3dof(a, b, c, k3):
    _positive(dict(a=a, b=b, c=c), "a", "b", "c")
    _nonnegative(dict(k3=k3), "k3")
    K = np.diag([0.0, 0.0, k3])
    f, df = quadratic_potential(K)
    kin = QuadBasicFn.constant_matrix(np.diag([a, b, c]), f, df)
    Xi = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    return MechanicalModel("flat3dof", 3, kin, lambda q: Xi, 2, Box([-5.0] * 3, [5.0] * 3),
                           constant_actuation=True, potential_hessian=K)


def cartpend_mass_matrix(th, M, m, l):
    c = np.cos(th)
    return np.array([[M + m, m * l * c], [m * l * c, m * l * l]])


_CART_BOX = Box([-10.0, -1.2], [10.0, 1.2])


def _cartpend(M, m, l, g):
    _positive(dict(M=M, m=m, l=l, g=g), "M", "m", "l", "g")
    mgl = m * g * l

    def A(q):
        return np.linalg.inv(cartpend_mass_matrix(q[1], M, m, l))

    def dA(q):
        Hm = A(q)
        dM = np.array([[0.0, -m * l * np.sin(q[1])], [-m * l * np.sin(q[1]), 0.0]])
        out = np.zeros((2, 2, 2))
        out[:, :, 1] = -Hm @ dM @ Hm
        return out

    kin = QuadBasicFn(2, A, dA, lambda q: mgl * (np.cos(q[1]) - 1.0),
                      lambda q: np.array([0.0, -mgl * np.sin(q[1])]))
    Xi = np.array([[1.0], [0.0]])
    return MechanicalModel("cartpend", 2, kin, lambda q: Xi, 1, _CART_BOX, constant_actuation=True)


def _cartpend_lin(M, m, l, g):
    _positive(dict(M=M, m=m, l=l, g=g), "M", "m", "l", "g")
    K = np.diag([0.0, -m * g * l])
    f, df = quadratic_potential(K)
    kin = QuadBasicFn.constant_matrix(np.linalg.inv(cartpend_mass_matrix(0.0, M, m, l)), f, df)
    Xi = np.array([[1.0], [0.0]])
    return MechanicalModel("cartpend-lin", 2, kin, lambda q: Xi, 1, _CART_BOX,
                           constant_actuation=True, potential_hessian=K)


_REGISTRY: dict[str, tuple[Callable, dict]] = {}


def register(name, factory, defaults):
    _REGISTRY[name] = (factory, dict(defaults))


register("pendulum", _pendulum, dict(m=1.0, l=1.0, g=9.8))
register("flat2dof", _flat2dof, dict(a=1.0, b=1.0, k1=0.0, k2=1.0))
register("flat3dof", _flat3dof, dict(a=1.0, b=1.0, c=1.0, k3=1.0))
register("cartpend", _cartpend, dict(M=1.0, m=1.0, l=1.0, g=9.8))
register("cartpend-lin", _cartpend_lin, dict(M=1.0, m=1.0, l=1.0, g=9.8))


def list_models():
    return sorted(_REGISTRY)


def model_defaults(name):
    if name not in _REGISTRY:
        raise UnknownModelError(f"unknown model {name!r}; known: {', '.join(list_models())}")
    return dict(_REGISTRY[name][1])


def registry_get(name: str, **params) -> MechanicalModel:
    defaults = model_defaults(name)
    factory = _REGISTRY[name][0]
    unknown = set(params) - set(defaults)
    if unknown:
        raise ValueError(f"unknown parameter(s) for {name}: {', '.join(sorted(unknown))}")
    merged = {**defaults, **{k: float(v) for k, v in params.items()}}
    model = factory(**merged)
    object.__setattr__(model, "params", merged)
    return model


# Shaped inverse inertias used by the default derived candidates.
DEFAULT_HHAT = {
    "cartpend-lin": np.linalg.inv(np.array([[10.0, 3.0], [3.0, 1.0]])),
    "flat2dof": np.array([[2.0, 0.5], [0.5, 1.0]]),
    "flat3dof": np.array([[2.0, 0.3, 0.4], [0.3, 1.5, -0.2], [0.4, -0.2, 1.0]]),
}


def default_candidate(model: MechanicalModel, stiffness=1.0) -> ShapingCandidate:
    """Derived quadratic shaping for the constant-coefficient benchmarks."""
    if model.name not in DEFAULT_HHAT:
        raise ValueError(f"no default derived shaping for {model.name}")
    return derived_quadratic_shaping(model, DEFAULT_HHAT[model.name], stiffness)
