"""Local-coordinate kernels on the cotangent bundle.

Every phase-space function handled here has the form

    F(q, p) = 1/2 p_i A^{ij}(q) p_j + f(q),

i.e. a quadratic form on each fiber plus a basic function.  Connections
act on covectors; their Christoffel array is indexed ``gamma[k, i, l]``
and enters base derivatives as

    (BF)_i = dF/dq^i + gamma[k, i, l] (dF/dp_l) p_k.

A curve (q(s), p(s)) is horizontal for such a connection when
dp_i/ds = gamma[k, i, l] p_k dq^l/ds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, ShapestabError


def _zero_fn(q):
    return 0.0


@dataclass(frozen=True)
class QuadBasicFn:
    """``1/2 p.A(q).p + f(q)`` with analytic derivatives.

    ``dA(q)[i, j, k]`` is dA^{ij}/dq^k and ``df(q)`` is the gradient of f.
    Set ``constant=True`` only when A does not depend on q; callers use it
    to cache q-independent work.
    """

    n: int
    A: Callable[[np.ndarray], np.ndarray]
    dA: Callable[[np.ndarray], np.ndarray]
    f: Callable[[np.ndarray], float] = _zero_fn
    df: Optional[Callable[[np.ndarray], np.ndarray]] = None
    constant: bool = False

    def __post_init__(self):
        if self.df is None:
            n = self.n
            object.__setattr__(self, "df", lambda q: np.zeros(n))

    def __call__(self, q, p):
        q, p = _qp(self.n, q, p)
        return 0.5 * p @ self.A(q) @ p + float(self.f(q))

    def kinetic_part(self) -> "QuadBasicFn":
        """The same quadratic form with the basic term dropped."""
        return QuadBasicFn(self.n, self.A, self.dA, constant=self.constant)

    @classmethod
    def constant_matrix(cls, A, f=None, df=None) -> "QuadBasicFn":
        A = np.array(A, dtype=float)
        n = A.shape[0]
        zeros = np.zeros((n, n, n))
        return cls(n, lambda q: A, lambda q: zeros,
                   f if f is not None else _zero_fn, df, constant=True)

    @classmethod
    def basic(cls, n, f, df) -> "QuadBasicFn":
        zA = np.zeros((n, n))
        zdA = np.zeros((n, n, n))
        return cls(n, lambda q: zA, lambda q: zdA, f, df, constant=True)


@dataclass(frozen=True)
class CotangentState:
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=float))
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        if q.ndim != 1 or q.shape != p.shape:
            raise DimensionError(f"q and p must be vectors of equal length, got {q.shape} and {p.shape}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def n(self):
        return self.q.shape[0]


@dataclass(frozen=True)
class Connection:
    """Torsion-free connection on T*Q given by its Christoffel array."""

    n: int
    christoffel: Callable[[np.ndarray], np.ndarray]
    constant: bool = False
    name: str = field(default="custom", compare=False)

    def __call__(self, q):
        g = np.asarray(self.christoffel(q), dtype=float)
        if g.shape != (self.n,) * 3:
            raise DimensionError(f"Christoffel array must be {(self.n,) * 3}, got {g.shape}")
        return g

    def torsion(self, q):
        """Largest |gamma[k, i, l] - gamma[k, l, i]| at q."""
        g = self(q)
        return float(np.max(np.abs(g - g.transpose(0, 2, 1)))) if self.n else 0.0

    def is_flat(self):
        return self.name == "flat"


def flat_connection(n: int) -> Connection:
    zeros = np.zeros((n, n, n))
    return Connection(n, lambda q: zeros, constant=True, name="flat")


def constant_connection(gamma) -> Connection:
    """Constant Christoffel symbols, symmetrized in the last two slots."""
    g = np.array(gamma, dtype=float)
    g = 0.5 * (g + g.transpose(0, 2, 1))
    return Connection(g.shape[0], lambda q: g, constant=True, name="constant")


def levi_civita(kinetic: QuadBasicFn) -> Connection:
    """Levi-Civita connection of the metric A(q)^{-1}, acting on covectors.

    With this choice the kinetic energy 1/2 p.A.p has zero base derivative.
    """
    n = kinetic.n

    def christoffel(q):
        Hm = kinetic.A(q)
        dH = kinetic.dA(q)
        g = np.linalg.inv(Hm)
        # dg[a, b, m] = d g_ab / d q^m
        dg = -np.einsum("ai,ijm,jb->abm", g, dH, g)
        # first kind: c[a, i, l] = 1/2 (d_i g_al + d_l g_ai - d_a g_il)
        c = 0.5 * (dg.transpose(0, 2, 1) + dg - dg.transpose(2, 0, 1))
        return np.einsum("ka,ail->kil", Hm, c)

    return Connection(n, christoffel, constant=kinetic.constant, name="levi-civita")


def _qp(n, q, p):
    q = np.atleast_1d(np.asarray(q, dtype=float))
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if q.shape != (n,) or p.shape != (n,):
        raise DimensionError(f"expected q, p of shape ({n},), got {q.shape} and {p.shape}")
    return q, p


def _state(F, s):
    if not isinstance(s, CotangentState):
        s = CotangentState(*s)
    if s.n != F.n:
        raise DimensionError(f"state has dimension {s.n}, function expects {F.n}")
    return s


def fiber_derivative(F: QuadBasicFn, s) -> np.ndarray:
    """dF/dp = A(q) p; the basic term does not contribute."""
    s = _state(F, s)
    return F.A(s.q) @ s.p


def base_derivative(F: QuadBasicFn, s, c: Optional[Connection] = None) -> np.ndarray:
    s = _state(F, s)
    q, p = s.q, s.p
    out = 0.5 * np.einsum("jki,j,k->i", F.dA(q), p, p) + np.asarray(F.df(q), dtype=float)
    if c is not None and c.n != F.n:
        raise DimensionError("connection and function dimensions differ")
    if c is not None and not c.is_flat():
        out = out + np.einsum("kil,l,k->i", c(q), F.A(q) @ p, p)
    return out


def fiber_base_bracket(F: QuadBasicFn, G: QuadBasicFn, s, c: Optional[Connection] = None) -> float:
    """{F, G} = <BF, FG> - <BG, FF> for a torsion-free connection ``c``."""
    s = _state(F, s)
    return float(base_derivative(F, s, c) @ fiber_derivative(G, s)
                 - base_derivative(G, s, c) @ fiber_derivative(F, s))


def poisson_bracket_simple(H: QuadBasicFn, Hhat: QuadBasicFn, s,
                           check: Optional[Connection] = None, rtol: float = 1e-9) -> float:
    """Canonical bracket {Hhat, H} of two simple functions at ``s``.

    The closed form needs no connection.  When ``check`` is given the
    value is recomputed from fiber and base derivatives taken with that
    connection and the two must agree to ``rtol`` (relative).
    """
    if H.n != Hhat.n:
        raise DimensionError("H and Hhat have different dimensions")
    s = _state(H, s)
    q, p = s.q, s.p
    Hm, Hh = H.A(q), Hhat.A(q)
    v, vh = Hm @ p, Hh @ p
    cubic = np.einsum("ijk,i,j,k->", Hhat.dA(q), p, p, v) - np.einsum("ijk,i,j,k->", H.dA(q), p, p, vh)
    linear = np.asarray(Hhat.df(q)) @ v - np.asarray(H.df(q)) @ vh
    value = float(0.5 * cubic + linear)
    if check is not None:
        other = fiber_base_bracket(Hhat, H, s, check)
        scale = max(1.0, abs(value), abs(other))
        if abs(other - value) > rtol * scale:
            raise ShapestabError(
                f"bracket mismatch: closed form {value!r} vs connection form {other!r}"
            )
    return value
