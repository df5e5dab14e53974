"""Feedback synthesis for simple Hamiltonians: shaping and constraint routes.

Covectors alpha are paired with the shaped cometric

    g(alpha, beta) = alpha . Hhat(q) . beta,

which is used for the projection P onto W, for the dissipation rate and
for the Ŵ-conditions below.  Every covector splits uniquely as
alpha = P alpha + Q alpha with P alpha in W and Q alpha in Ŵ.

Tensors are stored as arrays acting on covector components:
``upsilon_tensor(q)[a, b, c]`` gives Υ(α1, α2, α3) = Y_abc α1_a α2_b α3_c.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from ._linalg import RANK_RTOL, numerical_rank, pivoted_solve
from .errors import DimensionError, MatchingError, RankDeficiencyError, ShapestabError
from .matching import MATCHING_TOL, matching_report, what_basis
from .model import MechanicalModel, ShapingCandidate
from .report import Report
from .sampling import Sampler, unit_vectors
from .tensor_core import Connection, base_derivative, flat_connection, poisson_bracket_simple

ArrayField = Union[np.ndarray, Callable[[np.ndarray], np.ndarray], None]

SINGLE_THRESHOLD = 1e-8


def _field(value, q):
    return value(q) if callable(value) else value


def antisymmetric_part(T):
    """Part of an n×n×n array antisymmetric in its first two indices."""
    T = np.asarray(T, dtype=float)
    return 0.5 * (T - T.transpose(1, 0, 2))


def full_symmetrization(T):
    T = np.asarray(T, dtype=float)
    perms = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
    return sum(T.transpose(p) for p in perms) / 6.0


def admissible_B(S):
    """B = S' - Sym(S') with S' the (1,2)-symmetric part of S.

    B is symmetric in its first two slots and B(γ, γ, γ) = 0 for every γ.
    """
    S = np.asarray(S, dtype=float)
    S = 0.5 * (S + S.transpose(1, 0, 2))
    return S - full_symmetrization(S)


@dataclass(frozen=True)
class GyroSpec:
    """Free data of the gyroscopic tensor.

    ``A`` (antisymmetric in its first two slots) and ``B`` (symmetric in
    them, vanishing on the diagonal) are n×n×n arrays or callables of q.
    Only their values on W×W×Ŵ and W×W×W are used.  Both default to zero.
    """

    A: ArrayField = None
    B: ArrayField = None

    @property
    def constant(self):
        return not callable(self.A) and not callable(self.B)

    def arrays(self, q, n):
        A = _field(self.A, q)
        B = _field(self.B, q)
        return (None if A is None else np.asarray(A, dtype=float),
                None if B is None else np.asarray(B, dtype=float))

    def check(self, q, n, rng, samples=20, tol=1e-12) -> Report:
        """Admissibility on random arguments (unprojected; both conditions
        are imposed on all of T*Q, which is stronger than needed)."""
        rep = Report("gyro_spec")
        A, B = self.arrays(q, n)
        for _ in range(samples):
            x, y, z = rng.standard_normal((3, n))
            if A is not None:
                d = abs(np.einsum("abc,a,b,c->", A, x, y, z) + np.einsum("abc,a,b,c->", A, y, x, z))
                if d > tol * max(1.0, np.abs(A).max()):
                    rep.fail(f"A not antisymmetric in its first two slots ({d:.2e})")
                    break
            if B is not None:
                d = abs(np.einsum("abc,a,b,c->", B, x, x, x))
                if d > tol * max(1.0, np.abs(B).max()) * max(1.0, np.dot(x, x) ** 1.5):
                    rep.fail(f"B does not vanish on the diagonal ({d:.2e})")
                    break
        return rep


@dataclass(frozen=True)
class DissipationSpec:
    """Dissipation data: direction ξ in W and rate μ.

    ``xi`` is a callable q ↦ covector (default: first actuation column,
    Euclidean normalized).  ``mu_mode`` is "projected" for
    μ = gain · g(Pα, Pα) or "zero" for μ ≡ 0.
    """

    xi: Optional[Callable[[np.ndarray], np.ndarray]] = None
    gain: float = 1.0
    mu_mode: str = "projected"

    def __post_init__(self):
        if self.mu_mode not in ("projected", "zero"):
            raise ValueError(f"unknown mu_mode {self.mu_mode!r}")
        if not (np.isfinite(self.gain) and self.gain >= 0):
            raise ValueError("dissipation gain must be finite and non-negative")


@dataclass(frozen=True)
class Frame:
    """Pointwise linear algebra shared by all constructions at one q."""

    q: np.ndarray
    Hm: np.ndarray
    Hh: np.ndarray
    Hh_inv: np.ndarray
    Xi: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    V: np.ndarray            # Ŵ basis (momenta columns)
    gram: np.ndarray         # g(V_k, V_l)
    xi: np.ndarray
    Y: Optional[np.ndarray]  # Υ array, None when identically zero
    A: Optional[np.ndarray]
    B: Optional[np.ndarray]
    transport: np.ndarray    # Hhat^{-1} H acting on covectors


class ShapingProblem:
    """Model, candidate, connection and free data of one synthesis.

    When every ingredient is q-independent the frame is computed once and
    reused, which keeps closed-loop simulation cheap.
    """

    def __init__(self, model: MechanicalModel, candidate: ShapingCandidate,
                 connection: Optional[Connection] = None,
                 gyro: Optional[GyroSpec] = None, diss: Optional[DissipationSpec] = None):
        if candidate.n != model.n:
            raise DimensionError(f"candidate dimension {candidate.n} differs from model dimension {model.n}")
        self.model = model
        self.candidate = candidate
        self.connection = connection if connection is not None else flat_connection(model.n)
        if self.connection.n != model.n:
            raise DimensionError("connection dimension differs from model dimension")
        self.gyro = gyro if gyro is not None else GyroSpec()
        self.diss = diss if diss is not None else DissipationSpec()
        self.n = model.n
        self._flat = self.connection.is_flat()
        self.constant = bool(model.kinetic.constant and candidate.kinetic_hat.constant
                             and model.constant_actuation and self.connection.constant
                             and self.gyro.constant and self.diss.xi is None)
        self._cached: Optional[Frame] = None

    # -- frame ----------------------------------------------------------

    def frame(self, q) -> Frame:
        if self.constant and self._cached is not None:
            return self._cached
        q = np.atleast_1d(np.asarray(q, dtype=float))
        if q.shape != (self.n,):
            raise DimensionError(f"q must have shape ({self.n},)")
        fr = self._build_frame(q)
        if self.constant:
            self._cached = fr
        return fr

    def _build_frame(self, q):
        n, model = self.n, self.model
        Hm = np.asarray(model.kinetic.A(q), dtype=float)
        Hh = np.asarray(self.candidate.kinetic_hat.A(q), dtype=float)
        Hh_inv = pivoted_solve(Hh, np.eye(n))
        Xi = model.actuation_matrix(q)
        if numerical_rank(Xi) != Xi.shape[1]:
            raise RankDeficiencyError(f"actuation rank drops at q={q.tolist()}")
        if Xi.shape[1]:
            G = Xi.T @ Hh @ Xi
            P = Xi @ pivoted_solve(G, Xi.T @ Hh)
        else:
            P = np.zeros((n, n))
        Q = np.eye(n) - P
        V = what_basis(model, self.candidate, q).vectors
        gram = V.T @ Hh @ V
        if self.diss.xi is not None:
            xi = np.asarray(self.diss.xi(q), dtype=float)
            if xi.shape != (n,):
                raise DimensionError(f"xi must have shape ({n},)")
        elif Xi.shape[1]:
            xi = Xi[:, 0] / np.linalg.norm(Xi[:, 0])
        else:
            xi = np.zeros(n)
        A, B = self.gyro.arrays(q, n)
        Y = self._upsilon_array(q, Hm, Hh)
        return Frame(q, Hm, Hh, Hh_inv, Xi, P, Q, V, gram, xi, Y, A, B, Hh_inv @ Hm)

    def _upsilon_array(self, q, Hm, Hh):
        F, G = self.model.kinetic, self.candidate.kinetic_hat
        gam = None if self._flat else self.connection(q)
        if F.constant and G.constant and gam is None:
            return None
        C = _bilinear_base_array(F, q, Hm, gam)
        Ch = _bilinear_base_array(G, q, Hh, gam)
        return np.einsum("iab,ic->abc", Ch, Hm) - np.einsum("iab,ic->abc", C, Hh)

    # -- pointwise pieces ----------------------------------------------

    def pairing(self, q, a, b):
        return float(np.asarray(a) @ self.frame(q).Hh @ np.asarray(b))

    def project(self, q, alpha):
        return self.frame(q).P @ np.asarray(alpha, dtype=float)

    def upsilon(self, q, a1, a2, a3):
        Y = self.frame(q).Y
        if Y is None:
            return 0.0
        return float(np.einsum("abc,a,b,c->", Y, a1, a2, a3))

    def gyro_eval(self, q, a1, a2, a3):
        """𝔷g(α1, α2, α3), built multilinearly from the W ⊕ Ŵ pieces."""
        fr = self.frame(q)
        parts = [(fr.P @ np.asarray(a, dtype=float), fr.Q @ np.asarray(a, dtype=float)) for a in (a1, a2, a3)]
        Y = fr.Y if fr.Y is not None else np.zeros((self.n,) * 3)
        A = fr.A if fr.A is not None else np.zeros((self.n,) * 3)
        B = fr.B if fr.B is not None else np.zeros((self.n,) * 3)

        def t(T, x, y, z):
            return np.einsum("abc,a,b,c->", T, x, y, z)

        total = 0.0
        for i1 in (0, 1):
            for i2 in (0, 1):
                x1, x2 = parts[0][i1], parts[1][i2]
                # third slot in Ŵ
                total += t(Y, x1, x2, parts[2][1])
                g3 = parts[2][0]
                if i1 == 1 and i2 == 1:
                    total += -t(Y, g3, x2, x1) - t(Y, g3, x1, x2)
                elif i1 == 0 and i2 == 1:
                    total += -0.5 * (t(Y, x1, g3, x2) + t(A, x1, g3, x2))
                elif i1 == 1 and i2 == 0:
                    total += -0.5 * (t(Y, x2, g3, x1) + t(A, x2, g3, x1))
                else:
                    total += t(B, x1, x2, g3)
        return float(total)

    def gyro_covector(self, q, p, free_data=True):
        """ℓ with ℓ(β) = 𝔷g(α, α, β) for every covector β.

        With ``free_data=False`` the tensors A and B are taken to be zero.
        """
        fr = self.frame(q)
        n = self.n
        if fr.Y is None and (not free_data or (fr.A is None and fr.B is None)):
            return np.zeros(n)
        g, s = fr.P @ p, fr.Q @ p
        out = np.zeros(n)
        w = np.zeros(n)
        if fr.Y is not None:
            Y = fr.Y
            out = fr.Q.T @ (np.einsum("a,abc->bc", p, Y).T @ p)           # Q^T Y(α, α, :)
            w = -2.0 * (Y.reshape(n, -1) @ np.outer(s, s).ravel())         # -2 Y(:, σ, σ)
            w = w - np.einsum("a,abc,c->b", g, Y, s)                       # -Y(γ, :, σ)
        if free_data and fr.A is not None:
            w = w - np.einsum("a,abc,c->b", g, fr.A, s)
        if free_data and fr.B is not None:
            w = w + np.einsum("a,b,abc->c", g, g, fr.B)
        return out + fr.P.T @ w

    def gyro_force(self, q, p):
        """z_g(α) = Hhat^{-1} ℓ, so that ⟨z_g, v⟩ = 𝔷g(α, α, Hhat^{-1} v)."""
        fr = self.frame(q)
        if fr.Y is None and fr.A is None and fr.B is None:
            return np.zeros(self.n)
        return self.frame(q).Hh_inv @ self.gyro_covector(q, p)

    def mu(self, q, p):
        if self.diss.mu_mode == "zero":
            return 0.0
        fr = self.frame(q)
        g = fr.P @ p
        return float(self.diss.gain * (g @ fr.Hh @ g))

    def dissipative_force(self, q, p):
        """Smooth form of the dissipative force for x = -μ ξ.

        z_d = -μ ξ - gain (1 - g(ξ, Pα)) Pα; it lies in W, vanishes at
        p = 0 and satisfies g(z_d, α) = -μ.
        """
        if self.diss.mu_mode == "zero":
            return np.zeros(self.n)
        fr = self.frame(q)
        k = self.diss.gain
        g = fr.P @ p
        hg = fr.Hh @ g
        return (-k * (g @ hg)) * fr.xi - (k * (1.0 - fr.xi @ hg)) * g

    def dissipative_force_raw(self, q, p, mu=None, x=None):
        """Direct evaluation x - (g(x, Pα) + μ) / g(Pα, Pα) · Pα.

        Undefined (ZeroDivisionError) where |Pα| <= 1e-10 |α| in the g-norm.
        """
        fr = self.frame(q)
        g = fr.P @ p
        gg = float(g @ fr.Hh @ g)
        if gg <= (RANK_RTOL ** 2) * float(p @ fr.Hh @ p):
            raise ZeroDivisionError("Pα = 0: the direct formula is undefined on Ŵ")
        if mu is None:
            mu = self.mu(q, p)
        if x is None:
            x = -mu * fr.xi
        return x - (float(x @ fr.Hh @ g) + mu) / gg * g

    def base_derivatives(self, q, p):
        """(𝔹H, 𝔹Ĥ) with the problem's connection."""
        F, G = self.model.kinetic, self.candidate.kinetic_hat
        if self._flat and F.constant and G.constant:
            return F.df(q), G.df(q)
        c = None if self._flat else self.connection
        return base_derivative(F, (q, p), c), base_derivative(G, (q, p), c)

    def shaping_term(self, q, p):
        """-Hhat^{-1} H 𝔹Ĥ + 𝔹H."""
        bH, bHh = self.base_derivatives(q, p)
        return bH - self.frame(q).transport @ bHh

    def bracket(self, q, p):
        return poisson_bracket_simple(self.model.kinetic, self.candidate.kinetic_hat, (q, p))

    def z_perp(self, q, p):
        """z⊥ ∈ Ŵ with g(z⊥, σ_k) = -Υ(α, α, σ_k) on the Ŵ basis."""
        fr = self.frame(q)
        if fr.V.shape[1] == 0 or fr.Y is None:
            return np.zeros(self.n)
        rhs = -(np.einsum("a,abc->bc", p, fr.Y).T @ p) @ fr.V
        c = pivoted_solve(fr.gram, rhs)
        return fr.V @ c

    def check_dissipation(self, q) -> Report:
        rep = Report("dissipation_spec")
        fr = self.frame(q)
        r = float(np.linalg.norm(fr.Q @ fr.xi))
        rep.values["xi_off_W"] = r
        if r > 1e-12 * max(1.0, np.linalg.norm(fr.xi)):
            rep.fail(f"xi leaves W at q={q.tolist()} (residual {r:.2e})")
        return rep


def _bilinear_base_array(F, q, A, gam):
    """C[i, a, b] with 𝔹𝔟(α1, α2)_i = C[i, a, b] α1_a α2_b."""
    C = 0.5 * np.asarray(F.dA(q), dtype=float).transpose(2, 0, 1)
    if gam is not None:
        T = np.einsum("bil,la->iab", gam, A)
        C = C + 0.5 * (T + T.transpose(0, 2, 1))
    return C


# --------------------------------------------------------------------------
# module-level operations


def project_W(candidate, model, q, alpha):
    return ShapingProblem(model, candidate).project(q, alpha)


def upsilon(model, candidate, connection, q, a1, a2, a3):
    return ShapingProblem(model, candidate, connection).upsilon(q, a1, a2, a3)


def upsilon_tensor(problem: ShapingProblem, q):
    Y = problem.frame(q).Y
    return np.zeros((problem.n,) * 3) if Y is None else Y


def gyro_eval(problem: ShapingProblem, q, a1, a2, a3):
    return problem.gyro_eval(q, a1, a2, a3)


def gyro_force(problem: ShapingProblem, q, p):
    return problem.gyro_force(q, np.asarray(p, dtype=float))


def dissipative_force(problem: ShapingProblem, q, p):
    return problem.dissipative_force(q, np.asarray(p, dtype=float))


# --------------------------------------------------------------------------
# control laws


@dataclass
class ControlLaw:
    """Fiber-preserving feedback y(q, p) with its provenance."""

    problem: ShapingProblem
    provenance: str
    evaluate: Callable[[np.ndarray, np.ndarray], np.ndarray]
    info: dict = field(default_factory=dict)

    def __call__(self, q, p):
        return self.evaluate(np.asarray(q, dtype=float), np.asarray(p, dtype=float))

    def mu(self, q, p):
        return self.problem.mu(np.asarray(q, dtype=float), np.asarray(p, dtype=float))

    def decrease_rate(self, q, p):
        """{Ĥ, H} + ⟨y, Hhat p⟩, i.e. dĤ/dt along the closed loop."""
        q = np.asarray(q, dtype=float)
        p = np.asarray(p, dtype=float)
        fr = self.problem.frame(q)
        return self.problem.bracket(q, p) + float(self(q, p) @ fr.Hh @ p)


def _require_matching(problem, sampler, tol):
    if sampler is None:
        sampler = Sampler(problem.model.box, count=50, seed=0)
    rep = matching_report(problem.model, problem.candidate, sampler, tol=tol)
    if not rep:
        raise MatchingError("candidate fails the matching conditions: " + "; ".join(rep.failures), rep)
    return rep


def control_CH(problem: ShapingProblem, *, sampler: Optional[Sampler] = None,
               check: bool = True, tol: float = MATCHING_TOL) -> ControlLaw:
    """y = z_d + z_g - Hhat^{-1} H 𝔹Ĥ + 𝔹H."""
    if check:
        _require_matching(problem, sampler, tol)

    def y(q, p):
        fr = problem.frame(q)
        out = problem.dissipative_force(q, p) + problem.shaping_term(q, p)
        if fr.Y is not None or fr.A is not None or fr.B is not None:
            out = out + problem.gyro_force(q, p)
        return out

    return ControlLaw(problem, "CH", y)


def lcb_parts(problem: ShapingProblem, q, p):
    """(z∥, z⊥) of the constraint route.

    z⊥ comes from the Ŵ Gram system; z∥ = z_d + P z_g is the smooth
    dissipative-plus-gyroscopic W-component (gyroscopic data A = B = 0).
    """
    zd = problem.dissipative_force(q, p)
    fr = problem.frame(q)
    if fr.Y is None:
        zpar = zd
    else:
        zpar = zd + fr.P @ (fr.Hh_inv @ problem.gyro_covector(q, p, free_data=False))
    return zpar, problem.z_perp(q, p)


def control_LCB(problem: ShapingProblem, *, sampler: Optional[Sampler] = None,
                check: bool = True, tol: float = MATCHING_TOL) -> ControlLaw:
    """y = z∥ - z⊥ - Hhat^{-1} H 𝔹Ĥ + 𝔹H."""
    if check:
        _require_matching(problem, sampler, tol)

    def y(q, p):
        zpar, zperp = lcb_parts(problem, q, p)
        return zpar - zperp + problem.shaping_term(q, p)

    return ControlLaw(problem, "LCB", y)


def single_actuator_control(problem: ShapingProblem, *, fallback: bool = True,
                            threshold: float = SINGLE_THRESHOLD,
                            sampler: Optional[Sampler] = None, check: bool = True) -> ControlLaw:
    """y = -(μ + {Ĥ, H}) / ⟨ξ, Hhat p⟩ · ξ for one actuator.

    Where |⟨ξ, Hhat p⟩| ≤ threshold·|ξ|·|Hhat p| the smooth shaping-route law
    is used instead (or an error is raised when ``fallback`` is False).
    """
    if problem.model.m != 1:
        raise ValueError(f"the single-actuator law needs m = 1, model has m = {problem.model.m}")
    smooth = control_CH(problem, sampler=sampler, check=check) if fallback else None
    stats = {"fallbacks": 0}

    def y(q, p):
        fr = problem.frame(q)
        v = fr.Hh @ p
        den = float(fr.xi @ v)
        if abs(den) <= threshold * np.linalg.norm(fr.xi) * np.linalg.norm(v):
            if smooth is None:
                raise ShapestabError(f"single-actuator denominator vanishes at q={q.tolist()}, p={p.tolist()}")
            stats["fallbacks"] += 1
            return smooth(q, p)
        return -(problem.mu(q, p) + problem.bracket(q, p)) / den * fr.xi

    return ControlLaw(problem, "single-actuator", y, info=stats)


def zero_law(problem: ShapingProblem) -> ControlLaw:
    """y ≡ 0 (open loop); the attached problem carries μ ≡ 0 so that the
    monitored rate is that of the uncontrolled flow."""
    zeros = np.zeros(problem.n)
    quiet = ShapingProblem(problem.model, problem.candidate, problem.connection, problem.gyro,
                           DissipationSpec(problem.diss.xi, problem.diss.gain, "zero"))
    return ControlLaw(quiet, "open-loop", lambda q, p: zeros)


def lcb_feasibility(problem: ShapingProblem, sampler: Sampler, tol: float = MATCHING_TOL) -> Report:
    """Necessary condition of the constraint route on Ŵ.

    For σ ∈ Ŵ every admissible law gives ⟨y, Hhat σ⟩ = 0, so the rate
    must be μ(σ) = -{Ĥ, H}(σ), which has to be non-negative at both σ and
    -σ.  Any sample where it is negative is a violation witness.
    """
    rep = Report("lcb_feasibility")
    rng = sampler.rng()
    worst, witness = 0.0, None
    for q in sampler.configurations():
        fr = problem.frame(q)
        k = fr.V.shape[1]
        if k == 0:
            continue
        for c in unit_vectors(rng, 2, k):
            s = sampler.radius * (fr.V @ c)
            for sg in (s, -s):
                req = -problem.bracket(q, sg)
                if req < worst:
                    worst, witness = req, {"q": q, "p": sg, "required_mu": req}
    rep.values["min_required_mu"] = worst
    if worst < -tol:
        rep.values["witness"] = witness
        rep.fail(f"required dissipation rate {worst:.3e} < 0 on Ŵ: no admissible law exists")
    return rep


def verify_equivalence(problem: ShapingProblem, sampler: Sampler, tol: float = 1e-9,
                       admissibility_tol: float = 1e-10) -> Report:
    """Check that the constraint-route law is a shaping-route law.

    The constraint-route z is split into the gyroscopic force with A = B = 0
    and z_d := z - z_g; z_d must be an admissible dissipative force and the
    law rebuilt from (z_d, z_g) must coincide with both the constraint-route
    law and an independently built shaping-route law.
    """
    rep = Report("verify_equivalence")
    base = ShapingProblem(problem.model, problem.candidate, problem.connection, GyroSpec(), problem.diss)
    lcb = control_LCB(base, sampler=sampler)
    ch = control_CH(base, check=False)
    q_all, p_all = sampler.states()
    sup_diff = sup_rebuild = sup_rate = sup_w = 0.0
    witness = None
    for q, p in zip(q_all, p_all):
        fr = base.frame(q)
        zpar, zperp = lcb_parts(base, q, p)
        z = zpar - zperp
        zg = base.gyro_force(q, p)
        zd = z - zg
        scale_z = max(1.0, float(np.abs(z).max()))
        rate = abs(float(zd @ fr.Hh @ p) + base.mu(q, p)) / scale_z
        off_w = float(np.linalg.norm(fr.Q @ zd)) / scale_z
        y_lcb = lcb(q, p)
        y_rebuilt = zd + zg + base.shaping_term(q, p)
        y_ch = ch(q, p)
        scale = max(1.0, float(np.abs(y_ch).max()))
        d = float(np.abs(y_ch - y_lcb).max()) / scale
        if d > sup_diff:
            sup_diff = d
            if d >= tol:
                witness = {"q": q, "p": p, "y_ch": y_ch, "y_lcb": y_lcb}
        sup_rebuild = max(sup_rebuild, float(np.abs(y_rebuilt - y_lcb).max()) / scale)
        sup_rate, sup_w = max(sup_rate, rate), max(sup_w, off_w)
    zeros = np.zeros(problem.n)
    zpar0, zperp0 = lcb_parts(base, q_all[0], zeros)
    zd_star = zpar0 - zperp0 - base.gyro_force(q_all[0], zeros)
    rep.values.update(sup_law_difference=sup_diff, sup_rebuild_difference=sup_rebuild,
                      sup_zd_rate_residual=sup_rate, sup_zd_W_residual=sup_w,
                      zd_at_zero_momentum=float(np.abs(zd_star).max()), samples=len(q_all), tolerance=tol)
    if sup_diff >= tol:
        rep.fail(f"shaping- and constraint-route laws differ by {sup_diff:.3e}")
        rep.values["witness"] = witness
    if sup_rebuild >= tol:
        rep.fail(f"law rebuilt from (z_d, z_g) differs by {sup_rebuild:.3e}")
    if sup_rate >= admissibility_tol:
        rep.fail(f"reconstructed z_d violates g(z_d, α) = -μ by {sup_rate:.3e}")
    if sup_w >= admissibility_tol:
        rep.fail(f"reconstructed z_d leaves W by {sup_w:.3e}")
    if np.any(zd_star != 0.0):
        rep.fail("reconstructed z_d does not vanish at zero momentum")
    return rep
