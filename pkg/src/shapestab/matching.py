"""Matching conditions restricted to the complement subbundle Ŵ.

A candidate Ĥ matches H when the bracket {Ĥ, H} vanishes on Ŵ, i.e. on
momenta p with Hhat(q) p annihilating the actuation codistribution W.
The bracket splits into a cubic (kinetic) and a linear (potential) part in
p, and each must vanish on its own.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import RANK_RTOL, null_space, numerical_rank, pivoted_solve
from .errors import DimensionError, RankDeficiencyError
from .model import MechanicalModel, ShapingCandidate
from .report import Report
from .sampling import Sampler, unit_vectors
from .tensor_core import poisson_bracket_simple

MATCHING_TOL = 1e-9


@dataclass(frozen=True)
class WhatBasis:
    """Columns of ``vectors`` are momenta spanning Ŵ at ``q``."""

    q: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self):
        return self.vectors.shape[1]


def what_basis(model: MechanicalModel, candidate: ShapingCandidate, q) -> WhatBasis:
    q = np.atleast_1d(np.asarray(q, dtype=float))
    _check_dims(model, candidate, q)
    Xi = model.actuation_matrix(q)
    if numerical_rank(Xi) != model.m:
        raise RankDeficiencyError(f"actuation rank drops below m={model.m} at q={q.tolist()}")
    V = null_space(Xi.T)
    # columns of Hhat^{-1} V: Hhat p lies in the annihilator of W
    P = pivoted_solve(candidate.kinetic_hat.A(q), V) if V.shape[1] else np.zeros((model.n, 0))
    return WhatBasis(q, P)


def _check_dims(model, candidate, q, p=None):
    if candidate.n != model.n:
        raise DimensionError(f"candidate dimension {candidate.n} differs from model dimension {model.n}")
    if q.shape != (model.n,) or (p is not None and p.shape != (model.n,)):
        raise DimensionError(f"q and p must have shape ({model.n},)")


def _qp(model, candidate, q, p):
    q = np.atleast_1d(np.asarray(q, dtype=float))
    p = np.atleast_1d(np.asarray(p, dtype=float))
    _check_dims(model, candidate, q, p)
    return q, p


def kinetic_residual(model, candidate, q, p) -> float:
    """(dHhat^{ij}/dq^k H^{kl} - dH^{ij}/dq^k Hhat^{kl}) p_i p_j p_l."""
    q, p = _qp(model, candidate, q, p)
    F, G = model.kinetic, candidate.kinetic_hat
    v, vh = F.A(q) @ p, G.A(q) @ p
    return float(np.einsum("ijk,i,j,k->", G.dA(q), p, p, v) - np.einsum("ijk,i,j,k->", F.dA(q), p, p, vh))


def potential_residual(model, candidate, q, p) -> float:
    """(dhhat/dq^k H^{kl} - dh/dq^k Hhat^{kl}) p_l."""
    q, p = _qp(model, candidate, q, p)
    F, G = model.kinetic, candidate.kinetic_hat
    return float(np.asarray(G.df(q)) @ F.A(q) @ p - np.asarray(F.df(q)) @ G.A(q) @ p)


def bracket_parts(model, candidate, q, p):
    """Split {Ĥ,H}(q, p) into cubic and linear parts from evaluations at p and 2p.

    {Ĥ,H}(q, lam p) = lam^3 c + lam l, hence c = (b2 - 2 b1)/6 and
    l = (8 b1 - b2)/6.
    """
    H, Hh = model.kinetic, candidate.kinetic_hat
    b1 = poisson_bracket_simple(H, Hh, (q, p))
    b2 = poisson_bracket_simple(H, Hh, (q, 2.0 * p))
    return b1, (b2 - 2.0 * b1) / 6.0, (8.0 * b1 - b2) / 6.0


def matching_report(model, candidate, sampler: Sampler, tol: float = MATCHING_TOL,
                    combinations: int = 2) -> Report:
    """Sample Ŵ over the sampler's box and record the matching residuals.

    At each configuration the Ŵ basis columns and ``combinations`` random
    unit combinations of them (scaled to the sampler radius) are tested.
    """
    rep = Report("matching_report")
    rng = sampler.rng()
    qs = sampler.configurations()
    sup_k = sup_p = sup_b = sup_split = 0.0
    witness = None
    n_eval = 0
    for q in qs:
        B = what_basis(model, candidate, q)
        if B.dim == 0:
            continue
        coeffs = unit_vectors(rng, combinations, B.dim) if combinations else np.zeros((0, B.dim))
        moms = [B.vectors[:, j] for j in range(B.dim)]
        moms += [sampler.radius * (B.vectors @ c) for c in coeffs]
        for p in moms:
            k = kinetic_residual(model, candidate, q, p)
            pot = potential_residual(model, candidate, q, p)
            b, cubic, lin = bracket_parts(model, candidate, q, p)
            n_eval += 1
            split = max(abs(cubic - 0.5 * k), abs(lin - pot))
            scale = max(1.0, abs(k), abs(pot))
            sup_split = max(sup_split, split / scale)
            if witness is None and (abs(k) >= tol or abs(pot) >= tol):
                witness = {"q": q, "p": p, "kinetic": k, "potential": pot}
            sup_k, sup_p, sup_b = max(sup_k, abs(k)), max(sup_p, abs(pot)), max(sup_b, abs(b))
    rep.values.update(sup_kinetic_residual=sup_k, sup_potential_residual=sup_p,
                      sup_bracket=sup_b, sup_decomposition_error=sup_split,
                      tolerance=tol, samples=n_eval, what_dim=model.n - model.m)
    if sup_k >= tol:
        rep.fail(f"kinetic matching residual {sup_k:.3e} exceeds {tol:.1e}")
    if sup_p >= tol:
        rep.fail(f"potential matching residual {sup_p:.3e} exceeds {tol:.1e}")
    if sup_split > 1e-8:
        rep.fail(f"cubic/linear split disagrees with the separate residuals ({sup_split:.3e})")
    if witness is not None:
        rep.values["witness"] = witness
    return rep


def count_equations(n: int, m: int) -> tuple[int, int]:
    """Number of scalar equations in the traditional and in the simple
    kinetic matching systems for n degrees of freedom and m actuators."""
    if isinstance(n, bool) or isinstance(m, bool) or int(n) != n or int(m) != m:
        raise ValueError("n and m must be integers")
    n, m = int(n), int(m)
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    if m > n:
        raise ValueError(f"m={m} exceeds n={n}")
    k = n - m
    return n * (n + 1) * k // 2, (k + 2) * (k + 1) * k // 6
