"""Small dense linear-algebra helpers with explicit rank tolerances."""

import numpy as np
import scipy.linalg as sla

from .errors import RankDeficiencyError

RANK_RTOL = 1e-10


def pivoted_solve(a, b, rtol=RANK_RTOL):
    """Solve ``a x = b`` through a column-pivoted QR factorization.

    Raises RankDeficiencyError when the smallest diagonal entry of R falls
    below ``rtol`` times the largest one.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.asarray(b, dtype=float)
    if a.shape[0] == 0:
        return np.zeros((0,) + b.shape[1:])
    q, r, piv = sla.qr(a, pivoting=True)
    d = np.abs(np.diag(r))
    if d[0] == 0.0 or d[-1] <= rtol * d[0]:
        raise RankDeficiencyError(
            f"matrix is rank deficient (|R_min|/|R_max| = {d[-1] / d[0] if d[0] else 0.0:.3e})"
        )
    xp = sla.solve_triangular(r, q.T @ b)
    x = np.empty_like(xp)
    x[piv] = xp
    return x


def pivoted_inverse(a, rtol=RANK_RTOL):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    return pivoted_solve(a, np.eye(a.shape[0]), rtol=rtol)


def numerical_rank(a, rtol=RANK_RTOL):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def null_space(a, rtol=RANK_RTOL):
    """Orthonormal basis of ker(a), columns sign-normalized.

    Each column is flipped so that its largest-magnitude entry is positive,
    which makes the output deterministic.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.shape[0] == 0 or not np.any(a):
        basis = np.eye(a.shape[1])
    else:
        basis = sla.null_space(a, rcond=rtol)
    for j in range(basis.shape[1]):
        col = basis[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            basis[:, j] = -col
    return basis
