"""Dense complex linear-algebra kernels for small beamforming problems.

Everything here operates on stacked channel matrices no larger than a
handful of rows, so direct LAPACK factorizations through numpy are used
throughout. Inverses are never formed explicitly; beamformer constructions
go through :func:`solve_right` instead.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "CONDITION_LIMIT",
    "DEFAULT_RANK_TOL",
    "SingularMatrixError",
    "condition_estimate",
    "rank_with_tol",
    "solve_right",
]

# Numerical rank cutoff relative to the largest singular value.
DEFAULT_RANK_TOL = 1e-9

# Condition estimate above which a stacked channel is treated as singular.
# Continuous fading makes exact singularity a probability-zero event, so the
# guard only catches numerically degenerate draws.
CONDITION_LIMIT = 1e8


class SingularMatrixError(np.linalg.LinAlgError):
    """Matrix is singular to working tolerance.

    Carries the offending condition estimate so callers can decide whether
    to resample the channel draw.
    """

    def __init__(self, condition: float, message: str | None = None):
        self.condition = float(condition)
        if message is None:
            message = (
                "matrix is singular to tolerance "
                f"(condition estimate {self.condition:.3e})"
            )
        super().__init__(message)


def _as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    return m


def condition_estimate(a) -> float:
    """Ratio of largest to smallest singular value; ``inf`` if singular."""
    m = _as_matrix(a)
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] == 0.0 or s[-1] == 0.0:
        return float("inf")
    return float(s[0] / s[-1])


def rank_with_tol(a, rel_tol: float = DEFAULT_RANK_TOL) -> int:
    """Numerical rank: singular values above ``rel_tol`` times the largest."""
    if not 0.0 < rel_tol < 1.0:
        raise ValueError("rel_tol must lie in (0, 1)")
    m = _as_matrix(a)
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))


def solve_right(a, b, cond_limit: float = CONDITION_LIMIT) -> np.ndarray:
    """Solve ``A X = B`` for X without forming the inverse of A.

    Parameters
    ----------
    a : array_like, square
    b : array_like, conformable with ``a``
    cond_limit : float
        Raise :class:`SingularMatrixError` when the condition estimate of
        ``a`` exceeds this value.

    For well-conditioned inputs the residual ``||A X - B||_inf`` stays below
    ``1e-10 * ||B||_inf``.
    """
    am = _as_matrix(a)
    bm = _as_matrix(b)
    if am.shape[0] != am.shape[1]:
        raise ValueError("A must be square")
    if bm.shape[0] != am.shape[0]:
        raise ValueError("A and B are not conformable")
    cond = condition_estimate(am)
    if cond > cond_limit:
        raise SingularMatrixError(cond)
    return np.linalg.solve(am, bm)
