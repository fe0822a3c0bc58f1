"""Beamformer constructions: aligning precoders plus ZF and TDMA baselines.

The aligning precoder for user k maps the current channels of the other
K-1 users onto their channels at an earlier reference slot. Every receiver
then observes, during the precoded slots, exactly the interference mixture
it already recorded at the reference slot, so a single subtraction cancels
all of it. With ``n_t = K - 1`` transmit antennas the stacked interferer
matrix is square and the construction is a direct solve.

Precoders are built unnormalized; power scaling is a per-slot scalar
applied by the protocol layer, which commutes with the alignment property.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import SingularMatrixError, solve_right

__all__ = [
    "IllConditionedChannelError",
    "PrecoderSet",
    "alignment_residual",
    "build_stia_precoders",
    "build_zf_precoder",
    "tdma_select",
]


class IllConditionedChannelError(Exception):
    """A stacked channel matrix was singular to tolerance.

    Under continuous fading this has probability zero; callers resample the
    offending block and count the event.
    """

    def __init__(self, user, condition: float):
        self.user = user
        self.condition = float(condition)
        super().__init__(
            f"stacked channel for user {user} has condition estimate {self.condition:.3e}"
        )


@dataclass
class PrecoderSet:
    """Per-user beamforming matrices for one slot, keyed by user index."""

    slot: int
    per_user: dict[int, np.ndarray]

    def __post_init__(self):
        users = sorted(self.per_user)
        k = len(users)
        if k < 2 or users != list(range(1, k + 1)):
            raise ValueError("per_user must map users 1..K")
        for u in users:
            v = np.asarray(self.per_user[u], dtype=complex)
            if v.shape != (k - 1, k - 1):
                raise ValueError(f"user {u}: precoder must be ({k - 1}, {k - 1})")
            if not np.all(np.isfinite(v)):
                raise ValueError(f"user {u}: precoder entries must be finite")
            self.per_user[u] = v

    @property
    def K(self) -> int:
        return len(self.per_user)

    def frobenius_power(self) -> float:
        """Sum of squared Frobenius norms over users.

        This is the expected transmit power of the slot for independent
        unit-variance symbols, and hence the denominator of the per-slot
        power scale.
        """
        return float(sum(np.sum(np.abs(v) ** 2) for v in self.per_user.values()))


def build_stia_precoders(current, outdated, K: int | None = None, slot: int = 0) -> PrecoderSet:
    """Aligning precoders for one slot from current and reference CSI.

    Parameters
    ----------
    current : (K, K-1) array
        Per-user channel rows at the slot being precoded.
    outdated : (K, K-1) array
        Per-user channel rows at the reference slot.
    K : int, optional
        User count; validated against the array shapes when given.
    slot : int
        Slot label carried on the returned :class:`PrecoderSet`.

    For each user k the stacked channels of the other users at the current
    slot are mapped onto their reference-slot counterparts, so
    ``current[j] @ V_k == outdated[j]`` for every interferer j != k.
    """
    cur = np.asarray(current, dtype=complex)
    out = np.asarray(outdated, dtype=complex)
    if cur.shape != out.shape:
        raise ValueError("current and outdated CSI must have identical shapes")
    if cur.ndim != 2:
        raise ValueError("expected (K, n_t) channel arrays")
    k_users, n_t = cur.shape
    if K is not None and K != k_users:
        raise ValueError(f"K={K} does not match channel arrays with {k_users} users")
    if n_t != k_users - 1:
        raise ValueError("the square construction needs n_t == K - 1 antennas")
    per_user = {}
    for k in range(1, k_users + 1):
        rows = [j for j in range(k_users) if j != k - 1]
        try:
            per_user[k] = solve_right(cur[rows], out[rows])
        except SingularMatrixError as err:
            raise IllConditionedChannelError(k, err.condition) from err
    return PrecoderSet(slot=slot, per_user=per_user)


def alignment_residual(precoders: PrecoderSet, current, outdated) -> float:
    """Worst relative mismatch of ``current[j] @ V_k`` against ``outdated[j]``.

    Max over users k and interferers j != k of the infinity-norm error
    relative to the infinity norm of the reference row.
    """
    cur = np.asarray(current, dtype=complex)
    out = np.asarray(outdated, dtype=complex)
    worst = 0.0
    for k, v in precoders.per_user.items():
        for j in range(cur.shape[0]):
            if j == k - 1:
                continue
            err = np.max(np.abs(cur[j] @ v - out[j]))
            denom = np.max(np.abs(out[j]))
            if denom == 0.0:
                worst = max(worst, float("inf") if err > 0 else 0.0)
            else:
                worst = max(worst, float(err / denom))
    return worst


def build_zf_precoder(current, served_users) -> np.ndarray:
    """Zero-forcing precoder for ``n_t`` served users with current CSI.

    Column i of the result has unit norm and is orthogonal to the channel
    of every served user except ``served_users[i]``.
    """
    cur = np.asarray(current, dtype=complex)
    if cur.ndim != 2:
        raise ValueError("expected a (K, n_t) channel array")
    k_users, n_t = cur.shape
    served = list(served_users)
    if len(served) != n_t or len(set(served)) != n_t:
        raise ValueError(f"served_users must be {n_t} distinct users")
    if not all(1 <= u <= k_users for u in served):
        raise ValueError(f"served users must lie in 1..{k_users}")
    h = cur[[u - 1 for u in served]]
    try:
        w = solve_right(h, np.eye(n_t, dtype=complex))
    except SingularMatrixError as err:
        raise IllConditionedChannelError(tuple(served), err.condition) from err
    return w / np.linalg.norm(w, axis=0, keepdims=True)


def tdma_select(slot: int, K: int) -> int:
    """Round-robin served user for a no-CSIT slot."""
    if slot < 1:
        raise ValueError("slots are 1-based")
    if K < 1:
        raise ValueError("K must be positive")
    return (slot % K) + 1
