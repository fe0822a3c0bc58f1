"""Signal-level execution of one alignment round, plus ZF/TDMA baselines.

A round spans K slots falling in K different coherence blocks. The first
slot broadcasts every user's K-1 symbols unprecoded (the transmitter is
still blind there); each of the K-1 later slots is precoded so that every
receiver sees the same interference mixture it recorded in the first slot.
Subtracting the broadcast observation from each precoded observation
removes all inter-user interference and leaves a (K-1) x (K-1) effective
channel over the user's own symbols, which is full rank with probability
one, so the round delivers K(K-1) symbols in K slots.

Sign conventions: received-signal differences are taken as
``y[precoded slot] - y[broadcast slot]`` while effective-channel rows are
``h[ref] - h[n] V[n]``; the round driver reconciles the two by negating
the difference vector before decoding.

At finite transmit power a scalar is applied per slot so the expected
transmit power equals the budget; receivers divide it back out (they know
their effective channels), which keeps the cancellation exact. Noise-free
operation (``noise_std=0``) is a first-class configuration and the oracle
path for the alignment and decoding checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import complex_normal
from .numerics import (
    CONDITION_LIMIT,
    DEFAULT_RANK_TOL,
    condition_estimate,
    rank_with_tol,
)
from .precoding import (
    IllConditionedChannelError,
    PrecoderSet,
    build_stia_precoders,
    build_zf_precoder,
)

__all__ = [
    "DecodeFailureError",
    "EffectiveChannel",
    "ReceivedSignal",
    "StiaRoundResult",
    "SymbolBlock",
    "batch_effective_channels",
    "batch_rounds",
    "cancel_interference",
    "decode_round",
    "difference_noise_covariance",
    "draw_round_channels",
    "effective_channel",
    "phase_one_transmit",
    "phase_two_transmit",
    "receive",
    "round_rate",
    "run_stia_round",
    "simulate_stia_round",
    "slot_power_scale",
    "tdma_slot",
    "tdma_transmit",
    "whitening_matrix",
    "zf_slot",
    "zf_transmit",
]


class DecodeFailureError(Exception):
    """The effective channel was rank deficient; the round cannot be decoded."""

    def __init__(self, condition: float):
        self.condition = float(condition)
        super().__init__(
            f"effective channel is rank deficient (condition estimate {self.condition:.3e})"
        )


@dataclass
class SymbolBlock:
    """K-1 data symbols per user for one round, keyed by user index."""

    per_user: dict[int, np.ndarray]

    def __post_init__(self):
        users = sorted(self.per_user)
        k = len(users)
        if k < 2 or users != list(range(1, k + 1)):
            raise ValueError("per_user must map users 1..K")
        for u in users:
            vec = np.asarray(self.per_user[u], dtype=complex).reshape(-1)
            if vec.shape != (k - 1,):
                raise ValueError(f"user {u}: expected {k - 1} symbols, got {vec.shape[0]}")
            self.per_user[u] = vec

    @property
    def K(self) -> int:
        return len(self.per_user)

    @classmethod
    def zeros(cls, K: int) -> "SymbolBlock":
        return cls({k: np.zeros(K - 1, dtype=complex) for k in range(1, K + 1)})

    @classmethod
    def random(cls, K: int, rng: np.random.Generator) -> "SymbolBlock":
        """Independent unit-variance CN(0,1) symbols for every user."""
        return cls({k: complex_normal(rng, K - 1) for k in range(1, K + 1)})

    def stacked(self) -> np.ndarray:
        """(K, K-1) array with user k on row k-1."""
        return np.stack([self.per_user[u] for u in sorted(self.per_user)])


@dataclass
class ReceivedSignal:
    """Scalar observation of every user at one slot."""

    slot: int
    per_user: dict[int, complex]


@dataclass
class EffectiveChannel:
    """Post-cancellation channel of one user over a round.

    Row m is ``h[ref] - h[n_m] V[n_m]`` for the m-th precoded slot; full
    rank K-1 with probability one under continuous fading.
    """

    user: int
    matrix: np.ndarray
    constituent_slots: tuple[int, ...]


@dataclass
class StiaRoundResult:
    """Outputs of one executed round."""

    decoded: SymbolBlock
    residual_interference: dict[int, float]
    per_user_rate_bits: dict[int, float] | None
    resamples: int = 0
    effective_channels: dict[int, EffectiveChannel] = field(default_factory=dict)


def difference_noise_covariance(K: int, noise_var: float = 1.0) -> np.ndarray:
    """Covariance of the K-1 differenced noises.

    The broadcast-slot noise is common to every difference, giving
    ``noise_var`` times 2 on the diagonal and 1 off it.
    """
    m = K - 1
    return noise_var * (np.eye(m) + np.ones((m, m)))


def whitening_matrix(K: int) -> np.ndarray:
    """Inverse square root of :func:`difference_noise_covariance` at unit variance."""
    m = K - 1
    beta = (1.0 / np.sqrt(K) - 1.0) / m
    return np.eye(m) + beta * np.ones((m, m))


def _inverse_sqrt(cov: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(np.asarray(cov, dtype=complex))
    if np.any(w <= 0):
        raise ValueError("noise covariance must be positive definite")
    return (v * (w**-0.5)) @ v.conj().T


def slot_power_scale(power: float | None, K: int, precoders: PrecoderSet | None = None) -> float:
    """Scalar making the expected slot power equal ``power`` for unit-variance symbols.

    ``power=None`` disables scaling (the unnormalized oracle configuration).
    The broadcast slot behaves like identity precoders, so its denominator
    is K(K-1).
    """
    if power is None:
        return 1.0
    if power <= 0:
        raise ValueError("power must be positive")
    denom = float(K * (K - 1)) if precoders is None else precoders.frobenius_power()
    return float(np.sqrt(power / denom))


def phase_one_transmit(symbols: SymbolBlock, power: float | None = None) -> np.ndarray:
    """Broadcast-slot transmit vector: the plain sum of all users' symbols."""
    x = symbols.stacked().sum(axis=0)
    return slot_power_scale(power, symbols.K) * x


def phase_two_transmit(
    symbols: SymbolBlock, precoders: PrecoderSet, power: float | None = None
) -> np.ndarray:
    """Precoded-slot transmit vector: superposition of per-user beamformed symbols."""
    if precoders.K != symbols.K:
        raise ValueError("precoders and symbols disagree on the user count")
    x = sum(precoders.per_user[k] @ symbols.per_user[k] for k in range(1, symbols.K + 1))
    return slot_power_scale(power, symbols.K, precoders) * x


def receive(h, x, noise_std: float = 0.0, rng: np.random.Generator | None = None) -> complex:
    """Scalar observation ``h^T x`` plus CN(0, noise_std^2) noise."""
    hv = np.asarray(h, dtype=complex).reshape(-1)
    xv = np.asarray(x, dtype=complex).reshape(-1)
    if hv.shape != xv.shape:
        raise ValueError("channel and transmit vector lengths differ")
    y = complex(hv @ xv)
    if noise_std:
        if rng is None:
            raise ValueError("an rng is required when noise_std > 0")
        y += noise_std * complex(complex_normal(rng))
    return y


def cancel_interference(signals, user: int) -> np.ndarray:
    """Differences ``y[n_m] - y[ref]`` for one user over a round.

    ``signals`` holds one :class:`ReceivedSignal` per round slot with the
    broadcast slot first. Noise-free, entry m depends only on the user's
    own symbols because the interference mixtures are identical by
    construction.
    """
    ys = np.array([s.per_user[user] for s in signals], dtype=complex)
    if ys.size < 2:
        raise ValueError("need the broadcast slot plus at least one precoded slot")
    return ys[1:] - ys[0]


def effective_channel(
    user: int, ref_channels, slot_channels, precoders, slots=None
) -> EffectiveChannel:
    """Effective channel of one user: rows ``h[ref] - h[n_m] V[n_m]``."""
    ref = np.asarray(ref_channels, dtype=complex)
    rows = []
    for ch, pre in zip(slot_channels, precoders, strict=True):
        h = np.asarray(ch, dtype=complex)[user - 1]
        rows.append(ref[user - 1] - h @ pre.per_user[user])
    if slots is None:
        slots = tuple(range(len(rows) + 1))
    return EffectiveChannel(user=user, matrix=np.stack(rows), constituent_slots=tuple(slots))


def decode_round(
    eff, differences, noise_cov=None, rank_tol: float = DEFAULT_RANK_TOL
) -> np.ndarray:
    """Recover one user's symbols from its effective channel and differences.

    Noise-free this is a plain solve (exact recovery). With a noise
    covariance the differences are whitened first and solved by least
    squares. Raises :class:`DecodeFailureError` on a rank-deficient
    effective channel.
    """
    mat = eff.matrix if isinstance(eff, EffectiveChannel) else np.asarray(eff, dtype=complex)
    d = np.asarray(differences, dtype=complex).reshape(-1)
    if d.shape[0] != mat.shape[0]:
        raise ValueError("differences do not match the effective channel")
    if rank_with_tol(mat, rank_tol) < mat.shape[0]:
        raise DecodeFailureError(condition_estimate(mat))
    if noise_cov is None:
        return np.linalg.solve(mat, d)
    w = _inverse_sqrt(noise_cov)
    sol, *_ = np.linalg.lstsq(w @ mat, w @ d, rcond=None)
    return sol


def round_rate(eff, snr_linear: float, K: int, noise_cov=None) -> float:
    """Per-user achievable bits per slot of one round at a given SNR.

    Log-det of the whitened effective channel with the per-symbol power
    ``snr / (K (K-1))``, spread over the K slots the round occupies. The
    default noise covariance is :func:`difference_noise_covariance`.
    """
    if snr_linear <= 0:
        raise ValueError("snr_linear must be positive")
    mat = eff.matrix if isinstance(eff, EffectiveChannel) else np.asarray(eff, dtype=complex)
    w = whitening_matrix(K) if noise_cov is None else _inverse_sqrt(noise_cov)
    g = w @ mat
    p_s = snr_linear / (K * (K - 1))
    gram = g @ g.conj().T
    sign, logdet = np.linalg.slogdet(np.eye(K - 1) + p_s * gram)
    return float(logdet / np.log(2.0) / K)


def zf_slot(channels, served_users, snr_linear: float) -> dict[int, float]:
    """Per-user rates of one zero-forcing slot with equal power per stream."""
    if snr_linear <= 0:
        raise ValueError("snr_linear must be positive")
    served = list(served_users)
    w = build_zf_precoder(channels, served)
    cur = np.asarray(channels, dtype=complex)
    n_t = w.shape[0]
    rates = {}
    for i, u in enumerate(served):
        gain = np.abs(cur[u - 1] @ w[:, i]) ** 2
        rates[u] = float(np.log2(1.0 + snr_linear / n_t * gain))
    return rates


def tdma_slot(channel, snr_linear: float) -> float:
    """Rate of a single-user slot with full power on the matched beam."""
    if snr_linear <= 0:
        raise ValueError("snr_linear must be positive")
    h = np.asarray(channel, dtype=complex).reshape(-1)
    return float(np.log2(1.0 + snr_linear * float(np.sum(np.abs(h) ** 2))))


def zf_transmit(channels, served_users, symbols, power: float | None = None) -> np.ndarray:
    """Transmit vector of one ZF slot; ``symbols`` maps served user to a scalar."""
    served = list(served_users)
    w = build_zf_precoder(channels, served)
    s = np.array([symbols[u] for u in served], dtype=complex)
    scale = 1.0 if power is None else float(np.sqrt(power / len(served)))
    return scale * (w @ s)


def tdma_transmit(channel, symbol, power: float | None = None) -> np.ndarray:
    """Transmit vector of one TDMA slot: full power on the matched beam."""
    h = np.asarray(channel, dtype=complex).reshape(-1)
    w = h.conj() / np.linalg.norm(h)
    scale = 1.0 if power is None else float(np.sqrt(power))
    return scale * complex(symbol) * w


def run_stia_round(
    channels,
    symbols: SymbolBlock,
    power: float | None = None,
    noise_std: float = 0.0,
    rng: np.random.Generator | None = None,
    snr_linear: float | None = None,
    slots=None,
) -> StiaRoundResult:
    """Execute one complete round on explicit per-slot channels.

    Parameters
    ----------
    channels : (K, K, K-1) array
        Axis 0 is the slot within the round (broadcast slot first), axis 1
        the user, axis 2 the transmit antenna.
    symbols : SymbolBlock
    power : float, optional
        Average transmit power budget per slot; None leaves signals
        unnormalized.
    noise_std : float
        Receiver noise standard deviation; 0 selects the noise-free oracle
        path.
    snr_linear : float, optional
        When given, per-user round rates are computed alongside decoding.
    slots : sequence of int, optional
        Absolute slot labels for bookkeeping (broadcast slot first).

    Raises :class:`IllConditionedChannelError` if a stacked interferer
    matrix is singular to tolerance; callers resample the draw.
    """
    ch = np.asarray(channels, dtype=complex)
    K = symbols.K
    if ch.shape != (K, K, K - 1):
        raise ValueError(f"expected channels of shape {(K, K, K - 1)}, got {ch.shape}")
    if slots is None:
        slots = tuple(range(K))
    slots = tuple(slots)
    if len(slots) != K:
        raise ValueError("need one slot label per round slot")

    precoders = [
        build_stia_precoders(ch[m], ch[0], slot=slots[m]) for m in range(1, K)
    ]
    alphas = [slot_power_scale(power, K)]
    alphas += [slot_power_scale(power, K, pre) for pre in precoders]
    xs = [phase_one_transmit(symbols, power)]
    xs += [phase_two_transmit(symbols, pre, power) for pre in precoders]

    # Receivers know their effective channels, so the per-slot scale is
    # divided back out before cancellation.
    signals = []
    for m in range(K):
        per_user = {
            k: receive(ch[m, k - 1], xs[m], noise_std, rng) / alphas[m]
            for k in range(1, K + 1)
        }
        signals.append(ReceivedSignal(slot=slots[m], per_user=per_user))

    noise_cov = None
    if noise_std > 0:
        inv2 = [1.0 / a**2 for a in alphas]
        noise_cov = noise_std**2 * (np.diag(inv2[1:]) + inv2[0] * np.ones((K - 1, K - 1)))

    decoded = {}
    residual = {}
    effs = {}
    rates = {} if snr_linear is not None else None
    slot_channels = [ch[m] for m in range(1, K)]
    for k in range(1, K + 1):
        d = cancel_interference(signals, k)
        eff = effective_channel(k, ch[0], slot_channels, precoders, slots=slots)
        decoded[k] = decode_round(eff, -d, noise_cov=noise_cov)
        effs[k] = eff

        own = np.array(
            [
                (ch[m, k - 1] @ precoders[m - 1].per_user[k] - ch[0, k - 1])
                @ symbols.per_user[k]
                for m in range(1, K)
            ]
        )
        leak = float(np.max(np.abs(d - own)))
        scale = float(
            sum(
                np.abs(ch[0, k - 1] @ symbols.per_user[j])
                for j in range(1, K + 1)
                if j != k
            )
        )
        if scale > 0.0:
            residual[k] = leak / scale
        else:
            residual[k] = 0.0 if leak < 1e-12 else float("inf")
        if rates is not None:
            rates[k] = round_rate(eff, snr_linear, K)

    return StiaRoundResult(
        decoded=SymbolBlock(decoded),
        residual_interference=residual,
        per_user_rate_bits=rates,
        resamples=0,
        effective_channels=effs,
    )


def draw_round_channels(K: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. CN(0,1) round channels of shape (count, K, K, K-1): slot, user, antenna."""
    return complex_normal(rng, (count, K, K, K - 1))


def simulate_stia_round(
    K: int,
    rng: np.random.Generator,
    power: float | None = None,
    noise_std: float = 0.0,
    snr_linear: float | None = None,
    max_resamples: int = 1000,
) -> StiaRoundResult:
    """Draw round channels (resampling degenerate draws) and run the round."""
    resamples = 0
    while True:
        ch = draw_round_channels(K, 1, rng)[0]
        symbols = SymbolBlock.random(K, rng)
        try:
            result = run_stia_round(
                ch, symbols, power=power, noise_std=noise_std, rng=rng, snr_linear=snr_linear
            )
        except IllConditionedChannelError:
            resamples += 1
            if resamples > max_resamples:
                raise
            continue
        result.resamples = resamples
        return result


def _round_precoders(ch: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized precoder build over stacked rounds.

    ``ch`` has shape (count, K, K, n_t). Returns the precoders indexed as
    [round, precoded slot - 1, user - 1] and the worst stacked-interferer
    condition number per round.
    """
    count, K = ch.shape[0], ch.shape[1]
    n_t = K - 1
    v = np.empty((count, K - 1, K, n_t, n_t), dtype=complex)
    cond = np.zeros(count)
    for m in range(1, K):
        for k in range(K):
            rows = [j for j in range(K) if j != k]
            a = ch[:, m, rows, :]
            b = ch[:, 0, rows, :]
            s = np.linalg.svd(a, compute_uv=False)
            with np.errstate(divide="ignore", invalid="ignore"):
                c = s[:, 0] / s[:, -1]
            c = np.where(np.isfinite(c), c, np.inf)
            cond = np.maximum(cond, c)
            bad = ~np.isfinite(c) | (c > 1e15)
            if np.any(bad):
                # keep the batched solve well posed; these rounds get resampled
                a = a.copy()
                a[bad] = np.eye(n_t)
            v[:, m - 1, k] = np.linalg.solve(a, b)
    return v, cond


def batch_rounds(
    K: int,
    count: int,
    rng: np.random.Generator,
    cond_limit: float = CONDITION_LIMIT,
    max_passes: int = 64,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Draw ``count`` rounds at once, resampling ill-conditioned draws.

    Returns ``(channels, precoders, conds, resamples)`` where channels has
    shape (count, K, K, K-1), precoders (count, K-1, K, K-1, K-1), conds is
    the worst stacked-interferer condition per round and resamples counts
    redrawn rounds.
    """
    ch = draw_round_channels(K, count, rng)
    v = np.empty((count, K - 1, K, K - 1, K - 1), dtype=complex)
    conds = np.empty(count)
    pending = np.arange(count)
    resamples = 0
    for _ in range(max_passes):
        v_sub, cond_sub = _round_precoders(ch[pending])
        v[pending] = v_sub
        conds[pending] = cond_sub
        bad = pending[cond_sub > cond_limit]
        if bad.size == 0:
            return ch, v, conds, resamples
        resamples += int(bad.size)
        ch[bad] = draw_round_channels(K, bad.size, rng)
        pending = bad
    raise IllConditionedChannelError("batch", float(conds.max()))


def batch_effective_channels(channels: np.ndarray, precoders: np.ndarray) -> np.ndarray:
    """Effective channels for a batch of rounds: shape (count, K, K-1, K-1).

    Row m of round c, user k is ``h_k[ref] - h_k[m] V_k[m]``.
    """
    hv = np.einsum("cmki,cmkij->cmkj", channels[:, 1:], precoders)
    heff = channels[:, :1] - hv
    return np.moveaxis(heff, 1, 2)
